//! SQL front-end: lexer, parser, and predicate classification.
//!
//! Parsing produces the raw plan shape the engine optimizes from: every
//! scanned table under a single top-level filter holding all WHERE
//! conjuncts. The grammar is documented in `docs/grammar.ebnf`.

mod ast;
mod lexer;
mod parser;

pub use ast::{
    compare_value, value_sort_key, AggExpr, CmpOp, ColumnRef, Literal, PredicateExpr, RawPlan,
    SelectItem, SortKey, SortValue, SumExpr,
};
pub(crate) use ast::values_equal;
pub use parser::parse;

use std::collections::HashMap;

use crate::error::{Error, Result};

/// An equality join predicate between two scans.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct JoinPred {
    pub left: ColumnRef,
    pub right: ColumnRef,
}

/// Splits the top filter's conjuncts into join predicates (column = column
/// across two tables) and per-table selection predicates. The union of both
/// sides is exactly the original conjunct set.
pub fn classify_predicates(
    plan: &RawPlan,
) -> Result<(Vec<JoinPred>, HashMap<String, PredicateExpr>)> {
    let mut joins = Vec::new();
    let mut selections: HashMap<String, Vec<PredicateExpr>> = HashMap::new();

    if let Some(filter) = &plan.top_filter {
        for conjunct in filter.conjuncts() {
            match conjunct {
                PredicateExpr::ColumnEq { left, right } => {
                    if left.table == right.table {
                        return Err(Error::UnsupportedPredicate(format!(
                            "column equality within one table: {} = {}",
                            left.column, right.column
                        )));
                    }
                    joins.push(JoinPred {
                        left: left.clone(),
                        right: right.clone(),
                    });
                }
                other => {
                    let mut tables: Vec<String> =
                        other.columns().into_iter().map(|c| c.table).collect();
                    tables.sort();
                    tables.dedup();
                    match tables.len() {
                        1 => {
                            selections
                                .entry(tables.into_iter().next().expect("one table"))
                                .or_default()
                                .push(other.clone());
                        }
                        _ => {
                            return Err(Error::UnsupportedPredicate(format!(
                                "predicate spans multiple tables: {other}"
                            )));
                        }
                    }
                }
            }
        }
    }

    let selections = selections
        .into_iter()
        .map(|(t, parts)| (t, PredicateExpr::and(parts)))
        .collect();
    Ok((joins, selections))
}
