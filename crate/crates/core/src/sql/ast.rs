//! Query AST: bound predicate trees and the raw plan shape the parser
//! produces (scans joined under a single top-level filter).

use std::fmt;

use crate::storage::{format_float, ColumnData, Table, Value};

/// A column resolved to its owning table. Column names are globally unique
/// in the benchmark schemas, so the bare name identifies the column; the
/// table is kept for predicate classification.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ColumnRef {
    pub table: String,
    pub column: String,
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Lt,
    Gt,
    Le,
    Ge,
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CmpOp::Eq => "=",
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
        };
        f.write_str(s)
    }
}

/// A literal normalized to the compared column's type at bind time.
///
/// Text literals keep their raw spelling; `code` is the dictionary code, or
/// `None` when the string does not occur in the column (the comparison is
/// then constant false rather than an error).
#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Int(i64),
    Float(f64),
    /// Days since 1970-01-01.
    Date(i64),
    Text { raw: String, code: Option<u32> },
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Int(v) => write!(f, "{v}"),
            Literal::Float(v) => write!(f, "{}", format_float(*v)),
            Literal::Date(d) => write!(f, "DATE '{}'", crate::storage::days_to_date(*d)),
            Literal::Text { raw, .. } => write!(f, "'{raw}'"),
        }
    }
}

/// Boolean expression tree over column comparisons.
#[derive(Debug, Clone, PartialEq)]
pub enum PredicateExpr {
    Compare {
        column: ColumnRef,
        op: CmpOp,
        literal: Literal,
    },
    /// Equality between columns of two tables: a join predicate.
    ColumnEq { left: ColumnRef, right: ColumnRef },
    And(Vec<PredicateExpr>),
    Or(Vec<PredicateExpr>),
}

impl PredicateExpr {
    /// Conjunction of `parts`, flattening the one-element case.
    pub fn and(mut parts: Vec<PredicateExpr>) -> PredicateExpr {
        if parts.len() == 1 {
            parts.pop().expect("one element")
        } else {
            PredicateExpr::And(parts)
        }
    }

    /// Top-level conjuncts: the children of an `And` root, otherwise the
    /// predicate itself.
    pub fn conjuncts(&self) -> Vec<&PredicateExpr> {
        match self {
            PredicateExpr::And(children) => children.iter().collect(),
            other => vec![other],
        }
    }

    /// Every column referenced anywhere in the tree.
    pub fn columns(&self) -> Vec<ColumnRef> {
        let mut out = Vec::new();
        self.collect_columns(&mut out);
        out
    }

    fn collect_columns(&self, out: &mut Vec<ColumnRef>) {
        match self {
            PredicateExpr::Compare { column, .. } => out.push(column.clone()),
            PredicateExpr::ColumnEq { left, right } => {
                out.push(left.clone());
                out.push(right.clone());
            }
            PredicateExpr::And(children) | PredicateExpr::Or(children) => {
                for c in children {
                    c.collect_columns(out);
                }
            }
        }
    }

    /// Row-wise evaluation against a single table. Used by the sampling
    /// estimator and kept simple on purpose; the executor has its own
    /// vectorized path.
    pub fn matches_row(&self, table: &Table, row: usize) -> bool {
        match self {
            PredicateExpr::Compare { column, op, literal } => {
                let col = match table.column(&column.column) {
                    Ok(c) => c,
                    Err(_) => return false,
                };
                compare_value(col.data.get(row), *op, literal)
            }
            PredicateExpr::ColumnEq { left, right } => {
                let (Ok(l), Ok(r)) = (table.column(&left.column), table.column(&right.column))
                else {
                    return false;
                };
                values_equal(l.data.get(row), r.data.get(row))
            }
            PredicateExpr::And(children) => children.iter().all(|c| c.matches_row(table, row)),
            PredicateExpr::Or(children) => children.iter().any(|c| c.matches_row(table, row)),
        }
    }

    fn fmt_inner(&self, f: &mut fmt::Formatter<'_>, parenthesize_and: bool) -> fmt::Result {
        match self {
            PredicateExpr::Compare { column, op, literal } => {
                write!(f, "{column} {op} {literal}")
            }
            PredicateExpr::ColumnEq { left, right } => write!(f, "{left} = {right}"),
            PredicateExpr::And(children) => {
                if parenthesize_and {
                    f.write_str("(")?;
                }
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" AND ")?;
                    }
                    c.fmt_inner(f, true)?;
                }
                if parenthesize_and {
                    f.write_str(")")?;
                }
                Ok(())
            }
            PredicateExpr::Or(children) => {
                f.write_str("(")?;
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" OR ")?;
                    }
                    c.fmt_inner(f, true)?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for PredicateExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_inner(f, false)
    }
}

/// Compares a column value against a bound literal. Bind-time normalization
/// guarantees the types line up; mismatches compare false.
pub fn compare_value(value: Value, op: CmpOp, literal: &Literal) -> bool {
    use std::cmp::Ordering;
    let ord = match (value, literal) {
        (Value::Int(v), Literal::Int(x)) => v.cmp(x),
        (Value::Date(v), Literal::Date(x)) | (Value::Date(v), Literal::Int(x)) => v.cmp(x),
        (Value::Float(v), Literal::Float(x)) => match v.partial_cmp(x) {
            Some(o) => o,
            None => return false,
        },
        (Value::Code(c), Literal::Text { code: Some(x), .. }) => {
            // Dictionary codes support equality only.
            return matches!(op, CmpOp::Eq) && c == *x;
        }
        (Value::Code(_), Literal::Text { code: None, .. }) => return false,
        _ => return false,
    };
    match op {
        CmpOp::Eq => ord == Ordering::Equal,
        CmpOp::Lt => ord == Ordering::Less,
        CmpOp::Gt => ord == Ordering::Greater,
        CmpOp::Le => ord != Ordering::Greater,
        CmpOp::Ge => ord != Ordering::Less,
    }
}

pub(crate) fn values_equal(a: Value, b: Value) -> bool {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) | (Value::Date(x), Value::Date(y)) => x == y,
        (Value::Float(x), Value::Float(y)) => x == y,
        (Value::Code(x), Value::Code(y)) => x == y,
        (Value::Int(x), Value::Date(y)) | (Value::Date(x), Value::Int(y)) => x == y,
        _ => false,
    }
}

/// A SUM argument: the forms the benchmark queries need.
#[derive(Debug, Clone, PartialEq)]
pub enum SumExpr {
    Column(String),
    /// col1 - col2
    Sub(String, String),
    /// col1 * (1 - col2)
    MulOneMinus(String, String),
}

impl fmt::Display for SumExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SumExpr::Column(c) => write!(f, "{c}"),
            SumExpr::Sub(a, b) => write!(f, "{a} - {b}"),
            SumExpr::MulOneMinus(a, b) => write!(f, "{a} * (1 - {b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AggExpr {
    CountStar { alias: String },
    Sum { expr: SumExpr, alias: String },
}

impl AggExpr {
    pub fn alias(&self) -> &str {
        match self {
            AggExpr::CountStar { alias } => alias,
            AggExpr::Sum { alias, .. } => alias,
        }
    }
}

impl fmt::Display for AggExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AggExpr::CountStar { alias } => write!(f, "COUNT(*) AS {alias}"),
            AggExpr::Sum { expr, alias } => write!(f, "SUM({expr}) AS {alias}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SelectItem {
    Column(ColumnRef),
    Agg(AggExpr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SortKey {
    /// Output column name (a projected column or an aggregate alias).
    pub column: String,
    pub desc: bool,
}

impl fmt::Display for SortKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.column, if self.desc { " DESC" } else { " ASC" })
    }
}

/// The raw logical plan: every scanned table under one top-level filter
/// holding all WHERE conjuncts, plus the output specification.
#[derive(Debug, Clone, PartialEq)]
pub struct RawPlan {
    pub scans: Vec<String>,
    pub top_filter: Option<PredicateExpr>,
    pub select: Vec<SelectItem>,
    pub group_by: Vec<ColumnRef>,
    pub order_by: Vec<SortKey>,
    pub limit: Option<u64>,
}

impl RawPlan {
    pub fn has_aggregates(&self) -> bool {
        self.select
            .iter()
            .any(|s| matches!(s, SelectItem::Agg(_)))
    }

    /// Output column names in select order.
    pub fn output_names(&self) -> Vec<String> {
        self.select
            .iter()
            .map(|s| match s {
                SelectItem::Column(c) => c.column.clone(),
                SelectItem::Agg(a) => a.alias().to_string(),
            })
            .collect()
    }

    /// Renders the plan back to SQL. Reparsing the result yields a
    /// structurally equal plan.
    pub fn to_sql(&self) -> String {
        let mut out = String::from("SELECT ");
        for (i, item) in self.select.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            match item {
                SelectItem::Column(c) => out.push_str(&c.column),
                SelectItem::Agg(a) => out.push_str(&a.to_string()),
            }
        }
        out.push_str(" FROM ");
        out.push_str(&self.scans.join(", "));
        if let Some(filter) = &self.top_filter {
            out.push_str(" WHERE ");
            out.push_str(&filter.to_string());
        }
        if !self.group_by.is_empty() {
            out.push_str(" GROUP BY ");
            let cols: Vec<&str> = self.group_by.iter().map(|c| c.column.as_str()).collect();
            out.push_str(&cols.join(", "));
        }
        if !self.order_by.is_empty() {
            out.push_str(" ORDER BY ");
            let keys: Vec<String> = self.order_by.iter().map(|k| k.to_string()).collect();
            out.push_str(&keys.join(", "));
        }
        if let Some(n) = self.limit {
            out.push_str(&format!(" LIMIT {n}"));
        }
        out
    }
}

/// Extracts a literal usable as a hash key for grouping text by code.
pub fn value_sort_key(value: Value, data: &ColumnData) -> SortValue {
    match (value, data) {
        (Value::Int(v), _) | (Value::Date(v), _) => SortValue::Int(v),
        (Value::Float(v), _) => SortValue::Float(v),
        (Value::Code(c), ColumnData::Text { dict, .. }) => {
            SortValue::Text(dict.value(c).to_string())
        }
        (Value::Code(c), _) => SortValue::Int(c as i64),
    }
}

/// Ordering key: text sorts by its string value, not its dictionary code.
#[derive(Debug, Clone, PartialEq)]
pub enum SortValue {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Eq for SortValue {}

impl Ord for SortValue {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use SortValue::*;
        match (self, other) {
            (Int(a), Int(b)) => a.cmp(b),
            (Float(a), Float(b)) => a.total_cmp(b),
            (Text(a), Text(b)) => a.cmp(b),
            (Int(a), Float(b)) => (*a as f64).total_cmp(b),
            (Float(a), Int(b)) => a.total_cmp(&(*b as f64)),
            (Int(_), Text(_)) | (Float(_), Text(_)) => std::cmp::Ordering::Less,
            (Text(_), Int(_)) | (Text(_), Float(_)) => std::cmp::Ordering::Greater,
        }
    }
}

impl PartialOrd for SortValue {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
