//! Logical plan tree and the rewrite primitives the optimizer needs.
//!
//! `Compound` is the fusion operator: filter and projection (and optionally
//! a COUNT cap) executed as one pass. Executing a `Compound` yields exactly
//! the rows of the unfused `Project(columns, Filter(pred, input))` pipeline.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::catalog::{Catalog, TempId};
use crate::error::{Error, Result};
use crate::sql::{AggExpr, JoinPred, PredicateExpr, RawPlan, SelectItem, SortKey};

#[derive(Debug, Clone, PartialEq)]
pub enum PlanNode {
    Scan {
        table: String,
    },
    /// Scan of a materialized temporary table.
    TempScan {
        id: TempId,
        /// Base table the rows came from, for plan rendering.
        source: String,
    },
    Filter {
        pred: PredicateExpr,
        input: Box<PlanNode>,
    },
    Project {
        columns: Vec<String>,
        input: Box<PlanNode>,
    },
    HashJoin {
        probe: Box<PlanNode>,
        build: Box<PlanNode>,
        /// (probe column, build column) equality pairs; never empty.
        keys: Vec<(String, String)>,
    },
    Aggregate {
        aggs: Vec<AggExpr>,
        group_by: Vec<String>,
        input: Box<PlanNode>,
    },
    Compound {
        pred: PredicateExpr,
        columns: Vec<String>,
        /// Gate recorded by the optimizer when the compound was executed in
        /// push-down mode; informational in the final tree.
        count_cap: Option<u64>,
        input: Box<PlanNode>,
    },
    Sort {
        keys: Vec<SortKey>,
        input: Box<PlanNode>,
    },
    Limit {
        n: u64,
        input: Box<PlanNode>,
    },
}

impl PlanNode {
    /// Output column names, in order.
    pub fn schema(&self, catalog: &Catalog) -> Result<Vec<String>> {
        match self {
            PlanNode::Scan { table } => Ok(catalog
                .table(table)?
                .columns()
                .iter()
                .map(|c| c.name.clone())
                .collect()),
            PlanNode::TempScan { id, .. } => Ok(catalog
                .temp_table(*id)?
                .columns()
                .iter()
                .map(|c| c.name.clone())
                .collect()),
            PlanNode::Filter { input, .. }
            | PlanNode::Sort { input, .. }
            | PlanNode::Limit { input, .. } => input.schema(catalog),
            PlanNode::Project { columns, .. } | PlanNode::Compound { columns, .. } => {
                Ok(columns.clone())
            }
            PlanNode::HashJoin { probe, build, .. } => {
                let mut s = probe.schema(catalog)?;
                s.extend(build.schema(catalog)?);
                Ok(s)
            }
            PlanNode::Aggregate { aggs, group_by, .. } => {
                let mut s = group_by.clone();
                s.extend(aggs.iter().map(|a| a.alias().to_string()));
                Ok(s)
            }
        }
    }
}

/// Fuses a filter and projection into a single `Compound` operator.
pub fn coalesce_nodes(
    pred: PredicateExpr,
    columns: Vec<String>,
    input: PlanNode,
    catalog: &Catalog,
) -> Result<PlanNode> {
    if columns.is_empty() {
        return Err(Error::Internal("compound with no projected columns".into()));
    }
    let schema = input.schema(catalog)?;
    for c in &columns {
        if !schema.contains(c) {
            return Err(Error::UnknownColumn(c.clone()));
        }
    }
    for c in pred.columns() {
        if !schema.contains(&c.column) {
            return Err(Error::UnknownColumn(c.column));
        }
    }
    Ok(PlanNode::Compound {
        pred,
        columns,
        count_cap: None,
        input: Box::new(input),
    })
}

/// Wraps a node in a temporary COUNT(*) aggregate; the node is unchanged.
pub fn attach_count(node: PlanNode) -> PlanNode {
    PlanNode::Aggregate {
        aggs: vec![AggExpr::CountStar {
            alias: "count".into(),
        }],
        group_by: Vec::new(),
        input: Box::new(node),
    }
}

fn leaf_for(table: &str, pushed: &HashMap<String, TempId>) -> PlanNode {
    match pushed.get(table) {
        Some(&id) => PlanNode::TempScan {
            id,
            source: table.to_string(),
        },
        None => PlanNode::Scan {
            table: table.to_string(),
        },
    }
}

/// Joins the scans in FROM order, consuming the join predicates; each table
/// joins the accumulated tree through its equality pairs (never a Cartesian
/// product). Returns the join tree and the FROM-order placement.
pub fn from_order_join_tree(
    scans: &[String],
    joins: &[JoinPred],
    pushed: &HashMap<String, TempId>,
) -> Result<PlanNode> {
    let mut placed: Vec<String> = vec![scans[0].clone()];
    let mut tree = leaf_for(&scans[0], pushed);
    let mut remaining: Vec<&String> = scans[1..].iter().collect();
    while !remaining.is_empty() {
        let next = remaining
            .iter()
            .position(|t| {
                joins.iter().any(|j| {
                    (j.left.table == **t && placed.contains(&j.right.table))
                        || (j.right.table == **t && placed.contains(&j.left.table))
                })
            })
            .ok_or_else(|| {
                Error::UnsupportedQuery(format!(
                    "no join predicate connects {{{}}} to the other scans",
                    remaining
                        .iter()
                        .map(|s| s.as_str())
                        .collect::<Vec<_>>()
                        .join(", ")
                ))
            })?;
        let table = remaining.remove(next).clone();
        let keys: Vec<(String, String)> = joins
            .iter()
            .filter_map(|j| {
                if j.left.table == table && placed.contains(&j.right.table) {
                    Some((j.right.column.clone(), j.left.column.clone()))
                } else if j.right.table == table && placed.contains(&j.left.table) {
                    Some((j.left.column.clone(), j.right.column.clone()))
                } else {
                    None
                }
            })
            .collect();
        tree = PlanNode::HashJoin {
            probe: Box::new(tree),
            build: Box::new(leaf_for(&table, pushed)),
            keys,
        };
        placed.push(table);
    }
    Ok(tree)
}

/// Applies the query's output specification (filter remainder, aggregation
/// or projection, sort, limit) on top of a join tree or single leaf.
pub fn finish_tree(
    raw: &RawPlan,
    remaining: Option<PredicateExpr>,
    mut tree: PlanNode,
    catalog: &Catalog,
) -> Result<PlanNode> {
    if let Some(pred) = remaining {
        let schema = tree.schema(catalog)?;
        for c in pred.columns() {
            if !schema.contains(&c.column) {
                return Err(Error::Internal(format!(
                    "predicate references column '{}' which was projected away",
                    c.column
                )));
            }
        }
        tree = PlanNode::Filter {
            pred,
            input: Box::new(tree),
        };
    }
    if raw.has_aggregates() || !raw.group_by.is_empty() {
        let aggs: Vec<AggExpr> = raw
            .select
            .iter()
            .filter_map(|s| match s {
                SelectItem::Agg(a) => Some(a.clone()),
                SelectItem::Column(_) => None,
            })
            .collect();
        tree = PlanNode::Aggregate {
            aggs,
            group_by: raw.group_by.iter().map(|c| c.column.clone()).collect(),
            input: Box::new(tree),
        };
    }
    tree = PlanNode::Project {
        columns: raw.output_names(),
        input: Box::new(tree),
    };
    if !raw.order_by.is_empty() {
        tree = PlanNode::Sort {
            keys: raw.order_by.clone(),
            input: Box::new(tree),
        };
    }
    if let Some(n) = raw.limit {
        tree = PlanNode::Limit {
            n,
            input: Box::new(tree),
        };
    }
    Ok(tree)
}

/// Columns each base scan must still provide after the rewrite: its join
/// keys, its columns in the remaining filter, and its columns in the output
/// list, in table column order.
pub fn needed_columns(
    raw: &RawPlan,
    joins: &[JoinPred],
    remaining: Option<&PredicateExpr>,
    catalog: &Catalog,
) -> Result<HashMap<String, Vec<String>>> {
    let mut needed: HashMap<String, Vec<String>> = HashMap::new();
    let mut push = |table: &str, column: &str| {
        let cols = needed.entry(table.to_string()).or_default();
        if !cols.iter().any(|c| c == column) {
            cols.push(column.to_string());
        }
    };
    for j in joins {
        push(&j.left.table, &j.left.column);
        push(&j.right.table, &j.right.column);
    }
    if let Some(pred) = remaining {
        for c in pred.columns() {
            push(&c.table, &c.column);
        }
    }
    for item in &raw.select {
        match item {
            SelectItem::Agg(AggExpr::Sum { expr, .. }) => {
                let cols: Vec<&String> = match expr {
                    crate::sql::SumExpr::Column(c) => vec![c],
                    crate::sql::SumExpr::Sub(a, b)
                    | crate::sql::SumExpr::MulOneMinus(a, b) => vec![a, b],
                };
                for c in cols {
                    for scan in &raw.scans {
                        if catalog.table(scan).map(|t| t.has_column(c)).unwrap_or(false) {
                            push(scan, c);
                        }
                    }
                }
            }
            SelectItem::Agg(AggExpr::CountStar { .. }) => {}
            SelectItem::Column(c) => push(&c.table, &c.column),
        }
    }
    for g in &raw.group_by {
        push(&g.table, &g.column);
    }
    // Stable order: the owning table's column order.
    let mut ordered = HashMap::new();
    for scan in &raw.scans {
        let cols = needed.remove(scan).unwrap_or_default();
        let table_order: Vec<String> = catalog
            .table(scan)?
            .columns()
            .iter()
            .map(|c| c.name.clone())
            .filter(|c| cols.contains(c))
            .collect();
        ordered.insert(scan.clone(), table_order);
    }
    Ok(ordered)
}

/// Narrows every base scan to the columns the rest of the plan needs.
/// Temporary tables were already projected when they were materialized.
pub fn prune_scan_columns(
    node: PlanNode,
    needed: &HashMap<String, Vec<String>>,
    catalog: &Catalog,
) -> Result<PlanNode> {
    Ok(match node {
        PlanNode::Scan { table } => {
            let all = catalog.table(&table)?.columns().len();
            match needed.get(&table) {
                Some(cols) if cols.len() < all => PlanNode::Project {
                    columns: cols.clone(),
                    input: Box::new(PlanNode::Scan { table }),
                },
                _ => PlanNode::Scan { table },
            }
        }
        PlanNode::HashJoin { probe, build, keys } => PlanNode::HashJoin {
            probe: Box::new(prune_scan_columns(*probe, needed, catalog)?),
            build: Box::new(prune_scan_columns(*build, needed, catalog)?),
            keys,
        },
        other => other,
    })
}

/// Rewrites the raw plan after push-down decisions: scans of pushed tables
/// become temp scans, their predicates are absent, schemas are narrowed to
/// the surviving columns, everything else is intact. Joins follow the FROM
/// order here; the optimizer reorders them separately.
pub fn update_tree(
    raw: &RawPlan,
    pushed: &HashMap<String, TempId>,
    remaining: Option<PredicateExpr>,
    joins: &[JoinPred],
    catalog: &Catalog,
) -> Result<PlanNode> {
    let tree = if raw.scans.len() == 1 {
        leaf_for(&raw.scans[0], pushed)
    } else {
        from_order_join_tree(&raw.scans, joins, pushed)?
    };
    let needed = needed_columns(raw, joins, remaining.as_ref(), catalog)?;
    let tree = prune_scan_columns(tree, &needed, catalog)?;
    finish_tree(raw, remaining, tree, catalog)
}

/// Deterministic indented rendering of a plan tree.
pub fn explain(node: &PlanNode, catalog: &Catalog) -> String {
    let mut out = String::new();
    render(node, catalog, 0, &mut out);
    out
}

fn render(node: &PlanNode, catalog: &Catalog, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    match node {
        PlanNode::Scan { table } => {
            let rows = catalog
                .row_count(table)
                .map(|n| n.to_string())
                .unwrap_or_else(|_| "?".into());
            let _ = writeln!(out, "{pad}Scan({table}) rows={rows}");
        }
        PlanNode::TempScan { id, source } => {
            let rows = catalog
                .temp_meta(*id)
                .map(|m| m.row_count.to_string())
                .unwrap_or_else(|_| "?".into());
            let _ = writeln!(out, "{pad}TempScan({id}) rows={rows} source={source}");
        }
        PlanNode::Filter { pred, input } => {
            let _ = writeln!(out, "{pad}Filter {pred}");
            render(input, catalog, depth + 1, out);
        }
        PlanNode::Project { columns, input } => {
            let _ = writeln!(out, "{pad}Project [{}]", columns.join(", "));
            render(input, catalog, depth + 1, out);
        }
        PlanNode::HashJoin { probe, build, keys } => {
            let keys_s: Vec<String> = keys
                .iter()
                .map(|(p, b)| format!("{p} = {b}"))
                .collect();
            let _ = writeln!(out, "{pad}HashJoin on ({})", keys_s.join(" AND "));
            render(probe, catalog, depth + 1, out);
            render(build, catalog, depth + 1, out);
        }
        PlanNode::Aggregate { aggs, group_by, input } => {
            let aggs_s: Vec<String> = aggs.iter().map(|a| a.to_string()).collect();
            if group_by.is_empty() {
                let _ = writeln!(out, "{pad}Aggregate [{}]", aggs_s.join(", "));
            } else {
                let _ = writeln!(
                    out,
                    "{pad}Aggregate [{}] group_by=[{}]",
                    aggs_s.join(", "),
                    group_by.join(", ")
                );
            }
            render(input, catalog, depth + 1, out);
        }
        PlanNode::Compound {
            pred,
            columns,
            count_cap,
            input,
        } => {
            let cap = match count_cap {
                Some(c) => format!(" cap={c}"),
                None => String::new(),
            };
            let _ = writeln!(
                out,
                "{pad}Compound {pred} -> [{}]{cap}",
                columns.join(", ")
            );
            render(input, catalog, depth + 1, out);
        }
        PlanNode::Sort { keys, input } => {
            let keys_s: Vec<String> = keys.iter().map(|k| k.to_string()).collect();
            let _ = writeln!(out, "{pad}Sort {}", keys_s.join(", "));
            render(input, catalog, depth + 1, out);
        }
        PlanNode::Limit { n, input } => {
            let _ = writeln!(out, "{pad}Limit {n}");
            render(input, catalog, depth + 1, out);
        }
    }
}
