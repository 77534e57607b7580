//! Selective selection push-down driven by live COUNT execution, plus
//! greedy join ordering.
//!
//! The push-down pass collects the scanned tables larger than
//! `push_down_min_table_size` into a priority queue sorted by size
//! descending, pops the largest (the probe relation, never pushed), and for
//! each remaining table with a selection builds the fused filter/project
//! `Compound`, computes its selectivity with the configured estimator, and
//! either materializes the result as a temporary table or reverts. The
//! exact estimator computes the selectivity by executing the compound with
//! a COUNT gate; a count above `maxSize` (ratio x table size, or an
//! absolute row bound) reverts the push-down for that table.
//!
//! Join ordering is greedy over the join graph: start from the adjacent
//! pair with the smallest estimated join size, then repeatedly attach the
//! adjacent relation minimizing the running intermediate estimate. A
//! relation is never placed without a join predicate connecting it, so no
//! Cartesian products are formed. Within each join the larger input probes
//! and the smaller is built into a hash table.

use std::collections::HashMap;
use std::time::Instant;

use crate::catalog::{Catalog, TempId};
use crate::error::{Error, Result};
use crate::estimators::{estimate, EstimatorKind};
use crate::executor::{ExecOutcome, ExecStats, Executor};
use crate::plan::{coalesce_nodes, finish_tree, PlanNode};
use crate::sql::{classify_predicates, ColumnRef, JoinPred, PredicateExpr, RawPlan, SelectItem, SumExpr};

/// Push-down admission bound: a fraction of the candidate table's size or a
/// fixed number of rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaxSelectivity {
    Ratio(f64),
    Absolute(u64),
}

impl MaxSelectivity {
    /// The gate value for a table of `rows` rows. Counts are integral, so
    /// flooring the ratio product preserves the strict `count > maxSize`
    /// comparison.
    pub fn max_size(&self, rows: u64) -> u64 {
        match self {
            MaxSelectivity::Ratio(r) => (r * rows as f64).floor() as u64,
            MaxSelectivity::Absolute(n) => *n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MaxSelectivity::Ratio(r) if !(0.0..=1.0).contains(r) => Err(Error::Config(format!(
                "max selectivity ratio must be in [0,1], got {r}"
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    pub estimator: EstimatorKind,
    pub push_down_min_table_size: u64,
    pub push_down_max_selectivity: MaxSelectivity,
    pub pushdown_enabled: bool,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            estimator: EstimatorKind::Exact,
            push_down_min_table_size: 0,
            push_down_max_selectivity: MaxSelectivity::Ratio(1.0),
            pushdown_enabled: true,
            seed: 0,
        }
    }
}

/// |R (x) S| = |R||S| / max(V(R,A), V(S,A)). Multi-column joins apply the
/// formula per pair and take the minimum estimate.
pub fn estimate_join_size(
    left_rows: f64,
    right_rows: f64,
    left_distinct: f64,
    right_distinct: f64,
) -> Result<f64> {
    if left_rows == 0.0 || right_rows == 0.0 {
        return Ok(0.0);
    }
    if left_distinct < 1.0 || right_distinct < 1.0 {
        return Err(Error::InvalidStatistics(
            "zero distinct count with non-zero rows".into(),
        ));
    }
    Ok(left_rows * right_rows / left_distinct.max(right_distinct))
}

/// One relation in the join graph with its current cardinality (temp-table
/// size where a selection was pushed) and effective distinct counts.
#[derive(Debug, Clone)]
pub struct JoinGraphNode {
    pub name: String,
    pub rows: f64,
    pub distinct: HashMap<String, f64>,
}

#[derive(Debug, Clone)]
pub struct JoinGraphEdge {
    pub a: usize,
    pub b: usize,
    /// (column of node a, column of node b) equality pairs.
    pub pairs: Vec<(ColumnRef, ColumnRef)>,
}

#[derive(Debug, Clone, Default)]
pub struct JoinGraph {
    pub nodes: Vec<JoinGraphNode>,
    pub edges: Vec<JoinGraphEdge>,
}

impl JoinGraph {
    fn node(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    fn distinct_of(&self, node: usize, column: &str) -> f64 {
        let n = &self.nodes[node];
        let v = n.distinct.get(column).copied().unwrap_or(n.rows).max(1.0);
        v.min(n.rows.max(1.0))
    }
}

/// Builds the join graph for the scanned relations: cardinalities come from
/// `cards`, distinct counts from the catalog (temp-table metadata for pushed
/// relations), clamped by the current cardinality.
pub fn build_join_graph(
    scans: &[String],
    joins: &[JoinPred],
    cards: &HashMap<String, f64>,
    catalog: &Catalog,
    pushed: &HashMap<String, TempId>,
) -> Result<JoinGraph> {
    let mut graph = JoinGraph::default();
    for name in scans {
        let rows = *cards
            .get(name)
            .ok_or_else(|| Error::Internal(format!("no cardinality for '{name}'")))?;
        let distinct_counts = match pushed.get(name) {
            Some(&id) => catalog.temp_meta(id)?.distinct_counts,
            None => catalog.meta(name)?.distinct_counts,
        };
        let distinct = distinct_counts
            .into_iter()
            .map(|(c, v)| (c, v as f64))
            .collect();
        graph.nodes.push(JoinGraphNode {
            name: name.clone(),
            rows,
            distinct,
        });
    }
    for j in joins {
        let a = graph
            .node(&j.left.table)
            .ok_or_else(|| Error::UnknownTable(j.left.table.clone()))?;
        let b = graph
            .node(&j.right.table)
            .ok_or_else(|| Error::UnknownTable(j.right.table.clone()))?;
        if let Some(e) = graph
            .edges
            .iter_mut()
            .find(|e| (e.a == a && e.b == b) || (e.a == b && e.b == a))
        {
            if e.a == a {
                e.pairs.push((j.left.clone(), j.right.clone()));
            } else {
                e.pairs.push((j.right.clone(), j.left.clone()));
            }
        } else {
            graph.edges.push(JoinGraphEdge {
                a,
                b,
                pairs: vec![(j.left.clone(), j.right.clone())],
            });
        }
    }
    Ok(graph)
}

/// One relation appended to the left-deep sequence.
#[derive(Debug, Clone)]
pub struct JoinStep {
    pub table: String,
    /// (already-placed column, added-table column) equality pairs.
    pub pairs: Vec<(ColumnRef, ColumnRef)>,
    /// Hash table built on the added table (true) or on the running
    /// intermediate (false, the added table streams as the probe).
    pub table_is_build: bool,
    pub est_rows: f64,
}

/// Left-deep join order: `start` joined with each step's table in turn.
/// The first join builds on `start` and probes the first step's table when
/// that table is larger, per the probe-the-larger-side rule.
#[derive(Debug, Clone)]
pub struct JoinSequence {
    pub start: String,
    pub steps: Vec<JoinStep>,
}

impl JoinSequence {
    /// Placement order: start relation, then each appended relation.
    pub fn order(&self) -> Vec<&str> {
        let mut v = vec![self.start.as_str()];
        v.extend(self.steps.iter().map(|s| s.table.as_str()));
        v
    }

    /// Compact rendering, e.g. `((t JOIN s) JOIN r)`.
    pub fn describe(&self) -> String {
        let mut s = self.start.clone();
        for step in &self.steps {
            s = format!("({s} JOIN {})", step.table);
        }
        s
    }
}

/// Greedy left-deep ordering: pick the adjacent pair with the smallest
/// estimated join size, then repeatedly attach the adjacent relation
/// minimizing the next intermediate. Ties break on table names ascending.
pub fn order_joins(graph: &JoinGraph) -> Result<JoinSequence> {
    if graph.nodes.is_empty() {
        return Err(Error::Internal("ordering an empty join graph".into()));
    }
    if graph.nodes.len() == 1 {
        return Ok(JoinSequence {
            start: graph.nodes[0].name.clone(),
            steps: Vec::new(),
        });
    }

    let edge_estimate = |e: &JoinGraphEdge| -> Result<f64> {
        let (ra, rb) = (graph.nodes[e.a].rows, graph.nodes[e.b].rows);
        let mut best = f64::INFINITY;
        for (ca, cb) in &e.pairs {
            let est = estimate_join_size(
                ra,
                rb,
                graph.distinct_of(e.a, &ca.column),
                graph.distinct_of(e.b, &cb.column),
            )?;
            best = best.min(est);
        }
        Ok(best)
    };

    // First join: the cheapest edge.
    let mut best: Option<(f64, String, String, usize)> = None;
    for (i, e) in graph.edges.iter().enumerate() {
        let est = edge_estimate(e)?;
        let (lo, hi) = {
            let (na, nb) = (&graph.nodes[e.a].name, &graph.nodes[e.b].name);
            if na <= nb { (na, nb) } else { (nb, na) }
        };
        let key = (est, lo.clone(), hi.clone(), i);
        if best
            .as_ref()
            .map(|(b_est, b_lo, b_hi, _)| {
                (est, lo, hi) < (*b_est, b_lo, b_hi)
            })
            .unwrap_or(true)
        {
            best = Some(key);
        }
    }
    let (first_est, _, _, first_edge) =
        best.ok_or_else(|| Error::UnsupportedQuery("join graph has no edges".into()))?;
    let e = &graph.edges[first_edge];

    // Build on the smaller side, probe the larger; ties build on the
    // lexicographically smaller name.
    let (build_node, probe_node) = {
        let (na, nb) = (&graph.nodes[e.a], &graph.nodes[e.b]);
        if na.rows < nb.rows || (na.rows == nb.rows && na.name <= nb.name) {
            (e.a, e.b)
        } else {
            (e.b, e.a)
        }
    };
    let first_pairs: Vec<(ColumnRef, ColumnRef)> = e
        .pairs
        .iter()
        .map(|(ca, cb)| {
            if build_node == e.a {
                (ca.clone(), cb.clone())
            } else {
                (cb.clone(), ca.clone())
            }
        })
        .collect();

    let mut placed: Vec<usize> = vec![build_node, probe_node];
    // (placed-side column, added column) with placed side = start.
    let mut steps = vec![JoinStep {
        table: graph.nodes[probe_node].name.clone(),
        pairs: first_pairs,
        table_is_build: false,
        est_rows: first_est,
    }];
    type Candidate = (f64, String, usize, Vec<(ColumnRef, ColumnRef)>);
    let mut inter_rows = first_est;
    // Distinct counts carried by the intermediate: clamp to its size.
    let inter_distinct = |graph: &JoinGraph, placed: &[usize], col: &ColumnRef, rows: f64| -> f64 {
        for &p in placed {
            if graph.nodes[p].name == col.table {
                return graph.distinct_of(p, &col.column).min(rows.max(1.0));
            }
        }
        rows.max(1.0)
    };

    while placed.len() < graph.nodes.len() {
        let mut best: Option<Candidate> = None;
        for (i, node) in graph.nodes.iter().enumerate() {
            if placed.contains(&i) {
                continue;
            }
            // Equality pairs connecting this node to any placed relation.
            let mut pairs: Vec<(ColumnRef, ColumnRef)> = Vec::new();
            for e in &graph.edges {
                if e.a == i && placed.contains(&e.b) {
                    pairs.extend(e.pairs.iter().map(|(ca, cb)| (cb.clone(), ca.clone())));
                } else if e.b == i && placed.contains(&e.a) {
                    pairs.extend(e.pairs.iter().cloned());
                }
            }
            if pairs.is_empty() {
                continue;
            }
            let mut est = f64::INFINITY;
            for (placed_col, new_col) in &pairs {
                let v_inter = inter_distinct(graph, &placed, placed_col, inter_rows);
                let v_new = graph.distinct_of(i, &new_col.column);
                est = est.min(estimate_join_size(inter_rows, node.rows, v_inter, v_new)?);
            }
            if best
                .as_ref()
                .map(|(b_est, b_name, ..)| (est, &node.name) < (*b_est, b_name))
                .unwrap_or(true)
            {
                best = Some((est, node.name.clone(), i, pairs));
            }
        }
        let Some((est, name, idx, pairs)) = best else {
            return Err(Error::UnsupportedQuery(
                "join graph is disconnected (a Cartesian product would be required)".into(),
            ));
        };
        let table_is_build = graph.nodes[idx].rows <= inter_rows;
        steps.push(JoinStep {
            table: name,
            pairs,
            table_is_build,
            est_rows: est,
        });
        placed.push(idx);
        inter_rows = est;
    }

    Ok(JoinSequence {
        start: graph.nodes[build_node].name.clone(),
        steps,
    })
}

/// Per-table push-down outcome.
#[derive(Debug, Clone, PartialEq)]
pub enum Decision {
    /// Materialized as a temporary table.
    Pushed { temp: TempId, rows: u64 },
    /// Selectivity exceeded the gate; the push-down was reverted.
    Reverted,
    /// Largest queued relation: the probe side, never pushed.
    Probe,
    /// Below the minimum table size.
    BelowMinSize,
    /// Nothing to push.
    NoSelection,
}

#[derive(Debug, Clone)]
pub struct PushDownEntry {
    pub table: String,
    pub decision: Decision,
    /// Cardinality the decision was based on (exact count or estimate).
    pub cardinality: Option<f64>,
    /// The admission bound (maxSize) in rows.
    pub threshold: Option<u64>,
    /// Elapsed time of the COUNT / estimation, microseconds.
    pub micros: Option<u64>,
}

#[derive(Debug, Clone, Default)]
pub struct PushDownReport {
    pub entries: Vec<PushDownEntry>,
    pub probe: Option<String>,
    pub join_order: Option<String>,
    /// Counters accumulated by optimization-phase executions (COUNTs and
    /// materializations).
    pub opt_stats: ExecStats,
}

impl PushDownReport {
    pub fn decision_for(&self, table: &str) -> Option<&Decision> {
        self.entries
            .iter()
            .find(|e| e.table == table)
            .map(|e| &e.decision)
    }
}

/// Columns a pushed projection must carry: the table's predicate columns,
/// its join-predicate columns, and its columns in the output list, in the
/// table's column order.
fn collect_pushdown_columns(
    raw: &RawPlan,
    table: &str,
    joins: &[JoinPred],
    pred: &PredicateExpr,
    catalog: &Catalog,
) -> Result<Vec<String>> {
    let t = catalog.table(table)?;
    let mut needed: Vec<String> = Vec::new();
    let mut push = |name: &str| {
        if !needed.iter().any(|n| n == name) {
            needed.push(name.to_string());
        }
    };
    for c in pred.columns() {
        push(&c.column);
    }
    for j in joins {
        if j.left.table == table {
            push(&j.left.column);
        }
        if j.right.table == table {
            push(&j.right.column);
        }
    }
    for item in &raw.select {
        match item {
            SelectItem::Column(c) => {
                if c.table == table {
                    push(&c.column);
                }
            }
            SelectItem::Agg(agg) => {
                if let crate::sql::AggExpr::Sum { expr, .. } = agg {
                    let cols: Vec<&String> = match expr {
                        SumExpr::Column(c) => vec![c],
                        SumExpr::Sub(a, b) | SumExpr::MulOneMinus(a, b) => vec![a, b],
                    };
                    for c in cols {
                        if t.has_column(c) {
                            push(c);
                        }
                    }
                }
            }
        }
    }
    for g in &raw.group_by {
        if g.table == table {
            push(&g.column);
        }
    }
    // Stable output: the table's own column order.
    let ordered: Vec<String> = t
        .columns()
        .iter()
        .map(|c| c.name.clone())
        .filter(|c| needed.contains(c))
        .collect();
    Ok(ordered)
}

/// Runs the push-down pass and join ordering, returning the final plan tree
/// and the per-table decision report.
pub fn evaluate_and_push_down(
    raw: &RawPlan,
    cfg: &OptimizerConfig,
    catalog: &Catalog,
    executor: &Executor,
) -> Result<(PlanNode, PushDownReport)> {
    cfg.push_down_max_selectivity.validate()?;
    let (joins, mut selections) = classify_predicates(raw)?;
    let mut report = PushDownReport::default();
    let mut pushed: HashMap<String, TempId> = HashMap::new();

    if cfg.pushdown_enabled {
        // Priority queue: tables above the size floor, largest first, ties
        // on the name.
        let mut queue: Vec<(u64, String)> = Vec::new();
        for t in &raw.scans {
            let rows = catalog.row_count(t)?;
            if rows > cfg.push_down_min_table_size {
                queue.push((rows, t.clone()));
            } else {
                report.entries.push(PushDownEntry {
                    table: t.clone(),
                    decision: Decision::BelowMinSize,
                    cardinality: None,
                    threshold: None,
                    micros: None,
                });
            }
        }
        queue.sort_by(|(ra, ta), (rb, tb)| rb.cmp(ra).then(ta.cmp(tb)));

        if !queue.is_empty() {
            // The largest relation is probed, never pushed.
            let (_, probe_table) = queue.remove(0);
            report.entries.push(PushDownEntry {
                table: probe_table.clone(),
                decision: Decision::Probe,
                cardinality: None,
                threshold: None,
                micros: None,
            });
            report.probe = Some(probe_table);

            for (rows, table) in queue {
                let Some(pred) = selections.get(&table).cloned() else {
                    report.entries.push(PushDownEntry {
                        table: table.clone(),
                        decision: Decision::NoSelection,
                        cardinality: None,
                        threshold: None,
                        micros: None,
                    });
                    continue;
                };
                let columns = collect_pushdown_columns(raw, &table, &joins, &pred, catalog)?;
                let max_size = cfg.push_down_max_selectivity.max_size(rows);
                let mut compound = coalesce_nodes(
                    pred.clone(),
                    columns,
                    PlanNode::Scan {
                        table: table.clone(),
                    },
                    catalog,
                )?;
                if let PlanNode::Compound { count_cap, .. } = &mut compound {
                    *count_cap = Some(max_size);
                }

                let t0 = Instant::now();
                let entry = if cfg.estimator == EstimatorKind::Exact {
                    match executor.execute(catalog, &compound, true, max_size)? {
                        ExecOutcome::GateExceeded { count, stats } => {
                            report.opt_stats.merge(&stats);
                            PushDownEntry {
                                table: table.clone(),
                                decision: Decision::Reverted,
                                cardinality: Some(count as f64),
                                threshold: Some(max_size),
                                micros: Some(t0.elapsed().as_micros() as u64),
                            }
                        }
                        ExecOutcome::Rows(rs) => {
                            let rows_out = rs.row_count as u64;
                            let (id, stats) =
                                executor.add_temporary_table(catalog, rs, &table)?;
                            report.opt_stats.merge(&stats);
                            pushed.insert(table.clone(), id);
                            selections.remove(&table);
                            PushDownEntry {
                                table: table.clone(),
                                decision: Decision::Pushed {
                                    temp: id,
                                    rows: rows_out,
                                },
                                cardinality: Some(rows_out as f64),
                                threshold: Some(max_size),
                                micros: Some(t0.elapsed().as_micros() as u64),
                            }
                        }
                    }
                } else {
                    let est = estimate(&pred, &table, cfg.estimator, catalog, executor)?;
                    if est.cardinality > max_size as f64 {
                        PushDownEntry {
                            table: table.clone(),
                            decision: Decision::Reverted,
                            cardinality: Some(est.cardinality),
                            threshold: Some(max_size),
                            micros: Some(t0.elapsed().as_micros() as u64),
                        }
                    } else {
                        let rs = executor.execute_rows(catalog, &compound)?;
                        let rows_out = rs.row_count as u64;
                        let (id, stats) = executor.add_temporary_table(catalog, rs, &table)?;
                        report.opt_stats.merge(&stats);
                        pushed.insert(table.clone(), id);
                        selections.remove(&table);
                        PushDownEntry {
                            table: table.clone(),
                            decision: Decision::Pushed {
                                temp: id,
                                rows: rows_out,
                            },
                            cardinality: Some(est.cardinality),
                            threshold: Some(max_size),
                            micros: Some(t0.elapsed().as_micros() as u64),
                        }
                    }
                };
                report.entries.push(entry);
            }
        }
    }

    // Predicates remaining in the top filter, in their original order:
    // join predicates are consumed by the join tree, pushed selections by
    // their temporary tables.
    let remaining: Option<PredicateExpr> = raw.top_filter.as_ref().and_then(|f| {
        let kept: Vec<PredicateExpr> = f
            .conjuncts()
            .into_iter()
            .filter(|c| match c {
                PredicateExpr::ColumnEq { .. } => false,
                other => {
                    let cols = other.columns();
                    !cols.iter().any(|c| pushed.contains_key(&c.table))
                }
            })
            .cloned()
            .collect();
        if kept.is_empty() {
            None
        } else {
            Some(PredicateExpr::and(kept))
        }
    });

    // Current cardinality per relation for join ordering: exact temp sizes
    // where pushed; otherwise the configured estimator's view of any
    // remaining selection. The exact strategy informs ordering through the
    // materialized sizes alone and runs no extra COUNT here.
    let mut cards: HashMap<String, f64> = HashMap::new();
    for t in &raw.scans {
        let rows = match pushed.get(t) {
            Some(&id) => catalog.temp_meta(id)?.row_count as f64,
            None => {
                let base = catalog.row_count(t)? as f64;
                match selections.get(t) {
                    Some(pred) if cfg.estimator != EstimatorKind::Exact => {
                        estimate(pred, t, cfg.estimator, catalog, executor)?.cardinality
                    }
                    _ => base,
                }
            }
        };
        cards.insert(t.clone(), rows);
    }

    let tree = if raw.scans.len() == 1 {
        match pushed.get(&raw.scans[0]) {
            Some(&id) => PlanNode::TempScan {
                id,
                source: raw.scans[0].clone(),
            },
            None => PlanNode::Scan {
                table: raw.scans[0].clone(),
            },
        }
    } else {
        let graph = build_join_graph(&raw.scans, &joins, &cards, catalog, &pushed)?;
        let seq = order_joins(&graph)?;
        report.join_order = Some(seq.describe());
        assemble_join_tree(&seq, &pushed)
    };

    let needed = crate::plan::needed_columns(raw, &joins, remaining.as_ref(), catalog)?;
    let tree = crate::plan::prune_scan_columns(tree, &needed, catalog)?;
    let tree = finish_tree(raw, remaining, tree, catalog)?;
    Ok((tree, report))
}

/// Builds the plan tree for an ordered join sequence.
pub fn assemble_join_tree(seq: &JoinSequence, pushed: &HashMap<String, TempId>) -> PlanNode {
    let leaf = |table: &str| -> PlanNode {
        match pushed.get(table) {
            Some(&id) => PlanNode::TempScan {
                id,
                source: table.to_string(),
            },
            None => PlanNode::Scan {
                table: table.to_string(),
            },
        }
    };
    let mut tree = leaf(&seq.start);
    for step in &seq.steps {
        let added = leaf(&step.table);
        let (probe, build, keys) = if step.table_is_build {
            (
                tree,
                added,
                step.pairs
                    .iter()
                    .map(|(p, b)| (p.column.clone(), b.column.clone()))
                    .collect(),
            )
        } else {
            (
                added,
                tree,
                step.pairs
                    .iter()
                    .map(|(p, b)| (b.column.clone(), p.column.clone()))
                    .collect(),
            )
        };
        tree = PlanNode::HashJoin {
            probe: Box::new(probe),
            build: Box::new(build),
            keys,
        };
    }
    tree
}
