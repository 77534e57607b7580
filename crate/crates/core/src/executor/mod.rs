//! Operator-at-a-time columnar executor.
//!
//! Every operator materializes its output before its parent runs, with two
//! fusions: `Compound` evaluates its filter and projection in one pass, and
//! a `Filter` directly above a `HashJoin` is applied while probing so the
//! unfiltered join output is never materialized.
//!
//! Instrumentation counters:
//! * `rows_probed` / `rows_built` accumulate hash-join input sizes;
//! * `predicate_evals` counts rows a predicate operator was evaluated on;
//! * `intermediate_rows_materialized` counts rows buffered between join
//!   stages (non-leaf join inputs) plus materialized temporary tables, the
//!   quantity join ordering tries to minimize.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use crate::catalog::{Catalog, TempId};
use crate::error::{Error, Result};
use crate::plan::{attach_count, PlanNode};
use crate::sql::{
    compare_value, AggExpr, CmpOp, Literal, PredicateExpr, SortKey, SortValue, SumExpr,
};
use crate::storage::{Column, ColumnData, Dictionary, Table, Value};

/// Execution counters; all deterministic except the timings.
#[derive(Debug, Default, Clone)]
pub struct ExecStats {
    pub rows_probed: u64,
    pub rows_built: u64,
    pub predicate_evals: u64,
    pub intermediate_rows_materialized: u64,
    pub operator_micros: Vec<(String, u64)>,
}

impl ExecStats {
    pub fn merge(&mut self, other: &ExecStats) {
        self.rows_probed += other.rows_probed;
        self.rows_built += other.rows_built;
        self.predicate_evals += other.predicate_evals;
        self.intermediate_rows_materialized += other.intermediate_rows_materialized;
        self.operator_micros
            .extend(other.operator_micros.iter().cloned());
    }
}

/// Materialized operator output.
#[derive(Debug, Clone)]
pub struct Batch {
    pub columns: Vec<Column>,
    pub rows: usize,
}

impl Batch {
    fn column(&self, name: &str) -> Result<&Column> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    fn from_table(table: &Table) -> Batch {
        Batch {
            columns: table.columns().to_vec(),
            rows: table.row_count(),
        }
    }

    fn filter(&self, mask: &[bool]) -> Batch {
        let rows = mask.iter().filter(|&&b| b).count();
        Batch {
            columns: self
                .columns
                .iter()
                .map(|c| Column {
                    name: c.name.clone(),
                    data: c.data.filter(mask),
                })
                .collect(),
            rows,
        }
    }

    fn take(&self, indices: &[u32]) -> Batch {
        Batch {
            columns: self
                .columns
                .iter()
                .map(|c| Column {
                    name: c.name.clone(),
                    data: c.data.take(indices),
                })
                .collect(),
            rows: indices.len(),
        }
    }

    fn project(&self, names: &[String]) -> Result<Batch> {
        let columns: Vec<Column> = names
            .iter()
            .map(|n| self.column(n).cloned())
            .collect::<Result<_>>()?;
        Ok(Batch {
            columns,
            rows: self.rows,
        })
    }
}

/// Full query result: schema, column arrays, and the run's counters.
#[derive(Debug, Clone)]
pub struct ResultSet {
    pub columns: Vec<Column>,
    pub row_count: usize,
    pub stats: ExecStats,
}

impl ResultSet {
    pub fn render_rows(&self) -> Vec<Vec<String>> {
        (0..self.row_count)
            .map(|row| self.columns.iter().map(|c| c.data.render(row)).collect())
            .collect()
    }

    /// Single-cell integer read (COUNT results).
    pub fn scalar_i64(&self) -> Result<i64> {
        if self.row_count != 1 || self.columns.len() != 1 {
            return Err(Error::Internal(format!(
                "expected a single scalar, found {}x{}",
                self.row_count,
                self.columns.len()
            )));
        }
        match &self.columns[0].data {
            ColumnData::Int64(v) => Ok(v[0]),
            other => Err(Error::Internal(format!(
                "expected an integer scalar, found {}",
                other.column_type()
            ))),
        }
    }
}

/// Outcome of a gated execution.
#[derive(Debug)]
pub enum ExecOutcome {
    Rows(ResultSet),
    /// The COUNT gate saw more rows than allowed; nothing was materialized.
    GateExceeded { count: u64, stats: ExecStats },
}

pub const DEFAULT_MAX_ROWS: u64 = 100_000_000;

/// Evaluates `pred` over the columns, returning `input_mask AND pred(row)`.
/// `predicate_evals` is charged once per set bit of the input mask.
pub fn eval_predicate(
    columns: &[Column],
    pred: &PredicateExpr,
    input_mask: &[bool],
    stats: &mut ExecStats,
) -> Result<Vec<bool>> {
    stats.predicate_evals += input_mask.iter().filter(|&&b| b).count() as u64;
    pred_mask(columns, pred, input_mask)
}

fn pred_mask(columns: &[Column], pred: &PredicateExpr, base: &[bool]) -> Result<Vec<bool>> {
    match pred {
        PredicateExpr::Compare { column, op, literal } => {
            let col = columns
                .iter()
                .find(|c| c.name == column.column)
                .ok_or_else(|| Error::UnknownColumn(column.column.clone()))?;
            Ok(compare_mask(&col.data, *op, literal, base))
        }
        PredicateExpr::ColumnEq { left, right } => {
            let l = columns
                .iter()
                .find(|c| c.name == left.column)
                .ok_or_else(|| Error::UnknownColumn(left.column.clone()))?;
            let r = columns
                .iter()
                .find(|c| c.name == right.column)
                .ok_or_else(|| Error::UnknownColumn(right.column.clone()))?;
            let mut out = vec![false; base.len()];
            for (i, out_i) in out.iter_mut().enumerate() {
                if base[i] {
                    *out_i = key_atom(&l.data, i) == key_atom(&r.data, i);
                }
            }
            Ok(out)
        }
        PredicateExpr::And(children) => {
            let mut mask = base.to_vec();
            for c in children {
                mask = pred_mask(columns, c, &mask)?;
            }
            Ok(mask)
        }
        PredicateExpr::Or(children) => {
            let mut out = vec![false; base.len()];
            for c in children {
                let m = pred_mask(columns, c, base)?;
                for (o, v) in out.iter_mut().zip(m) {
                    *o |= v;
                }
            }
            Ok(out)
        }
    }
}

fn compare_mask(data: &ColumnData, op: CmpOp, literal: &Literal, base: &[bool]) -> Vec<bool> {
    let mut out = vec![false; base.len()];
    match (data, literal) {
        (ColumnData::Int64(v), Literal::Int(x)) => {
            fill_ordered(&mut out, base, v, *x, op);
        }
        (ColumnData::Date(v), Literal::Date(x)) | (ColumnData::Date(v), Literal::Int(x)) => {
            fill_ordered(&mut out, base, v, *x, op);
        }
        (ColumnData::Float64(v), Literal::Float(x)) => {
            fill_ordered(&mut out, base, v, *x, op);
        }
        (ColumnData::Text { codes, .. }, Literal::Text { code, .. }) => {
            if let (Some(x), CmpOp::Eq) = (code, op) {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = base[i] && codes[i] == *x;
                }
            }
            // Unknown literal or non-equality op: constant false.
        }
        _ => {
            // Mixed types missed by bind-time normalization: row-wise fallback.
            for (i, o) in out.iter_mut().enumerate() {
                *o = base[i] && compare_value(data.get(i), op, literal);
            }
        }
    }
    out
}

fn fill_ordered<T: PartialOrd + Copy>(
    out: &mut [bool],
    base: &[bool],
    values: &[T],
    x: T,
    op: CmpOp,
) {
    match op {
        CmpOp::Eq => {
            for (i, o) in out.iter_mut().enumerate() {
                *o = base[i] && values[i] == x;
            }
        }
        CmpOp::Lt => {
            for (i, o) in out.iter_mut().enumerate() {
                *o = base[i] && values[i] < x;
            }
        }
        CmpOp::Gt => {
            for (i, o) in out.iter_mut().enumerate() {
                *o = base[i] && values[i] > x;
            }
        }
        CmpOp::Le => {
            for (i, o) in out.iter_mut().enumerate() {
                *o = base[i] && values[i] <= x;
            }
        }
        CmpOp::Ge => {
            for (i, o) in out.iter_mut().enumerate() {
                *o = base[i] && values[i] >= x;
            }
        }
    }
}

/// Hash/equality atom for join keys and group keys. Text joins compare the
/// underlying strings, never dictionary codes from different dictionaries.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum KeyAtom {
    Int(i64),
    Bits(u64),
    Text(String),
}

fn key_atom(data: &ColumnData, row: usize) -> KeyAtom {
    match data {
        ColumnData::Int64(v) | ColumnData::Date(v) => KeyAtom::Int(v[row]),
        ColumnData::Float64(v) => KeyAtom::Bits(v[row].to_bits()),
        ColumnData::Text { codes, dict } => KeyAtom::Text(dict.value(codes[row]).to_string()),
    }
}

/// Hash table mapping keys to build-side row indices. Single integer keys
/// (the common benchmark case) take a specialized path; everything else
/// goes through composite key atoms.
pub enum HashTable {
    Int {
        buckets: HashMap<i64, Vec<u32>>,
        build_row_count: usize,
    },
    Generic {
        buckets: HashMap<Vec<KeyAtom>, Vec<u32>>,
        build_row_count: usize,
    },
}

fn int_key_slice<'a>(batch: &'a Batch, column: &str) -> Option<&'a [i64]> {
    match batch.columns.iter().find(|c| c.name == column) {
        Some(Column {
            data: ColumnData::Int64(v),
            ..
        })
        | Some(Column {
            data: ColumnData::Date(v),
            ..
        }) => Some(v),
        _ => None,
    }
}

impl HashTable {
    fn build(batch: &Batch, key_columns: &[String]) -> Result<HashTable> {
        if key_columns.len() == 1 {
            if let Some(values) = int_key_slice(batch, &key_columns[0]) {
                let mut buckets: HashMap<i64, Vec<u32>> = HashMap::with_capacity(batch.rows);
                for (row, &v) in values.iter().enumerate() {
                    buckets.entry(v).or_default().push(row as u32);
                }
                return Ok(HashTable::Int {
                    buckets,
                    build_row_count: batch.rows,
                });
            }
        }
        let cols: Vec<&Column> = key_columns
            .iter()
            .map(|k| batch.column(k))
            .collect::<Result<_>>()?;
        let mut buckets: HashMap<Vec<KeyAtom>, Vec<u32>> = HashMap::new();
        for row in 0..batch.rows {
            let key: Vec<KeyAtom> = cols.iter().map(|c| key_atom(&c.data, row)).collect();
            buckets.entry(key).or_default().push(row as u32);
        }
        Ok(HashTable::Generic {
            buckets,
            build_row_count: batch.rows,
        })
    }

    pub fn build_row_count(&self) -> usize {
        match self {
            HashTable::Int {
                build_row_count, ..
            }
            | HashTable::Generic {
                build_row_count, ..
            } => *build_row_count,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Executor {
    pub max_rows: u64,
}

impl Default for Executor {
    fn default() -> Self {
        Executor {
            max_rows: DEFAULT_MAX_ROWS,
        }
    }
}

impl Executor {
    pub fn new() -> Executor {
        Executor::default()
    }

    pub fn with_max_rows(max_rows: u64) -> Executor {
        Executor { max_rows }
    }

    fn check_cap(&self, rows: usize) -> Result<()> {
        if rows as u64 > self.max_rows {
            return Err(Error::RowCapExceeded {
                produced: rows as u64,
                cap: self.max_rows,
            });
        }
        Ok(())
    }

    /// Executes a plan. With `is_spd` the node's row count is computed
    /// first (a temporary COUNT); if it exceeds `max_size` the execution
    /// stops with `GateExceeded` and nothing is materialized.
    pub fn execute(
        &self,
        catalog: &Catalog,
        node: &PlanNode,
        is_spd: bool,
        max_size: u64,
    ) -> Result<ExecOutcome> {
        let mut stats = ExecStats::default();
        if !is_spd {
            let batch = self.run(catalog, node, &mut stats)?;
            return Ok(ExecOutcome::Rows(ResultSet {
                columns: batch.columns,
                row_count: batch.rows,
                stats,
            }));
        }
        match node {
            // The gate: a temporary COUNT pass over the selection first
            // (mask plus popcount, nothing materialized), then, if admitted,
            // the compound re-executes to produce its rows. The input
            // arrays are already resident, so the re-execution re-evaluates
            // the predicate but never re-reads storage.
            PlanNode::Compound {
                pred,
                columns,
                input,
                ..
            } => {
                let batch = self.run(catalog, input, &mut stats)?;
                let t0 = Instant::now();
                let mask = eval_predicate(&batch.columns, pred, &vec![true; batch.rows], &mut stats)?;
                let count = mask.iter().filter(|&&b| b).count() as u64;
                drop(mask);
                if count > max_size {
                    stats
                        .operator_micros
                        .push(("Compound(gated)".into(), t0.elapsed().as_micros() as u64));
                    return Ok(ExecOutcome::GateExceeded { count, stats });
                }
                self.check_cap(count as usize)?;
                let mask = eval_predicate(&batch.columns, pred, &vec![true; batch.rows], &mut stats)?;
                let out = batch.filter(&mask).project(columns)?;
                stats
                    .operator_micros
                    .push(("Compound".into(), t0.elapsed().as_micros() as u64));
                Ok(ExecOutcome::Rows(ResultSet {
                    columns: out.columns,
                    row_count: out.rows,
                    stats,
                }))
            }
            other => {
                let count = self.execute_count(catalog, &attach_count(other.clone()))?;
                if count > max_size {
                    return Ok(ExecOutcome::GateExceeded { count, stats });
                }
                let batch = self.run(catalog, other, &mut stats)?;
                Ok(ExecOutcome::Rows(ResultSet {
                    columns: batch.columns,
                    row_count: batch.rows,
                    stats,
                }))
            }
        }
    }

    /// Plain execution; the gate never fires.
    pub fn execute_rows(&self, catalog: &Catalog, node: &PlanNode) -> Result<ResultSet> {
        match self.execute(catalog, node, false, 0)? {
            ExecOutcome::Rows(rs) => Ok(rs),
            ExecOutcome::GateExceeded { .. } => {
                Err(Error::Internal("gate fired on ungated execution".into()))
            }
        }
    }

    /// Executes a COUNT plan and reads the single value.
    pub fn execute_count(&self, catalog: &Catalog, node: &PlanNode) -> Result<u64> {
        let rs = self.execute_rows(catalog, node)?;
        Ok(rs.scalar_i64()? as u64)
    }

    /// Registers a result set as a temporary table; scanning the id yields
    /// identical rows. Charges the materialization counter.
    pub fn add_temporary_table(
        &self,
        catalog: &Catalog,
        mut rs: ResultSet,
        source: &str,
    ) -> Result<(TempId, ExecStats)> {
        self.check_cap(rs.row_count)?;
        rs.stats.intermediate_rows_materialized += rs.row_count as u64;
        let id = {
            let table = Table::new("temp", rs.columns.clone())?;
            catalog.add_temp(table, source)?
        };
        Ok((id, rs.stats))
    }

    fn run(&self, catalog: &Catalog, node: &PlanNode, stats: &mut ExecStats) -> Result<Batch> {
        match node {
            PlanNode::Scan { table } => {
                let t = catalog.table(table)?;
                Ok(Batch::from_table(&t))
            }
            PlanNode::TempScan { id, .. } => {
                let t = catalog.temp_table(*id)?;
                Ok(Batch::from_table(&t))
            }
            PlanNode::Filter { pred, input } => {
                // Residual predicates over a join evaluate while probing.
                if let PlanNode::HashJoin { probe, build, keys } = input.as_ref() {
                    return self.run_hash_join(catalog, probe, build, keys, Some(pred), stats);
                }
                let batch = self.run(catalog, input, stats)?;
                let t0 = Instant::now();
                let mask =
                    eval_predicate(&batch.columns, pred, &vec![true; batch.rows], stats)?;
                let out = batch.filter(&mask);
                self.check_cap(out.rows)?;
                stats
                    .operator_micros
                    .push(("Filter".into(), t0.elapsed().as_micros() as u64));
                Ok(out)
            }
            PlanNode::Project { columns, input } => {
                let batch = self.run(catalog, input, stats)?;
                let t0 = Instant::now();
                let out = batch.project(columns)?;
                stats
                    .operator_micros
                    .push(("Project".into(), t0.elapsed().as_micros() as u64));
                Ok(out)
            }
            PlanNode::Compound {
                pred,
                columns,
                input,
                ..
            } => {
                let batch = self.run(catalog, input, stats)?;
                let t0 = Instant::now();
                let mask =
                    eval_predicate(&batch.columns, pred, &vec![true; batch.rows], stats)?;
                let out = batch.filter(&mask).project(columns)?;
                self.check_cap(out.rows)?;
                stats
                    .operator_micros
                    .push(("Compound".into(), t0.elapsed().as_micros() as u64));
                Ok(out)
            }
            PlanNode::HashJoin { probe, build, keys } => {
                self.run_hash_join(catalog, probe, build, keys, None, stats)
            }
            PlanNode::Aggregate {
                aggs,
                group_by,
                input,
            } => {
                let batch = self.run(catalog, input, stats)?;
                let t0 = Instant::now();
                let out = aggregate(&batch, aggs, group_by)?;
                self.check_cap(out.rows)?;
                stats
                    .operator_micros
                    .push(("Aggregate".into(), t0.elapsed().as_micros() as u64));
                Ok(out)
            }
            PlanNode::Sort { keys, input } => {
                let batch = self.run(catalog, input, stats)?;
                let t0 = Instant::now();
                let out = sort(&batch, keys)?;
                stats
                    .operator_micros
                    .push(("Sort".into(), t0.elapsed().as_micros() as u64));
                Ok(out)
            }
            PlanNode::Limit { n, input } => {
                let batch = self.run(catalog, input, stats)?;
                let indices: Vec<u32> = (0..batch.rows.min(*n as usize) as u32).collect();
                Ok(batch.take(&indices))
            }
        }
    }

    fn run_hash_join(
        &self,
        catalog: &Catalog,
        probe: &PlanNode,
        build: &PlanNode,
        keys: &[(String, String)],
        residual: Option<&PredicateExpr>,
        stats: &mut ExecStats,
    ) -> Result<Batch> {
        if keys.is_empty() {
            return Err(Error::UnsupportedQuery(
                "hash join without equality keys".into(),
            ));
        }
        let build_batch = self.run(catalog, build, stats)?;
        let probe_batch = self.run(catalog, probe, stats)?;
        // Non-leaf join inputs were materialized between stages. A bare
        // column projection over a stored table shares the table's arrays
        // and does not count.
        fn is_stored(node: &PlanNode) -> bool {
            match node {
                PlanNode::Scan { .. } | PlanNode::TempScan { .. } => true,
                PlanNode::Project { input, .. } => is_stored(input),
                _ => false,
            }
        }
        if !is_stored(build) {
            stats.intermediate_rows_materialized += build_batch.rows as u64;
        }
        if !is_stored(probe) {
            stats.intermediate_rows_materialized += probe_batch.rows as u64;
        }

        let t0 = Instant::now();
        let build_keys: Vec<String> = keys.iter().map(|(_, b)| b.clone()).collect();
        let probe_keys: Vec<String> = keys.iter().map(|(p, _)| p.clone()).collect();
        let ht = HashTable::build(&build_batch, &build_keys)?;
        stats.rows_built += build_batch.rows as u64;
        stats.rows_probed += probe_batch.rows as u64;

        let probe_cols: Vec<&Column> = probe_keys
            .iter()
            .map(|k| probe_batch.column(k))
            .collect::<Result<_>>()?;

        // Residual conjuncts split by side: single-side predicates become
        // vectorized masks (probe rows failing theirs are skipped before
        // hashing), anything touching both sides is checked per joined
        // candidate.
        let mut probe_mask: Option<Vec<bool>> = None;
        let mut build_mask: Option<Vec<bool>> = None;
        let mut mixed: Vec<PredicateExpr> = Vec::new();
        if let Some(pred) = residual {
            let in_schema = |batch: &Batch, p: &PredicateExpr| {
                p.columns()
                    .iter()
                    .all(|c| batch.columns.iter().any(|bc| bc.name == c.column))
            };
            let mut probe_parts = Vec::new();
            let mut build_parts = Vec::new();
            for conjunct in pred.conjuncts() {
                if in_schema(&probe_batch, conjunct) {
                    probe_parts.push(conjunct.clone());
                } else if in_schema(&build_batch, conjunct) {
                    build_parts.push(conjunct.clone());
                } else {
                    mixed.push(conjunct.clone());
                }
            }
            // A mask that keeps every row is dropped so the probe loop pays
            // nothing for it.
            if !probe_parts.is_empty() {
                let m = eval_predicate(
                    &probe_batch.columns,
                    &PredicateExpr::and(probe_parts),
                    &vec![true; probe_batch.rows],
                    stats,
                )?;
                if !m.iter().all(|&b| b) {
                    probe_mask = Some(m);
                }
            }
            if !build_parts.is_empty() {
                let m = eval_predicate(
                    &build_batch.columns,
                    &PredicateExpr::and(build_parts),
                    &vec![true; build_batch.rows],
                    stats,
                )?;
                if !m.iter().all(|&b| b) {
                    build_mask = Some(m);
                }
            }
        }
        let mixed_eval = if mixed.is_empty() {
            None
        } else {
            Some(JoinedPredicate::prepare(
                &PredicateExpr::and(mixed),
                &probe_batch,
                &build_batch,
            )?)
        };

        let mut probe_idx: Vec<u32> = Vec::new();
        let mut build_idx: Vec<u32> = Vec::new();
        {
            let mut emit = |row: usize, matches: &[u32], stats: &mut ExecStats| -> Result<()> {
                for &b in matches {
                    if let Some(mask) = &build_mask {
                        if !mask[b as usize] {
                            continue;
                        }
                    }
                    if let Some(eval) = &mixed_eval {
                        stats.predicate_evals += 1;
                        if !eval.matches(row, b as usize) {
                            continue;
                        }
                    }
                    probe_idx.push(row as u32);
                    build_idx.push(b);
                    if probe_idx.len() as u64 > self.max_rows {
                        return Err(Error::RowCapExceeded {
                            produced: probe_idx.len() as u64,
                            cap: self.max_rows,
                        });
                    }
                }
                Ok(())
            };
            match (&ht, int_key_slice(&probe_batch, &probe_keys[0])) {
                (HashTable::Int { buckets, .. }, Some(values)) if probe_keys.len() == 1 => {
                    for (row, &v) in values.iter().enumerate() {
                        if let Some(mask) = &probe_mask {
                            if !mask[row] {
                                continue;
                            }
                        }
                        if let Some(matches) = buckets.get(&v) {
                            emit(row, matches, stats)?;
                        }
                    }
                }
                _ => {
                    let HashTable::Generic { buckets, .. } = &ht else {
                        return Err(Error::TypeMismatch(
                            "join key column types do not match".into(),
                        ));
                    };
                    let mut key: Vec<KeyAtom> = Vec::with_capacity(probe_cols.len());
                    for row in 0..probe_batch.rows {
                        if let Some(mask) = &probe_mask {
                            if !mask[row] {
                                continue;
                            }
                        }
                        key.clear();
                        key.extend(probe_cols.iter().map(|c| key_atom(&c.data, row)));
                        if let Some(matches) = buckets.get(&key) {
                            emit(row, matches, stats)?;
                        }
                    }
                }
            }
        }

        let mut columns = probe_batch.take(&probe_idx).columns;
        columns.extend(build_batch.take(&build_idx).columns);
        let name = if residual.is_some() {
            "HashJoin+Filter"
        } else {
            "HashJoin"
        };
        stats
            .operator_micros
            .push((name.into(), t0.elapsed().as_micros() as u64));
        Ok(Batch {
            columns,
            rows: probe_idx.len(),
        })
    }
}

/// A predicate bound to the two sides of a join for per-candidate-row
/// evaluation during the probe pass.
struct JoinedPredicate {
    pred: PredicateExpr,
    /// column name -> (is_probe_side, column index)
    sides: HashMap<String, (bool, usize)>,
    probe_cols: Vec<Column>,
    build_cols: Vec<Column>,
}

impl JoinedPredicate {
    fn prepare(pred: &PredicateExpr, probe: &Batch, build: &Batch) -> Result<JoinedPredicate> {
        let mut sides = HashMap::new();
        for c in pred.columns() {
            if let Some(i) = probe.columns.iter().position(|pc| pc.name == c.column) {
                sides.insert(c.column.clone(), (true, i));
            } else if let Some(i) = build.columns.iter().position(|bc| bc.name == c.column) {
                sides.insert(c.column.clone(), (false, i));
            } else {
                return Err(Error::UnknownColumn(c.column.clone()));
            }
        }
        Ok(JoinedPredicate {
            pred: pred.clone(),
            sides,
            probe_cols: probe.columns.clone(),
            build_cols: build.columns.clone(),
        })
    }

    fn value(&self, column: &str, probe_row: usize, build_row: usize) -> Value {
        let &(is_probe, idx) = self.sides.get(column).expect("column resolved in prepare");
        if is_probe {
            self.probe_cols[idx].data.get(probe_row)
        } else {
            self.build_cols[idx].data.get(build_row)
        }
    }

    fn matches(&self, probe_row: usize, build_row: usize) -> bool {
        self.eval(&self.pred, probe_row, build_row)
    }

    fn eval(&self, pred: &PredicateExpr, probe_row: usize, build_row: usize) -> bool {
        match pred {
            PredicateExpr::Compare { column, op, literal } => {
                compare_value(self.value(&column.column, probe_row, build_row), *op, literal)
            }
            PredicateExpr::ColumnEq { left, right } => {
                let l = self.value(&left.column, probe_row, build_row);
                let r = self.value(&right.column, probe_row, build_row);
                crate::sql::values_equal(l, r)
            }
            PredicateExpr::And(children) => {
                children.iter().all(|c| self.eval(c, probe_row, build_row))
            }
            PredicateExpr::Or(children) => {
                children.iter().any(|c| self.eval(c, probe_row, build_row))
            }
        }
    }
}

/// Typed group key preserving the column type for output reconstruction.
#[derive(Debug, Clone, PartialEq)]
enum GroupAtom {
    Int(i64),
    Date(i64),
    Float(f64),
    Text(String),
}

impl Eq for GroupAtom {}

impl std::hash::Hash for GroupAtom {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        match self {
            GroupAtom::Int(v) => (0u8, v).hash(state),
            GroupAtom::Date(v) => (1u8, v).hash(state),
            GroupAtom::Float(v) => (2u8, v.to_bits()).hash(state),
            GroupAtom::Text(s) => (3u8, s).hash(state),
        }
    }
}

impl GroupAtom {
    fn sort_value(&self) -> SortValue {
        match self {
            GroupAtom::Int(v) | GroupAtom::Date(v) => SortValue::Int(*v),
            GroupAtom::Float(v) => SortValue::Float(*v),
            GroupAtom::Text(s) => SortValue::Text(s.clone()),
        }
    }
}

fn group_atom(data: &ColumnData, row: usize) -> GroupAtom {
    match data {
        ColumnData::Int64(v) => GroupAtom::Int(v[row]),
        ColumnData::Date(v) => GroupAtom::Date(v[row]),
        ColumnData::Float64(v) => GroupAtom::Float(v[row]),
        ColumnData::Text { codes, dict } => GroupAtom::Text(dict.value(codes[row]).to_string()),
    }
}

#[derive(Debug, Clone)]
enum Acc {
    Count(u64),
    SumInt(i64),
    SumFloat(f64),
}

enum SumInput<'a> {
    Int(Box<dyn Fn(usize) -> i64 + 'a>),
    Float(Box<dyn Fn(usize) -> f64 + 'a>),
}

fn int_slice<'a>(batch: &'a Batch, name: &str) -> Result<Option<&'a [i64]>> {
    match &batch.column(name)?.data {
        ColumnData::Int64(v) => Ok(Some(v)),
        _ => Ok(None),
    }
}

fn float_getter<'a>(batch: &'a Batch, name: &str) -> Result<Box<dyn Fn(usize) -> f64 + 'a>> {
    match &batch.column(name)?.data {
        ColumnData::Int64(v) => {
            let v = &**v;
            Ok(Box::new(move |row| v[row] as f64))
        }
        ColumnData::Float64(v) => {
            let v = &**v;
            Ok(Box::new(move |row| v[row]))
        }
        other => Err(Error::TypeMismatch(format!(
            "SUM over non-numeric column of type {}",
            other.column_type()
        ))),
    }
}

fn sum_input<'a>(batch: &'a Batch, expr: &SumExpr) -> Result<SumInput<'a>> {
    match expr {
        SumExpr::Column(c) => {
            if let Some(v) = int_slice(batch, c)? {
                return Ok(SumInput::Int(Box::new(move |row| v[row])));
            }
            Ok(SumInput::Float(float_getter(batch, c)?))
        }
        SumExpr::Sub(a, b) => {
            if let (Some(va), Some(vb)) = (int_slice(batch, a)?, int_slice(batch, b)?) {
                return Ok(SumInput::Int(Box::new(move |row| va[row] - vb[row])));
            }
            let fa = float_getter(batch, a)?;
            let fb = float_getter(batch, b)?;
            Ok(SumInput::Float(Box::new(move |row| fa(row) - fb(row))))
        }
        SumExpr::MulOneMinus(a, b) => {
            let fa = float_getter(batch, a)?;
            let fb = float_getter(batch, b)?;
            Ok(SumInput::Float(Box::new(move |row| fa(row) * (1.0 - fb(row)))))
        }
    }
}

fn aggregate(batch: &Batch, aggs: &[AggExpr], group_by: &[String]) -> Result<Batch> {
    let group_cols: Vec<&Column> = group_by
        .iter()
        .map(|g| batch.column(g))
        .collect::<Result<_>>()?;
    let inputs: Vec<Option<SumInput>> = aggs
        .iter()
        .map(|a| match a {
            AggExpr::CountStar { .. } => Ok(None),
            AggExpr::Sum { expr, .. } => sum_input(batch, expr).map(Some),
        })
        .collect::<Result<_>>()?;

    let fresh_accs = || -> Vec<Acc> {
        aggs.iter()
            .zip(&inputs)
            .map(|(a, input)| match (a, input) {
                (AggExpr::CountStar { .. }, _) => Acc::Count(0),
                (_, Some(SumInput::Int(_))) => Acc::SumInt(0),
                _ => Acc::SumFloat(0.0),
            })
            .collect()
    };

    let mut groups: HashMap<Vec<GroupAtom>, usize> = HashMap::new();
    let mut keys: Vec<Vec<GroupAtom>> = Vec::new();
    let mut accs: Vec<Vec<Acc>> = Vec::new();

    if group_by.is_empty() {
        keys.push(Vec::new());
        accs.push(fresh_accs());
        groups.insert(Vec::new(), 0);
    }

    for row in 0..batch.rows {
        let key: Vec<GroupAtom> = group_cols.iter().map(|c| group_atom(&c.data, row)).collect();
        let slot = match groups.get(&key) {
            Some(&s) => s,
            None => {
                let s = keys.len();
                keys.push(key.clone());
                accs.push(fresh_accs());
                groups.insert(key, s);
                s
            }
        };
        for (acc, input) in accs[slot].iter_mut().zip(&inputs) {
            match (acc, input) {
                (Acc::Count(c), _) => *c += 1,
                (Acc::SumInt(s), Some(SumInput::Int(f))) => *s += f(row),
                (Acc::SumFloat(s), Some(SumInput::Float(f))) => *s += f(row),
                _ => unreachable!("accumulator matches its input"),
            }
        }
    }

    // Deterministic output: groups ordered by key ascending.
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| {
        let ka: Vec<SortValue> = keys[a].iter().map(GroupAtom::sort_value).collect();
        let kb: Vec<SortValue> = keys[b].iter().map(GroupAtom::sort_value).collect();
        ka.cmp(&kb)
    });

    let mut columns: Vec<Column> = Vec::new();
    for (gi, gname) in group_by.iter().enumerate() {
        let data = match &group_cols[gi].data {
            ColumnData::Int64(_) => ColumnData::Int64(Arc::new(
                order
                    .iter()
                    .map(|&s| match &keys[s][gi] {
                        GroupAtom::Int(v) => *v,
                        _ => unreachable!(),
                    })
                    .collect(),
            )),
            ColumnData::Date(_) => ColumnData::Date(Arc::new(
                order
                    .iter()
                    .map(|&s| match &keys[s][gi] {
                        GroupAtom::Date(v) => *v,
                        _ => unreachable!(),
                    })
                    .collect(),
            )),
            ColumnData::Float64(_) => ColumnData::Float64(Arc::new(
                order
                    .iter()
                    .map(|&s| match &keys[s][gi] {
                        GroupAtom::Float(v) => *v,
                        _ => unreachable!(),
                    })
                    .collect(),
            )),
            ColumnData::Text { .. } => {
                let mut dict = Dictionary::new();
                let codes: Vec<u32> = order
                    .iter()
                    .map(|&s| match &keys[s][gi] {
                        GroupAtom::Text(v) => dict.intern(v),
                        _ => unreachable!(),
                    })
                    .collect();
                ColumnData::Text {
                    codes: Arc::new(codes),
                    dict: Arc::new(dict),
                }
            }
        };
        columns.push(Column {
            name: gname.clone(),
            data,
        });
    }
    for (ai, agg) in aggs.iter().enumerate() {
        let data = match accs.first().map(|row| &row[ai]) {
            Some(Acc::Count(_)) | None => ColumnData::Int64(Arc::new(
                order
                    .iter()
                    .map(|&s| match accs[s][ai] {
                        Acc::Count(c) => c as i64,
                        _ => unreachable!(),
                    })
                    .collect(),
            )),
            Some(Acc::SumInt(_)) => ColumnData::Int64(Arc::new(
                order
                    .iter()
                    .map(|&s| match accs[s][ai] {
                        Acc::SumInt(v) => v,
                        _ => unreachable!(),
                    })
                    .collect(),
            )),
            Some(Acc::SumFloat(_)) => ColumnData::Float64(Arc::new(
                order
                    .iter()
                    .map(|&s| match accs[s][ai] {
                        Acc::SumFloat(v) => v,
                        _ => unreachable!(),
                    })
                    .collect(),
            )),
        };
        columns.push(Column {
            name: agg.alias().to_string(),
            data,
        });
    }
    Ok(Batch {
        columns,
        rows: order.len(),
    })
}

fn sort(batch: &Batch, keys: &[SortKey]) -> Result<Batch> {
    let key_cols: Vec<(&Column, bool)> = keys
        .iter()
        .map(|k| batch.column(&k.column).map(|c| (c, k.desc)))
        .collect::<Result<_>>()?;
    let mut indices: Vec<u32> = (0..batch.rows as u32).collect();
    indices.sort_by(|&a, &b| {
        for (col, desc) in &key_cols {
            let va = crate::sql::value_sort_key(col.data.get(a as usize), &col.data);
            let vb = crate::sql::value_sort_key(col.data.get(b as usize), &col.data);
            let ord = va.cmp(&vb);
            let ord = if *desc { ord.reverse() } else { ord };
            if ord != std::cmp::Ordering::Equal {
                return ord;
            }
        }
        std::cmp::Ordering::Equal
    });
    Ok(batch.take(&indices))
}

#[cfg(test)]
mod tests;
