//! Shared test machinery: a deliberately naive nested-loop reference
//! interpreter and randomized database/query generators.
//!
//! The oracle interprets `RawPlan` directly against the stored tables with
//! row-at-a-time evaluation; it shares no code with the plan tree, the
//! optimizer, or the columnar executor.

#![allow(dead_code)]


use std::sync::Arc;

use countdown::catalog::Catalog;
use countdown::executor::ResultSet;
use countdown::sql::{
    AggExpr, CmpOp, Literal, PredicateExpr, RawPlan, SelectItem, SumExpr,
};
use countdown::storage::{ColumnData, Table, Value};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// A comparison-friendly cell value.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn rank(&self) -> u8 {
        match self {
            Cell::Int(_) => 0,
            Cell::Float(_) => 1,
            Cell::Text(_) => 2,
        }
    }
}

impl Eq for Cell {}

impl Ord for Cell {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        match (self, other) {
            (Cell::Int(a), Cell::Int(b)) => a.cmp(b),
            (Cell::Float(a), Cell::Float(b)) => a.total_cmp(b),
            (Cell::Text(a), Cell::Text(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

fn value_to_cell(v: Value, data: &ColumnData) -> Cell {
    match (v, data) {
        (Value::Int(x), _) | (Value::Date(x), _) => Cell::Int(x),
        (Value::Float(x), _) => Cell::Float(x),
        (Value::Code(c), ColumnData::Text { dict, .. }) => Cell::Text(dict.value(c).to_string()),
        (Value::Code(c), _) => Cell::Int(c as i64),
    }
}

/// Engine output converted to cells.
pub fn result_cells(rs: &ResultSet) -> Vec<Vec<Cell>> {
    (0..rs.row_count)
        .map(|row| {
            rs.columns
                .iter()
                .map(|c| value_to_cell(c.data.get(row), &c.data))
                .collect()
        })
        .collect()
}

/// Multiset comparison: sort both sides, compare cell-wise with a relative
/// tolerance on floats (aggregation order may differ between plans).
pub fn assert_same_multiset(mut got: Vec<Vec<Cell>>, mut expected: Vec<Vec<Cell>>, context: &str) {
    got.sort();
    expected.sort();
    assert_eq!(got.len(), expected.len(), "row count differs: {context}");
    for (g, e) in got.iter().zip(&expected) {
        assert_eq!(g.len(), e.len(), "arity differs: {context}");
        for (gc, ec) in g.iter().zip(e) {
            match (gc, ec) {
                (Cell::Float(a), Cell::Float(b)) => {
                    let tol = 1e-9 * b.abs().max(1.0);
                    assert!(
                        (a - b).abs() <= tol,
                        "float cell {a} vs {b}: {context}\n got={got:?}\n exp={expected:?}"
                    );
                }
                _ => assert_eq!(gc, ec, "{context}\n got={got:?}\n exp={expected:?}"),
            }
        }
    }
}

// The reference interpreter.

fn literal_cell(lit: &Literal) -> Option<Cell> {
    Some(match lit {
        Literal::Int(v) | Literal::Date(v) => Cell::Int(*v),
        Literal::Float(v) => Cell::Float(*v),
        Literal::Text { code, raw } => {
            (*code)?;
            Cell::Text(raw.clone())
        }
    })
}

fn cell_at(table: &Table, column: &str, row: usize) -> Cell {
    let col = table.column(column).expect("column exists");
    value_to_cell(col.data.get(row), &col.data)
}

fn compare_cells(a: &Cell, op: CmpOp, b: &Cell) -> bool {
    let ord = match (a, b) {
        (Cell::Int(x), Cell::Int(y)) => x.cmp(y),
        (Cell::Float(x), Cell::Float(y)) => match x.partial_cmp(y) {
            Some(o) => o,
            None => return false,
        },
        (Cell::Text(x), Cell::Text(y)) => {
            // Text supports equality only.
            return matches!(op, CmpOp::Eq) && x == y;
        }
        _ => return false,
    };
    match op {
        CmpOp::Eq => ord.is_eq(),
        CmpOp::Lt => ord.is_lt(),
        CmpOp::Gt => ord.is_gt(),
        CmpOp::Le => ord.is_le(),
        CmpOp::Ge => ord.is_ge(),
    }
}

struct Interp<'a> {
    tables: Vec<Arc<Table>>,
    names: Vec<&'a str>,
}

impl<'a> Interp<'a> {
    /// True when every column the predicate touches is bound by the first
    /// `bound` tables.
    fn determined(&self, pred: &PredicateExpr, bound: usize) -> bool {
        pred.columns()
            .iter()
            .all(|c| self.names[..bound].contains(&c.table.as_str()))
    }

    fn lookup(&self, table: &str, column: &str, rows: &[usize]) -> Cell {
        let idx = self
            .names
            .iter()
            .position(|n| *n == table)
            .expect("table bound");
        cell_at(&self.tables[idx], column, rows[idx])
    }

    fn eval(&self, pred: &PredicateExpr, rows: &[usize]) -> bool {
        match pred {
            PredicateExpr::Compare { column, op, literal } => {
                let lhs = self.lookup(&column.table, &column.column, rows);
                match literal_cell(literal) {
                    Some(rhs) => compare_cells(&lhs, *op, &rhs),
                    None => false,
                }
            }
            PredicateExpr::ColumnEq { left, right } => {
                let l = self.lookup(&left.table, &left.column, rows);
                let r = self.lookup(&right.table, &right.column, rows);
                compare_cells(&l, CmpOp::Eq, &r)
            }
            PredicateExpr::And(children) => children.iter().all(|c| self.eval(c, rows)),
            PredicateExpr::Or(children) => children.iter().any(|c| self.eval(c, rows)),
        }
    }
}

/// Nested-loop interpretation of a raw plan. ORDER BY and LIMIT are not
/// interpreted (the callers compare multisets); aggregates cover COUNT and
/// the SUM forms.
pub fn nested_loop_run(raw: &RawPlan, catalog: &Catalog) -> Vec<Vec<Cell>> {
    let tables: Vec<Arc<Table>> = raw
        .scans
        .iter()
        .map(|s| catalog.table(s).expect("scan registered"))
        .collect();
    let names: Vec<&str> = raw.scans.iter().map(|s| s.as_str()).collect();
    let interp = Interp { tables, names };

    let conjuncts: Vec<&PredicateExpr> = raw
        .top_filter
        .as_ref()
        .map(|f| f.conjuncts())
        .unwrap_or_default();

    // Depth-first over the scans, checking each conjunct as soon as all of
    // its tables are bound.
    let mut matches: Vec<Vec<usize>> = Vec::new();
    let mut rows: Vec<usize> = vec![0; raw.scans.len()];
    fn descend(
        interp: &Interp,
        conjuncts: &[&PredicateExpr],
        rows: &mut Vec<usize>,
        level: usize,
        matches: &mut Vec<Vec<usize>>,
    ) {
        if level == interp.tables.len() {
            matches.push(rows.clone());
            return;
        }
        for row in 0..interp.tables[level].row_count() {
            rows[level] = row;
            let ok = conjuncts.iter().all(|c| {
                if interp.determined(c, level + 1) && !interp.determined(c, level) {
                    interp.eval(c, rows)
                } else {
                    true
                }
            });
            if ok {
                descend(interp, conjuncts, rows, level + 1, matches);
            }
        }
    }
    descend(&interp, &conjuncts, &mut rows, 0, &mut matches);

    let cell_of = |item_table: &str, column: &str, rows: &[usize]| -> Cell {
        interp.lookup(item_table, column, rows)
    };

    if !raw.has_aggregates() && raw.group_by.is_empty() {
        return matches
            .iter()
            .map(|rows| {
                raw.select
                    .iter()
                    .map(|item| match item {
                        SelectItem::Column(c) => cell_of(&c.table, &c.column, rows),
                        SelectItem::Agg(_) => unreachable!("no aggregates"),
                    })
                    .collect()
            })
            .collect();
    }

    // Grouped / global aggregation.
    #[derive(Clone)]
    enum Acc {
        Count(i64),
        SumInt(i64),
        SumFloat(f64),
    }
    let owner_of = |column: &str| -> &str {
        for (i, t) in interp.tables.iter().enumerate() {
            if t.has_column(column) {
                return interp.names[i];
            }
        }
        panic!("column '{column}' not found")
    };
    let numeric = |column: &str, rows: &[usize]| -> (Option<i64>, f64) {
        match cell_of(owner_of(column), column, rows) {
            Cell::Int(v) => (Some(v), v as f64),
            Cell::Float(v) => (None, v),
            Cell::Text(_) => panic!("sum over text"),
        }
    };
    let is_int_sum = |expr: &SumExpr| -> bool {
        let int_col = |c: &str| {
            for t in &interp.tables {
                if let Ok(col) = t.column(c) {
                    return matches!(col.data, ColumnData::Int64(_));
                }
            }
            false
        };
        match expr {
            SumExpr::Column(c) => int_col(c),
            SumExpr::Sub(a, b) => int_col(a) && int_col(b),
            SumExpr::MulOneMinus(_, _) => false,
        }
    };

    let mut groups: std::collections::BTreeMap<Vec<Cell>, Vec<Acc>> = Default::default();
    let fresh: Vec<Acc> = raw
        .select
        .iter()
        .filter_map(|item| match item {
            SelectItem::Agg(AggExpr::CountStar { .. }) => Some(Acc::Count(0)),
            SelectItem::Agg(AggExpr::Sum { expr, .. }) => Some(if is_int_sum(expr) {
                Acc::SumInt(0)
            } else {
                Acc::SumFloat(0.0)
            }),
            SelectItem::Column(_) => None,
        })
        .collect();
    if raw.group_by.is_empty() {
        groups.insert(Vec::new(), fresh.clone());
    }
    for rows in &matches {
        let key: Vec<Cell> = raw
            .group_by
            .iter()
            .map(|g| cell_of(&g.table, &g.column, rows))
            .collect();
        let accs = groups.entry(key).or_insert_with(|| fresh.clone());
        let mut slot = 0;
        for item in &raw.select {
            let SelectItem::Agg(agg) = item else { continue };
            match agg {
                AggExpr::CountStar { .. } => {
                    if let Acc::Count(c) = &mut accs[slot] {
                        *c += 1;
                    }
                }
                AggExpr::Sum { expr, .. } => {
                    let v: f64 = match expr {
                        SumExpr::Column(c) => numeric(c, rows).1,
                        SumExpr::Sub(a, b) => numeric(a, rows).1 - numeric(b, rows).1,
                        SumExpr::MulOneMinus(a, b) => {
                            numeric(a, rows).1 * (1.0 - numeric(b, rows).1)
                        }
                    };
                    match &mut accs[slot] {
                        Acc::SumInt(s) => *s += v as i64,
                        Acc::SumFloat(s) => *s += v,
                        Acc::Count(_) => unreachable!(),
                    }
                }
            }
            slot += 1;
        }
    }

    groups
        .into_iter()
        .map(|(key, accs)| {
            let mut group_idx = 0;
            let mut agg_idx = 0;
            raw.select
                .iter()
                .map(|item| match item {
                    SelectItem::Column(c) => {
                        let pos = raw
                            .group_by
                            .iter()
                            .position(|g| g.column == c.column)
                            .expect("selected column grouped");
                        let _ = group_idx;
                        group_idx += 1;
                        key[pos].clone()
                    }
                    SelectItem::Agg(_) => {
                        let cell = match &accs[agg_idx] {
                            Acc::Count(c) => Cell::Int(*c),
                            Acc::SumInt(s) => Cell::Int(*s),
                            Acc::SumFloat(s) => Cell::Float(*s),
                        };
                        agg_idx += 1;
                        cell
                    }
                })
                .collect()
        })
        .collect()
}

// Random databases and queries.

pub struct ColumnSpec {
    pub name: String,
    pub domain: i64,
}

pub struct TableSpec {
    pub name: String,
    pub rows: usize,
    pub int_columns: Vec<ColumnSpec>,
    pub has_float: bool,
}

/// A star-shaped database: one fact table with foreign keys into up to two
/// dimension tables. Every column name is globally unique.
pub fn random_db(rng: &mut ChaCha8Rng, tag: &str, max_fact_rows: usize) -> Vec<Table> {
    use countdown::storage::Column;
    let n_dims = rng.random_range(0..=2);
    let fact_rows = rng.random_range(1..=max_fact_rows.max(1));
    let mut tables = Vec::new();
    let mut dim_rows = Vec::new();
    for d in 0..n_dims {
        let rows = rng.random_range(1..=60);
        dim_rows.push(rows);
        let mut columns = vec![Column {
            name: format!("{tag}d{d}_key"),
            data: ColumnData::Int64(Arc::new((1..=rows as i64).collect())),
        }];
        for (i, domain) in [8i64, 5].iter().enumerate() {
            columns.push(Column {
                name: format!("{tag}d{d}_a{i}"),
                data: ColumnData::Int64(Arc::new(
                    (0..rows).map(|_| rng.random_range(0..*domain)).collect(),
                )),
            });
        }
        tables.push(Table::new(format!("{tag}dim{d}"), columns).expect("valid dim"));
    }
    let mut columns = Vec::new();
    for (d, rows) in dim_rows.iter().enumerate() {
        columns.push(Column {
            name: format!("{tag}f_fk{d}"),
            data: ColumnData::Int64(Arc::new(
                (0..fact_rows)
                    .map(|_| rng.random_range(1..=*rows as i64))
                    .collect(),
            )),
        });
    }
    for (i, domain) in [20i64, 10, 4].iter().enumerate() {
        columns.push(Column {
            name: format!("{tag}f_a{i}"),
            data: ColumnData::Int64(Arc::new(
                (0..fact_rows).map(|_| rng.random_range(0..*domain)).collect(),
            )),
        });
    }
    columns.push(Column {
        name: format!("{tag}f_val"),
        data: ColumnData::Float64(Arc::new(
            (0..fact_rows)
                .map(|_| (rng.random_range(0..10_000) as f64) / 100.0)
                .collect(),
        )),
    });
    tables.push(Table::new(format!("{tag}fact"), columns).expect("valid fact"));
    tables
}

/// Columns of a generated table usable in predicates, with their domains.
fn predicate_columns(table: &Table) -> Vec<(String, i64)> {
    table
        .columns()
        .iter()
        .filter_map(|c| match &c.data {
            ColumnData::Int64(_) => {
                let domain = if c.name.contains("_key") || c.name.contains("_fk") {
                    table.row_count().max(1) as i64
                } else if c.name.ends_with("a0") {
                    if c.name.contains("f_") {
                        20
                    } else {
                        8
                    }
                } else if c.name.ends_with("a1") {
                    if c.name.contains("f_") {
                        10
                    } else {
                        5
                    }
                } else {
                    4
                };
                Some((c.name.clone(), domain))
            }
            _ => None,
        })
        .collect()
}

pub fn random_predicate_sql(rng: &mut ChaCha8Rng, table: &Table, depth: usize) -> String {
    let cols = predicate_columns(table);
    let leaf = |rng: &mut ChaCha8Rng| -> String {
        let (name, domain) = &cols[rng.random_range(0..cols.len())];
        let op = ["=", "<", ">", "<=", ">="][rng.random_range(0..5)];
        let v = rng.random_range(0..*domain);
        format!("{name} {op} {v}")
    };
    fn build(
        rng: &mut ChaCha8Rng,
        leaf: &dyn Fn(&mut ChaCha8Rng) -> String,
        depth: usize,
    ) -> String {
        if depth == 0 || rng.random_range(0..3) == 0 {
            return leaf(rng);
        }
        let n = rng.random_range(2..=3);
        let parts: Vec<String> = (0..n).map(|_| build(rng, leaf, depth - 1)).collect();
        let joiner = if rng.random_range(0..2) == 0 {
            " AND "
        } else {
            " OR "
        };
        format!("({})", parts.join(joiner))
    }
    build(rng, &leaf, depth)
}

/// A random supported query over a generated star database: some connected
/// subset of tables, join predicates along the foreign keys, optional
/// selections, and a random output shape.
pub fn random_query(rng: &mut ChaCha8Rng, tag: &str, db: &[Table]) -> String {
    let fact = db.last().expect("fact table");
    let n_dims = db.len() - 1;
    let use_dims: Vec<usize> = (0..n_dims).filter(|_| rng.random_range(0..2) == 0).collect();

    let mut scans = vec![format!("{tag}fact")];
    let mut conjuncts: Vec<String> = Vec::new();
    for &d in &use_dims {
        scans.push(format!("{tag}dim{d}"));
        conjuncts.push(format!("{tag}f_fk{d} = {tag}d{d}_key"));
    }
    for (i, table) in std::iter::once(fact)
        .chain(use_dims.iter().map(|&d| &db[d]))
        .enumerate()
    {
        let p = if i == 0 { 70 } else { 50 };
        if rng.random_range(0..100) < p {
            let depth = rng.random_range(1..=3);
            conjuncts.push(random_predicate_sql(rng, table, depth));
        }
    }

    let shape = rng.random_range(0..100);
    let select = if shape < 40 {
        "COUNT(*)".to_string()
    } else if shape < 60 {
        format!("SUM({tag}f_a0)")
    } else if shape < 80 {
        let group_col = format!("{tag}f_a2");
        let sql = format!(
            "SELECT {group_col}, COUNT(*), SUM({tag}f_a1) FROM {} {} GROUP BY {group_col}",
            scans.join(", "),
            if conjuncts.is_empty() {
                String::new()
            } else {
                format!("WHERE {}", conjuncts.join(" AND "))
            },
        );
        return sql;
    } else {
        let mut cols = vec![format!("{tag}f_a0"), format!("{tag}f_val")];
        if let Some(&d) = use_dims.first() {
            cols.push(format!("{tag}d{d}_a0"));
        }
        cols.join(", ")
    };
    format!(
        "SELECT {select} FROM {} {}",
        scans.join(", "),
        if conjuncts.is_empty() {
            String::new()
        } else {
            format!("WHERE {}", conjuncts.join(" AND "))
        },
    )
}
