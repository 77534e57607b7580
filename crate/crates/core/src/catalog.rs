//! Registry of tables, their exact metadata, and attached synopses.
//!
//! Statistics are computed eagerly at registration: the engine under test
//! keeps no statistics of its own, but the baseline estimators need |R| and
//! V(R,A), and computing them up front keeps estimator comparisons free of
//! statistics-gathering noise at query time.
//!
//! Base-table registration is single-threaded (`&mut self`); after that the
//! catalog is read-only except for temporary tables and lazily built
//! synopses, which sit behind locks so concurrent queries stay safe.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::estimators::{CountMinSketch, EquiDepthHistogram, EquiWidthHistogram, RowSample};
use crate::storage::{distinct_count, ColumnData, Table};

/// Identifier of a materialized temporary table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TempId(pub u64);

impl fmt::Display for TempId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

/// Exact per-table metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct TableMeta {
    pub row_count: u64,
    pub distinct_counts: HashMap<String, u64>,
}

impl TableMeta {
    fn compute(table: &Table) -> Result<TableMeta> {
        let mut distinct_counts = HashMap::new();
        for c in table.columns() {
            distinct_counts.insert(c.name.clone(), distinct_count(table, &c.name)?);
        }
        Ok(TableMeta {
            row_count: table.row_count() as u64,
            distinct_counts,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SynopsisKind {
    EquiWidth,
    EquiDepth,
    CountMin,
    Sample,
}

/// Kind-specific construction parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SynopsisParams {
    Buckets(usize),
    Sketch { width: usize, depth: usize, seed: u64 },
    SampleRate { rate: f64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Synopsis {
    EquiWidth(EquiWidthHistogram),
    EquiDepth(EquiDepthHistogram),
    CountMin(CountMinSketch),
    Sample(RowSample),
}

#[derive(Debug)]
struct Entry {
    table: Arc<Table>,
    meta: TableMeta,
}

#[derive(Debug)]
struct TempEntry {
    table: Arc<Table>,
    meta: TableMeta,
    /// Base table the materialized rows came from.
    source: String,
}

pub const DEFAULT_BUCKETS: usize = 100;
pub const DEFAULT_SKETCH_WIDTH: usize = 2048;
pub const DEFAULT_SKETCH_DEPTH: usize = 4;
pub const DEFAULT_SAMPLE_RATE: f64 = 0.1;

#[derive(Debug)]
pub struct Catalog {
    tables: HashMap<String, Entry>,
    temps: RwLock<HashMap<u64, TempEntry>>,
    synopses: RwLock<HashMap<(String, String, SynopsisKind), Arc<Synopsis>>>,
    next_temp: AtomicU64,
}

impl Default for Catalog {
    fn default() -> Self {
        Self::new()
    }
}

impl Catalog {
    pub fn new() -> Catalog {
        Catalog {
            tables: HashMap::new(),
            temps: RwLock::new(HashMap::new()),
            synopses: RwLock::new(HashMap::new()),
            next_temp: AtomicU64::new(1),
        }
    }

    /// Registers a base table, computing its metadata eagerly.
    pub fn register(&mut self, table: Table) -> Result<&TableMeta> {
        let name = table.name().to_string();
        if self.tables.contains_key(&name) {
            return Err(Error::DuplicateTable(name));
        }
        let meta = TableMeta::compute(&table)?;
        self.tables.insert(
            name.clone(),
            Entry {
                table: Arc::new(table),
                meta,
            },
        );
        Ok(&self.tables[&name].meta)
    }

    pub fn table(&self, name: &str) -> Result<Arc<Table>> {
        self.tables
            .get(name)
            .map(|e| e.table.clone())
            .ok_or_else(|| Error::UnknownTable(name.to_string()))
    }

    pub fn has_table(&self, name: &str) -> bool {
        self.tables.contains_key(name)
    }

    pub fn meta(&self, name: &str) -> Result<TableMeta> {
        self.tables
            .get(name)
            .map(|e| e.meta.clone())
            .ok_or_else(|| Error::UnknownTable(name.to_string()))
    }

    pub fn row_count(&self, name: &str) -> Result<u64> {
        self.tables
            .get(name)
            .map(|e| e.meta.row_count)
            .ok_or_else(|| Error::UnknownTable(name.to_string()))
    }

    pub fn distinct(&self, table: &str, column: &str) -> Result<u64> {
        let entry = self
            .tables
            .get(table)
            .ok_or_else(|| Error::UnknownTable(table.to_string()))?;
        entry
            .meta
            .distinct_counts
            .get(column)
            .copied()
            .ok_or_else(|| Error::UnknownColumn(column.to_string()))
    }

    /// Base table names, sorted.
    pub fn table_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.tables.keys().cloned().collect();
        names.sort();
        names
    }

    // Temporary tables.

    /// Registers a materialized result as a first-class table with exact
    /// metadata. Ids are allocated atomically.
    pub fn add_temp(&self, table: Table, source: &str) -> Result<TempId> {
        let id = TempId(self.next_temp.fetch_add(1, Ordering::Relaxed));
        let meta = TableMeta::compute(&table)?;
        self.temps.write().expect("temp lock").insert(
            id.0,
            TempEntry {
                table: Arc::new(table),
                meta,
                source: source.to_string(),
            },
        );
        Ok(id)
    }

    pub fn temp_table(&self, id: TempId) -> Result<Arc<Table>> {
        self.temps
            .read()
            .expect("temp lock")
            .get(&id.0)
            .map(|e| e.table.clone())
            .ok_or_else(|| Error::UnknownTable(id.to_string()))
    }

    pub fn temp_meta(&self, id: TempId) -> Result<TableMeta> {
        self.temps
            .read()
            .expect("temp lock")
            .get(&id.0)
            .map(|e| e.meta.clone())
            .ok_or_else(|| Error::UnknownTable(id.to_string()))
    }

    pub fn temp_source(&self, id: TempId) -> Result<String> {
        self.temps
            .read()
            .expect("temp lock")
            .get(&id.0)
            .map(|e| e.source.clone())
            .ok_or_else(|| Error::UnknownTable(id.to_string()))
    }

    /// Drops all temporary tables (between benchmark runs).
    pub fn clear_temps(&self) {
        self.temps.write().expect("temp lock").clear();
    }

    // Synopses.

    /// Builds and stores a synopsis for (table, column). Histogram kinds
    /// require a numeric column; the sketch indexes dictionary codes for
    /// text; the sample draws row indices of the whole table.
    pub fn build_synopsis(
        &self,
        table: &str,
        column: &str,
        kind: SynopsisKind,
        params: SynopsisParams,
    ) -> Result<Arc<Synopsis>> {
        let t = self.table(table)?;
        let col = t.column(column)?;
        let synopsis = match (kind, params) {
            (SynopsisKind::EquiWidth, SynopsisParams::Buckets(b)) => {
                if b < 1 {
                    return Err(Error::InvalidParams("bucket count must be >= 1".into()));
                }
                let values = numeric_values(&col.data).ok_or_else(|| {
                    Error::InvalidParams(format!("histogram over non-numeric column '{column}'"))
                })?;
                Synopsis::EquiWidth(EquiWidthHistogram::build(&values, b))
            }
            (SynopsisKind::EquiDepth, SynopsisParams::Buckets(b)) => {
                if b < 1 {
                    return Err(Error::InvalidParams("bucket count must be >= 1".into()));
                }
                let values = numeric_values(&col.data).ok_or_else(|| {
                    Error::InvalidParams(format!("histogram over non-numeric column '{column}'"))
                })?;
                Synopsis::EquiDepth(EquiDepthHistogram::build(&values, b))
            }
            (SynopsisKind::CountMin, SynopsisParams::Sketch { width, depth, seed }) => {
                let mut sketch = CountMinSketch::new(width, depth, seed)?;
                for row in 0..t.row_count() {
                    sketch.update(crate::estimators::sketch_key(col.data.get(row)));
                }
                Synopsis::CountMin(sketch)
            }
            (SynopsisKind::Sample, SynopsisParams::SampleRate { rate, seed }) => {
                Synopsis::Sample(RowSample::build(t.row_count(), rate, seed)?)
            }
            (kind, params) => {
                return Err(Error::InvalidParams(format!(
                    "parameters {params:?} do not match synopsis kind {kind:?}"
                )));
            }
        };
        let arc = Arc::new(synopsis);
        self.synopses.write().expect("synopsis lock").insert(
            (table.to_string(), column.to_string(), kind),
            arc.clone(),
        );
        Ok(arc)
    }

    pub fn synopsis(&self, table: &str, column: &str, kind: SynopsisKind) -> Option<Arc<Synopsis>> {
        self.synopses
            .read()
            .expect("synopsis lock")
            .get(&(table.to_string(), column.to_string(), kind))
            .cloned()
    }

    /// Deterministic seed for lazily built synopses.
    fn default_seed(table: &str, column: &str) -> u64 {
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        for b in table.bytes().chain([0x1f]).chain(column.bytes()) {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h
    }

    pub fn equi_width_synopsis(&self, table: &str, column: &str) -> Result<Arc<Synopsis>> {
        self.get_or_build(
            table,
            column,
            SynopsisKind::EquiWidth,
            SynopsisParams::Buckets(DEFAULT_BUCKETS),
        )
    }

    pub fn equi_depth_synopsis(&self, table: &str, column: &str) -> Result<Arc<Synopsis>> {
        self.get_or_build(
            table,
            column,
            SynopsisKind::EquiDepth,
            SynopsisParams::Buckets(DEFAULT_BUCKETS),
        )
    }

    pub fn count_min_synopsis(&self, table: &str, column: &str) -> Result<Arc<Synopsis>> {
        self.get_or_build(
            table,
            column,
            SynopsisKind::CountMin,
            SynopsisParams::Sketch {
                width: DEFAULT_SKETCH_WIDTH,
                depth: DEFAULT_SKETCH_DEPTH,
                seed: Self::default_seed(table, column),
            },
        )
    }

    /// Table-level row sample (stored under an empty column key).
    pub fn sample_synopsis_arc(&self, table: &str) -> Result<Arc<Synopsis>> {
        let t = self.table(table)?;
        if let Some(s) = self.synopsis(table, "", SynopsisKind::Sample) {
            return Ok(s);
        }
        let sample = RowSample::build(
            t.row_count(),
            DEFAULT_SAMPLE_RATE,
            Self::default_seed(table, ""),
        )?;
        let arc = Arc::new(Synopsis::Sample(sample));
        self.synopses.write().expect("synopsis lock").insert(
            (table.to_string(), String::new(), SynopsisKind::Sample),
            arc.clone(),
        );
        Ok(arc)
    }

    fn get_or_build(
        &self,
        table: &str,
        column: &str,
        kind: SynopsisKind,
        params: SynopsisParams,
    ) -> Result<Arc<Synopsis>> {
        if let Some(s) = self.synopsis(table, column, kind) {
            return Ok(s);
        }
        self.build_synopsis(table, column, kind, params)
    }
}

fn numeric_values(data: &ColumnData) -> Option<Vec<f64>> {
    match data {
        ColumnData::Int64(v) | ColumnData::Date(v) => Some(v.iter().map(|&x| x as f64).collect()),
        ColumnData::Float64(v) => Some(v.as_ref().clone()),
        ColumnData::Text { .. } => None,
    }
}
