//! Columnar in-memory tables, CSV ingestion, and the synthetic benchmark
//! data generator.
//!
//! Tables are immutable once constructed: column arrays sit behind `Arc` so
//! scans and result sets share them without copying.

mod csv;
mod generate;

pub use csv::{load_csv, write_csv};
pub use generate::{generate, GeneratorSpec, SchemaKind};

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Physical type of a column.
///
/// Dates are stored as whole days since 1970-01-01; text is stored as dense
/// dictionary codes with the dictionary attached to the column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum ColumnType {
    Int64,
    Float64,
    Date,
    Text,
}

impl fmt::Display for ColumnType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ColumnType::Int64 => "int",
            ColumnType::Float64 => "float",
            ColumnType::Date => "date",
            ColumnType::Text => "text",
        };
        f.write_str(s)
    }
}

impl ColumnType {
    pub fn parse(s: &str) -> Result<ColumnType> {
        match s {
            "int" => Ok(ColumnType::Int64),
            "float" => Ok(ColumnType::Float64),
            "date" => Ok(ColumnType::Date),
            "text" => Ok(ColumnType::Text),
            other => Err(Error::Generator(format!("unknown column type '{other}'"))),
        }
    }
}

/// Per-column string dictionary. Codes are dense and assigned in first
/// appearance order.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Dictionary {
    values: Vec<String>,
    index: HashMap<String, u32>,
}

impl Dictionary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Code for `s`, inserting it if unseen.
    pub fn intern(&mut self, s: &str) -> u32 {
        if let Some(&c) = self.index.get(s) {
            return c;
        }
        let code = self.values.len() as u32;
        self.values.push(s.to_string());
        self.index.insert(s.to_string(), code);
        code
    }

    /// Code for `s` if it is present.
    pub fn lookup(&self, s: &str) -> Option<u32> {
        self.index.get(s).copied()
    }

    pub fn value(&self, code: u32) -> &str {
        &self.values[code as usize]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Column payload. Arrays are shared; cloning a `ColumnData` is cheap.
#[derive(Debug, Clone)]
pub enum ColumnData {
    Int64(Arc<Vec<i64>>),
    Float64(Arc<Vec<f64>>),
    /// Days since 1970-01-01.
    Date(Arc<Vec<i64>>),
    Text {
        codes: Arc<Vec<u32>>,
        dict: Arc<Dictionary>,
    },
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Int64(v) | ColumnData::Date(v) => v.len(),
            ColumnData::Float64(v) => v.len(),
            ColumnData::Text { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn column_type(&self) -> ColumnType {
        match self {
            ColumnData::Int64(_) => ColumnType::Int64,
            ColumnData::Float64(_) => ColumnType::Float64,
            ColumnData::Date(_) => ColumnType::Date,
            ColumnData::Text { .. } => ColumnType::Text,
        }
    }

    /// Value at `row` as a runtime scalar.
    pub fn get(&self, row: usize) -> Value {
        match self {
            ColumnData::Int64(v) => Value::Int(v[row]),
            ColumnData::Float64(v) => Value::Float(v[row]),
            ColumnData::Date(v) => Value::Date(v[row]),
            ColumnData::Text { codes, .. } => Value::Code(codes[row]),
        }
    }

    /// New column containing the rows selected by `mask`.
    pub fn filter(&self, mask: &[bool]) -> ColumnData {
        match self {
            ColumnData::Int64(v) => ColumnData::Int64(Arc::new(gather_mask(v, mask))),
            ColumnData::Float64(v) => ColumnData::Float64(Arc::new(gather_mask(v, mask))),
            ColumnData::Date(v) => ColumnData::Date(Arc::new(gather_mask(v, mask))),
            ColumnData::Text { codes, dict } => ColumnData::Text {
                codes: Arc::new(gather_mask(codes, mask)),
                dict: dict.clone(),
            },
        }
    }

    /// New column containing the rows at `indices` (in order, repeats allowed).
    pub fn take(&self, indices: &[u32]) -> ColumnData {
        match self {
            ColumnData::Int64(v) => ColumnData::Int64(Arc::new(gather_idx(v, indices))),
            ColumnData::Float64(v) => ColumnData::Float64(Arc::new(gather_idx(v, indices))),
            ColumnData::Date(v) => ColumnData::Date(Arc::new(gather_idx(v, indices))),
            ColumnData::Text { codes, dict } => ColumnData::Text {
                codes: Arc::new(gather_idx(codes, indices)),
                dict: dict.clone(),
            },
        }
    }

    /// Renders the value at `row` for display / CSV output.
    pub fn render(&self, row: usize) -> String {
        match self {
            ColumnData::Int64(v) => v[row].to_string(),
            ColumnData::Float64(v) => format_float(v[row]),
            ColumnData::Date(v) => days_to_date(v[row]),
            ColumnData::Text { codes, dict } => dict.value(codes[row]).to_string(),
        }
    }
}

fn gather_mask<T: Copy>(values: &[T], mask: &[bool]) -> Vec<T> {
    values
        .iter()
        .zip(mask)
        .filter_map(|(v, &keep)| keep.then_some(*v))
        .collect()
}

fn gather_idx<T: Copy>(values: &[T], indices: &[u32]) -> Vec<T> {
    indices.iter().map(|&i| values[i as usize]).collect()
}

/// f64 text form that round-trips exactly through parsing.
pub fn format_float(v: f64) -> String {
    // Rust's shortest display form re-parses to the identical bits.
    let s = format!("{v}");
    if s.contains('.') || s.contains('e') || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}

const EPOCH: chrono::NaiveDate = match chrono::NaiveDate::from_ymd_opt(1970, 1, 1) {
    Some(d) => d,
    None => unreachable!(),
};

/// Parses `YYYY-MM-DD` into days since 1970-01-01.
pub fn date_to_days(s: &str) -> Result<i64> {
    let d = chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map_err(|e| Error::TypeMismatch(format!("bad date literal '{s}': {e}")))?;
    Ok(d.signed_duration_since(EPOCH).num_days())
}

/// Renders days since 1970-01-01 back to `YYYY-MM-DD`.
pub fn days_to_date(days: i64) -> String {
    let d = EPOCH + chrono::Duration::days(days);
    d.format("%Y-%m-%d").to_string()
}

/// Runtime scalar. Text carries the dictionary code; the owning column holds
/// the dictionary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Date(i64),
    Code(u32),
}

/// Named column.
#[derive(Debug, Clone)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

/// Immutable columnar relation.
#[derive(Debug, Clone)]
pub struct Table {
    name: String,
    columns: Vec<Column>,
    row_count: usize,
}

impl Table {
    /// Builds a table, checking that column lengths agree and names are
    /// unique.
    pub fn new(name: impl Into<String>, columns: Vec<Column>) -> Result<Table> {
        let name = name.into();
        let row_count = columns.first().map(|c| c.data.len()).unwrap_or(0);
        let mut seen = HashSet::new();
        for c in &columns {
            if c.data.len() != row_count {
                return Err(Error::Internal(format!(
                    "column '{}' has {} rows, expected {}",
                    c.name,
                    c.data.len(),
                    row_count
                )));
            }
            if !seen.insert(c.name.clone()) {
                return Err(Error::Internal(format!("duplicate column '{}'", c.name)));
            }
        }
        Ok(Table {
            name,
            columns,
            row_count,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.iter().any(|c| c.name == name)
    }

    pub fn schema(&self) -> Vec<(String, ColumnType)> {
        self.columns
            .iter()
            .map(|c| (c.name.clone(), c.data.column_type()))
            .collect()
    }
}

/// Exact number of distinct values in a column. This feeds the cost model,
/// so it is computed by enumeration, never estimated.
pub fn distinct_count(table: &Table, column: &str) -> Result<u64> {
    let col = table.column(column)?;
    let n = match &col.data {
        ColumnData::Int64(v) | ColumnData::Date(v) => v.iter().collect::<HashSet<_>>().len(),
        ColumnData::Float64(v) => v.iter().map(|f| f.to_bits()).collect::<HashSet<_>>().len(),
        ColumnData::Text { codes, .. } => codes.iter().collect::<HashSet<_>>().len(),
    };
    Ok(n as u64)
}
