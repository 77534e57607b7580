//! Session facade: a catalog, an executor, and an optimizer configuration.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::executor::{Executor, ResultSet};
use crate::optimizer::{evaluate_and_push_down, OptimizerConfig, PushDownReport};
use crate::plan::PlanNode;
use crate::sql::parse;
use crate::storage::{generate, load_csv, write_csv, ColumnType, GeneratorSpec, Table};

/// Schema manifest written next to generated CSV files so a directory can
/// be reloaded without re-declaring column types.
#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub tables: Vec<ManifestTable>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ManifestTable {
    pub name: String,
    pub columns: Vec<(String, ColumnType)>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes a database as CSV files plus a manifest.
pub fn save_dir(tables: &[Table], schema_name: &str, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let manifest = Manifest {
        schema: schema_name.to_string(),
        tables: tables
            .iter()
            .map(|t| ManifestTable {
                name: t.name().to_string(),
                columns: t.schema(),
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Internal(format!("manifest serialization: {e}")))?;
    std::fs::write(dir.join(MANIFEST_FILE), json)?;
    for t in tables {
        write_csv(t, dir.join(format!("{}.csv", t.name())))?;
    }
    Ok(())
}

/// Result of one query: rows, final plan, and the optimizer's report.
#[derive(Debug)]
pub struct QueryOutput {
    pub result: ResultSet,
    pub plan: PlanNode,
    pub report: PushDownReport,
    /// Wall time from query string to finished execution, microseconds.
    pub micros: u64,
}

#[derive(Debug, Default)]
pub struct Engine {
    pub catalog: Catalog,
    pub executor: Executor,
    pub config: OptimizerConfig,
}

impl Engine {
    pub fn new() -> Engine {
        Engine::default()
    }

    pub fn register(&mut self, table: Table) -> Result<()> {
        self.catalog.register(table)?;
        Ok(())
    }

    /// Generates and registers a database; returns the table names.
    pub fn generate(&mut self, spec: &GeneratorSpec) -> Result<Vec<String>> {
        let tables = generate(spec)?;
        let names = tables.iter().map(|t| t.name().to_string()).collect();
        for t in tables {
            self.register(t)?;
        }
        Ok(names)
    }

    /// Loads every table listed in a directory's manifest.
    pub fn load_dir(&mut self, dir: impl AsRef<Path>) -> Result<Vec<String>> {
        let dir = dir.as_ref();
        let json = std::fs::read_to_string(dir.join(MANIFEST_FILE))?;
        let manifest: Manifest = serde_json::from_str(&json)
            .map_err(|e| Error::Internal(format!("manifest parse: {e}")))?;
        let mut names = Vec::new();
        for mt in &manifest.tables {
            let table = load_csv(dir.join(format!("{}.csv", mt.name)), &mt.columns)?;
            names.push(table.name().to_string());
            self.register(table)?;
        }
        Ok(names)
    }

    /// Parses, optimizes, and executes a query. The recorded time spans the
    /// whole pipeline, query string to final result.
    ///
    /// Safe to call from multiple threads: the catalog is read-only except
    /// for temp-table registration, which is internally synchronized.
    /// Materialized temporaries accumulate until `clear_temps`.
    pub fn query(&self, sql: &str) -> Result<QueryOutput> {
        let t0 = Instant::now();
        let raw = parse(sql, &self.catalog)?;
        let (plan, report) =
            evaluate_and_push_down(&raw, &self.config, &self.catalog, &self.executor)?;
        let result = self.executor.execute_rows(&self.catalog, &plan)?;
        let micros = t0.elapsed().as_micros() as u64;
        Ok(QueryOutput {
            result,
            plan,
            report,
            micros,
        })
    }

    /// Drops every materialized temporary table. Plans returned by earlier
    /// queries must not be re-executed afterwards.
    pub fn clear_temps(&self) {
        self.catalog.clear_temps();
    }
}
