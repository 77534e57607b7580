//! Command-line front end: data generation, ad-hoc queries, and the
//! benchmark suites.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use countdown::bench::{self, Report};
use countdown::engine::{save_dir, Engine};
use countdown::error::{Error, Result};
use countdown::estimators::EstimatorKind;
use countdown::executor::Executor;
use countdown::optimizer::{Decision, MaxSelectivity, OptimizerConfig};
use countdown::plan::explain;
use countdown::storage::{generate, GeneratorSpec, SchemaKind};

#[derive(Parser)]
#[command(
    name = "countdown",
    about = "In-memory columnar query engine with COUNT-driven selection push-down",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct DataOpts {
    /// Directory produced by `gen` (takes precedence over generation flags).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Schema kind to generate: tpch_lite or ssb_lite.
    #[arg(long, default_value = "tpch_lite")]
    schema: String,
    /// Scale factor (orders has 1.5M rows at scale 1).
    #[arg(long, default_value_t = 0.01)]
    scale: f64,
    /// Zipf exponent for foreign keys and enumerated attributes (0 = uniform).
    #[arg(long, default_value_t = 0.0)]
    skew: f64,
    /// Correlation of the designated attribute pairs, in [0,1].
    #[arg(long, default_value_t = 1.0)]
    correlation: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

impl DataOpts {
    fn spec(&self) -> Result<GeneratorSpec> {
        Ok(GeneratorSpec {
            schema: SchemaKind::parse(&self.schema)?,
            scale: self.scale,
            skew: self.skew,
            correlation: self.correlation,
            seed: self.seed,
        })
    }

    fn build_engine(&self) -> Result<Engine> {
        let mut engine = Engine::new();
        match &self.data {
            Some(dir) => {
                engine.load_dir(dir)?;
            }
            None => {
                engine.generate(&self.spec()?)?;
            }
        }
        Ok(engine)
    }
}

#[derive(Args, Debug)]
struct OptOpts {
    /// Selection push-down: on or off.
    #[arg(long, default_value = "on")]
    pushdown: String,
    /// exact | uniform | equiwidth | equidepth | cms | sample
    #[arg(long, default_value = "exact")]
    estimator: String,
    /// Minimum table size eligible for push-down.
    #[arg(long = "min-table-size", default_value_t = 0)]
    min_table_size: u64,
    /// Admission bound: a ratio like 0.05, or an absolute row count like
    /// 3300000 (integers are absolute; "400abs" also works).
    #[arg(long = "max-selectivity", default_value = "1.0")]
    max_selectivity: String,
    /// Executor row cap.
    #[arg(long = "max-rows")]
    max_rows: Option<u64>,
    /// Key-value config file; command-line flags win on conflicts.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn parse_max_selectivity(s: &str) -> Result<MaxSelectivity> {
    let s = s.trim();
    if let Some(stripped) = s.strip_suffix("abs") {
        let n: u64 = stripped
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad absolute max selectivity '{s}'")))?;
        return Ok(MaxSelectivity::Absolute(n));
    }
    if !s.contains('.') {
        if let Ok(n) = s.parse::<u64>() {
            // A bare integer is an absolute row bound, except 0 and 1 which
            // read naturally as ratios.
            if n > 1 {
                return Ok(MaxSelectivity::Absolute(n));
            }
            return Ok(MaxSelectivity::Ratio(n as f64));
        }
    }
    let r: f64 = s
        .parse()
        .map_err(|_| Error::Config(format!("bad max selectivity '{s}'")))?;
    let ms = MaxSelectivity::Ratio(r);
    ms.validate()?;
    Ok(ms)
}

impl OptOpts {
    fn apply(&self, engine: &mut Engine, seed: u64) -> Result<()> {
        // Config file first, flags override.
        let mut estimator = None;
        let mut min_table_size = None;
        let mut max_selectivity = None;
        let mut max_rows = None;
        if let Some(path) = &self.config {
            for (lineno, line) in std::fs::read_to_string(path)?.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    Error::Config(format!("{}:{}: expected key = value", path.display(), lineno + 1))
                })?;
                match key.trim() {
                    "estimator" => estimator = Some(EstimatorKind::parse(value.trim())?),
                    "pushdown.min_table_size" => {
                        min_table_size = Some(value.trim().parse().map_err(|_| {
                            Error::Config(format!("bad pushdown.min_table_size '{value}'"))
                        })?)
                    }
                    "pushdown.max_selectivity" => {
                        max_selectivity = Some(parse_max_selectivity(value.trim())?)
                    }
                    "executor.max_rows" => {
                        max_rows = Some(value.trim().parse().map_err(|_| {
                            Error::Config(format!("bad executor.max_rows '{value}'"))
                        })?)
                    }
                    other => {
                        return Err(Error::Config(format!("unknown config key '{other}'")));
                    }
                }
            }
        }
        let pushdown_enabled = match self.pushdown.as_str() {
            "on" => true,
            "off" => false,
            other => return Err(Error::Config(format!("--pushdown must be on|off, got '{other}'"))),
        };
        engine.config = OptimizerConfig {
            estimator: if self.estimator != "exact" || estimator.is_none() {
                EstimatorKind::parse(&self.estimator)?
            } else {
                estimator.unwrap_or(EstimatorKind::Exact)
            },
            push_down_min_table_size: if self.min_table_size != 0 {
                self.min_table_size
            } else {
                min_table_size.unwrap_or(0)
            },
            push_down_max_selectivity: if self.max_selectivity != "1.0" {
                parse_max_selectivity(&self.max_selectivity)?
            } else {
                max_selectivity.unwrap_or(MaxSelectivity::Ratio(1.0))
            },
            pushdown_enabled,
            seed,
        };
        if let Some(cap) = self.max_rows.or(max_rows) {
            engine.executor = Executor::with_max_rows(cap);
        }
        Ok(())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic database as CSV files plus a manifest.
    Gen {
        #[command(flatten)]
        data: DataOpts,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Load a generated directory and print the table summary.
    Load {
        #[arg(long)]
        data: PathBuf,
    },
    /// Dump catalog statistics for one table.
    Stats {
        table: String,
        #[command(flatten)]
        data: DataOpts,
    },
    /// Parse, optimize, and execute a query.
    Query {
        sql: String,
        #[command(flatten)]
        data: DataOpts,
        #[command(flatten)]
        opt: OptOpts,
        /// Print the final plan and per-table push-down decisions.
        #[arg(long)]
        explain: bool,
        /// Print executor counters.
        #[arg(long)]
        stats: bool,
    },
    /// Run a benchmark suite: overhead | attrs | selectivity | crossover |
    /// joins | errors | queries.
    Bench {
        suite: String,
        #[command(flatten)]
        data: DataOpts,
        /// Table to sweep (crossover suite).
        #[arg(long)]
        table: Option<String>,
        /// Comma-separated selectivity fractions for sweeps.
        #[arg(long)]
        fractions: Option<String>,
        /// Best-of-k repetitions per measured query.
        #[arg(long, default_value_t = 3)]
        repeat: usize,
        /// Minimum table size for push-down eligibility.
        #[arg(long = "min-table-size", default_value_t = 0)]
        min_table_size: u64,
        /// Rows of the demonstration table (errors suite).
        #[arg(long, default_value_t = 60000)]
        rows: usize,
        /// Write the report as CSV here (in addition to stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn print_result(out: &countdown::QueryOutput) {
    let mut report = Report::new(
        "result",
        &out.result
            .columns
            .iter()
            .map(|c| c.name.as_str())
            .collect::<Vec<_>>(),
    );
    for row in out.result.render_rows() {
        report.push(row);
    }
    print!("{}", report.to_table());
    println!("({} rows in {} us)", out.result.row_count, out.micros);
}

fn print_report(report: &Report, out: Option<&PathBuf>) -> Result<()> {
    print!("{}", report.to_table());
    if let Some(path) = out {
        std::fs::write(path, report.to_csv())?;
        println!("(csv written to {})", path.display());
    }
    Ok(())
}

fn decision_line(e: &countdown::optimizer::PushDownEntry) -> String {
    let det = match &e.decision {
        Decision::Pushed { temp, rows } => format!("pushed as {temp} ({rows} rows)"),
        Decision::Reverted => "reverted (selectivity above the gate)".into(),
        Decision::Probe => "probe side, never pushed".into(),
        Decision::BelowMinSize => "below min table size".into(),
        Decision::NoSelection => "no selection predicates".into(),
    };
    let extra = match (e.cardinality, e.threshold) {
        (Some(c), Some(t)) => format!(" [cardinality {c:.0}, max {t}]"),
        _ => String::new(),
    };
    let timing = match e.micros {
        Some(us) => format!(" [{us} us]"),
        None => String::new(),
    };
    format!("  {}: {det}{extra}{timing}", e.table)
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Gen { data, out } => {
            let spec = data.spec()?;
            let tables = generate(&spec)?;
            save_dir(&tables, spec.schema.name(), &out)?;
            for t in &tables {
                println!("{}: {} rows", t.name(), t.row_count());
            }
            println!("written to {}", out.display());
        }
        Command::Load { data } => {
            let mut engine = Engine::new();
            let names = engine.load_dir(&data)?;
            for name in names {
                let meta = engine.catalog.meta(&name)?;
                println!("{name}: {} rows", meta.row_count);
            }
        }
        Command::Stats { table, data } => {
            let engine = data.build_engine()?;
            let meta = engine.catalog.meta(&table)?;
            println!("table {table}");
            println!("  rows: {}", meta.row_count);
            let mut cols: Vec<_> = meta.distinct_counts.iter().collect();
            cols.sort();
            for (col, distinct) in cols {
                println!("  {col}: {distinct} distinct");
            }
        }
        Command::Query {
            sql,
            data,
            opt,
            explain: want_explain,
            stats: want_stats,
        } => {
            let mut engine = data.build_engine()?;
            opt.apply(&mut engine, data.seed)?;
            let out = engine.query(&sql)?;
            print_result(&out);
            if want_explain {
                println!("\nplan:");
                print!("{}", explain(&out.plan, &engine.catalog));
                if let Some(order) = &out.report.join_order {
                    println!("join order: {order}");
                }
                if !out.report.entries.is_empty() {
                    println!("push-down decisions:");
                    for e in &out.report.entries {
                        println!("{}", decision_line(e));
                    }
                }
            }
            if want_stats {
                let s = &out.result.stats;
                println!("\nexecution counters:");
                println!("  rows_probed: {}", s.rows_probed);
                println!("  rows_built: {}", s.rows_built);
                println!("  predicate_evals: {}", s.predicate_evals);
                println!(
                    "  intermediate_rows_materialized: {}",
                    s.intermediate_rows_materialized
                );
                for (op, us) in &s.operator_micros {
                    println!("  [{op}] {us} us");
                }
                let o = &out.report.opt_stats;
                println!("optimizer counters:");
                println!("  predicate_evals: {}", o.predicate_evals);
                println!(
                    "  intermediate_rows_materialized: {}",
                    o.intermediate_rows_materialized
                );
            }
        }
        Command::Bench {
            suite,
            data,
            table,
            fractions,
            repeat,
            min_table_size,
            rows,
            out,
        } => {
            let fractions: Vec<f64> = match &fractions {
                Some(s) => s
                    .split(',')
                    .map(|f| {
                        f.trim()
                            .parse()
                            .map_err(|_| Error::Config(format!("bad fraction '{f}'")))
                    })
                    .collect::<Result<_>>()?,
                None => vec![0.00001, 0.0001, 0.001, 0.01, 0.05, 0.1, 0.25, 0.5, 1.0],
            };
            match suite.as_str() {
                "overhead" => {
                    let mut engine = data.build_engine()?;
                    let queries = vec![(
                        "orders_key_eq".to_string(),
                        "SELECT COUNT(*) FROM lineitem, orders \
                         WHERE l_orderkey = o_orderkey AND o_orderkey = 1"
                            .to_string(),
                    ),
                    (
                        "partsupp_key_eq".to_string(),
                        "SELECT COUNT(*) FROM lineitem, partsupp \
                         WHERE l_partkey = ps_partkey AND ps_partkey = 1"
                            .to_string(),
                    ),
                    (
                        "part_key_eq".to_string(),
                        "SELECT COUNT(*) FROM lineitem, part \
                         WHERE l_partkey = p_partkey AND p_partkey = 1"
                            .to_string(),
                    ),
                    (
                        "supplier_key_eq".to_string(),
                        "SELECT COUNT(*) FROM lineitem, supplier \
                         WHERE l_suppkey = s_suppkey AND s_suppkey = 1"
                            .to_string(),
                    )];
                    let report =
                        bench::overhead_suite(&mut engine, &queries, min_table_size, repeat)?;
                    print_report(&report, out.as_ref())?;
                }
                "selectivity" => {
                    let mut engine = data.build_engine()?;
                    let report =
                        bench::selectivity_overhead_pair(&mut engine, min_table_size, repeat)?;
                    print_report(&report, out.as_ref())?;
                }
                "attrs" => {
                    let mut engine = data.build_engine()?;
                    let report = bench::attribute_sweep(&mut engine, min_table_size, repeat)?;
                    print_report(&report, out.as_ref())?;
                }
                "crossover" => {
                    let mut engine = data.build_engine()?;
                    let table = table.unwrap_or_else(|| "orders".to_string());
                    let (report, crossover) =
                        bench::crossover_suite(&mut engine, &table, &fractions, repeat)?;
                    print_report(&report, out.as_ref())?;
                    match crossover {
                        Some(f) => println!("push-down still wins at selectivity {f}"),
                        None => println!("push-down never won on this sweep"),
                    }
                }
                "joins" => {
                    let mut engine = data.build_engine()?;
                    let frac = fractions.first().copied().unwrap_or(0.001);
                    let report = bench::consecutive_join_suite(&mut engine, frac, repeat)?;
                    print_report(&report, out.as_ref())?;
                }
                "errors" => {
                    let mut engine = Engine::new();
                    let r_rows = rows - rows % 6000;
                    for t in bench::scenario::overlap_dataset(r_rows.max(6000))? {
                        engine.register(t)?;
                    }
                    engine.register(bench::scenario::independent_dataset(rows.max(6000))?)?;
                    let report = bench::estimation_error_suite(&mut engine)?;
                    print_report(&report, out.as_ref())?;
                }
                "queries" => {
                    let mut engine = data.build_engine()?;
                    let queries = match SchemaKind::parse(&data.schema)? {
                        SchemaKind::TpchLite => bench::tpch_queries(),
                        SchemaKind::SsbLite => bench::ssb_queries(),
                    };
                    let report =
                        bench::query_suite(&mut engine, &queries, min_table_size, repeat)?;
                    print_report(&report, out.as_ref())?;
                }
                other => {
                    return Err(Error::Config(format!(
                        "unknown suite '{other}' (expected overhead|selectivity|attrs|crossover|joins|errors|queries)"
                    )));
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
