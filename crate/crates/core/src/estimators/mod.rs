//! Cardinality estimation strategies.
//!
//! One dispatch surface covers the classic synopsis-based estimators
//! (uniform heuristics, equi-width/equi-depth histograms, count-min sketch,
//! row sampling) and the exact strategy, which obtains the true cardinality
//! by executing a COUNT aggregate over the candidate selection.

mod histogram;
mod sample;
mod sketch;

pub use histogram::{EquiDepthHistogram, EquiWidthHistogram};
pub use sample::RowSample;
pub use sketch::CountMinSketch;

use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::executor::Executor;
use crate::plan::{attach_count, PlanNode};
use crate::sql::{CmpOp, PredicateExpr};
use crate::storage::{ColumnData, Value};

/// Which estimation strategy the optimizer consults.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    /// Execute a COUNT sub-query during planning; always exact.
    Exact,
    Uniform,
    EquiWidth,
    EquiDepth,
    CountMin,
    Sample,
}

impl EstimatorKind {
    pub fn parse(s: &str) -> Result<EstimatorKind> {
        match s {
            "exact" => Ok(EstimatorKind::Exact),
            "uniform" => Ok(EstimatorKind::Uniform),
            "equiwidth" => Ok(EstimatorKind::EquiWidth),
            "equidepth" => Ok(EstimatorKind::EquiDepth),
            "cms" => Ok(EstimatorKind::CountMin),
            "sample" => Ok(EstimatorKind::Sample),
            other => Err(Error::Config(format!("unknown estimator '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Exact => "exact",
            EstimatorKind::Uniform => "uniform",
            EstimatorKind::EquiWidth => "equiwidth",
            EstimatorKind::EquiDepth => "equidepth",
            EstimatorKind::CountMin => "cms",
            EstimatorKind::Sample => "sample",
        }
    }

    pub fn all() -> [EstimatorKind; 6] {
        [
            EstimatorKind::Exact,
            EstimatorKind::Uniform,
            EstimatorKind::EquiWidth,
            EstimatorKind::EquiDepth,
            EstimatorKind::CountMin,
            EstimatorKind::Sample,
        ]
    }
}

/// A cardinality estimate together with its selectivity factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectivityEstimate {
    pub cardinality: f64,
    /// cardinality / row_count, in [0,1].
    pub factor: f64,
    /// True only for the exact strategy.
    pub exact: bool,
}

impl SelectivityEstimate {
    pub fn from_cardinality(cardinality: f64, row_count: f64, exact: bool) -> SelectivityEstimate {
        let factor = if row_count > 0.0 {
            cardinality / row_count
        } else {
            0.0
        };
        SelectivityEstimate {
            cardinality,
            factor,
            exact,
        }
    }

    pub fn from_factor(factor: f64, row_count: f64, exact: bool) -> SelectivityEstimate {
        SelectivityEstimate {
            cardinality: factor * row_count,
            factor,
            exact,
        }
    }

    pub fn zero() -> SelectivityEstimate {
        SelectivityEstimate {
            cardinality: 0.0,
            factor: 0.0,
            exact: false,
        }
    }
}

/// Uniform-distribution estimate for `column = constant`: |R| / V(R,A).
pub fn uniform_equality(row_count: u64, distinct: u64) -> Result<SelectivityEstimate> {
    if distinct == 0 {
        if row_count == 0 {
            return Ok(SelectivityEstimate::zero());
        }
        return Err(Error::InvalidStatistics(
            "distinct count is zero for a non-empty column".into(),
        ));
    }
    let factor = 1.0 / distinct as f64;
    Ok(SelectivityEstimate::from_factor(
        factor,
        row_count as f64,
        false,
    ))
}

/// Heuristic estimate for an inequality predicate: |R| / 3.
pub fn uniform_inequality(row_count: u64) -> SelectivityEstimate {
    SelectivityEstimate::from_factor(1.0 / 3.0, row_count as f64, false)
}

fn check_factor(f: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::InvalidStatistics(format!(
            "selectivity factor {f} outside [0,1]"
        )));
    }
    Ok(f)
}

/// Product of the factors (independence assumption for AND). The empty
/// product is 1.
pub fn combine_and(factors: &[f64]) -> Result<f64> {
    let mut product = 1.0;
    for &f in factors {
        product *= check_factor(f)?;
    }
    Ok(product)
}

/// f1 + f2 - f1*f2: independent union, joint probability subtracted.
/// Computed as 1 - (1-f1)(1-f2), which is the same quantity but exact at
/// the 0 and 1 boundaries.
pub fn combine_or(f1: f64, f2: f64) -> Result<f64> {
    let f1 = check_factor(f1)?;
    let f2 = check_factor(f2)?;
    Ok(1.0 - (1.0 - f1) * (1.0 - f2))
}

/// Hash key for sketch indexing: the value's bit pattern per column type.
pub(crate) fn sketch_key(value: Value) -> u64 {
    match value {
        Value::Int(v) | Value::Date(v) => v as u64,
        Value::Float(v) => v.to_bits(),
        Value::Code(c) => c as u64,
    }
}

fn literal_key(lit: &crate::sql::Literal) -> Option<u64> {
    match lit {
        crate::sql::Literal::Int(v) | crate::sql::Literal::Date(v) => Some(*v as u64),
        crate::sql::Literal::Float(v) => Some(v.to_bits()),
        crate::sql::Literal::Text { code, .. } => code.map(|c| c as u64),
    }
}

fn literal_as_f64(lit: &crate::sql::Literal) -> Option<f64> {
    match lit {
        crate::sql::Literal::Int(v) | crate::sql::Literal::Date(v) => Some(*v as f64),
        crate::sql::Literal::Float(v) => Some(*v),
        crate::sql::Literal::Text { .. } => None,
    }
}

/// Estimates the cardinality of `pred` over `table` using the requested
/// strategy.
///
/// The exact strategy builds the fused filter/project sub-plan, attaches a
/// temporary COUNT aggregate, and executes it. The synopsis strategies
/// estimate each comparison leaf and combine the factors under the usual
/// independence assumptions; sampling evaluates the whole predicate tree
/// over its drawn rows.
pub fn estimate(
    pred: &PredicateExpr,
    table: &str,
    kind: EstimatorKind,
    catalog: &Catalog,
    executor: &Executor,
) -> Result<SelectivityEstimate> {
    let rows = catalog.row_count(table)?;
    if rows == 0 {
        return Ok(SelectivityEstimate::zero());
    }
    match kind {
        EstimatorKind::Exact => {
            let mut columns: Vec<String> = pred.columns().into_iter().map(|c| c.column).collect();
            columns.sort();
            columns.dedup();
            let compound = PlanNode::Compound {
                pred: pred.clone(),
                columns,
                count_cap: None,
                input: Box::new(PlanNode::Scan {
                    table: table.to_string(),
                }),
            };
            let count = executor.execute_count(catalog, &attach_count(compound))?;
            Ok(SelectivityEstimate {
                cardinality: count as f64,
                factor: count as f64 / rows as f64,
                exact: true,
            })
        }
        EstimatorKind::Sample => {
            let syn = catalog.sample_synopsis_arc(table)?;
            let t = catalog.table(table)?;
            match &*syn {
                crate::catalog::Synopsis::Sample(s) => Ok(s.estimate(pred, &t)),
                _ => Err(Error::Internal("synopsis kind mismatch".into())),
            }
        }
        _ => {
            let factor = synopsis_factor(pred, table, kind, catalog)?;
            Ok(SelectivityEstimate::from_factor(
                factor,
                rows as f64,
                false,
            ))
        }
    }
}

fn synopsis_factor(
    pred: &PredicateExpr,
    table: &str,
    kind: EstimatorKind,
    catalog: &Catalog,
) -> Result<f64> {
    match pred {
        PredicateExpr::And(children) => {
            let factors: Vec<f64> = children
                .iter()
                .map(|c| synopsis_factor(c, table, kind, catalog))
                .collect::<Result<_>>()?;
            combine_and(&factors)
        }
        PredicateExpr::Or(children) => {
            let mut it = children.iter();
            let first = synopsis_factor(it.next().expect("or has children"), table, kind, catalog)?;
            it.try_fold(first, |acc, c| {
                combine_or(acc, synopsis_factor(c, table, kind, catalog)?)
            })
        }
        PredicateExpr::ColumnEq { .. } => Err(Error::UnsupportedPredicate(
            "column-to-column comparison has no synopsis estimate".into(),
        )),
        PredicateExpr::Compare { column, op, literal } => {
            leaf_factor(table, &column.column, *op, literal, kind, catalog)
        }
    }
}

fn leaf_factor(
    table: &str,
    column: &str,
    op: CmpOp,
    literal: &crate::sql::Literal,
    kind: EstimatorKind,
    catalog: &Catalog,
) -> Result<f64> {
    let rows = catalog.row_count(table)?;
    let uniform = |op: CmpOp| -> Result<f64> {
        match op {
            CmpOp::Eq => {
                let v = catalog.distinct(table, column)?;
                Ok(uniform_equality(rows, v)?.factor)
            }
            _ => Ok(uniform_inequality(rows).factor),
        }
    };
    match kind {
        EstimatorKind::Uniform => uniform(op),
        EstimatorKind::EquiWidth | EstimatorKind::EquiDepth => {
            let numeric = {
                let t = catalog.table(table)?;
                !matches!(t.column(column)?.data, ColumnData::Text { .. })
            };
            if !numeric {
                // Histograms cover numeric columns only; text equality falls
                // back to the uniform formula over dictionary codes.
                return uniform(op);
            }
            let Some(value) = literal_as_f64(literal) else {
                return uniform(op);
            };
            let card = if kind == EstimatorKind::EquiWidth {
                let syn = catalog.equi_width_synopsis(table, column)?;
                match &*syn {
                    crate::catalog::Synopsis::EquiWidth(h) => match op {
                        CmpOp::Eq => h.estimate_equality(value),
                        _ => h.estimate_range(op, value),
                    },
                    _ => return Err(Error::Internal("synopsis kind mismatch".into())),
                }
            } else {
                let syn = catalog.equi_depth_synopsis(table, column)?;
                match &*syn {
                    crate::catalog::Synopsis::EquiDepth(h) => match op {
                        CmpOp::Eq => h.estimate_equality(value),
                        _ => h.estimate_range(op, value),
                    },
                    _ => return Err(Error::Internal("synopsis kind mismatch".into())),
                }
            };
            if rows == 0 {
                return Ok(0.0);
            }
            Ok((card / rows as f64).clamp(0.0, 1.0))
        }
        EstimatorKind::CountMin => match op {
            CmpOp::Eq => {
                let syn = catalog.count_min_synopsis(table, column)?;
                let card = match &*syn {
                    crate::catalog::Synopsis::CountMin(s) => match literal_key(literal) {
                        Some(key) => s.point(key) as f64,
                        // Unresolvable text literal: the value is absent.
                        None => 0.0,
                    },
                    _ => return Err(Error::Internal("synopsis kind mismatch".into())),
                };
                Ok((card / rows as f64).clamp(0.0, 1.0))
            }
            // The sketch answers point queries only; ranges fall back to the
            // uniform heuristic.
            _ => uniform(op),
        },
        EstimatorKind::Exact | EstimatorKind::Sample => unreachable!("handled by estimate()"),
    }
}
