//! Hand-constructed demonstration datasets for the estimation-error and
//! plan-flip experiments.

use std::sync::Arc;

use crate::error::Result;
use crate::storage::{Column, ColumnData, Table};

fn int_col(name: &str, values: Vec<i64>) -> Column {
    Column {
        name: name.into(),
        data: ColumnData::Int64(Arc::new(values)),
    }
}

fn float_col(name: &str, values: Vec<f64>) -> Column {
    Column {
        name: name.into(),
        data: ColumnData::Float64(Arc::new(values)),
    }
}

/// The standard predicate over the overlap table `r`.
pub const OVERLAP_PREDICATE: &str = "a = 1 AND b > 10 AND b < 90 AND (c = 1 OR c = 2)";

/// Full three-table query for the overlap scenario.
pub fn overlap_query() -> String {
    format!(
        "SELECT COUNT(*) FROM r, s, t WHERE a = s_a AND s_b = t_b AND {}",
        OVERLAP_PREDICATE
    )
}

/// Builds a three-table database where the four predicates over `r`
/// overlap almost completely: each leaf looks independently selective, but
/// their conjunction keeps 16.7% of the rows.
///
/// The table shapes mirror the classic mis-estimation setup: `r` has
/// `r_rows` rows, `s` has `r_rows / 120` rows keyed by `s_a`, `t` has
/// `r_rows / 600` rows keyed by `t_b`, and `s.s_b` spans `t`'s key domain.
/// Uniform per-leaf factors multiply to about 0.0015 (equality 1/5,
/// inequalities 1/3 each, the OR over 29 distinct values about 0.068)
/// while the true conjunction factor is exactly 0.167.
///
/// `r_rows` must be a positive multiple of 6000.
pub fn overlap_dataset(r_rows: usize) -> Result<Vec<Table>> {
    assert!(r_rows > 0 && r_rows.is_multiple_of(6000), "r_rows must be a multiple of 6000");
    let s_rows = r_rows / 120;
    let t_rows = r_rows / 600;

    // Row layout of r:
    //   [0, 16.7%)      a=1, b in range, c=1   -> satisfies everything
    //   [16.7%, 20%)    a=1, b out of range, c=2
    //   [20%, 100%)     a uniform over 2..=5, c uniform over 3..=29,
    //                   b in range on a further 16.7% so its marginal is 1/3
    let conj = r_rows * 167 / 1000; // exact: r_rows divisible by 1000
    let a_block = r_rows / 5;
    let extra_b = conj; // rows [20%, 36.7%) keep b in range
    let mut a = Vec::with_capacity(r_rows);
    let mut b = Vec::with_capacity(r_rows);
    let mut c = Vec::with_capacity(r_rows);
    let mut d = Vec::with_capacity(r_rows);
    for i in 0..r_rows {
        if i < conj {
            a.push(1);
            b.push(50);
            c.push(1);
        } else if i < a_block {
            a.push(1);
            b.push(100);
            c.push(2);
        } else {
            a.push(2 + (i as i64) % 4);
            b.push(if i < a_block + extra_b { 50 } else { 0 });
            c.push(3 + (i as i64) % 27);
        }
        d.push(i as f64 * 0.5);
    }
    let r = Table::new(
        "r",
        vec![
            int_col("a", a),
            int_col("b", b),
            int_col("c", c),
            float_col("d", d),
        ],
    )?;

    let s = Table::new(
        "s",
        vec![
            int_col("s_a", (1..=s_rows as i64).collect()),
            int_col(
                "s_b",
                (0..s_rows).map(|i| 1 + (i as i64) % t_rows as i64).collect(),
            ),
            int_col("e", (0..s_rows as i64).collect()),
        ],
    )?;

    let t = Table::new(
        "t",
        vec![
            int_col("t_b", (1..=t_rows as i64).collect()),
            int_col("f", (0..t_rows as i64).collect()),
        ],
    )?;

    Ok(vec![r, s, t])
}

/// Control table whose attributes really are independent: `x` uniform over
/// five values, `y` over a 97-value range, `z` over 29 values, generated
/// with coprime strides so the joint distribution is uniform.
pub fn independent_dataset(rows: usize) -> Result<Table> {
    let mut x = Vec::with_capacity(rows);
    let mut y = Vec::with_capacity(rows);
    let mut z = Vec::with_capacity(rows);
    for i in 0..rows as i64 {
        x.push(1 + i % 5);
        y.push(i % 97);
        z.push(1 + i % 29);
    }
    Table::new("indep", vec![int_col("x", x), int_col("y", y), int_col("z", z)])
}

/// Predicates over the independent table (same shape as the overlap ones).
pub const INDEPENDENT_PREDICATE: &str = "x = 1 AND y > 10 AND y < 43 AND (z = 1 OR z = 2)";
