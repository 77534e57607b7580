//! Acceptance suite: one check per engine-level requirement, each printing
//! a PASS/FAIL line. Run with `cargo test --test acceptance -- --nocapture`
//! to see the per-criterion report.

mod common;

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};

use countdown::bench::{self, scenario};
use countdown::catalog::Catalog;
use countdown::engine::Engine;
use countdown::estimators::{
    combine_and, estimate, CountMinSketch, EquiDepthHistogram, EstimatorKind, RowSample,
};
use countdown::executor::Executor;
use countdown::optimizer::{
    assemble_join_tree, build_join_graph, estimate_join_size, evaluate_and_push_down, order_joins,
    Decision, MaxSelectivity, OptimizerConfig,
};
use countdown::plan::finish_tree;
use countdown::sql::{classify_predicates, parse};
use countdown::storage::{GeneratorSpec, SchemaKind};

use common::{assert_same_multiset, nested_loop_run, random_db, random_query, result_cells};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cfg(estimator: EstimatorKind, max: MaxSelectivity, enabled: bool) -> OptimizerConfig {
    OptimizerConfig {
        estimator,
        push_down_min_table_size: 0,
        push_down_max_selectivity: max,
        pushdown_enabled: enabled,
        seed: 0,
    }
}

/// Registers the overlap demonstration database (600K / 5K / 1K rows).
fn overlap_catalog() -> Catalog {
    let mut cat = Catalog::new();
    for t in scenario::overlap_dataset(600_000).expect("overlap dataset") {
        cat.register(t).expect("register");
    }
    cat
}

// 1. Arithmetic fidelity of the selectivity and join-size formulas.
fn criterion_1() -> String {
    let combined = combine_and(&[0.2, 0.167, 0.167, 0.27]).expect("factors valid");
    assert!(
        (combined - 0.0015).abs() <= 5e-5,
        "combined factor {combined}"
    );
    let sigma_r = 600e6 * combined;
    assert!((sigma_r - 0.9e6).abs() <= 3e4, "sigma(R) {sigma_r}");

    // Estimated cards: filtered R joined on S's key vs T joined on S.
    let filtered = estimate_join_size(sigma_r, 5e6, 5.0, 5e6).expect("join size");
    assert!((filtered - sigma_r).abs() < 1.0);
    let t_s = estimate_join_size(1e6, 5e6, 1e6, 1e6).expect("join size");
    assert_eq!(t_s, 5e6);
    assert!(filtered < t_s, "estimated plan comparison");

    // Actual cards: 0.167 x 600e6 is exactly 100.2 million and flips the
    // comparison.
    let actual_sigma = 0.167f64 * 600e6;
    assert_eq!(actual_sigma, 100.2e6);
    let actual_first = estimate_join_size(actual_sigma, 5e6, 5.0, 5e6).expect("join size");
    assert_eq!(actual_first, 100.2e6);
    assert!(actual_first > t_s, "actual plan comparison flips");
    format!("combined {combined:.6}, joins {filtered:.0} vs {t_s:.0}, actual {actual_first:.0}")
}

// 2. The worked plan flip on the desk-scale replica.
fn criterion_2() -> String {
    let cat = overlap_catalog();
    let exec = Executor::new();
    let raw = parse(&scenario::overlap_query(), &cat).expect("parse");
    let (joins, selections) = classify_predicates(&raw).expect("classify");
    let pred = &selections["r"];

    let est_uniform = estimate(pred, "r", EstimatorKind::Uniform, &cat, &exec).expect("estimate");
    let est_exact = estimate(pred, "r", EstimatorKind::Exact, &cat, &exec).expect("estimate");
    assert!(
        (est_uniform.factor - 0.0015).abs() <= 5e-5,
        "uniform factor {}",
        est_uniform.factor
    );
    assert_eq!(est_exact.cardinality, 100_200.0);

    let no_push = HashMap::new();
    let mut orders = Vec::new();
    for est in [&est_uniform, &est_exact] {
        let cards: HashMap<String, f64> = [
            ("r".to_string(), est.cardinality),
            ("s".to_string(), 5_000.0),
            ("t".to_string(), 1_000.0),
        ]
        .into_iter()
        .collect();
        let graph = build_join_graph(&raw.scans, &joins, &cards, &cat, &no_push).expect("graph");
        orders.push(order_joins(&graph).expect("order"));
    }
    assert_eq!(orders[0].order(), vec!["r", "s", "t"], "uniform order");
    assert_eq!(orders[1].order(), vec!["t", "s", "r"], "exact order");
    assert!(!orders[1].steps[1].table_is_build, "sigma(r) must probe");

    // Ordering dominance: the exact-chosen order's first intermediate
    // estimate never exceeds the uniform-chosen order re-evaluated with
    // the true cardinality.
    let uniform_with_truth =
        estimate_join_size(est_exact.cardinality, 5_000.0, 5.0, 5_000.0).expect("join size");
    assert!(orders[1].steps[0].est_rows <= uniform_with_truth);

    // Execute both orders and compare materialized intermediate rows.
    let remaining = Some(pred.clone());
    let mut inters = Vec::new();
    for seq in &orders {
        let tree = finish_tree(
            &raw,
            remaining.clone(),
            assemble_join_tree(seq, &no_push),
            &cat,
        )
        .expect("tree");
        let rs = exec.execute_rows(&cat, &tree).expect("execute");
        assert_eq!(rs.scalar_i64().expect("count"), 100_200);
        inters.push(rs.stats.intermediate_rows_materialized);
    }
    assert!(
        inters[0] >= 10 * inters[1],
        "intermediates {inters:?} not 10x apart"
    );
    format!(
        "orders {} / {}, intermediates {} vs {}",
        orders[0].describe(),
        orders[1].describe(),
        inters[0],
        inters[1]
    )
}

// 3. The exact strategy equals brute force on randomized predicates.
fn criterion_3() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc3);
    let exec = Executor::new();
    let mut cases = 0;
    for round in 0..50 {
        let mut cat = Catalog::new();
        let tag = format!("x{round}_");
        let db = random_db(&mut rng, &tag, 10_000);
        let fact_name = format!("{tag}fact");
        let fact = db.last().expect("fact").clone();
        for t in db {
            cat.register(t).expect("register");
        }
        for _ in 0..20 {
            let pred_sql = common::random_predicate_sql(&mut rng, &fact, 3);
            let sql = format!("SELECT COUNT(*) FROM {fact_name} WHERE {pred_sql}");
            let raw = parse(&sql, &cat).expect("parse");
            let truth = match nested_loop_run(&raw, &cat)[0][0] {
                common::Cell::Int(v) => v as f64,
                ref other => panic!("unexpected count cell {other:?}"),
            };
            let (_, selections) = classify_predicates(&raw).expect("classify");
            let est = estimate(
                &selections[&fact_name],
                &fact_name,
                EstimatorKind::Exact,
                &cat,
                &exec,
            )
            .expect("estimate");
            assert!(est.exact);
            assert_eq!(est.cardinality, truth, "case: {sql}");
            cases += 1;
        }
    }
    assert!(cases >= 1000);
    format!("{cases} randomized predicates, zero mismatches")
}

/// Random query over a random star database where every per-table selection
/// matches at least one row (so a zero-count never sneaks a push past a
/// Ratio(0) gate).
fn nonempty_query(rng: &mut ChaCha8Rng, tag: &str, cat: &Catalog, db: &[countdown::storage::Table]) -> String {
    'outer: for _ in 0..200 {
        let sql = random_query(rng, tag, db);
        let raw = match parse(&sql, cat) {
            Ok(r) => r,
            Err(_) => continue,
        };
        let (_, selections) = classify_predicates(&raw).expect("classify");
        for (table, pred) in &selections {
            let t = cat.table(table).expect("table");
            let any = (0..t.row_count()).any(|row| pred.matches_row(&t, row));
            if !any {
                continue 'outer;
            }
        }
        return sql;
    }
    panic!("could not generate a query with non-empty selections")
}

// 4. Structural conformance of the push-down pass.
fn criterion_4() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc4);
    let exec = Executor::new();
    let mut checked = 0;
    for round in 0..25 {
        let mut cat = Catalog::new();
        let tag = format!("q{round}_");
        let db = random_db(&mut rng, &tag, 800);
        let sizes: HashMap<String, u64> = db
            .iter()
            .map(|t| (t.name().to_string(), t.row_count() as u64))
            .collect();
        for t in &db {
            cat.register(t.clone()).expect("register");
        }
        for _ in 0..5 {
            let sql = nonempty_query(&mut rng, &tag, &cat, &db);
            let raw = parse(&sql, &cat).expect("parse");

            // (a) Ratio(0) produces the push-down-disabled tree.
            let (gated, _) = evaluate_and_push_down(
                &raw,
                &cfg(EstimatorKind::Exact, MaxSelectivity::Ratio(0.0), true),
                &cat,
                &exec,
            )
            .expect("optimize");
            let (plain, _) = evaluate_and_push_down(
                &raw,
                &cfg(EstimatorKind::Exact, MaxSelectivity::Ratio(0.0), false),
                &cat,
                &exec,
            )
            .expect("optimize");
            assert_eq!(gated, plain, "ratio-0 tree differs: {sql}");

            // (b) Ratio(1.0) pushes every qualifying non-probe selection.
            let (_, report) = evaluate_and_push_down(
                &raw,
                &cfg(EstimatorKind::Exact, MaxSelectivity::Ratio(1.0), true),
                &cat,
                &exec,
            )
            .expect("optimize");
            let (_, selections) = classify_predicates(&raw).expect("classify");
            let probe = report.probe.clone();
            for table in selections.keys() {
                if Some(table.clone()) == probe {
                    continue;
                }
                assert!(
                    matches!(
                        report.decision_for(table),
                        Some(Decision::Pushed { .. })
                    ),
                    "{table} not pushed at ratio 1.0: {sql}"
                );
            }

            // (d) The largest scanned table is never pushed.
            let largest = raw
                .scans
                .iter()
                .max_by(|a, b| {
                    sizes[*a]
                        .cmp(&sizes[*b])
                        .then(b.cmp(a))
                })
                .expect("scans");
            assert!(
                !matches!(
                    report.decision_for(largest),
                    Some(Decision::Pushed { .. })
                ),
                "largest table {largest} was pushed: {sql}"
            );

            // (c) Tables at or below the minimum size are never pushed.
            let min_size = *sizes.values().max().expect("sizes");
            let (_, report) = evaluate_and_push_down(
                &raw,
                &OptimizerConfig {
                    push_down_min_table_size: min_size,
                    ..cfg(EstimatorKind::Exact, MaxSelectivity::Ratio(1.0), true)
                },
                &cat,
                &exec,
            )
            .expect("optimize");
            for t in &raw.scans {
                if sizes[t] <= min_size {
                    assert!(
                        !matches!(report.decision_for(t), Some(Decision::Pushed { .. })),
                        "table {t} below min size was pushed: {sql}"
                    );
                }
            }
            cat.clear_temps();
            checked += 1;
        }
    }
    assert!(checked >= 100);
    format!("{checked} random queries conform structurally")
}

// 5. Result multisets are identical across push-down modes and estimators.
fn criterion_5() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc5);
    let exec = Executor::new();
    let mut cases = 0;
    for round in 0..30 {
        let mut cat = Catalog::new();
        let tag = format!("p{round}_");
        let db = random_db(&mut rng, &tag, 600);
        for t in &db {
            cat.register(t.clone()).expect("register");
        }
        for _ in 0..10 {
            let sql = random_query(&mut rng, &tag, &db);
            let raw = match parse(&sql, &cat) {
                Ok(r) => r,
                Err(e) => panic!("generated query failed to parse: {sql}: {e}"),
            };
            let oracle = nested_loop_run(&raw, &cat);
            let mut reference: Option<Vec<Vec<common::Cell>>> = None;
            for kind in EstimatorKind::all() {
                for enabled in [true, false] {
                    let (tree, _) = evaluate_and_push_down(
                        &raw,
                        &cfg(kind, MaxSelectivity::Ratio(1.0), enabled),
                        &cat,
                        &exec,
                    )
                    .expect("optimize");
                    let rs = exec.execute_rows(&cat, &tree).expect("execute");
                    let mut rows = result_cells(&rs);
                    rows.sort();
                    match &reference {
                        None => {
                            // The first configuration is also checked against
                            // the nested-loop interpreter.
                            assert_same_multiset(rows.clone(), oracle.clone(), &sql);
                            reference = Some(rows);
                        }
                        Some(r) => {
                            assert_eq!(&rows, r, "divergence under {kind:?}/{enabled}: {sql}")
                        }
                    }
                    cat.clear_temps();
                }
            }
            cases += 1;
        }
    }
    assert!(cases >= 300);
    format!("{cases} query/database cases identical across 12 configurations")
}

// 6. Synopsis properties at their stated tolerances.
fn criterion_6() -> String {
    // Count-min: one-sided error and per-row conservation.
    let mut rng = ChaCha8Rng::seed_from_u64(0xc6);
    let mut sketch = CountMinSketch::new(256, 4, 11).expect("sketch");
    let mut truth: HashMap<u64, u64> = HashMap::new();
    for _ in 0..50_000u64 {
        let key = rng.random_range(0..1500);
        sketch.update(key);
        *truth.entry(key).or_default() += 1;
    }
    for key in 0..2000u64 {
        let t = truth.get(&key).copied().unwrap_or(0);
        assert!(sketch.point(key) >= t, "one-sided error violated at {key}");
    }
    assert!(sketch.row_sums().iter().all(|&s| s == 50_000));

    // Equi-depth bucket depths.
    for (total, buckets) in [(900usize, 30usize), (1000, 7), (12_345, 100), (64, 64)] {
        let values: Vec<f64> = (0..total).map(|i| ((i * 37) % 5000) as f64).collect();
        let h = EquiDepthHistogram::build(&values, buckets);
        let depth = (total as u64).div_ceil(buckets as u64);
        let counts = h.bucket_counts();
        for &c in &counts[..counts.len() - 1] {
            assert_eq!(c, depth);
        }
        assert!(*counts.last().expect("buckets") <= depth);
    }

    // Sampling at rate 0.1 over 1e5 rows, averaged over 20 seeds.
    let n = 100_000usize;
    let table = scenario::independent_dataset(n).expect("table");
    let mut cat = Catalog::new();
    cat.register(table.clone()).expect("register");
    let raw = parse(
        &format!("SELECT COUNT(*) FROM indep WHERE {}", scenario::INDEPENDENT_PREDICATE),
        &cat,
    )
    .expect("parse");
    let (_, selections) = classify_predicates(&raw).expect("classify");
    let pred = &selections["indep"];
    let truth = (0..n).filter(|&i| pred.matches_row(&table, i)).count() as f64;
    let mean: f64 = (0..20)
        .map(|seed| {
            RowSample::build(n, 0.1, seed)
                .expect("sample")
                .estimate(pred, &table)
                .cardinality
        })
        .sum::<f64>()
        / 20.0;
    assert!(
        (mean - truth).abs() <= 0.15 * truth,
        "sample mean {mean} vs truth {truth}"
    );
    format!("sketch/histogram/sample properties hold (sample mean {mean:.0} vs truth {truth:.0})")
}

// 7. Temporary-table reuse: the full query never re-evaluates a pushed
// predicate.
fn criterion_7() -> String {
    let mut engine = Engine::new();
    engine
        .generate(&GeneratorSpec {
            schema: SchemaKind::TpchLite,
            scale: 0.003,
            skew: 0.0,
            correlation: 1.0,
            seed: 5,
        })
        .expect("generate");
    engine.config = cfg(EstimatorKind::Exact, MaxSelectivity::Ratio(1.0), true);
    let orders_rows = engine.catalog.row_count("orders").expect("meta");
    let out = engine
        .query(
            "SELECT COUNT(*) FROM lineitem, orders \
             WHERE l_orderkey = o_orderkey AND o_orderkey <= 50",
        )
        .expect("query");
    assert!(matches!(
        out.report.decision_for("orders"),
        Some(Decision::Pushed { .. })
    ));
    // Planning pays one pass for the COUNT gate and one for the
    // materializing re-execution; the full query evaluates nothing.
    assert_eq!(out.report.opt_stats.predicate_evals, 2 * orders_rows);
    assert_eq!(out.result.stats.predicate_evals, 0);
    format!(
        "pushed predicate confined to planning ({} evals), 0 during execution",
        2 * orders_rows
    )
}

// 8. Crossover behaviour on a >= 1e6-row probe table.
fn criterion_8() -> String {
    let mut engine = Engine::new();
    engine
        .generate(&GeneratorSpec {
            schema: SchemaKind::TpchLite,
            scale: 0.2,
            skew: 0.0,
            correlation: 1.0,
            seed: 8,
        })
        .expect("generate");
    assert!(engine.catalog.row_count("lineitem").expect("meta") >= 1_000_000);
    let fractions = [0.0001, 0.001, 0.01, 0.1, 1.0];
    let (report, _) =
        bench::crossover_suite(&mut engine, "orders", &fractions, 5).expect("suite");
    let push: Vec<u64> = report
        .column_values("pushdown_us")
        .iter()
        .map(|v| v.parse().expect("micros"))
        .collect();
    let base: Vec<u64> = report
        .column_values("baseline_us")
        .iter()
        .map(|v| v.parse().expect("micros"))
        .collect();
    // Strictly faster at <= 0.1% selectivity.
    assert!(
        push[0] < base[0] && push[1] < base[1],
        "pushdown not faster at low selectivity: push={push:?} base={base:?}"
    );
    // Not faster at 100%.
    assert!(
        push[4] >= base[4],
        "pushdown unexpectedly faster at 100%: push={push:?} base={base:?}"
    );
    // Trend: pushdown grows with selectivity (20% slack per step for timing
    // noise), baseline stays comparatively flat.
    for w in push.windows(2) {
        assert!(
            w[1] as f64 >= w[0] as f64 * 0.8,
            "pushdown times not monotone: {push:?}"
        );
    }
    assert!(
        *push.last().expect("sweep") as f64 >= push[0] as f64 * 2.0,
        "pushdown time did not grow over the sweep: {push:?}"
    );
    let (bmin, bmax) = (
        *base.iter().min().expect("sweep"),
        *base.iter().max().expect("sweep"),
    );
    assert!(
        bmax as f64 <= bmin as f64 * 4.0,
        "baseline not flat: {base:?}"
    );
    format!("pushdown {push:?} us vs baseline {base:?} us across {fractions:?}")
}

// 9. The motivating estimation failure, reproduced and quantified.
fn criterion_9() -> String {
    let cat = overlap_catalog();
    let exec = Executor::new();
    let raw = parse(
        &format!(
            "SELECT COUNT(*) FROM r WHERE {}",
            scenario::OVERLAP_PREDICATE
        ),
        &cat,
    )
    .expect("parse");
    let (_, selections) = classify_predicates(&raw).expect("classify");
    let pred = &selections["r"];
    let r = cat.table("r").expect("table");
    let truth = (0..r.row_count()).filter(|&i| pred.matches_row(&r, i)).count() as f64;
    let truth_factor = truth / r.row_count() as f64;
    assert!((truth_factor - 0.167).abs() < 1e-9);

    let uniform = estimate(pred, "r", EstimatorKind::Uniform, &cat, &exec).expect("estimate");
    assert!(
        (uniform.factor - 0.0015).abs() <= 5e-5,
        "uniform factor {}",
        uniform.factor
    );
    let ratio = truth_factor / uniform.factor;
    assert!(ratio >= 50.0, "relative error only {ratio:.1}x");

    let exact = estimate(pred, "r", EstimatorKind::Exact, &cat, &exec).expect("estimate");
    assert_eq!(exact.cardinality, truth);

    // Control corpus: under real independence the uniform estimate lands
    // within 10x.
    let mut cat2 = Catalog::new();
    cat2.register(scenario::independent_dataset(600_000).expect("table"))
        .expect("register");
    let raw2 = parse(
        &format!(
            "SELECT COUNT(*) FROM indep WHERE {}",
            scenario::INDEPENDENT_PREDICATE
        ),
        &cat2,
    )
    .expect("parse");
    let (_, sel2) = classify_predicates(&raw2).expect("classify");
    let pred2 = &sel2["indep"];
    let indep = cat2.table("indep").expect("table");
    let truth2 = (0..indep.row_count())
        .filter(|&i| pred2.matches_row(&indep, i))
        .count() as f64;
    let uniform2 = estimate(pred2, "indep", EstimatorKind::Uniform, &cat2, &exec)
        .expect("estimate");
    let ratio2 = if truth2 > 0.0 {
        (uniform2.cardinality / truth2).max(truth2 / uniform2.cardinality)
    } else {
        f64::INFINITY
    };
    assert!(ratio2 <= 10.0, "independent corpus error {ratio2:.1}x");
    format!(
        "correlated: uniform {:.6} vs truth {truth_factor:.3} ({ratio:.0}x), exact error 0; \
         independent corpus within {ratio2:.2}x",
        uniform.factor
    )
}

#[test]
fn acceptance() {
    type Criterion = (&'static str, Box<dyn FnOnce() -> String>);
    let criteria: Vec<Criterion> = vec![
        ("arithmetic fidelity", Box::new(criterion_1)),
        ("worked plan flip", Box::new(criterion_2)),
        ("exactness property", Box::new(criterion_3)),
        ("push-down conformance", Box::new(criterion_4)),
        ("semantic preservation", Box::new(criterion_5)),
        ("synopsis properties", Box::new(criterion_6)),
        ("temp-table reuse", Box::new(criterion_7)),
        ("crossover existence", Box::new(criterion_8)),
        ("estimation-error demonstration", Box::new(criterion_9)),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.into_iter().enumerate() {
        let started = std::time::Instant::now();
        match catch_unwind(AssertUnwindSafe(run)) {
            Ok(detail) => {
                println!(
                    "criterion {}: PASS ({name}, {:.1}s) - {detail}",
                    i + 1,
                    started.elapsed().as_secs_f64()
                );
            }
            Err(err) => {
                let msg = err
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| err.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".into());
                println!("criterion {}: FAIL ({name}) - {msg}", i + 1);
                failures += 1;
            }
        }
    }
    assert_eq!(failures, 0, "{failures} acceptance criteria failed");
}
