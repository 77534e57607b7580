use super::*;
use crate::sql::ColumnRef;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

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

fn cref(table: &str, column: &str) -> ColumnRef {
    ColumnRef {
        table: table.into(),
        column: column.into(),
    }
}

fn cmp(table: &str, column: &str, op: CmpOp, v: i64) -> PredicateExpr {
    PredicateExpr::Compare {
        column: cref(table, column),
        op,
        literal: Literal::Int(v),
    }
}

fn catalog_two_tables() -> Catalog {
    let mut cat = Catalog::new();
    cat.register(
        Table::new(
            "fact",
            vec![
                int_col("f_key", vec![1, 2, 2, 3, 4, 4, 4]),
                int_col("f_val", vec![10, 20, 21, 30, 40, 41, 42]),
                float_col("f_price", vec![1.0, 2.0, 2.5, 3.0, 4.0, 4.5, 5.0]),
            ],
        )
        .unwrap(),
    )
    .unwrap();
    cat.register(
        Table::new(
            "dim",
            vec![
                int_col("d_key", vec![1, 2, 3, 4, 5]),
                int_col("d_attr", vec![100, 200, 300, 400, 500]),
            ],
        )
        .unwrap(),
    )
    .unwrap();
    cat
}

#[test]
fn eval_single_equality() {
    let cols = vec![int_col("a", vec![1, 2, 3])];
    let mut stats = ExecStats::default();
    let mask = eval_predicate(&cols, &cmp("t", "a", CmpOp::Eq, 2), &[true; 3], &mut stats).unwrap();
    assert_eq!(mask, vec![false, true, false]);
    assert_eq!(stats.predicate_evals, 3);
}

#[test]
fn eval_and_composes() {
    let cols = vec![int_col("a", vec![1, 2, 3, 4]), int_col("b", vec![0, 1, 0, 1])];
    let a = cmp("t", "a", CmpOp::Gt, 1);
    let b = cmp("t", "b", CmpOp::Eq, 1);
    let both = PredicateExpr::And(vec![a.clone(), b.clone()]);
    let mut s = ExecStats::default();
    let direct = eval_predicate(&cols, &both, &[true; 4], &mut s).unwrap();
    let first = eval_predicate(&cols, &a, &[true; 4], &mut s).unwrap();
    let composed = eval_predicate(&cols, &b, &first, &mut s).unwrap();
    assert_eq!(direct, composed);
}

#[test]
fn eval_respects_input_mask_and_charges_popcount() {
    let cols = vec![int_col("a", vec![5, 5, 5, 5])];
    let mut stats = ExecStats::default();
    let mask = eval_predicate(
        &cols,
        &cmp("t", "a", CmpOp::Eq, 5),
        &[true, false, true, false],
        &mut stats,
    )
    .unwrap();
    assert_eq!(mask, vec![true, false, true, false]);
    assert_eq!(stats.predicate_evals, 2);
}

#[test]
fn eval_random_trees_match_rowwise_oracle() {
    // 1000 random predicate trees of depth <= 3 against a row-by-row oracle.
    let mut rng = ChaCha8Rng::seed_from_u64(0xeca1);
    let n = 200;
    let a: Vec<i64> = (0..n).map(|_| rng.random_range(0..20)).collect();
    let b: Vec<i64> = (0..n).map(|_| rng.random_range(0..10)).collect();
    let table = Table::new("t", vec![int_col("a", a), int_col("b", b)]).unwrap();
    let cols = table.columns().to_vec();

    fn random_pred(rng: &mut ChaCha8Rng, depth: usize) -> PredicateExpr {
        let leaf = depth == 0 || rng.random_range(0..3) == 0;
        if leaf {
            let (col, domain) = if rng.random_range(0..2) == 0 {
                ("a", 20)
            } else {
                ("b", 10)
            };
            let op = match rng.random_range(0..5) {
                0 => CmpOp::Eq,
                1 => CmpOp::Lt,
                2 => CmpOp::Gt,
                3 => CmpOp::Le,
                _ => CmpOp::Ge,
            };
            PredicateExpr::Compare {
                column: ColumnRef {
                    table: "t".into(),
                    column: col.into(),
                },
                op,
                literal: Literal::Int(rng.random_range(0..domain)),
            }
        } else {
            let children: Vec<PredicateExpr> = (0..rng.random_range(2..4))
                .map(|_| random_pred(rng, depth - 1))
                .collect();
            if rng.random_range(0..2) == 0 {
                PredicateExpr::And(children)
            } else {
                PredicateExpr::Or(children)
            }
        }
    }

    for _ in 0..1000 {
        let pred = random_pred(&mut rng, 3);
        let mut stats = ExecStats::default();
        let mask = eval_predicate(&cols, &pred, &vec![true; n], &mut stats).unwrap();
        for (row, &got) in mask.iter().enumerate() {
            assert_eq!(got, pred.matches_row(&table, row));
        }
    }
}

#[test]
fn hash_join_distinct_keys_equal_domains() {
    let cat = catalog_two_tables();
    let exec = Executor::new();
    // dim keys 1..=5 all distinct; a sub-fact with distinct keys 1..=4.
    let mut cat2 = Catalog::new();
    cat2.register(
        Table::new("left", vec![int_col("l_k", vec![1, 2, 3, 4])]).unwrap(),
    )
    .unwrap();
    cat2.register(
        Table::new("right", vec![int_col("r_k", vec![1, 2, 3, 4, 5])]).unwrap(),
    )
    .unwrap();
    let join = PlanNode::HashJoin {
        probe: Box::new(PlanNode::Scan { table: "left".into() }),
        build: Box::new(PlanNode::Scan { table: "right".into() }),
        keys: vec![("l_k".into(), "r_k".into())],
    };
    let rs = exec.execute_rows(&cat2, &join).unwrap();
    assert_eq!(rs.row_count, 4);
    drop(cat);
}

#[test]
fn hash_join_empty_build_side() {
    let mut cat = Catalog::new();
    cat.register(Table::new("l", vec![int_col("lk", vec![1, 2])]).unwrap())
        .unwrap();
    cat.register(Table::new("r", vec![int_col("rk", vec![])]).unwrap())
        .unwrap();
    let join = PlanNode::HashJoin {
        probe: Box::new(PlanNode::Scan { table: "l".into() }),
        build: Box::new(PlanNode::Scan { table: "r".into() }),
        keys: vec![("lk".into(), "rk".into())],
    };
    let rs = Executor::new().execute_rows(&cat, &join).unwrap();
    assert_eq!(rs.row_count, 0);
}

#[test]
fn hash_join_matches_nested_loop_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..20 {
        let n1 = rng.random_range(0..60);
        let n2 = rng.random_range(0..60);
        let lk: Vec<i64> = (0..n1).map(|_| rng.random_range(0..10)).collect();
        let lv: Vec<i64> = (0..n1).map(|_| rng.random_range(0..100)).collect();
        let rk: Vec<i64> = (0..n2).map(|_| rng.random_range(0..10)).collect();
        let rv: Vec<i64> = (0..n2).map(|_| rng.random_range(0..100)).collect();

        let mut expected: Vec<(i64, i64, i64, i64)> = Vec::new();
        for i in 0..n1 {
            for j in 0..n2 {
                if lk[i] == rk[j] {
                    expected.push((lk[i], lv[i], rk[j], rv[j]));
                }
            }
        }
        expected.sort();

        let mut cat = Catalog::new();
        cat.register(
            Table::new("l", vec![int_col("lk", lk), int_col("lv", lv)]).unwrap(),
        )
        .unwrap();
        cat.register(
            Table::new("r", vec![int_col("rk", rk), int_col("rv", rv)]).unwrap(),
        )
        .unwrap();
        let join = PlanNode::HashJoin {
            probe: Box::new(PlanNode::Scan { table: "l".into() }),
            build: Box::new(PlanNode::Scan { table: "r".into() }),
            keys: vec![("lk".into(), "rk".into())],
        };
        let rs = Executor::new().execute_rows(&cat, &join).unwrap();
        let mut got: Vec<(i64, i64, i64, i64)> = (0..rs.row_count)
            .map(|row| {
                let get = |idx: usize| match &rs.columns[idx].data {
                    ColumnData::Int64(v) => v[row],
                    _ => panic!(),
                };
                (get(0), get(1), get(2), get(3))
            })
            .collect();
        got.sort();
        assert_eq!(got, expected);
    }
}

#[test]
fn composite_key_join() {
    let mut cat = Catalog::new();
    cat.register(
        Table::new(
            "l",
            vec![int_col("la", vec![1, 1, 2]), int_col("lb", vec![1, 2, 1])],
        )
        .unwrap(),
    )
    .unwrap();
    cat.register(
        Table::new(
            "r",
            vec![int_col("ra", vec![1, 2]), int_col("rb", vec![2, 1])],
        )
        .unwrap(),
    )
    .unwrap();
    let join = PlanNode::HashJoin {
        probe: Box::new(PlanNode::Scan { table: "l".into() }),
        build: Box::new(PlanNode::Scan { table: "r".into() }),
        keys: vec![("la".into(), "ra".into()), ("lb".into(), "rb".into())],
    };
    let rs = Executor::new().execute_rows(&cat, &join).unwrap();
    // Matches: (1,2)-(1,2) and (2,1)-(2,1).
    assert_eq!(rs.row_count, 2);
}

#[test]
fn stats_conservation_on_join() {
    let cat = catalog_two_tables();
    let join = PlanNode::HashJoin {
        probe: Box::new(PlanNode::Scan { table: "fact".into() }),
        build: Box::new(PlanNode::Scan { table: "dim".into() }),
        keys: vec![("f_key".into(), "d_key".into())],
    };
    let rs = Executor::new().execute_rows(&cat, &join).unwrap();
    assert_eq!(rs.stats.rows_probed, 7);
    assert_eq!(rs.stats.rows_built, 5);
    assert_eq!(rs.stats.intermediate_rows_materialized, 0);
}

#[test]
fn count_star_without_groups() {
    let cat = catalog_two_tables();
    let plan = attach_count(PlanNode::Scan { table: "dim".into() });
    assert_eq!(Executor::new().execute_count(&cat, &plan).unwrap(), 5);
}

#[test]
fn count_on_empty_scan_is_zero() {
    let mut cat = Catalog::new();
    cat.register(Table::new("e", vec![int_col("x", vec![])]).unwrap())
        .unwrap();
    let plan = attach_count(PlanNode::Scan { table: "e".into() });
    assert_eq!(Executor::new().execute_count(&cat, &plan).unwrap(), 0);
}

#[test]
fn grouped_sum_over_empty_input_has_no_rows() {
    let mut cat = Catalog::new();
    cat.register(
        Table::new("e", vec![int_col("g", vec![]), int_col("v", vec![])]).unwrap(),
    )
    .unwrap();
    let plan = PlanNode::Aggregate {
        aggs: vec![AggExpr::Sum {
            expr: SumExpr::Column("v".into()),
            alias: "total".into(),
        }],
        group_by: vec!["g".into()],
        input: Box::new(PlanNode::Scan { table: "e".into() }),
    };
    let rs = Executor::new().execute_rows(&cat, &plan).unwrap();
    assert_eq!(rs.row_count, 0);
}

#[test]
fn grouped_sum_matches_rowwise_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 500;
    let g: Vec<i64> = (0..n).map(|_| rng.random_range(0..7)).collect();
    let v: Vec<i64> = (0..n).map(|_| rng.random_range(-50..50)).collect();
    let mut expected: std::collections::BTreeMap<i64, i64> = Default::default();
    for i in 0..n {
        *expected.entry(g[i]).or_default() += v[i];
    }
    let mut cat = Catalog::new();
    cat.register(Table::new("t", vec![int_col("g", g), int_col("v", v)]).unwrap())
        .unwrap();
    let plan = PlanNode::Aggregate {
        aggs: vec![AggExpr::Sum {
            expr: SumExpr::Column("v".into()),
            alias: "total".into(),
        }],
        group_by: vec!["g".into()],
        input: Box::new(PlanNode::Scan { table: "t".into() }),
    };
    let rs = Executor::new().execute_rows(&cat, &plan).unwrap();
    let expected: Vec<(i64, i64)> = expected.into_iter().collect();
    let got: Vec<(i64, i64)> = (0..rs.row_count)
        .map(|row| {
            let g = match &rs.columns[0].data {
                ColumnData::Int64(v) => v[row],
                _ => panic!(),
            };
            let t = match &rs.columns[1].data {
                ColumnData::Int64(v) => v[row],
                _ => panic!(),
            };
            (g, t)
        })
        .collect();
    assert_eq!(got, expected);
}

#[test]
fn gate_zero_rejects_any_nonempty_selection() {
    let cat = catalog_two_tables();
    let compound = PlanNode::Compound {
        pred: cmp("fact", "f_key", CmpOp::Ge, 1),
        columns: vec!["f_key".into()],
        count_cap: Some(0),
        input: Box::new(PlanNode::Scan { table: "fact".into() }),
    };
    match Executor::new().execute(&cat, &compound, true, 0).unwrap() {
        ExecOutcome::GateExceeded { count, .. } => assert_eq!(count, 7),
        ExecOutcome::Rows(_) => panic!("gate should have fired"),
    }
}

#[test]
fn gate_admits_when_count_within_limit() {
    let cat = catalog_two_tables();
    let compound = PlanNode::Compound {
        pred: cmp("fact", "f_key", CmpOp::Eq, 2),
        columns: vec!["f_key".into(), "f_val".into()],
        count_cap: Some(3),
        input: Box::new(PlanNode::Scan { table: "fact".into() }),
    };
    match Executor::new().execute(&cat, &compound, true, 3).unwrap() {
        ExecOutcome::Rows(rs) => {
            assert_eq!(rs.row_count, 2);
            // One pass for the COUNT gate, one for the re-execution.
            assert_eq!(rs.stats.predicate_evals, 14);
        }
        ExecOutcome::GateExceeded { .. } => panic!("gate should admit"),
    }
}

#[test]
fn gate_boundary_is_strict_greater_than() {
    let cat = catalog_two_tables();
    let compound = PlanNode::Compound {
        pred: cmp("fact", "f_key", CmpOp::Eq, 2),
        columns: vec!["f_key".into()],
        count_cap: None,
        input: Box::new(PlanNode::Scan { table: "fact".into() }),
    };
    // True count is 2: max_size 2 admits, max_size 1 rejects.
    assert!(matches!(
        Executor::new().execute(&cat, &compound, true, 2).unwrap(),
        ExecOutcome::Rows(_)
    ));
    assert!(matches!(
        Executor::new().execute(&cat, &compound, true, 1).unwrap(),
        ExecOutcome::GateExceeded { count: 2, .. }
    ));
}

#[test]
fn compound_equals_unfused_pipeline() {
    let cat = catalog_two_tables();
    let exec = Executor::new();
    let pred = PredicateExpr::Or(vec![
        cmp("fact", "f_key", CmpOp::Eq, 2),
        cmp("fact", "f_val", CmpOp::Gt, 40),
    ]);
    let columns = vec!["f_val".into(), "f_price".into()];
    let fused = PlanNode::Compound {
        pred: pred.clone(),
        columns: columns.clone(),
        count_cap: None,
        input: Box::new(PlanNode::Scan { table: "fact".into() }),
    };
    let unfused = PlanNode::Project {
        columns,
        input: Box::new(PlanNode::Filter {
            pred,
            input: Box::new(PlanNode::Scan { table: "fact".into() }),
        }),
    };
    let a = exec.execute_rows(&cat, &fused).unwrap();
    let b = exec.execute_rows(&cat, &unfused).unwrap();
    assert_eq!(a.render_rows(), b.render_rows());
}

#[test]
fn temp_table_round_trip() {
    let cat = catalog_two_tables();
    let exec = Executor::new();
    let compound = PlanNode::Compound {
        pred: cmp("fact", "f_key", CmpOp::Eq, 4),
        columns: vec!["f_key".into(), "f_val".into()],
        count_cap: None,
        input: Box::new(PlanNode::Scan { table: "fact".into() }),
    };
    let rs = exec.execute_rows(&cat, &compound).unwrap();
    let before = rs.render_rows();
    let rows = rs.row_count;
    let (id, stats) = exec.add_temporary_table(&cat, rs, "fact").unwrap();
    assert_eq!(stats.intermediate_rows_materialized, rows as u64);
    assert_eq!(cat.temp_meta(id).unwrap().row_count, rows as u64);
    let scan = PlanNode::TempScan {
        id,
        source: "fact".into(),
    };
    let back = exec.execute_rows(&cat, &scan).unwrap();
    assert_eq!(back.render_rows(), before);
}

#[test]
fn row_cap_enforced() {
    let mut cat = Catalog::new();
    cat.register(
        Table::new("big", vec![int_col("k", vec![1; 100])]).unwrap(),
    )
    .unwrap();
    cat.register(
        Table::new("other", vec![int_col("j", vec![1; 100])]).unwrap(),
    )
    .unwrap();
    // 100 x 100 matches on a single key value: 10,000 output rows.
    let join = PlanNode::HashJoin {
        probe: Box::new(PlanNode::Scan { table: "big".into() }),
        build: Box::new(PlanNode::Scan { table: "other".into() }),
        keys: vec![("k".into(), "j".into())],
    };
    let exec = Executor::with_max_rows(5_000);
    assert!(matches!(
        exec.execute_rows(&cat, &join),
        Err(Error::RowCapExceeded { .. })
    ));
}

#[test]
fn execution_is_deterministic() {
    let cat = catalog_two_tables();
    let exec = Executor::new();
    let plan = PlanNode::Sort {
        keys: vec![SortKey {
            column: "f_val".into(),
            desc: true,
        }],
        input: Box::new(PlanNode::Project {
            columns: vec!["f_val".into(), "d_attr".into()],
            input: Box::new(PlanNode::Filter {
                pred: cmp("fact", "f_val", CmpOp::Gt, 15),
                input: Box::new(PlanNode::HashJoin {
                    probe: Box::new(PlanNode::Scan { table: "fact".into() }),
                    build: Box::new(PlanNode::Scan { table: "dim".into() }),
                    keys: vec![("f_key".into(), "d_key".into())],
                }),
            }),
        }),
    };
    let a = exec.execute_rows(&cat, &plan).unwrap();
    let b = exec.execute_rows(&cat, &plan).unwrap();
    assert_eq!(a.render_rows(), b.render_rows());
    assert!(a.row_count > 0);
}

#[test]
fn fused_residual_filter_counts_joined_candidates() {
    let cat = catalog_two_tables();
    let exec = Executor::new();
    let plan = PlanNode::Filter {
        pred: cmp("fact", "f_val", CmpOp::Ge, 40),
        input: Box::new(PlanNode::HashJoin {
            probe: Box::new(PlanNode::Scan { table: "fact".into() }),
            build: Box::new(PlanNode::Scan { table: "dim".into() }),
            keys: vec![("f_key".into(), "d_key".into())],
        }),
    };
    let rs = exec.execute_rows(&cat, &plan).unwrap();
    assert_eq!(rs.row_count, 3);
    // Every fact row matches one dim row; each candidate pair was checked.
    assert_eq!(rs.stats.predicate_evals, 7);
}

#[test]
fn limit_truncates_after_sort() {
    let cat = catalog_two_tables();
    let plan = PlanNode::Limit {
        n: 2,
        input: Box::new(PlanNode::Sort {
            keys: vec![SortKey {
                column: "f_val".into(),
                desc: true,
            }],
            input: Box::new(PlanNode::Project {
                columns: vec!["f_val".into()],
                input: Box::new(PlanNode::Scan { table: "fact".into() }),
            }),
        }),
    };
    let rs = Executor::new().execute_rows(&cat, &plan).unwrap();
    assert_eq!(rs.render_rows(), vec![vec!["42"], vec!["41"]]);
}
