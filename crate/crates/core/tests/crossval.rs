use ndarray::{Array2, Axis};
use paleo_xval::{
    constant_baseline_rmse, generate, make_blocks, run_block, run_ensemble, run_experiment,
    synthetic_target, Error, HoldoutSplit, NoiseKind, NoiseSpec, ProxyMatrix, RunMode, RunOptions,
};
use paleo_xval_testkit::{self as oracle, TestRng};

#[test]
fn design_149_by_30_has_120_blocks_of_119_calibration_years() {
    let splits = make_blocks(149, 30).unwrap();
    assert_eq!(splits.len(), 120);
    assert!(splits
        .iter()
        .all(|s| s.n_calib() == 119 && s.block_len() == 30));
    assert_eq!(splits[0].block_start(), 0);
    assert_eq!(splits[119].block_start(), 119);
}

#[test]
fn make_blocks_rejects_bad_lengths() {
    assert!(matches!(
        make_blocks(10, 1),
        Err(Error::InvalidBlockLength { .. })
    ));
    assert!(matches!(
        make_blocks(10, 10),
        Err(Error::InvalidBlockLength { .. })
    ));
    assert_eq!(make_blocks(10, 9).unwrap().len(), 2);
}

#[test]
fn noisy_copies_of_the_target_beat_the_constant_baseline() {
    let n = 60;
    let y = synthetic_target::<f64>(n, 1900, 2).unwrap();
    let mut rng = TestRng::new(4);
    let x = Array2::from_shape_fn((n, 8), |(i, _)| y.values()[i] + 0.02 * rng.normal());
    let x = ProxyMatrix::with_default_ids(x).unwrap();
    let splits = make_blocks(n, 12).unwrap();
    let report = run_experiment(&x, &y, &splits, RunOptions::default(), "copies").unwrap();
    let baseline: f64 = splits
        .iter()
        .map(|s| constant_baseline_rmse(&y, s).unwrap())
        .sum::<f64>()
        / splits.len() as f64;
    assert!(
        report.mean_rmse < 0.5 * baseline,
        "{} vs {baseline}",
        report.mean_rmse
    );
}

#[test]
fn single_white_column_is_close_to_the_constant_baseline() {
    let n = 50;
    let y = synthetic_target::<f64>(n, 1900, 3).unwrap();
    let split = HoldoutSplit::new(n, 20, 10).unwrap();
    let base = constant_baseline_rmse(&y, &split).unwrap();
    let mut total = 0.0;
    for seed in 0..50 {
        let x = generate::<f64>(&NoiseSpec::new(NoiseKind::White, n, 1, seed).unwrap()).unwrap();
        total += run_block(&x, &y, &split, RunOptions::default())
            .unwrap()
            .rmse;
    }
    let ratio = total / 50.0 / base;
    assert!((0.8..1.2).contains(&ratio), "{ratio}");
}

#[test]
fn column_order_does_not_matter() {
    let n = 45;
    let y = synthetic_target::<f64>(n, 1900, 5).unwrap();
    let x =
        generate::<f64>(&NoiseSpec::new(NoiseKind::Ar1 { phi: 0.9 }, n, 30, 5).unwrap()).unwrap();
    let order: Vec<usize> = (0..30).rev().collect();
    let splits = make_blocks(n, 10).unwrap();
    let a = run_experiment(&x, &y, &splits, RunOptions::default(), "a").unwrap();
    let b = run_experiment(&x.permuted(&order), &y, &splits, RunOptions::default(), "a").unwrap();
    for (u, v) in a.block_rmse.iter().zip(&b.block_rmse) {
        assert!((u - v).abs() < 1e-12 * (1.0 + u.abs()));
    }
}

#[test]
fn one_block_end_to_end_matches_oracle_pipeline() {
    let n = 24;
    let y = synthetic_target::<f64>(n, 1900, 9).unwrap();
    let x =
        generate::<f64>(&NoiseSpec::new(NoiseKind::Ar1 { phi: 0.8 }, n, 7, 1).unwrap()).unwrap();
    let split = HoldoutSplit::new(n, 6, 5).unwrap();
    let r = run_block(&x, &y, &split, RunOptions::default()).unwrap();

    let cols: Vec<Vec<f64>> = (0..7)
        .map(|j| oracle::standardize_column(&x.data().column(j).to_vec(), split.calib_rows()))
        .collect();
    let s = oracle::gram_from_columns(&cols);
    let nc = split.n_calib();
    let e = vec![1.0 / nc as f64; nc];
    let y_c = y.select(split.calib_rows());
    let grid = oracle::log_grid(1e-8, 1e8, 2000);
    let s_cc = oracle::submatrix(&s, split.calib_rows(), split.calib_rows());
    let (l_grid, _) = oracle::grid_argmin(&grid, |l| {
        oracle::gcv_score_residual_form(&s_cc, l, &e, &y_c)
    });
    assert!(
        oracle::rel_diff(r.lambda, l_grid, 0.0) < 0.01,
        "{} vs {l_grid}",
        r.lambda
    );

    let want = oracle::reconstruct(
        &s,
        split.calib_rows(),
        split.valid_rows(),
        r.lambda,
        &e,
        &y_c,
    );
    for (g, w) in r.y_hat_v.iter().zip(&want) {
        assert!((g - w).abs() < 1e-10);
    }
    let truth = y.select(split.valid_rows());
    assert!((r.rmse - oracle::rmse(&want, &truth)).abs() < 1e-10);
}

#[test]
fn ensemble_scatter_shrinks_with_more_columns() {
    let n = 40;
    let y = synthetic_target::<f64>(n, 1900, 1).unwrap();
    let splits = make_blocks(n, 10).unwrap();
    let scatter = |p: usize| {
        let spec = NoiseSpec::new(NoiseKind::Ar1 { phi: 0.99 }, n, p, 100).unwrap();
        let ens = run_ensemble(&spec, &y, &splits, 8, RunOptions::default()).unwrap();
        let mut s = ens.member_scatter.clone();
        s.sort_by(f64::total_cmp);
        s[s.len() / 2]
    };
    let (small, large) = (scatter(30), scatter(3000));
    assert!(large < small, "{large} vs {small}");
}

#[test]
fn ensemble_shape_and_statistics() {
    let n = 30;
    let y = synthetic_target::<f64>(n, 1900, 1).unwrap();
    let splits = make_blocks(n, 8).unwrap();
    let spec = NoiseSpec::new(NoiseKind::White, n, 20, 3).unwrap();
    let ens = run_ensemble(&spec, &y, &splits, 3, RunOptions::default()).unwrap();
    assert_eq!(ens.size(), 3);
    assert_eq!(ens.block_starts.len(), splits.len());
    for b in 0..splits.len() {
        let vals: Vec<f64> = ens.member_reports.iter().map(|m| m.block_rmse[b]).collect();
        assert!((ens.mean_curve[b] - oracle::mean(&vals)).abs() < 1e-14);
        assert!((ens.member_scatter[b] - oracle::sample_std(&vals)).abs() < 1e-14);
    }
    let member1 = run_experiment(
        &generate::<f64>(&spec.with_seed(4)).unwrap(),
        &y,
        &splits,
        RunOptions::default(),
        "white_m001",
    )
    .unwrap();
    assert_eq!(ens.member_reports[1], member1);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let n = 35;
    let y = synthetic_target::<f64>(n, 1900, 7).unwrap();
    let splits = make_blocks(n, 9).unwrap();
    let spec = NoiseSpec::new(NoiseKind::Ar1 { phi: 0.95 }, n, 40, 11).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_ensemble(&spec, &y, &splits, 4, RunOptions::default()).unwrap())
    };
    assert_eq!(run(1), run(3));
}

fn spiky_proxies(n: usize) -> ProxyMatrix<f64> {
    let mut rng = TestRng::new(2);
    let mut data = Array2::from_shape_fn((n, 4), |_| rng.normal());
    data.column_mut(2).fill(0.0);
    data[[5, 2]] = 1.0;
    ProxyMatrix::with_default_ids(data).unwrap()
}

#[test]
fn strict_mode_fails_on_a_degenerate_block() {
    let y = synthetic_target::<f64>(30, 1900, 1).unwrap();
    let splits = make_blocks(30, 6).unwrap();
    let err =
        run_experiment(&spiky_proxies(30), &y, &splits, RunOptions::default(), "x").unwrap_err();
    assert!(
        matches!(err, Error::DegenerateColumn(ref id) if id == "x0002"),
        "{err}"
    );
}

#[test]
fn permissive_mode_records_failed_blocks() {
    let y = synthetic_target::<f64>(30, 1900, 1).unwrap();
    let splits = make_blocks(30, 6).unwrap();
    let opts = RunOptions {
        mode: RunMode::Permissive,
        drop_degenerate: false,
    };
    let r = run_experiment(&spiky_proxies(30), &y, &splits, opts, "x").unwrap();
    let failed: Vec<usize> = r.failed_blocks.iter().map(|f| f.0).collect();
    assert_eq!(failed, vec![0, 1, 2, 3, 4, 5]);
    assert_eq!(r.len(), splits.len() - 6);
}

#[test]
fn dropping_degenerate_columns_matches_removing_them() {
    let y = synthetic_target::<f64>(30, 1900, 1).unwrap();
    let split = HoldoutSplit::new(30, 3, 6).unwrap();
    let x = spiky_proxies(30);
    let opts = RunOptions {
        mode: RunMode::Strict,
        drop_degenerate: true,
    };
    let a = run_block(&x, &y, &split, opts).unwrap();
    let kept = x.data().select(Axis(1), &[0, 1, 3]);
    let b = run_block(
        &ProxyMatrix::with_default_ids(kept).unwrap(),
        &y,
        &split,
        RunOptions::default(),
    )
    .unwrap();
    assert_eq!(a.y_hat_v, b.y_hat_v);
}

#[test]
fn length_mismatch_is_reported() {
    let y = synthetic_target::<f64>(30, 1900, 1).unwrap();
    let x = generate::<f64>(&NoiseSpec::new(NoiseKind::White, 31, 3, 1).unwrap()).unwrap();
    let split = HoldoutSplit::new(30, 0, 5).unwrap();
    assert!(matches!(
        run_block(&x, &y, &split, RunOptions::default()),
        Err(Error::LengthMismatch { .. })
    ));
}
