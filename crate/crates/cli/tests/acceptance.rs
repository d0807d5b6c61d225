//! Acceptance criteria A1-A9, one PASS/FAIL line each.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{ensure, Context, Result};
use ndarray::{Array2, Axis};
use paleo_xval::gcv::{LAMBDA_HI, LAMBDA_LO};
use paleo_xval::io::{self, ExperimentConfig, ProxySource};
use paleo_xval::noise::{noise_block, noise_column};
use paleo_xval::{
    ar1_covariance, gcv_reconstruction, gcv_score, generate, gram_matrix, hat_apply, make_blocks,
    minimize_gcv, reconstruct, run_ensemble, simple_kriging, standardize, synthetic_target, Error,
    HoldoutSplit, Intercept, KrigingSpec, NoiseKind, NoiseSpec, ProxyMatrix, RunOptions,
    WeightVector,
};
use paleo_xval_cli::{
    cmd_crossval, cmd_figure2, cmd_synth, convergence_study, Inputs, SynthOptions,
};
use paleo_xval_testkit::{self as oracle, Mat, TestRng};

const SEED: u64 = 20_240_601;

fn to_mat(a: &Array2<f64>) -> Mat {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| oracle::rel_diff(*x, *y, 1.0))
        .fold(0.0, f64::max)
}

fn matrix(cols: &Mat) -> ProxyMatrix<f64> {
    let (n, p) = (cols[0].len(), cols.len());
    ProxyMatrix::with_default_ids(Array2::from_shape_fn((n, p), |(i, j)| cols[j][i])).unwrap()
}

fn a1() -> Result<String> {
    let splits = make_blocks(149, 30)?;
    ensure!(splits.len() == 120, "{} splits", splits.len());
    for (k, s) in splits.iter().enumerate() {
        ensure!(
            s.block_start() == k && s.block_len() == 30 && s.n_calib() == 119,
            "split {k}"
        );
        ensure!(
            s.calib_rows().len() + s.valid_rows().len() == 149,
            "split {k} rows"
        );
    }
    Ok("120 splits, n_c = 119".into())
}

fn a2() -> Result<String> {
    let mut rng = TestRng::new(SEED);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let n = rng.range(3, 8);
        let p = rng.range(1, 5);
        let n_v = rng.range(1, n - 2);
        let split = HoldoutSplit::new(n, rng.range(0, n - n_v), n_v)?;
        let x = matrix(&rng.normal_columns(n, p));
        let s = gram_matrix(&standardize(&x, &split)?);
        let y = rng.normal_vec(n);
        let raw: Vec<f64> = (0..split.n_calib()).map(|_| rng.uniform() + 0.1).collect();
        let total: f64 = raw.iter().sum();
        let mut w: Vec<f64> = raw.iter().map(|v| v / total).collect();
        w[0] = 1.0 - w[1..].iter().sum::<f64>();
        let lambda = 10f64.powf(rng.uniform() * 6.0 - 3.0);

        let (calib, valid) = (split.calib_rows(), split.valid_rows());
        let y_c: Vec<f64> = calib.iter().map(|&i| y[i]).collect();
        let wv = WeightVector::new(w.clone())?;
        let s_cc = s.select(Axis(0), calib).select(Axis(1), calib);
        let s_cc_mat = to_mat(&s_cc);

        let d1 = max_rel(
            &reconstruct(s.view(), lambda, &wv, &y_c, &split)?,
            &oracle::reconstruct(&to_mat(&s), calib, valid, lambda, &w, &y_c),
        );
        let d2 = max_rel(
            &hat_apply(s_cc.view(), lambda, &wv, &y_c)?,
            &oracle::matvec(&oracle::hat_matrix(&s_cc_mat, lambda, &w), &y_c),
        );
        let d3 = oracle::rel_diff(
            gcv_score(s_cc.view(), lambda, &wv, &y_c)?,
            oracle::gcv_score(&s_cc_mat, lambda, &w, &y_c),
            1e-300,
        );
        let d = d1.max(d2).max(d3);
        ensure!(d < 1e-10, "case {case}: relative difference {d:.2e}");
        worst = worst.max(d);
    }
    Ok(format!(
        "100 instances, worst relative difference {worst:.1e}"
    ))
}

/// Mean and standard error of the member mean RMSEs.
fn mean_se(v: &[f64]) -> (f64, f64) {
    (
        oracle::mean(v),
        oracle::sample_std(v) / (v.len() as f64).sqrt(),
    )
}

fn a3() -> Result<String> {
    let y = synthetic_target::<f64>(149, 1850, SEED)?;
    let splits = make_blocks(149, 30)?;
    let opts = RunOptions::default();
    let white = run_ensemble(
        &NoiseSpec::new(NoiseKind::White, 149, 1138, 1)?,
        &y,
        &splits,
        100,
        opts,
    )?;
    let ar1 = run_ensemble(
        &NoiseSpec::new(NoiseKind::Ar1 { phi: 0.99 }, 149, 1138, 101)?,
        &y,
        &splits,
        100,
        opts,
    )?;
    let (mw, sw) = mean_se(&white.member_means());
    let (ma, sa) = mean_se(&ar1.member_means());
    let se = (sw * sw + sa * sa).sqrt();
    ensure!(ma < mw, "AR(1) {ma:.4} not below white {mw:.4}");
    ensure!(
        mw - ma > 2.0 * se,
        "gap {:.4} within 2 s.e. ({se:.4})",
        mw - ma
    );
    Ok(format!(
        "white {mw:.4} > AR(1) 0.99 {ma:.4}, gap {:.1} s.e.",
        (mw - ma) / se
    ))
}

fn a4() -> Result<String> {
    let cfg = ExperimentConfig {
        seed: SEED,
        ..Default::default()
    };
    let inputs = Inputs {
        y: synthetic_target::<f64>(149, 1850, SEED)?,
        proxies: None,
        splits: make_blocks(149, 30)?,
    };
    let study = convergence_study(&cfg, &inputs)?;
    let ladder: Vec<usize> = study.rows.iter().map(|r| r.p).collect();
    ensure!(ladder == [100, 1000, 10_000], "ladder {ladder:?}");
    ensure!(
        study.frac_blocks_monotone >= 0.9,
        "scatter monotone on {:.1}% of blocks",
        100.0 * study.frac_blocks_monotone
    );
    let diffs: Vec<f64> = study.rows.iter().map(|r| r.median_rms_diff).collect();
    ensure!(
        diffs.windows(2).all(|w| w[1] < w[0]),
        "median RMS differences {diffs:?} not decreasing"
    );
    let rel = diffs[2] / study.limit.mean_rmse;
    ensure!(
        rel < 0.1,
        "RMS difference at p = 1e4 is {:.1}% of mean RMSE",
        100.0 * rel
    );
    Ok(format!(
        "scatter monotone on {:.1}% of blocks; RMS difference to limit at p = 1e4 is {:.1}% of mean RMSE",
        100.0 * study.frac_blocks_monotone,
        100.0 * rel
    ))
}

fn a5() -> Result<String> {
    let y = synthetic_target::<f64>(149, 1850, SEED)?;
    let phi = ar1_covariance::<f64>(149, 0.99)?;
    let phi_mat = to_mat(&phi);
    let (mut worst, mut worst_oracle) = (0.0f64, 0.0f64);
    for split in make_blocks(149, 30)? {
        let a = gcv_reconstruction(phi.view(), &y, &split, Intercept::None)?;
        let b = simple_kriging(&y, &split, KrigingSpec::gcv(0.99))?;
        ensure!(
            a.lambda == b.lambda,
            "block {}: nuggets differ",
            split.block_start()
        );
        let (calib, valid) = (split.calib_rows(), split.valid_rows());
        let shifted = oracle::add(
            &oracle::submatrix(&phi_mat, calib, calib),
            &oracle::scale(&oracle::identity(calib.len()), b.lambda),
        );
        let weights = oracle::matvec(&oracle::inverse(&shifted), &y.select(calib));
        let explicit = oracle::matvec(&oracle::submatrix(&phi_mat, valid, calib), &weights);
        for ((u, v), e) in a.y_hat_v.iter().zip(&b.y_hat_v).zip(&explicit) {
            worst = worst.max((u - v).abs());
            worst_oracle = worst_oracle.max((v - e).abs());
        }
    }
    ensure!(worst < 1e-8, "worst difference {worst:.2e}");
    ensure!(
        worst_oracle < 1e-8,
        "explicit formula differs by {worst_oracle:.2e}"
    );
    Ok(format!(
        "120 blocks, worst difference {worst:.1e} (explicit formula {worst_oracle:.1e})"
    ))
}

fn a6() -> Result<String> {
    let mut rng = TestRng::new(77);
    let grid = oracle::log_grid(LAMBDA_LO, LAMBDA_HI, 2000);
    let (mut checked, mut worst_l, mut worst_v) = (0, 0.0f64, 0.0f64);
    for seed in 0..50u64 {
        let n = rng.range(12, 40);
        let p = rng.range(3, 60);
        let phi = [0.0, 0.5, 0.9, 0.99][rng.range(0, 3)];
        let n_v = rng.range(2, n / 3);
        let split = HoldoutSplit::new(n, rng.range(0, n - n_v), n_v)?;
        let cols: Mat = (0..p)
            .map(|j| noise_column(NoiseKind::Ar1 { phi }, n, seed, j as u64))
            .collect();
        let s = gram_matrix(&standardize(&matrix(&cols), &split)?);
        let calib = split.calib_rows();
        let s_cc = s.select(Axis(0), calib).select(Axis(1), calib);
        let y = synthetic_target::<f64>(n, 1900, seed)?;
        let y_c: Vec<f64> = y
            .select(calib)
            .iter()
            .map(|v| v + 0.2 * rng.normal())
            .collect();

        let m = to_mat(&s_cc);
        let e = vec![1.0 / y_c.len() as f64; y_c.len()];
        let (l_grid, v_grid) =
            oracle::grid_argmin(&grid, |l| oracle::gcv_score_residual_form(&m, l, &e, &y_c));
        let got = match minimize_gcv(s_cc.view(), &WeightVector::uniform(y_c.len()), &y_c) {
            Ok(r) => r,
            Err(Error::FlatObjective { .. }) => continue,
            Err(e) => return Err(e.into()),
        };
        checked += 1;
        let dl = oracle::rel_diff(got.lambda_min, l_grid, 0.0);
        let dv = oracle::rel_diff(got.score, v_grid, 0.0);
        ensure!(
            dl < 0.01 && dv < 1e-3,
            "instance {seed}: lambda {dl:.2e}, score {dv:.2e}"
        );
        worst_l = worst_l.max(dl);
        worst_v = worst_v.max(dv);
    }
    ensure!(
        checked >= 45,
        "only {checked} instances had a well-defined minimum"
    );
    Ok(format!(
        "{checked} instances, worst lambda {:.2}%, worst score {:.1e}",
        100.0 * worst_l,
        worst_v
    ))
}

fn a7() -> Result<String> {
    let mut details = Vec::new();
    for phi in [0.0, 0.9, 0.99] {
        let cols: Mat = (0..1000)
            .map(|j| noise_column(NoiseKind::Ar1 { phi }, 1000, SEED, j))
            .collect();
        let r = oracle::pooled_lag1_autocorrelation(&cols);
        ensure!(
            (r - phi).abs() < 0.01,
            "phi {phi}: lag-1 autocorrelation {r:.4}"
        );
        details.push(format!("r1({phi}) = {r:.4}"));
    }
    let (n, per_batch, batches) = (50, 50_000, 16);
    for phi in [0.5, 0.99] {
        let mut acc = Array2::<f64>::zeros((n, n));
        for b in 0..batches {
            let x = noise_block::<f64>(
                NoiseKind::Ar1 { phi },
                n,
                SEED,
                (b * per_batch) as u64,
                per_batch,
            );
            acc += &x.dot(&x.t());
        }
        acc /= (per_batch * batches) as f64;
        let worst = (&acc - &ar1_covariance::<f64>(n, phi)?)
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        ensure!(worst < 0.01, "phi {phi}: covariance error {worst:.4}");
        details.push(format!("cov err({phi}) = {worst:.4}"));
    }
    Ok(details.join(", "))
}

fn csv_outputs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut v = Vec::new();
    for e in fs::read_dir(dir)? {
        let p = e?.path();
        if p.extension().is_some_and(|e| e == "csv" || e == "svg") {
            v.push(p);
        }
    }
    v.sort();
    Ok(v)
}

fn a8() -> Result<String> {
    let dir = tempfile::tempdir()?;
    let y = synthetic_target::<f64>(149, 1850, SEED)?;
    let x = generate::<f64>(&NoiseSpec::new(
        NoiseKind::Ar1 { phi: 0.9 },
        149,
        1138,
        SEED,
    )?)?;
    io::save_target(&y, dir.path().join("target.csv"))?;
    io::save_proxies(&x, y.years(), dir.path().join("proxies.csv"))?;
    let y2 = io::load_target::<f64>(dir.path().join("target.csv"))?;
    let x2 = io::load_proxies::<f64>(dir.path().join("proxies.csv"), y2.years())?;
    ensure!(
        y == y2 && x == x2,
        "target or proxy matrix changed on reload"
    );

    let base = ExperimentConfig {
        target_path: dir.path().join("target.csv"),
        proxy_source: Some(ProxySource::File(dir.path().join("proxies.csv"))),
        noise_columns: Some(200),
        ensemble_size: 3,
        psi_mc_columns: 5000,
        ..Default::default()
    };
    let mut files = 0;
    for run in ["crossval", "figure2"] {
        let mut outs = Vec::new();
        for k in 0..2 {
            let cfg = ExperimentConfig {
                output_dir: dir.path().join(format!("{run}{k}")),
                ..base.clone()
            };
            if run == "crossval" {
                cmd_crossval(&cfg)?;
            } else {
                cmd_figure2(&cfg)?;
            }
            outs.push(csv_outputs(&cfg.output_dir)?);
        }
        ensure!(
            !outs[0].is_empty() && outs[0].len() == outs[1].len(),
            "{run}: output lists differ"
        );
        for (a, b) in outs[0].iter().zip(&outs[1]) {
            ensure!(
                fs::read(a)? == fs::read(b)?,
                "{run}: {} differs between runs",
                a.display()
            );
        }
        files += outs[0].len();
    }

    let report = load_report(&dir.path().join("crossval0/blocks_proxies.csv"))?;
    let again = paleo_xval::run_experiment(
        &x,
        &y,
        &make_blocks(149, 30)?,
        RunOptions::default(),
        "proxies",
    )?;
    let worst = max_rel(&report, &again.block_rmse);
    ensure!(worst <= 1e-12, "report reload differs by {worst:.1e}");
    Ok(format!(
        "{files} output files byte-identical across reruns; reload error {worst:.1e}"
    ))
}

fn load_report(path: &Path) -> Result<Vec<f64>> {
    io::load_table(path)?
        .column("block_rmse")
        .context("no block_rmse column")
}

fn a9() -> Result<String> {
    let dir = tempfile::tempdir()?;
    let (target, proxies, source) = match (
        std::env::var_os("PALEO_XVAL_TARGET"),
        std::env::var_os("PALEO_XVAL_PROXIES"),
    ) {
        (Some(t), Some(p)) => (PathBuf::from(t), PathBuf::from(p), "user data"),
        _ => {
            cmd_synth(&SynthOptions {
                seed: SEED,
                out: dir.path().join("data"),
                ..Default::default()
            })?;
            (
                dir.path().join("data/target.csv"),
                dir.path().join("data/proxies.csv"),
                "synthetic 149 x 1138",
            )
        }
    };
    let cfg = ExperimentConfig {
        target_path: target,
        proxy_source: Some(ProxySource::File(proxies)),
        output_dir: dir.path().join("out"),
        ..Default::default()
    };
    let start = Instant::now();
    let out = cmd_crossval(&cfg)?;
    let took = start.elapsed();
    ensure!(took < Duration::from_secs(300), "crossval took {took:.0?}");
    ensure!(
        out.summary.iter().any(|r| r.label == "proxies"),
        "no proxies row in the summary"
    );
    ensure!(
        cfg.output_dir.join("summary.csv").exists(),
        "summary.csv missing"
    );
    let n = out.reports[0].len();
    Ok(format!(
        "{source}: {} experiments over {n} blocks in {took:.1?}",
        out.summary.len()
    ))
}

type Check = fn() -> Result<String>;

fn main() -> ExitCode {
    let criteria: [(&str, Check, u64); 9] = [
        ("A1", a1, 1),
        ("A2", a2, 10),
        ("A3", a3, 600),
        ("A4", a4, 1800),
        ("A5", a5, 60),
        ("A6", a6, 60),
        ("A7", a7, 120),
        ("A8", a8, 60),
        ("A9", a9, 300),
    ];
    let only: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| a.starts_with('A'))
        .collect();
    let mut failed = 0;
    for (id, check, budget) in criteria {
        if !only.is_empty() && !only.iter().any(|o| o == id) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check));
        let took = start.elapsed();
        let line = match outcome {
            Ok(Ok(detail)) if took.as_secs_f64() <= budget as f64 => Ok(detail),
            Ok(Ok(detail)) => Err(format!("{detail}; over the {budget} s budget")),
            Ok(Err(e)) => Err(format!("{e:#}")),
            Err(panic) => Err(panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into())),
        };
        match line {
            Ok(detail) => println!("PASS {id} ({:.1} s): {detail}", took.as_secs_f64()),
            Err(reason) => {
                failed += 1;
                println!("FAIL {id} ({:.1} s): {reason}", took.as_secs_f64());
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
