use std::path::PathBuf;

use anyhow::Result;
use log::info;
use paleo_xval::io::{self, format_float, ExperimentConfig, RunManifest};
use paleo_xval::{
    kriging_experiment, limit_experiment, rms_difference, rms_difference_predictions, run_ensemble,
    run_experiment, EnsembleReport64, ExperimentReport64, KrigingSpec, NoiseKind, NoiseSpec,
};

use crate::svg::{PlotSpec, Series, Style};
use crate::{ensure_out_dir, file_name, prepare, rms_between, run_options, warn_if_uncentered};

/// Offset between ensemble seeds and the Ψ Monte Carlo seed, so the limit
/// estimate never reuses an ensemble member's columns.
pub(crate) const PSI_SEED_OFFSET: u64 = 1 << 32;

#[derive(Debug, Clone)]
pub struct Figure2Output {
    pub proxies: Option<ExperimentReport64>,
    pub white: EnsembleReport64,
    pub ar1: EnsembleReport64,
    pub limit: ExperimentReport64,
    pub kriging: ExperimentReport64,
    /// RMS difference of the limit and kriging RMSE curves.
    pub limit_vs_kriging: f64,
    /// Same, over concatenated validation predictions.
    pub limit_vs_kriging_predictions: f64,
    pub limit_vs_ar1_mean: f64,
    pub kriging_vs_ar1_mean: f64,
    pub files: Vec<PathBuf>,
}

impl Figure2Output {
    pub fn table(&self) -> String {
        let mut s = String::new();
        if let Some(p) = &self.proxies {
            s.push_str(&format!("{:<34} {:.6}\n", "proxies mean RMSE", p.mean_rmse));
        }
        s.push_str(&format!(
            "{:<34} {:.6}\n",
            "white ensemble mean RMSE",
            self.white.mean_rmse()
        ));
        s.push_str(&format!(
            "{:<34} {:.6}\n",
            format!("{} ensemble mean RMSE", self.ar1.label),
            self.ar1.mean_rmse()
        ));
        s.push_str(&format!(
            "{:<34} {:.6}\n",
            "limit mean RMSE", self.limit.mean_rmse
        ));
        s.push_str(&format!(
            "{:<34} {:.6}\n",
            "kriging mean RMSE", self.kriging.mean_rmse
        ));
        s.push_str(&format!(
            "{:<34} {:.3e}\n",
            "RMS diff limit vs ensemble mean", self.limit_vs_ar1_mean
        ));
        s.push_str(&format!(
            "{:<34} {:.3e}\n",
            "RMS diff kriging vs ensemble mean", self.kriging_vs_ar1_mean
        ));
        s.push_str(&format!(
            "{:<34} {:.3e}\n",
            "RMS diff limit vs kriging (RMSE)", self.limit_vs_kriging
        ));
        s.push_str(&format!(
            "{:<34} {:.3e}\n",
            "RMS diff limit vs kriging (values)", self.limit_vs_kriging_predictions
        ));
        s
    }
}

/// White and AR(1) ensembles, the p → ∞ limit of the AR(1) ensemble, and
/// simple kriging, as one table and one chart.
pub fn cmd_figure2(cfg: &ExperimentConfig) -> Result<Figure2Output> {
    let inputs = prepare(cfg)?;
    let opts = run_options(cfg);
    let out = ensure_out_dir(cfg)?;
    let (y, splits) = (&inputs.y, &inputs.splits);
    warn_if_uncentered(y);
    let p = inputs.noise_columns(cfg);
    let m = cfg.ensemble_size;
    let phi = cfg.limit_phi;

    let proxies = match (&inputs.proxies, inputs.has_proxy_file(cfg)) {
        (Some((label, x)), true) => Some(run_experiment(x, y, splits, opts, label)?),
        _ => None,
    };
    info!("figure2: white ensemble, {m} members of {} x {p}", y.len());
    let white = run_ensemble(
        &NoiseSpec::new(NoiseKind::White, y.len(), p, cfg.seed)?,
        y,
        splits,
        m,
        opts,
    )?;
    info!("figure2: AR(1) phi={phi} ensemble");
    let ar1_seed = cfg.seed.wrapping_add(m as u64);
    let ar1 = run_ensemble(
        &NoiseSpec::new(NoiseKind::Ar1 { phi }, y.len(), p, ar1_seed)?,
        y,
        splits,
        m,
        opts,
    )?;
    info!(
        "figure2: limit with {} Monte Carlo columns",
        cfg.psi_mc_columns
    );
    let limit = limit_experiment(
        phi,
        y,
        splits,
        cfg.psi_mc_columns,
        cfg.seed.wrapping_add(PSI_SEED_OFFSET),
    )?;
    let kriging = kriging_experiment(y, splits, KrigingSpec::gcv(phi))?;

    let limit_vs_kriging = rms_difference(&limit, &kriging)?;
    let limit_vs_kriging_predictions = rms_difference_predictions(&limit, &kriging)?;
    // Ensemble curves can miss blocks in permissive mode; compare on shared blocks.
    let on_shared = |r: &ExperimentReport64| {
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for (i, s) in ar1.block_starts.iter().enumerate() {
            if let Some(j) = r.block_starts.iter().position(|t| t == s) {
                a.push(ar1.mean_curve[i]);
                b.push(r.block_rmse[j]);
            }
        }
        rms_between(&a, &b)
    };
    let limit_vs_ar1_mean = on_shared(&limit);
    let kriging_vs_ar1_mean = on_shared(&kriging);

    let mut files = vec![
        io::write_ensemble_report(&white, &out)?,
        io::write_ensemble_report(&ar1, &out)?,
        io::write_report(&limit, &out)?,
        io::write_report(&kriging, &out)?,
    ];
    if let Some(r) = &proxies {
        files.push(io::write_report(r, &out)?);
    }

    let years = inputs.block_years();
    let lookup = |starts: &[usize], vals: &[f64], b: usize| {
        starts
            .iter()
            .position(|&s| s == b)
            .map(|i| vals[i])
            .unwrap_or(f64::NAN)
    };
    let mut header = vec!["block_start".to_string(), "year".to_string()];
    if proxies.is_some() {
        header.push("proxies".into());
    }
    for e in [&white, &ar1] {
        header.push(format!("{}_mean", e.label));
        header.push(format!("{}_scatter", e.label));
    }
    header.push(limit.label.clone());
    header.push(kriging.label.clone());
    let rows = splits.iter().zip(&years).map(|(s, year)| {
        let b = s.block_start();
        let mut vals = Vec::new();
        if let Some(r) = &proxies {
            vals.push(lookup(&r.block_starts, &r.block_rmse, b));
        }
        for e in [&white, &ar1] {
            vals.push(lookup(&e.block_starts, &e.mean_curve, b));
            vals.push(lookup(&e.block_starts, &e.member_scatter, b));
        }
        vals.push(lookup(&limit.block_starts, &limit.block_rmse, b));
        vals.push(lookup(&kriging.block_starts, &kriging.block_rmse, b));
        let mut row = vec![b.to_string(), format!("{year}")];
        row.extend(vals.into_iter().map(|v| {
            if v.is_nan() {
                String::new()
            } else {
                format_float(v)
            }
        }));
        row
    });
    let csv_path = out.join("figure2.csv");
    io::write_csv(&csv_path, &header, rows)?;
    files.push(csv_path);

    let svg_path = out.join("figure2.svg");
    figure2_plot(
        &inputs.block_years(),
        splits,
        proxies.as_ref(),
        &white,
        &ar1,
        &limit,
        &kriging,
        svg_path.clone(),
    )
    .write()?;
    files.push(svg_path);

    let names = files.iter().map(|f| file_name(f)).collect();
    files.push(RunManifest::new("figure2", cfg, names).write(&out)?);
    Ok(Figure2Output {
        proxies,
        white,
        ar1,
        limit,
        kriging,
        limit_vs_kriging,
        limit_vs_kriging_predictions,
        limit_vs_ar1_mean,
        kriging_vs_ar1_mean,
        files,
    })
}

#[allow(clippy::too_many_arguments)]
fn figure2_plot(
    years: &[f64],
    splits: &[paleo_xval::HoldoutSplit],
    proxies: Option<&ExperimentReport64>,
    white: &EnsembleReport64,
    ar1: &EnsembleReport64,
    limit: &ExperimentReport64,
    kriging: &ExperimentReport64,
    output: PathBuf,
) -> PlotSpec {
    let year_of = |start: usize| {
        splits
            .iter()
            .position(|s| s.block_start() == start)
            .map(|i| years[i])
            .unwrap_or(f64::NAN)
    };
    let xs = |starts: &[usize]| starts.iter().map(|&b| year_of(b)).collect::<Vec<f64>>();
    let mut series = Vec::new();
    for (ens, color, name) in [
        (white, "magenta", "white-noise members"),
        (ar1, "gold", "AR(1) members"),
    ] {
        for (i, m) in ens.member_reports.iter().enumerate() {
            series.push(Series {
                label: m.label.clone(),
                x: xs(&m.block_starts),
                y: m.block_rmse.clone(),
                style: Style::Dots { color, radius: 1.6 },
                legend: (i == 0).then(|| name.to_string()),
            });
        }
    }
    if let Some(r) = proxies {
        series.push(Series {
            label: r.label.clone(),
            x: xs(&r.block_starts),
            y: r.block_rmse.clone(),
            style: Style::Line {
                color: "red",
                width: 2.0,
            },
            legend: Some("real proxies".into()),
        });
    }
    series.push(Series {
        label: format!("{}_mean", white.label),
        x: xs(&white.block_starts),
        y: white.mean_curve.clone(),
        style: Style::Line {
            color: "blue",
            width: 2.0,
        },
        legend: Some(format!("white mean (m={})", white.size())),
    });
    series.push(Series {
        label: format!("{}_mean", ar1.label),
        x: xs(&ar1.block_starts),
        y: ar1.mean_curve.clone(),
        style: Style::Line {
            color: "black",
            width: 2.0,
        },
        legend: Some(format!("AR(1) mean (m={})", ar1.size())),
    });
    series.push(Series {
        label: limit.label.clone(),
        x: xs(&limit.block_starts),
        y: limit.block_rmse.clone(),
        style: Style::Dashed {
            color: "magenta",
            width: 2.0,
        },
        legend: Some("p → ∞ limit".into()),
    });
    series.push(Series {
        label: kriging.label.clone(),
        x: xs(&kriging.block_starts),
        y: kriging.block_rmse.clone(),
        style: Style::Line {
            color: "green",
            width: 2.0,
        },
        legend: Some("simple kriging".into()),
    });
    PlotSpec {
        title: "Holdout RMSE by validation block".into(),
        x_label: "first year of the holdout block".into(),
        y_label: "RMSE".into(),
        series,
        output,
    }
}
