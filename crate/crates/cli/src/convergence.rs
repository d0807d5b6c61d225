use std::path::PathBuf;

use anyhow::{bail, Result};
use log::info;
use paleo_xval::io::{self, format_float, ExperimentConfig, RunManifest};
use paleo_xval::{
    limit_experiment, rms_difference, run_ensemble, EnsembleReport64, ExperimentReport64,
    NoiseKind, NoiseSpec,
};

use crate::figure2::PSI_SEED_OFFSET;
use crate::{ensure_out_dir, file_name, median, prepare, run_options, warn_if_uncentered, Inputs};

/// One rung of the column-count ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderRow {
    pub p: usize,
    pub members: usize,
    pub mean_rmse: f64,
    /// Median over blocks of the member standard deviation of block RMSE.
    pub median_scatter: f64,
    /// Median over members of the RMS difference between the member's
    /// RMSE curve and the limit curve.
    pub median_rms_diff: f64,
    /// Large-sample standard error of `median_rms_diff`.
    pub median_rms_diff_se: f64,
    /// Fraction of blocks whose scatter dropped from the previous rung
    /// (`NaN` on the first rung).
    pub frac_scatter_decrease: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    pub phi: f64,
    pub limit: ExperimentReport64,
    pub ensembles: Vec<EnsembleReport64>,
    pub rows: Vec<LadderRow>,
    /// Fraction of blocks whose scatter decreases strictly along the
    /// whole ladder.
    pub frac_blocks_monotone: f64,
}

impl ConvergenceStudy {
    pub fn table(&self) -> String {
        let mut s = format!(
            "AR(1) phi={} limit mean RMSE {:.6}\n{:>8} {:>8} {:>12} {:>14} {:>16} {:>12} {:>10}\n",
            self.phi,
            self.limit.mean_rmse,
            "p",
            "members",
            "mean RMSE",
            "med. scatter",
            "med. RMS diff",
            "(s.e.)",
            "drop frac"
        );
        for r in &self.rows {
            let drop = if r.frac_scatter_decrease.is_nan() {
                "-".to_string()
            } else {
                format!("{:.3}", r.frac_scatter_decrease)
            };
            s.push_str(&format!(
                "{:>8} {:>8} {:>12.6} {:>14.3e} {:>16.3e} {:>12.1e} {:>10}\n",
                r.p,
                r.members,
                r.mean_rmse,
                r.median_scatter,
                r.median_rms_diff,
                r.median_rms_diff_se,
                drop
            ));
        }
        s.push_str(&format!(
            "blocks with monotone scatter: {:.3}\n",
            self.frac_blocks_monotone
        ));
        s
    }
}

fn sample_sd(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// AR(1) ensembles at each ladder column count, compared with the limit
/// reconstruction built from the same coefficient.
pub fn convergence_study(cfg: &ExperimentConfig, inputs: &Inputs) -> Result<ConvergenceStudy> {
    if cfg.p_ladder.is_empty() {
        bail!("p_ladder is empty");
    }
    if cfg.limit_members < 2 {
        bail!(
            "limit_members must be at least 2 to measure scatter, got {}",
            cfg.limit_members
        );
    }
    let (y, splits) = (&inputs.y, &inputs.splits);
    let opts = run_options(cfg);
    let phi = cfg.limit_phi;
    info!(
        "limit: phi={phi}, {} Monte Carlo columns",
        cfg.psi_mc_columns
    );
    let limit = limit_experiment(
        phi,
        y,
        splits,
        cfg.psi_mc_columns,
        cfg.seed.wrapping_add(PSI_SEED_OFFSET),
    )?;

    let mut ensembles = Vec::new();
    let mut rows: Vec<LadderRow> = Vec::new();
    for &p in &cfg.p_ladder {
        info!("limit: {} members at p={p}", cfg.limit_members);
        let spec = NoiseSpec::new(NoiseKind::Ar1 { phi }, y.len(), p, cfg.seed)?;
        let mut ens = run_ensemble(&spec, y, splits, cfg.limit_members, opts)?;
        ens.label = format!("{}_p{p}", ens.label);
        let diffs = ens
            .member_reports
            .iter()
            .map(|m| rms_difference(m, &limit))
            .collect::<paleo_xval::Result<Vec<f64>>>()?;
        let frac_scatter_decrease = match ensembles.last() {
            Some(prev) => frac_monotone(&[prev, &ens]),
            None => f64::NAN,
        };
        rows.push(LadderRow {
            p,
            members: ens.size(),
            mean_rmse: ens.mean_rmse(),
            median_scatter: median(&ens.member_scatter),
            median_rms_diff: median(&diffs),
            median_rms_diff_se: 1.2533 * sample_sd(&diffs) / (diffs.len() as f64).sqrt(),
            frac_scatter_decrease,
        });
        ensembles.push(ens);
    }
    let frac_blocks_monotone = frac_monotone(&ensembles.iter().collect::<Vec<_>>());
    Ok(ConvergenceStudy {
        phi,
        limit,
        ensembles,
        rows,
        frac_blocks_monotone,
    })
}

/// Fraction of blocks (present in every ensemble) whose scatter strictly
/// decreases along the list.
fn frac_monotone(ensembles: &[&EnsembleReport64]) -> f64 {
    let Some(first) = ensembles.first() else {
        return f64::NAN;
    };
    let (mut total, mut hits) = (0usize, 0usize);
    for &b in &first.block_starts {
        let scatter: Option<Vec<f64>> = ensembles
            .iter()
            .map(|e| {
                e.block_starts
                    .iter()
                    .position(|&s| s == b)
                    .map(|i| e.member_scatter[i])
            })
            .collect();
        if let Some(s) = scatter {
            total += 1;
            hits += s.windows(2).all(|w| w[1] < w[0]) as usize;
        }
    }
    hits as f64 / total as f64
}

/// Runs the convergence study and writes `limit.csv`, one blocks file per
/// rung and the limit curve.
pub fn cmd_limit(cfg: &ExperimentConfig) -> Result<ConvergenceStudy> {
    let inputs = prepare(cfg)?;
    let out = ensure_out_dir(cfg)?;
    warn_if_uncentered(&inputs.y);
    let study = convergence_study(cfg, &inputs)?;

    let mut files: Vec<PathBuf> = Vec::new();
    files.push(io::write_report(&study.limit, &out)?);
    for e in &study.ensembles {
        files.push(io::write_ensemble_report(e, &out)?);
    }
    let header: Vec<String> = [
        "p",
        "members",
        "mean_rmse",
        "median_scatter",
        "median_rms_diff",
        "median_rms_diff_se",
        "rel_rms_diff",
        "frac_scatter_decrease",
    ]
    .map(String::from)
    .to_vec();
    let limit_mean = study.limit.mean_rmse;
    let rows = study.rows.iter().map(|r| {
        let num = |v: f64| {
            if v.is_nan() {
                String::new()
            } else {
                format_float(v)
            }
        };
        vec![
            r.p.to_string(),
            r.members.to_string(),
            num(r.mean_rmse),
            num(r.median_scatter),
            num(r.median_rms_diff),
            num(r.median_rms_diff_se),
            num(r.median_rms_diff / limit_mean),
            num(r.frac_scatter_decrease),
        ]
    });
    let path = out.join("limit.csv");
    io::write_csv(&path, &header, rows)?;
    files.push(path);

    let names = files.iter().map(|f| file_name(f)).collect();
    files.push(RunManifest::new("limit", cfg, names).write(&out)?);
    Ok(study)
}
