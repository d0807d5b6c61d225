use std::path::PathBuf;

use anyhow::{Context, Result};
use log::info;
use paleo_xval::io::{self, ExperimentConfig, ProxySource, RunManifest, SummaryRow};
use paleo_xval::{generate, run_experiment, ExperimentReport64, NoiseKind, NoiseSpec};

use crate::{ensure_out_dir, file_name, prepare, run_options};

#[derive(Debug, Clone)]
pub struct CrossvalOutput {
    pub reports: Vec<ExperimentReport64>,
    /// Sorted by mean RMSE, ascending.
    pub summary: Vec<SummaryRow>,
    pub files: Vec<PathBuf>,
}

impl CrossvalOutput {
    pub fn table(&self) -> String {
        let mut s = format!("{:<24} {:>12} {:>8}\n", "experiment", "mean RMSE", "blocks");
        for r in &self.summary {
            s.push_str(&format!(
                "{:<24} {:>12.6} {:>8}\n",
                r.label, r.mean_rmse, r.n_blocks
            ));
        }
        s
    }
}

/// Noise experiments run alongside the proxy source.
fn noise_kinds(cfg: &ExperimentConfig) -> Vec<NoiseKind> {
    if let Some(kinds) = &cfg.noise_experiments {
        return kinds.clone();
    }
    match cfg.proxy_source {
        Some(ProxySource::Noise(_)) => Vec::new(),
        _ => {
            let mut kinds = vec![NoiseKind::White, NoiseKind::Brownian];
            kinds.extend(cfg.phi_list.iter().map(|&phi| NoiseKind::Ar1 { phi }));
            kinds
        }
    }
}

/// Cross-validates the proxy source and one realization of each noise
/// experiment over every holdout block.
pub fn cmd_crossval(cfg: &ExperimentConfig) -> Result<CrossvalOutput> {
    let inputs = prepare(cfg)?;
    let opts = run_options(cfg);
    let out = ensure_out_dir(cfg)?;
    let mut reports = Vec::new();

    if let Some((label, x)) = &inputs.proxies {
        info!("crossval: {label} ({} x {})", x.nrows(), x.ncols());
        reports.push(run_experiment(x, &inputs.y, &inputs.splits, opts, label)?);
    }
    let p = inputs.noise_columns(cfg);
    for kind in noise_kinds(cfg) {
        let spec = NoiseSpec::new(kind, inputs.y.len(), p, cfg.seed)?;
        info!("crossval: {} ({} x {p})", kind.label(), inputs.y.len());
        let x = generate::<f64>(&spec)?;
        reports.push(run_experiment(
            &x,
            &inputs.y,
            &inputs.splits,
            opts,
            &kind.label(),
        )?);
    }

    let mut files = Vec::new();
    for r in &reports {
        files.push(io::write_report(r, &out)?);
    }
    let mut summary: Vec<SummaryRow> = reports
        .iter()
        .map(|r| SummaryRow {
            label: r.label.clone(),
            mean_rmse: r.mean_rmse,
            n_blocks: r.len(),
        })
        .collect();
    let summary_path = out.join("summary.csv");
    io::write_summary(&summary, &summary_path).context("writing summary")?;
    summary.sort_by(|a, b| {
        a.mean_rmse
            .total_cmp(&b.mean_rmse)
            .then_with(|| a.label.cmp(&b.label))
    });
    files.push(summary_path);

    let names = files.iter().map(|f| file_name(f)).collect();
    files.push(RunManifest::new("crossval", cfg, names).write(&out)?);
    Ok(CrossvalOutput {
        reports,
        summary,
        files,
    })
}
