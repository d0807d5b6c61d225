//! Batch commands behind the `paleo-xval` binary: cross-validation
//! summaries, the ensemble/limit/kriging comparison figure, and the
//! large-p convergence study. Every command writes its outputs and a
//! `manifest.json` into the configured output directory.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::warn;
use paleo_xval::io::{self, ExperimentConfig, ProxySource, DEFAULT_NOISE_COLUMNS};
use paleo_xval::{generate, make_blocks, HoldoutSplit, ProxyMatrix64, RunOptions, TimeSeries64};

mod convergence;
mod crossval;
mod figure2;
pub mod svg;
mod synth;

pub use convergence::{cmd_limit, convergence_study, ConvergenceStudy, LadderRow};
pub use crossval::{cmd_crossval, CrossvalOutput};
pub use figure2::{cmd_figure2, Figure2Output};
pub use synth::{cmd_synth, SynthOptions};

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub target: Option<PathBuf>,
    pub proxies: Option<PathBuf>,
    pub seed: Option<u64>,
    pub n_v: Option<usize>,
    pub ensemble: Option<usize>,
    /// One value also sets `limit_phi`.
    pub phi: Option<Vec<f64>>,
    pub mc_columns: Option<usize>,
    pub drop_degenerate: bool,
    pub center_target: bool,
    pub out: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(t) = &self.target {
            cfg.target_path = t.clone();
        }
        if let Some(p) = &self.proxies {
            cfg.proxy_source = Some(ProxySource::File(p.clone()));
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(n) = self.n_v {
            cfg.n_v = n;
        }
        if let Some(m) = self.ensemble {
            cfg.ensemble_size = m;
        }
        if let Some(phi) = &self.phi {
            if let [only] = phi.as_slice() {
                cfg.limit_phi = *only;
            }
            cfg.phi_list = phi.clone();
        }
        if let Some(p) = self.mc_columns {
            cfg.psi_mc_columns = p;
        }
        cfg.drop_degenerate |= self.drop_degenerate;
        cfg.center_target |= self.center_target;
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Loads a config (or run manifest). Relative input paths are taken
/// relative to the file's directory and made absolute, so a manifest can
/// be replayed from anywhere.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let parent = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let base = std::path::absolute(parent)?;
    cfg.target_path = resolve(&base, &cfg.target_path);
    if let Some(ProxySource::File(p)) = &cfg.proxy_source {
        cfg.proxy_source = Some(ProxySource::File(resolve(&base, p)));
    }
    Ok(cfg)
}

/// Validated inputs shared by every command.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub y: TimeSeries64,
    /// Label and matrix of the configured proxy source, if any.
    pub proxies: Option<(String, ProxyMatrix64)>,
    pub splits: Vec<HoldoutSplit>,
}

impl Inputs {
    /// Column count for noise matrices.
    pub fn noise_columns(&self, cfg: &ExperimentConfig) -> usize {
        cfg.noise_columns
            .or(self.proxies.as_ref().map(|(_, x)| x.ncols()))
            .unwrap_or(DEFAULT_NOISE_COLUMNS)
    }

    /// Calendar year of each split's first validation row.
    pub fn block_years(&self) -> Vec<f64> {
        self.splits
            .iter()
            .map(|s| self.y.years()[s.block_start()] as f64)
            .collect()
    }

    /// True when the proxy source is a real proxy file.
    pub fn has_proxy_file(&self, cfg: &ExperimentConfig) -> bool {
        matches!(cfg.proxy_source, Some(ProxySource::File(_)))
    }
}

pub fn run_options(cfg: &ExperimentConfig) -> RunOptions {
    RunOptions {
        mode: cfg.mode,
        drop_degenerate: cfg.drop_degenerate,
    }
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Inputs> {
    cfg.validate()?;
    let y = io::load_target::<f64>(&cfg.target_path)
        .with_context(|| format!("loading target series {}", cfg.target_path.display()))?;
    let y = if cfg.center_target { y.centered() } else { y };
    let proxies = match &cfg.proxy_source {
        None => None,
        Some(ProxySource::File(path)) => {
            let x = io::load_proxies::<f64>(path, y.years())
                .with_context(|| format!("loading proxy matrix {}", path.display()))?;
            Some(("proxies".to_string(), x))
        }
        Some(ProxySource::Noise(spec)) => {
            if spec.n != y.len() {
                bail!(
                    "noise proxy source has n = {} but the target has {} years",
                    spec.n,
                    y.len()
                );
            }
            Some((spec.kind.label(), generate::<f64>(spec)?))
        }
    };
    let splits = make_blocks(y.len(), cfg.n_v)?;
    Ok(Inputs { y, proxies, splits })
}

/// Warns when a zero prior mean is a poor assumption for the target.
pub(crate) fn warn_if_uncentered(y: &TimeSeries64) {
    let m = y.mean();
    let n = y.len() as f64;
    let sd = (y.values().iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)).sqrt();
    if m.abs() > 0.5 * sd {
        warn!(
            "target mean {m:.4} is {:.1} standard deviations from zero; simple kriging assumes a zero prior mean (see --center-target)",
            m.abs() / sd
        );
    }
}

pub(crate) fn ensure_out_dir(cfg: &ExperimentConfig) -> Result<PathBuf> {
    std::fs::create_dir_all(&cfg.output_dir)
        .with_context(|| format!("creating output directory {}", cfg.output_dir.display()))?;
    Ok(cfg.output_dir.clone())
}

pub(crate) fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// RMS difference of two equally long curves.
pub fn rms_between(a: &[f64], b: &[f64]) -> f64 {
    let ss: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (ss / a.len() as f64).sqrt()
}

pub(crate) fn median(v: &[f64]) -> f64 {
    let mut s: Vec<f64> = v.iter().copied().filter(|x| !x.is_nan()).collect();
    if s.is_empty() {
        return f64::NAN;
    }
    s.sort_by(f64::total_cmp);
    let k = s.len() / 2;
    if s.len() % 2 == 1 {
        s[k]
    } else {
        0.5 * (s[k - 1] + s[k])
    }
}
