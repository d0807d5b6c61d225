use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use paleo_xval::io::{save_proxies, save_target, ExperimentConfig, ProxySource};
use paleo_xval::{generate, synthetic_target, NoiseKind, NoiseSpec, ProxyMatrix};

/// Synthetic inputs in the documented CSV formats.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    pub n: usize,
    pub first_year: i32,
    /// Proxy columns; 0 writes only the target.
    pub p: usize,
    /// Target-to-noise amplitude ratio of each proxy.
    pub snr: f64,
    /// AR(1) coefficient of the proxy noise.
    pub phi: f64,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            n: 149,
            first_year: 1850,
            p: 1138,
            snr: 0.4,
            phi: 0.5,
            seed: 0,
            out: PathBuf::from("synthetic"),
        }
    }
}

/// Writes `target.csv`, `proxies.csv` (when `p > 0`) and a `config.json`
/// that points at them. Returns the written paths.
pub fn cmd_synth(opts: &SynthOptions) -> Result<Vec<PathBuf>> {
    if !(opts.snr.is_finite() && opts.snr >= 0.0) {
        bail!("snr must be a finite non-negative number, got {}", opts.snr);
    }
    std::fs::create_dir_all(&opts.out)
        .with_context(|| format!("creating {}", opts.out.display()))?;
    let y = synthetic_target::<f64>(opts.n, opts.first_year, opts.seed)?;
    let mut files = Vec::new();
    let target = opts.out.join("target.csv");
    save_target(&y, &target)?;
    files.push(target.clone());

    let mut cfg = ExperimentConfig {
        target_path: "target.csv".into(),
        seed: opts.seed,
        ..Default::default()
    };
    if opts.p > 0 {
        let noise = generate::<f64>(&NoiseSpec::new(
            NoiseKind::Ar1 { phi: opts.phi },
            opts.n,
            opts.p,
            opts.seed,
        )?)?;
        let m = y.mean();
        let sd = (y.values().iter().map(|v| (v - m) * (v - m)).sum::<f64>()
            / (opts.n as f64 - 1.0))
            .sqrt();
        let mut x = noise.data().clone();
        for mut col in x.columns_mut() {
            for (v, t) in col.iter_mut().zip(y.values()) {
                *v += opts.snr * (t - m) / sd;
            }
        }
        let proxies = opts.out.join("proxies.csv");
        save_proxies(&ProxyMatrix::with_default_ids(x)?, y.years(), &proxies)?;
        files.push(proxies);
        cfg.proxy_source = Some(ProxySource::File("proxies.csv".into()));
    }
    let config = opts.out.join("config.json");
    cfg.save(&config)?;
    files.push(config);
    Ok(files)
}
