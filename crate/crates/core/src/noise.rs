//! Noise pseudoproxies: white, stationary AR(1) and Brownian columns.
//!
//! Column `j` of a matrix generated with seed `s` is drawn from ChaCha8
//! stream `j` keyed by `s`, so any column can be regenerated on its own and
//! results do not depend on how columns are scheduled across threads.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{ProxyMatrix, TimeSeries};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoiseKind {
    White,
    Ar1 { phi: f64 },
    Brownian,
}

impl NoiseKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseKind::Ar1 { phi } if !(0.0..1.0).contains(&phi) => Err(Error::InvalidInput(
                format!("AR(1) coefficient must lie in [0, 1), got {phi}"),
            )),
            _ => Ok(()),
        }
    }

    /// Short label used in file names and tables, e.g. `ar1_0.99`.
    pub fn label(&self) -> String {
        match self {
            NoiseKind::White => "white".into(),
            NoiseKind::Ar1 { phi } => format!("ar1_{phi}"),
            NoiseKind::Brownian => "brownian".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(flatten)]
    pub kind: NoiseKind,
    pub n: usize,
    pub p: usize,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind, n: usize, p: usize, seed: u64) -> Result<Self> {
        let spec = Self { kind, n, p, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.kind.validate()?;
        if self.n < 2 || self.p < 1 {
            return Err(Error::InvalidInput(format!(
                "noise matrix needs n >= 2 and p >= 1, got {}x{}",
                self.n, self.p
            )));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

/// RNG for column `column` of a matrix generated with `seed`.
pub fn column_rng(seed: u64, column: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(column);
    rng
}

/// One noise column of length `n`.
pub fn noise_column(kind: NoiseKind, n: usize, seed: u64, column: u64) -> Vec<f64> {
    let mut rng = column_rng(seed, column);
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
    let mut out = Vec::with_capacity(n);
    match kind {
        NoiseKind::White => out.extend((0..n).map(|_| draw())),
        NoiseKind::Ar1 { phi } => {
            let innov = (1.0 - phi * phi).sqrt();
            let mut x = draw();
            out.push(x);
            for _ in 1..n {
                x = phi * x + innov * draw();
                out.push(x);
            }
        }
        NoiseKind::Brownian => {
            let mut x = 0.0;
            for _ in 0..n {
                x += draw();
                out.push(x);
            }
        }
    }
    out
}

/// Columns `first..first + count` written into an n×count row-major array.
pub fn noise_block<T: Real>(
    kind: NoiseKind,
    n: usize,
    seed: u64,
    first: u64,
    count: usize,
) -> Array2<T> {
    let cols: Vec<Vec<f64>> = (0..count as u64)
        .into_par_iter()
        .map(|j| noise_column(kind, n, seed, first + j))
        .collect();
    let mut out = Array2::<T>::zeros((n, count));
    for (j, col) in cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            out[[i, j]] = T::lit(v);
        }
    }
    out
}

/// n×p noise matrix; bit-identical for identical specs.
pub fn generate<T: Real>(spec: &NoiseSpec) -> Result<ProxyMatrix<T>> {
    spec.validate()?;
    let data = noise_block(spec.kind, spec.n, spec.seed, 0, spec.p);
    let prefix = spec.kind.label();
    let ids = (0..spec.p).map(|j| format!("{prefix}_{j:05}")).collect();
    ProxyMatrix::new(data, ids)
}

/// Φ with entries φ^|i−j|.
pub fn ar1_covariance<T: Real>(n: usize, phi: f64) -> Result<Array2<T>> {
    NoiseKind::Ar1 { phi }.validate()?;
    let phi_t = T::lit(phi);
    Ok(Array2::from_shape_fn((n, n), |(i, j)| {
        ar1_correlation(phi_t, T::from_count(i.abs_diff(j)))
    }))
}

/// φ^τ, the AR(1) autocorrelation at (real) lag τ.
#[inline]
pub fn ar1_correlation<T: Real>(phi: T, tau: T) -> T {
    phi.powf(tau)
}

/// A smooth synthetic annual target: a low-pass filtered AR(0.9) process
/// plus a late warming trend, roughly the shape of an instrumental
/// hemispheric mean anomaly series.
pub fn synthetic_target<T: Real>(n: usize, first_year: i32, seed: u64) -> Result<TimeSeries<T>> {
    const HALF_WINDOW: usize = 5;
    let raw = noise_column(
        NoiseKind::Ar1 { phi: 0.9 },
        n + 2 * HALF_WINDOW,
        seed,
        u64::MAX,
    );
    let width = (2 * HALF_WINDOW + 1) as f64;
    let values = (0..n)
        .map(|t| {
            let smooth: f64 = raw[t..t + 2 * HALF_WINDOW + 1].iter().sum::<f64>() / width;
            let frac = t as f64 / (n - 1).max(1) as f64;
            let trend = 0.9 * (frac - 0.6).max(0.0).powi(2) / 0.16;
            T::lit(0.12 * smooth + trend - 0.3)
        })
        .collect();
    TimeSeries::from_values(first_year, values)
}
