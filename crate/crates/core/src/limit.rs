//! Large-p limits of noise reconstructions.
//!
//! For i.i.d. noise columns, S_p = X̃X̃ᵀ/p is an average of p i.i.d. outer
//! products and converges in probability to Ψ = E x̃x̃ᵀ. Ψ depends on the
//! calibration rows through standardization, so it is estimated per split,
//! here by Monte Carlo. The intercept-free, unstandardized analogue of the
//! same limit is simple kriging with the AR(1) covariance Φ.

use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;

use crate::crossval::ExperimentReport;
use crate::data::{HoldoutSplit, ReconstructionResult, TimeSeries, WeightVector};
use crate::error::{Error, Result};
use crate::gcv::minimize_gcv;
use crate::linalg::Cholesky;
use crate::noise::{ar1_correlation, ar1_covariance, noise_block, NoiseKind};
use crate::ridge::{reconstruct, rmse, standardize_view};
use crate::scalar::Real;

pub const DEFAULT_PSI_COLUMNS: usize = 100_000;
pub const MIN_PSI_COLUMNS: usize = 1000;
/// Columns generated and standardized at a time.
const BATCH_COLUMNS: usize = 2048;

/// Monte Carlo estimate of Ψ for one split.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiEstimate<T> {
    pub psi: Array2<T>,
    pub n_columns: usize,
    pub phi: f64,
    pub split: HoldoutSplit,
    /// Entrywise RMS difference between the estimates from the first and
    /// second half of the columns.
    pub half_split_rms_diff: T,
}

/// Ψ for one split from `n_columns` AR(1; φ) columns.
pub fn estimate_psi<T: Real>(
    phi: f64,
    split: &HoldoutSplit,
    n_columns: usize,
    seed: u64,
) -> Result<PsiEstimate<T>> {
    let mut v = estimate_psi_for_splits(phi, std::slice::from_ref(split), n_columns, seed)?;
    Ok(v.remove(0))
}

/// Ψ for several splits sharing one set of raw noise columns. Each split's
/// estimate equals what [`estimate_psi`] returns for it alone.
pub fn estimate_psi_for_splits<T: Real>(
    phi: f64,
    splits: &[HoldoutSplit],
    n_columns: usize,
    seed: u64,
) -> Result<Vec<PsiEstimate<T>>> {
    let kind = NoiseKind::Ar1 { phi };
    kind.validate()?;
    if n_columns < MIN_PSI_COLUMNS {
        return Err(Error::InvalidInput(format!(
            "Monte Carlo estimate of Psi needs at least {MIN_PSI_COLUMNS} columns, got {n_columns}"
        )));
    }
    let Some(first) = splits.first() else {
        return Ok(Vec::new());
    };
    let n = first.n();
    if splits.iter().any(|s| s.n() != n) {
        return Err(Error::InvalidInput(
            "splits disagree on series length".into(),
        ));
    }

    let half = n_columns / 2;
    let halves = [(0usize, half), (half, n_columns)];
    // sums[split][half]
    let mut sums: Vec<[Array2<T>; 2]> = splits
        .iter()
        .map(|_| [Array2::zeros((n, n)), Array2::zeros((n, n))])
        .collect();

    for (h, &(lo, hi)) in halves.iter().enumerate() {
        let mut start = lo;
        while start < hi {
            let count = BATCH_COLUMNS.min(hi - start);
            let raw: Array2<T> = noise_block(kind, n, seed, start as u64, count);
            sums.par_iter_mut().zip(splits.par_iter()).try_for_each(
                |(acc, split)| -> Result<()> {
                    let xs = standardize_view(raw.view(), split)?;
                    ndarray::linalg::general_mat_mul(T::one(), &xs, &xs.t(), T::one(), &mut acc[h]);
                    Ok(())
                },
            )?;
            start += count;
        }
    }

    let (n_a, n_b) = (T::from_count(half), T::from_count(n_columns - half));
    let total = T::from_count(n_columns);
    Ok(sums
        .into_iter()
        .zip(splits)
        .map(|([a, b], split)| {
            let diff = &a / n_a - &b / n_b;
            let rms = (diff.iter().map(|&d| d * d).sum::<T>() / T::from_count(n * n)).sqrt();
            let psi = symmetrize((a + b) / total);
            PsiEstimate {
                psi,
                n_columns,
                phi,
                split: split.clone(),
                half_split_rms_diff: rms,
            }
        })
        .collect())
}

fn symmetrize<T: Real>(mut s: Array2<T>) -> Array2<T> {
    let n = s.nrows();
    let half = T::lit(0.5);
    for i in 0..n {
        for k in i + 1..n {
            let v = (s[[i, k]] + s[[k, i]]) * half;
            s[[i, k]] = v;
            s[[k, i]] = v;
        }
    }
    s
}

/// Which intercept weights the GCV-tuned reconstruction uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Intercept {
    /// w = e, the calibration mean.
    Mean,
    /// w = 0, no intercept.
    None,
}

/// B[S, w]y_c = R[S, ℓ[S, w], w]y_c: the ridge operator at its own GCV λ.
pub fn gcv_reconstruction<T: Real>(
    s: ArrayView2<'_, T>,
    y: &TimeSeries<T>,
    split: &HoldoutSplit,
    intercept: Intercept,
) -> Result<ReconstructionResult<T>> {
    if s.nrows() != y.len() || split.n() != y.len() {
        return Err(Error::LengthMismatch {
            expected: y.len(),
            actual: s.nrows(),
        });
    }
    let calib = split.calib_rows();
    let w = match intercept {
        Intercept::Mean => WeightVector::uniform(calib.len()),
        Intercept::None => WeightVector::zero(calib.len()),
    };
    let s_cc = s.select(Axis(0), calib).select(Axis(1), calib);
    let y_c = y.select(calib);
    let gcv = minimize_gcv(s_cc.view(), &w, &y_c)?;
    let y_hat_v = reconstruct(s, gcv.lambda_min, &w, &y_c, split)?;
    let rmse = rmse(&y_hat_v, &y.select(split.valid_rows()))?;
    Ok(ReconstructionResult {
        y_hat_v,
        lambda: gcv.lambda_min,
        split: split.clone(),
        rmse,
    })
}

/// B[Ψ, e]y_c, the probability limit of the noise reconstruction.
pub fn limit_reconstruction<T: Real>(
    psi: &PsiEstimate<T>,
    y: &TimeSeries<T>,
) -> Result<ReconstructionResult<T>> {
    gcv_reconstruction(psi.psi.view(), y, &psi.split, Intercept::Mean)
}

/// Limit-reconstruction RMSE curve over `splits`.
pub fn limit_experiment<T: Real>(
    phi: f64,
    y: &TimeSeries<T>,
    splits: &[HoldoutSplit],
    n_columns: usize,
    seed: u64,
) -> Result<ExperimentReport<T>> {
    let psis = estimate_psi_for_splits::<T>(phi, splits, n_columns, seed)?;
    let results = psis
        .par_iter()
        .map(|psi| limit_reconstruction(psi, y))
        .collect::<Result<Vec<_>>>()?;
    ExperimentReport::from_results(format!("limit_ar1_{phi}"), results)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NuggetSource {
    /// ℓ(Φ, 0): GCV with no intercept on the exact covariance.
    GcvSelected,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrigingSpec {
    pub phi: f64,
    pub source: NuggetSource,
}

impl KrigingSpec {
    pub fn gcv(phi: f64) -> Self {
        Self {
            phi,
            source: NuggetSource::GcvSelected,
        }
    }

    pub fn fixed(phi: f64, nugget: f64) -> Self {
        Self {
            phi,
            source: NuggetSource::Fixed(nugget),
        }
    }
}

/// Simple kriging of the validation block from the calibration values with
/// zero prior mean and AR(1) covariance: ŷ_v = Φ_vc (Φ_cc + νI)⁻¹ y_c.
/// The returned `lambda` is the nugget ν.
pub fn simple_kriging<T: Real>(
    y: &TimeSeries<T>,
    split: &HoldoutSplit,
    spec: KrigingSpec,
) -> Result<ReconstructionResult<T>> {
    if !(spec.phi > 0.0 && spec.phi < 1.0) {
        return Err(Error::InvalidInput(format!(
            "kriging needs 0 < phi < 1, got {}",
            spec.phi
        )));
    }
    if split.n() != y.len() {
        return Err(Error::LengthMismatch {
            expected: y.len(),
            actual: split.n(),
        });
    }
    let phi = ar1_covariance::<T>(y.len(), spec.phi)?;
    let calib = split.calib_rows();
    let phi_cc = phi.select(Axis(0), calib).select(Axis(1), calib);
    let y_c = y.select(calib);
    let nugget = match spec.source {
        NuggetSource::GcvSelected => {
            minimize_gcv(phi_cc.view(), &WeightVector::zero(calib.len()), &y_c)?.lambda_min
        }
        NuggetSource::Fixed(v) if v >= 0.0 && v.is_finite() => T::lit(v),
        NuggetSource::Fixed(v) => {
            return Err(Error::InvalidInput(format!("nugget must be >= 0, got {v}")));
        }
    };
    let weights = Cholesky::shifted(phi_cc.view(), nugget)?.solve(&y_c);
    let y_hat_v: Vec<T> = split
        .valid_rows()
        .iter()
        .map(|&v| {
            calib
                .iter()
                .zip(&weights)
                .map(|(&c, &a)| phi[[v, c]] * a)
                .sum()
        })
        .collect();
    let rmse = rmse(&y_hat_v, &y.select(split.valid_rows()))?;
    Ok(ReconstructionResult {
        y_hat_v,
        lambda: nugget,
        split: split.clone(),
        rmse,
    })
}

/// Simple-kriging RMSE curve over `splits`.
pub fn kriging_experiment<T: Real>(
    y: &TimeSeries<T>,
    splits: &[HoldoutSplit],
    spec: KrigingSpec,
) -> Result<ExperimentReport<T>> {
    let results = splits
        .par_iter()
        .map(|s| simple_kriging(y, s, spec))
        .collect::<Result<Vec<_>>>()?;
    ExperimentReport::from_results(format!("kriging_ar1_{}", spec.phi), results)
}

/// Exponential semivariogram γ(τ) = nugget + 1 − φ^τ, for τ ≥ 0, 0 < φ < 1.
pub fn semivariogram<T: Real>(tau: T, phi: T, nugget: T) -> T {
    nugget + T::one() - ar1_correlation(phi, tau)
}

/// RMS difference of two RMSE curves over matching blocks.
pub fn rms_difference<T: Real>(a: &ExperimentReport<T>, b: &ExperimentReport<T>) -> Result<T> {
    if a.block_starts != b.block_starts || a.is_empty() {
        return Err(Error::BlockMismatch);
    }
    rmse(&a.block_rmse, &b.block_rmse)
}

/// RMS difference of two reconstructions, all validation values of all
/// blocks concatenated.
pub fn rms_difference_predictions<T: Real>(
    a: &ExperimentReport<T>,
    b: &ExperimentReport<T>,
) -> Result<T> {
    if a.block_starts != b.block_starts || a.is_empty() {
        return Err(Error::BlockMismatch);
    }
    let mut ss = T::zero();
    let mut count = 0usize;
    for (pa, pb) in a.predictions.iter().zip(&b.predictions) {
        if pa.len() != pb.len() {
            return Err(Error::BlockMismatch);
        }
        for (&x, &y) in pa.iter().zip(pb) {
            ss += (x - y) * (x - y);
        }
        count += pa.len();
    }
    Ok((ss / T::from_count(count)).sqrt())
}
