//! Sliding holdout-block cross-validation and noise ensembles.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{HoldoutSplit, ProxyMatrix, ReconstructionResult, TimeSeries, WeightVector};
use crate::error::{Error, Result};
use crate::gcv::minimize_gcv;
use crate::noise::{generate, NoiseSpec};
use crate::ridge::{gram_matrix, reconstruct, rmse, standardize, standardize_dropping};
use crate::scalar::Real;

/// Strict aborts on the first failing block; permissive records it and
/// moves on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    #[default]
    Strict,
    Permissive,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub mode: RunMode,
    /// Skip zero-variance columns (with a warning) instead of failing.
    pub drop_degenerate: bool,
}

/// Per-block RMSE curve of one reconstruction experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport<T> {
    pub label: String,
    pub block_starts: Vec<usize>,
    pub block_rmse: Vec<T>,
    pub per_block_lambda: Vec<T>,
    /// ŷ_v of every successful block, aligned with `block_starts`.
    pub predictions: Vec<Vec<T>>,
    pub mean_rmse: T,
    /// Blocks dropped in permissive mode, with the reason.
    pub failed_blocks: Vec<(usize, String)>,
}

impl<T: Real> ExperimentReport<T> {
    /// Assembles a report from per-block results (in block order).
    pub fn from_results(
        label: impl Into<String>,
        results: Vec<ReconstructionResult<T>>,
    ) -> Result<Self> {
        if results.is_empty() {
            return Err(Error::InvalidInput("experiment produced no blocks".into()));
        }
        let mut report = Self {
            label: label.into(),
            block_starts: Vec::with_capacity(results.len()),
            block_rmse: Vec::with_capacity(results.len()),
            per_block_lambda: Vec::with_capacity(results.len()),
            predictions: Vec::with_capacity(results.len()),
            mean_rmse: T::zero(),
            failed_blocks: Vec::new(),
        };
        for r in results {
            report.block_starts.push(r.split.block_start());
            report.block_rmse.push(r.rmse);
            report.per_block_lambda.push(r.lambda);
            report.predictions.push(r.y_hat_v);
        }
        report.mean_rmse = mean(&report.block_rmse);
        Ok(report)
    }

    pub fn len(&self) -> usize {
        self.block_rmse.len()
    }

    pub fn is_empty(&self) -> bool {
        self.block_rmse.is_empty()
    }
}

/// Ensemble of experiments sharing one block structure.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleReport<T> {
    pub label: String,
    pub block_starts: Vec<usize>,
    pub member_reports: Vec<ExperimentReport<T>>,
    /// Per-block mean of member RMSE.
    pub mean_curve: Vec<T>,
    /// Per-block sample standard deviation of member RMSE (0 for one member).
    pub member_scatter: Vec<T>,
}

impl<T: Real> EnsembleReport<T> {
    pub fn from_members(
        label: impl Into<String>,
        members: Vec<ExperimentReport<T>>,
    ) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidInput(
                "ensemble needs at least one member".into(),
            ));
        }
        let mut starts: Vec<usize> = members
            .iter()
            .flat_map(|m| m.block_starts.iter().copied())
            .collect();
        starts.sort_unstable();
        starts.dedup();
        let mut mean_curve = Vec::with_capacity(starts.len());
        let mut member_scatter = Vec::with_capacity(starts.len());
        for &b in &starts {
            let vals: Vec<T> = members
                .iter()
                .filter_map(|m| {
                    m.block_starts
                        .iter()
                        .position(|&s| s == b)
                        .map(|i| m.block_rmse[i])
                })
                .collect();
            let mu = mean(&vals);
            mean_curve.push(mu);
            member_scatter.push(sample_std(&vals, mu));
        }
        Ok(Self {
            label: label.into(),
            block_starts: starts,
            member_reports: members,
            mean_curve,
            member_scatter,
        })
    }

    pub fn size(&self) -> usize {
        self.member_reports.len()
    }

    /// Mean over blocks of the ensemble-mean curve.
    pub fn mean_rmse(&self) -> T {
        mean(&self.mean_curve)
    }

    /// Member mean RMSEs, one per member.
    pub fn member_means(&self) -> Vec<T> {
        self.member_reports.iter().map(|m| m.mean_rmse).collect()
    }
}

/// Every contiguous n_v-row validation block of an n-row series.
pub fn make_blocks(n: usize, n_v: usize) -> Result<Vec<HoldoutSplit>> {
    if n_v < 2 || n_v >= n {
        return Err(Error::InvalidBlockLength { n, n_v });
    }
    (0..=n - n_v)
        .map(|start| HoldoutSplit::new(n, start, n_v))
        .collect()
}

/// Standardize → Gram → GCV λ → reconstruct → RMSE for one holdout block.
pub fn run_block<T: Real>(
    x: &ProxyMatrix<T>,
    y: &TimeSeries<T>,
    split: &HoldoutSplit,
    opts: RunOptions,
) -> Result<ReconstructionResult<T>> {
    if x.nrows() != y.len() || split.n() != y.len() {
        return Err(Error::LengthMismatch {
            expected: y.len(),
            actual: if x.nrows() != y.len() {
                x.nrows()
            } else {
                split.n()
            },
        });
    }
    let xs = if opts.drop_degenerate {
        let (xs, dropped) = standardize_dropping(x, split)?;
        if !dropped.is_empty() {
            warn!(
                "block starting at row {}: dropped {} degenerate column(s), first `{}`",
                split.block_start(),
                dropped.len(),
                dropped[0]
            );
        }
        xs
    } else {
        standardize(x, split)?
    };
    let s = gram_matrix(&xs);
    let calib = split.calib_rows();
    let s_cc = s
        .select(ndarray::Axis(0), calib)
        .select(ndarray::Axis(1), calib);
    let y_c = y.select(calib);
    let e = WeightVector::uniform(calib.len());
    let gcv = minimize_gcv(s_cc.view(), &e, &y_c)?;
    let y_hat_v = reconstruct(s.view(), gcv.lambda_min, &e, &y_c, split)?;
    let rmse = rmse(&y_hat_v, &y.select(split.valid_rows()))?;
    Ok(ReconstructionResult {
        y_hat_v,
        lambda: gcv.lambda_min,
        split: split.clone(),
        rmse,
    })
}

/// RMSE of predicting the validation block by the calibration mean.
pub fn constant_baseline_rmse<T: Real>(y: &TimeSeries<T>, split: &HoldoutSplit) -> Result<T> {
    let y_c = y.select(split.calib_rows());
    let m = mean(&y_c);
    let pred = vec![m; split.block_len()];
    rmse(&pred, &y.select(split.valid_rows()))
}

/// Runs every split (in parallel) and aggregates in split order.
pub fn run_experiment<T: Real>(
    x: &ProxyMatrix<T>,
    y: &TimeSeries<T>,
    splits: &[HoldoutSplit],
    opts: RunOptions,
    label: &str,
) -> Result<ExperimentReport<T>> {
    if splits.is_empty() {
        return Err(Error::InvalidInput("no holdout splits given".into()));
    }
    let outcomes: Vec<Result<ReconstructionResult<T>>> = splits
        .par_iter()
        .map(|s| run_block(x, y, s, opts))
        .collect();
    let mut ok = Vec::with_capacity(outcomes.len());
    let mut failed = Vec::new();
    for (split, outcome) in splits.iter().zip(outcomes) {
        match outcome {
            Ok(r) => ok.push(r),
            Err(e) if opts.mode == RunMode::Permissive => {
                warn!("{label}: block at row {} failed: {e}", split.block_start());
                failed.push((split.block_start(), e.to_string()));
            }
            Err(e) => return Err(e),
        }
    }
    let mut report = ExperimentReport::from_results(label, ok)?;
    report.failed_blocks = failed;
    Ok(report)
}

/// m noise realizations with seeds `spec.seed + i`, each cross-validated.
pub fn run_ensemble<T: Real>(
    spec: &NoiseSpec,
    y: &TimeSeries<T>,
    splits: &[HoldoutSplit],
    m: usize,
    opts: RunOptions,
) -> Result<EnsembleReport<T>> {
    if m == 0 {
        return Err(Error::InvalidInput("ensemble size must be >= 1".into()));
    }
    if spec.n != y.len() {
        return Err(Error::LengthMismatch {
            expected: y.len(),
            actual: spec.n,
        });
    }
    let label = spec.kind.label();
    let members: Vec<Result<ExperimentReport<T>>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let member_spec = spec.with_seed(spec.seed.wrapping_add(i as u64));
            let x = generate::<T>(&member_spec)?;
            run_experiment(&x, y, splits, opts, &format!("{label}_m{i:03}"))
        })
        .collect();
    let members = members.into_iter().collect::<Result<Vec<_>>>()?;
    EnsembleReport::from_members(label, members)
}

fn mean<T: Real>(v: &[T]) -> T {
    if v.is_empty() {
        return T::nan();
    }
    v.iter().copied().sum::<T>() / T::from_count(v.len())
}

fn sample_std<T: Real>(v: &[T], mu: T) -> T {
    if v.len() < 2 {
        return T::zero();
    }
    let ss: T = v.iter().map(|&x| (x - mu) * (x - mu)).sum();
    (ss / T::from_count(v.len() - 1)).sqrt()
}
