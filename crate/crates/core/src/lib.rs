//! Holdout-block ridge reconstructions of an annual target from proxies or
//! noise pseudoproxies, with GCV-selected ridge parameters, and the
//! large-p limits of noise reconstructions (Monte Carlo Ψ and simple
//! kriging with an AR(1) covariance).
//!
//! Numerical code is generic over [`Real`] (`f32`, `f64`); the `*64`
//! aliases below are what the command-line driver uses.

// `!(x > 0)` style checks reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod crossval;
pub mod data;
pub mod error;
pub mod gcv;
pub mod io;
pub mod limit;
pub mod linalg;
pub mod noise;
pub mod ridge;
pub mod scalar;

pub use crossval::{
    constant_baseline_rmse, make_blocks, run_block, run_ensemble, run_experiment, EnsembleReport,
    ExperimentReport, RunMode, RunOptions,
};
pub use data::{
    HoldoutSplit, ProxyMatrix, ReconstructionResult, StandardizedMatrix, TimeSeries, WeightVector,
};
pub use error::{Error, Result};
pub use gcv::{gcv_score, hat_apply, minimize_gcv, GcvObjective, GcvResult};
pub use limit::{
    estimate_psi, estimate_psi_for_splits, gcv_reconstruction, kriging_experiment,
    limit_experiment, limit_reconstruction, rms_difference, rms_difference_predictions,
    semivariogram, simple_kriging, Intercept, KrigingSpec, NuggetSource, PsiEstimate,
};
pub use noise::{ar1_covariance, generate, synthetic_target, NoiseKind, NoiseSpec};
pub use ridge::{center_apply, gram_matrix, reconstruct, rmse, standardize, standardize_dropping};
pub use scalar::Real;

pub type TimeSeries64 = TimeSeries<f64>;
pub type ProxyMatrix64 = ProxyMatrix<f64>;
pub type StandardizedMatrix64 = StandardizedMatrix<f64>;
pub type WeightVector64 = WeightVector<f64>;
pub type ReconstructionResult64 = ReconstructionResult<f64>;
pub type GcvResult64 = GcvResult<f64>;
pub type ExperimentReport64 = ExperimentReport<f64>;
pub type EnsembleReport64 = EnsembleReport<f64>;
pub type PsiEstimate64 = PsiEstimate<f64>;

pub type TimeSeries32 = TimeSeries<f32>;
pub type ProxyMatrix32 = ProxyMatrix<f32>;
pub type ExperimentReport32 = ExperimentReport<f32>;
