//! Generalized cross-validation for the centered ridge hat operator
//!
//! ```text
//! H(λ) = S_cc (S_cc + λI)⁻¹ W[w] + 1wᵀ
//! V(λ) = n_c ‖(I − H(λ)) y_c‖² / [tr(I − H(λ))]²
//! ```
//!
//! Since W[w] = I − 1wᵀ, the residual operator collapses to
//! I − H(λ) = λ (S_cc + λI)⁻¹ W[w]. With S_cc = QΛQᵀ and a = Qᵀ W[w] y_c,
//! b = Qᵀw, c = Qᵀ1 this gives
//!
//! ```text
//! V(λ) = n_c Σ aᵢ²/(μᵢ+λ)² / [Σ (1 − bᵢcᵢ)/(μᵢ+λ)]²
//! ```
//!
//! so a single eigen-decomposition makes every evaluation O(n_c).
//! `w = 0` (no intercept) is allowed and gives H(λ) = S_cc (S_cc + λI)⁻¹.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::data::WeightVector;
use crate::error::{Error, Result};
use crate::linalg::eigen_projections;
use crate::ridge::{center_apply, reconstruct_rows};
use crate::scalar::Real;

pub const LAMBDA_LO: f64 = 1e-8;
pub const LAMBDA_HI: f64 = 1e8;
pub const GRID_POINTS: usize = 25;
/// Width of the final golden-section bracket in ln λ.
pub const REFINE_TOL: f64 = 1e-4;
pub const MIN_TRACE: f64 = 1e-12;
pub const TIE_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GcvResult<T> {
    pub lambda_min: T,
    pub score: T,
    pub n_evals: usize,
    /// Grid bracket that was refined.
    pub bracket: (T, T),
    /// The minimizer sits on an end of the search domain.
    pub at_boundary: bool,
}

/// H(λ)y_c restricted to the calibration rows.
pub fn hat_apply<T: Real>(
    s_cc: ArrayView2<'_, T>,
    lambda: T,
    w: &WeightVector<T>,
    y_c: &[T],
) -> Result<Vec<T>> {
    check_square(s_cc, y_c.len())?;
    let rows: Vec<usize> = (0..y_c.len()).collect();
    reconstruct_rows(s_cc, lambda, w, y_c, &rows, &rows)
}

/// V(λ) for a single λ.
pub fn gcv_score<T: Real>(
    s_cc: ArrayView2<'_, T>,
    lambda: T,
    w: &WeightVector<T>,
    y_c: &[T],
) -> Result<T> {
    GcvObjective::new(s_cc, w, y_c)?.score(lambda)
}

/// The GCV function of one calibration problem, in eigen-coordinates.
#[derive(Debug, Clone)]
pub struct GcvObjective<T> {
    mu: Vec<T>,
    resid_coords: Vec<T>,
    trace_weights: Vec<T>,
    n_c: usize,
}

impl<T: Real> GcvObjective<T> {
    pub fn new(s_cc: ArrayView2<'_, T>, w: &WeightVector<T>, y_c: &[T]) -> Result<Self> {
        let n_c = y_c.len();
        check_square(s_cc, n_c)?;
        if w.len() != n_c {
            return Err(Error::LengthMismatch {
                expected: n_c,
                actual: w.len(),
            });
        }
        let centered = center_apply(w, y_c)?;
        let ones = vec![T::one(); n_c];
        let (mu, coords) = eigen_projections(s_cc, &[&centered, w.as_slice(), &ones]);
        // Negative eigenvalues of a PSD input are rounding noise.
        let mu = mu.into_iter().map(|m| m.max(T::zero())).collect();
        let trace_weights = coords[1]
            .iter()
            .zip(&coords[2])
            .map(|(&b, &c)| T::one() - b * c)
            .collect();
        Ok(Self {
            mu,
            resid_coords: coords[0].clone(),
            trace_weights,
            n_c,
        })
    }

    /// tr(I − H(λ)).
    pub fn residual_trace(&self, lambda: T) -> T {
        lambda
            * self
                .mu
                .iter()
                .zip(&self.trace_weights)
                .map(|(&m, &t)| t / (m + lambda))
                .sum::<T>()
    }

    pub fn score(&self, lambda: T) -> Result<T> {
        if !(lambda > T::zero()) {
            return Err(Error::InvalidInput(format!(
                "ridge parameter must be > 0, got {lambda}"
            )));
        }
        let trace = self.residual_trace(lambda);
        if !(trace >= T::lit(MIN_TRACE)) {
            return Err(Error::DegenerateTrace {
                lambda: lambda.as_f64(),
                trace: trace.to_f64().unwrap_or(f64::NAN),
            });
        }
        // λ cancels between numerator and denominator.
        let mut rss = T::zero();
        let mut tr = T::zero();
        for ((&m, &a), &t) in self
            .mu
            .iter()
            .zip(&self.resid_coords)
            .zip(&self.trace_weights)
        {
            let inv = T::one() / (m + lambda);
            rss += a * a * inv * inv;
            tr += t * inv;
        }
        Ok(T::from_count(self.n_c) * rss / (tr * tr))
    }

    /// Lower end of the search. S_cc always has the constant vector in its
    /// null space, so λ below the working precision of the largest
    /// eigenvalue would leave S_cc + λI numerically singular; in `f64` this
    /// never exceeds 1e-8 for standardized inputs.
    pub fn lambda_floor(&self) -> T {
        let mu_max = self.mu.iter().copied().fold(T::zero(), T::max);
        T::lit(LAMBDA_LO).max(T::epsilon() * T::from_count(self.n_c) * mu_max)
    }

    /// Score with degenerate-trace points mapped to +∞.
    fn score_or_inf(&self, lambda: T) -> Result<T> {
        match self.score(lambda) {
            Ok(v) if v.is_finite() => Ok(v),
            Ok(_) | Err(Error::DegenerateTrace { .. }) => Ok(T::infinity()),
            Err(e) => Err(e),
        }
    }

    /// Coarse log grid on [`Self::lambda_floor`, 1e8], then golden-section refinement in
    /// ln λ around the best grid point. Grid ties (within 1e-14 relative)
    /// go to the largest λ. The returned point is the best of every
    /// evaluation made.
    pub fn minimize(&self) -> Result<GcvResult<T>> {
        let t_lo = self.lambda_floor().ln();
        let t_hi = T::lit(LAMBDA_HI.ln());
        let step = (t_hi - t_lo) / T::from_count(GRID_POINTS - 1);
        let grid_t: Vec<T> = (0..GRID_POINTS)
            .map(|k| {
                if k == GRID_POINTS - 1 {
                    t_hi
                } else {
                    t_lo + step * T::from_count(k)
                }
            })
            .collect();

        let mut evals: Vec<(T, T)> = Vec::with_capacity(GRID_POINTS + 40);
        for &t in &grid_t {
            let lam = t.exp();
            evals.push((lam, self.score_or_inf(lam)?));
        }

        let finite: Vec<T> = evals
            .iter()
            .map(|e| e.1)
            .filter(|v| v.is_finite())
            .collect();
        if finite.is_empty() {
            return Err(Error::DegenerateTrace {
                lambda: LAMBDA_HI,
                trace: self.residual_trace(T::lit(LAMBDA_HI)).as_f64(),
            });
        }
        let vmin = finite.iter().copied().fold(T::infinity(), T::min);
        let vmax = finite.iter().copied().fold(T::neg_infinity(), T::max);
        if vmax - vmin <= T::lit(TIE_TOL) * vmax {
            return Err(Error::FlatObjective {
                fallback_lambda: LAMBDA_HI,
            });
        }
        let tie = T::lit(TIE_TOL) * vmin.abs();
        let best_k = (0..GRID_POINTS)
            .rev()
            .find(|&k| evals[k].1 - vmin <= tie)
            .expect("grid minimum exists");

        let lo = grid_t[best_k.saturating_sub(1)];
        let hi = grid_t[(best_k + 1).min(GRID_POINTS - 1)];
        self.golden_section(lo, hi, &mut evals)?;

        let (mut lambda_min, mut score) = evals[0];
        for &(lam, v) in &evals[1..] {
            if v < score || (v == score && lam > lambda_min) {
                lambda_min = lam;
                score = v;
            }
        }
        let at_boundary =
            lambda_min == grid_t[0].exp() || lambda_min == grid_t[GRID_POINTS - 1].exp();
        Ok(GcvResult {
            lambda_min,
            score,
            n_evals: evals.len(),
            bracket: (lo.exp(), hi.exp()),
            at_boundary,
        })
    }

    fn golden_section(&self, mut a: T, mut b: T, evals: &mut Vec<(T, T)>) -> Result<()> {
        let ratio = T::lit((5f64.sqrt() - 1.0) / 2.0);
        let tol = T::lit(REFINE_TOL);
        let mut c = b - ratio * (b - a);
        let mut d = a + ratio * (b - a);
        let mut fc = self.score_or_inf(c.exp())?;
        let mut fd = self.score_or_inf(d.exp())?;
        evals.push((c.exp(), fc));
        evals.push((d.exp(), fd));
        while b - a > tol {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - ratio * (b - a);
                fc = self.score_or_inf(c.exp())?;
                evals.push((c.exp(), fc));
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + ratio * (b - a);
                fd = self.score_or_inf(d.exp())?;
                evals.push((d.exp(), fd));
            }
        }
        Ok(())
    }
}

/// λ_min = ℓ[S, w]: the GCV-minimizing ridge parameter.
pub fn minimize_gcv<T: Real>(
    s_cc: ArrayView2<'_, T>,
    w: &WeightVector<T>,
    y_c: &[T],
) -> Result<GcvResult<T>> {
    GcvObjective::new(s_cc, w, y_c)?.minimize()
}

fn check_square<T>(s: ArrayView2<'_, T>, n: usize) -> Result<()> {
    if s.nrows() != n || s.ncols() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: s.nrows(),
        });
    }
    Ok(())
}
