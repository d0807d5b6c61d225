//! Per-calibration standardization and the dual-form ridge operator
//! R[S, λ, w] = S_vc (S_cc + λI)⁻¹ W[w] + 1wᵀ, with W[w] = I − 1wᵀ.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::data::{HoldoutSplit, ProxyMatrix, StandardizedMatrix, WeightVector};
use crate::error::{Error, Result};
use crate::linalg::Cholesky;
use crate::scalar::Real;

/// Calibration standard deviations at or below this are degenerate.
pub const MIN_COLUMN_STD: f64 = 1e-12;

/// Calibration-period column statistics; sample std uses n_c − 1.
fn calibration_stats<T: Real>(
    x: ArrayView2<'_, T>,
    split: &HoldoutSplit,
) -> Result<(Array1<T>, Array1<T>)> {
    if x.nrows() != split.n() {
        return Err(Error::LengthMismatch {
            expected: split.n(),
            actual: x.nrows(),
        });
    }
    let n_c = split.n_calib();
    if n_c < 2 {
        return Err(Error::InvalidInput(
            "standardization needs at least 2 calibration rows".into(),
        ));
    }
    let p = x.ncols();
    let mut mean = Array1::<T>::zeros(p);
    for &i in split.calib_rows() {
        mean += &x.row(i);
    }
    mean /= T::from_count(n_c);
    let mut ss = Array1::<T>::zeros(p);
    for &i in split.calib_rows() {
        for ((acc, &v), &m) in ss.iter_mut().zip(x.row(i).iter()).zip(mean.iter()) {
            *acc += (v - m) * (v - m);
        }
    }
    let denom = T::from_count(n_c - 1);
    let std = ss.mapv(|s| (s / denom).sqrt());
    Ok((mean, std))
}

fn apply_standardization<T: Real>(
    x: ArrayView2<'_, T>,
    mean: &Array1<T>,
    std: &Array1<T>,
) -> Array2<T> {
    let mut out = x.to_owned();
    for mut row in out.rows_mut() {
        for ((v, &m), &s) in row.iter_mut().zip(mean.iter()).zip(std.iter()) {
            *v = (*v - m) / s;
        }
    }
    out
}

/// Standardizes every column (all n rows) with the mean and sample
/// standard deviation of its calibration rows. Fails on the first column
/// whose calibration std is ≤ 1e-12.
pub fn standardize<T: Real>(
    x: &ProxyMatrix<T>,
    split: &HoldoutSplit,
) -> Result<StandardizedMatrix<T>> {
    let (mean, std) = calibration_stats(x.data().view(), split)?;
    let floor = T::lit(MIN_COLUMN_STD);
    if let Some(j) = std.iter().position(|&s| !(s > floor)) {
        return Err(Error::DegenerateColumn(x.column_ids()[j].clone()));
    }
    let data = apply_standardization(x.data().view(), &mean, &std);
    Ok(StandardizedMatrix {
        data,
        col_means: mean.to_vec(),
        col_stds: std.to_vec(),
    })
}

/// Standardizes a raw block of columns; degenerate columns are reported
/// by their index within the block.
pub(crate) fn standardize_view<T: Real>(
    x: ArrayView2<'_, T>,
    split: &HoldoutSplit,
) -> Result<Array2<T>> {
    let (mean, std) = calibration_stats(x, split)?;
    let floor = T::lit(MIN_COLUMN_STD);
    if let Some(j) = std.iter().position(|&s| !(s > floor)) {
        return Err(Error::DegenerateColumn(format!("column {j}")));
    }
    Ok(apply_standardization(x, &mean, &std))
}

/// Like [`standardize`] but skips degenerate columns, returning their ids.
/// Still fails if every column is degenerate.
pub fn standardize_dropping<T: Real>(
    x: &ProxyMatrix<T>,
    split: &HoldoutSplit,
) -> Result<(StandardizedMatrix<T>, Vec<String>)> {
    let (mean, std) = calibration_stats(x.data().view(), split)?;
    let floor = T::lit(MIN_COLUMN_STD);
    let keep: Vec<usize> = (0..x.ncols()).filter(|&j| std[j] > floor).collect();
    let dropped: Vec<String> = (0..x.ncols())
        .filter(|&j| !(std[j] > floor))
        .map(|j| x.column_ids()[j].clone())
        .collect();
    if keep.is_empty() {
        return Err(Error::DegenerateColumn(dropped[0].clone()));
    }
    if dropped.is_empty() {
        let data = apply_standardization(x.data().view(), &mean, &std);
        return Ok((
            StandardizedMatrix {
                data,
                col_means: mean.to_vec(),
                col_stds: std.to_vec(),
            },
            dropped,
        ));
    }
    let sub = x.data().select(Axis(1), &keep);
    let mean = mean.select(Axis(0), &keep);
    let std = std.select(Axis(0), &keep);
    let data = apply_standardization(sub.view(), &mean, &std);
    Ok((
        StandardizedMatrix {
            data,
            col_means: mean.to_vec(),
            col_stds: std.to_vec(),
        },
        dropped,
    ))
}

/// S_p = X̃X̃ᵀ / p, symmetrized exactly.
pub fn gram_matrix<T: Real>(xs: &StandardizedMatrix<T>) -> Array2<T> {
    gram_of(xs.data.view())
}

pub(crate) fn gram_of<T: Real>(x: ArrayView2<'_, T>) -> Array2<T> {
    let p = T::from_count(x.ncols());
    let mut s = x.dot(&x.t());
    let n = s.nrows();
    let half = T::lit(0.5);
    for i in 0..n {
        s[[i, i]] /= p;
        for k in i + 1..n {
            let v = (s[[i, k]] + s[[k, i]]) * half / p;
            s[[i, k]] = v;
            s[[k, i]] = v;
        }
    }
    s
}

/// W[w]v = v − (wᵀv)·1.
pub fn center_apply<T: Real>(w: &WeightVector<T>, v: &[T]) -> Result<Vec<T>> {
    if w.len() != v.len() {
        return Err(Error::LengthMismatch {
            expected: w.len(),
            actual: v.len(),
        });
    }
    let c = w.dot(v);
    Ok(v.iter().map(|&x| x - c).collect())
}

/// ŷ_v = R[S, λ, w] y_c for the validation rows of `split`.
pub fn reconstruct<T: Real>(
    s: ArrayView2<'_, T>,
    lambda: T,
    w: &WeightVector<T>,
    y_c: &[T],
    split: &HoldoutSplit,
) -> Result<Vec<T>> {
    if s.nrows() != split.n() {
        return Err(Error::LengthMismatch {
            expected: split.n(),
            actual: s.nrows(),
        });
    }
    reconstruct_rows(s, lambda, w, y_c, split.calib_rows(), split.valid_rows())
}

/// The ridge operator with arbitrary calibration and target row sets:
/// S_tc (S_cc + λI)⁻¹ W[w] y_c + (wᵀy_c)·1.
pub fn reconstruct_rows<T: Real>(
    s: ArrayView2<'_, T>,
    lambda: T,
    w: &WeightVector<T>,
    y_c: &[T],
    calib_rows: &[usize],
    target_rows: &[usize],
) -> Result<Vec<T>> {
    if !(lambda > T::zero()) {
        return Err(Error::InvalidInput(format!(
            "ridge parameter must be > 0, got {lambda}"
        )));
    }
    if y_c.len() != calib_rows.len() {
        return Err(Error::LengthMismatch {
            expected: calib_rows.len(),
            actual: y_c.len(),
        });
    }
    let s_cc = s.select(Axis(0), calib_rows).select(Axis(1), calib_rows);
    let chol = Cholesky::shifted(s_cc.view(), lambda)?;
    let mut z = center_apply(w, y_c)?;
    chol.solve_in_place(&mut z);
    let intercept = w.dot(y_c);
    Ok(target_rows
        .iter()
        .map(|&t| {
            calib_rows
                .iter()
                .zip(&z)
                .map(|(&c, &zk)| s[[t, c]] * zk)
                .sum::<T>()
                + intercept
        })
        .collect())
}

/// Root mean square difference of two equal-length vectors.
pub fn rmse<T: Real>(y_hat: &[T], y_true: &[T]) -> Result<T> {
    if y_hat.len() != y_true.len() {
        return Err(Error::LengthMismatch {
            expected: y_true.len(),
            actual: y_hat.len(),
        });
    }
    if y_hat.is_empty() {
        return Err(Error::InvalidInput("rmse of empty vectors".into()));
    }
    let ss: T = y_hat
        .iter()
        .zip(y_true)
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum();
    Ok((ss / T::from_count(y_hat.len())).sqrt())
}
