//! Dense symmetric linear algebra: Cholesky solves and a Householder/QL
//! eigensolver. Sizes here are a few hundred at most, so plain loops over
//! `ndarray` storage are adequate.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    l: Array2<T>,
}

impl<T: Real> Cholesky<T> {
    pub fn new(a: ArrayView2<'_, T>) -> Result<Self> {
        Self::shifted(a, T::zero())
    }

    /// Factors `a + shift·I` without materialising the shifted matrix separately.
    pub fn shifted(a: ArrayView2<'_, T>, shift: T) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::InvalidInput(format!(
                "Cholesky needs a square matrix, got {}x{}",
                n,
                a.ncols()
            )));
        }
        let mut l = Array2::<T>::zeros((n, n));
        for j in 0..n {
            let mut diag = a[[j, j]] + shift;
            for k in 0..j {
                diag -= l[[j, k]] * l[[j, k]];
            }
            if !(diag > T::zero()) || !diag.is_finite() {
                return Err(Error::SingularSystem {
                    row: j,
                    pivot: diag.to_f64().unwrap_or(f64::NAN),
                });
            }
            let ljj = diag.sqrt();
            l[[j, j]] = ljj;
            for i in j + 1..n {
                let mut s = a[[i, j]];
                for k in 0..j {
                    s -= l[[i, k]] * l[[j, k]];
                }
                l[[i, j]] = s / ljj;
            }
        }
        Ok(Self { l })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn factor(&self) -> &Array2<T> {
        &self.l
    }

    /// Solves `(L Lᵀ) x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [T]) {
        let n = self.dim();
        assert_eq!(x.len(), n, "right-hand side length");
        let l = &self.l;
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= l[[i, k]] * x[k];
            }
            x[i] = s / l[[i, i]];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= l[[k, i]] * x[k];
            }
            x[i] = s / l[[i, i]];
        }
    }
}

/// Eigen-decomposition `A = V diag(values) Vᵀ` of a symmetric matrix.
/// Eigenvectors are the columns of `vectors`; order is unspecified.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    pub values: Vec<T>,
    pub vectors: Array2<T>,
}

impl<T: Real> SymmetricEigen<T> {
    pub fn new(a: ArrayView2<'_, T>) -> Self {
        let (mut d, mut e, mut v) = tridiagonalize(a);
        let n = d.len();
        tridiagonal_ql(&mut d, &mut e, |i, c, s| {
            for k in 0..n {
                let h = v[[k, i + 1]];
                v[[k, i + 1]] = s * v[[k, i]] + c * h;
                v[[k, i]] = c * v[[k, i]] - s * h;
            }
        });
        Self {
            values: d,
            vectors: v,
        }
    }

    pub fn min_value(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max_value(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }
}

/// Eigenvalues of a symmetric matrix together with the eigen-coordinates
/// `Vᵀu` of each supplied vector `u`, without accumulating `V` itself.
///
/// Costs one tridiagonalisation plus O(n²) per vector, which is what the
/// GCV search needs: every evaluation of the objective is a diagonal
/// expression in these coordinates.
pub fn eigen_projections<T: Real>(a: ArrayView2<'_, T>, vectors: &[&[T]]) -> (Vec<T>, Vec<Vec<T>>) {
    let (mut d, mut e, v) = tridiagonalize(a);
    let n = d.len();
    let mut coords: Vec<Vec<T>> = vectors
        .iter()
        .map(|u| {
            assert_eq!(u.len(), n, "projected vector length");
            (0..n)
                .map(|j| (0..n).map(|k| v[[k, j]] * u[k]).sum())
                .collect()
        })
        .collect();
    tridiagonal_ql(&mut d, &mut e, |i, c, s| {
        for t in coords.iter_mut() {
            let h = t[i + 1];
            t[i + 1] = s * t[i] + c * h;
            t[i] = c * t[i] - s * h;
        }
    });
    (d, coords)
}

/// Householder reduction to tridiagonal form (EISPACK `tred2`).
/// Returns diagonal, sub-diagonal (in `e[1..]`) and the accumulated
/// orthogonal transform.
#[allow(clippy::needless_range_loop)]
fn tridiagonalize<T: Real>(a: ArrayView2<'_, T>) -> (Vec<T>, Vec<T>, Array2<T>) {
    let n = a.nrows();
    assert_eq!(a.ncols(), n, "symmetric eigen needs a square matrix");
    let zero = T::zero();
    let mut v = a.to_owned();
    let mut d = vec![zero; n];
    let mut e = vec![zero; n];
    if n == 0 {
        return (d, e, v);
    }
    for j in 0..n {
        d[j] = v[[n - 1, j]];
    }

    for i in (1..n).rev() {
        let mut scale = zero;
        let mut h = zero;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == zero {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[[i - 1, j]];
                v[[i, j]] = zero;
                v[[j, i]] = zero;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > zero {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = zero;
            }
            for j in 0..i {
                f = d[j];
                v[[j, i]] = f;
                g = e[j] + v[[j, j]] * f;
                for k in j + 1..i {
                    g += v[[k, j]] * d[k];
                    e[k] += v[[k, j]] * f;
                }
                e[j] = g;
            }
            f = zero;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[[k, j]] -= f * e[k] + g * d[k];
                }
                d[j] = v[[i - 1, j]];
                v[[i, j]] = zero;
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        v[[n - 1, i]] = v[[i, i]];
        v[[i, i]] = T::one();
        let h = d[i + 1];
        if h != zero {
            for k in 0..=i {
                d[k] = v[[k, i + 1]] / h;
            }
            for j in 0..=i {
                let mut g = zero;
                for k in 0..=i {
                    g += v[[k, i + 1]] * v[[k, j]];
                }
                for k in 0..=i {
                    v[[k, j]] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[[k, i + 1]] = zero;
        }
    }
    for j in 0..n {
        d[j] = v[[n - 1, j]];
        v[[n - 1, j]] = zero;
    }
    v[[n - 1, n - 1]] = T::one();
    e[0] = zero;
    (d, e, v)
}

/// Implicit QL iteration on a symmetric tridiagonal matrix (EISPACK `tql2`).
/// Each Givens rotation acting on columns `(i, i+1)` is reported through
/// `rotate(i, c, s)` so callers can apply it to whatever they track.
fn tridiagonal_ql<T: Real>(d: &mut [T], e: &mut [T], mut rotate: impl FnMut(usize, T, T)) {
    let n = d.len();
    if n == 0 {
        return;
    }
    let zero = T::zero();
    let one = T::one();
    let two = T::lit(2.0);
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = zero;

    let eps = T::epsilon();
    let mut f = zero;
    let mut tst1 = zero;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            for _iter in 0..200 {
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(one);
                if p < zero {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = one;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = zero;
                let mut s2 = zero;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    rotate(i, c, s);
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = zero;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn random_spd(n: usize, seed: u64) -> Array2<f64> {
        let mut rng = paleo_xval_testkit::TestRng::new(seed);
        let a = Array2::from_shape_fn((n, n + 2), |_| rng.normal());
        a.dot(&a.t())
    }

    #[test]
    fn cholesky_solves_spd_system() {
        let a = array![[4.0f64, 2.0, 0.6], [2.0, 5.0, 1.0], [0.6, 1.0, 3.0]];
        let b = [1.0, -2.0, 0.5];
        let x = Cholesky::new(a.view()).unwrap().solve(&b);
        let ax = a.dot(&ndarray::arr1(&x));
        for i in 0..3 {
            assert!((ax[i] - b[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = array![[1.0, 2.0], [2.0, 1.0]];
        assert!(matches!(
            Cholesky::new(a.view()),
            Err(Error::SingularSystem { row: 1, .. })
        ));
    }

    #[test]
    fn shifted_factor_matches_explicit_shift() {
        let a = random_spd(6, 3);
        let shifted = &a + &(Array2::<f64>::eye(6) * 0.25);
        let b: Vec<f64> = (0..6).map(|i| i as f64 - 2.0).collect();
        let x1 = Cholesky::shifted(a.view(), 0.25).unwrap().solve(&b);
        let x2 = Cholesky::new(shifted.view()).unwrap().solve(&b);
        for (p, q) in x1.iter().zip(&x2) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn eigen_reconstructs_matrix() {
        for (n, seed) in [(1, 1), (2, 2), (5, 3), (17, 4), (40, 5)] {
            let a = random_spd(n, seed);
            let eig = SymmetricEigen::new(a.view());
            let lam = Array2::from_diag(&ndarray::arr1(&eig.values));
            let back = eig.vectors.dot(&lam).dot(&eig.vectors.t());
            let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            for (x, y) in back.iter().zip(a.iter()) {
                assert!((x - y).abs() < 1e-11 * scale, "n={n}");
            }
            let gram = eig.vectors.t().dot(&eig.vectors);
            for i in 0..n {
                for j in 0..n {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((gram[[i, j]] - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn eigen_handles_diagonal_and_rank_deficient() {
        let a = array![[3.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 2.0]];
        let mut vals = SymmetricEigen::new(a.view()).values;
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(vals, vec![1.0, 2.0, 3.0]);

        let u = array![[1.0f64], [-1.0], [2.0]];
        let r1 = u.dot(&u.t());
        let eig = SymmetricEigen::new(r1.view());
        assert!((eig.max_value() - 6.0).abs() < 1e-12);
        assert!(eig.min_value().abs() < 1e-12);
    }

    #[test]
    fn projections_match_full_eigenvectors() {
        let a = random_spd(23, 11);
        let u: Vec<f64> = (0..23).map(|i| (i as f64 * 0.37).sin()).collect();
        let ones = vec![1.0; 23];
        let full = SymmetricEigen::new(a.view());
        let (vals, coords) = eigen_projections(a.view(), &[&u, &ones]);
        assert_eq!(vals, full.values);
        let want_u = full.vectors.t().dot(&ndarray::arr1(&u));
        let want_1 = full.vectors.t().dot(&ndarray::arr1(&ones));
        for j in 0..23 {
            assert!((coords[0][j] - want_u[j]).abs() < 1e-12);
            assert!((coords[1][j] - want_1[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn works_in_single_precision() {
        let a = array![[2.0f32, 1.0], [1.0, 2.0]];
        let mut vals = SymmetricEigen::new(a.view()).values;
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((vals[0] - 1.0).abs() < 1e-6 && (vals[1] - 3.0).abs() < 1e-6);
    }
}
