//! Brute-force reference computations for the test suites.
//!
//! Everything here works on plain `Vec<Vec<f64>>` with textbook loops and
//! shares no code with `paleo_xval`. Slow on purpose: every quantity is
//! assembled explicitly (inverse matrices, full hat matrices, dense grids).

#![allow(clippy::needless_range_loop)]

pub type Mat = Vec<Vec<f64>>;

/// SplitMix64 with a Box-Muller normal sampler, for generating random test
/// instances without touching the library's RNG plumbing.
#[derive(Debug, Clone)]
pub struct TestRng {
    state: u64,
    spare: Option<f64>,
}

impl TestRng {
    pub fn new(seed: u64) -> Self {
        Self {
            state: seed,
            spare: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in (0, 1).
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: usize, hi_inclusive: usize) -> usize {
        lo + (self.next_u64() % (hi_inclusive - lo + 1) as u64) as usize
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let t = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * t.sin());
        r * t.cos()
    }

    pub fn normal_vec(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.normal()).collect()
    }

    /// Column-list matrix with `cols` columns of length `rows`.
    pub fn normal_columns(&mut self, rows: usize, cols: usize) -> Mat {
        (0..cols).map(|_| self.normal_vec(rows)).collect()
    }
}

pub fn zeros(r: usize, c: usize) -> Mat {
    vec![vec![0.0; c]; r]
}

pub fn identity(n: usize) -> Mat {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn transpose(a: &Mat) -> Mat {
    if a.is_empty() {
        return Vec::new();
    }
    let mut t = zeros(a[0].len(), a.len());
    for (i, row) in a.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            t[j][i] = x;
        }
    }
    t
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let inner = b.len();
    let cols = if inner == 0 { 0 } else { b[0].len() };
    let mut out = zeros(a.len(), cols);
    for i in 0..a.len() {
        for j in 0..cols {
            let mut s = 0.0;
            for k in 0..inner {
                s += a[i][k] * b[k][j];
            }
            out[i][j] = s;
        }
    }
    out
}

pub fn matvec(a: &Mat, v: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

pub fn add(a: &Mat, b: &Mat) -> Mat {
    a.iter()
        .zip(b)
        .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect())
        .collect()
}

pub fn sub(a: &Mat, b: &Mat) -> Mat {
    a.iter()
        .zip(b)
        .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x - y).collect())
        .collect()
}

pub fn scale(a: &Mat, k: f64) -> Mat {
    a.iter()
        .map(|r| r.iter().map(|x| x * k).collect())
        .collect()
}

pub fn trace(a: &Mat) -> f64 {
    (0..a.len()).map(|i| a[i][i]).sum()
}

pub fn submatrix(a: &Mat, rows: &[usize], cols: &[usize]) -> Mat {
    rows.iter()
        .map(|&i| cols.iter().map(|&j| a[i][j]).collect())
        .collect()
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn inverse(a: &Mat) -> Mat {
    let n = a.len();
    let mut aug: Mat = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if aug[r][col].abs() > aug[piv][col].abs() {
                piv = r;
            }
        }
        assert!(
            aug[piv][col].abs() > 1e-300,
            "singular matrix in oracle inverse"
        );
        aug.swap(col, piv);
        let d = aug[col][col];
        for x in aug[col].iter_mut() {
            *x /= d;
        }
        for r in 0..n {
            if r != col {
                let f = aug[r][col];
                if f != 0.0 {
                    for c in 0..2 * n {
                        aug[r][c] -= f * aug[col][c];
                    }
                }
            }
        }
    }
    aug.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Solves a 2×2 system by Cramer's rule.
pub fn solve_2x2(a: [[f64; 2]; 2], b: [f64; 2]) -> [f64; 2] {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [
        (b[0] * a[1][1] - a[0][1] * b[1]) / det,
        (a[0][0] * b[1] - a[1][0] * b[0]) / det,
    ]
}

/// Solves a 3×3 system by Cramer's rule.
pub fn solve_3x3(a: [[f64; 3]; 3], b: [f64; 3]) -> [f64; 3] {
    let det3 = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det3(a);
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut m = a;
        for i in 0..3 {
            m[i][k] = b[i];
        }
        *o = det3(m) / d;
    }
    out
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation with denominator `len - 1`.
pub fn sample_std(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Standardizes a full column with the mean and sample std of `calib` rows.
pub fn standardize_column(col: &[f64], calib: &[usize]) -> Vec<f64> {
    let sel: Vec<f64> = calib.iter().map(|&i| col[i]).collect();
    let m = mean(&sel);
    let s = sample_std(&sel);
    col.iter().map(|x| (x - m) / s).collect()
}

/// Sum of column outer products divided by the number of columns.
pub fn gram_from_columns(cols: &Mat) -> Mat {
    let n = cols[0].len();
    let mut s = zeros(n, n);
    for c in cols {
        for i in 0..n {
            for k in 0..n {
                s[i][k] += c[i] * c[k];
            }
        }
    }
    scale(&s, 1.0 / cols.len() as f64)
}

/// Explicit H = S(S + λI)⁻¹(I − 1wᵀ) + 1wᵀ.
pub fn hat_matrix(s_cc: &Mat, lambda: f64, w: &[f64]) -> Mat {
    let n = s_cc.len();
    let one_wt: Mat = (0..n).map(|_| w.to_vec()).collect();
    let centering = sub(&identity(n), &one_wt);
    let shifted = add(s_cc, &scale(&identity(n), lambda));
    let smoother = matmul(s_cc, &inverse(&shifted));
    add(&matmul(&smoother, &centering), &one_wt)
}

/// Explicit validation operator S_vc(S_cc + λI)⁻¹(I − 1wᵀ) + 1wᵀ applied to y_c.
pub fn reconstruct(
    s: &Mat,
    calib: &[usize],
    valid: &[usize],
    lambda: f64,
    w: &[f64],
    y_c: &[f64],
) -> Vec<f64> {
    let nc = calib.len();
    let s_cc = submatrix(s, calib, calib);
    let s_vc = submatrix(s, valid, calib);
    let one_wt: Mat = (0..nc).map(|_| w.to_vec()).collect();
    let centering = sub(&identity(nc), &one_wt);
    let inv = inverse(&add(&s_cc, &scale(&identity(nc), lambda)));
    let op = matmul(&matmul(&s_vc, &inv), &centering);
    let wy: f64 = w.iter().zip(y_c).map(|(a, b)| a * b).sum();
    matvec(&op, y_c).into_iter().map(|v| v + wy).collect()
}

/// n_c·‖(I − H)y‖² / tr(I − H)² by explicit matrix assembly.
pub fn gcv_score(s_cc: &Mat, lambda: f64, w: &[f64], y_c: &[f64]) -> f64 {
    let n = s_cc.len();
    let resid_op = sub(&identity(n), &hat_matrix(s_cc, lambda, w));
    let r = matvec(&resid_op, y_c);
    let rss: f64 = r.iter().map(|x| x * x).sum();
    let tr = trace(&resid_op);
    n as f64 * rss / (tr * tr)
}

/// Same score assembled from I − H = λ(S + λI)⁻¹(I − 1wᵀ). Avoids the
/// cancellation in I − H at small λ, where S_cc is near singular.
pub fn gcv_score_residual_form(s_cc: &Mat, lambda: f64, w: &[f64], y_c: &[f64]) -> f64 {
    let n = s_cc.len();
    let one_wt: Mat = (0..n).map(|_| w.to_vec()).collect();
    let centering = sub(&identity(n), &one_wt);
    let inv = inverse(&add(s_cc, &scale(&identity(n), lambda)));
    let resid_op = scale(&matmul(&inv, &centering), lambda);
    let r = matvec(&resid_op, y_c);
    let rss: f64 = r.iter().map(|x| x * x).sum();
    let tr = trace(&resid_op);
    n as f64 * rss / (tr * tr)
}

/// Logarithmically spaced grid on [lo, hi] with `count` points.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Argmin over a grid; returns (argmin, min value). Non-finite values are skipped.
pub fn grid_argmin(grid: &[f64], f: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut best = (f64::NAN, f64::INFINITY);
    for &x in grid {
        let v = f(x);
        if v.is_finite() && v <= best.1 {
            best = (x, v);
        }
    }
    best
}

pub fn rmse(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    (s / a.len() as f64).sqrt()
}

/// Pooled lag-1 autocorrelation of zero-mean columns: Σ x_t x_{t-1} / Σ x_{t-1}².
pub fn pooled_lag1_autocorrelation(cols: &[Vec<f64>]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for c in cols {
        for t in 1..c.len() {
            num += c[t] * c[t - 1];
            den += c[t - 1] * c[t - 1];
        }
    }
    num / den
}

/// Pearson correlation of two vectors.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for i in 0..a.len() {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Smallest eigenvalue of a symmetric matrix by cyclic Jacobi rotations.
pub fn min_eigenvalue(a: &Mat) -> f64 {
    let n = a.len();
    let mut m = a.clone();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += m[i][j] * m[i][j];
                }
            }
        }
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    (0..n).map(|i| m[i][i]).fold(f64::INFINITY, f64::min)
}

/// Relative difference |a − b| / max(|b|, floor).
pub fn rel_diff(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / b.abs().max(floor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_known_matrix() {
        let a = vec![vec![4.0, 7.0], vec![2.0, 6.0]];
        let inv = inverse(&a);
        let expect = [[0.6, -0.7], [-0.2, 0.4]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((inv[i][j] - expect[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cramer_agrees_with_inverse() {
        let a = [[2.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 1.5]];
        let b = [1.0, -2.0, 0.3];
        let x = solve_3x3(a, b);
        let am: Mat = a.iter().map(|r| r.to_vec()).collect();
        let y = matvec(&inverse(&am), &b);
        for i in 0..3 {
            assert!((x[i] - y[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn jacobi_min_eigenvalue() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 2.0]];
        assert!((min_eigenvalue(&a) - 1.0).abs() < 1e-10);
    }
}
