//! Domain types shared by every stage of the pipeline.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Annual target series (the predictand).
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T> {
    years: Vec<i32>,
    values: Vec<T>,
}

impl<T: Real> TimeSeries<T> {
    /// Validates length ≥ 2, unit-step years and finite values.
    pub fn new(years: Vec<i32>, values: Vec<T>) -> Result<Self> {
        if years.len() != values.len() {
            return Err(Error::LengthMismatch {
                expected: years.len(),
                actual: values.len(),
            });
        }
        if years.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "a series needs at least 2 years, got {}",
                years.len()
            )));
        }
        if let Some(w) = years.windows(2).position(|w| w[1] != w[0] + 1) {
            return Err(Error::InvalidInput(format!(
                "years {} and {} are not consecutive",
                years[w],
                years[w + 1]
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value in year {}",
                years[i]
            )));
        }
        Ok(Self { years, values })
    }

    /// Series starting at `first_year` with consecutive years.
    pub fn from_values(first_year: i32, values: Vec<T>) -> Result<Self> {
        let years = (0..values.len() as i32).map(|i| first_year + i).collect();
        Self::new(years, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn years(&self) -> &[i32] {
        &self.years
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn first_year(&self) -> i32 {
        self.years[0]
    }

    /// Values at the given row indices, in order.
    pub fn select(&self, rows: &[usize]) -> Vec<T> {
        rows.iter().map(|&i| self.values[i]).collect()
    }

    pub fn mean(&self) -> T {
        self.values.iter().copied().sum::<T>() / T::from_count(self.len())
    }

    /// The same series shifted to zero mean.
    pub fn centered(&self) -> Self {
        let m = self.mean();
        Self {
            years: self.years.clone(),
            values: self.values.iter().map(|&v| v - m).collect(),
        }
    }
}

/// n×p predictor matrix: rows are years, columns are proxies or noise series.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxyMatrix<T> {
    data: Array2<T>,
    column_ids: Vec<String>,
}

impl<T: Real> ProxyMatrix<T> {
    pub fn new(data: Array2<T>, column_ids: Vec<String>) -> Result<Self> {
        if data.ncols() == 0 {
            return Err(Error::InvalidInput("proxy matrix has no columns".into()));
        }
        if column_ids.len() != data.ncols() {
            return Err(Error::LengthMismatch {
                expected: data.ncols(),
                actual: column_ids.len(),
            });
        }
        if let Some(((i, j), _)) = data.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite entry at row {i}, column `{}`",
                column_ids[j]
            )));
        }
        Ok(Self { data, column_ids })
    }

    /// Matrix with generated ids `x0000`, `x0001`, ...
    pub fn with_default_ids(data: Array2<T>) -> Result<Self> {
        let ids = (0..data.ncols()).map(|j| format!("x{j:04}")).collect();
        Self::new(data, ids)
    }

    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &Array2<T> {
        &self.data
    }

    pub fn column_ids(&self) -> &[String] {
        &self.column_ids
    }

    /// Columns reordered by `order` (a permutation of 0..p).
    pub fn permuted(&self, order: &[usize]) -> Self {
        let data = self.data.select(ndarray::Axis(1), order);
        let ids = order.iter().map(|&j| self.column_ids[j].clone()).collect();
        Self {
            data,
            column_ids: ids,
        }
    }
}

/// One contiguous validation block and its calibration complement.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HoldoutSplit {
    block_start: usize,
    block_len: usize,
    n: usize,
    calib_rows: Vec<usize>,
    valid_rows: Vec<usize>,
}

impl HoldoutSplit {
    /// Validation rows `[block_start, block_start + block_len)` of an n-row series.
    pub fn new(n: usize, block_start: usize, block_len: usize) -> Result<Self> {
        if block_len < 1 || block_len >= n || block_start + block_len > n {
            return Err(Error::InvalidBlockLength { n, n_v: block_len });
        }
        let valid_rows: Vec<usize> = (block_start..block_start + block_len).collect();
        let calib_rows = (0..block_start).chain(block_start + block_len..n).collect();
        Ok(Self {
            block_start,
            block_len,
            n,
            calib_rows,
            valid_rows,
        })
    }

    pub fn block_start(&self) -> usize {
        self.block_start
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    /// Total number of rows n = n_c + n_v.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_calib(&self) -> usize {
        self.calib_rows.len()
    }

    pub fn calib_rows(&self) -> &[usize] {
        &self.calib_rows
    }

    pub fn valid_rows(&self) -> &[usize] {
        &self.valid_rows
    }
}

/// Proxy matrix standardized with calibration-row statistics.
#[derive(Debug, Clone)]
pub struct StandardizedMatrix<T> {
    pub data: Array2<T>,
    pub col_means: Vec<T>,
    pub col_stds: Vec<T>,
}

/// Weights w with wᵀ1 = 1 defining the intercept estimate wᵀy_c.
///
/// [`WeightVector::zero`] is the one exception: it switches the intercept
/// off entirely, as used by simple kriging.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector<T> {
    w: Vec<T>,
}

impl<T: Real> WeightVector<T> {
    pub fn new(w: Vec<T>) -> Result<Self> {
        let sum: T = w.iter().copied().sum();
        if !w.is_empty() && (sum - T::one()).abs() <= T::lit(1e-12).max(T::epsilon() * T::lit(16.0))
        {
            Ok(Self { w })
        } else {
            Err(Error::InvalidWeights(sum.to_f64().unwrap_or(f64::NAN)))
        }
    }

    /// e = 1/n_c, the plain calibration mean.
    pub fn uniform(n_c: usize) -> Self {
        Self {
            w: vec![T::one() / T::from_count(n_c); n_c],
        }
    }

    pub fn zero(n_c: usize) -> Self {
        Self {
            w: vec![T::zero(); n_c],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.w.iter().all(|x| *x == T::zero())
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.w
    }

    /// wᵀv
    pub fn dot(&self, v: &[T]) -> T {
        self.w.iter().zip(v).map(|(&a, &b)| a * b).sum()
    }
}

/// Validation-block prediction with the ridge parameter that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult<T> {
    pub y_hat_v: Vec<T>,
    pub lambda: T,
    pub split: HoldoutSplit,
    pub rmse: T,
}
