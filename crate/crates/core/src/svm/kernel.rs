use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub enum KernelSpec<T: Scalar> {
    Linear,
    Rbf { gamma: T },
}

impl<T: Scalar> KernelSpec<T> {
    pub fn rbf(gamma: T) -> Result<Self> {
        if gamma.is_finite() && gamma > T::zero() {
            Ok(KernelSpec::Rbf { gamma })
        } else {
            Err(Error::param(format!("rbf gamma must be finite and positive, got {gamma}")))
        }
    }

    /// `gamma = 1 / (num_features * variance)` with the variance pooled over all values.
    pub fn default_rbf(rows: &[Vec<T>]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.len());
        let count = rows.len() * dim;
        if count == 0 {
            return Err(Error::param("cannot derive gamma from empty data"));
        }
        let n = T::from_usize_lossy(count);
        let mean = rows.iter().flatten().copied().sum::<T>() / n;
        let var = rows.iter().flatten().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
        let var = if var > T::zero() { var } else { T::one() };
        Self::rbf(T::one() / (T::from_usize_lossy(dim) * var))
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Rbf { gamma } => Self::rbf(gamma).map(|_| ()),
        }
    }

    #[inline]
    pub fn eval(&self, a: &[T], b: &[T]) -> T {
        match *self {
            KernelSpec::Linear => a.iter().zip(b).map(|(&x, &y)| x * y).sum(),
            KernelSpec::Rbf { gamma } => {
                let d2: T = a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }

    /// Dense Gram matrix, row-major `n × n`.
    pub fn gram(&self, rows: &[Vec<T>]) -> Vec<T> {
        let n = rows.len();
        let mut k = vec![T::zero(); n * n];
        for i in 0..n {
            for j in i..n {
                let v = self.eval(&rows[i], &rows[j]);
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        k
    }
}
