use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Per-feature centering and scaling fitted on training rows only.
///
/// Uses the population standard deviation. Zero-variance columns map to 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Standardizer<T: Scalar> {
    pub mean: Vec<T>,
    pub std: Vec<T>,
}

impl<T: Scalar> Standardizer<T> {
    pub fn fit(rows: &[Vec<T>]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::param(format!(
                "standardizer needs at least 2 rows, got {}",
                rows.len()
            )));
        }
        let dim = rows[0].len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::data("ragged feature rows"));
        }
        let n = T::from_usize_lossy(rows.len());
        let mut mean = vec![T::zero(); dim];
        for r in rows {
            for (m, &v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = vec![T::zero(); dim];
        for r in rows {
            for ((s, &v), &m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var.into_iter().map(|s| (s / n).sqrt()).collect();
        Ok(Standardizer { mean, std })
    }

    pub fn identity(dim: usize) -> Self {
        Standardizer {
            mean: vec![T::zero(); dim],
            std: vec![T::one(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.dim() {
            return Err(Error::param(format!(
                "expected {} features, got {}",
                self.dim(),
                x.len()
            )));
        }
        Ok(x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&v, (&m, &s))| if s > T::zero() { (v - m) / s } else { T::zero() })
            .collect())
    }

    pub fn transform_all(&self, rows: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
        rows.iter().map(|r| self.transform(r)).collect()
    }
}
