//! Sigmoid mapping of decision values to probabilities,
//! `Q(positive | h) = 1 / (1 + exp(x·h + y))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::signal::ClassLabel;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SigmoidParams<T: Scalar> {
    pub x_slope: T,
    pub y_intercept: T,
}

impl<T: Scalar> SigmoidParams<T> {
    pub fn probability(&self, h: T) -> T {
        let z = self.x_slope * h + self.y_intercept;
        if z >= T::zero() {
            let e = (-z).exp();
            e / (T::one() + e)
        } else {
            T::one() / (T::one() + z.exp())
        }
    }
}

/// Smoothed targets `t+ = (N+ + 1)/(N+ + 2)` and `t- = 1/(N- + 2)`.
pub fn smoothed_targets<T: Scalar>(labels: &[ClassLabel]) -> Vec<T> {
    let pos = labels.iter().filter(|l| l.is_positive()).count();
    let neg = labels.len() - pos;
    let hi = T::from_usize_lossy(pos + 1) / T::from_usize_lossy(pos + 2);
    let lo = T::one() / T::from_usize_lossy(neg + 2);
    labels.iter().map(|l| if l.is_positive() { hi } else { lo }).collect()
}

/// Cross-entropy of the sigmoid against arbitrary targets in `[0, 1]`.
pub fn cross_entropy<T: Scalar>(values: &[T], targets: &[T], params: SigmoidParams<T>) -> T {
    values
        .iter()
        .zip(targets)
        .map(|(&h, &t)| {
            let z = params.x_slope * h + params.y_intercept;
            // −[t ln p + (1−t) ln(1−p)] with p = 1/(1+e^z)
            if z >= T::zero() {
                t * z + (T::one() + (-z).exp()).ln()
            } else {
                (t - T::one()) * z + (T::one() + z.exp()).ln()
            }
        })
        .sum()
}

/// The objective minimized by [`fit_sigmoid`]: cross-entropy against smoothed targets.
pub fn sigmoid_nll<T: Scalar>(values: &[T], labels: &[ClassLabel], params: SigmoidParams<T>) -> T {
    cross_entropy(values, &smoothed_targets(labels), params)
}

/// Fits `(x, y)` by damped Newton iterations with backtracking.
pub fn fit_sigmoid<T: Scalar>(values: &[T], labels: &[ClassLabel]) -> Result<SigmoidParams<T>> {
    if values.len() != labels.len() {
        return Err(Error::param("decision values and labels differ in length"));
    }
    let pos = labels.iter().filter(|l| l.is_positive()).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::data("sigmoid calibration needs both classes"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::data("non-finite decision value"));
    }
    let targets = smoothed_targets::<T>(labels);
    let max_iter = 100;
    let min_step = T::lit(1e-10);
    let ridge = T::lit(1e-12);
    let eps = T::lit(1e-5);

    let mut params = SigmoidParams {
        x_slope: T::zero(),
        y_intercept: (T::from_usize_lossy(neg + 1) / T::from_usize_lossy(pos + 1)).ln(),
    };
    let start = SigmoidParams {
        x_slope: T::zero(),
        y_intercept: T::zero(),
    };
    if cross_entropy(values, &targets, start) < cross_entropy(values, &targets, params) {
        params = start;
    }
    let mut fval = cross_entropy(values, &targets, params);

    for _ in 0..max_iter {
        let (mut h11, mut h22, mut h21) = (ridge, ridge, T::zero());
        let (mut g1, mut g2) = (T::zero(), T::zero());
        for (&h, &t) in values.iter().zip(&targets) {
            let z = params.x_slope * h + params.y_intercept;
            // p = 1/(1+e^z), q = 1 − p
            let (p, q) = if z >= T::zero() {
                let e = (-z).exp();
                (e / (T::one() + e), T::one() / (T::one() + e))
            } else {
                let e = z.exp();
                (T::one() / (T::one() + e), e / (T::one() + e))
            };
            let d2 = p * q;
            h11 += h * h * d2;
            h22 += d2;
            h21 += h * d2;
            let d1 = t - p;
            g1 += h * d1;
            g2 += d1;
        }
        if g1.abs() < eps && g2.abs() < eps {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let dx = -(h22 * g1 - h21 * g2) / det;
        let dy = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * dx + g2 * dy;
        let mut step = T::one();
        let mut accepted = false;
        while step >= min_step {
            let trial = SigmoidParams {
                x_slope: params.x_slope + step * dx,
                y_intercept: params.y_intercept + step * dy,
            };
            let f = cross_entropy(values, &targets, trial);
            if f < fval + T::lit(1e-4) * step * gd {
                params = trial;
                fval = f;
                accepted = true;
                break;
            }
            step /= T::lit(2.0);
        }
        if !accepted {
            break;
        }
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ClassLabel::{Negative as N, Positive as P};

    #[test]
    fn symmetric_data_gives_zero_intercept() {
        let h = [-2.0f64, -1.0, -0.5, 0.5, 1.0, 2.0, -0.2, 0.2];
        let l = [N, N, P, N, P, P, P, N];
        let s = fit_sigmoid(&h, &l).unwrap();
        assert!(s.y_intercept.abs() < 1e-3, "{s:?}");
        assert!(s.x_slope < 0.0);
    }

    #[test]
    fn zero_score_with_zero_intercept_is_half() {
        let s = SigmoidParams {
            x_slope: -3.7,
            y_intercept: 0.0,
        };
        assert_eq!(s.probability(0.0), 0.5);
        assert!((s.probability(1e6) - 1.0f64).abs() < 1e-12);
        assert!(s.probability(-1e6) < 1e-12);
    }

    #[test]
    fn improves_on_zero_start() {
        let h = [0.3, -1.2, 2.2, 0.1, -0.4, 1.1, -2.0];
        let l = [P, N, P, N, N, P, P];
        let s = fit_sigmoid(&h, &l).unwrap();
        let zero = SigmoidParams {
            x_slope: 0.0,
            y_intercept: 0.0,
        };
        assert!(sigmoid_nll(&h, &l, s) <= sigmoid_nll(&h, &l, zero));
    }

    #[test]
    fn single_class_is_rejected() {
        assert!(matches!(fit_sigmoid(&[1.0, 2.0], &[P, P]), Err(Error::Data(_))));
    }
}
