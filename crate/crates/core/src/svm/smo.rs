//! Pairwise coordinate ascent on the soft-margin dual
//!
//! maximize  Σ β_j − ½ Σ_j Σ_n β_j β_n b_j b_n H(a_j, a_n)
//! subject to Σ β_j b_j = 0,  0 ≤ β_j ≤ D,
//!
//! choosing the maximal KKT-violating pair at every step.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct DualSolution<T: Scalar> {
    pub alpha: Vec<T>,
    /// Offset `d` of the decision function.
    pub bias: T,
    pub iterations: usize,
    /// Final maximal violation `m(β) − M(β)`.
    pub violation: T,
}

/// Solves the dual for labels `y ∈ {−1, +1}` and a dense row-major Gram matrix.
pub fn solve<T: Scalar>(
    gram: &[T],
    y: &[T],
    cost: T,
    tolerance: T,
    max_iterations: usize,
) -> Result<DualSolution<T>> {
    let n = y.len();
    assert_eq!(gram.len(), n * n);
    let k = |i: usize, j: usize| gram[i * n + j];
    let tau = T::lit(1e-12);
    let mut alpha = vec![T::zero(); n];
    let mut grad = vec![-T::one(); n];

    let in_up = |a: T, yi: T| (yi > T::zero() && a < cost) || (yi < T::zero() && a > T::zero());
    let in_low = |a: T, yi: T| (yi > T::zero() && a > T::zero()) || (yi < T::zero() && a < cost);

    let mut iterations = 0;
    loop {
        let mut gmax = T::neg_infinity();
        let mut gmin = T::infinity();
        let mut i_sel = usize::MAX;
        let mut j_sel = usize::MAX;
        for t in 0..n {
            let v = -y[t] * grad[t];
            if in_up(alpha[t], y[t]) && v > gmax {
                gmax = v;
                i_sel = t;
            }
            if in_low(alpha[t], y[t]) && v < gmin {
                gmin = v;
                j_sel = t;
            }
        }
        let violation = if i_sel == usize::MAX || j_sel == usize::MAX {
            T::zero()
        } else {
            gmax - gmin
        };
        if violation < tolerance {
            let bias = -offset(&alpha, &grad, y, cost);
            return Ok(DualSolution {
                alpha,
                bias,
                iterations,
                violation,
            });
        }
        if iterations >= max_iterations {
            return Err(Error::Convergence {
                message: format!("SMO stopped after {iterations} iterations"),
                iterations,
                residual: violation.as_f64(),
            });
        }
        iterations += 1;

        let (i, j) = (i_sel, j_sel);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let mut quad = k(i, i) + k(j, j) - T::lit(2.0) * k(i, j);
        if quad <= T::zero() {
            quad = tau;
        }
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > T::zero() {
                if alpha[j] < T::zero() {
                    alpha[j] = T::zero();
                    alpha[i] = diff;
                }
            } else if alpha[i] < T::zero() {
                alpha[i] = T::zero();
                alpha[j] = -diff;
            }
            if diff > T::zero() {
                if alpha[i] > cost {
                    alpha[i] = cost;
                    alpha[j] = cost - diff;
                }
            } else if alpha[j] > cost {
                alpha[j] = cost;
                alpha[i] = cost + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > cost {
                if alpha[i] > cost {
                    alpha[i] = cost;
                    alpha[j] = sum - cost;
                }
            } else if alpha[j] < T::zero() {
                alpha[j] = T::zero();
                alpha[i] = sum;
            }
            if sum > cost {
                if alpha[j] > cost {
                    alpha[j] = cost;
                    alpha[i] = sum - cost;
                }
            } else if alpha[i] < T::zero() {
                alpha[i] = T::zero();
                alpha[j] = sum;
            }
        }
        let di = alpha[i] - old_i;
        let dj = alpha[j] - old_j;
        for t in 0..n {
            grad[t] += y[t] * (y[i] * k(t, i) * di + y[j] * k(t, j) * dj);
        }
    }
}

/// `r` such that the decision offset is `−r`: the mean of `y_i ∇_i` over free
/// multipliers, or the midpoint of the feasible interval when none is free.
fn offset<T: Scalar>(alpha: &[T], grad: &[T], y: &[T], cost: T) -> T {
    let mut ub = T::infinity();
    let mut lb = T::neg_infinity();
    let mut sum = T::zero();
    let mut free = 0usize;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        let pos = y[t] > T::zero();
        if alpha[t] >= cost {
            if pos {
                lb = lb.max(yg);
            } else {
                ub = ub.min(yg);
            }
        } else if alpha[t] <= T::zero() {
            if pos {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum += yg;
        }
    }
    if free > 0 {
        sum / T::from_usize_lossy(free)
    } else if ub.is_finite() && lb.is_finite() {
        (ub + lb) / T::lit(2.0)
    } else if ub.is_finite() {
        ub
    } else if lb.is_finite() {
        lb
    } else {
        T::zero()
    }
}
