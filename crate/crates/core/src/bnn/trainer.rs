//! MAP training: limited-memory quasi-Newton directions with a backtracking
//! Armijo line search, so every accepted step lowers the objective.

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::network::{MlpArchitecture, WeightGroups};
use super::objective::{value_and_gradient, BnnData, ObjectiveSpec};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainerConfig {
    pub max_iterations: usize,
    /// Convergence threshold on the Euclidean gradient norm.
    pub gradient_tolerance: f64,
    /// Seeded initializations tried by model selection.
    pub restarts: usize,
    pub seed: u64,
    /// Number of curvature pairs kept for the quasi-Newton direction.
    pub memory: usize,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            max_iterations: 5000,
            gradient_tolerance: 1e-5,
            restarts: 5,
            seed: 0,
            memory: 10,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Minimized<T: Scalar> {
    pub params: Vec<T>,
    pub objective: T,
    pub gradient_norm: T,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after initialization and after every accepted step.
    pub trace: Vec<T>,
}

/// Weights drawn from `N(0, 1/fan_in)`, biases zero.
pub fn init_params<T: Scalar>(arch: &MlpArchitecture, seed: u64) -> Vec<T> {
    let layout = arch.layout();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = vec![T::zero(); layout.total];
    for span in &layout.layers {
        let dist = Normal::new(0.0, (1.0 / span.n_in as f64).sqrt()).expect("valid normal");
        for w in &mut p[span.weights..span.weights + span.n_in * span.n_out] {
            *w = T::lit(dist.sample(&mut rng));
        }
    }
    p
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Minimizes the objective from `start`. Inputs must already be validated.
pub(crate) fn minimize<T: Scalar>(
    start: Vec<T>,
    arch: &MlpArchitecture,
    data: &BnnData<T>,
    groups: &WeightGroups<T>,
    spec: &ObjectiveSpec<T>,
    cfg: &TrainerConfig,
) -> Minimized<T> {
    let tol = T::lit(cfg.gradient_tolerance);
    let c1 = T::lit(1e-4);
    let min_step = T::lit(1e-20);
    let eval = |p: &[T]| value_and_gradient(p, arch, data, groups, spec);

    let mut x = start;
    let (mut f, mut g) = eval(&x);
    let mut trace = vec![f];
    let mut history: VecDeque<(Vec<T>, Vec<T>, T)> = VecDeque::with_capacity(cfg.memory);
    let mut iterations = 0;
    let mut gnorm = norm(&g);

    while gnorm > tol && iterations < cfg.max_iterations {
        iterations += 1;
        let mut dir = two_loop(&g, &history);
        let mut slope = dot(&g, &dir);
        if !(slope < T::zero()) {
            history.clear();
            dir = g.iter().map(|&v| -v).collect();
            slope = -gnorm * gnorm;
        }
        let mut step = if history.is_empty() {
            (T::one() / gnorm).min(T::one())
        } else {
            T::one()
        };
        let mut accepted = None;
        while step >= min_step {
            let trial: Vec<T> = x.iter().zip(&dir).map(|(&a, &d)| a + step * d).collect();
            let (ft, gt) = eval(&trial);
            if ft.is_finite() && ft <= f + c1 * step * slope && ft <= f {
                accepted = Some((trial, ft, gt));
                break;
            }
            step /= T::lit(2.0);
        }
        let Some((xn, fnew, gn)) = accepted else {
            if history.is_empty() {
                break;
            }
            history.clear();
            continue;
        };
        let s: Vec<T> = xn.iter().zip(&x).map(|(&a, &b)| a - b).collect();
        let y: Vec<T> = gn.iter().zip(&g).map(|(&a, &b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > T::lit(1e-12) * norm(&s) * norm(&y) {
            if history.len() == cfg.memory.max(1) {
                history.pop_front();
            }
            history.push_back((s, y, T::one() / sy));
        }
        x = xn;
        f = fnew;
        g = gn;
        gnorm = norm(&g);
        trace.push(f);
    }
    Minimized {
        params: x,
        objective: f,
        gradient_norm: gnorm,
        iterations,
        converged: gnorm <= tol,
        trace,
    }
}

fn two_loop<T: Scalar>(g: &[T], history: &VecDeque<(Vec<T>, Vec<T>, T)>) -> Vec<T> {
    let mut q: Vec<T> = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = *rho * dot(s, &q);
        for (qi, &yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in &mut q {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = *rho * dot(y, &q);
        for (qi, &si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|&v| -v).collect()
}
