//! Laplace log-evidence of a trained network.
//!
//! `log Z = −T − ½ log det A + Σ_h (X_h/2) log ε_h + log N! + N log 2
//!          + Σ_h ½ log(4π/γ_h) − H log(log Ω)`
//!
//! with `A` the Gauss–Newton Hessian at the MAP weights and `γ_h` the number
//! of well-determined parameters in group `h`.

use serde::{Deserialize, Serialize};

use super::network::{MlpArchitecture, WeightGroups};
use super::objective::{gauss_newton, BnnData, ObjectiveSpec};
use crate::error::{Error, Result};
use crate::linalg::SymmetricEigen;
use crate::scalar::Scalar;

pub const DEFAULT_OMEGA: f64 = 1e3;
pub const EIGEN_FLOOR: f64 = 1e-8;
pub const GAMMA_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EvidenceReport<T: Scalar> {
    /// `−T − ½ log det A`
    pub core: T,
    /// `Σ_h (X_h/2) log ε_h`
    pub prior_term: T,
    /// `log N! + N log 2`
    pub symmetry_term: T,
    /// `Σ_h ½ log(4π/γ_h) − H log(log Ω)`
    pub hyper_term: T,
    pub total: T,
    /// `γ_h` per group, after flooring.
    pub well_determined: Vec<T>,
    pub hidden_units: usize,
}

/// Log-determinant and per-group traces of `A⁻¹`.
#[derive(Clone, Debug)]
pub struct Curvature<T: Scalar> {
    pub log_det: T,
    pub group_inverse_traces: Vec<T>,
}

pub fn curvature<T: Scalar>(
    params: &[T],
    arch: &MlpArchitecture,
    data: &BnnData<T>,
    groups: &WeightGroups<T>,
    spec: &ObjectiveSpec<T>,
) -> Result<Curvature<T>> {
    let a = gauss_newton(params, arch, data, groups, spec)?;
    let eig = SymmetricEigen::new(&a)?;
    let floor = T::lit(EIGEN_FLOOR);
    let lambdas: Vec<T> = eig.values.iter().map(|&v| v.max(floor)).collect();
    let log_det: T = lambdas.iter().map(|v| v.ln()).sum();
    if !log_det.is_finite() {
        return Err(Error::Numeric("non-finite Hessian log-determinant".into()));
    }
    let k = params.len();
    // diag(A⁻¹)_i = Σ_m V_im² / λ_m
    let inv_diag: Vec<T> = (0..k)
        .map(|i| {
            (0..k)
                .map(|m| {
                    let v = eig.vectors[(i, m)];
                    v * v / lambdas[m]
                })
                .sum()
        })
        .collect();
    let group_inverse_traces = groups
        .groups
        .iter()
        .map(|g| g.indices.iter().map(|&i| inv_diag[i]).sum())
        .collect();
    Ok(Curvature {
        log_det,
        group_inverse_traces,
    })
}

fn ln_factorial<T: Scalar>(n: usize) -> T {
    (2..=n).map(|k| T::from_usize_lossy(k).ln()).sum()
}

pub(crate) fn assemble<T: Scalar>(
    objective: T,
    groups: &WeightGroups<T>,
    curv: &Curvature<T>,
    hidden_units: usize,
    omega: T,
) -> EvidenceReport<T> {
    let half = T::lit(0.5);
    let core = -objective - half * curv.log_det;
    let prior_term = groups
        .groups
        .iter()
        .map(|g| half * T::from_usize_lossy(g.indices.len()) * g.decay.ln())
        .sum();
    let n = T::from_usize_lossy(hidden_units);
    let symmetry_term = ln_factorial::<T>(hidden_units) + n * T::LN_2();
    let well_determined: Vec<T> = groups
        .groups
        .iter()
        .zip(&curv.group_inverse_traces)
        .map(|(g, &tr)| (T::from_usize_lossy(g.indices.len()) - g.decay * tr).max(T::lit(GAMMA_FLOOR)))
        .collect();
    let four_pi = T::lit(4.0) * T::PI();
    let hyper_term = well_determined.iter().map(|&gam| half * (four_pi / gam).ln()).sum::<T>()
        - T::from_usize_lossy(groups.len()) * omega.ln().ln();
    EvidenceReport {
        core,
        prior_term,
        symmetry_term,
        hyper_term,
        total: core + prior_term + symmetry_term + hyper_term,
        well_determined,
        hidden_units,
    }
}

impl<T: Scalar> EvidenceReport<T> {
    pub fn parts_sum(&self) -> T {
        self.core + self.prior_term + self.symmetry_term + self.hyper_term
    }
}
