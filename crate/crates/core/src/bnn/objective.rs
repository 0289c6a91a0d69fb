//! Regularized objective `T = S_E + Σ_h ε_h · ½‖w_h‖²` and its derivatives.

use serde::{Deserialize, Serialize};

use super::network::{MlpArchitecture, WeightGroups};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct BnnData<T: Scalar> {
    pub inputs: Vec<Vec<T>>,
    pub targets: Vec<T>,
}

impl<T: Scalar> BnnData<T> {
    pub fn new(inputs: Vec<Vec<T>>, targets: Vec<T>) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(Error::param("inputs and targets differ in length"));
        }
        if let Some(d) = inputs.first().map(|r| r.len()) {
            if inputs.iter().any(|r| r.len() != d) {
                return Err(Error::data("ragged input rows"));
            }
        }
        if inputs.iter().flatten().chain(&targets).any(|v| !v.is_finite()) {
            return Err(Error::data("non-finite network data"));
        }
        Ok(BnnData { inputs, targets })
    }

    pub fn empty() -> Self {
        BnnData {
            inputs: vec![],
            targets: vec![],
        }
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// Data-error term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Loss {
    /// `½ β Σ (t − z)²` on the linear output.
    #[default]
    SumSquares,
    /// Bernoulli cross-entropy of `sigmoid(z)` against targets in `[0, 1]`.
    CrossEntropy,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ObjectiveSpec<T: Scalar> {
    pub loss: Loss,
    /// Noise precision `β` multiplying the squared-error term.
    pub noise_precision: T,
}

impl<T: Scalar> Default for ObjectiveSpec<T> {
    fn default() -> Self {
        ObjectiveSpec {
            loss: Loss::SumSquares,
            noise_precision: T::one(),
        }
    }
}

fn check<T: Scalar>(
    params: &[T],
    arch: &MlpArchitecture,
    data: &BnnData<T>,
    groups: &WeightGroups<T>,
) -> Result<()> {
    let k = arch.param_count();
    if params.len() != k {
        return Err(Error::State(format!("{} weights for {k} parameters", params.len())));
    }
    groups.validate(k)?;
    if data.inputs.iter().any(|r| r.len() != arch.input_dim) {
        return Err(Error::param(format!("network expects {} inputs", arch.input_dim)));
    }
    Ok(())
}

/// Per-sample data error and its derivative with respect to the output `z`.
#[inline]
fn loss_terms<T: Scalar>(spec: &ObjectiveSpec<T>, z: T, t: T) -> (T, T) {
    match spec.loss {
        Loss::SumSquares => {
            let r = z - t;
            (T::lit(0.5) * spec.noise_precision * r * r, spec.noise_precision * r)
        }
        Loss::CrossEntropy => {
            // log(1 + e^z) − t z, computed stably
            let softplus = if z > T::zero() {
                z + (-z).exp().ln_1p()
            } else {
                z.exp().ln_1p()
            };
            (softplus - t * z, sigmoid(z) - t)
        }
    }
}

pub(crate) fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

fn decay_term<T: Scalar>(params: &[T], groups: &WeightGroups<T>) -> T {
    groups
        .groups
        .iter()
        .map(|g| g.decay * T::lit(0.5) * g.indices.iter().map(|&i| params[i] * params[i]).sum::<T>())
        .sum()
}

/// Data error `S_E` alone.
pub fn data_error<T: Scalar>(
    params: &[T],
    arch: &MlpArchitecture,
    data: &BnnData<T>,
    spec: &ObjectiveSpec<T>,
) -> T {
    let layout = arch.layout();
    let mut ws = layout.workspace();
    data.inputs
        .iter()
        .zip(&data.targets)
        .map(|(x, &t)| loss_terms(spec, layout.forward(params, x, &mut ws), t).0)
        .sum()
}

pub fn objective<T: Scalar>(
    params: &[T],
    arch: &MlpArchitecture,
    data: &BnnData<T>,
    groups: &WeightGroups<T>,
    spec: &ObjectiveSpec<T>,
) -> Result<T> {
    check(params, arch, data, groups)?;
    Ok(data_error(params, arch, data, spec) + decay_term(params, groups))
}

pub fn gradient<T: Scalar>(
    params: &[T],
    arch: &MlpArchitecture,
    data: &BnnData<T>,
    groups: &WeightGroups<T>,
    spec: &ObjectiveSpec<T>,
) -> Result<Vec<T>> {
    check(params, arch, data, groups)?;
    Ok(value_and_gradient(params, arch, data, groups, spec).1)
}

/// Objective and gradient in one pass; inputs must already be validated.
pub(crate) fn value_and_gradient<T: Scalar>(
    params: &[T],
    arch: &MlpArchitecture,
    data: &BnnData<T>,
    groups: &WeightGroups<T>,
    spec: &ObjectiveSpec<T>,
) -> (T, Vec<T>) {
    let layout = arch.layout();
    let mut ws = layout.workspace();
    let mut grad = vec![T::zero(); params.len()];
    let mut value = T::zero();
    for (x, &t) in data.inputs.iter().zip(&data.targets) {
        let z = layout.forward(params, x, &mut ws);
        let (e, dz) = loss_terms(spec, z, t);
        value += e;
        layout.backward(params, dz, &mut ws, &mut grad);
    }
    for g in &groups.groups {
        let mut s = T::zero();
        for &i in &g.indices {
            s += params[i] * params[i];
            grad[i] += g.decay * params[i];
        }
        value += g.decay * T::lit(0.5) * s;
    }
    (value, grad)
}

/// Gauss–Newton approximation `Σ_n λ_n J_nᵀ J_n + diag(ε)` of the Hessian of `T`,
/// where `J_n = ∂z/∂w` and `λ_n` is the loss curvature in `z`.
pub fn gauss_newton<T: Scalar>(
    params: &[T],
    arch: &MlpArchitecture,
    data: &BnnData<T>,
    groups: &WeightGroups<T>,
    spec: &ObjectiveSpec<T>,
) -> Result<Matrix<T>> {
    check(params, arch, data, groups)?;
    let k = params.len();
    let layout = arch.layout();
    let mut ws = layout.workspace();
    let mut a = Matrix::zeros(k, k);
    let mut jac = vec![T::zero(); k];
    for x in &data.inputs {
        jac.iter_mut().for_each(|v| *v = T::zero());
        let z = layout.forward(params, x, &mut ws);
        layout.backward(params, T::one(), &mut ws, &mut jac);
        let lambda = match spec.loss {
            Loss::SumSquares => spec.noise_precision,
            Loss::CrossEntropy => {
                let p = sigmoid(z);
                p * (T::one() - p)
            }
        };
        for i in 0..k {
            let ji = lambda * jac[i];
            if ji == T::zero() {
                continue;
            }
            for j in i..k {
                a[(i, j)] += ji * jac[j];
            }
        }
    }
    for i in 0..k {
        for j in 0..i {
            a[(i, j)] = a[(j, i)];
        }
    }
    for (i, d) in groups.per_parameter(k).into_iter().enumerate() {
        a[(i, i)] += d;
    }
    Ok(a)
}
