use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Fully connected tanh network with a single linear output unit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpArchitecture {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub use_bias: bool,
}

impl MlpArchitecture {
    pub fn new(input_dim: usize, hidden: Vec<usize>) -> Result<Self> {
        let arch = MlpArchitecture {
            input_dim,
            hidden,
            use_bias: true,
        };
        arch.validate()?;
        Ok(arch)
    }

    /// Two hidden layers of equal width.
    pub fn two_layer(input_dim: usize, width: usize) -> Result<Self> {
        Self::new(input_dim, vec![width, width])
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::param("input_dim must be >= 1"));
        }
        if self.hidden.contains(&0) {
            return Err(Error::param("hidden widths must be >= 1"));
        }
        Ok(())
    }

    /// Width of the first hidden layer; 0 for a linear model.
    pub fn hidden_units(&self) -> usize {
        self.hidden.first().copied().unwrap_or(0)
    }

    pub fn layout(&self) -> Layout {
        let mut sizes = vec![self.input_dim];
        sizes.extend(&self.hidden);
        sizes.push(1);
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        let mut offset = 0;
        for w in sizes.windows(2) {
            let (n_in, n_out) = (w[0], w[1]);
            let weights = offset;
            offset += n_in * n_out;
            let bias = if self.use_bias {
                let b = offset;
                offset += n_out;
                Some(b)
            } else {
                None
            };
            layers.push(LayerSpan {
                weights,
                bias,
                n_in,
                n_out,
            });
        }
        Layout {
            layers,
            total: offset,
        }
    }

    pub fn param_count(&self) -> usize {
        self.layout().total
    }
}

/// Position of one layer's parameters in the flat vector. Weights are
/// stored row-major `n_out × n_in`, followed by the `n_out` biases.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerSpan {
    pub weights: usize,
    pub bias: Option<usize>,
    pub n_in: usize,
    pub n_out: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    pub layers: Vec<LayerSpan>,
    pub total: usize,
}

/// Reusable activation buffers for one forward/backward pass.
pub(crate) struct Workspace<T: Scalar> {
    acts: Vec<Vec<T>>,
    delta: Vec<T>,
    delta_prev: Vec<T>,
}

impl Layout {
    pub(crate) fn workspace<T: Scalar>(&self) -> Workspace<T> {
        let mut acts = vec![vec![T::zero(); self.layers[0].n_in]];
        for l in &self.layers {
            acts.push(vec![T::zero(); l.n_out]);
        }
        let widest = self.layers.iter().map(|l| l.n_in.max(l.n_out)).max().unwrap_or(1);
        Workspace {
            acts,
            delta: vec![T::zero(); widest],
            delta_prev: vec![T::zero(); widest],
        }
    }

    /// Linear output `z` of the network.
    pub(crate) fn forward<T: Scalar>(&self, p: &[T], x: &[T], ws: &mut Workspace<T>) -> T {
        ws.acts[0].copy_from_slice(x);
        let last = self.layers.len() - 1;
        for (l, span) in self.layers.iter().enumerate() {
            let (head, tail) = ws.acts.split_at_mut(l + 1);
            let input = &head[l];
            let out = &mut tail[0];
            for o in 0..span.n_out {
                let row = &p[span.weights + o * span.n_in..span.weights + (o + 1) * span.n_in];
                let mut z: T = row.iter().zip(input.iter()).map(|(&w, &a)| w * a).sum();
                if let Some(b) = span.bias {
                    z += p[b + o];
                }
                out[o] = if l < last { z.tanh() } else { z };
            }
        }
        ws.acts[last + 1][0]
    }

    /// Accumulates `dz · ∂z/∂p` into `grad`; call right after [`Layout::forward`].
    pub(crate) fn backward<T: Scalar>(&self, p: &[T], dz: T, ws: &mut Workspace<T>, grad: &mut [T]) {
        ws.delta[0] = dz;
        for (l, span) in self.layers.iter().enumerate().rev() {
            let input = &ws.acts[l];
            for o in 0..span.n_out {
                let d = ws.delta[o];
                let g = &mut grad[span.weights + o * span.n_in..span.weights + (o + 1) * span.n_in];
                for (gi, &a) in g.iter_mut().zip(input.iter()) {
                    *gi += d * a;
                }
                if let Some(b) = span.bias {
                    grad[b + o] += d;
                }
            }
            if l > 0 {
                for i in 0..span.n_in {
                    let mut s = T::zero();
                    for o in 0..span.n_out {
                        s += p[span.weights + o * span.n_in + i] * ws.delta[o];
                    }
                    let a = input[i];
                    ws.delta_prev[i] = s * (T::one() - a * a);
                }
                std::mem::swap(&mut ws.delta, &mut ws.delta_prev);
            }
        }
    }
}

/// One decay group: a set of parameter indices sharing a hyperparameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct WeightGroup<T: Scalar> {
    pub name: String,
    pub indices: Vec<usize>,
    pub decay: T,
}

/// Partition of all parameters into decay groups.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct WeightGroups<T: Scalar> {
    pub groups: Vec<WeightGroup<T>>,
}

impl<T: Scalar> WeightGroups<T> {
    /// One group per layer's weights plus a single group for all biases.
    pub fn per_layer(arch: &MlpArchitecture, decay: T) -> Self {
        let layout = arch.layout();
        let mut groups: Vec<WeightGroup<T>> = layout
            .layers
            .iter()
            .enumerate()
            .map(|(l, s)| WeightGroup {
                name: format!("layer{l}_weights"),
                indices: (s.weights..s.weights + s.n_in * s.n_out).collect(),
                decay,
            })
            .collect();
        if arch.use_bias {
            groups.push(WeightGroup {
                name: "biases".into(),
                indices: layout
                    .layers
                    .iter()
                    .flat_map(|s| {
                        let b = s.bias.expect("bias offset");
                        b..b + s.n_out
                    })
                    .collect(),
                decay,
            });
        }
        WeightGroups { groups }
    }

    pub fn with_decays(mut self, decays: &[T]) -> Result<Self> {
        if decays.len() != self.groups.len() {
            return Err(Error::param(format!(
                "{} decays for {} groups",
                decays.len(),
                self.groups.len()
            )));
        }
        for (g, &d) in self.groups.iter_mut().zip(decays) {
            g.decay = d;
        }
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Checks that the groups partition `0..param_count` and decays are positive.
    pub fn validate(&self, param_count: usize) -> Result<()> {
        let mut seen = vec![false; param_count];
        for g in &self.groups {
            if !(g.decay.is_finite() && g.decay > T::zero()) {
                return Err(Error::State(format!("group {} has non-positive decay", g.name)));
            }
            for &i in &g.indices {
                if i >= param_count || seen[i] {
                    return Err(Error::State(format!(
                        "group {} index {i} is out of range or duplicated",
                        g.name
                    )));
                }
                seen[i] = true;
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::State(format!("parameter {i} belongs to no group")));
        }
        Ok(())
    }

    /// Decay of each parameter.
    pub fn per_parameter(&self, param_count: usize) -> Vec<T> {
        let mut out = vec![T::zero(); param_count];
        for g in &self.groups {
            for &i in &g.indices {
                out[i] = g.decay;
            }
        }
        out
    }
}
