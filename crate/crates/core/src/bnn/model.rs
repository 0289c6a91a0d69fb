use serde::{Deserialize, Serialize};

use super::evidence::{assemble, curvature, EvidenceReport, DEFAULT_OMEGA};
use super::network::{MlpArchitecture, WeightGroups};
use super::objective::{objective, sigmoid, BnnData, ObjectiveSpec};
use super::trainer::{init_params, minimize, Minimized, TrainerConfig};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::signal::ClassLabel;
use crate::standardize::Standardizer;

pub const BNN_FORMAT_VERSION: u32 = 1;

/// Network at its MAP weights together with its evidence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct BnnModel<T: Scalar> {
    pub architecture: MlpArchitecture,
    pub objective_spec: ObjectiveSpec<T>,
    pub params: Vec<T>,
    pub groups: WeightGroups<T>,
    pub objective: T,
    pub gradient_norm: T,
    pub converged: bool,
    pub hessian_logdet: T,
    pub evidence: EvidenceReport<T>,
    pub omega: T,
    pub trace: Vec<T>,
    /// Applied to inputs before the forward pass when present.
    pub standardizer: Option<Standardizer<T>>,
}

/// Minimizes from a seeded initialization and returns the raw outcome,
/// converged or not.
pub fn fit_budgeted<T: Scalar>(
    data: &BnnData<T>,
    arch: &MlpArchitecture,
    groups: &WeightGroups<T>,
    spec: &ObjectiveSpec<T>,
    cfg: &TrainerConfig,
) -> Result<Minimized<T>> {
    arch.validate()?;
    let start = init_params(arch, cfg.seed);
    objective(&start, arch, data, groups, spec)?;
    Ok(minimize(start, arch, data, groups, spec, cfg))
}

/// Trains to a local minimum of the regularized objective and scores its evidence.
pub fn train_map<T: Scalar>(
    data: &BnnData<T>,
    arch: &MlpArchitecture,
    groups: &WeightGroups<T>,
    spec: &ObjectiveSpec<T>,
    cfg: &TrainerConfig,
) -> Result<BnnModel<T>> {
    if data.is_empty() {
        return Err(Error::param("network training needs at least one example"));
    }
    let m = fit_budgeted(data, arch, groups, spec, cfg)?;
    if !m.converged {
        return Err(Error::Convergence {
            message: format!(
                "MAP training stopped with objective trace ending at {}",
                m.trace.last().copied().unwrap_or_else(T::nan)
            ),
            iterations: m.iterations,
            residual: m.gradient_norm.as_f64(),
        });
    }
    BnnModel::from_minimized(m, data, arch, groups, spec)
}

impl<T: Scalar> BnnModel<T> {
    pub fn from_minimized(
        m: Minimized<T>,
        data: &BnnData<T>,
        arch: &MlpArchitecture,
        groups: &WeightGroups<T>,
        spec: &ObjectiveSpec<T>,
    ) -> Result<Self> {
        let omega = T::lit(DEFAULT_OMEGA);
        let curv = curvature(&m.params, arch, data, groups, spec)?;
        let evidence = assemble(m.objective, groups, &curv, arch.hidden_units(), omega);
        Ok(BnnModel {
            architecture: arch.clone(),
            objective_spec: *spec,
            params: m.params,
            groups: groups.clone(),
            objective: m.objective,
            gradient_norm: m.gradient_norm,
            converged: m.converged,
            hessian_logdet: curv.log_det,
            evidence,
            omega,
            trace: m.trace,
            standardizer: None,
        })
    }

    /// Builds a model from explicit weights (no training), scoring it on `data`.
    pub fn from_weights(
        params: Vec<T>,
        data: &BnnData<T>,
        arch: &MlpArchitecture,
        groups: &WeightGroups<T>,
        spec: &ObjectiveSpec<T>,
    ) -> Result<Self> {
        let value = objective(&params, arch, data, groups, spec)?;
        let m = Minimized {
            params,
            objective: value,
            gradient_norm: T::nan(),
            iterations: 0,
            converged: false,
            trace: vec![value],
        };
        Self::from_minimized(m, data, arch, groups, spec)
    }

    pub fn input_dim(&self) -> usize {
        self.architecture.input_dim
    }

    /// Linear output `z` before the sigmoid.
    pub fn output(&self, x: &[T]) -> Result<T> {
        if x.len() != self.input_dim() {
            return Err(Error::param(format!(
                "network expects {} inputs, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        let layout = self.architecture.layout();
        let mut ws = layout.workspace();
        Ok(match &self.standardizer {
            Some(s) => layout.forward(&self.params, &s.transform(x)?, &mut ws),
            None => layout.forward(&self.params, x, &mut ws),
        })
    }

    /// Probability of the positive class.
    pub fn predict(&self, x: &[T]) -> Result<T> {
        Ok(sigmoid(self.output(x)?))
    }

    pub fn predict_class(&self, x: &[T]) -> Result<ClassLabel> {
        Ok(if self.predict(x)? >= T::lit(0.5) {
            ClassLabel::Positive
        } else {
            ClassLabel::Negative
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&serde_json::json!({
            "format": "eegbi-bnn",
            "version": BNN_FORMAT_VERSION,
            "model": self,
        }))
        .expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(bound = "")]
        struct Envelope<T: Scalar> {
            format: String,
            version: u32,
            model: BnnModel<T>,
        }
        let env: Envelope<T> =
            serde_json::from_str(s).map_err(|e| Error::data(format!("invalid network model file: {e}")))?;
        if env.format != "eegbi-bnn" || env.version != BNN_FORMAT_VERSION {
            return Err(Error::data(format!(
                "unsupported model format {} v{}",
                env.format, env.version
            )));
        }
        Ok(env.model)
    }
}

/// Recomputes `log det A` at the stored weights.
pub fn hessian_logdet<T: Scalar>(model: &BnnModel<T>, data: &BnnData<T>) -> Result<T> {
    Ok(curvature(&model.params, &model.architecture, data, &model.groups, &model.objective_spec)?.log_det)
}

/// Recomputes the evidence report from the stored weights.
pub fn log_evidence<T: Scalar>(model: &BnnModel<T>, data: &BnnData<T>) -> Result<EvidenceReport<T>> {
    let value = objective(
        &model.params,
        &model.architecture,
        data,
        &model.groups,
        &model.objective_spec,
    )?;
    let curv = curvature(&model.params, &model.architecture, data, &model.groups, &model.objective_spec)?;
    Ok(assemble(value, &model.groups, &curv, model.architecture.hidden_units(), model.omega))
}
