use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{fit_budgeted, BnnModel};
use super::network::{MlpArchitecture, WeightGroups};
use super::objective::{BnnData, ObjectiveSpec};
use super::trainer::{Minimized, TrainerConfig};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// How a candidate width `N` maps to hidden layers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum HiddenPolicy {
    OneLayer,
    /// Two hidden layers, both of width `N`.
    #[default]
    TwoLayerTied,
}

impl HiddenPolicy {
    pub fn architecture(self, input_dim: usize, width: usize) -> Result<MlpArchitecture> {
        let hidden = match (self, width) {
            (_, 0) => vec![],
            (HiddenPolicy::OneLayer, n) => vec![n],
            (HiddenPolicy::TwoLayerTied, n) => vec![n, n],
        };
        MlpArchitecture::new(input_dim, hidden)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SelectionConfig<T: Scalar> {
    pub candidates: Vec<usize>,
    pub policy: HiddenPolicy,
    /// Decay shared by every group of every candidate.
    pub decay: T,
    pub objective: ObjectiveSpec<T>,
    pub trainer: TrainerConfig,
}

impl<T: Scalar> Default for SelectionConfig<T> {
    fn default() -> Self {
        SelectionConfig {
            candidates: vec![1, 2, 4, 8],
            policy: HiddenPolicy::TwoLayerTied,
            decay: T::lit(0.1),
            objective: ObjectiveSpec::default(),
            trainer: TrainerConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct CandidateScore<T: Scalar> {
    pub width: usize,
    pub converged_restarts: usize,
    pub objective: Option<T>,
    pub evidence: Option<T>,
}

#[derive(Clone, Debug)]
pub struct Selection<T: Scalar> {
    pub best: BnnModel<T>,
    pub scores: Vec<CandidateScore<T>>,
}

fn restart_seed(base: u64, width: usize, restart: usize) -> u64 {
    base ^ (width as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (restart as u64).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

/// Trains every candidate width from several seeded starts, keeps the lowest
/// objective per width, and returns the width with the largest evidence.
/// Ties go to the smaller width.
pub fn select_model<T: Scalar>(data: &BnnData<T>, cfg: &SelectionConfig<T>) -> Result<Selection<T>> {
    if cfg.candidates.is_empty() {
        return Err(Error::param("model selection needs at least one candidate width"));
    }
    if data.is_empty() {
        return Err(Error::param("model selection needs data"));
    }
    let input_dim = data.inputs[0].len();
    let mut widths = cfg.candidates.clone();
    widths.sort_unstable();
    widths.dedup();
    let restarts = cfg.trainer.restarts.max(1);

    let jobs: Vec<(usize, usize)> = widths
        .iter()
        .flat_map(|&w| (0..restarts).map(move |r| (w, r)))
        .collect();
    let runs: Vec<Result<(usize, Minimized<T>)>> = jobs
        .par_iter()
        .map(|&(w, r)| {
            let arch = cfg.policy.architecture(input_dim, w)?;
            let groups = WeightGroups::per_layer(&arch, cfg.decay);
            let trainer = TrainerConfig {
                seed: restart_seed(cfg.trainer.seed, w, r),
                ..cfg.trainer
            };
            Ok((w, fit_budgeted(data, &arch, &groups, &cfg.objective, &trainer)?))
        })
        .collect();

    let mut best_per_width: Vec<(usize, usize, Option<Minimized<T>>)> =
        widths.iter().map(|&w| (w, 0, None)).collect();
    for run in runs {
        let (w, m) = run?;
        let slot = best_per_width.iter_mut().find(|s| s.0 == w).expect("known width");
        if !m.converged {
            continue;
        }
        slot.1 += 1;
        if slot.2.as_ref().is_none_or(|b| m.objective < b.objective) {
            slot.2 = Some(m);
        }
    }

    let mut scores = Vec::with_capacity(widths.len());
    let mut best: Option<BnnModel<T>> = None;
    for (w, converged, m) in best_per_width {
        let Some(m) = m else {
            scores.push(CandidateScore {
                width: w,
                converged_restarts: 0,
                objective: None,
                evidence: None,
            });
            continue;
        };
        let arch = cfg.policy.architecture(input_dim, w)?;
        let groups = WeightGroups::per_layer(&arch, cfg.decay);
        let model = BnnModel::from_minimized(m, data, &arch, &groups, &cfg.objective)?;
        scores.push(CandidateScore {
            width: w,
            converged_restarts: converged,
            objective: Some(model.objective),
            evidence: Some(model.evidence.total),
        });
        if best
            .as_ref()
            .is_none_or(|b| model.evidence.total > b.evidence.total)
        {
            best = Some(model);
        }
    }
    match best {
        Some(best) => Ok(Selection { best, scores }),
        None => Err(Error::Convergence {
            message: format!("no candidate width {widths:?} reached the gradient tolerance"),
            iterations: cfg.trainer.max_iterations,
            residual: cfg.trainer.gradient_tolerance,
        }),
    }
}
