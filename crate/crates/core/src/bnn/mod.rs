//! Multilayer network with grouped weight decay, MAP training, and
//! Laplace-evidence model selection over the hidden width.

mod evidence;
mod model;
mod network;
mod objective;
mod select;
mod trainer;

pub use evidence::{curvature, Curvature, EvidenceReport, DEFAULT_OMEGA, EIGEN_FLOOR, GAMMA_FLOOR};
pub use model::{fit_budgeted, hessian_logdet, log_evidence, train_map, BnnModel, BNN_FORMAT_VERSION};
pub use network::{LayerSpan, Layout, MlpArchitecture, WeightGroup, WeightGroups};
pub use objective::{data_error, gauss_newton, gradient, objective, BnnData, Loss, ObjectiveSpec};
pub use select::{select_model, CandidateScore, HiddenPolicy, Selection, SelectionConfig};
pub use trainer::{init_params, Minimized, TrainerConfig};
