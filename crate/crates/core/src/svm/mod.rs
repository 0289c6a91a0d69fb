//! Soft-margin kernel SVM with sigmoid probability calibration.

mod calibration;
mod kernel;
mod model;
pub mod smo;

pub use calibration::{cross_entropy, fit_sigmoid, sigmoid_nll, smoothed_targets, SigmoidParams};
pub use kernel::KernelSpec;
pub use model::{train, SvmModel, SvmTrainConfig, SVM_FORMAT_VERSION};

pub use crate::standardize::Standardizer;
