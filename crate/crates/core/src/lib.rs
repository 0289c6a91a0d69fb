pub mod bnn;
pub mod config;
pub mod data_io;
pub mod error;
pub mod eval;
pub mod features;
pub mod linalg;
pub mod scalar;
pub mod signal;
pub mod standardize;
pub mod svm;
pub mod swarm;
pub mod workflow;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type TimeSeries64 = signal::TimeSeries<f64>;
pub type TimeSeries32 = signal::TimeSeries<f32>;
pub type FeatureTable64 = features::FeatureTable<f64>;
pub type FeatureTable32 = features::FeatureTable<f32>;
pub type SvmModel64 = svm::SvmModel<f64>;
pub type SvmModel32 = svm::SvmModel<f32>;
pub type BnnModel64 = bnn::BnnModel<f64>;
pub type BnnModel32 = bnn::BnnModel<f32>;
pub type Standardizer64 = standardize::Standardizer<f64>;
pub type Standardizer32 = standardize::Standardizer<f32>;
