//! Nested leave-one-subject-out evaluation.

pub mod audit;
pub mod baselines;
pub mod experiment;
pub mod metrics;
pub mod pipeline;
pub mod plan;
pub mod plot;
pub mod report;

pub use audit::{check_leakage, subject_index, Access, AuditLog, FoldAccess, Phase, Rows};
pub use baselines::{kmeans, knn, knn_score, KnnModel, RbfNetwork};
pub use experiment::{
    evaluate_items, load_source, repetition_label, repetition_seed, run_experiment, DataSource, Experiment,
    ExperimentConfig, Repetition,
};
pub use metrics::{
    exceeds, majority_vote, mean_absolute_probability_error, threshold_sweep, Confusion, RocCurve, RocPoint,
};
pub use pipeline::{
    hybrid_search, run_pipeline, run_pipeline_audited, EpochPrediction, EvalReport, FoldSummary, HybridPipeline, PipelineSpec,
    SubjectVote, SvmPipeline, ROC_STEPS,
};
pub use plan::{build_loso_plan, build_loso_plan_stratified, fold_seed, subject_folds, CvPlan, InnerSplit, OuterFold, DEFAULT_INNER_FOLDS};
pub use report::{ComparisonRow, ComparisonTable};
