//! End-to-end evaluation: dataset, feature tables, subject-wise plans and
//! every requested classifier, repeated over derived seeds.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::pipeline::{run_pipeline, EvalReport, PipelineSpec};
use super::plan::{build_loso_plan_stratified, DEFAULT_INNER_FOLDS};
use super::report::ComparisonTable;
use crate::data_io::{
    apply_task, attach_clinical, extract_table, generate_cohort, load_directory, ClinicalTable, DatasetManifest,
    LabeledSeries, SynthCohortSpec, Task,
};
use crate::error::{Error, Result};
use crate::features::{FeatureConfig, FeatureSet, FeatureTable, UNION_SCHEMA};
use crate::signal::SubjectId;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum DataSource {
    /// Regenerated for every repetition with that repetition's seed.
    Synthetic(SynthCohortSpec),
    /// A `<root>/<division>/*.txt` tree with a manifest (or scanned when absent).
    Directory { root: PathBuf, rate: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub task: Task,
    pub epoch_length: usize,
    pub features: FeatureConfig<f64>,
    /// Overrides every classifier's default feature set.
    pub feature_set: Option<FeatureSet>,
    pub classifiers: Vec<PipelineSpec>,
    pub inner_folds: usize,
    pub repetitions: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            task: Task::default(),
            epoch_length: crate::signal::DEFAULT_EPOCH_LENGTH,
            features: FeatureConfig::default(),
            feature_set: None,
            classifiers: PipelineSpec::comparison_set(),
            inner_folds: DEFAULT_INNER_FOLDS,
            repetitions: 1,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.classifiers.is_empty() {
            return Err(Error::param("at least one classifier is required"));
        }
        if self.repetitions == 0 {
            return Err(Error::param("repetitions must be at least 1"));
        }
        if self.inner_folds < 2 {
            return Err(Error::param("inner folds must be at least 2"));
        }
        if self.epoch_length == 0 {
            return Err(Error::param("epoch length must be positive"));
        }
        Ok(())
    }

    pub fn feature_set_of(&self, spec: &PipelineSpec) -> FeatureSet {
        self.feature_set.unwrap_or_else(|| spec.feature_set())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Repetition {
    pub seed: u64,
    /// One report per classifier, in configuration order.
    pub reports: Vec<EvalReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub seed: u64,
    pub task: String,
    pub repetitions: Vec<Repetition>,
    pub table: ComparisonTable,
}

/// Label of repetition `r` in the comparison table's first column: 10, 20, 30, …
pub fn repetition_label(r: usize) -> usize {
    10 * (r + 1)
}

/// Seed of repetition `r`: the base seed offset by the row label.
pub fn repetition_seed(seed: u64, r: usize) -> u64 {
    seed.wrapping_add(repetition_label(r) as u64)
}

/// Loads or generates the labelled series of one repetition.
pub fn load_source(source: &DataSource, task: &Task, seed: u64) -> Result<Vec<LabeledSeries<f64>>> {
    match source {
        DataSource::Synthetic(spec) => {
            let spec = SynthCohortSpec { seed, ..*spec };
            Ok(generate_cohort::<f64>(&spec)?.items)
        }
        DataSource::Directory { root, rate } => {
            if !root.is_dir() {
                return Err(Error::data(format!("dataset directory {} does not exist", root.display())));
            }
            let manifest = if root.join(crate::data_io::MANIFEST_FILE).exists() {
                DatasetManifest::read(root)?
            } else {
                DatasetManifest::scan(root, *rate, task.clone())?
            };
            apply_task(load_directory(root, &manifest)?, task)
        }
    }
}

/// Union columns of a feature set.
pub fn union_columns(set: FeatureSet) -> Vec<usize> {
    set.schema()
        .iter()
        .map(|n| UNION_SCHEMA.iter().position(|u| u == n).expect("union covers every set"))
        .collect()
}

/// Feature table each classifier sees: its feature set, plus the clinical
/// covariates for the SVM when they are present.
pub fn classifier_table(
    union: &FeatureTable<f64>,
    set: FeatureSet,
    spec: &PipelineSpec,
    clinical_columns: usize,
) -> Result<FeatureTable<f64>> {
    let mut cols = union_columns(set);
    if matches!(spec, PipelineSpec::Svm(_)) {
        cols.extend(UNION_SCHEMA.len()..UNION_SCHEMA.len() + clinical_columns);
    }
    union.select_columns(&cols)
}

/// Evaluates every classifier on one collection of series.
pub fn evaluate_items(
    items: &[LabeledSeries<f64>],
    cfg: &ExperimentConfig,
    clinical: Option<&ClinicalTable<f64>>,
    seed: u64,
) -> Result<Vec<EvalReport>> {
    cfg.validate()?;
    if items.is_empty() {
        return Err(Error::data("dataset has no series for the selected task"));
    }
    let mut subjects: Vec<(SubjectId, crate::signal::ClassLabel)> =
        items.iter().map(|i| (i.series.subject().clone(), i.label)).collect();
    subjects.sort();
    subjects.dedup();
    let fusion = match clinical {
        Some(t) => {
            let ids: Vec<SubjectId> = subjects.iter().map(|(s, _)| s.clone()).collect();
            Some(attach_clinical(&ids, t)?)
        }
        None => None,
    };
    let union = extract_table(items, FeatureSet::Union, &cfg.features, cfg.epoch_length, fusion.as_ref())?;
    let clinical_columns = fusion.as_ref().map_or(0, |f| f.names.len());
    let plan = build_loso_plan_stratified(&subjects, cfg.inner_folds, seed)?;
    cfg.classifiers
        .iter()
        .map(|spec| {
            let table = classifier_table(&union, cfg.feature_set_of(spec), spec, clinical_columns)?;
            run_pipeline(&table, spec, &plan, seed)
        })
        .collect()
}

/// Runs every repetition and collects the comparison table.
pub fn run_experiment(
    source: &DataSource,
    cfg: &ExperimentConfig,
    clinical: Option<&ClinicalTable<f64>>,
) -> Result<Experiment> {
    cfg.validate()?;
    let names: Vec<String> = cfg.classifiers.iter().map(|c| c.name().to_string()).collect();
    let mut table = ComparisonTable::new(format!("{} Classification Accuracy", cfg.task.name()), names);
    let mut repetitions = Vec::with_capacity(cfg.repetitions);
    for r in 0..cfg.repetitions {
        let seed = repetition_seed(cfg.seed, r);
        let items = load_source(source, &cfg.task, seed)?;
        let reports = evaluate_items(&items, cfg, clinical, seed)?;
        table.push_reports(repetition_label(r), &reports);
        repetitions.push(Repetition { seed, reports });
    }
    Ok(Experiment {
        seed: cfg.seed,
        task: cfg.task.name(),
        repetitions,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_maps() {
        assert_eq!(union_columns(FeatureSet::Union), (0..7).collect::<Vec<_>>());
        assert_eq!(union_columns(FeatureSet::Svm4), vec![0, 1, 2, 3]);
        assert_eq!(union_columns(FeatureSet::Bnn4), vec![1, 4, 5, 6]);
        assert_eq!(repetition_label(0), 10);
        assert_eq!(repetition_seed(7, 2), 37);
        assert_eq!(repetition_seed(0, 0), 10);
    }

    #[test]
    fn small_synthetic_run() {
        let spec = SynthCohortSpec {
            subjects_per_class: 3,
            epochs_per_subject: 4,
            ..SynthCohortSpec::default()
        };
        let cfg = ExperimentConfig {
            classifiers: vec![PipelineSpec::parse("knn").unwrap(), PipelineSpec::Majority],
            inner_folds: 2,
            repetitions: 2,
            seed: 3,
            ..ExperimentConfig::default()
        };
        let e = run_experiment(&DataSource::Synthetic(spec), &cfg, None).unwrap();
        assert_eq!(e.repetitions.len(), 2);
        assert_eq!(e.table.rows.len(), 2);
        assert_eq!(e.table.classifiers, vec!["kNN", "Majority"]);
        assert_eq!(e.repetitions[1].seed, 23);
        assert_eq!(e.repetitions[0].reports[0].predictions.len(), 24);
        assert_eq!(e, run_experiment(&DataSource::Synthetic(spec), &cfg, None).unwrap());
        let bad = ExperimentConfig { classifiers: vec![], ..cfg };
        assert!(matches!(run_experiment(&DataSource::Synthetic(spec), &bad, None), Err(Error::Parameter(_))));
    }
}
