//! Per-fold training and prediction for every classifier, and aggregation
//! into an [`EvalReport`].

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::audit::{check_leakage, subject_index, AuditLog, FoldAccess, Phase, Rows};
use super::baselines::{KnnModel, RbfNetwork};
use super::metrics::{majority_vote, mean_absolute_probability_error, threshold_sweep, Confusion, RocCurve};
use super::plan::{fold_seed, CvPlan, InnerSplit, OuterFold};
use crate::bnn::{select_model, BnnData, HiddenPolicy, ObjectiveSpec, SelectionConfig, TrainerConfig};
use crate::error::{Error, Result};
use crate::features::{FeatureSet, FeatureTable};
use crate::scalar::Scalar;
use crate::signal::{ClassLabel, SubjectId};
use crate::standardize::Standardizer;
use crate::svm::{self, fit_sigmoid, KernelSpec, SvmTrainConfig};
use crate::swarm::{self, FitnessModel, FitnessProblem, HyperRange, IndexFold, SearchSpace, SwarmConfig, SwarmResult};

pub const ROC_STEPS: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmPipeline {
    pub costs: Vec<f64>,
    pub gammas: Vec<f64>,
    pub kkt_tolerance: f64,
    pub max_passes: usize,
}

impl Default for SvmPipeline {
    fn default() -> Self {
        SvmPipeline {
            costs: vec![0.1, 1.0, 10.0, 100.0],
            gammas: vec![0.01, 0.1, 1.0, 10.0],
            kkt_tolerance: 1e-3,
            max_passes: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HybridPipeline {
    pub swarm: SwarmConfig,
    pub fitness: FitnessModel,
    /// Range of `log10` decay explored by the swarm.
    pub log10_decay: HyperRange,
    pub widths: Vec<usize>,
    pub policy: HiddenPolicy,
    pub trainer: TrainerConfig,
}

impl Default for HybridPipeline {
    fn default() -> Self {
        HybridPipeline {
            swarm: SwarmConfig::default(),
            fitness: FitnessModel::default(),
            log10_decay: HyperRange {
                name: "log10_decay".into(),
                low: -3.0,
                high: 1.0,
                levels: 9,
            },
            widths: vec![1, 2, 4],
            policy: HiddenPolicy::TwoLayerTied,
            trainer: TrainerConfig {
                restarts: 2,
                max_iterations: 2000,
                ..TrainerConfig::default()
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PipelineSpec {
    Svm(SvmPipeline),
    /// Swarm feature/decay selection followed by evidence-selected network.
    Hybrid(HybridPipeline),
    Knn { k: usize },
    Rbf { centers: usize, ridge: f64 },
    /// Predicts the training majority class.
    Majority,
}

impl PipelineSpec {
    pub fn name(&self) -> &'static str {
        match self {
            PipelineSpec::Svm(_) => "SVM",
            PipelineSpec::Hybrid(_) => "Hybrid",
            PipelineSpec::Knn { .. } => "kNN",
            PipelineSpec::Rbf { .. } => "RBF",
            PipelineSpec::Majority => "Majority",
        }
    }

    /// Defaults by name: `svm`, `bnn` (the hybrid), `knn`, `rbf`, `majority`.
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "svm" => Ok(PipelineSpec::Svm(SvmPipeline::default())),
            "bnn" | "hybrid" => Ok(PipelineSpec::Hybrid(HybridPipeline::default())),
            "knn" => Ok(PipelineSpec::Knn { k: 5 }),
            "rbf" => Ok(PipelineSpec::Rbf { centers: 8, ridge: 1e-3 }),
            "majority" => Ok(PipelineSpec::Majority),
            _ => Err(Error::param(format!("unknown classifier '{s}' (svm|bnn|knn|rbf|all)"))),
        }
    }

    /// Feature set each classifier is evaluated on: the hybrid searches the
    /// union, single-stage classifiers share the SVM features.
    pub fn feature_set(&self) -> FeatureSet {
        match self {
            PipelineSpec::Hybrid(_) => FeatureSet::Union,
            _ => FeatureSet::Svm4,
        }
    }

    /// The four compared classifiers, in table order.
    pub fn comparison_set() -> Vec<PipelineSpec> {
        ["knn", "svm", "rbf", "bnn"].iter().map(|s| Self::parse(s).expect("known")).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochPrediction {
    pub fold: usize,
    pub subject: SubjectId,
    pub label: ClassLabel,
    pub probability: f64,
    pub predicted: ClassLabel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectVote {
    pub subject: SubjectId,
    pub label: ClassLabel,
    pub predicted: ClassLabel,
    pub epochs: usize,
}

/// What a fold chose, as `key=value` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldSummary {
    pub fold: usize,
    pub test: SubjectId,
    pub choices: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub classifier: String,
    pub seed: u64,
    pub predictions: Vec<EpochPrediction>,
    pub votes: Vec<SubjectVote>,
    /// Epoch-level counts.
    pub confusion: Confusion,
    pub subject_confusion: Confusion,
    pub accuracy: f64,
    pub sensitivity: f64,
    pub error_rate: f64,
    pub subject_accuracy: f64,
    pub mean_absolute_error: f64,
    pub roc: RocCurve,
    pub folds: Vec<FoldSummary>,
}

struct FoldOutcome {
    predictions: Vec<EpochPrediction>,
    summary: FoldSummary,
}

/// Runs the pipeline over every outer fold and checks the access log for
/// leakage before reporting.
pub fn run_pipeline<T: Scalar>(table: &FeatureTable<T>, spec: &PipelineSpec, plan: &CvPlan, seed: u64) -> Result<EvalReport> {
    let log = AuditLog::new();
    run_pipeline_audited(table, spec, plan, seed, &log)
}

/// As [`run_pipeline`], recording every data access in `log`.
pub fn run_pipeline_audited<T: Scalar>(
    table: &FeatureTable<T>,
    spec: &PipelineSpec,
    plan: &CvPlan,
    seed: u64,
    log: &AuditLog,
) -> Result<EvalReport> {
    plan.validate()?;
    let index = subject_index(table);
    let outcomes: Vec<FoldOutcome> = plan
        .outer
        .par_iter()
        .enumerate()
        .map(|(f, fold)| {
            let access = FoldAccess::new(table, &index, f, log);
            run_fold(&access, fold, spec, fold_seed(seed, f))
        })
        .collect::<Result<_>>()?;
    check_leakage(plan, log)?;
    aggregate(spec.name(), seed, outcomes)
}

fn aggregate(name: &str, seed: u64, outcomes: Vec<FoldOutcome>) -> Result<EvalReport> {
    let mut predictions = Vec::new();
    let mut folds = Vec::new();
    let mut votes = Vec::new();
    for o in outcomes {
        let classes: Vec<ClassLabel> = o.predictions.iter().map(|p| p.predicted).collect();
        if let Some(first) = o.predictions.first() {
            votes.push(SubjectVote {
                subject: first.subject.clone(),
                label: first.label,
                predicted: majority_vote(&classes)?,
                epochs: classes.len(),
            });
        }
        predictions.extend(o.predictions);
        folds.push(o.summary);
    }
    let predicted: Vec<ClassLabel> = predictions.iter().map(|p| p.predicted).collect();
    let truth: Vec<ClassLabel> = predictions.iter().map(|p| p.label).collect();
    let probs: Vec<f64> = predictions.iter().map(|p| p.probability).collect();
    let confusion = Confusion::from_predictions(&predicted, &truth)?;
    let subject_confusion = Confusion::from_predictions(
        &votes.iter().map(|v| v.predicted).collect::<Vec<_>>(),
        &votes.iter().map(|v| v.label).collect::<Vec<_>>(),
    )?;
    Ok(EvalReport {
        classifier: name.to_string(),
        seed,
        accuracy: confusion.accuracy(),
        sensitivity: confusion.sensitivity(),
        error_rate: confusion.error_rate(),
        subject_accuracy: subject_confusion.accuracy(),
        mean_absolute_error: mean_absolute_probability_error(&probs, &truth)?,
        roc: threshold_sweep(&probs, &truth, ROC_STEPS)?,
        confusion,
        subject_confusion,
        predictions,
        votes,
        folds,
    })
}

fn run_fold<T: Scalar>(access: &FoldAccess<'_, T>, fold: &OuterFold, spec: &PipelineSpec, seed: u64) -> Result<FoldOutcome> {
    let (scorer, choices) = match spec {
        PipelineSpec::Svm(p) => svm_fold(access, fold, p)?,
        PipelineSpec::Hybrid(p) => hybrid_fold(access, fold, p, seed)?,
        PipelineSpec::Knn { k } => {
            access.read(Phase::Standardize, &fold.train)?;
            let train = access.read(Phase::Train, &fold.train)?;
            let k = (*k).min(train.values.len());
            let m = KnnModel::fit(&train.values, &train.labels, k)?;
            let scorer: Scorer<T> = Box::new(move |x| {
                let s = m.score(x)?.as_f64();
                Ok((s, if s >= 0.5 { ClassLabel::Positive } else { ClassLabel::Negative }))
            });
            (scorer, vec![("k".to_string(), k.to_string())])
        }
        PipelineSpec::Rbf { centers, ridge } => {
            access.read(Phase::Standardize, &fold.train)?;
            let train = access.read(Phase::Train, &fold.train)?;
            let c = (*centers).min(train.values.len());
            let net = RbfNetwork::fit(&train.values, &train.labels, c, T::lit(*ridge), seed)?;
            let scorer: Scorer<T> = Box::new(move |x| {
                let s = net.score(x)?;
                Ok((((s.as_f64() + 1.0) / 2.0).clamp(0.0, 1.0), ClassLabel::from_score(s)))
            });
            (scorer, vec![("centers".to_string(), c.to_string())])
        }
        PipelineSpec::Majority => {
            let train = access.read(Phase::Train, &fold.train)?;
            let class = majority_vote(&train.labels)?;
            let share = train.labels.iter().filter(|l| l.is_positive()).count() as f64 / train.labels.len() as f64;
            let scorer: Scorer<T> = Box::new(move |_| Ok((share, class)));
            (scorer, vec![("class".to_string(), class.value().to_string())])
        }
    };
    let test = access.read(Phase::Predict, std::slice::from_ref(&fold.test))?;
    let predictions = test
        .values
        .iter()
        .zip(&test.labels)
        .map(|(x, &label)| {
            let (probability, predicted) = scorer(x)?;
            Ok(EpochPrediction {
                fold: access.fold(),
                subject: fold.test.clone(),
                label,
                probability,
                predicted,
            })
        })
        .collect::<Result<_>>()?;
    Ok(FoldOutcome {
        predictions,
        summary: FoldSummary {
            fold: access.fold(),
            test: fold.test.clone(),
            choices,
        },
    })
}

type Scorer<'a, T> = Box<dyn Fn(&[T]) -> Result<(f64, ClassLabel)> + 'a>;

fn svm_config<T: Scalar>(p: &SvmPipeline, cost: f64, gamma: f64) -> Result<SvmTrainConfig<T>> {
    Ok(SvmTrainConfig {
        cost: T::lit(cost),
        kernel: KernelSpec::rbf(T::lit(gamma))?,
        kkt_tolerance: T::lit(p.kkt_tolerance),
        max_passes: p.max_passes,
        standardize: true,
    })
}

/// Out-of-fold decision values over the inner splits, or `None` when some
/// split fails to converge. Splits whose training part has one class are skipped.
fn inner_decisions<T: Scalar>(
    access: &FoldAccess<'_, T>,
    fold: &OuterFold,
    phase: Phase,
    cfg: &SvmTrainConfig<T>,
) -> Result<Option<(Vec<T>, Vec<ClassLabel>)>> {
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for split in &fold.inner {
        let tr = access.read(phase, &split.train)?;
        if tr.labels.iter().all(|l| *l == tr.labels[0]) {
            continue;
        }
        let va = access.read(phase, &split.validation)?;
        let model = match svm::train(&tr.values, &tr.labels, cfg) {
            Ok(m) => m,
            Err(Error::Convergence { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        for x in &va.values {
            values.push(model.decision_value(x)?);
        }
        labels.extend(va.labels);
    }
    Ok(Some((values, labels)))
}

fn svm_fold<'a, T: Scalar>(
    access: &FoldAccess<'_, T>,
    fold: &OuterFold,
    p: &SvmPipeline,
) -> Result<(Scorer<'a, T>, Vec<(String, String)>)> {
    let mut best: Option<(f64, f64, f64)> = None;
    let mut converged_any = fold.inner.is_empty();
    if !fold.inner.is_empty() {
        for &c in &p.costs {
            for &g in &p.gammas {
                let cfg = svm_config::<T>(p, c, g)?;
                let Some((values, labels)) = inner_decisions(access, fold, Phase::Select, &cfg)? else {
                    continue;
                };
                converged_any = true;
                if values.is_empty() {
                    continue;
                }
                let correct = values
                    .iter()
                    .zip(&labels)
                    .filter(|(v, l)| ClassLabel::from_score(**v) == **l)
                    .count();
                let acc = correct as f64 / labels.len().max(1) as f64;
                if best.is_none_or(|b| acc > b.0) {
                    best = Some((acc, c, g));
                }
            }
        }
    }
    let (cost, gamma) = match best {
        Some((_, c, g)) => (c, g),
        None if converged_any => (1.0, 1.0 / access.dim().max(1) as f64),
        None => {
            return Err(Error::Convergence {
                message: "no SVM grid point converged on every inner split".into(),
                iterations: p.max_passes,
                residual: p.kkt_tolerance,
            })
        }
    };
    let cfg = svm_config::<T>(p, cost, gamma)?;
    access.read(Phase::Standardize, &fold.train)?;
    let train = access.read(Phase::Train, &fold.train)?;
    let mut model = svm::train(&train.values, &train.labels, &cfg)?;
    let held_out = if fold.inner.is_empty() {
        None
    } else {
        let (v, l) = inner_decisions(access, fold, Phase::Calibrate, &cfg)?.ok_or_else(|| Error::Convergence {
            message: "selected SVM failed to converge during calibration".into(),
            iterations: p.max_passes,
            residual: p.kkt_tolerance,
        })?;
        let both = l.iter().any(|c| c.is_positive()) && l.iter().any(|c| !c.is_positive());
        both.then_some((v, l))
    };
    let (values, labels) = match held_out {
        Some(pair) => pair,
        None => {
            let cal = access.read(Phase::Calibrate, &fold.train)?;
            let v = cal.values.iter().map(|x| model.decision_value(x)).collect::<Result<Vec<T>>>()?;
            (v, cal.labels)
        }
    };
    model = model.with_calibration(fit_sigmoid(&values, &labels)?);
    let choices = vec![("cost".to_string(), format!("{cost}")), ("gamma".to_string(), format!("{gamma}"))];
    let scorer: Scorer<T> = Box::new(move |x| {
        Ok((model.predict_probability(x)?.as_f64(), model.predict_class(x)?))
    });
    Ok((scorer, choices))
}

fn pick_columns<T: Scalar>(rows: &[Vec<T>], cols: &[usize]) -> Vec<Vec<T>> {
    rows.iter().map(|r| cols.iter().map(|&c| r[c]).collect()).collect()
}

/// Swarm search over feature masks and `log10` decay, scored on
/// subject-grouped splits of `pool`.
pub fn hybrid_search<T: Scalar>(pool: &Rows<T>, splits: &[InnerSplit], p: &HybridPipeline, seed: u64) -> Result<SwarmResult> {
    let dim = pool.values.first().map_or(0, Vec::len);
    let mut by_subject: HashMap<&SubjectId, Vec<usize>> = HashMap::new();
    for (i, s) in pool.subjects.iter().enumerate() {
        by_subject.entry(s).or_default().push(i);
    }
    let gather = |ids: &[SubjectId]| -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for s in ids {
            out.extend(
                by_subject
                    .get(s)
                    .ok_or_else(|| Error::param(format!("split names unknown subject {s}")))?
                    .iter()
                    .copied(),
            );
        }
        Ok(out)
    };
    let folds: Vec<IndexFold> = splits
        .iter()
        .map(|s| {
            Ok(IndexFold {
                train: gather(&s.train)?,
                validation: gather(&s.validation)?,
            })
        })
        .collect::<Result<_>>()?;
    let problem = FitnessProblem {
        rows: &pool.values,
        labels: &pool.labels,
        folds: &folds,
    };
    let space = SearchSpace {
        features: dim,
        hyper: vec![p.log10_decay.clone()],
    };
    let cfg = SwarmConfig { seed, ..p.swarm };
    swarm::run(&space, &cfg, |c| swarm::fitness::<T>(c, &problem, p.fitness, seed))
}

fn hybrid_fold<'a, T: Scalar>(
    access: &FoldAccess<'_, T>,
    fold: &OuterFold,
    p: &HybridPipeline,
    seed: u64,
) -> Result<(Scorer<'a, T>, Vec<(String, String)>)> {
    let dim = access.dim();
    let (cols, decay, evaluations) = if fold.inner.is_empty() {
        ((0..dim).collect::<Vec<_>>(), 10f64.powf((p.log10_decay.low + p.log10_decay.high) / 2.0), 0)
    } else {
        let pool: Rows<T> = access.read(Phase::Select, &fold.train)?;
        let found = hybrid_search(&pool, &fold.inner, p, seed)?;
        (found.best.active(), 10f64.powf(found.best.hyper[0]), found.evaluations)
    };

    let raw = access.read(Phase::Standardize, &fold.train)?;
    let st = Standardizer::fit(&pick_columns(&raw.values, &cols))?;
    let train = access.read(Phase::Train, &fold.train)?;
    let inputs = st.transform_all(&pick_columns(&train.values, &cols))?;
    let data = BnnData::new(inputs, train.labels.iter().map(|l| l.signed()).collect())?;
    let sel = select_model(
        &data,
        &SelectionConfig {
            candidates: p.widths.clone(),
            policy: p.policy,
            decay: T::lit(decay),
            objective: ObjectiveSpec::default(),
            trainer: TrainerConfig { seed, ..p.trainer },
        },
    )?;
    let mut model = sel.best;
    model.standardizer = Some(st);
    let names: Vec<&str> = cols.iter().map(|&c| access.schema()[c].as_str()).collect();
    let choices = vec![
        ("features".to_string(), names.join("+")),
        ("decay".to_string(), format!("{decay}")),
        ("width".to_string(), model.architecture.hidden_units().to_string()),
        ("evaluations".to_string(), evaluations.to_string()),
    ];
    let scorer: Scorer<T> = Box::new(move |x| {
        let picked: Vec<T> = cols.iter().map(|&c| x[c]).collect();
        let prob = model.predict(&picked)?;
        Ok((prob.as_f64(), if prob >= T::lit(0.5) { ClassLabel::Positive } else { ClassLabel::Negative }))
    });
    Ok((scorer, choices))
}
