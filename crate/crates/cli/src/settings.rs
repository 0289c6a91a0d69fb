//! Typed run settings resolved from a config file plus command-line overrides.

use std::path::PathBuf;
use std::str::FromStr;

use eegbi::bnn::{HiddenPolicy, SelectionConfig, TrainerConfig};
use eegbi::config::KeyValueDoc;
use eegbi::data_io::{SynthCohortSpec, Task};
use eegbi::eval::{DataSource, ExperimentConfig, HybridPipeline, PipelineSpec, SvmPipeline};
use eegbi::features::FeatureSet;
use eegbi::svm::{KernelSpec, SvmTrainConfig};
use eegbi::swarm::FitnessModel;
use eegbi::{Error, Result};

const KNOWN: &[(Option<&str>, &[&str])] = &[
    (
        None,
        &[
            "seed", "out", "jobs", "data", "rate", "task", "classifier", "feature_set", "epoch_length",
            "repetitions", "inner_folds", "clinical", "features", "input",
        ],
    ),
    (
        Some("synth"),
        &["subjects_per_class", "epochs_per_subject", "snr", "gain_sd", "severity_sd"],
    ),
    (
        Some("swarm"),
        &["particles", "iterations", "inertia", "cognitive", "social", "fitness", "fitness_iterations", "k"],
    ),
    (Some("svm"), &["cost", "gamma", "costs", "gammas", "kkt_tolerance", "max_passes"]),
    (
        Some("bnn"),
        &["widths", "decay", "restarts", "max_iterations", "policy", "decay_low", "decay_high", "decay_levels"],
    ),
    (Some("knn"), &["k"]),
    (Some("rbf"), &["centers", "ridge"]),
];

#[derive(Clone, Debug)]
pub struct Settings {
    pub seed: u64,
    pub out: PathBuf,
    pub jobs: Option<usize>,
    pub source: DataSource,
    pub clinical: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub experiment: ExperimentConfig,
    pub svm: SvmTrainConfig<f64>,
    pub bnn: SelectionConfig<f64>,
    pub hybrid: HybridPipeline,
}

/// Rejects keys the settings do not understand.
pub fn check_keys(doc: &KeyValueDoc) -> Result<()> {
    let allowed = |section: Option<&str>, key: &str| {
        KNOWN
            .iter()
            .any(|(s, keys)| *s == section && keys.contains(&key))
    };
    for e in &doc.global {
        if !allowed(None, &e.key) {
            return Err(Error::Parameter(format!("unknown setting '{}' (line {})", e.key, e.line)));
        }
    }
    for s in &doc.sections {
        if !KNOWN.iter().any(|(n, _)| *n == Some(s.name.as_str())) {
            return Err(Error::Parameter(format!("unknown section [{}]", s.name)));
        }
        for e in &s.entries {
            if !allowed(Some(&s.name), &e.key) {
                return Err(Error::Parameter(format!("unknown setting [{}] {}", s.name, e.key)));
            }
        }
    }
    Ok(())
}

fn get<V: FromStr>(doc: &KeyValueDoc, section: Option<&str>, key: &str, default: V) -> Result<V> {
    Ok(doc.parse_value(section, key)?.unwrap_or(default))
}

fn list<V: FromStr>(doc: &KeyValueDoc, section: Option<&str>, key: &str, default: Vec<V>) -> Result<Vec<V>> {
    let Some(raw) = doc.get(section, key) else {
        return Ok(default);
    };
    let v = raw
        .split(',')
        .map(|t| t.trim().parse::<V>())
        .collect::<std::result::Result<Vec<V>, _>>()
        .map_err(|_| Error::Parameter(format!("{key}: cannot parse list '{raw}'")))?;
    if v.is_empty() {
        return Err(Error::Parameter(format!("{key}: list is empty")));
    }
    Ok(v)
}

fn positive(name: &str, v: usize) -> Result<usize> {
    if v == 0 {
        return Err(Error::Parameter(format!("{name} must be at least 1")));
    }
    Ok(v)
}

impl Settings {
    pub fn resolve(doc: &KeyValueDoc) -> Result<Self> {
        check_keys(doc)?;
        let seed = get(doc, None, "seed", 0u64)?;
        let task = Task::parse(doc.get(None, "task").unwrap_or("A_vs_E"))?;
        let jobs = doc.parse_value::<usize>(None, "jobs")?.map(|j| positive("jobs", j)).transpose()?;

        let synth_default = SynthCohortSpec::default();
        let epoch_length = positive("epoch_length", get(doc, None, "epoch_length", synth_default.epoch_length)?)?;
        let synth = Some("synth");
        let spec = SynthCohortSpec {
            subjects_per_class: get(doc, synth, "subjects_per_class", synth_default.subjects_per_class)?,
            epochs_per_subject: get(doc, synth, "epochs_per_subject", synth_default.epochs_per_subject)?,
            snr: get(doc, synth, "snr", synth_default.snr)?,
            gain_sd: get(doc, synth, "gain_sd", synth_default.gain_sd)?,
            severity_sd: get(doc, synth, "severity_sd", synth_default.severity_sd)?,
            epoch_length,
            seed,
            ..synth_default
        };
        let source = match doc.get(None, "data") {
            Some(path) => DataSource::Directory {
                root: PathBuf::from(path),
                rate: get(doc, None, "rate", 173.61)?,
            },
            None => {
                spec.validate()?;
                DataSource::Synthetic(spec)
            }
        };

        let sw = Some("swarm");
        let fitness = match doc.get(sw, "fitness").unwrap_or("bnn") {
            "bnn" => FitnessModel::Bnn {
                hidden: 2,
                max_iterations: positive("fitness_iterations", get(doc, sw, "fitness_iterations", 100)?)?,
                default_decay: 0.1,
            },
            "knn" => FitnessModel::Knn {
                k: positive("[swarm] k", get(doc, sw, "k", 5)?)?,
            },
            other => return Err(Error::Parameter(format!("[swarm] fitness must be bnn or knn, got '{other}'"))),
        };
        let mut hybrid = HybridPipeline {
            fitness,
            ..HybridPipeline::default()
        };
        hybrid.swarm.particles = get(doc, sw, "particles", hybrid.swarm.particles)?;
        hybrid.swarm.iterations = get(doc, sw, "iterations", hybrid.swarm.iterations)?;
        hybrid.swarm.inertia = get(doc, sw, "inertia", hybrid.swarm.inertia)?;
        hybrid.swarm.cognitive = get(doc, sw, "cognitive", hybrid.swarm.cognitive)?;
        hybrid.swarm.social = get(doc, sw, "social", hybrid.swarm.social)?;
        hybrid.swarm.validate()?;

        let b = Some("bnn");
        let policy = match doc.get(b, "policy").unwrap_or("tied") {
            "one" => HiddenPolicy::OneLayer,
            "tied" => HiddenPolicy::TwoLayerTied,
            other => return Err(Error::Parameter(format!("[bnn] policy must be one or tied, got '{other}'"))),
        };
        let trainer = TrainerConfig {
            restarts: positive("[bnn] restarts", get(doc, b, "restarts", hybrid.trainer.restarts)?)?,
            max_iterations: positive("[bnn] max_iterations", get(doc, b, "max_iterations", hybrid.trainer.max_iterations)?)?,
            seed,
            ..hybrid.trainer
        };
        hybrid.widths = list(doc, b, "widths", hybrid.widths.clone())?;
        hybrid.policy = policy;
        hybrid.trainer = trainer;
        hybrid.log10_decay.low = get(doc, b, "decay_low", hybrid.log10_decay.low)?;
        hybrid.log10_decay.high = get(doc, b, "decay_high", hybrid.log10_decay.high)?;
        hybrid.log10_decay.levels = get(doc, b, "decay_levels", hybrid.log10_decay.levels)?;
        let bnn = SelectionConfig {
            candidates: hybrid.widths.clone(),
            policy,
            decay: get(doc, b, "decay", 0.1)?,
            trainer,
            ..SelectionConfig::default()
        };

        let s = Some("svm");
        let grid = SvmPipeline::default();
        let svm_pipeline = SvmPipeline {
            costs: list(doc, s, "costs", grid.costs)?,
            gammas: list(doc, s, "gammas", grid.gammas)?,
            kkt_tolerance: get(doc, s, "kkt_tolerance", grid.kkt_tolerance)?,
            max_passes: positive("[svm] max_passes", get(doc, s, "max_passes", grid.max_passes)?)?,
        };
        let svm = SvmTrainConfig {
            cost: get(doc, s, "cost", 1.0)?,
            kernel: KernelSpec::rbf(get(doc, s, "gamma", 0.25)?)?,
            kkt_tolerance: svm_pipeline.kkt_tolerance,
            max_passes: svm_pipeline.max_passes,
            standardize: true,
        };
        svm.validate()?;

        let knn_k = positive("[knn] k", get(doc, Some("knn"), "k", 5)?)?;
        let rbf_centers = positive("[rbf] centers", get(doc, Some("rbf"), "centers", 8)?)?;
        let rbf_ridge = get(doc, Some("rbf"), "ridge", 1e-3)?;
        let names: Vec<String> = list(doc, None, "classifier", vec!["all".to_string()])?;
        let mut classifiers = Vec::new();
        for n in &names {
            let picked: Vec<PipelineSpec> = if n == "all" {
                PipelineSpec::comparison_set()
            } else {
                vec![PipelineSpec::parse(n)?]
            };
            for p in picked {
                classifiers.push(match p {
                    PipelineSpec::Svm(_) => PipelineSpec::Svm(svm_pipeline.clone()),
                    PipelineSpec::Hybrid(_) => PipelineSpec::Hybrid(hybrid.clone()),
                    PipelineSpec::Knn { .. } => PipelineSpec::Knn { k: knn_k },
                    PipelineSpec::Rbf { .. } => PipelineSpec::Rbf {
                        centers: rbf_centers,
                        ridge: rbf_ridge,
                    },
                    PipelineSpec::Majority => PipelineSpec::Majority,
                });
            }
        }
        let feature_set = doc.get(None, "feature_set").map(FeatureSet::parse).transpose()?;
        let experiment = ExperimentConfig {
            task,
            epoch_length,
            feature_set,
            classifiers,
            inner_folds: get(doc, None, "inner_folds", eegbi::eval::DEFAULT_INNER_FOLDS)?,
            repetitions: get(doc, None, "repetitions", 1)?,
            seed,
            ..ExperimentConfig::default()
        };
        experiment.validate()?;

        Ok(Settings {
            seed,
            out: PathBuf::from(doc.get(None, "out").unwrap_or("out")),
            jobs,
            source,
            clinical: doc.get(None, "clinical").map(PathBuf::from),
            features: doc.get(None, "features").map(PathBuf::from),
            input: doc.get(None, "input").map(PathBuf::from),
            experiment,
            svm,
            bnn,
            hybrid,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(text: &str) -> Result<Settings> {
        Settings::resolve(&KeyValueDoc::parse(text).unwrap())
    }

    #[test]
    fn defaults_and_overrides() {
        let s = resolve("").unwrap();
        assert_eq!(s.seed, 0);
        assert_eq!(s.experiment.classifiers.len(), 4);
        assert!(matches!(s.source, DataSource::Synthetic(_)));
        let s = resolve("seed = 7\nclassifier = knn,svm\n[swarm]\niterations = 3\n[svm]\ncosts = 1, 10\n").unwrap();
        assert_eq!(s.seed, 7);
        assert_eq!(s.hybrid.swarm.iterations, 3);
        let names: Vec<&str> = s.experiment.classifiers.iter().map(|c| c.name()).collect();
        assert_eq!(names, vec!["kNN", "SVM"]);
        match &s.experiment.classifiers[1] {
            PipelineSpec::Svm(p) => assert_eq!(p.costs, vec![1.0, 10.0]),
            _ => unreachable!(),
        }
    }

    #[test]
    fn rejects_bad_settings() {
        for bad in [
            "[swarm]\niterations = 0\n",
            "[swarm]\nparticles = 0\n",
            "colour = red\n",
            "[nope]\nx = 1\n",
            "classifier = tree\n",
            "feature_set = all\n",
            "seed = -1\n",
            "[svm]\ncosts =\n",
        ] {
            assert!(matches!(resolve(bad), Err(Error::Parameter(_))), "{bad}");
        }
    }
}
