mod commands;
mod output;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eegbi::config::KeyValueDoc;
use eegbi::Error;

use settings::Settings;

#[derive(Parser, Debug)]
#[command(name = "eegbi", version, about = "EEG brain-injury classification pipeline")]
struct Cli {
    /// `key = value` settings file with `[section]` headers.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Overrides any setting, e.g. `--set swarm.iterations=5`.
    #[arg(long = "set", global = true, value_name = "[SECTION.]KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct DataArgs {
    /// Dataset root with one directory per division; synthetic when absent.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Task such as `A_vs_E` or `CD_vs_E`.
    #[arg(long)]
    task: Option<String>,
    /// Covariate CSV with a `subject_id` column.
    #[arg(long)]
    clinical: Option<PathBuf>,
    /// Synthetic subjects per class.
    #[arg(long)]
    subjects: Option<usize>,
    /// Synthetic epochs per subject.
    #[arg(long)]
    epochs: Option<usize>,
    /// `svm4`, `bnn4` or `union`.
    #[arg(long)]
    feature_set: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Writes one feature row per epoch.
    Extract {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Trains and calibrates an SVM on a feature file or dataset.
    TrainSvm {
        #[command(flatten)]
        data: DataArgs,
        /// Feature CSV written by `extract`.
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        cost: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Trains networks of several widths and keeps the one with the largest evidence.
    TrainBnn {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        features: Option<PathBuf>,
        /// Comma-separated hidden widths.
        #[arg(long)]
        widths: Option<String>,
        #[arg(long)]
        decay: Option<f64>,
    },
    /// Swarm search for a feature mask and decay.
    Select {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        particles: Option<usize>,
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Subject-wise evaluation of one or more classifiers.
    Evaluate {
        #[command(flatten)]
        data: DataArgs,
        /// `svm`, `bnn`, `knn`, `rbf`, `majority` or `all`, comma-separated.
        #[arg(long)]
        classifier: Option<String>,
        #[arg(long)]
        repetitions: Option<usize>,
    },
    /// Writes a synthetic cohort in the dataset directory layout.
    Synth {
        #[arg(long)]
        subjects: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Regenerates tables and plots from a saved `experiment.json`.
    Report {
        /// Directory containing `experiment.json`.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

fn build_doc(cli: &Cli) -> eegbi::Result<KeyValueDoc> {
    let mut doc = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.display().to_string(),
                source: e,
            })?;
            KeyValueDoc::parse(&text)?
        }
        None => KeyValueDoc::default(),
    };
    let mut set = |section: Option<&str>, key: &str, value: Option<String>| {
        if let Some(v) = value {
            doc.set(section, key, &v);
        }
    };
    let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
    let num = |v: Option<usize>| v.map(|v| v.to_string());
    let real = |v: Option<f64>| v.map(|v| v.to_string());
    set(None, "seed", cli.seed.map(|s| s.to_string()));
    set(None, "out", path(&cli.out));
    set(None, "jobs", num(cli.jobs));
    let data_args = |d: &DataArgs, set: &mut dyn FnMut(Option<&str>, &str, Option<String>)| {
        set(None, "data", path(&d.data));
        set(None, "task", d.task.clone());
        set(None, "clinical", path(&d.clinical));
        set(Some("synth"), "subjects_per_class", num(d.subjects));
        set(Some("synth"), "epochs_per_subject", num(d.epochs));
        set(None, "feature_set", d.feature_set.clone());
    };
    match &cli.command {
        Command::Extract { data } => data_args(data, &mut set),
        Command::TrainSvm { data, features, cost, gamma } => {
            data_args(data, &mut set);
            set(None, "features", path(features));
            set(Some("svm"), "cost", real(*cost));
            set(Some("svm"), "gamma", real(*gamma));
        }
        Command::TrainBnn { data, features, widths, decay } => {
            data_args(data, &mut set);
            set(None, "features", path(features));
            set(Some("bnn"), "widths", widths.clone());
            set(Some("bnn"), "decay", real(*decay));
        }
        Command::Select { data, features, particles, iterations } => {
            data_args(data, &mut set);
            set(None, "features", path(features));
            set(Some("swarm"), "particles", num(*particles));
            set(Some("swarm"), "iterations", num(*iterations));
        }
        Command::Evaluate { data, classifier, repetitions } => {
            data_args(data, &mut set);
            set(None, "classifier", classifier.clone());
            set(None, "repetitions", num(*repetitions));
        }
        Command::Synth { subjects, epochs } => {
            set(Some("synth"), "subjects_per_class", num(*subjects));
            set(Some("synth"), "epochs_per_subject", num(*epochs));
        }
        Command::Report { input } => set(None, "input", path(input)),
    }
    for o in &cli.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Error::Parameter(format!("--set expects KEY=VALUE, got '{o}'")))?;
        match k.trim().split_once('.') {
            Some((section, key)) => doc.set(Some(section), key, v.trim()),
            None => doc.set(None, k.trim(), v.trim()),
        }
    }
    Ok(doc)
}

fn run(cli: &Cli) -> eegbi::Result<()> {
    let settings = Settings::resolve(&build_doc(cli)?)?;
    if let Some(j) = settings.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| Error::State(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Extract { .. } => commands::extract(&settings),
        Command::TrainSvm { .. } => commands::train_svm(&settings),
        Command::TrainBnn { .. } => commands::train_bnn(&settings),
        Command::Select { .. } => commands::select(&settings),
        Command::Evaluate { .. } => commands::evaluate(&settings),
        Command::Synth { .. } => commands::synth(&settings),
        Command::Report { .. } => commands::report(&settings),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("eegbi: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
