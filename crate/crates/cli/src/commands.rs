//! One adapter per subcommand: resolve inputs, call the library, write files.

use std::path::Path;

use eegbi::data_io::{export_cohort, generate_cohort, self_check, ClinicalTable, SynthCohortSpec};
use eegbi::eval::{load_source, run_experiment, DataSource};
use eegbi::features::{FeatureSet, FeatureTable};
use eegbi::eval::report::seed_header;
use eegbi::workflow;
use eegbi::{Error, Result};

use crate::output::Staged;
use crate::settings::Settings;

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn clinical(s: &Settings) -> Result<Option<ClinicalTable<f64>>> {
    s.clinical.as_deref().map(ClinicalTable::read_csv).transpose()
}

fn table_from_source(s: &Settings, set: FeatureSet) -> Result<FeatureTable<f64>> {
    let items = load_source(&s.source, &s.experiment.task, s.seed)?;
    let x = &s.experiment;
    workflow::extract_features(&items, x.feature_set.unwrap_or(set), &x.features, x.epoch_length, clinical(s)?.as_ref())
}

/// The `--features` file when given, otherwise features extracted from the dataset.
fn input_table(s: &Settings, set: FeatureSet) -> Result<FeatureTable<f64>> {
    match &s.features {
        Some(path) => workflow::parse_features_csv(&read_text(path)?, &path.display().to_string()),
        None => table_from_source(s, set),
    }
}

fn finish(staged: Staged) {
    println!("{}", staged.dir().display());
    staged.keep();
}

pub fn extract(s: &Settings) -> Result<()> {
    let set = s.experiment.feature_set.unwrap_or(FeatureSet::Union);
    let table = table_from_source(s, set)?;
    let text = workflow::features_csv(
        &table,
        s.seed,
        &[("feature_set", set.name().to_string()), ("task", s.experiment.task.name())],
    );
    let mut out = Staged::new(&s.out)?;
    out.write("features.csv", &text)?;
    finish(out);
    Ok(())
}

pub fn train_svm(s: &Settings) -> Result<()> {
    let table = input_table(s, FeatureSet::Svm4)?;
    let model = workflow::fit_svm_table(&table, &s.svm, s.experiment.inner_folds, s.seed)?;
    let mut summary = seed_header(s.seed, &[]);
    summary.push_str(&format!(
        "features = {}\nsupport_vectors = {}\nbias = {:.6}\niterations = {}\n",
        table.schema.join(","),
        model.alphas.len(),
        model.bias,
        model.iterations
    ));
    if let Some(c) = model.calibration {
        summary.push_str(&format!("x_slope = {:.6}\ny_intercept = {:.6}\n", c.x_slope, c.y_intercept));
    }
    let mut out = Staged::new(&s.out)?;
    out.write("svm_model.json", &(model.to_json() + "\n"))?;
    out.write("svm_summary.txt", &summary)?;
    finish(out);
    Ok(())
}

pub fn train_bnn(s: &Settings) -> Result<()> {
    let table = input_table(s, FeatureSet::Bnn4)?;
    let (model, scores) = workflow::fit_bnn_table(&table, &s.bnn)?;
    let mut out = Staged::new(&s.out)?;
    out.write("bnn_model.json", &(model.to_json() + "\n"))?;
    out.write("evidence.csv", &workflow::evidence_csv(&scores, s.seed))?;
    finish(out);
    Ok(())
}

pub fn select(s: &Settings) -> Result<()> {
    let table = input_table(s, FeatureSet::Union)?;
    let result = workflow::select_table(&table, &s.hybrid, s.experiment.inner_folds, s.seed)?;
    let mut out = Staged::new(&s.out)?;
    out.write("selection.txt", &workflow::selection_text(&result, &table.schema, s.seed))?;
    out.write("trace.csv", &workflow::trace_csv(&result, s.seed))?;
    finish(out);
    Ok(())
}

pub fn evaluate(s: &Settings) -> Result<()> {
    let experiment = run_experiment(&s.source, &s.experiment, clinical(s)?.as_ref())?;
    let mut out = Staged::new(&s.out)?;
    out.write("experiment.json", &workflow::experiment_json(&experiment))?;
    out.write_all(&workflow::experiment_files(&experiment))?;
    print!("{}", experiment.table.to_text());
    finish(out);
    Ok(())
}

pub fn report(s: &Settings) -> Result<()> {
    let dir = s
        .input
        .as_deref()
        .ok_or_else(|| Error::Parameter("report needs --input <dir with experiment.json>".into()))?;
    let path = dir.join("experiment.json");
    let experiment = workflow::parse_experiment_json(&read_text(&path)?, &path.display().to_string())?;
    let mut out = Staged::new(&s.out)?;
    out.write_all(&workflow::experiment_files(&experiment))?;
    print!("{}", experiment.table.to_text());
    finish(out);
    Ok(())
}

pub fn synth(s: &Settings) -> Result<()> {
    let spec: SynthCohortSpec = match &s.source {
        DataSource::Synthetic(spec) => *spec,
        DataSource::Directory { .. } => return Err(Error::Parameter("synth does not read a dataset".into())),
    };
    let cohort = generate_cohort::<f64>(&spec)?;
    let check = self_check(&cohort.items, spec.epoch_length)?;
    let mut out = Staged::new(&s.out)?;
    export_cohort(&cohort.items, out.dir(), &s.experiment.task)?;
    let mut text = seed_header(s.seed, &[("task", s.experiment.task.name())]);
    text.push_str(&format!(
        "subjects_per_class = {}\nepochs_per_subject = {}\nrelative_delta_separation = {:.4}\nburst_energy_separation = {:.4}\n",
        spec.subjects_per_class, spec.epochs_per_subject, check.relative_delta, check.burst_energy
    ));
    out.write("synth.txt", &text)?;
    finish(out);
    Ok(())
}
