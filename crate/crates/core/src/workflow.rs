//! Library side of every command-line operation. Each function returns the
//! exact bytes a command writes, so commands stay thin file adapters.

use std::fmt::Write;

use crate::bnn::{select_model, BnnData, BnnModel, CandidateScore, SelectionConfig};
use crate::error::{Error, Result};
use crate::eval::plot::{accuracy_bars, roc_curves};
use crate::eval::report::{folds_csv, predictions_csv, roc_csv, seed_header, votes_csv};
use crate::eval::{hybrid_search, subject_folds, Experiment, HybridPipeline, Rows};
use crate::data_io::{attach_clinical, extract_table, ClinicalTable, LabeledSeries};
use crate::features::{FeatureConfig, FeatureSet, FeatureTable};
use crate::signal::{ClassLabel, SubjectId};
use crate::standardize::Standardizer;
use crate::svm::{self, fit_sigmoid, SvmModel, SvmTrainConfig};
use crate::swarm::SwarmResult;

/// Feature table of a collection, with clinical covariates appended when a
/// covariate table is given.
pub fn extract_features(
    items: &[LabeledSeries<f64>],
    set: FeatureSet,
    cfg: &FeatureConfig<f64>,
    epoch_length: usize,
    clinical: Option<&ClinicalTable<f64>>,
) -> Result<FeatureTable<f64>> {
    if items.is_empty() {
        return Err(Error::data("dataset has no series for the selected task"));
    }
    let fusion = match clinical {
        Some(t) => {
            let mut ids: Vec<SubjectId> = items.iter().map(|i| i.series.subject().clone()).collect();
            ids.sort();
            ids.dedup();
            Some(attach_clinical(&ids, t)?)
        }
        None => None,
    };
    extract_table(items, set, cfg, epoch_length, fusion.as_ref())
}

/// `subject_id,label,<schema…>` rows after `# key = value` header lines.
pub fn features_csv(table: &FeatureTable<f64>, seed: u64, extra: &[(&str, String)]) -> String {
    let mut s = seed_header(seed, extra);
    let _ = writeln!(s, "subject_id,label,{}", table.schema.join(","));
    for r in &table.rows {
        let _ = write!(s, "{},{}", r.subject, r.label.value());
        for v in &r.values {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}

/// Inverse of [`features_csv`]; `#` lines are skipped.
pub fn parse_features_csv(text: &str, origin: &str) -> Result<FeatureTable<f64>> {
    let body: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .flat_map(|l| [l, "\n"])
        .collect();
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::data(format!("{origin}: {e}")))?
        .clone();
    if header.len() < 3 || &header[0] != "subject_id" || &header[1] != "label" {
        return Err(Error::data(format!(
            "{origin}: header must be subject_id,label,<features…>"
        )));
    }
    let mut table = FeatureTable::new(header.iter().skip(2).map(str::to_string).collect());
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::data(format!("{origin}: {e}")))?;
        let at = |what: &str| Error::data(format!("{origin}: bad {what} on data row {}", i + 1));
        let label = rec[1].trim().parse::<i32>().map_err(|_| at("label"))?;
        let label = ClassLabel::from_value(label).map_err(|_| at("label"))?;
        let values = rec
            .iter()
            .skip(2)
            .map(|v| v.trim().parse::<f64>().map_err(|_| at("value")))
            .collect::<Result<Vec<_>>>()?;
        table.push(SubjectId(rec[0].to_string()), label, values)?;
    }
    if table.is_empty() {
        return Err(Error::data(format!("{origin}: no feature rows")));
    }
    Ok(table)
}

fn subject_labels(table: &FeatureTable<f64>) -> Vec<(SubjectId, ClassLabel)> {
    let mut v: Vec<(SubjectId, ClassLabel)> = table.rows.iter().map(|r| (r.subject.clone(), r.label)).collect();
    v.sort();
    v.dedup();
    v
}

fn rows_of(table: &FeatureTable<f64>) -> Rows<f64> {
    Rows {
        values: table.rows.iter().map(|r| r.values.clone()).collect(),
        labels: table.rows.iter().map(|r| r.label).collect(),
        subjects: table.rows.iter().map(|r| r.subject.clone()).collect(),
    }
}

/// Trains on every row. The sigmoid is fitted to out-of-fold decision values
/// over `folds` subject groups, or to the training decisions when there are
/// too few subjects.
pub fn fit_svm_table(table: &FeatureTable<f64>, cfg: &SvmTrainConfig<f64>, folds: usize, seed: u64) -> Result<SvmModel<f64>> {
    let rows = rows_of(table);
    let model = svm::train(&rows.values, &rows.labels, cfg)?;
    let subjects = subject_labels(table);
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let splits = if subjects.len() >= 4 && folds >= 2 {
        subject_folds(&subjects, folds, seed)?
    } else {
        Vec::new()
    };
    for split in &splits {
        let pick = |ids: &[SubjectId]| -> (Vec<Vec<f64>>, Vec<ClassLabel>) {
            table
                .rows
                .iter()
                .filter(|r| ids.contains(&r.subject))
                .map(|r| (r.values.clone(), r.label))
                .unzip()
        };
        let (tx, ty) = pick(&split.train);
        let (vx, vy) = pick(&split.validation);
        if !ty.iter().any(|l| l.is_positive()) || ty.iter().all(|l| l.is_positive()) {
            values.clear();
            break;
        }
        let m = svm::train(&tx, &ty, cfg)?;
        for x in &vx {
            values.push(m.decision_value(x)?);
        }
        labels.extend(vy);
    }
    if values.is_empty() {
        values = rows.values.iter().map(|x| model.decision_value(x)).collect::<Result<_>>()?;
        labels = rows.labels.clone();
    }
    Ok(model.with_calibration(fit_sigmoid(&values, &labels)?))
}

/// Evidence-based width selection on standardized rows; the fitted
/// standardizer travels with the returned model.
pub fn fit_bnn_table(table: &FeatureTable<f64>, cfg: &SelectionConfig<f64>) -> Result<(BnnModel<f64>, Vec<CandidateScore<f64>>)> {
    let rows = rows_of(table);
    let st = Standardizer::fit(&rows.values)?;
    let data = BnnData::new(st.transform_all(&rows.values)?, rows.labels.iter().map(|l| l.signed()).collect())?;
    let sel = select_model(&data, cfg)?;
    let mut model = sel.best;
    model.standardizer = Some(st);
    Ok((model, sel.scores))
}

pub fn evidence_csv(scores: &[CandidateScore<f64>], seed: u64) -> String {
    let mut s = seed_header(seed, &[]);
    s.push_str("width,converged_restarts,objective,log_evidence\n");
    let cell = |v: Option<f64>| v.map_or_else(|| "nan".to_string(), |v| format!("{v:.6}"));
    for c in scores {
        let _ = writeln!(s, "{},{},{},{}", c.width, c.converged_restarts, cell(c.objective), cell(c.evidence));
    }
    s
}

/// Swarm search over every subject of the table.
pub fn select_table(table: &FeatureTable<f64>, p: &HybridPipeline, folds: usize, seed: u64) -> Result<SwarmResult> {
    let splits = subject_folds(&subject_labels(table), folds, seed)?;
    hybrid_search(&rows_of(table), &splits, p, seed)
}

pub fn selection_text(result: &SwarmResult, schema: &[String], seed: u64) -> String {
    let names: Vec<&str> = result.best.active().iter().map(|&c| schema[c].as_str()).collect();
    let mut s = seed_header(seed, &[]);
    let _ = writeln!(s, "features = {}", names.join(","));
    let mask: Vec<&str> = result.best.mask.iter().map(|&b| if b { "1" } else { "0" }).collect();
    let _ = writeln!(s, "mask = {}", mask.join(""));
    for h in &result.best.hyper {
        let _ = writeln!(s, "log10_decay = {h:.4}");
    }
    let _ = writeln!(s, "fitness = {:.6}", result.fitness);
    let _ = writeln!(s, "evaluations = {}", result.evaluations);
    s
}

pub fn trace_csv(result: &SwarmResult, seed: u64) -> String {
    let mut s = seed_header(seed, &[]);
    s.push_str("iteration,best_fitness,mean_fitness\n");
    for r in &result.trace {
        let _ = writeln!(s, "{},{:.6},{:.6}", r.iteration, r.best_fitness, r.mean_fitness);
    }
    s
}

/// Every report file of an experiment as `(file name, contents)`, in a fixed order.
pub fn experiment_files(e: &Experiment) -> Vec<(String, String)> {
    let mut files = Vec::new();
    let head = seed_header(e.seed, &[("task", e.task.clone())]);
    files.push(("comparison.txt".to_string(), format!("{head}{}", e.table.to_text())));
    files.push(("comparison.csv".to_string(), format!("{head}{}", e.table.to_csv())));
    for rep in &e.repetitions {
        for r in &rep.reports {
            let stem = format!("{}_seed{}", r.classifier.to_ascii_lowercase(), rep.seed);
            files.push((format!("predictions_{stem}.csv"), predictions_csv(r)));
            files.push((format!("roc_{stem}.csv"), roc_csv(r)));
            files.push((format!("votes_{stem}.csv"), votes_csv(r)));
            files.push((format!("folds_{stem}.csv"), folds_csv(r)));
        }
    }
    let bars: Vec<(String, f64)> = e.table.classifiers.iter().cloned().zip(e.table.means()).collect();
    files.push(("accuracy.svg".to_string(), accuracy_bars(e.seed, &e.table.title, &bars)));
    if let Some(first) = e.repetitions.first() {
        let curves: Vec<(String, &crate::eval::RocCurve)> =
            first.reports.iter().map(|r| (r.classifier.clone(), &r.roc)).collect();
        files.push(("roc.svg".to_string(), roc_curves(first.seed, &format!("{} ROC", e.task), &curves)));
    }
    files
}

pub fn experiment_json(e: &Experiment) -> String {
    serde_json::to_string_pretty(e).expect("experiment serializes") + "\n"
}

pub fn parse_experiment_json(text: &str, origin: &str) -> Result<Experiment> {
    serde_json::from_str(text).map_err(|e| Error::data(format!("{origin}: invalid experiment file: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> FeatureTable<f64> {
        let mut t = FeatureTable::new(vec!["a".into(), "b".into()]);
        for s in 0..6 {
            let label = if s % 2 == 0 { ClassLabel::Negative } else { ClassLabel::Positive };
            for e in 0..5 {
                let x = label.signed::<f64>() + 0.1 * e as f64 - 0.2 + 0.01 * s as f64;
                t.push(SubjectId(format!("s{s}")), label, vec![x, 0.3 * e as f64 + 1.0 / 3.0]).unwrap();
            }
        }
        t
    }

    #[test]
    fn features_round_trip() {
        let t = table();
        let text = features_csv(&t, 4, &[("feature_set", "custom".into())]);
        assert!(text.starts_with("# seed = 4\n# feature_set = custom\nsubject_id,label,a,b\n"));
        assert_eq!(parse_features_csv(&text, "f").unwrap(), t);
        assert!(parse_features_csv("x,y,z\n", "f").is_err());
        let e = parse_features_csv("subject_id,label,a\ns1,3,1.0\n", "f.csv").unwrap_err().to_string();
        assert!(e.contains("f.csv") && e.contains("row 1"), "{e}");
    }

    #[test]
    fn trained_models_classify_the_table() {
        let t = table();
        let svm = fit_svm_table(&t, &SvmTrainConfig::default(), 3, 1).unwrap();
        assert!(svm.calibration.is_some());
        for r in &t.rows {
            assert_eq!(svm.predict_class(&r.values).unwrap(), r.label);
        }
        let cfg = SelectionConfig {
            candidates: vec![1, 2],
            ..SelectionConfig::default()
        };
        let (bnn, scores) = fit_bnn_table(&t, &cfg).unwrap();
        assert_eq!(scores.len(), 2);
        assert!(bnn.standardizer.is_some());
        for r in &t.rows {
            assert_eq!(bnn.predict_class(&r.values).unwrap(), r.label);
        }
        assert_eq!(evidence_csv(&scores, 0).lines().count(), 4);
    }
}
