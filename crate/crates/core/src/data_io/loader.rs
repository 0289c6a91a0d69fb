use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::manifest::{DatasetManifest, Division, Task};
use crate::error::{Error, Result};
use crate::features::{extract, FeatureConfig, FeatureSet, FeatureTable};
use crate::scalar::Scalar;
use crate::signal::{window, ClassLabel, SubjectId, TimeSeries};

/// A recording with its division-derived label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LabeledSeries<T: Scalar> {
    pub series: TimeSeries<T>,
    pub division: Division,
    pub label: ClassLabel,
}

/// Parses one sample per line; blank lines are skipped.
pub fn parse_samples<T: Scalar>(text: &str, origin: &str) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let s = line.trim();
        if s.is_empty() {
            continue;
        }
        let v: T = s
            .parse()
            .map_err(|_| Error::data(format!("{origin}: line {}: cannot parse '{s}' as a sample", i + 1)))?;
        if !v.is_finite() {
            return Err(Error::data(format!("{origin}: line {}: non-finite sample", i + 1)));
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(Error::data(format!("{origin}: file has no samples")));
    }
    Ok(out)
}

pub fn read_series<T: Scalar>(path: &Path, rate: T, subject: SubjectId) -> Result<TimeSeries<T>> {
    let origin = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| Error::data(format!("{origin}: {e}")))?;
    let samples = parse_samples(&text, &origin)?;
    TimeSeries::new(samples, rate, subject, "ch0")
}

/// Loads every manifest file in parallel, in manifest order.
pub fn load_directory<T: Scalar>(root: &Path, manifest: &DatasetManifest) -> Result<Vec<LabeledSeries<T>>> {
    manifest.validate()?;
    let rate = T::lit(manifest.rate);
    let jobs: Vec<(Division, &super::manifest::ManifestEntry)> = manifest
        .groups
        .iter()
        .flat_map(|(&d, es)| es.iter().map(move |e| (d, e)))
        .collect();
    jobs.par_iter()
        .map(|&(division, e)| {
            Ok(LabeledSeries {
                series: read_series(&root.join(&e.path), rate, e.subject.clone())?,
                division,
                label: division.label(),
            })
        })
        .collect()
}

/// Keeps the divisions named by the task and relabels them.
pub fn apply_task<T: Scalar>(items: Vec<LabeledSeries<T>>, task: &Task) -> Result<Vec<LabeledSeries<T>>> {
    let kept: Vec<LabeledSeries<T>> = items
        .into_iter()
        .filter_map(|mut it| {
            task.label_of(it.division).map(|l| {
                it.label = l;
                it
            })
        })
        .collect();
    let pos = kept.iter().filter(|i| i.label.is_positive()).count();
    if pos == 0 || pos == kept.len() {
        return Err(Error::data(format!("task {} leaves fewer than two classes", task.name())));
    }
    Ok(kept)
}

/// Cuts each series into non-overlapping epochs (a series shorter than
/// `epoch_length` becomes a single epoch) and extracts one feature row per
/// epoch. Clinical covariates, when given, are appended per subject.
pub fn extract_table<T: Scalar>(
    items: &[LabeledSeries<T>],
    set: FeatureSet,
    cfg: &FeatureConfig<T>,
    epoch_length: usize,
    clinical: Option<&super::clinical::ClinicalFusion<T>>,
) -> Result<FeatureTable<T>> {
    let rows: Vec<Vec<(SubjectId, ClassLabel, Vec<T>)>> = items
        .par_iter()
        .map(|it| {
            let s = &it.series;
            let cov = clinical.map(|c| c.covariates(s.subject())).transpose()?;
            let epochs = if s.len() < epoch_length {
                vec![s.as_epoch()?]
            } else {
                window(s, epoch_length, epoch_length)?
            };
            epochs
                .iter()
                .map(|e| Ok((s.subject().clone(), it.label, extract(e, set, cov, cfg)?.values)))
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut schema: Vec<String> = set.schema().iter().map(|s| s.to_string()).collect();
    if let Some(c) = clinical {
        schema.extend(c.names.iter().cloned());
    }
    let mut table = FeatureTable::new(schema);
    for (subject, label, values) in rows.into_iter().flatten() {
        table.push(subject, label, values)?;
    }
    Ok(table)
}
