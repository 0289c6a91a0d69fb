use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::signal::SubjectId;

/// Numeric per-subject covariates read from `subject_id,<name>...` CSV.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ClinicalTable<T: Scalar> {
    pub names: Vec<String>,
    pub rows: BTreeMap<SubjectId, Vec<T>>,
}

impl<T: Scalar> ClinicalTable<T> {
    pub fn from_reader<R: std::io::Read>(reader: R, origin: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr
            .headers()
            .map_err(|e| Error::data(format!("{origin}: {e}")))?
            .clone();
        if header.get(0) != Some("subject_id") {
            return Err(Error::data(format!("{origin}: first column must be 'subject_id'")));
        }
        let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut rows = BTreeMap::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::data(format!("{origin}: line {line}: {e}")))?;
            if rec.len() != names.len() + 1 {
                return Err(Error::data(format!(
                    "{origin}: line {line}: expected {} covariates, found {}",
                    names.len(),
                    rec.len().saturating_sub(1)
                )));
            }
            let id = SubjectId::new(&rec[0]);
            let values = rec
                .iter()
                .skip(1)
                .map(|v| {
                    v.parse::<T>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| Error::data(format!("{origin}: line {line}: '{v}' is not a finite number")))
                })
                .collect::<Result<Vec<T>>>()?;
            if rows.insert(id.clone(), values).is_some() {
                return Err(Error::data(format!("{origin}: subject {id} listed twice")));
            }
        }
        Ok(ClinicalTable { names, rows })
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
        Self::from_reader(f, &path.display().to_string())
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Covariates checked to cover every subject of a collection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ClinicalFusion<T: Scalar> {
    pub names: Vec<String>,
    rows: BTreeMap<SubjectId, Vec<T>>,
}

impl<T: Scalar> ClinicalFusion<T> {
    pub fn covariates(&self, subject: &SubjectId) -> Result<&[T]> {
        self.rows
            .get(subject)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::data(format!("no clinical covariates for subject {subject}")))
    }
}

/// Fails unless every subject has a full row; no partial fusion.
pub fn attach_clinical<T: Scalar>(subjects: &[SubjectId], table: &ClinicalTable<T>) -> Result<ClinicalFusion<T>> {
    let missing: Vec<String> = subjects
        .iter()
        .filter(|s| !table.rows.contains_key(*s))
        .map(|s| s.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::data(format!("clinical covariates missing for: {}", missing.join(", "))));
    }
    if let Some((id, _)) = table.rows.iter().find(|(_, v)| v.len() != table.names.len()) {
        return Err(Error::data(format!("clinical row for {id} has the wrong arity")));
    }
    Ok(ClinicalFusion {
        names: table.names.clone(),
        rows: subjects.iter().map(|s| (s.clone(), table.rows[s].clone())).collect(),
    })
}
