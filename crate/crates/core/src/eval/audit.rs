//! Instrumented data access for cross-validation.
//!
//! Every read of a feature row during a fold goes through [`FoldAccess`],
//! which logs the phase and subject. [`check_leakage`] then proves that no
//! outer-test subject was read outside the prediction phase of its own fold.

use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::plan::CvPlan;
use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::scalar::Scalar;
use crate::signal::{ClassLabel, SubjectId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase {
    Standardize,
    Select,
    Calibrate,
    Train,
    Predict,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Standardize => "standardize",
            Phase::Select => "select",
            Phase::Calibrate => "calibrate",
            Phase::Train => "train",
            Phase::Predict => "predict",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Access {
    pub phase: Phase,
    pub fold: usize,
    pub subject: SubjectId,
    pub rows: usize,
}

#[derive(Debug, Default)]
pub struct AuditLog {
    entries: Mutex<Vec<Access>>,
}

impl AuditLog {
    pub fn new() -> Self {
        Self::default()
    }

    fn record(&self, access: Access) {
        self.entries.lock().expect("audit log poisoned").push(access);
    }

    pub fn entries(&self) -> Vec<Access> {
        self.entries.lock().expect("audit log poisoned").clone()
    }

    pub fn clear(&self) {
        self.entries.lock().expect("audit log poisoned").clear();
    }
}

/// Rows read for one request: features, labels and owning subject per row.
#[derive(Clone, Debug, Default)]
pub struct Rows<T: Scalar> {
    pub values: Vec<Vec<T>>,
    pub labels: Vec<ClassLabel>,
    pub subjects: Vec<SubjectId>,
}

/// The only way a pipeline reads the feature table during a fold.
pub struct FoldAccess<'a, T: Scalar> {
    table: &'a FeatureTable<T>,
    index: &'a HashMap<SubjectId, Vec<usize>>,
    fold: usize,
    log: &'a AuditLog,
}

/// Row indices grouped by subject.
pub fn subject_index<T: Scalar>(table: &FeatureTable<T>) -> HashMap<SubjectId, Vec<usize>> {
    let mut index: HashMap<SubjectId, Vec<usize>> = HashMap::new();
    for (i, r) in table.rows.iter().enumerate() {
        index.entry(r.subject.clone()).or_default().push(i);
    }
    index
}

impl<'a, T: Scalar> FoldAccess<'a, T> {
    pub fn new(
        table: &'a FeatureTable<T>,
        index: &'a HashMap<SubjectId, Vec<usize>>,
        fold: usize,
        log: &'a AuditLog,
    ) -> Self {
        FoldAccess { table, index, fold, log }
    }

    pub fn fold(&self) -> usize {
        self.fold
    }

    pub fn dim(&self) -> usize {
        self.table.dim()
    }

    pub fn schema(&self) -> &[String] {
        &self.table.schema
    }

    /// Reads every row of the listed subjects, in the listed order.
    pub fn read(&self, phase: Phase, subjects: &[SubjectId]) -> Result<Rows<T>> {
        let mut out = Rows::default();
        for s in subjects {
            let idx = self
                .index
                .get(s)
                .ok_or_else(|| Error::data(format!("subject {s} has no epochs")))?;
            self.log.record(Access {
                phase,
                fold: self.fold,
                subject: s.clone(),
                rows: idx.len(),
            });
            for &i in idx {
                let r = &self.table.rows[i];
                out.values.push(r.values.clone());
                out.labels.push(r.label);
                out.subjects.push(r.subject.clone());
            }
        }
        Ok(out)
    }
}

/// Fails if any fold read its own test subject outside [`Phase::Predict`],
/// or read any other subject during prediction.
pub fn check_leakage(plan: &CvPlan, log: &AuditLog) -> Result<()> {
    for a in log.entries() {
        let fold = plan
            .outer
            .get(a.fold)
            .ok_or_else(|| Error::State(format!("audit entry for unknown fold {}", a.fold)))?;
        let is_test = a.subject == fold.test;
        if is_test && a.phase != Phase::Predict {
            return Err(Error::Leakage(format!(
                "fold {}: test subject {} read during {}",
                a.fold,
                a.subject,
                a.phase.name()
            )));
        }
        if !is_test && a.phase == Phase::Predict {
            return Err(Error::Leakage(format!(
                "fold {}: prediction read non-test subject {}",
                a.fold, a.subject
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::plan::build_loso_plan;

    fn table() -> FeatureTable<f64> {
        let mut t = FeatureTable::new(vec!["x".into()]);
        for (s, v) in [("a", 1.0), ("b", 2.0), ("a", 3.0), ("c", 4.0)] {
            t.push(s.into(), ClassLabel::Negative, vec![v]).unwrap();
        }
        t
    }

    #[test]
    fn reads_are_logged_and_grouped() {
        let t = table();
        let index = subject_index(&t);
        let log = AuditLog::new();
        let acc = FoldAccess::new(&t, &index, 0, &log);
        let rows = acc.read(Phase::Train, &["a".into(), "c".into()]).unwrap();
        assert_eq!(rows.values, vec![vec![1.0], vec![3.0], vec![4.0]]);
        assert_eq!(log.entries().len(), 2);
        assert!(acc.read(Phase::Train, &["zz".into()]).is_err());
    }

    #[test]
    fn guard_catches_test_subject_reads() {
        let t = table();
        let index = subject_index(&t);
        let plan = build_loso_plan(&t.subjects(), 2, 0).unwrap();
        let log = AuditLog::new();
        let fold0 = &plan.outer[0];
        let acc = FoldAccess::new(&t, &index, 0, &log);
        acc.read(Phase::Train, &fold0.train).unwrap();
        acc.read(Phase::Predict, std::slice::from_ref(&fold0.test)).unwrap();
        check_leakage(&plan, &log).unwrap();
        acc.read(Phase::Calibrate, std::slice::from_ref(&fold0.test)).unwrap();
        assert!(matches!(check_leakage(&plan, &log), Err(Error::Leakage(_))));
        log.clear();
        acc.read(Phase::Predict, &fold0.train).unwrap();
        assert!(matches!(check_leakage(&plan, &log), Err(Error::Leakage(_))));
    }
}
