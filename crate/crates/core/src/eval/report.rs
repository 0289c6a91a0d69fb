//! Text serializations of evaluation results. Every file starts with a
//! `# seed = …` comment line (`<!-- … -->` for SVG).

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::pipeline::EvalReport;

pub fn seed_header(seed: u64, extra: &[(&str, String)]) -> String {
    let mut s = format!("# seed = {seed}\n");
    for (k, v) in extra {
        let _ = writeln!(s, "# {k} = {v}");
    }
    s
}

/// One row per epoch prediction, then a blank line and a `metric,value` summary block.
pub fn predictions_csv(report: &EvalReport) -> String {
    let mut s = seed_header(report.seed, &[("classifier", report.classifier.clone())]);
    s.push_str("fold,subject,label,probability,predicted\n");
    for p in &report.predictions {
        let _ = writeln!(
            s,
            "{},{},{},{:.6},{}",
            p.fold,
            p.subject,
            p.label.value(),
            p.probability,
            p.predicted.value()
        );
    }
    s.push('\n');
    s.push_str(&summary_block(report));
    s
}

pub fn summary_block(report: &EvalReport) -> String {
    let c = report.confusion;
    let v = report.subject_confusion;
    let rows: Vec<(&str, String)> = vec![
        ("classifier", report.classifier.clone()),
        ("epochs", c.total().to_string()),
        ("subjects", v.total().to_string()),
        ("tp", c.tp.to_string()),
        ("tn", c.tn.to_string()),
        ("fp", c.fp.to_string()),
        ("fn", c.fn_.to_string()),
        ("accuracy_percent", format!("{:.4}", report.accuracy)),
        ("sensitivity_percent", format!("{:.4}", report.sensitivity)),
        ("error_rate_1_minus_accuracy", format!("{:.6}", report.error_rate)),
        ("mean_absolute_probability_error", format!("{:.6}", report.mean_absolute_error)),
        ("subject_vote_accuracy_percent", format!("{:.4}", report.subject_accuracy)),
        ("auc", format!("{:.6}", report.roc.auc)),
        ("best_threshold", format!("{:.4}", report.roc.best_threshold)),
        ("best_youden", format!("{:.6}", report.roc.best_youden)),
    ];
    let mut s = String::from("metric,value\n");
    for (k, v) in rows {
        let _ = writeln!(s, "{k},{v}");
    }
    s
}

pub fn roc_csv(report: &EvalReport) -> String {
    let mut s = seed_header(report.seed, &[("classifier", report.classifier.clone())]);
    s.push_str("threshold,tpr,fpr\n");
    for p in &report.roc.points {
        let _ = writeln!(s, "{:.4},{:.6},{:.6}", p.threshold, p.tpr, p.fpr);
    }
    s
}

pub fn votes_csv(report: &EvalReport) -> String {
    let mut s = seed_header(report.seed, &[("classifier", report.classifier.clone())]);
    s.push_str("subject,label,predicted,epochs\n");
    for v in &report.votes {
        let _ = writeln!(s, "{},{},{},{}", v.subject, v.label.value(), v.predicted.value(), v.epochs);
    }
    s
}

pub fn folds_csv(report: &EvalReport) -> String {
    let mut s = seed_header(report.seed, &[("classifier", report.classifier.clone())]);
    s.push_str("fold,test_subject,choices\n");
    for f in &report.folds {
        let choices: Vec<String> = f.choices.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(s, "{},{},{}", f.fold, f.test, choices.join(";"));
    }
    s
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    /// Repetition label of the row.
    pub iterations: usize,
    /// Accuracy in percent, one per classifier column.
    pub accuracies: Vec<f64>,
}

/// Accuracy per classifier (columns) per repetition (rows).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub title: String,
    pub classifiers: Vec<String>,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn new(title: impl Into<String>, classifiers: Vec<String>) -> Self {
        ComparisonTable {
            title: title.into(),
            classifiers,
            rows: Vec::new(),
        }
    }

    /// Adds a row from reports given in column order.
    pub fn push_reports(&mut self, iterations: usize, reports: &[EvalReport]) {
        self.rows.push(ComparisonRow {
            iterations,
            accuracies: reports.iter().map(|r| r.accuracy).collect(),
        });
    }

    pub fn means(&self) -> Vec<f64> {
        (0..self.classifiers.len())
            .map(|c| {
                let n = self.rows.len().max(1) as f64;
                self.rows.iter().map(|r| r.accuracies[c]).sum::<f64>() / n
            })
            .collect()
    }

    pub fn mean_of(&self, classifier: &str) -> Option<f64> {
        let c = self.classifiers.iter().position(|n| n == classifier)?;
        Some(self.means()[c])
    }

    /// Fixed-width table: header row, one row per repetition, then the mean.
    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.title);
        let _ = write!(s, "{:<22}", "Number of Iterations");
        for c in &self.classifiers {
            let _ = write!(s, "{c:>12}");
        }
        s.push('\n');
        for r in &self.rows {
            let _ = write!(s, "{:<22}", r.iterations);
            for a in &r.accuracies {
                let _ = write!(s, "{a:>12.2}");
            }
            s.push('\n');
        }
        let _ = write!(s, "{:<22}", "Mean");
        for m in self.means() {
            let _ = write!(s, "{m:>12.2}");
        }
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("iterations,{}\n", self.classifiers.join(","));
        for r in &self.rows {
            let cells: Vec<String> = r.accuracies.iter().map(|a| format!("{a:.4}")).collect();
            let _ = writeln!(s, "{},{}", r.iterations, cells.join(","));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_layout() {
        let mut t = ComparisonTable::new("A/E Classification Accuracy", vec!["kNN".into(), "SVM".into()]);
        t.rows.push(ComparisonRow { iterations: 10, accuracies: vec![70.0, 80.0] });
        t.rows.push(ComparisonRow { iterations: 20, accuracies: vec![72.0, 84.0] });
        assert_eq!(t.means(), vec![71.0, 82.0]);
        assert_eq!(t.mean_of("SVM"), Some(82.0));
        let text = t.to_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("Number of Iterations") && lines[1].contains("kNN"));
        assert!(lines[2].starts_with("10 ") && lines[2].ends_with("80.00"));
        assert_eq!(t.to_csv(), "iterations,kNN,SVM\n10,70.0000,80.0000\n20,72.0000,84.0000\n");
    }
}
