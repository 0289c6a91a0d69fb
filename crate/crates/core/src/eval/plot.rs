//! Self-contained SVG charts.

use std::fmt::Write;

use super::metrics::RocCurve;

const W: f64 = 480.0;
const H: f64 = 360.0;
const PAD: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

fn open(seed: u64, title: &str) -> String {
    let mut s = format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<!-- seed = {seed} -->\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    );
    let _ = writeln!(s, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">{}</text>",
        W / 2.0,
        escape(title)
    );
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(s: &mut String, x_label: &str, y_label: &str, y_max: f64, ticks: usize) {
    let (x0, y0, x1, y1) = (PAD, H - PAD, W - PAD / 2.0, PAD);
    let _ = writeln!(s, "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>");
    let _ = writeln!(s, "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>");
    for t in 0..=ticks {
        let v = y_max * t as f64 / ticks as f64;
        let y = y0 - (y0 - y1) * t as f64 / ticks as f64;
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
            x0 - 6.0,
            y + 4.0,
            trim(v)
        );
        let _ = writeln!(s, "<line x1=\"{x0}\" y1=\"{y:.1}\" x2=\"{x1}\" y2=\"{y:.1}\" stroke=\"#ddd\"/>");
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
        (x0 + x1) / 2.0,
        H - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        "<text x=\"14\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 14 {:.1})\">{}</text>",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

fn trim(v: f64) -> String {
    let s = format!("{v:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Bar chart of accuracy (percent) per classifier.
pub fn accuracy_bars(seed: u64, title: &str, bars: &[(String, f64)]) -> String {
    let mut s = open(seed, title);
    axes(&mut s, "Classifier", "Accuracy (%)", 100.0, 5);
    let span = W - 1.5 * PAD;
    let slot = span / bars.len().max(1) as f64;
    for (i, (name, acc)) in bars.iter().enumerate() {
        let h = (H - 2.0 * PAD) * acc.clamp(0.0, 100.0) / 100.0;
        let x = PAD + slot * i as f64 + slot * 0.15;
        let _ = writeln!(
            s,
            "<rect x=\"{x:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{h:.1}\" fill=\"{}\"/>",
            H - PAD - h,
            slot * 0.7,
            COLORS[i % COLORS.len()]
        );
        let cx = x + slot * 0.35;
        let _ = writeln!(
            s,
            "<text x=\"{cx:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{acc:.2}</text>",
            H - PAD - h - 4.0
        );
        let _ = writeln!(
            s,
            "<text x=\"{cx:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
            H - PAD + 16.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// ROC curves (TPR against FPR), one polyline per classifier.
pub fn roc_curves(seed: u64, title: &str, curves: &[(String, &RocCurve)]) -> String {
    let mut s = open(seed, title);
    axes(&mut s, "False positive rate", "True positive rate", 1.0, 5);
    let (x0, y0) = (PAD, H - PAD);
    let (w, h) = (W - 1.5 * PAD, H - 2.0 * PAD);
    let _ = writeln!(
        s,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{:.1}\" y2=\"{PAD}\" stroke=\"#999\" stroke-dasharray=\"4 4\"/>",
        x0 + w
    );
    for (i, (name, roc)) in curves.iter().enumerate() {
        let pts: Vec<String> = roc
            .points
            .iter()
            .map(|p| format!("{:.1},{:.1}", x0 + w * p.fpr, y0 - h * p.tpr))
            .collect();
        let color = COLORS[i % COLORS.len()];
        let _ = writeln!(
            s,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>",
            pts.join(" ")
        );
        let ly = PAD + 16.0 * (i as f64 + 1.0);
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{ly:.1}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{color}\">{} (AUC {:.3})</text>",
            x0 + w - 4.0,
            escape(name),
            roc.auc
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::metrics::threshold_sweep;
    use crate::signal::ClassLabel::{Negative as N, Positive as P};

    #[test]
    fn svg_is_well_formed_enough() {
        let bars = accuracy_bars(3, "A & E", &[("kNN".into(), 70.0), ("SVM".into(), 85.5)]);
        assert!(bars.starts_with("<?xml") && bars.contains("<!-- seed = 3 -->") && bars.trim_end().ends_with("</svg>"));
        assert!(bars.contains("A &amp; E") && bars.contains("85.50"));
        let roc = threshold_sweep(&[0.9, 0.2, 0.7], &[P, N, N], 4).unwrap();
        let svg = roc_curves(3, "ROC", &[("SVM".into(), &roc)]);
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert_eq!(svg, roc_curves(3, "ROC", &[("SVM".into(), &roc)]));
    }
}
