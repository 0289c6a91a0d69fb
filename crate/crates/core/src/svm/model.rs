use serde::{Deserialize, Serialize};

use super::calibration::{fit_sigmoid, SigmoidParams};
use super::kernel::KernelSpec;
use super::smo;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::signal::ClassLabel;
use crate::standardize::Standardizer;

pub const SVM_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SvmTrainConfig<T: Scalar> {
    /// Box bound `D` on every multiplier.
    pub cost: T,
    pub kernel: KernelSpec<T>,
    pub kkt_tolerance: T,
    /// Iteration budget, in multiples of the training-set size.
    pub max_passes: usize,
    /// Fit a standardizer on the training rows before solving.
    pub standardize: bool,
}

impl<T: Scalar> Default for SvmTrainConfig<T> {
    fn default() -> Self {
        SvmTrainConfig {
            cost: T::one(),
            kernel: KernelSpec::Rbf { gamma: T::lit(0.25) },
            kkt_tolerance: T::lit(1e-3),
            max_passes: 1000,
            standardize: true,
        }
    }
}

impl<T: Scalar> SvmTrainConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.cost.is_finite() && self.cost > T::zero()) {
            return Err(Error::param(format!("cost D must be positive, got {}", self.cost)));
        }
        if !(self.kkt_tolerance > T::zero()) {
            return Err(Error::param("kkt_tolerance must be positive"));
        }
        if self.max_passes == 0 {
            return Err(Error::param("max_passes must be positive"));
        }
        self.kernel.validate()
    }
}

/// Trained classifier. Support vectors are stored in standardized coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SvmModel<T: Scalar> {
    pub kernel: KernelSpec<T>,
    pub cost: T,
    pub standardizer: Standardizer<T>,
    pub support_vectors: Vec<Vec<T>>,
    pub alphas: Vec<T>,
    pub labels: Vec<ClassLabel>,
    pub bias: T,
    pub calibration: Option<SigmoidParams<T>>,
    pub iterations: usize,
    pub violation: T,
}

pub fn train<T: Scalar>(
    rows: &[Vec<T>],
    labels: &[ClassLabel],
    cfg: &SvmTrainConfig<T>,
) -> Result<SvmModel<T>> {
    cfg.validate()?;
    if rows.len() != labels.len() {
        return Err(Error::param("feature rows and labels differ in length"));
    }
    if !labels.iter().any(|l| l.is_positive()) || labels.iter().all(|l| l.is_positive()) {
        return Err(Error::data("SVM training needs examples of both classes"));
    }
    let dim = rows[0].len();
    if rows.iter().any(|r| r.len() != dim || r.iter().any(|v| !v.is_finite())) {
        return Err(Error::data("feature rows must be finite and of equal length"));
    }
    let standardizer = if cfg.standardize {
        Standardizer::fit(rows)?
    } else {
        Standardizer::identity(dim)
    };
    let x = standardizer.transform_all(rows)?;
    let y: Vec<T> = labels.iter().map(|l| l.signed()).collect();
    let gram = cfg.kernel.gram(&x);
    let budget = cfg.max_passes.saturating_mul(x.len().max(1));
    let sol = smo::solve(&gram, &y, cfg.cost, cfg.kkt_tolerance, budget)?;

    let mut support_vectors = Vec::new();
    let mut alphas = Vec::new();
    let mut sv_labels = Vec::new();
    for (i, &a) in sol.alpha.iter().enumerate() {
        if a > T::zero() {
            support_vectors.push(x[i].clone());
            alphas.push(a);
            sv_labels.push(labels[i]);
        }
    }
    Ok(SvmModel {
        kernel: cfg.kernel,
        cost: cfg.cost,
        standardizer,
        support_vectors,
        alphas,
        labels: sv_labels,
        bias: sol.bias,
        calibration: None,
        iterations: sol.iterations,
        violation: sol.violation,
    })
}

#[derive(Serialize)]
#[serde(bound = "")]
struct EnvelopeRef<'a, T: Scalar> {
    format: &'static str,
    version: u32,
    model: &'a SvmModel<T>,
}

#[derive(Deserialize)]
#[serde(bound = "")]
struct Envelope<T: Scalar> {
    format: String,
    version: u32,
    model: SvmModel<T>,
}

impl<T: Scalar> SvmModel<T> {
    pub fn dim(&self) -> usize {
        self.standardizer.dim()
    }

    /// Decision value of an already-standardized point.
    pub fn decision_value_standardized(&self, z: &[T]) -> T {
        self.support_vectors
            .iter()
            .zip(self.alphas.iter().zip(&self.labels))
            .map(|(sv, (&a, l))| a * l.signed::<T>() * self.kernel.eval(sv, z))
            .sum::<T>()
            + self.bias
    }

    /// `Σ β_n b_n H(a_n, x) + d` for a raw feature vector.
    pub fn decision_value(&self, x: &[T]) -> Result<T> {
        let z = self.standardizer.transform(x)?;
        Ok(self.decision_value_standardized(&z))
    }

    /// Class by the sign of the decision value; zero goes to the positive class.
    pub fn predict_class(&self, x: &[T]) -> Result<ClassLabel> {
        Ok(ClassLabel::from_score(self.decision_value(x)?))
    }

    pub fn with_calibration(mut self, params: SigmoidParams<T>) -> Self {
        self.calibration = Some(params);
        self
    }

    /// Fits the sigmoid on externally produced decision values (held-out folds).
    pub fn calibrate(&mut self, decision_values: &[T], labels: &[ClassLabel]) -> Result<()> {
        self.calibration = Some(fit_sigmoid(decision_values, labels)?);
        Ok(())
    }

    pub fn predict_probability(&self, x: &[T]) -> Result<T> {
        let cal = self
            .calibration
            .ok_or_else(|| Error::State("SVM model has no fitted calibration".into()))?;
        Ok(cal.probability(self.decision_value(x)?))
    }

    /// `Σ β_j b_j` over the stored multipliers.
    pub fn dual_balance(&self) -> T {
        self.alphas
            .iter()
            .zip(&self.labels)
            .map(|(&a, l)| a * l.signed::<T>())
            .sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&EnvelopeRef {
            format: "eegbi-svm",
            version: SVM_FORMAT_VERSION,
            model: self,
        })
        .expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let env: Envelope<T> =
            serde_json::from_str(s).map_err(|e| Error::data(format!("invalid SVM model file: {e}")))?;
        if env.format != "eegbi-svm" || env.version != SVM_FORMAT_VERSION {
            return Err(Error::data(format!(
                "unsupported model format {} v{}",
                env.format, env.version
            )));
        }
        Ok(env.model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ClassLabel::{Negative as N, Positive as P};

    fn raw_cfg(kernel: KernelSpec<f64>, cost: f64) -> SvmTrainConfig<f64> {
        SvmTrainConfig {
            cost,
            kernel,
            kkt_tolerance: 1e-6,
            max_passes: 1000,
            standardize: false,
        }
    }

    #[test]
    fn symmetric_pair_has_zero_decision_at_origin() {
        let m = train(&[vec![-1.0], vec![1.0]], &[N, P], &raw_cfg(KernelSpec::Linear, 10.0)).unwrap();
        assert!(m.decision_value(&[0.0]).unwrap().abs() < 1e-6);
        assert!(m.decision_value(&[1.0]).unwrap() > 0.0);
        assert!(m.decision_value(&[-1.0]).unwrap() < 0.0);
        assert!((m.alphas[0] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn xor_is_separated_by_rbf() {
        let x = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]];
        let l = [N, N, P, P];
        let m = train(&x, &l, &raw_cfg(KernelSpec::rbf(1.0).unwrap(), 10.0)).unwrap();
        for (xi, &li) in x.iter().zip(&l) {
            assert_eq!(m.predict_class(xi).unwrap(), li);
        }
    }

    #[test]
    fn free_support_vectors_sit_on_the_margin() {
        let x: Vec<Vec<f64>> = (0..12)
            .map(|i| vec![(i as f64 * 0.7).sin() * 2.0, (i as f64 * 1.3).cos()])
            .collect();
        let l: Vec<_> = x.iter().map(|r| if r[0] + 0.3 * r[1] > 0.0 { P } else { N }).collect();
        let cfg = SvmTrainConfig {
            kkt_tolerance: 1e-3,
            ..raw_cfg(KernelSpec::rbf(0.5).unwrap(), 5.0)
        };
        let m = train(&x, &l, &cfg).unwrap();
        for (sv, (&a, lab)) in m.support_vectors.iter().zip(m.alphas.iter().zip(&m.labels)) {
            assert!(a > 0.0 && a <= cfg.cost);
            if a < cfg.cost {
                let h = m.decision_value_standardized(sv);
                assert!((h * lab.signed::<f64>() - 1.0).abs() <= 1e-3, "h={h}");
            }
        }
        assert!(m.dual_balance().abs() <= 1e-6);
    }

    #[test]
    fn single_class_and_bad_config_rejected() {
        let x = vec![vec![0.0], vec![1.0]];
        assert!(matches!(
            train(&x, &[P, P], &SvmTrainConfig::default()),
            Err(Error::Data(_))
        ));
        let bad = SvmTrainConfig {
            cost: 0.0,
            ..SvmTrainConfig::default()
        };
        assert!(matches!(train(&x, &[N, P], &bad), Err(Error::Parameter(_))));
    }

    #[test]
    fn tiny_budget_reports_convergence_error() {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![(i as f64).sin(), (i as f64 * 0.3).cos()]).collect();
        let l: Vec<_> = (0..30).map(|i| if i % 3 == 0 { P } else { N }).collect();
        let cfg = SvmTrainConfig {
            kkt_tolerance: 1e-12,
            max_passes: 1,
            ..raw_cfg(KernelSpec::rbf(2.0).unwrap(), 100.0)
        };
        match train(&x, &l, &cfg) {
            Err(Error::Convergence { iterations, .. }) => assert_eq!(iterations, 30),
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn probability_requires_calibration() {
        let m = train(&[vec![-1.0], vec![1.0]], &[N, P], &raw_cfg(KernelSpec::Linear, 1.0)).unwrap();
        assert!(matches!(m.predict_probability(&[0.3]), Err(Error::State(_))));
        let m = m.with_calibration(SigmoidParams {
            x_slope: -2.0,
            y_intercept: 0.0,
        });
        assert!(m.predict_probability(&[0.3]).unwrap() > 0.5);
    }

    #[test]
    fn dimension_mismatch_is_parameter_error() {
        let m = train(&[vec![-1.0], vec![1.0]], &[N, P], &raw_cfg(KernelSpec::Linear, 1.0)).unwrap();
        assert!(matches!(m.decision_value(&[0.0, 1.0]), Err(Error::Parameter(_))));
    }

    #[test]
    fn display_coded_labels_train_identically() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 - 4.5, ((i * 7) % 5) as f64]).collect();
        let coded = [-2, -2, 2, -2, 2, 2, -2, 2, 2, -2];
        let from_display: Vec<_> = coded.iter().map(|&d| ClassLabel::from_display(d).unwrap()).collect();
        let from_value: Vec<_> = coded.iter().map(|&d| ClassLabel::from_value(d / 2).unwrap()).collect();
        let cfg = SvmTrainConfig::default();
        let a = train(&x, &from_display, &cfg).unwrap();
        let b = train(&x, &from_value, &cfg).unwrap();
        for xi in &x {
            assert_eq!(a.predict_class(xi).unwrap(), b.predict_class(xi).unwrap());
        }
    }
}
