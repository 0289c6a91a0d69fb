//! Epoch-level EEG features.
//!
//! Two fixed quadruples are exposed: the kernel-SVM set
//! `[nleo_mean, rms, spec_energy, rel_delta]` and the network set
//! `[rms, iav, mavs, zc]`. The individual operators work on plain sample
//! slices, so they also accept windows shorter than an [`Epoch`].

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::signal::{ClassLabel, Epoch, SubjectId};

pub const SVM_SCHEMA: [&str; 4] = ["nleo_mean", "rms", "spec_energy", "rel_delta"];
pub const BNN_SCHEMA: [&str; 4] = ["rms", "iav", "mavs", "zc"];
pub const UNION_SCHEMA: [&str; 7] = ["nleo_mean", "rms", "spec_energy", "rel_delta", "iav", "mavs", "zc"];

fn require_len<T>(x: &[T], min: usize, what: &str) -> Result<()> {
    if x.len() < min {
        Err(Error::param(format!("{what} needs at least {min} samples, got {}", x.len())))
    } else {
        Ok(())
    }
}

/// Nonlinear energy operator `u[j]^2 - u[j-1] u[j+1]`; both end points are zero.
pub fn nleo<T: Scalar>(x: &[T]) -> Result<Vec<T>> {
    require_len(x, 3, "nleo")?;
    let mut out = vec![T::zero(); x.len()];
    for j in 1..x.len() - 1 {
        out[j] = x[j] * x[j] - x[j - 1] * x[j + 1];
    }
    Ok(out)
}

/// Mean of the interior NLEO values.
pub fn nleo_mean<T: Scalar>(x: &[T]) -> Result<T> {
    let e = nleo(x)?;
    let interior = &e[1..e.len() - 1];
    Ok(interior.iter().copied().sum::<T>() / T::from_usize_lossy(interior.len()))
}

pub fn rms<T: Scalar>(x: &[T]) -> Result<T> {
    require_len(x, 1, "rms")?;
    let ss: T = x.iter().map(|&v| v * v).sum();
    Ok((ss / T::from_usize_lossy(x.len())).sqrt())
}

/// Integrated absolute value.
pub fn iav<T: Scalar>(x: &[T]) -> Result<T> {
    require_len(x, 1, "iav")?;
    Ok(x.iter().map(|v| v.abs()).sum())
}

/// Mean absolute value slope over the `m - 1` consecutive pairs.
pub fn mavs<T: Scalar>(x: &[T]) -> Result<T> {
    require_len(x, 2, "mavs")?;
    let total: T = x.windows(2).map(|w| w[1].abs() - w[0].abs()).sum();
    Ok(total / T::from_usize_lossy(x.len() - 1))
}

/// Counts pairs with `-y[s] * y[s+1] >= 0`, so samples touching zero count.
pub fn zero_crossings<T: Scalar>(x: &[T]) -> Result<usize> {
    require_len(x, 2, "zero_crossings")?;
    Ok(x.windows(2).filter(|w| -(w[0] * w[1]) >= T::zero()).count())
}

/// Spectral taper applied before band-power estimation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Taper {
    #[default]
    None,
    Hann,
}

/// Two-sided periodogram `|X_k|^2 / n`, which sums to the time-domain energy.
pub fn periodogram<T: Scalar>(x: &[T], taper: Taper) -> Vec<T> {
    let n = x.len();
    let mut buf: Vec<Complex<T>> = match taper {
        Taper::None => x.iter().map(|&v| Complex::new(v, T::zero())).collect(),
        Taper::Hann => {
            let denom = T::from_usize_lossy(n.saturating_sub(1).max(1));
            x.iter()
                .enumerate()
                .map(|(j, &v)| {
                    let w = T::lit(0.5)
                        * (T::one() - (T::TAU() * T::from_usize_lossy(j) / denom).cos());
                    Complex::new(v * w, T::zero())
                })
                .collect()
        }
    };
    FftPlanner::<T>::new().plan_fft_forward(n).process(&mut buf);
    let scale = T::from_usize_lossy(n);
    buf.iter().map(|c| c.norm_sqr() / scale).collect()
}

/// Sum of the squared DFT magnitudes, normalized so it equals `sum(u^2)`.
pub fn total_spectral_energy<T: Scalar>(x: &[T]) -> Result<T> {
    require_len(x, 2, "total_spectral_energy")?;
    Ok(periodogram(x, Taper::None).into_iter().sum())
}

/// Half-open frequency band `[low_hz, high_hz)`; a band ending at Nyquist also
/// includes the Nyquist bin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct BandSpec<T: Scalar> {
    pub low_hz: T,
    pub high_hz: T,
}

impl<T: Scalar> BandSpec<T> {
    pub fn new(low_hz: T, high_hz: T) -> Result<Self> {
        if !(low_hz.is_finite() && high_hz.is_finite() && low_hz >= T::zero() && high_hz > low_hz) {
            return Err(Error::param(format!("invalid band [{low_hz}, {high_hz})")));
        }
        Ok(BandSpec { low_hz, high_hz })
    }

    /// 0.5-4 Hz.
    pub fn delta() -> Self {
        BandSpec {
            low_hz: T::lit(0.5),
            high_hz: T::lit(4.0),
        }
    }
}

/// Fraction of total power falling in `band`. Zero signals give 0.
pub fn relative_band_power<T: Scalar>(x: &[T], rate: T, band: BandSpec<T>) -> Result<T> {
    relative_band_power_tapered(x, rate, band, Taper::None)
}

pub fn relative_band_power_tapered<T: Scalar>(
    x: &[T],
    rate: T,
    band: BandSpec<T>,
    taper: Taper,
) -> Result<T> {
    require_len(x, 2, "relative_band_power")?;
    let nyquist = rate / T::lit(2.0);
    if band.high_hz > nyquist {
        return Err(Error::param(format!(
            "band upper edge {} Hz exceeds Nyquist {nyquist} Hz",
            band.high_hz
        )));
    }
    let n = x.len();
    let p = periodogram(x, taper);
    let total: T = p.iter().copied().sum();
    if total <= T::zero() {
        return Ok(T::zero());
    }
    let nf = T::from_usize_lossy(n);
    let mut in_band = T::zero();
    for k in 0..=n / 2 {
        let top = 2 * k == n;
        let f = if top { nyquist } else { T::from_usize_lossy(k) * rate / nf };
        // one-sided power: mirror bins fold onto k
        let pk = if k == 0 || top { p[k] } else { p[k] + p[n - k] };
        let upper_ok = f < band.high_hz || (band.high_hz >= nyquist && f <= band.high_hz);
        if f >= band.low_hz && upper_ok {
            in_band += pk;
        }
    }
    Ok((in_band / total).min(T::one()))
}

/// Which features an extraction produces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureSet {
    Svm4,
    Bnn4,
    Union,
}

impl FeatureSet {
    pub fn schema(self) -> &'static [&'static str] {
        match self {
            FeatureSet::Svm4 => &SVM_SCHEMA,
            FeatureSet::Bnn4 => &BNN_SCHEMA,
            FeatureSet::Union => &UNION_SCHEMA,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "svm4" => Ok(FeatureSet::Svm4),
            "bnn4" => Ok(FeatureSet::Bnn4),
            "union" => Ok(FeatureSet::Union),
            _ => Err(Error::param(format!("unknown feature set '{s}' (svm4|bnn4|union)"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureSet::Svm4 => "svm4",
            FeatureSet::Bnn4 => "bnn4",
            FeatureSet::Union => "union",
        }
    }
}

/// Spectral settings for feature extraction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FeatureConfig<T: Scalar> {
    pub delta: BandSpec<T>,
    pub taper: Taper,
}

impl<T: Scalar> Default for FeatureConfig<T> {
    fn default() -> Self {
        FeatureConfig {
            delta: BandSpec::delta(),
            taper: Taper::None,
        }
    }
}

/// Where a feature vector came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochRef {
    pub subject: SubjectId,
    pub start: usize,
    pub length: usize,
}

impl EpochRef {
    pub fn of<T: Scalar>(epoch: &Epoch<'_, T>) -> Self {
        EpochRef {
            subject: epoch.subject().clone(),
            start: epoch.start(),
            length: epoch.len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FeatureVector<T: Scalar> {
    /// EEG features, then clinical covariates when fused.
    pub values: Vec<T>,
    /// Names of the EEG features only.
    pub schema: Vec<String>,
    pub source: Option<EpochRef>,
    pub clinical: Option<Vec<T>>,
}

impl<T: Scalar> FeatureVector<T> {
    fn build(eeg: Vec<T>, schema: &[&str], source: EpochRef, clinical: Option<&[T]>) -> Result<Self> {
        let mut values = eeg;
        if let Some(c) = clinical {
            if let Some(i) = c.iter().position(|v| !v.is_finite()) {
                return Err(Error::data(format!("non-finite clinical covariate at index {i}")));
            }
            values.extend_from_slice(c);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("feature {i} is not finite")));
        }
        Ok(FeatureVector {
            values,
            schema: schema.iter().map(|s| s.to_string()).collect(),
            source: Some(source),
            clinical: clinical.map(|c| c.to_vec()),
        })
    }

    /// Column names including generated names for clinical covariates.
    pub fn column_names(&self) -> Vec<String> {
        let mut names = self.schema.clone();
        if let Some(c) = &self.clinical {
            names.extend((0..c.len()).map(|i| format!("clinical_{i}")));
        }
        names
    }
}

pub fn extract_svm_features<T: Scalar>(
    epoch: &Epoch<'_, T>,
    clinical: Option<&[T]>,
    cfg: &FeatureConfig<T>,
) -> Result<FeatureVector<T>> {
    let x = epoch.samples();
    let eeg = vec![
        nleo_mean(x)?,
        rms(x)?,
        total_spectral_energy(x)?,
        relative_band_power_tapered(x, epoch.rate(), cfg.delta, cfg.taper)?,
    ];
    FeatureVector::build(eeg, &SVM_SCHEMA, EpochRef::of(epoch), clinical)
}

pub fn extract_bnn_features<T: Scalar>(epoch: &Epoch<'_, T>) -> Result<FeatureVector<T>> {
    let x = epoch.samples();
    let eeg = vec![rms(x)?, iav(x)?, mavs(x)?, T::from_usize_lossy(zero_crossings(x)?)];
    FeatureVector::build(eeg, &BNN_SCHEMA, EpochRef::of(epoch), None)
}

/// Extracts whichever feature set is requested.
pub fn extract<T: Scalar>(
    epoch: &Epoch<'_, T>,
    set: FeatureSet,
    clinical: Option<&[T]>,
    cfg: &FeatureConfig<T>,
) -> Result<FeatureVector<T>> {
    match set {
        FeatureSet::Svm4 => extract_svm_features(epoch, clinical, cfg),
        FeatureSet::Bnn4 => {
            let v = extract_bnn_features(epoch)?;
            FeatureVector::build(v.values, &BNN_SCHEMA, EpochRef::of(epoch), clinical)
        }
        FeatureSet::Union => {
            let x = epoch.samples();
            let eeg = vec![
                nleo_mean(x)?,
                rms(x)?,
                total_spectral_energy(x)?,
                relative_band_power_tapered(x, epoch.rate(), cfg.delta, cfg.taper)?,
                iav(x)?,
                mavs(x)?,
                T::from_usize_lossy(zero_crossings(x)?),
            ];
            FeatureVector::build(eeg, &UNION_SCHEMA, EpochRef::of(epoch), clinical)
        }
    }
}

/// One labeled row of a feature table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FeatureRow<T: Scalar> {
    pub subject: SubjectId,
    pub label: ClassLabel,
    pub values: Vec<T>,
}

/// Labeled feature matrix with a shared column schema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FeatureTable<T: Scalar> {
    pub schema: Vec<String>,
    pub rows: Vec<FeatureRow<T>>,
}

impl<T: Scalar> FeatureTable<T> {
    pub fn new(schema: Vec<String>) -> Self {
        FeatureTable { schema, rows: Vec::new() }
    }

    pub fn push(&mut self, subject: SubjectId, label: ClassLabel, values: Vec<T>) -> Result<()> {
        if values.len() != self.schema.len() {
            return Err(Error::data(format!(
                "row has {} values, schema has {}",
                values.len(),
                self.schema.len()
            )));
        }
        self.rows.push(FeatureRow { subject, label, values });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.schema.len()
    }

    /// Distinct subjects in first-appearance order.
    pub fn subjects(&self) -> Vec<SubjectId> {
        let mut seen = std::collections::HashSet::new();
        self.rows
            .iter()
            .filter(|r| seen.insert(r.subject.clone()))
            .map(|r| r.subject.clone())
            .collect()
    }

    /// Keeps only the listed columns, in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> Result<Self> {
        if let Some(&c) = columns.iter().find(|&&c| c >= self.dim()) {
            return Err(Error::param(format!("column {c} out of range")));
        }
        Ok(FeatureTable {
            schema: columns.iter().map(|&c| self.schema[c].clone()).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| FeatureRow {
                    subject: r.subject.clone(),
                    label: r.label,
                    values: columns.iter().map(|&c| r.values[c]).collect(),
                })
                .collect(),
        })
    }
}
