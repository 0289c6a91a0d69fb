//! Time-series containers, epoching and label conventions.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Epoch length used when a configuration does not set one.
pub const DEFAULT_EPOCH_LENGTH: usize = 1024;

/// Opaque subject identifier.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SubjectId(pub String);

impl SubjectId {
    pub fn new(id: impl Into<String>) -> Self {
        SubjectId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SubjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SubjectId {
    fn from(s: &str) -> Self {
        SubjectId(s.to_string())
    }
}

/// Binary outcome label. Internally ±1; written to files as ±2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassLabel {
    Negative,
    Positive,
}

impl ClassLabel {
    pub fn value(self) -> i32 {
        match self {
            ClassLabel::Negative => -1,
            ClassLabel::Positive => 1,
        }
    }

    pub fn display_value(self) -> i32 {
        2 * self.value()
    }

    pub fn from_value(v: i32) -> Result<Self> {
        match v {
            -1 => Ok(ClassLabel::Negative),
            1 => Ok(ClassLabel::Positive),
            _ => Err(Error::param(format!("label value must be -1 or 1, got {v}"))),
        }
    }

    pub fn from_display(v: i32) -> Result<Self> {
        match v {
            -2 => Ok(ClassLabel::Negative),
            2 => Ok(ClassLabel::Positive),
            _ => Err(Error::param(format!("display label must be -2 or 2, got {v}"))),
        }
    }

    /// Sign of a score; zero goes to the positive class.
    pub fn from_score<T: Scalar>(score: T) -> Self {
        if score >= T::zero() {
            ClassLabel::Positive
        } else {
            ClassLabel::Negative
        }
    }

    pub fn signed<T: Scalar>(self) -> T {
        match self {
            ClassLabel::Negative => -T::one(),
            ClassLabel::Positive => T::one(),
        }
    }

    /// 0/1 indicator of the positive class.
    pub fn indicator<T: Scalar>(self) -> T {
        match self {
            ClassLabel::Negative => T::zero(),
            ClassLabel::Positive => T::one(),
        }
    }

    pub fn is_positive(self) -> bool {
        self == ClassLabel::Positive
    }
}

/// Uniformly sampled single-channel recording. All samples are finite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TimeSeries<T: Scalar> {
    samples: Vec<T>,
    rate: T,
    subject: SubjectId,
    channel: String,
}

/// Checks a raw recording and wraps it as a [`TimeSeries`].
pub fn validate<T: Scalar>(
    samples: Vec<T>,
    rate: T,
    subject: SubjectId,
    channel: impl Into<String>,
) -> Result<TimeSeries<T>> {
    if !(rate.is_finite() && rate > T::zero()) {
        return Err(Error::param(format!("sampling rate must be positive, got {rate}")));
    }
    if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
        return Err(Error::data(format!("non-finite sample at index {i}")));
    }
    Ok(TimeSeries {
        samples,
        rate,
        subject,
        channel: channel.into(),
    })
}

impl<T: Scalar> TimeSeries<T> {
    pub fn new(
        samples: Vec<T>,
        rate: T,
        subject: SubjectId,
        channel: impl Into<String>,
    ) -> Result<Self> {
        validate(samples, rate, subject, channel)
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn rate(&self) -> T {
        self.rate
    }

    pub fn subject(&self) -> &SubjectId {
        &self.subject
    }

    pub fn channel(&self) -> &str {
        &self.channel
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn epoch(&self, start: usize, length: usize) -> Result<Epoch<'_, T>> {
        Epoch::new(self, start, length)
    }

    /// The whole series as a single epoch.
    pub fn as_epoch(&self) -> Result<Epoch<'_, T>> {
        Epoch::new(self, 0, self.len())
    }
}

/// Contiguous window into a [`TimeSeries`], at least three samples long.
#[derive(Clone, Copy, Debug)]
pub struct Epoch<'a, T: Scalar> {
    series: &'a TimeSeries<T>,
    start: usize,
    length: usize,
}

impl<'a, T: Scalar> Epoch<'a, T> {
    pub const MIN_LENGTH: usize = 3;

    pub fn new(series: &'a TimeSeries<T>, start: usize, length: usize) -> Result<Self> {
        if length < Self::MIN_LENGTH {
            return Err(Error::param(format!(
                "epoch length must be at least {}, got {length}",
                Self::MIN_LENGTH
            )));
        }
        match start.checked_add(length) {
            Some(end) if end <= series.len() => Ok(Epoch {
                series,
                start,
                length,
            }),
            _ => Err(Error::param(format!(
                "epoch [{start}, {start}+{length}) exceeds series length {}",
                series.len()
            ))),
        }
    }

    pub fn samples(&self) -> &'a [T] {
        &self.series.samples[self.start..self.start + self.length]
    }

    pub fn series(&self) -> &'a TimeSeries<T> {
        self.series
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn len(&self) -> usize {
        self.length
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn rate(&self) -> T {
        self.series.rate
    }

    pub fn subject(&self) -> &'a SubjectId {
        &self.series.subject
    }
}

/// Tiles `series` into epochs of `length` samples every `hop` samples.
/// A trailing partial window is dropped.
pub fn window<T: Scalar>(
    series: &TimeSeries<T>,
    length: usize,
    hop: usize,
) -> Result<Vec<Epoch<'_, T>>> {
    if length < Epoch::<T>::MIN_LENGTH {
        return Err(Error::param(format!("window length must be >= 3, got {length}")));
    }
    if hop == 0 {
        return Err(Error::param("window hop must be >= 1"));
    }
    if length > series.len() {
        return Err(Error::param(format!(
            "window length {length} exceeds series length {}",
            series.len()
        )));
    }
    let count = (series.len() - length) / hop + 1;
    (0..count)
        .map(|i| Epoch::new(series, i * hop, length))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(n: usize) -> TimeSeries<f64> {
        TimeSeries::new((0..n).map(|i| i as f64).collect(), 256.0, "s".into(), "Cz").unwrap()
    }

    #[test]
    fn window_counts_and_starts() {
        let s = series(10);
        let starts: Vec<_> = window(&s, 4, 2).unwrap().iter().map(|e| e.start()).collect();
        assert_eq!(starts, vec![0, 2, 4, 6]);
        assert_eq!(window(&series(4), 4, 1).unwrap().len(), 1);
        let s5 = series(5);
        let tail = window(&s5, 4, 4).unwrap();
        assert_eq!(tail.len(), 1);
        assert_eq!(tail[0].start(), 0);
    }

    #[test]
    fn window_rejects_bad_parameters() {
        let s = series(10);
        assert!(matches!(window(&s, 2, 1), Err(Error::Parameter(_))));
        assert!(matches!(window(&s, 4, 0), Err(Error::Parameter(_))));
        assert!(matches!(window(&s, 11, 1), Err(Error::Parameter(_))));
    }

    #[test]
    fn non_overlapping_windows_reconstruct_prefix() {
        let s = series(23);
        let joined: Vec<f64> = window(&s, 5, 5)
            .unwrap()
            .iter()
            .flat_map(|e| e.samples().iter().copied())
            .collect();
        assert_eq!(joined.as_slice(), &s.samples()[..20]);
    }

    #[test]
    fn validate_reports_first_bad_index() {
        let ok = validate(vec![1.0, 2.0], 256.0, "a".into(), "c");
        assert!(ok.is_ok());
        let bad = validate(vec![0.0, 1.0, 2.0, f64::NAN, f64::INFINITY], 256.0, "a".into(), "c");
        match bad {
            Err(Error::Data(msg)) => assert!(msg.contains("index 3"), "{msg}"),
            other => panic!("expected data error, got {other:?}"),
        }
        assert!(matches!(
            validate(vec![1.0], 0.0, "a".into(), "c"),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn labels_round_trip_through_display_coding() {
        for d in [-2, 2] {
            assert_eq!(ClassLabel::from_display(d).unwrap().display_value(), d);
        }
        for l in [ClassLabel::Negative, ClassLabel::Positive] {
            assert_eq!(ClassLabel::from_value(l.value()).unwrap(), l);
            assert_eq!(l.display_value(), 2 * l.value());
        }
        assert!(ClassLabel::from_display(1).is_err());
        assert_eq!(ClassLabel::from_score(0.0f64), ClassLabel::Positive);
    }

    #[test]
    fn epoch_bounds() {
        let s = series(6);
        assert!(s.epoch(3, 3).is_ok());
        assert!(s.epoch(4, 3).is_err());
        assert!(s.epoch(0, 2).is_err());
    }
}
