//! Time-series container, normalization frames and window materialization.

use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// How values are normalized before indexing and querying.
///
/// An index and its queries must agree on the mode; engines check this at
/// query time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormalizationMode {
    /// Use the values as ingested.
    Raw,
    /// z-normalize the entire series once, then slice windows out of it.
    GlobalZ,
    /// z-normalize every window independently.
    PerSubseqZ,
}

impl NormalizationMode {
    pub const ALL: [NormalizationMode; 3] = [
        NormalizationMode::Raw,
        NormalizationMode::GlobalZ,
        NormalizationMode::PerSubseqZ,
    ];

    /// Stable token used by the CLI and file headers.
    pub fn token(self) -> &'static str {
        match self {
            NormalizationMode::Raw => "raw",
            NormalizationMode::GlobalZ => "zglobal",
            NormalizationMode::PerSubseqZ => "zsub",
        }
    }
}

impl fmt::Display for NormalizationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for NormalizationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(NormalizationMode::Raw),
            "zglobal" => Ok(NormalizationMode::GlobalZ),
            "zsub" => Ok(NormalizationMode::PerSubseqZ),
            other => Err(Error::InvalidParameter(format!(
                "unknown normalization mode `{other}` (expected raw, zglobal or zsub)"
            ))),
        }
    }
}

/// A window of a series: `start..start + len`, 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SubseqRef {
    pub start: usize,
    pub len: usize,
}

impl SubseqRef {
    pub fn new(start: usize, len: usize) -> Self {
        SubseqRef { start, len }
    }

    /// Checks that the window fits a series of length `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.len == 0 {
            return Err(Error::InvalidParameter(
                "subsequence length must be positive".into(),
            ));
        }
        if self.start.checked_add(self.len).map_or(true, |end| end > n) {
            return Err(Error::SubseqOutOfRange {
                start: self.start,
                len: self.len,
                n,
            });
        }
        Ok(())
    }
}

/// Arithmetic mean.
pub fn mean(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "mean of empty sequence");
    values.iter().sum::<f64>() / values.len() as f64
}

fn population_std(values: &[f64], mu: f64) -> f64 {
    let var = values.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / values.len() as f64;
    var.sqrt()
}

/// z-normalizes to mean 0 and population standard deviation 1.
///
/// A constant input has no scale; it maps to the all-zero vector, which keeps
/// constant windows indexable and makes two constant windows twins at eps = 0.
pub fn znormalize(values: &[f64]) -> Vec<f64> {
    assert!(!values.is_empty(), "znormalize of empty sequence");
    let mu = mean(values);
    let sd = population_std(values, mu);
    if sd == 0.0 {
        vec![0.0; values.len()]
    } else {
        values.iter().map(|v| (v - mu) / sd).collect()
    }
}

struct GlobalZ {
    values: Vec<f64>,
    mean: f64,
    std: f64,
}

/// An immutable time series of finite values.
///
/// The globally z-normalized copy is computed once on first use and shared
/// afterwards; the series is safe to query from many threads.
pub struct TimeSeries {
    values: Vec<f64>,
    global_z: OnceLock<GlobalZ>,
}

impl fmt::Debug for TimeSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TimeSeries")
            .field("len", &self.values.len())
            .finish()
    }
}

impl Clone for TimeSeries {
    fn clone(&self) -> Self {
        TimeSeries {
            values: self.values.clone(),
            global_z: OnceLock::new(),
        }
    }
}

impl TimeSeries {
    /// Validates that the input is non-empty and finite.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(TimeSeries {
            values,
            global_z: OnceLock::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false // constructor rejects empty input
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of length-`l` windows, or an error if `l` does not fit.
    pub fn window_count(&self, l: usize) -> Result<usize> {
        if l == 0 {
            return Err(Error::InvalidParameter(
                "subsequence length must be positive".into(),
            ));
        }
        if l > self.values.len() {
            return Err(Error::LengthExceedsSeries {
                l,
                n: self.values.len(),
            });
        }
        Ok(self.values.len() - l + 1)
    }

    fn global_z(&self) -> &GlobalZ {
        self.global_z.get_or_init(|| {
            let mu = mean(&self.values);
            let sd = population_std(&self.values, mu);
            GlobalZ {
                values: znormalize(&self.values),
                mean: mu,
                std: sd,
            }
        })
    }

    /// The whole series z-normalized once.
    pub fn global_z_values(&self) -> &[f64] {
        &self.global_z().values
    }

    /// Global mean and population standard deviation of the raw values.
    pub fn global_stats(&self) -> (f64, f64) {
        let gz = self.global_z();
        (gz.mean, gz.std)
    }

    /// Extracts one window in the value frame of `mode`.
    pub fn materialize(&self, r: SubseqRef, mode: NormalizationMode) -> Result<Vec<f64>> {
        r.validate(self.values.len())?;
        let slice = &self.values[r.start..r.start + r.len];
        Ok(match mode {
            NormalizationMode::Raw => slice.to_vec(),
            NormalizationMode::GlobalZ => self.global_z().values[r.start..r.start + r.len].to_vec(),
            NormalizationMode::PerSubseqZ => znormalize(slice),
        })
    }
}

/// A query: the pattern values plus the Chebyshev threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    values: Vec<f64>,
    epsilon: f64,
}

impl Query {
    pub fn new(values: Vec<f64>, epsilon: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("query must be non-empty".into()));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(Error::InvalidEpsilon(epsilon));
        }
        Ok(Query { values, epsilon })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Same pattern at a different threshold.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Query::new(self.values.clone(), epsilon)
    }
}

/// Read-only view of all length-`l` windows of a series under one mode.
///
/// Every engine materializes and verifies candidates through this type, so a
/// window's values are computed by exactly one arithmetic path regardless of
/// which engine asks. Under [`NormalizationMode::PerSubseqZ`] the per-window
/// mean and deviation are precomputed once, which keeps verification O(l) per
/// candidate instead of O(l) plus a normalization pass.
pub struct Materializer<'a> {
    base: &'a [f64],
    l: usize,
    mode: NormalizationMode,
    // PerSubseqZ only; empty for the direct frames.
    window_mu: Vec<f64>,
    window_sigma: Vec<f64>,
}

impl<'a> Materializer<'a> {
    pub fn new(series: &'a TimeSeries, l: usize, mode: NormalizationMode) -> Result<Self> {
        let windows = series.window_count(l)?;
        let base: &[f64] = match mode {
            NormalizationMode::Raw | NormalizationMode::PerSubseqZ => series.values(),
            NormalizationMode::GlobalZ => series.global_z_values(),
        };
        let (window_mu, window_sigma) = if mode == NormalizationMode::PerSubseqZ {
            let mut mus = Vec::with_capacity(windows);
            let mut sigmas = Vec::with_capacity(windows);
            for p in 0..windows {
                let w = &base[p..p + l];
                let mu = mean(w);
                mus.push(mu);
                sigmas.push(population_std(w, mu));
            }
            (mus, sigmas)
        } else {
            (Vec::new(), Vec::new())
        };
        Ok(Materializer {
            base,
            l,
            mode,
            window_mu,
            window_sigma,
        })
    }

    pub fn series_len(&self) -> usize {
        self.base.len()
    }

    pub fn subseq_len(&self) -> usize {
        self.l
    }

    pub fn mode(&self) -> NormalizationMode {
        self.mode
    }

    pub fn window_count(&self) -> usize {
        self.base.len() - self.l + 1
    }

    /// Value `i` of the window starting at `p`, in this frame.
    #[inline]
    pub fn point(&self, p: usize, i: usize) -> f64 {
        debug_assert!(p < self.window_count() && i < self.l);
        let x = self.base[p + i];
        match self.mode {
            NormalizationMode::Raw | NormalizationMode::GlobalZ => x,
            NormalizationMode::PerSubseqZ => {
                let sd = self.window_sigma[p];
                if sd == 0.0 {
                    0.0
                } else {
                    (x - self.window_mu[p]) / sd
                }
            }
        }
    }

    /// The window at `p`; borrowed for the direct frames, owned under
    /// per-window normalization.
    pub fn window(&self, p: usize) -> Cow<'_, [f64]> {
        assert!(p < self.window_count(), "window start {p} out of range");
        match self.mode {
            NormalizationMode::Raw | NormalizationMode::GlobalZ => {
                Cow::Borrowed(&self.base[p..p + self.l])
            }
            NormalizationMode::PerSubseqZ => {
                let mut out = Vec::with_capacity(self.l);
                self.window_into(p, &mut out);
                Cow::Owned(out)
            }
        }
    }

    /// Writes the window at `p` into `out`, reusing its allocation.
    pub fn window_into(&self, p: usize, out: &mut Vec<f64>) {
        assert!(p < self.window_count(), "window start {p} out of range");
        out.clear();
        out.extend((0..self.l).map(|i| self.point(p, i)));
    }

    /// Early-abandoning twin check of the query against the window at `p`,
    /// visiting timestamps in the given order.
    #[inline]
    pub fn twin_at(&self, p: usize, query: &[f64], epsilon: f64, order: &[usize]) -> bool {
        debug_assert_eq!(query.len(), self.l);
        debug_assert_eq!(order.len(), self.l);
        for &i in order {
            if (query[i] - self.point(p, i)).abs() > epsilon {
                return false;
            }
        }
        true
    }

    /// Full Chebyshev distance from the query to the window at `p`, always
    /// visiting every timestamp. Same per-point arithmetic as
    /// [`Materializer::twin_at`], so `dist_at(p, q) <= eps` and
    /// `twin_at(p, q, eps, ..)` decide identically.
    #[inline]
    pub fn dist_at(&self, p: usize, query: &[f64]) -> f64 {
        debug_assert_eq!(query.len(), self.l);
        let mut max = 0.0_f64;
        for (i, q) in query.iter().enumerate() {
            let d = (q - self.point(p, i)).abs();
            if d > max {
                max = d;
            }
        }
        max
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(matches!(TimeSeries::new(vec![]), Err(Error::EmptySeries)));
        let err = TimeSeries::new(vec![1.0, f64::NAN, 3.0]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 1 }));
        let err = TimeSeries::new(vec![f64::INFINITY]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 0 }));
    }

    #[test]
    fn znormalize_constant_maps_to_zeros() {
        assert_eq!(znormalize(&[5.0, 5.0, 5.0]), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn znormalize_two_points() {
        assert_eq!(znormalize(&[0.0, 2.0]), vec![-1.0, 1.0]);
    }

    #[test]
    fn znormalize_moments_are_standard() {
        // Independent recomputation of the output moments.
        let mut x = 0.37_f64;
        let values: Vec<f64> = (0..100)
            .map(|_| {
                x = (x * 997.0 + 0.123).sin() * 3.0 + 1.7;
                x
            })
            .collect();
        let z = znormalize(&values);
        let m = z.iter().sum::<f64>() / z.len() as f64;
        let sd = (z.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / z.len() as f64).sqrt();
        assert!(m.abs() < 1e-9, "mean {m}");
        assert!((sd - 1.0).abs() < 1e-9, "std {sd}");
    }

    #[test]
    fn mean_basics() {
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        let z = znormalize(&[3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0]);
        assert!(mean(&z).abs() < 1e-9);
    }

    #[test]
    fn mean_matches_kahan_reference() {
        let mut x = 0.9_f64;
        let values: Vec<f64> = (0..10_000)
            .map(|_| {
                x = (x * 1.0001 + 0.71).fract();
                x * 2000.0 - 1000.0
            })
            .collect();
        // Kahan-compensated reference summation.
        let (mut sum, mut c) = (0.0_f64, 0.0_f64);
        for &v in &values {
            let y = v - c;
            let t = sum + y;
            c = (t - sum) - y;
            sum = t;
        }
        let reference = sum / values.len() as f64;
        assert!((mean(&values) - reference).abs() <= 1e-9 * (1.0 + reference.abs()));
    }

    #[test]
    fn materialize_raw_and_per_window() {
        let t = TimeSeries::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(
            t.materialize(SubseqRef::new(1, 2), NormalizationMode::Raw)
                .unwrap(),
            vec![2.0, 3.0]
        );
        let t2 = TimeSeries::new(vec![10.0, 10.0, 1.0]).unwrap();
        assert_eq!(
            t2.materialize(SubseqRef::new(0, 2), NormalizationMode::PerSubseqZ)
                .unwrap(),
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn materialize_global_z_equals_whole_series_normalization() {
        let values: Vec<f64> = (0..50).map(|i| ((i * 37) % 11) as f64 - 3.0).collect();
        let t = TimeSeries::new(values.clone()).unwrap();
        let z = znormalize(&values);
        for start in [0usize, 7, 30] {
            let got = t
                .materialize(SubseqRef::new(start, 13), NormalizationMode::GlobalZ)
                .unwrap();
            assert_eq!(got, z[start..start + 13].to_vec());
        }
    }

    #[test]
    fn materialize_rejects_out_of_range() {
        let t = TimeSeries::new(vec![1.0, 2.0, 3.0]).unwrap();
        let err = t
            .materialize(SubseqRef::new(2, 2), NormalizationMode::Raw)
            .unwrap_err();
        assert!(matches!(err, Error::SubseqOutOfRange { .. }));
    }

    #[test]
    fn materializer_agrees_with_materialize() {
        let values: Vec<f64> = (0..80)
            .map(|i| (i as f64 * 0.7).sin() * 5.0 + 2.0)
            .collect();
        let t = TimeSeries::new(values).unwrap();
        for mode in NormalizationMode::ALL {
            let m = Materializer::new(&t, 9, mode).unwrap();
            for p in [0usize, 17, 71] {
                let via_frame: Vec<f64> = m.window(p).into_owned();
                let via_series = t.materialize(SubseqRef::new(p, 9), mode).unwrap();
                assert_eq!(via_frame, via_series, "mode {mode} window {p}");
            }
        }
    }

    #[test]
    fn query_validation() {
        assert!(Query::new(vec![], 0.1).is_err());
        assert!(Query::new(vec![1.0], -0.5).is_err());
        assert!(Query::new(vec![1.0], f64::NAN).is_err());
        assert!(Query::new(vec![1.0], 0.0).is_ok());
    }

    #[test]
    fn mode_tokens_round_trip() {
        for mode in NormalizationMode::ALL {
            assert_eq!(mode.token().parse::<NormalizationMode>().unwrap(), mode);
        }
        assert!("zsubb".parse::<NormalizationMode>().is_err());
    }
}
