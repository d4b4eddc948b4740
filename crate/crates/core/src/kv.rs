//! Inverted index over window mean values.
//!
//! Two twins can never differ in mean by more than the threshold, so probing
//! the mean buckets within `epsilon` of the query mean yields a candidate
//! superset. Useless under per-window z-normalization, where every mean is
//! zero; construction rejects that mode outright.

use std::collections::BTreeMap;
use std::time::Instant;

use crate::engine::{check_frame, verification_order, Engine, SearchOutcome, SearchStats};
use crate::error::{Error, Result};
use crate::series::{Materializer, NormalizationMode, Query, TimeSeries};

/// Inclusive position interval; adjacent window starts that share a bucket
/// coalesce into one entry.
pub type PosInterval = (usize, usize);

/// Bucketed mean-value index for one `(series, l, mode)` combination.
#[derive(Debug, Clone, PartialEq)]
pub struct KvIndex {
    pub(crate) l: usize,
    pub(crate) bucket_width: f64,
    pub(crate) mode: NormalizationMode,
    pub(crate) series_len: usize,
    pub(crate) table: BTreeMap<i64, Vec<PosInterval>>,
}

impl KvIndex {
    /// Buckets every window mean with a rolling sum. `bucket_width` must be
    /// positive; per-window z-normalization is rejected.
    pub fn build(
        series: &TimeSeries,
        l: usize,
        bucket_width: f64,
        mode: NormalizationMode,
    ) -> Result<KvIndex> {
        if mode == NormalizationMode::PerSubseqZ {
            return Err(Error::UnsupportedMode(mode));
        }
        if !(bucket_width.is_finite() && bucket_width > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "bucket width must be positive, got {bucket_width}"
            )));
        }
        let windows = series.window_count(l)?;
        let base: &[f64] = match mode {
            NormalizationMode::Raw => series.values(),
            NormalizationMode::GlobalZ => series.global_z_values(),
            NormalizationMode::PerSubseqZ => unreachable!(),
        };

        let mut table: BTreeMap<i64, Vec<PosInterval>> = BTreeMap::new();
        let mut sum: f64 = base[..l].iter().sum();
        for p in 0..windows {
            if p > 0 {
                sum += base[p + l - 1] - base[p - 1];
            }
            let bucket = (sum / l as f64 / bucket_width).floor() as i64;
            let intervals = table.entry(bucket).or_default();
            match intervals.last_mut() {
                Some(last) if last.1 + 1 == p => last.1 = p,
                _ => intervals.push((p, p)),
            }
        }
        Ok(KvIndex {
            l,
            bucket_width,
            mode,
            series_len: series.len(),
            table,
        })
    }

    pub fn subseq_len(&self) -> usize {
        self.l
    }

    pub fn mode(&self) -> NormalizationMode {
        self.mode
    }

    pub fn bucket_width(&self) -> f64 {
        self.bucket_width
    }

    pub fn series_len(&self) -> usize {
        self.series_len
    }

    pub fn bucket_count(&self) -> usize {
        self.table.len()
    }

    pub fn interval_count(&self) -> usize {
        self.table.values().map(Vec::len).sum()
    }

    /// All window starts whose bucket may contain a mean within `epsilon` of
    /// `query_mean`, ascending within each bucket. A guaranteed candidate
    /// superset: the probed id range is padded by one bucket on each side,
    /// erring toward inclusion so boundary values and rolling-sum drift can
    /// never drop a true twin.
    pub fn candidates(&self, query_mean: f64, epsilon: f64) -> impl Iterator<Item = usize> + '_ {
        let lo = ((query_mean - epsilon) / self.bucket_width).floor() as i64 - 1;
        let hi = ((query_mean + epsilon) / self.bucket_width).floor() as i64 + 1;
        self.table
            .range(lo..=hi)
            .flat_map(|(_, intervals)| intervals.iter().flat_map(|&(a, b)| a..=b))
    }

    /// The number of buckets the probe range touches.
    fn probed_buckets(&self, query_mean: f64, epsilon: f64) -> usize {
        let lo = ((query_mean - epsilon) / self.bucket_width).floor() as i64 - 1;
        let hi = ((query_mean + epsilon) / self.bucket_width).floor() as i64 + 1;
        self.table.range(lo..=hi).count()
    }

    /// Filters by mean bucket, then verifies every candidate.
    pub fn search(&self, frame: &Materializer<'_>, query: &Query) -> Result<SearchOutcome> {
        check_frame(frame, query, self.l, self.mode, self.series_len)?;
        let started = Instant::now();
        let order = verification_order(query.values(), self.mode);
        let epsilon = query.epsilon();
        let query_mean = crate::series::mean(query.values());

        let mut stats = SearchStats {
            nodes_visited: self.probed_buckets(query_mean, epsilon) as u64,
            ..SearchStats::default()
        };
        let mut positions = Vec::new();
        for p in self.candidates(query_mean, epsilon) {
            stats.candidates += 1;
            if frame.twin_at(p, query.values(), epsilon, &order) {
                positions.push(p);
            }
        }
        positions.sort_unstable();
        stats.results = positions.len() as u64;
        stats.elapsed = started.elapsed();
        Ok(SearchOutcome { positions, stats })
    }

    /// Documented memory accounting: map entry overhead plus 16 bytes per
    /// interval.
    pub fn memory_bytes(&self) -> usize {
        std::mem::size_of::<KvIndex>()
            + self.table.len() * (8 + std::mem::size_of::<Vec<PosInterval>>())
            + self.interval_count() * std::mem::size_of::<PosInterval>()
    }
}

impl Engine for KvIndex {
    fn name(&self) -> &'static str {
        "kv"
    }

    fn subseq_len(&self) -> usize {
        self.l
    }

    fn mode(&self) -> NormalizationMode {
        self.mode
    }

    fn search(&self, frame: &Materializer<'_>, query: &Query) -> Result<SearchOutcome> {
        KvIndex::search(self, frame, query)
    }
}

/// Default bucket width: a fixed fraction of scale for z-normalized frames,
/// a fixed fraction of the value range for raw data.
pub fn default_bucket_width(series: &TimeSeries, mode: NormalizationMode) -> f64 {
    match mode {
        NormalizationMode::GlobalZ | NormalizationMode::PerSubseqZ => 0.1,
        NormalizationMode::Raw => {
            let (min, max) = series
                .values()
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                });
            let range = max - min;
            if range > 0.0 {
                range / 1000.0
            } else {
                0.1
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::SubseqRef;
    use crate::sweep;

    fn lcg_series(seed: u64, n: usize) -> TimeSeries {
        let mut state = seed;
        let mut acc = 0.0;
        let values = (0..n)
            .map(|_| {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                acc += ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0;
                acc
            })
            .collect();
        TimeSeries::new(values).unwrap()
    }

    #[test]
    fn constant_series_collapses_to_one_interval() {
        let t = TimeSeries::new(vec![3.0; 100]).unwrap();
        let idx = KvIndex::build(&t, 10, 0.5, NormalizationMode::Raw).unwrap();
        assert_eq!(idx.bucket_count(), 1);
        let intervals = idx.table.values().next().unwrap();
        assert_eq!(intervals.as_slice(), &[(0, 90)]);
    }

    #[test]
    fn steep_ramp_yields_singleton_intervals() {
        let t = TimeSeries::new((0..20).map(|i| i as f64 * 10.0).collect()).unwrap();
        let idx = KvIndex::build(&t, 2, 1.0, NormalizationMode::Raw).unwrap();
        assert_eq!(idx.interval_count(), 19);
        for intervals in idx.table.values() {
            for &(a, b) in intervals {
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn per_window_mode_is_rejected() {
        let t = lcg_series(1, 100);
        assert!(matches!(
            KvIndex::build(&t, 10, 0.1, NormalizationMode::PerSubseqZ),
            Err(Error::UnsupportedMode(NormalizationMode::PerSubseqZ))
        ));
    }

    #[test]
    fn every_recomputed_mean_lands_in_its_bucket() {
        let t = lcg_series(5, 3_000);
        let l = 25;
        let mode = NormalizationMode::GlobalZ;
        let w = 0.05;
        let idx = KvIndex::build(&t, l, w, mode).unwrap();
        let mut owner = vec![None; t.len() - l + 1];
        for (&bucket, intervals) in &idx.table {
            for &(a, b) in intervals {
                for (p, slot) in owner.iter_mut().enumerate().take(b + 1).skip(a) {
                    assert!(slot.is_none(), "position {p} in two buckets");
                    *slot = Some(bucket);
                }
            }
        }
        for (p, bucket) in owner.iter().enumerate() {
            let bucket = bucket.expect("position missing from the table") as f64;
            let mu = crate::series::mean(&t.materialize(SubseqRef::new(p, l), mode).unwrap());
            // Recomputed naively; allow the bucket edges a hair of slack for
            // rolling-sum drift.
            assert!(
                mu >= bucket * w - 1e-9 && mu <= (bucket + 1.0) * w + 1e-9,
                "mean {mu} outside bucket {bucket}"
            );
        }
    }

    #[test]
    fn huge_epsilon_returns_every_position() {
        let t = lcg_series(9, 500);
        let idx = KvIndex::build(&t, 20, 0.1, NormalizationMode::GlobalZ).unwrap();
        let got: Vec<usize> = idx.candidates(0.0, 1e6).collect();
        let mut sorted = got.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..=480).collect::<Vec<_>>());
    }

    #[test]
    fn empty_region_produces_no_candidates() {
        let t = TimeSeries::new(vec![0.0, 0.0, 0.0, 0.0]).unwrap();
        let idx = KvIndex::build(&t, 2, 0.5, NormalizationMode::Raw).unwrap();
        assert_eq!(idx.candidates(100.0, 0.0).count(), 0);
    }

    #[test]
    fn candidates_are_a_superset_of_true_twins() {
        let t = lcg_series(13, 8_000);
        let l = 50;
        let mode = NormalizationMode::GlobalZ;
        let idx = KvIndex::build(&t, l, 0.1, mode).unwrap();
        for &p in &[10usize, 2_500, 7_000] {
            for eps in [0.0, 0.1, 0.4] {
                let q =
                    Query::new(t.materialize(SubseqRef::new(p, l), mode).unwrap(), eps).unwrap();
                let truth = sweep::sweepline_search(&t, &q, mode).unwrap();
                let cands: std::collections::HashSet<usize> = idx
                    .candidates(crate::series::mean(q.values()), eps)
                    .collect();
                for hit in truth {
                    assert!(cands.contains(&hit), "lost twin at {hit} (eps {eps})");
                }
            }
        }
    }

    #[test]
    fn search_matches_sweepline() {
        let t = lcg_series(17, 10_000);
        let l = 40;
        for mode in [NormalizationMode::Raw, NormalizationMode::GlobalZ] {
            let width = default_bucket_width(&t, mode);
            let idx = KvIndex::build(&t, l, width, mode).unwrap();
            let frame = Materializer::new(&t, l, mode).unwrap();
            for &p in &[0usize, 4_321, 9_900] {
                for eps_scale in [0.0, 0.5, 2.0] {
                    let eps = eps_scale
                        * if mode == NormalizationMode::Raw {
                            5.0
                        } else {
                            0.15
                        };
                    let q = Query::new(t.materialize(SubseqRef::new(p, l), mode).unwrap(), eps)
                        .unwrap();
                    let expected = sweep::search_frame(&frame, &q).positions;
                    let got = idx.search(&frame, &q).unwrap();
                    assert_eq!(got.positions, expected);
                    assert!(got.stats.candidates >= got.stats.results);
                }
            }
        }
    }

    #[test]
    fn candidate_counts_grow_with_epsilon_and_nested_widths() {
        let t = lcg_series(19, 4_000);
        let l = 30;
        let mode = NormalizationMode::GlobalZ;
        let base_w = 0.05;
        let widths = [base_w, base_w * 2.0, base_w * 4.0];
        let indices: Vec<KvIndex> = widths
            .iter()
            .map(|&w| KvIndex::build(&t, l, w, mode).unwrap())
            .collect();
        let q_mean = 0.3;
        let mut last_by_eps = [0usize; 4];
        for (wi, idx) in indices.iter().enumerate() {
            let mut last = 0usize;
            for (ei, eps) in [0.0, 0.1, 0.2, 0.4].into_iter().enumerate() {
                let count = idx.candidates(q_mean, eps).count();
                assert!(count >= last, "epsilon monotonicity broke at width {wi}");
                last = count;
                if wi > 0 {
                    assert!(
                        count >= last_by_eps[ei],
                        "doubling the width shrank the candidates"
                    );
                }
                last_by_eps[ei] = count;
            }
        }
    }
}
