//! Sweepline scan: the exhaustive engine and correctness oracle.
//!
//! Slides a window of the query's length over the series and computes the
//! full distance at every position. No filtering and no abandoning, so the
//! cost per query is fixed regardless of the threshold; every other engine
//! is tested against this one.

use std::time::Instant;

use crate::engine::{check_frame, Engine, SearchOutcome, SearchStats};
use crate::error::Result;
use crate::series::{Materializer, NormalizationMode, Query, TimeSeries};

/// Exhaustive scan engine.
#[derive(Debug, Clone)]
pub struct SweepEngine {
    l: usize,
    mode: NormalizationMode,
    series_len: usize,
}

impl SweepEngine {
    pub fn new(series: &TimeSeries, l: usize, mode: NormalizationMode) -> Result<Self> {
        series.window_count(l)?;
        Ok(SweepEngine {
            l,
            mode,
            series_len: series.len(),
        })
    }
}

impl Engine for SweepEngine {
    fn name(&self) -> &'static str {
        "sweep"
    }

    fn subseq_len(&self) -> usize {
        self.l
    }

    fn mode(&self) -> NormalizationMode {
        self.mode
    }

    fn search(&self, frame: &Materializer<'_>, query: &Query) -> Result<SearchOutcome> {
        check_frame(frame, query, self.l, self.mode, self.series_len)?;
        Ok(search_frame(frame, query))
    }
}

/// Scans every window of `frame`, returning match positions in ascending
/// order. The frame and query must share a length and normalization frame.
pub fn search_frame(frame: &Materializer<'_>, query: &Query) -> SearchOutcome {
    let started = Instant::now();
    let epsilon = query.epsilon();
    let mut positions = Vec::new();
    for p in 0..frame.window_count() {
        if frame.dist_at(p, query.values()) <= epsilon {
            positions.push(p);
        }
    }
    let stats = SearchStats {
        nodes_visited: 0,
        nodes_pruned: 0,
        candidates: frame.window_count() as u64,
        results: positions.len() as u64,
        elapsed: started.elapsed(),
    };
    SearchOutcome { positions, stats }
}

/// One-shot oracle: all window starts within `query.epsilon()` of the query
/// under `mode`, ascending.
pub fn sweepline_search(
    series: &TimeSeries,
    query: &Query,
    mode: NormalizationMode,
) -> Result<Vec<usize>> {
    let frame = Materializer::new(series, query.len(), mode)?;
    Ok(search_frame(&frame, query).positions)
}
