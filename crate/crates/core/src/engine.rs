//! Common query interface implemented by every search engine.

use std::time::Duration;

use crate::dist::{identity_order, reorder_by_magnitude};
use crate::error::{Error, Result};
use crate::series::{Materializer, NormalizationMode, Query};

/// Per-query instrumentation. `candidates` counts positions that reached
/// verification; filtering engines keep it far below the window count.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub nodes_visited: u64,
    pub nodes_pruned: u64,
    pub candidates: u64,
    pub results: u64,
    pub elapsed: Duration,
}

/// Sorted match positions plus the stats gathered while finding them.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub positions: Vec<usize>,
    pub stats: SearchStats,
}

/// A twin-subsequence search engine. All implementations return exactly the
/// set of window starts whose Chebyshev distance to the query is within the
/// threshold; they differ only in how much work filtering saves.
pub trait Engine: Sync {
    fn name(&self) -> &'static str;

    /// Window length this engine answers queries for.
    fn subseq_len(&self) -> usize;

    fn mode(&self) -> NormalizationMode;

    /// Runs the query against the frame. The frame must present the same
    /// series, window length and normalization mode the engine was built
    /// for; the query must already be expressed in that frame.
    fn search(&self, frame: &Materializer<'_>, query: &Query) -> Result<SearchOutcome>;
}

/// Timestamp visit order for verification: magnitude-reordered under
/// z-normalized frames, natural order on raw values.
pub fn verification_order(query: &[f64], mode: NormalizationMode) -> Vec<usize> {
    match mode {
        NormalizationMode::Raw => identity_order(query.len()),
        NormalizationMode::GlobalZ | NormalizationMode::PerSubseqZ => reorder_by_magnitude(query),
    }
}

pub(crate) fn check_frame(
    frame: &Materializer<'_>,
    query: &Query,
    l: usize,
    mode: NormalizationMode,
    series_len: usize,
) -> Result<()> {
    if frame.mode() != mode {
        return Err(Error::ModeMismatch {
            frame: frame.mode(),
            index: mode,
        });
    }
    if frame.subseq_len() != l {
        return Err(Error::QueryLengthMismatch {
            query: frame.subseq_len(),
            index: l,
        });
    }
    if query.len() != l {
        return Err(Error::QueryLengthMismatch {
            query: query.len(),
            index: l,
        });
    }
    if frame.series_len() != series_len {
        return Err(Error::SeriesLengthMismatch {
            frame: frame.series_len(),
            index: series_len,
        });
    }
    Ok(())
}
