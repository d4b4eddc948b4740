//! Exact subsequence search under Chebyshev (L-infinity) distance.
//!
//! Given a long series `T`, a query `Q` of length `l` and a threshold
//! `epsilon`, find every window start `p` with
//! `max_i |Q_i - T[p + i]| <= epsilon` — windows whose values never stray
//! more than `epsilon` from the query at any timestamp. Four engines answer
//! the same question exactly:
//!
//! - [`sweep`]: exhaustive sliding-window scan, the correctness oracle;
//! - [`kv`]: inverted index over window means (twins can't differ in mean
//!   by more than the threshold);
//! - [`isax`]: SAX-word tree with a per-segment widened compatibility check;
//! - [`ts_index`]: a balanced tree of min/max envelopes whose band distance
//!   lower-bounds the Chebyshev distance to everything underneath.
//!
//! All filtering is conservative; every candidate is verified with an
//! early-abandoning check, so the result sets are identical across engines.

pub mod dist;
pub mod engine;
pub mod error;
pub mod ingest;
pub mod isax;
pub mod kv;
pub mod mbts;
pub mod persist;
pub mod series;
pub mod sweep;
pub mod ts_index;

pub use dist::{chebyshev, euclidean, is_twin, reorder_by_magnitude};
pub use engine::{Engine, SearchOutcome, SearchStats};
pub use error::{Error, Result};
pub use ingest::{generate, load_series, sample_workload, Generator, SeriesSource, Workload};
pub use isax::{IsaxConfig, IsaxIndex};
pub use kv::KvIndex;
pub use mbts::Mbts;
pub use persist::AnyIndex;
pub use series::{mean, znormalize, Materializer, NormalizationMode, Query, SubseqRef, TimeSeries};
pub use sweep::{sweepline_search, SweepEngine};
pub use ts_index::{TsIndex, TsIndexBuilder};
