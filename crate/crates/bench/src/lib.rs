//! Shared fixtures for the criterion benchmarks.

use twinseq::{generate, Generator, Materializer, NormalizationMode, Query, TimeSeries};

pub const BENCH_N: usize = 20_000;
pub const BENCH_L: usize = 100;
pub const BENCH_SEED: u64 = 42;
pub const BENCH_MODE: NormalizationMode = NormalizationMode::GlobalZ;

pub fn bench_series() -> TimeSeries {
    generate(Generator::RandomWalk, BENCH_N, BENCH_SEED).expect("valid generator parameters")
}

/// A query extracted from the series itself, in the bench frame.
pub fn bench_query(series: &TimeSeries, position: usize, epsilon: f64) -> Query {
    let frame = Materializer::new(series, BENCH_L, BENCH_MODE).expect("valid frame");
    Query::new(frame.window(position).into_owned(), epsilon).expect("valid query")
}
