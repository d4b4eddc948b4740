//! Shared machinery: engine construction, workload execution, checksums.

use std::time::{Duration, Instant};

use anyhow::{bail, Context};

use twinseq::{
    AnyIndex, Engine, IsaxConfig, IsaxIndex, KvIndex, Materializer, NormalizationMode, Query,
    SearchStats, SweepEngine, TimeSeries, TsIndex, Workload,
};

use crate::args::{EngineKind, EngineParams};

/// A ready-to-query engine plus its construction costs.
pub struct BuiltEngine {
    pub kind: EngineKind,
    pub engine: EngineImpl,
    pub build_time: Duration,
}

pub enum EngineImpl {
    Sweep(SweepEngine),
    Index(AnyIndex),
}

impl BuiltEngine {
    pub fn as_engine(&self) -> &dyn Engine {
        match &self.engine {
            EngineImpl::Sweep(e) => e,
            EngineImpl::Index(i) => i.engine(),
        }
    }

    /// Serialized form, if this engine has one.
    pub fn to_bytes(&self) -> Option<Vec<u8>> {
        match &self.engine {
            EngineImpl::Sweep(_) => None,
            EngineImpl::Index(i) => Some(i.to_bytes()),
        }
    }

    pub fn memory_bytes(&self) -> usize {
        match &self.engine {
            EngineImpl::Sweep(_) => 0,
            EngineImpl::Index(i) => i.memory_bytes(),
        }
    }

    pub fn node_count(&self) -> Option<usize> {
        match &self.engine {
            EngineImpl::Sweep(_) | EngineImpl::Index(AnyIndex::Kv(_)) => None,
            EngineImpl::Index(AnyIndex::Ts(i)) => Some(i.node_count()),
            EngineImpl::Index(AnyIndex::Isax(i)) => Some(i.node_count()),
        }
    }
}

/// Builds one engine over the series, timing the construction.
pub fn build_engine(
    series: &TimeSeries,
    kind: EngineKind,
    l: usize,
    mode: NormalizationMode,
    params: &EngineParams,
) -> anyhow::Result<BuiltEngine> {
    let started = Instant::now();
    let engine = match kind {
        EngineKind::Sweep => EngineImpl::Sweep(SweepEngine::new(series, l, mode)?),
        EngineKind::Ts => EngineImpl::Index(AnyIndex::Ts(TsIndex::build(
            series,
            l,
            params.mu_c,
            params.max_c,
            mode,
        )?)),
        EngineKind::Kv => {
            let width = params
                .bucket_width
                .unwrap_or_else(|| twinseq::kv::default_bucket_width(series, mode));
            EngineImpl::Index(AnyIndex::Kv(KvIndex::build(series, l, width, mode)?))
        }
        EngineKind::Isax => {
            let config = IsaxConfig {
                segments: params.m,
                base_cardinality: params.cardinality,
                max_cardinality: params.max_cardinality,
                leaf_cap: params.leaf_cap,
            };
            EngineImpl::Index(AnyIndex::Isax(IsaxIndex::build(series, l, config, mode)?))
        }
    };
    Ok(BuiltEngine {
        kind,
        engine,
        build_time: started.elapsed(),
    })
}

/// Per-workload measurements for one engine at one parameter point.
pub struct WorkloadRun {
    pub latencies: Vec<Duration>,
    pub stats: Vec<SearchStats>,
    pub results: Vec<Vec<usize>>,
}

impl WorkloadRun {
    pub fn total_results(&self) -> u64 {
        self.stats.iter().map(|s| s.results).sum()
    }

    pub fn avg_of(&self, f: impl Fn(&SearchStats) -> u64) -> f64 {
        self.stats.iter().map(|s| f(s) as f64).sum::<f64>() / self.stats.len() as f64
    }

    pub fn avg_latency_us(&self) -> f64 {
        self.latencies
            .iter()
            .map(|d| d.as_secs_f64() * 1e6)
            .sum::<f64>()
            / self.latencies.len() as f64
    }

    pub fn median_latency_us(&self) -> f64 {
        let mut v: Vec<f64> = self
            .latencies
            .iter()
            .map(|d| d.as_secs_f64() * 1e6)
            .collect();
        v.sort_by(|a, b| a.partial_cmp(b).expect("finite latencies"));
        v[v.len() / 2]
    }
}

/// Runs every workload query at `epsilon`, discarding `warmup` leading runs.
/// With `workers > 1` the queries fan out over a scoped thread pool; each
/// query is still timed individually.
pub fn run_workload(
    engine: &dyn Engine,
    frame: &Materializer<'_>,
    workload: &Workload,
    epsilon: f64,
    warmup: usize,
    workers: usize,
) -> anyhow::Result<WorkloadRun> {
    if workload.queries.is_empty() {
        bail!("empty workload");
    }
    for (values, _) in workload.queries.iter().take(warmup) {
        let q = Query::new(values.clone(), epsilon)?;
        engine.search(frame, &q)?;
    }

    let run_one = |values: &Vec<f64>| -> anyhow::Result<(Duration, SearchStats, Vec<usize>)> {
        let q = Query::new(values.clone(), epsilon)?;
        let started = Instant::now();
        let outcome = engine.search(frame, &q)?;
        Ok((started.elapsed(), outcome.stats, outcome.positions))
    };

    let measured: Vec<(Duration, SearchStats, Vec<usize>)> = if workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .context("building worker pool")?;
        pool.install(|| {
            use rayon::prelude::*;
            workload
                .queries
                .par_iter()
                .map(|(values, _)| run_one(values))
                .collect::<anyhow::Result<Vec<_>>>()
        })?
    } else {
        workload
            .queries
            .iter()
            .map(|(values, _)| run_one(values))
            .collect::<anyhow::Result<Vec<_>>>()?
    };

    let mut run = WorkloadRun {
        latencies: Vec::with_capacity(measured.len()),
        stats: Vec::with_capacity(measured.len()),
        results: Vec::with_capacity(measured.len()),
    };
    for (latency, stats, positions) in measured {
        run.latencies.push(latency);
        run.stats.push(stats);
        run.results.push(positions);
    }
    Ok(run)
}

/// FNV-1a over the per-query result counts, in workload order. Engines that
/// agree on every result set agree on this value.
pub fn result_count_checksum(results: &[Vec<usize>]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for r in results {
        for byte in (r.len() as u64).to_le_bytes() {
            hash ^= byte as u64;
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    hash
}
