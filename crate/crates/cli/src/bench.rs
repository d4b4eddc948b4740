//! Parameter sweeps with a CSV report.
//!
//! Mirrors the usual one-at-a-time methodology: each axis (threshold,
//! window length, segment count) is swept while the other parameters sit at
//! their defaults. Result sets are checked against the sweepline at every
//! point before any number is reported.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context};
use serde::Serialize;

use twinseq::{Materializer, NormalizationMode, TimeSeries, Workload};

use crate::args::{EngineKind, EngineParams, SourceArgs};
use crate::harness::{build_engine, result_count_checksum, run_workload, BuiltEngine, WorkloadRun};

pub const CSV_SCHEMA_VERSION: u32 = 1;

pub struct BenchOpts {
    pub source: SourceArgs,
    pub epsilon_list: Vec<f64>,
    pub l_list: Vec<usize>,
    pub m_list: Vec<usize>,
    /// Fixed threshold while other axes vary.
    pub epsilon: f64,
    /// Fixed window length while other axes vary.
    pub l: usize,
    pub mode: NormalizationMode,
    pub queries: usize,
    pub warmup: usize,
    pub workers: usize,
    pub workload_seed: u64,
    pub params: EngineParams,
    pub out: Option<PathBuf>,
}

/// One CSV row: an engine at a parameter point.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub schema_version: u32,
    pub axis: &'static str,
    pub engine: &'static str,
    pub dataset: String,
    pub n: usize,
    pub l: usize,
    pub mode: String,
    pub epsilon: f64,
    pub m: Option<usize>,
    pub mu_c: Option<usize>,
    pub max_c: Option<usize>,
    pub bucket_width: Option<f64>,
    pub cardinality: Option<u16>,
    pub leaf_cap: Option<usize>,
    pub queries: usize,
    pub warmup: usize,
    pub workload_seed: u64,
    pub build_ms: f64,
    pub index_file_bytes: u64,
    pub index_mem_bytes: u64,
    pub node_count: Option<usize>,
    pub avg_query_us: f64,
    pub median_query_us: f64,
    pub avg_candidates: f64,
    pub avg_nodes_visited: f64,
    pub avg_nodes_pruned: f64,
    pub avg_results: f64,
    pub total_results: u64,
    pub result_count_checksum: String,
}

pub fn cmd_bench(opts: &BenchOpts, out: &mut dyn Write) -> anyhow::Result<Vec<BenchRow>> {
    let (series, source) = opts.source.load()?;
    let dataset = source.to_string();
    writeln!(
        out,
        "bench over {dataset} ({} points), mode {}, {} queries + {} warmup, {} worker(s)",
        series.len(),
        opts.mode,
        opts.queries,
        opts.warmup,
        opts.workers.max(1)
    )?;

    let mut rows = Vec::new();

    // Threshold axis: one set of builds at the default length.
    let point = SweepPoint::prepare(&series, opts, opts.l, engines_for(opts.mode))?;
    for &epsilon in &opts.epsilon_list {
        rows.extend(point.measure("epsilon", epsilon, opts, &dataset, out)?);
    }

    // Length axis: fresh builds per length, fixed threshold.
    for &l in &opts.l_list {
        let point = SweepPoint::prepare(&series, opts, l, engines_for(opts.mode))?;
        rows.extend(point.measure("length", opts.epsilon, opts, &dataset, out)?);
    }

    // Segment axis: only the SAX engine has segments; the sweepline rides
    // along as the exactness reference.
    for &m in &opts.m_list {
        let mut params = opts.params;
        params.m = m;
        let point = SweepPoint::prepare_with_params(
            &series,
            opts,
            opts.l,
            vec![EngineKind::Sweep, EngineKind::Isax],
            &params,
        )?;
        let measured = point.measure("segments", opts.epsilon, opts, &dataset, out)?;
        rows.extend(
            measured
                .into_iter()
                .filter(|r| r.engine == EngineKind::Isax.name()),
        );
    }

    if let Some(path) = &opts.out {
        let mut writer = csv::Writer::from_path(path)
            .with_context(|| format!("creating report {}", path.display()))?;
        for row in &rows {
            writer.serialize(row)?;
        }
        writer.flush()?;
        writeln!(out, "wrote {} rows to {}", rows.len(), path.display())?;
    }
    Ok(rows)
}

fn round3(x: f64) -> f64 {
    (x * 1e3).round() / 1e3
}

fn engines_for(mode: NormalizationMode) -> Vec<EngineKind> {
    let mut engines = vec![EngineKind::Sweep];
    engines.extend(
        EngineKind::INDEXED
            .into_iter()
            .filter(|k| !(mode == NormalizationMode::PerSubseqZ && *k == EngineKind::Kv)),
    );
    engines
}

/// Builds and a workload for one `(l, params)` point, reusable across
/// thresholds.
struct SweepPoint<'a> {
    frame: Materializer<'a>,
    workload: Workload,
    built: Vec<BuiltEngine>,
    params: EngineParams,
    l: usize,
}

impl<'a> SweepPoint<'a> {
    fn prepare(
        series: &'a TimeSeries,
        opts: &BenchOpts,
        l: usize,
        engines: Vec<EngineKind>,
    ) -> anyhow::Result<SweepPoint<'a>> {
        Self::prepare_with_params(series, opts, l, engines, &opts.params)
    }

    fn prepare_with_params(
        series: &'a TimeSeries,
        opts: &BenchOpts,
        l: usize,
        engines: Vec<EngineKind>,
        params: &EngineParams,
    ) -> anyhow::Result<SweepPoint<'a>> {
        let frame = Materializer::new(series, l, opts.mode)?;
        let workload =
            twinseq::sample_workload(series, opts.queries, l, opts.workload_seed, opts.mode)?;
        let built = engines
            .iter()
            .map(|&k| build_engine(series, k, l, opts.mode, params))
            .collect::<anyhow::Result<Vec<_>>>()?;
        Ok(SweepPoint {
            frame,
            workload,
            built,
            params: *params,
            l,
        })
    }

    fn measure(
        &self,
        axis: &'static str,
        epsilon: f64,
        opts: &BenchOpts,
        dataset: &str,
        out: &mut dyn Write,
    ) -> anyhow::Result<Vec<BenchRow>> {
        let mut rows = Vec::new();
        let mut reference: Option<&WorkloadRun> = None;
        let mut runs = Vec::new();
        for b in &self.built {
            runs.push(run_workload(
                b.as_engine(),
                &self.frame,
                &self.workload,
                epsilon,
                opts.warmup,
                opts.workers,
            )?);
        }
        // Exactness gate: every engine must reproduce the sweepline result
        // sets before its numbers are worth anything.
        for (b, run) in self.built.iter().zip(&runs) {
            match (b.kind, &mut reference) {
                (EngineKind::Sweep, r) => *r = Some(run),
                (kind, Some(r)) => {
                    for (qi, (got, want)) in run.results.iter().zip(&r.results).enumerate() {
                        if got != want {
                            bail!(
                                "exactness gate: engine {} disagrees with sweepline at \
                                 l={} epsilon={} query#{qi} (source position {})",
                                kind.name(),
                                self.l,
                                epsilon,
                                self.workload.queries[qi].1
                            );
                        }
                    }
                }
                (kind, None) => bail!("no sweepline reference ahead of engine {}", kind.name()),
            }
        }

        for (b, run) in self.built.iter().zip(&runs) {
            let row = self.row_for(axis, epsilon, opts, dataset, b, run);
            writeln!(
                out,
                "{axis:>9} {:>6} eps={epsilon:<7} l={:<4} {:>9.1}us med {:>9.1}us cand {:>10.1} res {:>9.1}",
                b.kind.name(),
                self.l,
                row.avg_query_us,
                row.median_query_us,
                row.avg_candidates,
                row.avg_results,
            )?;
            rows.push(row);
        }
        Ok(rows)
    }

    fn row_for(
        &self,
        axis: &'static str,
        epsilon: f64,
        opts: &BenchOpts,
        dataset: &str,
        built: &BuiltEngine,
        run: &WorkloadRun,
    ) -> BenchRow {
        let kind = built.kind;
        let file_bytes = built.to_bytes().map(|b| b.len() as u64).unwrap_or(0);
        BenchRow {
            schema_version: CSV_SCHEMA_VERSION,
            axis,
            engine: kind.name(),
            dataset: dataset.to_string(),
            n: self.frame.series_len(),
            l: self.l,
            mode: opts.mode.to_string(),
            epsilon,
            m: (kind == EngineKind::Isax).then_some(self.params.m),
            mu_c: (kind == EngineKind::Ts).then_some(self.params.mu_c),
            max_c: (kind == EngineKind::Ts).then_some(self.params.max_c),
            bucket_width: (kind == EngineKind::Kv).then(|| match &built.engine {
                crate::harness::EngineImpl::Index(twinseq::AnyIndex::Kv(kv)) => kv.bucket_width(),
                _ => unreachable!("kv engine carries a kv index"),
            }),
            cardinality: (kind == EngineKind::Isax).then_some(self.params.cardinality),
            leaf_cap: (kind == EngineKind::Isax).then_some(self.params.leaf_cap),
            queries: opts.queries,
            warmup: opts.warmup,
            workload_seed: opts.workload_seed,
            build_ms: round3(built.build_time.as_secs_f64() * 1e3),
            index_file_bytes: file_bytes,
            index_mem_bytes: built.memory_bytes() as u64,
            node_count: built.node_count(),
            avg_query_us: round3(run.avg_latency_us()),
            median_query_us: round3(run.median_latency_us()),
            avg_candidates: round3(run.avg_of(|s| s.candidates)),
            avg_nodes_visited: round3(run.avg_of(|s| s.nodes_visited)),
            avg_nodes_pruned: round3(run.avg_of(|s| s.nodes_pruned)),
            avg_results: round3(run.avg_of(|s| s.results)),
            total_results: run.total_results(),
            result_count_checksum: format!("{:016x}", result_count_checksum(&run.results)),
        }
    }
}
