//! Cross-engine validation against the sweepline oracle.

use std::io::Write;

use anyhow::bail;

use twinseq::{Materializer, NormalizationMode};

use crate::args::{EngineKind, EngineParams, SourceArgs};
use crate::harness::{build_engine, run_workload};

pub struct CompareOpts {
    pub source: SourceArgs,
    pub l_list: Vec<usize>,
    pub epsilon_list: Vec<f64>,
    pub mode: NormalizationMode,
    pub queries: usize,
    pub workload_seed: u64,
    pub params: EngineParams,
}

/// One result-set disagreement with the oracle.
#[derive(Debug, Clone)]
pub struct Mismatch {
    pub engine: &'static str,
    pub l: usize,
    pub epsilon: f64,
    pub query_index: usize,
    pub query_pos: usize,
}

/// Runs every indexed engine over the `(l, epsilon)` grid and checks each
/// result set against the sweepline. Returns all mismatches (empty = pass).
pub fn cmd_compare(opts: &CompareOpts, out: &mut dyn Write) -> anyhow::Result<Vec<Mismatch>> {
    let (series, source) = opts.source.load()?;
    writeln!(
        out,
        "series {source} ({} points), mode {}, {} queries (seed {})",
        series.len(),
        opts.mode,
        opts.queries,
        opts.workload_seed
    )?;

    if opts.mode == NormalizationMode::PerSubseqZ {
        // The mean filter cannot work here; require the loud error.
        match twinseq::KvIndex::build(&series, opts.l_list[0], 0.1, opts.mode) {
            Err(twinseq::Error::UnsupportedMode(_)) => {
                writeln!(
                    out,
                    "kv: skipped (rejects per-window normalization, as required)"
                )?;
            }
            Err(other) => bail!("kv build failed with the wrong error: {other}"),
            Ok(_) => bail!("kv index unexpectedly accepted per-window normalization"),
        }
    }

    let engines: Vec<EngineKind> = EngineKind::INDEXED
        .into_iter()
        .filter(|k| !(opts.mode == NormalizationMode::PerSubseqZ && *k == EngineKind::Kv))
        .collect();

    let mut mismatches = Vec::new();
    writeln!(
        out,
        "{:>6} {:>8} {:>9} {:>6} {:>14} {:>12}",
        "l", "engine", "epsilon", "check", "avg_candidates", "avg_results"
    )?;
    for &l in &opts.l_list {
        let frame = Materializer::new(&series, l, opts.mode)?;
        let workload =
            twinseq::sample_workload(&series, opts.queries, l, opts.workload_seed, opts.mode)?;
        let sweep = build_engine(&series, EngineKind::Sweep, l, opts.mode, &opts.params)?;
        let built: Vec<_> = engines
            .iter()
            .map(|&k| build_engine(&series, k, l, opts.mode, &opts.params))
            .collect::<anyhow::Result<_>>()?;

        for &epsilon in &opts.epsilon_list {
            let reference = run_workload(sweep.as_engine(), &frame, &workload, epsilon, 0, 1)?;
            writeln!(
                out,
                "{:>6} {:>8} {:>9.4} {:>6} {:>14.1} {:>12.1}",
                l,
                "sweep",
                epsilon,
                "-",
                reference.avg_of(|s| s.candidates),
                reference.avg_of(|s| s.results),
            )?;
            for b in &built {
                let run = run_workload(b.as_engine(), &frame, &workload, epsilon, 0, 1)?;
                let mut ok = true;
                for (qi, (got, want)) in run.results.iter().zip(&reference.results).enumerate() {
                    if got != want {
                        ok = false;
                        mismatches.push(Mismatch {
                            engine: b.kind.name(),
                            l,
                            epsilon,
                            query_index: qi,
                            query_pos: workload.queries[qi].1,
                        });
                    }
                }
                writeln!(
                    out,
                    "{:>6} {:>8} {:>9.4} {:>6} {:>14.1} {:>12.1}",
                    l,
                    b.kind.name(),
                    epsilon,
                    if ok { "OK" } else { "FAIL" },
                    run.avg_of(|s| s.candidates),
                    run.avg_of(|s| s.results),
                )?;
            }
        }
    }

    if mismatches.is_empty() {
        writeln!(out, "all engines agree with the sweepline oracle")?;
    } else {
        for m in &mismatches {
            writeln!(
                out,
                "MISMATCH engine={} l={} epsilon={} query#{} (source position {})",
                m.engine, m.l, m.epsilon, m.query_index, m.query_pos
            )?;
        }
    }
    Ok(mismatches)
}
