//! The build and query subcommands.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};

use twinseq::{AnyIndex, Materializer, NormalizationMode, Query, SearchOutcome, TimeSeries};

use crate::args::{EngineKind, EngineParams, SourceArgs};
use crate::harness::build_engine;

pub struct BuildOpts {
    pub source: SourceArgs,
    pub engine: EngineKind,
    pub l: usize,
    pub mode: NormalizationMode,
    pub params: EngineParams,
    pub out: PathBuf,
}

pub fn cmd_build(opts: &BuildOpts, out: &mut dyn Write) -> anyhow::Result<()> {
    if opts.engine == EngineKind::Sweep {
        bail!("the sweepline engine scans the series directly and has no index to build");
    }
    let (series, source) = opts.source.load()?;
    let built = build_engine(&series, opts.engine, opts.l, opts.mode, &opts.params)?;
    let bytes = built.to_bytes().expect("indexed engines serialize");
    fs::write(&opts.out, &bytes)
        .with_context(|| format!("writing index to {}", opts.out.display()))?;

    writeln!(out, "engine:        {}", opts.engine.name())?;
    writeln!(out, "series:        {source} ({} points)", series.len())?;
    writeln!(out, "l / mode:      {} / {}", opts.l, opts.mode)?;
    writeln!(
        out,
        "build time:    {:.3} ms",
        built.build_time.as_secs_f64() * 1e3
    )?;
    if let Some(nodes) = built.node_count() {
        writeln!(out, "nodes:         {nodes}")?;
    }
    writeln!(out, "memory:        {} bytes", built.memory_bytes())?;
    writeln!(
        out,
        "index file:    {} ({} bytes)",
        opts.out.display(),
        bytes.len()
    )?;
    Ok(())
}

pub enum QueryInput {
    File(PathBuf),
    Position(usize),
}

pub struct QueryOpts {
    pub index: Option<PathBuf>,
    pub source: SourceArgs,
    pub input: QueryInput,
    pub epsilon: f64,
    /// Sweepline fallback when no index file is given.
    pub l: Option<usize>,
    pub mode: Option<NormalizationMode>,
    pub json: bool,
}

enum QueryEngine {
    Loaded(AnyIndex),
    Sweep(twinseq::SweepEngine),
}

pub fn cmd_query(opts: &QueryOpts, out: &mut dyn Write) -> anyhow::Result<()> {
    let (series, _) = opts.source.load()?;

    let (engine, l, mode) = match &opts.index {
        Some(path) => {
            let bytes =
                fs::read(path).with_context(|| format!("reading index {}", path.display()))?;
            let index = AnyIndex::from_bytes(&bytes)
                .with_context(|| format!("loading index {}", path.display()))?;
            let e = index.engine();
            if e.subseq_len() > series.len() {
                bail!(
                    "index was built for windows of {} points but the series has only {}",
                    e.subseq_len(),
                    series.len()
                );
            }
            let (l, mode) = (e.subseq_len(), e.mode());
            (QueryEngine::Loaded(index), l, mode)
        }
        None => {
            let l = opts
                .l
                .context("--l is required when querying without an index")?;
            let mode = opts
                .mode
                .context("--mode is required when querying without an index")?;
            (
                QueryEngine::Sweep(twinseq::SweepEngine::new(&series, l, mode)?),
                l,
                mode,
            )
        }
    };

    let frame = Materializer::new(&series, l, mode)?;
    let values = query_values(&opts.input, &series, &frame, l, mode)?;
    let query = Query::new(values, opts.epsilon)?;

    let outcome = match &engine {
        QueryEngine::Loaded(index) => index.engine().search(&frame, &query)?,
        QueryEngine::Sweep(sweep) => {
            use twinseq::Engine as _;
            sweep.search(&frame, &query)?
        }
    };

    let engine_name = match &engine {
        QueryEngine::Loaded(index) => index.engine().name(),
        QueryEngine::Sweep(_) => "sweep",
    };
    if opts.json {
        print_json(out, engine_name, &query, &outcome)?;
    } else {
        for p in &outcome.positions {
            writeln!(out, "{p}")?;
        }
        let s = &outcome.stats;
        writeln!(out, "# engine={engine_name} epsilon={}", query.epsilon())?;
        writeln!(
            out,
            "# results={} candidates={} nodes_visited={} nodes_pruned={} elapsed_us={:.1}",
            s.results,
            s.candidates,
            s.nodes_visited,
            s.nodes_pruned,
            s.elapsed.as_secs_f64() * 1e6
        )?;
    }
    Ok(())
}

/// Obtains the query vector in the index's value frame. A query extracted
/// from the series is materialized directly; an external file is mapped into
/// the frame (global statistics under zglobal, its own statistics under
/// zsub, untouched for raw).
fn query_values(
    input: &QueryInput,
    series: &TimeSeries,
    frame: &Materializer<'_>,
    l: usize,
    mode: NormalizationMode,
) -> anyhow::Result<Vec<f64>> {
    match input {
        QueryInput::Position(p) => {
            if *p >= frame.window_count() {
                bail!(
                    "query position {p} out of range (last window starts at {})",
                    frame.window_count() - 1
                );
            }
            Ok(frame.window(*p).into_owned())
        }
        QueryInput::File(path) => {
            let q = twinseq::load_series(&twinseq::SeriesSource::TextLines(path.clone()))
                .with_context(|| format!("reading query from {}", path.display()))?;
            if q.len() != l {
                bail!("query has {} values but the index expects {l}", q.len());
            }
            Ok(match mode {
                NormalizationMode::Raw => q.values().to_vec(),
                NormalizationMode::GlobalZ => {
                    let (mu, sd) = series.global_stats();
                    if sd == 0.0 {
                        vec![0.0; l]
                    } else {
                        q.values().iter().map(|v| (v - mu) / sd).collect()
                    }
                }
                NormalizationMode::PerSubseqZ => twinseq::znormalize(q.values()),
            })
        }
    }
}

fn print_json(
    out: &mut dyn Write,
    engine: &str,
    query: &Query,
    outcome: &SearchOutcome,
) -> anyhow::Result<()> {
    let s = &outcome.stats;
    let doc = serde_json::json!({
        "engine": engine,
        "epsilon": query.epsilon(),
        "positions": outcome.positions,
        "stats": {
            "nodes_visited": s.nodes_visited,
            "nodes_pruned": s.nodes_pruned,
            "candidates": s.candidates,
            "results": s.results,
            "elapsed_us": s.elapsed.as_secs_f64() * 1e6,
        },
    });
    writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
    Ok(())
}

pub fn read_index_file(path: &Path) -> anyhow::Result<AnyIndex> {
    let bytes = fs::read(path).with_context(|| format!("reading index {}", path.display()))?;
    Ok(AnyIndex::from_bytes(&bytes)?)
}
