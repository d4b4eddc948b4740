use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use twinseq::NormalizationMode;
use twinseq_cli::args::{parse_mode, EngineKind, EngineParams, SourceArgs};
use twinseq_cli::bench::{cmd_bench, BenchOpts};
use twinseq_cli::commands::{cmd_build, cmd_query, BuildOpts, QueryInput, QueryOpts};
use twinseq_cli::compare::{cmd_compare, CompareOpts};

/// Exact twin subsequence search: every window of a series within a
/// Chebyshev distance threshold of a query.
#[derive(Parser)]
#[command(name = "twinseq", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an index over a series and write it to disk.
    Build {
        #[command(flatten)]
        source: SourceArgs,
        /// Which index to build (sweep has no index).
        #[arg(long, value_enum)]
        engine: EngineKind,
        /// Window length the index answers queries for.
        #[arg(long)]
        l: usize,
        /// Value frame: raw, zglobal or zsub.
        #[arg(long, value_parser = parse_mode, default_value = "zglobal")]
        mode: NormalizationMode,
        #[command(flatten)]
        params: EngineParams,
        /// Output path for the index file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Query an index file, or sweep the series directly.
    Query {
        /// Index file produced by `build`; omit to sweep.
        #[arg(long)]
        index: Option<PathBuf>,
        #[command(flatten)]
        source: SourceArgs,
        /// File with one query value per line.
        #[arg(long, conflicts_with = "query_pos")]
        query_file: Option<PathBuf>,
        /// Extract the query from the series at this window start.
        #[arg(long)]
        query_pos: Option<usize>,
        /// Chebyshev distance threshold.
        #[arg(long)]
        epsilon: f64,
        /// Window length (sweep only; indexes carry their own).
        #[arg(long)]
        l: Option<usize>,
        /// Value frame (sweep only; indexes carry their own).
        #[arg(long, value_parser = parse_mode)]
        mode: Option<NormalizationMode>,
        /// Emit one JSON object instead of plain text.
        #[arg(long, default_value_t = false)]
        json: bool,
    },
    /// Run all engines over an (l, epsilon) grid and fail on any
    /// disagreement with the sweepline oracle.
    Compare {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, value_delimiter = ',', default_value = "100")]
        l_list: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5")]
        epsilon_list: Vec<f64>,
        #[arg(long, value_parser = parse_mode, default_value = "zglobal")]
        mode: NormalizationMode,
        /// Workload size (queries sampled from the series).
        #[arg(long, default_value_t = 100)]
        queries: usize,
        /// Seed for workload sampling.
        #[arg(long, default_value_t = 7)]
        workload_seed: u64,
        #[command(flatten)]
        params: EngineParams,
    },
    /// Sweep thresholds, lengths and segment counts; report latency,
    /// filtering and footprint per engine as CSV.
    Bench {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5")]
        epsilon_list: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "50,100,150,200,250")]
        l_list: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "5,10,20,25,50")]
        m_list: Vec<usize>,
        /// Threshold used while other axes vary.
        #[arg(long, default_value_t = 0.3)]
        epsilon: f64,
        /// Window length used while other axes vary.
        #[arg(long, default_value_t = 100)]
        l: usize,
        #[arg(long, value_parser = parse_mode, default_value = "zglobal")]
        mode: NormalizationMode,
        #[arg(long, default_value_t = 100)]
        queries: usize,
        /// Leading query executions excluded from the latency aggregates.
        #[arg(long, default_value_t = 2)]
        warmup: usize,
        /// Worker threads for query execution (1 = sequential, the
        /// reproducible-timing default).
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, default_value_t = 7)]
        workload_seed: u64,
        #[command(flatten)]
        params: EngineParams,
        /// CSV report path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let result = match cli.command {
        Command::Build {
            source,
            engine,
            l,
            mode,
            params,
            out: out_path,
        } => cmd_build(
            &BuildOpts {
                source,
                engine,
                l,
                mode,
                params,
                out: out_path,
            },
            &mut out,
        ),
        Command::Query {
            index,
            source,
            query_file,
            query_pos,
            epsilon,
            l,
            mode,
            json,
        } => {
            let input = match (query_file, query_pos) {
                (Some(path), None) => QueryInput::File(path),
                (None, Some(p)) => QueryInput::Position(p),
                _ => {
                    eprintln!("error: pass exactly one of --query-file or --query-pos");
                    return ExitCode::FAILURE;
                }
            };
            cmd_query(
                &QueryOpts {
                    index,
                    source,
                    input,
                    epsilon,
                    l,
                    mode,
                    json,
                },
                &mut out,
            )
        }
        Command::Compare {
            source,
            l_list,
            epsilon_list,
            mode,
            queries,
            workload_seed,
            params,
        } => cmd_compare(
            &CompareOpts {
                source,
                l_list,
                epsilon_list,
                mode,
                queries,
                workload_seed,
                params,
            },
            &mut out,
        )
        .and_then(|mismatches| {
            if mismatches.is_empty() {
                Ok(())
            } else {
                let m = &mismatches[0];
                anyhow::bail!(
                    "{} mismatch(es); first: engine={} epsilon={} query#{}",
                    mismatches.len(),
                    m.engine,
                    m.epsilon,
                    m.query_index
                )
            }
        }),
        Command::Bench {
            source,
            epsilon_list,
            l_list,
            m_list,
            epsilon,
            l,
            mode,
            queries,
            warmup,
            workers,
            workload_seed,
            params,
            out: out_path,
        } => cmd_bench(
            &BenchOpts {
                source,
                epsilon_list,
                l_list,
                m_list,
                epsilon,
                l,
                mode,
                queries,
                warmup,
                workers,
                workload_seed,
                params,
                out: out_path,
            },
            &mut out,
        )
        .map(|_| ()),
    };
    match result {
        Ok(()) => {
            let _ = out.flush();
            ExitCode::SUCCESS
        }
        Err(err) => {
            let _ = out.flush();
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
