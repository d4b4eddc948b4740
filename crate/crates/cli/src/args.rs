//! Flag definitions shared across subcommands.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};

use twinseq::{Generator, NormalizationMode, SeriesSource, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineKind {
    Sweep,
    Kv,
    Isax,
    Ts,
}

impl EngineKind {
    pub const INDEXED: [EngineKind; 3] = [EngineKind::Kv, EngineKind::Isax, EngineKind::Ts];

    pub fn name(self) -> &'static str {
        match self {
            EngineKind::Sweep => "sweep",
            EngineKind::Kv => "kv",
            EngineKind::Isax => "isax",
            EngineKind::Ts => "ts",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FileFormat {
    Text,
    Csv,
    Bin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SyntheticKind {
    Walk,
    Sine,
}

/// Where the series comes from: a file or a seeded generator.
#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    /// Series file to read.
    #[arg(long, conflicts_with = "synthetic")]
    pub input: Option<PathBuf>,

    /// How to parse --input.
    #[arg(long, value_enum, default_value_t = FileFormat::Text)]
    pub format: FileFormat,

    /// 0-based column to read when --format csv.
    #[arg(long, default_value_t = 0)]
    pub csv_column: usize,

    /// Skip a header row when --format csv.
    #[arg(long, default_value_t = false)]
    pub csv_header: bool,

    /// Generate the series instead of reading a file.
    #[arg(long, value_enum)]
    pub synthetic: Option<SyntheticKind>,

    /// Length of the generated series.
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,

    /// Seed for the generator and any derived randomness.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    /// Sine period (synthetic sine only).
    #[arg(long, default_value_t = 100.0)]
    pub period: f64,

    /// Gaussian noise deviation (synthetic sine only).
    #[arg(long, default_value_t = 0.1)]
    pub noise_sigma: f64,
}

impl SourceArgs {
    pub fn to_source(&self) -> anyhow::Result<SeriesSource> {
        match (&self.input, self.synthetic) {
            (Some(path), None) => Ok(match self.format {
                FileFormat::Text => SeriesSource::TextLines(path.clone()),
                FileFormat::Csv => SeriesSource::CsvColumn {
                    path: path.clone(),
                    column: self.csv_column,
                    has_header: self.csv_header,
                },
                FileFormat::Bin => SeriesSource::BinaryF64(path.clone()),
            }),
            (None, Some(kind)) => Ok(SeriesSource::Synthetic {
                generator: match kind {
                    SyntheticKind::Walk => Generator::RandomWalk,
                    SyntheticKind::Sine => Generator::SineNoise {
                        period: self.period,
                        noise_sigma: self.noise_sigma,
                    },
                },
                n: self.n,
                seed: self.seed,
            }),
            (None, None) => bail!("no series given: pass --input FILE or --synthetic walk|sine"),
            (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
        }
    }

    pub fn load(&self) -> anyhow::Result<(TimeSeries, SeriesSource)> {
        let source = self.to_source()?;
        let series = twinseq::load_series(&source)
            .with_context(|| format!("failed to load series from {source}"))?;
        Ok((series, source))
    }
}

/// Index tuning knobs; each engine reads its own subset.
#[derive(Debug, Clone, Copy, Args)]
pub struct EngineParams {
    /// Minimum node capacity of the envelope tree.
    #[arg(long, default_value_t = 10)]
    pub mu_c: usize,

    /// Maximum node capacity of the envelope tree.
    #[arg(long, default_value_t = 30)]
    pub max_c: usize,

    /// Mean-bucket width; derived from the data when omitted.
    #[arg(long)]
    pub bucket_width: Option<f64>,

    /// Number of PAA segments.
    #[arg(long, default_value_t = 10)]
    pub m: usize,

    /// Base SAX cardinality (power of two).
    #[arg(long, default_value_t = 4)]
    pub cardinality: u16,

    /// Cardinality ceiling for promotions (power of two).
    #[arg(long, default_value_t = 256)]
    pub max_cardinality: u16,

    /// SAX-tree leaf capacity.
    #[arg(long, default_value_t = 10_000)]
    pub leaf_cap: usize,
}

pub fn parse_mode(s: &str) -> Result<NormalizationMode, twinseq::Error> {
    s.parse()
}
