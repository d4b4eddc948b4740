//! Dataset loading, synthetic series generation and query-workload sampling.
//!
//! Everything seeded is driven by ChaCha8, so a `(seed, parameters)` pair
//! reproduces the same series and workload on any machine.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::series::{Materializer, NormalizationMode, TimeSeries};

/// Synthetic series generators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Generator {
    /// Cumulative sum of unit-variance Gaussian steps.
    RandomWalk,
    /// `sin(2*pi*i/period)` plus Gaussian noise of the given deviation.
    SineNoise { period: f64, noise_sigma: f64 },
}

/// Where a series comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum SeriesSource {
    /// One decimal value per line.
    TextLines(PathBuf),
    /// One column of a CSV file, 0-based; optionally skipping a header row.
    CsvColumn {
        path: PathBuf,
        column: usize,
        has_header: bool,
    },
    /// Packed little-endian 64-bit floats.
    BinaryF64(PathBuf),
    Synthetic {
        generator: Generator,
        n: usize,
        seed: u64,
    },
}

impl fmt::Display for SeriesSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeriesSource::TextLines(p) => write!(f, "text:{}", p.display()),
            SeriesSource::CsvColumn { path, column, .. } => {
                write!(f, "csv:{}#{column}", path.display())
            }
            SeriesSource::BinaryF64(p) => write!(f, "bin:{}", p.display()),
            SeriesSource::Synthetic { generator, n, seed } => match generator {
                Generator::RandomWalk => write!(f, "walk(n={n},seed={seed})"),
                Generator::SineNoise {
                    period,
                    noise_sigma,
                } => {
                    write!(
                        f,
                        "sine(n={n},seed={seed},period={period},sigma={noise_sigma})"
                    )
                }
            },
        }
    }
}

/// Loads a series from any source, rejecting non-finite values with the
/// offending line (or element) number.
pub fn load_series(source: &SeriesSource) -> Result<TimeSeries> {
    match source {
        SeriesSource::TextLines(path) => load_text_lines(path),
        SeriesSource::CsvColumn {
            path,
            column,
            has_header,
        } => load_csv_column(path, *column, *has_header),
        SeriesSource::BinaryF64(path) => load_binary_f64(path),
        SeriesSource::Synthetic { generator, n, seed } => generate(*generator, *n, *seed),
    }
}

fn load_text_lines(path: &Path) -> Result<TimeSeries> {
    let reader = BufReader::new(File::open(path)?);
    let mut values = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let value: f64 = trimmed.parse().map_err(|e| Error::Parse {
            line: i + 1,
            message: format!("{e}: {trimmed:?}"),
        })?;
        if !value.is_finite() {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("non-finite value {trimmed:?}"),
            });
        }
        values.push(value);
    }
    if values.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "no values in file".into(),
        });
    }
    TimeSeries::new(values)
}

fn load_csv_column(path: &Path, column: usize, has_header: bool) -> Result<TimeSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Parse {
            line: 0,
            message: e.to_string(),
        })?;
    let mut values = Vec::new();
    let header_offset = usize::from(has_header);
    for (i, record) in reader.records().enumerate() {
        let line = i + 1 + header_offset;
        let record = record.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let field = record.get(column).ok_or_else(|| Error::Parse {
            line,
            message: format!("row has only {} columns, wanted {column}", record.len()),
        })?;
        let value: f64 = field.parse().map_err(|e| Error::Parse {
            line,
            message: format!("{e}: {field:?}"),
        })?;
        if !value.is_finite() {
            return Err(Error::Parse {
                line,
                message: format!("non-finite value {field:?}"),
            });
        }
        values.push(value);
    }
    if values.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "no values in file".into(),
        });
    }
    TimeSeries::new(values)
}

fn load_binary_f64(path: &Path) -> Result<TimeSeries> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.is_empty() || bytes.len() % 8 != 0 {
        return Err(Error::Parse {
            line: 0,
            message: format!(
                "file length {} is not a positive multiple of 8",
                bytes.len()
            ),
        });
    }
    let mut values = Vec::with_capacity(bytes.len() / 8);
    for (i, chunk) in bytes.chunks_exact(8).enumerate() {
        let value = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
        if !value.is_finite() {
            return Err(Error::Parse {
                line: i + 1,
                message: "non-finite value".into(),
            });
        }
        values.push(value);
    }
    TimeSeries::new(values)
}

/// Generates a synthetic series, deterministic per seed.
pub fn generate(generator: Generator, n: usize, seed: u64) -> Result<TimeSeries> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "series length must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = match generator {
        Generator::RandomWalk => {
            let mut acc = 0.0;
            (0..n)
                .map(|_| {
                    let step: f64 = rng.sample(StandardNormal);
                    acc += step;
                    acc
                })
                .collect()
        }
        Generator::SineNoise {
            period,
            noise_sigma,
        } => {
            if !(period.is_finite() && period > 0.0)
                || !(noise_sigma.is_finite() && noise_sigma >= 0.0)
            {
                return Err(Error::InvalidParameter(format!(
                    "sine generator needs period > 0 and sigma >= 0, got {period}, {noise_sigma}"
                )));
            }
            (0..n)
                .map(|i| {
                    let noise: f64 = rng.sample(StandardNormal);
                    (std::f64::consts::TAU * i as f64 / period).sin() + noise_sigma * noise
                })
                .collect()
        }
    };
    TimeSeries::new(values)
}

/// A seeded batch of queries extracted from the series itself.
#[derive(Debug, Clone)]
pub struct Workload {
    /// `(query values, source position)` pairs, in sampling order.
    pub queries: Vec<(Vec<f64>, usize)>,
    pub seed: u64,
    pub l: usize,
}

/// Samples `count` window starts uniformly without replacement and
/// materializes each under `mode`.
pub fn sample_workload(
    series: &TimeSeries,
    count: usize,
    l: usize,
    seed: u64,
    mode: NormalizationMode,
) -> Result<Workload> {
    let windows = series.window_count(l)?;
    if count == 0 || count > windows {
        return Err(Error::InvalidParameter(format!(
            "workload size must be in 1..={windows}, got {count}"
        )));
    }
    let frame = Materializer::new(series, l, mode)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let queries = sample(&mut rng, windows, count)
        .into_iter()
        .map(|p| (frame.window(p).into_owned(), p))
        .collect();
    Ok(Workload { queries, seed, l })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn text_lines_round_trip() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, "1\n2\n3\n").unwrap();
        let t = load_series(&SeriesSource::TextLines(f.path().to_path_buf())).unwrap();
        assert_eq!(t.values(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn text_lines_reject_nan_with_line_number() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, "1.5\nNaN\n3\n").unwrap();
        match load_series(&SeriesSource::TextLines(f.path().to_path_buf())) {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("expected parse error at line 2, got {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_an_error() {
        let f = tempfile::NamedTempFile::new().unwrap();
        assert!(load_series(&SeriesSource::TextLines(f.path().to_path_buf())).is_err());
    }

    #[test]
    fn csv_column_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        let values = vec![0.25, -1.5, 3.75, 42.0];
        {
            let mut w = csv::Writer::from_path(&path).unwrap();
            w.write_record(["t", "v"]).unwrap();
            for (i, v) in values.iter().enumerate() {
                w.write_record([i.to_string(), format!("{v}")]).unwrap();
            }
        }
        let t = load_series(&SeriesSource::CsvColumn {
            path,
            column: 1,
            has_header: true,
        })
        .unwrap();
        assert_eq!(t.values(), values.as_slice());
    }

    #[test]
    fn binary_round_trip_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.f64");
        let values = [1.0f64, -2.5, 1e-300];
        let mut bytes = Vec::new();
        for v in values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::write(&path, &bytes).unwrap();
        let t = load_series(&SeriesSource::BinaryF64(path.clone())).unwrap();
        assert_eq!(t.values(), &values);

        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(load_series(&SeriesSource::BinaryF64(path)).is_err());
    }

    #[test]
    fn generators_are_deterministic() {
        let a = generate(Generator::RandomWalk, 1_000, 7).unwrap();
        let b = generate(Generator::RandomWalk, 1_000, 7).unwrap();
        assert_eq!(a.values(), b.values());
        let c = generate(Generator::RandomWalk, 1_000, 8).unwrap();
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn random_walk_steps_have_unit_moments() {
        let n = 50_000;
        let t = generate(Generator::RandomWalk, n, 42).unwrap();
        let steps: Vec<f64> = std::iter::once(t.values()[0])
            .chain(t.values().windows(2).map(|w| w[1] - w[0]))
            .collect();
        let mu = crate::series::mean(&steps);
        let sd = (steps.iter().map(|s| (s - mu) * (s - mu)).sum::<f64>() / n as f64).sqrt();
        let tol = 3.0 / (n as f64).sqrt();
        assert!(mu.abs() < tol, "step mean {mu}");
        assert!((sd - 1.0).abs() < tol, "step sd {sd}");
    }

    #[test]
    fn noiseless_sine_stays_in_unit_band() {
        let t = generate(
            Generator::SineNoise {
                period: 50.0,
                noise_sigma: 0.0,
            },
            500,
            1,
        )
        .unwrap();
        assert!(t.values().iter().all(|v| v.abs() <= 1.0));
        assert!(generate(
            Generator::SineNoise {
                period: -1.0,
                noise_sigma: 0.0
            },
            10,
            1
        )
        .is_err());
    }

    #[test]
    fn workload_sampling_is_exhaustive_and_deterministic() {
        let t = generate(Generator::RandomWalk, 120, 5).unwrap();
        let all = sample_workload(&t, 101, 20, 9, NormalizationMode::Raw).unwrap();
        let mut positions: Vec<usize> = all.queries.iter().map(|(_, p)| *p).collect();
        positions.sort_unstable();
        assert_eq!(positions, (0..=100).collect::<Vec<_>>());

        let again = sample_workload(&t, 101, 20, 9, NormalizationMode::Raw).unwrap();
        assert_eq!(
            all.queries.iter().map(|(_, p)| *p).collect::<Vec<_>>(),
            again.queries.iter().map(|(_, p)| *p).collect::<Vec<_>>()
        );
        assert!(sample_workload(&t, 102, 20, 9, NormalizationMode::Raw).is_err());
    }

    #[test]
    fn workload_queries_find_their_own_position() {
        let t = generate(Generator::RandomWalk, 2_000, 12).unwrap();
        let mode = NormalizationMode::GlobalZ;
        let w = sample_workload(&t, 5, 50, 3, mode).unwrap();
        for (values, p) in &w.queries {
            let q = crate::series::Query::new(values.clone(), 0.0).unwrap();
            let hits = crate::sweep::sweepline_search(&t, &q, mode).unwrap();
            assert!(hits.contains(p));
        }
    }
}
