//! Minimum bounding envelopes over sets of equal-length sequences.
//!
//! An [`Mbts`] stores, per timestamp, the maximum and minimum value across
//! every sequence it encloses. Envelope-to-sequence and envelope-to-envelope
//! distances lower-bound the Chebyshev distance to anything inside, which is
//! what makes subtree pruning sound.

use crate::error::{Error, Result};

/// Upper/lower bounding pair over a set of equal-length sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct Mbts {
    upper: Vec<f64>,
    lower: Vec<f64>,
}

impl Mbts {
    /// Envelope of a single sequence: both bounds equal the sequence.
    pub fn single(s: &[f64]) -> Self {
        Mbts {
            upper: s.to_vec(),
            lower: s.to_vec(),
        }
    }

    /// Pointwise max/min over a non-empty set of equal-length sequences.
    pub fn from_sequences<'a, I>(sequences: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut iter = sequences.into_iter();
        let first = iter
            .next()
            .ok_or_else(|| Error::InvalidParameter("envelope of an empty set".into()))?;
        let mut env = Mbts::single(first);
        for s in iter {
            if s.len() != env.len() {
                return Err(Error::InvalidParameter(format!(
                    "ragged sequence lengths: {} vs {}",
                    s.len(),
                    env.len()
                )));
            }
            env.expand_seq(s);
        }
        Ok(env)
    }

    pub fn len(&self) -> usize {
        self.upper.len()
    }

    pub fn is_empty(&self) -> bool {
        self.upper.is_empty()
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    /// Grows the band to also enclose `s`. No-op when `s` already fits.
    #[inline]
    pub fn expand_seq(&mut self, s: &[f64]) {
        assert_eq!(s.len(), self.len(), "expand_seq: length mismatch");
        for (i, &v) in s.iter().enumerate() {
            if v > self.upper[i] {
                self.upper[i] = v;
            }
            if v < self.lower[i] {
                self.lower[i] = v;
            }
        }
    }

    /// Grows the band to enclose everything inside `other`.
    pub fn expand_mbts(&mut self, other: &Mbts) {
        assert_eq!(other.len(), self.len(), "expand_mbts: length mismatch");
        for i in 0..self.upper.len() {
            if other.upper[i] > self.upper[i] {
                self.upper[i] = other.upper[i];
            }
            if other.lower[i] < self.lower[i] {
                self.lower[i] = other.lower[i];
            }
        }
    }

    /// Smallest envelope enclosing both inputs. Commutative and associative.
    pub fn merge(a: &Mbts, b: &Mbts) -> Mbts {
        let mut out = a.clone();
        out.expand_mbts(b);
        out
    }

    /// True when `s` lies inside the band at every timestamp.
    pub fn contains(&self, s: &[f64]) -> bool {
        assert_eq!(s.len(), self.len(), "contains: length mismatch");
        s.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| lo <= v && v <= hi)
    }

    /// Distance from a sequence to the band: the largest pointwise
    /// overshoot above the upper bound or undershoot below the lower bound;
    /// zero when the sequence lies inside. Lower-bounds the Chebyshev
    /// distance from `s` to every sequence enclosed by the band.
    #[inline]
    pub fn dist_seq(&self, s: &[f64]) -> f64 {
        assert_eq!(s.len(), self.len(), "dist_seq: length mismatch");
        let mut max = 0.0_f64;
        for (i, &v) in s.iter().enumerate() {
            let d = if v > self.upper[i] {
                v - self.upper[i]
            } else if v < self.lower[i] {
                self.lower[i] - v
            } else {
                0.0
            };
            if d > max {
                max = d;
            }
        }
        max
    }

    /// Like [`Mbts::dist_seq`] but abandons once the running maximum exceeds
    /// `cutoff`: the result is exact when it is `<= cutoff`, otherwise it is
    /// merely some value above the cutoff.
    #[inline]
    pub fn dist_seq_bounded(&self, s: &[f64], cutoff: f64) -> f64 {
        assert_eq!(s.len(), self.len(), "dist_seq_bounded: length mismatch");
        let mut max = 0.0_f64;
        for (i, &v) in s.iter().enumerate() {
            let d = if v > self.upper[i] {
                v - self.upper[i]
            } else if v < self.lower[i] {
                self.lower[i] - v
            } else {
                0.0
            };
            if d > max {
                max = d;
                if max > cutoff {
                    return max;
                }
            }
        }
        max
    }

    /// Band-to-band distance: the largest pointwise gap between the two
    /// bands, zero where they overlap. Symmetric, and lower-bounds the
    /// Chebyshev distance between any pair of enclosed sequences.
    pub fn dist_mbts(&self, other: &Mbts) -> f64 {
        self.dist_mbts_bounded(other, f64::INFINITY)
    }

    /// Cutoff form of [`Mbts::dist_mbts`] with the same contract as
    /// [`Mbts::dist_seq_bounded`].
    pub fn dist_mbts_bounded(&self, other: &Mbts, cutoff: f64) -> f64 {
        assert_eq!(other.len(), self.len(), "dist_mbts: length mismatch");
        let mut max = 0.0_f64;
        for i in 0..self.upper.len() {
            let d = if self.lower[i] > other.upper[i] {
                self.lower[i] - other.upper[i]
            } else if other.lower[i] > self.upper[i] {
                other.lower[i] - self.upper[i]
            } else {
                0.0
            };
            if d > max {
                max = d;
                if max > cutoff {
                    return max;
                }
            }
        }
        max
    }

    pub(crate) fn from_parts(upper: Vec<f64>, lower: Vec<f64>) -> Self {
        debug_assert_eq!(upper.len(), lower.len());
        Mbts { upper, lower }
    }
}
