//! Chebyshev and Euclidean distances plus early-abandoning verification.

/// Chebyshev (L-infinity) distance: the largest pointwise difference.
///
/// Panics if the sequences differ in length or are empty.
#[inline]
pub fn chebyshev(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "chebyshev: length mismatch");
    assert!(!a.is_empty(), "chebyshev: empty sequences");
    let mut max = 0.0_f64;
    for (x, y) in a.iter().zip(b) {
        let d = (x - y).abs();
        if d > max {
            max = d;
        }
    }
    max
}

/// Euclidean (L2) distance.
///
/// Panics if the sequences differ in length.
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "euclidean: length mismatch");
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Visit order for early abandoning: indices sorted by |q_i| descending,
/// ties by ascending index. Large query magnitudes are the least likely to
/// match under a z-normalized frame, so checking them first rejects
/// non-twins sooner.
pub fn reorder_by_magnitude(q: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..q.len()).collect();
    order.sort_by(|&a, &b| {
        q[b].abs()
            .partial_cmp(&q[a].abs())
            .expect("finite query values")
    });
    order
}

/// The natural visit order, used where reordering buys nothing.
pub fn identity_order(l: usize) -> Vec<usize> {
    (0..l).collect()
}

/// Whether `chebyshev(q, s) <= epsilon`, visiting timestamps in `order` and
/// abandoning at the first difference above `epsilon`. The outcome is the
/// same for every permutation; only the abandon point moves.
///
/// Panics if lengths differ or `order` is not a permutation of `0..q.len()`
/// (out-of-range indices panic; a malformed permutation of valid indices is
/// the caller's bug and merely revisits points).
#[inline]
pub fn is_twin(q: &[f64], s: &[f64], epsilon: f64, order: &[usize]) -> bool {
    assert_eq!(q.len(), s.len(), "is_twin: length mismatch");
    assert_eq!(q.len(), order.len(), "is_twin: order length mismatch");
    for &i in order {
        if (q[i] - s[i]).abs() > epsilon {
            return false;
        }
    }
    true
}
