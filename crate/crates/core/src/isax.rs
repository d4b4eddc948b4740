//! Segment-mean summaries (PAA), symbol quantization (SAX) and a binary
//! promotion tree over the SAX words of all windows.
//!
//! Each symbol stands for an interval of segment means. Twins can differ by
//! at most the threshold in every aligned segment mean, so a node whose
//! symbol intervals sit further than the threshold from the query's segment
//! means in any segment can be skipped wholesale.

use std::collections::HashMap;
use std::time::Instant;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::engine::{check_frame, verification_order, Engine, SearchOutcome, SearchStats};
use crate::error::{Error, Result};
use crate::series::{Materializer, NormalizationMode, Query, TimeSeries};

/// Widening applied to the compatibility check so float noise in computed
/// segment means can only ever add candidates, never drop a true twin.
const COMPAT_SLACK: f64 = 1e-9;

/// Per-segment means over equal-width segments. Segments are laid out on a
/// continuous time axis, so lengths that do not divide evenly are handled by
/// weighting boundary points proportionally.
#[derive(Debug, Clone, PartialEq)]
pub struct PaaVector {
    means: Vec<f64>,
}

impl PaaVector {
    pub fn values(&self) -> &[f64] {
        &self.means
    }

    pub fn segments(&self) -> usize {
        self.means.len()
    }
}

/// Reduces `s` to `m` segment means.
pub fn paa(s: &[f64], m: usize) -> Result<PaaVector> {
    let l = s.len();
    if m == 0 || m > l {
        return Err(Error::InvalidParameter(format!(
            "segment count must be in 1..={l}, got {m}"
        )));
    }
    let seg_width = l as f64 / m as f64;
    let mut means = Vec::with_capacity(m);
    for i in 0..m {
        let start = i as f64 * seg_width;
        let end = start + seg_width;
        let first = start.floor() as usize;
        let last = (end.ceil() as usize).min(l);
        let mut acc = 0.0;
        for (j, &v) in s.iter().enumerate().take(last).skip(first) {
            let overlap = (end.min((j + 1) as f64) - start.max(j as f64)).max(0.0);
            acc += v * overlap;
        }
        means.push(acc / seg_width);
    }
    Ok(PaaVector { means })
}

/// One quantized segment: which of `cardinality` intervals the mean fell in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SaxSymbol {
    pub index: u16,
    pub cardinality: u16,
}

/// A quantized summary: one symbol per segment. Cardinalities may differ
/// across segments once promotions have happened.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SaxWord {
    symbols: Vec<SaxSymbol>,
}

impl SaxWord {
    pub fn symbols(&self) -> &[SaxSymbol] {
        &self.symbols
    }

    pub(crate) fn from_symbols(symbols: Vec<SaxSymbol>) -> Self {
        SaxWord { symbols }
    }
}

/// Quantile cuts at the finest cardinality; coarser cardinalities reuse
/// every 2^k-th cut, so a symbol's interval is exactly the union of its two
/// child intervals and promotion can never move a window across words.
#[derive(Debug, Clone, PartialEq)]
pub struct BreakpointTable {
    cuts: Vec<f64>,
}

impl BreakpointTable {
    pub fn new(cuts: Vec<f64>) -> Result<Self> {
        let card = cuts.len() + 1;
        if !card.is_power_of_two() || card < 2 {
            return Err(Error::InvalidParameter(format!(
                "cut count {} does not describe a power-of-two cardinality",
                cuts.len()
            )));
        }
        Ok(BreakpointTable { cuts })
    }

    pub fn max_cardinality(&self) -> u16 {
        (self.cuts.len() + 1) as u16
    }

    pub fn cuts(&self) -> &[f64] {
        &self.cuts
    }

    /// Symbol index at the finest cardinality. A value equal to a cut goes
    /// to the upper interval.
    pub fn quantize(&self, value: f64) -> u16 {
        self.cuts.partition_point(|&c| c <= value) as u16
    }

    /// Value interval denoted by `symbol` at `cardinality`; the outermost
    /// intervals are unbounded.
    pub fn symbol_range(&self, symbol: SaxSymbol) -> (f64, f64) {
        let max = self.max_cardinality();
        debug_assert!(symbol.cardinality.is_power_of_two() && symbol.cardinality <= max);
        let stride = (max / symbol.cardinality) as usize;
        let lo = if symbol.index == 0 {
            f64::NEG_INFINITY
        } else {
            self.cuts[symbol.index as usize * stride - 1]
        };
        let hi = if symbol.index == symbol.cardinality - 1 {
            f64::INFINITY
        } else {
            self.cuts[(symbol.index as usize + 1) * stride - 1]
        };
        (lo, hi)
    }
}

/// Standard-normal quantile cuts for z-normalized values.
pub fn gaussian_breakpoints(cardinality: u16) -> Result<Vec<f64>> {
    check_cardinality(cardinality)?;
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    Ok((1..cardinality)
        .map(|k| normal.inverse_cdf(k as f64 / cardinality as f64))
        .collect())
}

/// Empirical quantile cuts over the segment means of every window; this is
/// how raw, non-normalized values get a sensible symbol alphabet.
pub fn empirical_breakpoints(
    series: &TimeSeries,
    l: usize,
    m: usize,
    cardinality: u16,
) -> Result<Vec<f64>> {
    check_cardinality(cardinality)?;
    let windows = series.window_count(l)?;
    let mut means = Vec::with_capacity(windows * m);
    for p in 0..windows {
        let v = paa(&series.values()[p..p + l], m)?;
        means.extend_from_slice(v.values());
    }
    means.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite means"));
    Ok((1..cardinality as usize)
        .map(|k| means[(k * means.len() / cardinality as usize).min(means.len() - 1)])
        .collect())
}

/// Cut table for the given mode: Gaussian quantiles under z-normalization,
/// empirical quantiles of the data otherwise.
pub fn make_breakpoints(
    cardinality: u16,
    mode: NormalizationMode,
    series: &TimeSeries,
    l: usize,
    m: usize,
) -> Result<Vec<f64>> {
    match mode {
        NormalizationMode::GlobalZ | NormalizationMode::PerSubseqZ => {
            gaussian_breakpoints(cardinality)
        }
        NormalizationMode::Raw => empirical_breakpoints(series, l, m, cardinality),
    }
}

fn check_cardinality(cardinality: u16) -> Result<()> {
    if cardinality < 2 || !cardinality.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "cardinality must be a power of two >= 2, got {cardinality}"
        )));
    }
    Ok(())
}

/// Quantizes segment means against `table` at its finest cardinality.
pub fn sax(paa: &PaaVector, table: &BreakpointTable) -> SaxWord {
    let card = table.max_cardinality();
    SaxWord {
        symbols: paa
            .values()
            .iter()
            .map(|&v| SaxSymbol {
                index: table.quantize(v),
                cardinality: card,
            })
            .collect(),
    }
}

/// The pruning test: true unless some segment's query mean sits further
/// than `epsilon` from the node's symbol interval. A `false` is always safe
/// to prune on; `true` promises nothing.
pub fn compatible(
    query_paa: &PaaVector,
    word: &SaxWord,
    table: &BreakpointTable,
    epsilon: f64,
) -> bool {
    debug_assert_eq!(query_paa.segments(), word.symbols.len());
    for (q, &sym) in query_paa.values().iter().zip(&word.symbols) {
        let (lo, hi) = table.symbol_range(sym);
        if *q < lo - epsilon - COMPAT_SLACK || *q > hi + epsilon + COMPAT_SLACK {
            return false;
        }
    }
    true
}

/// Build parameters. Promotion doubles one segment's cardinality per split,
/// from `base_cardinality` up to `max_cardinality`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IsaxConfig {
    pub segments: usize,
    pub base_cardinality: u16,
    pub max_cardinality: u16,
    pub leaf_cap: usize,
}

impl Default for IsaxConfig {
    fn default() -> Self {
        IsaxConfig {
            segments: 10,
            base_cardinality: 4,
            max_cardinality: 256,
            leaf_cap: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum IsaxPayload {
    Leaf(Vec<usize>),
    Internal {
        split_seg: u16,
        children: Box<[IsaxNode; 2]>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct IsaxNode {
    pub(crate) word: SaxWord,
    pub(crate) payload: IsaxPayload,
}

/// SAX-word tree over all windows of one `(series, l, mode)` combination.
#[derive(Debug, Clone)]
pub struct IsaxIndex {
    pub(crate) l: usize,
    pub(crate) config: IsaxConfig,
    pub(crate) mode: NormalizationMode,
    pub(crate) series_len: usize,
    pub(crate) table: BreakpointTable,
    /// One subtree per occupied base-cardinality word, in insertion order.
    pub(crate) roots: Vec<IsaxNode>,
    root_lookup: HashMap<Vec<u16>, usize>,
}

impl PartialEq for IsaxIndex {
    fn eq(&self, other: &Self) -> bool {
        self.l == other.l
            && self.config == other.config
            && self.mode == other.mode
            && self.series_len == other.series_len
            && self.table == other.table
            && self.roots == other.roots
    }
}

struct BuildCtx<'a, 'b> {
    frame: &'a Materializer<'b>,
    table: &'a BreakpointTable,
    config: IsaxConfig,
    scratch: Vec<f64>,
}

impl IsaxIndex {
    pub(crate) fn from_parts(
        l: usize,
        config: IsaxConfig,
        mode: NormalizationMode,
        series_len: usize,
        table: BreakpointTable,
        roots: Vec<IsaxNode>,
    ) -> IsaxIndex {
        let root_lookup = roots
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let key: Vec<u16> = r.word.symbols.iter().map(|s| s.index).collect();
                (key, i)
            })
            .collect();
        IsaxIndex {
            l,
            config,
            mode,
            series_len,
            table,
            roots,
            root_lookup,
        }
    }

    pub fn build(
        series: &TimeSeries,
        l: usize,
        config: IsaxConfig,
        mode: NormalizationMode,
    ) -> Result<IsaxIndex> {
        check_cardinality(config.base_cardinality)?;
        check_cardinality(config.max_cardinality)?;
        if config.max_cardinality < config.base_cardinality {
            return Err(Error::InvalidParameter(
                "max cardinality below base cardinality".into(),
            ));
        }
        if config.leaf_cap == 0 {
            return Err(Error::InvalidParameter(
                "leaf capacity must be positive".into(),
            ));
        }
        let cuts = make_breakpoints(config.max_cardinality, mode, series, l, config.segments)?;
        let table = BreakpointTable::new(cuts)?;
        let frame = Materializer::new(series, l, mode)?;
        if config.segments > l {
            return Err(Error::InvalidParameter(format!(
                "segment count {} exceeds window length {l}",
                config.segments
            )));
        }

        let mut index = IsaxIndex {
            l,
            config,
            mode,
            series_len: series.len(),
            table,
            roots: Vec::new(),
            root_lookup: HashMap::new(),
        };
        let mut ctx = BuildCtx {
            frame: &frame,
            table: &index.table,
            config,
            scratch: Vec::with_capacity(l),
        };

        let base_shift = shift_between(config.max_cardinality, config.base_cardinality);
        for p in 0..frame.window_count() {
            let word_max = max_word(&frame, p, config.segments, &index.table, &mut ctx.scratch)?;
            let base_key: Vec<u16> = word_max.iter().map(|&s| s >> base_shift).collect();
            let root_idx = match index.root_lookup.get(&base_key) {
                Some(&idx) => idx,
                None => {
                    let word = SaxWord {
                        symbols: base_key
                            .iter()
                            .map(|&index| SaxSymbol {
                                index,
                                cardinality: config.base_cardinality,
                            })
                            .collect(),
                    };
                    index.roots.push(IsaxNode {
                        word,
                        payload: IsaxPayload::Leaf(Vec::new()),
                    });
                    index.root_lookup.insert(base_key, index.roots.len() - 1);
                    index.roots.len() - 1
                }
            };
            insert_into(&mut index.roots[root_idx], p, &word_max, &mut ctx)?;
        }
        Ok(index)
    }

    pub fn subseq_len(&self) -> usize {
        self.l
    }

    pub fn mode(&self) -> NormalizationMode {
        self.mode
    }

    pub fn config(&self) -> IsaxConfig {
        self.config
    }

    pub fn series_len(&self) -> usize {
        self.series_len
    }

    pub fn breakpoints(&self) -> &BreakpointTable {
        &self.table
    }

    pub fn node_count(&self) -> usize {
        fn walk(node: &IsaxNode) -> usize {
            match &node.payload {
                IsaxPayload::Leaf(_) => 1,
                IsaxPayload::Internal { children, .. } => {
                    1 + walk(&children[0]) + walk(&children[1])
                }
            }
        }
        self.roots.iter().map(walk).sum()
    }

    /// Every indexed window start, unordered.
    pub fn all_positions(&self) -> Vec<usize> {
        let mut out = Vec::new();
        fn walk(node: &IsaxNode, out: &mut Vec<usize>) {
            match &node.payload {
                IsaxPayload::Leaf(positions) => out.extend_from_slice(positions),
                IsaxPayload::Internal { children, .. } => {
                    walk(&children[0], out);
                    walk(&children[1], out);
                }
            }
        }
        for root in &self.roots {
            walk(root, &mut out);
        }
        out
    }

    /// Visits each leaf's word and positions, left to right.
    pub fn for_each_leaf<F: FnMut(&SaxWord, &[usize])>(&self, mut f: F) {
        fn walk<F: FnMut(&SaxWord, &[usize])>(node: &IsaxNode, f: &mut F) {
            match &node.payload {
                IsaxPayload::Leaf(positions) => f(&node.word, positions),
                IsaxPayload::Internal { children, .. } => {
                    walk(&children[0], f);
                    walk(&children[1], f);
                }
            }
        }
        for root in &self.roots {
            walk(root, &mut f);
        }
    }

    /// Prunes by per-segment symbol compatibility, then verifies leaf
    /// candidates.
    pub fn search(&self, frame: &Materializer<'_>, query: &Query) -> Result<SearchOutcome> {
        check_frame(frame, query, self.l, self.mode, self.series_len)?;
        let started = Instant::now();
        let order = verification_order(query.values(), self.mode);
        let epsilon = query.epsilon();
        let q_paa = paa(query.values(), self.config.segments)?;

        let mut stats = SearchStats::default();
        let mut positions = Vec::new();
        let mut stack: Vec<&IsaxNode> = self.roots.iter().collect();
        while let Some(node) = stack.pop() {
            if !compatible(&q_paa, &node.word, &self.table, epsilon) {
                stats.nodes_pruned += 1;
                continue;
            }
            stats.nodes_visited += 1;
            match &node.payload {
                IsaxPayload::Internal { children, .. } => {
                    stack.push(&children[0]);
                    stack.push(&children[1]);
                }
                IsaxPayload::Leaf(leaf) => {
                    stats.candidates += leaf.len() as u64;
                    for &p in leaf {
                        if frame.twin_at(p, query.values(), epsilon, &order) {
                            positions.push(p);
                        }
                    }
                }
            }
        }
        positions.sort_unstable();
        stats.results = positions.len() as u64;
        stats.elapsed = started.elapsed();
        Ok(SearchOutcome { positions, stats })
    }

    /// Documented memory accounting: node struct plus 4 bytes per word
    /// symbol, 8 bytes per leaf position, plus the cut table.
    pub fn memory_bytes(&self) -> usize {
        fn walk(node: &IsaxNode) -> usize {
            let own = std::mem::size_of::<IsaxNode>() + node.word.symbols.len() * 4;
            match &node.payload {
                IsaxPayload::Leaf(positions) => own + positions.len() * 8,
                IsaxPayload::Internal { children, .. } => {
                    own + walk(&children[0]) + walk(&children[1])
                }
            }
        }
        std::mem::size_of::<IsaxIndex>()
            + self.table.cuts.len() * 8
            + self.roots.iter().map(walk).sum::<usize>()
    }
}

impl Engine for IsaxIndex {
    fn name(&self) -> &'static str {
        "isax"
    }

    fn subseq_len(&self) -> usize {
        self.l
    }

    fn mode(&self) -> NormalizationMode {
        self.mode
    }

    fn search(&self, frame: &Materializer<'_>, query: &Query) -> Result<SearchOutcome> {
        IsaxIndex::search(self, frame, query)
    }
}

fn shift_between(max_card: u16, card: u16) -> u32 {
    debug_assert!(max_card >= card);
    (max_card / card).trailing_zeros()
}

/// Finest-cardinality symbols of the window at `p`.
fn max_word(
    frame: &Materializer<'_>,
    p: usize,
    m: usize,
    table: &BreakpointTable,
    scratch: &mut Vec<f64>,
) -> Result<Vec<u16>> {
    frame.window_into(p, scratch);
    let v = paa(scratch, m)?;
    Ok(v.values().iter().map(|&x| table.quantize(x)).collect())
}

fn insert_into(node: &mut IsaxNode, p: usize, word_max: &[u16], ctx: &mut BuildCtx) -> Result<()> {
    match &mut node.payload {
        IsaxPayload::Internal {
            split_seg,
            children,
        } => {
            let seg = *split_seg as usize;
            let child_card = children[0].word.symbols[seg].cardinality;
            let shift = shift_between(ctx.config.max_cardinality, child_card);
            let bit = (word_max[seg] >> shift) & 1;
            insert_into(&mut children[bit as usize], p, word_max, ctx)
        }
        IsaxPayload::Leaf(positions) => {
            positions.push(p);
            if positions.len() > ctx.config.leaf_cap {
                split_leaf(node, ctx)?;
            }
            Ok(())
        }
    }
}

/// Picks the segment to promote: round-robin from the number of promotions
/// already spent on this word, skipping segments at the cardinality cap.
fn choose_split_segment(word: &SaxWord, config: &IsaxConfig) -> Option<usize> {
    let m = word.symbols.len();
    let promotions: u32 = word
        .symbols
        .iter()
        .map(|s| (s.cardinality / config.base_cardinality).trailing_zeros())
        .sum();
    (0..m)
        .map(|k| (promotions as usize + k) % m)
        .find(|&seg| word.symbols[seg].cardinality < config.max_cardinality)
}

/// Turns an overfull leaf into an internal node with two half-cardinality
/// children, re-deriving each resident's symbol at the finer cardinality.
/// Leaves whose word cannot be promoted further simply stay overfull.
fn split_leaf(node: &mut IsaxNode, ctx: &mut BuildCtx) -> Result<()> {
    let Some(seg) = choose_split_segment(&node.word, &ctx.config) else {
        return Ok(());
    };
    let positions = match &mut node.payload {
        IsaxPayload::Leaf(positions) => std::mem::take(positions),
        IsaxPayload::Internal { .. } => unreachable!("split_leaf on internal node"),
    };

    let parent = node.word.symbols[seg];
    let child_card = parent.cardinality * 2;
    let shift = shift_between(ctx.config.max_cardinality, child_card);
    let mut low = Vec::new();
    let mut high = Vec::new();
    for p in positions {
        let word = max_word(
            ctx.frame,
            p,
            ctx.config.segments,
            ctx.table,
            &mut ctx.scratch,
        )?;
        if (word[seg] >> shift) & 1 == 0 {
            low.push(p);
        } else {
            high.push(p);
        }
    }

    let child = |bit: u16, positions: Vec<usize>| {
        let mut word = node.word.clone();
        word.symbols[seg] = SaxSymbol {
            index: parent.index * 2 + bit,
            cardinality: child_card,
        };
        IsaxNode {
            word,
            payload: IsaxPayload::Leaf(positions),
        }
    };
    node.payload = IsaxPayload::Internal {
        split_seg: seg as u16,
        children: Box::new([child(0, low), child(1, high)]),
    };

    // A lopsided redistribution can leave a child still overfull.
    if let IsaxPayload::Internal { children, .. } = &mut node.payload {
        for c in children.iter_mut() {
            if matches!(&c.payload, IsaxPayload::Leaf(p) if p.len() > ctx.config.leaf_cap) {
                split_leaf(c, ctx)?;
            }
        }
    }
    Ok(())
}
