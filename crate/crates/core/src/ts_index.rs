//! Balanced envelope tree over all windows of a series.
//!
//! Windows are inserted one by one; each level routes the new window to the
//! child whose envelope is nearest, and overflowing nodes split around the
//! two most distant entries, propagating upwards so all leaves stay on one
//! level. Queries descend only into subtrees whose envelope is within the
//! threshold of the query, which can never lose a match because the envelope
//! distance lower-bounds the Chebyshev distance to everything underneath.

use std::time::Instant;

use crate::dist::chebyshev;
use crate::engine::{check_frame, verification_order, Engine, SearchOutcome, SearchStats};
use crate::error::{Error, Result};
use crate::mbts::Mbts;
use crate::series::{Materializer, NormalizationMode, Query, TimeSeries};

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LeafNode {
    pub(crate) mbts: Mbts,
    pub(crate) positions: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct InternalNode {
    pub(crate) mbts: Mbts,
    pub(crate) children: Vec<TsNode>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum TsNode {
    Leaf(LeafNode),
    Internal(InternalNode),
}

impl TsNode {
    pub(crate) fn mbts(&self) -> &Mbts {
        match self {
            TsNode::Leaf(leaf) => &leaf.mbts,
            TsNode::Internal(node) => &node.mbts,
        }
    }

    fn entry_count(&self) -> usize {
        match self {
            TsNode::Leaf(leaf) => leaf.positions.len(),
            TsNode::Internal(node) => node.children.len(),
        }
    }

    fn collect_positions(&self, out: &mut Vec<usize>) {
        match self {
            TsNode::Leaf(leaf) => out.extend_from_slice(&leaf.positions),
            TsNode::Internal(node) => {
                for child in &node.children {
                    child.collect_positions(out);
                }
            }
        }
    }

    fn count_nodes(&self) -> usize {
        match self {
            TsNode::Leaf(_) => 1,
            TsNode::Internal(node) => {
                1 + node.children.iter().map(TsNode::count_nodes).sum::<usize>()
            }
        }
    }
}

/// A subtree skipped during a traced search: where it sits and every window
/// start indexed beneath it. Diagnostic surface for pruning-soundness checks.
#[derive(Debug, Clone)]
pub struct PrunedSubtree {
    /// Child indices from the root down to the pruned node.
    pub path: Vec<usize>,
    pub positions: Vec<usize>,
}

/// A search result together with the subtrees pruning skipped.
#[derive(Debug, Clone)]
pub struct SearchTrace {
    pub outcome: SearchOutcome,
    pub pruned: Vec<PrunedSubtree>,
}

/// Envelope tree index for one `(series, l, mode)` combination.
#[derive(Debug, Clone, PartialEq)]
pub struct TsIndex {
    pub(crate) root: TsNode,
    pub(crate) l: usize,
    pub(crate) mu_c: usize,
    pub(crate) max_c: usize,
    pub(crate) mode: NormalizationMode,
    pub(crate) series_len: usize,
}

/// Incremental construction of a [`TsIndex`].
pub struct TsIndexBuilder<'a> {
    frame: Materializer<'a>,
    root: Option<TsNode>,
    l: usize,
    mu_c: usize,
    max_c: usize,
    mode: NormalizationMode,
    series_len: usize,
    inserted: Vec<bool>,
    scratch: Vec<f64>,
}

pub(crate) fn validate_capacities(mu_c: usize, max_c: usize) -> Result<()> {
    // A split distributes max_c + 1 entries over two nodes that each need
    // mu_c, so 2 * mu_c <= max_c + 1 must hold.
    if mu_c < 2 || 2 * mu_c > max_c + 1 {
        return Err(Error::InvalidCapacity { mu_c, max_c });
    }
    Ok(())
}

impl<'a> TsIndexBuilder<'a> {
    pub fn new(
        series: &'a TimeSeries,
        l: usize,
        mu_c: usize,
        max_c: usize,
        mode: NormalizationMode,
    ) -> Result<Self> {
        validate_capacities(mu_c, max_c)?;
        let frame = Materializer::new(series, l, mode)?;
        let windows = frame.window_count();
        Ok(TsIndexBuilder {
            frame,
            root: None,
            l,
            mu_c,
            max_c,
            mode,
            series_len: series.len(),
            inserted: vec![false; windows],
            scratch: Vec::with_capacity(l),
        })
    }

    /// Inserts the window starting at `p`.
    pub fn insert(&mut self, p: usize) -> Result<()> {
        if p >= self.inserted.len() {
            return Err(Error::SubseqOutOfRange {
                start: p,
                len: self.l,
                n: self.series_len,
            });
        }
        if self.inserted[p] {
            return Err(Error::InvalidParameter(format!(
                "position {p} already inserted"
            )));
        }
        self.inserted[p] = true;

        let mut scratch = std::mem::take(&mut self.scratch);
        self.frame.window_into(p, &mut scratch);
        match self.root.take() {
            None => {
                self.root = Some(TsNode::Leaf(LeafNode {
                    mbts: Mbts::single(&scratch),
                    positions: vec![p],
                }));
            }
            Some(mut root) => {
                if let Some(sibling) =
                    insert_rec(&mut root, p, &scratch, self.mu_c, self.max_c, &self.frame)
                {
                    // The root is exempt from the minimum capacity; a fresh
                    // root with the two halves keeps all leaves level.
                    let mbts = Mbts::merge(root.mbts(), sibling.mbts());
                    root = TsNode::Internal(InternalNode {
                        mbts,
                        children: vec![root, sibling],
                    });
                }
                self.root = Some(root);
            }
        }
        self.scratch = scratch;
        Ok(())
    }

    pub fn finish(self) -> Result<TsIndex> {
        let root = self.root.ok_or_else(|| {
            Error::InvalidParameter("cannot finish an index with no inserted positions".into())
        })?;
        Ok(TsIndex {
            root,
            l: self.l,
            mu_c: self.mu_c,
            max_c: self.max_c,
            mode: self.mode,
            series_len: self.series_len,
        })
    }
}

impl TsIndex {
    /// Indexes every window of the series, inserting starts in ascending
    /// order (deterministic and cache-friendly).
    pub fn build(
        series: &TimeSeries,
        l: usize,
        mu_c: usize,
        max_c: usize,
        mode: NormalizationMode,
    ) -> Result<TsIndex> {
        let mut builder = TsIndexBuilder::new(series, l, mu_c, max_c, mode)?;
        for p in 0..builder.inserted.len() {
            builder.insert(p)?;
        }
        builder.finish()
    }

    pub fn subseq_len(&self) -> usize {
        self.l
    }

    pub fn mode(&self) -> NormalizationMode {
        self.mode
    }

    pub fn capacities(&self) -> (usize, usize) {
        (self.mu_c, self.max_c)
    }

    pub fn series_len(&self) -> usize {
        self.series_len
    }

    pub fn node_count(&self) -> usize {
        self.root.count_nodes()
    }

    /// Levels below the root; a single-leaf tree has depth 0.
    pub fn depth(&self) -> usize {
        let mut depth = 0;
        let mut node = &self.root;
        while let TsNode::Internal(internal) = node {
            depth += 1;
            node = &internal.children[0];
        }
        depth
    }

    /// Every indexed window start, unordered.
    pub fn all_positions(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.root.collect_positions(&mut out);
        out
    }

    /// Position lists of all leaves, left to right.
    pub fn leaf_positions(&self) -> Vec<Vec<usize>> {
        fn walk(node: &TsNode, out: &mut Vec<Vec<usize>>) {
            match node {
                TsNode::Leaf(leaf) => out.push(leaf.positions.clone()),
                TsNode::Internal(internal) => {
                    for child in &internal.children {
                        walk(child, out);
                    }
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }

    /// Answers the query, returning ascending match positions.
    pub fn search(&self, frame: &Materializer<'_>, query: &Query) -> Result<SearchOutcome> {
        check_frame(frame, query, self.l, self.mode, self.series_len)?;
        Ok(self.search_lean(frame, query))
    }

    /// Like [`TsIndex::search`] but also reports which subtrees were pruned.
    pub fn search_traced(&self, frame: &Materializer<'_>, query: &Query) -> Result<SearchTrace> {
        check_frame(frame, query, self.l, self.mode, self.series_len)?;
        let started = Instant::now();
        let order = verification_order(query.values(), self.mode);
        let epsilon = query.epsilon();
        let mut stats = SearchStats::default();
        let mut positions = Vec::new();
        let mut pruned = Vec::new();

        let mut stack: Vec<(&TsNode, Vec<usize>)> = Vec::new();
        match &self.root {
            TsNode::Internal(internal) => {
                for (i, child) in internal.children.iter().enumerate() {
                    stack.push((child, vec![i]));
                }
            }
            leaf => stack.push((leaf, Vec::new())),
        }
        while let Some((node, path)) = stack.pop() {
            let d = node.mbts().dist_seq_bounded(query.values(), epsilon);
            if d > epsilon {
                stats.nodes_pruned += 1;
                let mut beneath = Vec::new();
                node.collect_positions(&mut beneath);
                pruned.push(PrunedSubtree {
                    path,
                    positions: beneath,
                });
                continue;
            }
            stats.nodes_visited += 1;
            match node {
                TsNode::Internal(internal) => {
                    for (i, child) in internal.children.iter().enumerate() {
                        let mut child_path = path.clone();
                        child_path.push(i);
                        stack.push((child, child_path));
                    }
                }
                TsNode::Leaf(leaf) => {
                    stats.candidates += leaf.positions.len() as u64;
                    for &p in &leaf.positions {
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
        Ok(SearchTrace {
            outcome: SearchOutcome { positions, stats },
            pruned,
        })
    }

    fn search_lean(&self, frame: &Materializer<'_>, query: &Query) -> SearchOutcome {
        let started = Instant::now();
        let order = verification_order(query.values(), self.mode);
        let epsilon = query.epsilon();
        let mut stats = SearchStats::default();
        let mut positions = Vec::new();

        let mut stack: Vec<&TsNode> = Vec::new();
        match &self.root {
            TsNode::Internal(internal) => stack.extend(internal.children.iter()),
            leaf => stack.push(leaf),
        }
        while let Some(node) = stack.pop() {
            let d = node.mbts().dist_seq_bounded(query.values(), epsilon);
            if d > epsilon {
                stats.nodes_pruned += 1;
                continue;
            }
            stats.nodes_visited += 1;
            match node {
                TsNode::Internal(internal) => stack.extend(internal.children.iter()),
                TsNode::Leaf(leaf) => {
                    stats.candidates += leaf.positions.len() as u64;
                    for &p in &leaf.positions {
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
        SearchOutcome { positions, stats }
    }

    /// Verifies every structural invariant: uniform leaf depth, capacity
    /// bounds, and that each node's envelope equals the recomputed envelope
    /// of exactly the windows beneath it. Returns the list of violations.
    pub fn audit(&self, frame: &Materializer<'_>) -> std::result::Result<(), Vec<String>> {
        let mut violations = Vec::new();
        if frame.subseq_len() != self.l || frame.mode() != self.mode {
            violations.push("frame does not match the index configuration".into());
            return Err(violations);
        }

        let mut leaf_depths = Vec::new();
        let mut scratch = Vec::with_capacity(self.l);
        audit_node(
            &self.root,
            true,
            0,
            self,
            frame,
            &mut leaf_depths,
            &mut scratch,
            &mut violations,
        );
        if let Some(&first) = leaf_depths.first() {
            if leaf_depths.iter().any(|&d| d != first) {
                violations.push("leaves are not all on the same level".into());
            }
        }

        let mut seen = self.all_positions();
        let before = seen.len();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != before {
            violations.push("duplicate positions across leaves".into());
        }
        if seen.iter().any(|&p| p >= frame.window_count()) {
            violations.push("position beyond the last window".into());
        }

        if violations.is_empty() {
            Ok(())
        } else {
            Err(violations)
        }
    }

    /// Documented memory accounting: per node, the node struct itself plus
    /// its envelope (2 * l * 8 bytes); leaves add 8 bytes per position and
    /// internal nodes the child pointer array.
    pub fn memory_bytes(&self) -> usize {
        fn walk(node: &TsNode, l: usize) -> usize {
            let own = std::mem::size_of::<TsNode>() + 2 * l * 8;
            match node {
                TsNode::Leaf(leaf) => own + leaf.positions.len() * 8,
                TsNode::Internal(internal) => {
                    own + internal.children.iter().map(|c| walk(c, l)).sum::<usize>()
                }
            }
        }
        std::mem::size_of::<TsIndex>() + walk(&self.root, self.l)
    }
}

impl Engine for TsIndex {
    fn name(&self) -> &'static str {
        "ts"
    }

    fn subseq_len(&self) -> usize {
        self.l
    }

    fn mode(&self) -> NormalizationMode {
        self.mode
    }

    fn search(&self, frame: &Materializer<'_>, query: &Query) -> Result<SearchOutcome> {
        TsIndex::search(self, frame, query)
    }
}

#[allow(clippy::too_many_arguments)]
fn audit_node(
    node: &TsNode,
    is_root: bool,
    depth: usize,
    index: &TsIndex,
    frame: &Materializer<'_>,
    leaf_depths: &mut Vec<usize>,
    scratch: &mut Vec<f64>,
    violations: &mut Vec<String>,
) -> Option<Mbts> {
    let count = node.entry_count();
    if count > index.max_c {
        violations.push(format!("node at depth {depth} holds {count} entries"));
    }
    if !is_root && count < index.mu_c {
        violations.push(format!(
            "non-root node at depth {depth} holds only {count} entries"
        ));
    }
    match node {
        TsNode::Leaf(leaf) => {
            leaf_depths.push(depth);
            if leaf.positions.is_empty() {
                violations.push(format!("empty leaf at depth {depth}"));
                return None;
            }
            let mut recomputed: Option<Mbts> = None;
            for &p in &leaf.positions {
                frame.window_into(p, scratch);
                match &mut recomputed {
                    None => recomputed = Some(Mbts::single(scratch)),
                    Some(env) => env.expand_seq(scratch),
                }
            }
            let recomputed = recomputed.unwrap();
            if recomputed != leaf.mbts {
                violations.push(format!("leaf envelope at depth {depth} is not exact"));
            }
            Some(recomputed)
        }
        TsNode::Internal(internal) => {
            if internal.children.is_empty() {
                violations.push(format!("internal node without children at depth {depth}"));
                return None;
            }
            let mut merged: Option<Mbts> = None;
            for child in &internal.children {
                if let Some(child_env) = audit_node(
                    child,
                    false,
                    depth + 1,
                    index,
                    frame,
                    leaf_depths,
                    scratch,
                    violations,
                ) {
                    match &mut merged {
                        None => merged = Some(child_env),
                        Some(env) => env.expand_mbts(&child_env),
                    }
                }
            }
            if let Some(env) = &merged {
                if *env != internal.mbts {
                    violations.push(format!("internal envelope at depth {depth} is not exact"));
                }
            }
            merged
        }
    }
}

fn choose_child(children: &[TsNode], s: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = children[0].mbts().dist_seq(s);
    let mut best_entries = children[0].entry_count();
    for (i, child) in children.iter().enumerate().skip(1) {
        // Exact whenever d <= best_d, which is all the comparison needs.
        let d = child.mbts().dist_seq_bounded(s, best_d);
        if d < best_d || (d == best_d && child.entry_count() < best_entries) {
            best = i;
            best_d = d;
            best_entries = child.entry_count();
        }
    }
    best
}

fn insert_rec(
    node: &mut TsNode,
    p: usize,
    s: &[f64],
    mu_c: usize,
    max_c: usize,
    frame: &Materializer<'_>,
) -> Option<TsNode> {
    match node {
        TsNode::Leaf(leaf) => {
            leaf.mbts.expand_seq(s);
            leaf.positions.push(p);
            if leaf.positions.len() > max_c {
                Some(split_leaf(leaf, mu_c, frame))
            } else {
                None
            }
        }
        TsNode::Internal(internal) => {
            internal.mbts.expand_seq(s);
            let idx = choose_child(&internal.children, s);
            let sibling = insert_rec(&mut internal.children[idx], p, s, mu_c, max_c, frame);
            if let Some(sibling) = sibling {
                internal.children.insert(idx + 1, sibling);
                if internal.children.len() > max_c {
                    return Some(split_internal(internal, mu_c));
                }
            }
            None
        }
    }
}

/// Index pair maximizing `dist` over all i < j; ties keep the first pair in
/// scan order, i.e. the lexicographically smallest.
fn seed_pair<T, F: Fn(&T, &T) -> f64>(items: &[T], dist: F) -> (usize, usize) {
    let mut best = (0, 1);
    let mut best_d = f64::NEG_INFINITY;
    for i in 0..items.len() {
        for j in (i + 1)..items.len() {
            let d = dist(&items[i], &items[j]);
            if d > best_d {
                best_d = d;
                best = (i, j);
            }
        }
    }
    best
}

/// Splits an overflowing leaf in place; returns the new sibling. Seeds are
/// the two windows farthest apart in Chebyshev distance; the rest go, in
/// original order, to the side whose envelope is nearer, unless one side
/// must absorb everything left to reach the minimum capacity.
fn split_leaf(leaf: &mut LeafNode, mu_c: usize, frame: &Materializer<'_>) -> TsNode {
    let positions = std::mem::take(&mut leaf.positions);
    let windows: Vec<Vec<f64>> = positions
        .iter()
        .map(|&p| {
            let mut w = Vec::with_capacity(frame.subseq_len());
            frame.window_into(p, &mut w);
            w
        })
        .collect();
    let (si, sj) = seed_pair(&windows, |a, b| chebyshev(a, b));

    let mut side_a = (Mbts::single(&windows[si]), vec![positions[si]]);
    let mut side_b = (Mbts::single(&windows[sj]), vec![positions[sj]]);
    let rest: Vec<usize> = (0..positions.len())
        .filter(|&k| k != si && k != sj)
        .collect();
    let mut remaining = rest.len();
    for k in rest {
        let to_a = if side_a.1.len() + remaining <= mu_c {
            true
        } else if side_b.1.len() + remaining <= mu_c {
            false
        } else {
            let da = side_a.0.dist_seq(&windows[k]);
            let db = side_b.0.dist_seq(&windows[k]);
            if da != db {
                da < db
            } else {
                side_a.1.len() <= side_b.1.len()
            }
        };
        let side = if to_a { &mut side_a } else { &mut side_b };
        side.0.expand_seq(&windows[k]);
        side.1.push(positions[k]);
        remaining -= 1;
    }

    debug_assert!(side_a.1.len() >= mu_c && side_b.1.len() >= mu_c);
    leaf.mbts = side_a.0;
    leaf.positions = side_a.1;
    TsNode::Leaf(LeafNode {
        mbts: side_b.0,
        positions: side_b.1,
    })
}

/// Internal-node counterpart of [`split_leaf`], seeded by the two child
/// envelopes farthest apart in band distance.
fn split_internal(node: &mut InternalNode, mu_c: usize) -> TsNode {
    let children = std::mem::take(&mut node.children);
    let (si, sj) = seed_pair(&children, |a: &TsNode, b: &TsNode| {
        a.mbts().dist_mbts(b.mbts())
    });

    let mut order: Vec<Option<TsNode>> = children.into_iter().map(Some).collect();
    let seed_a = order[si].take().unwrap();
    let seed_b = order[sj].take().unwrap();
    let mut side_a = (seed_a.mbts().clone(), vec![seed_a]);
    let mut side_b = (seed_b.mbts().clone(), vec![seed_b]);

    let rest: Vec<TsNode> = order.into_iter().flatten().collect();
    let mut remaining = rest.len();
    for child in rest {
        let to_a = if side_a.1.len() + remaining <= mu_c {
            true
        } else if side_b.1.len() + remaining <= mu_c {
            false
        } else {
            let da = side_a.0.dist_mbts(child.mbts());
            let db = side_b.0.dist_mbts(child.mbts());
            if da != db {
                da < db
            } else {
                side_a.1.len() <= side_b.1.len()
            }
        };
        let side = if to_a { &mut side_a } else { &mut side_b };
        side.0.expand_mbts(child.mbts());
        side.1.push(child);
        remaining -= 1;
    }

    debug_assert!(side_a.1.len() >= mu_c && side_b.1.len() >= mu_c);
    node.mbts = side_a.0;
    node.children = side_a.1;
    TsNode::Internal(InternalNode {
        mbts: side_b.0,
        children: side_b.1,
    })
}
