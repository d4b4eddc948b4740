//! Version-tagged little-endian binary formats for the three indexes.
//!
//! Every file is `magic (4 bytes) | version (u32)` followed by the header
//! fields and node records described in the README. Loading validates
//! structure as it goes and reports the byte offset of the first problem;
//! a truncated or corrupt file never yields a partial index.

use std::collections::BTreeMap;
use std::io::Cursor;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::isax::{
    BreakpointTable, IsaxConfig, IsaxIndex, IsaxNode, IsaxPayload, SaxSymbol, SaxWord,
};
use crate::kv::KvIndex;
use crate::series::NormalizationMode;
use crate::ts_index::{InternalNode, LeafNode, TsIndex, TsNode};

pub const TS_MAGIC: [u8; 4] = *b"TWTS";
pub const KV_MAGIC: [u8; 4] = *b"TWKV";
pub const ISAX_MAGIC: [u8; 4] = *b"TWSX";
pub const FORMAT_VERSION: u32 = 1;

const KIND_LEAF: u8 = 0;
const KIND_INTERNAL: u8 = 1;

fn mode_byte(mode: NormalizationMode) -> u8 {
    match mode {
        NormalizationMode::Raw => 0,
        NormalizationMode::GlobalZ => 1,
        NormalizationMode::PerSubseqZ => 2,
    }
}

struct Reader<'a> {
    cur: Cursor<&'a [u8]>,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Reader {
            cur: Cursor::new(bytes),
        }
    }

    fn offset(&self) -> u64 {
        self.cur.position()
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Format {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn u8(&mut self) -> Result<u8> {
        let off = self.offset();
        self.cur.read_u8().map_err(|_| Error::Format {
            offset: off,
            message: "unexpected end of data".into(),
        })
    }

    fn u16(&mut self) -> Result<u16> {
        let off = self.offset();
        self.cur.read_u16::<LE>().map_err(|_| Error::Format {
            offset: off,
            message: "unexpected end of data".into(),
        })
    }

    fn u32(&mut self) -> Result<u32> {
        let off = self.offset();
        self.cur.read_u32::<LE>().map_err(|_| Error::Format {
            offset: off,
            message: "unexpected end of data".into(),
        })
    }

    fn u64(&mut self) -> Result<u64> {
        let off = self.offset();
        self.cur.read_u64::<LE>().map_err(|_| Error::Format {
            offset: off,
            message: "unexpected end of data".into(),
        })
    }

    fn usize(&mut self) -> Result<usize> {
        let off = self.offset();
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| Error::Format {
            offset: off,
            message: format!("value {v} does not fit in usize"),
        })
    }

    fn f64(&mut self) -> Result<f64> {
        let off = self.offset();
        let v = self.cur.read_f64::<LE>().map_err(|_| Error::Format {
            offset: off,
            message: "unexpected end of data".into(),
        })?;
        if v.is_nan() {
            return Err(Error::Format {
                offset: off,
                message: "NaN stored value".into(),
            });
        }
        Ok(v)
    }

    fn f64s(&mut self, count: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            out.push(self.f64()?);
        }
        Ok(out)
    }

    fn magic_and_version(&mut self, expected: [u8; 4]) -> Result<()> {
        let mut magic = [0u8; 4];
        for b in &mut magic {
            *b = self.u8()?;
        }
        if magic != expected {
            return self.fail(format!("bad magic {:?}, expected {:?}", magic, expected));
        }
        let version = self.u32()?;
        if version != FORMAT_VERSION {
            return self.fail(format!(
                "unsupported format version {version}, expected {FORMAT_VERSION}"
            ));
        }
        Ok(())
    }

    fn mode(&mut self) -> Result<NormalizationMode> {
        match self.u8()? {
            0 => Ok(NormalizationMode::Raw),
            1 => Ok(NormalizationMode::GlobalZ),
            2 => Ok(NormalizationMode::PerSubseqZ),
            other => self.fail(format!("unknown normalization mode byte {other}")),
        }
    }

    fn finish(&self) -> Result<()> {
        let len = self.cur.get_ref().len() as u64;
        if self.offset() != len {
            return Err(Error::Format {
                offset: self.offset(),
                message: format!("{} trailing bytes after index data", len - self.offset()),
            });
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Envelope tree
// ---------------------------------------------------------------------------

impl TsIndex {
    /// Serializes the index: header, then node records in pre-order. Leaves
    /// carry positions only, never window values.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&TS_MAGIC);
        out.write_u32::<LE>(FORMAT_VERSION).unwrap();
        out.write_u64::<LE>(self.l as u64).unwrap();
        out.write_u64::<LE>(self.mu_c as u64).unwrap();
        out.write_u64::<LE>(self.max_c as u64).unwrap();
        out.write_u8(mode_byte(self.mode)).unwrap();
        out.write_u64::<LE>(self.series_len as u64).unwrap();
        out.write_u64::<LE>(self.node_count() as u64).unwrap();
        write_ts_node(&self.root, &mut out);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<TsIndex> {
        let mut r = Reader::new(bytes);
        r.magic_and_version(TS_MAGIC)?;
        let l = r.usize()?;
        let mu_c = r.usize()?;
        let max_c = r.usize()?;
        let mode = r.mode()?;
        let series_len = r.usize()?;
        let node_count = r.usize()?;
        if l == 0 || l > series_len {
            return r.fail(format!(
                "window length {l} invalid for series length {series_len}"
            ));
        }
        crate::ts_index::validate_capacities(mu_c, max_c).map_err(|e| Error::Format {
            offset: r.offset(),
            message: e.to_string(),
        })?;
        let mut remaining = node_count;
        let windows = series_len - l + 1;
        let root = read_ts_node(&mut r, l, max_c, windows, &mut remaining)?;
        if remaining != 0 {
            return r.fail(format!("{remaining} declared nodes missing from the file"));
        }
        r.finish()?;
        Ok(TsIndex {
            root,
            l,
            mu_c,
            max_c,
            mode,
            series_len,
        })
    }
}

fn write_ts_node(node: &TsNode, out: &mut Vec<u8>) {
    match node {
        TsNode::Leaf(leaf) => {
            out.write_u8(KIND_LEAF).unwrap();
            out.write_u32::<LE>(leaf.positions.len() as u32).unwrap();
            for &v in leaf.mbts.upper() {
                out.write_f64::<LE>(v).unwrap();
            }
            for &v in leaf.mbts.lower() {
                out.write_f64::<LE>(v).unwrap();
            }
            for &p in &leaf.positions {
                out.write_u64::<LE>(p as u64).unwrap();
            }
        }
        TsNode::Internal(internal) => {
            out.write_u8(KIND_INTERNAL).unwrap();
            out.write_u32::<LE>(internal.children.len() as u32).unwrap();
            for &v in internal.mbts.upper() {
                out.write_f64::<LE>(v).unwrap();
            }
            for &v in internal.mbts.lower() {
                out.write_f64::<LE>(v).unwrap();
            }
            for child in &internal.children {
                write_ts_node(child, out);
            }
        }
    }
}

fn read_ts_node(
    r: &mut Reader<'_>,
    l: usize,
    max_c: usize,
    windows: usize,
    remaining: &mut usize,
) -> Result<TsNode> {
    if *remaining == 0 {
        return r.fail("more nodes in the file than the header declares");
    }
    *remaining -= 1;
    let kind = r.u8()?;
    let entries = r.u32()? as usize;
    if entries == 0 || entries > max_c {
        return r.fail(format!("node entry count {entries} outside 1..={max_c}"));
    }
    let upper = r.f64s(l)?;
    let lower = r.f64s(l)?;
    if upper.iter().zip(&lower).any(|(u, lo)| lo > u) {
        return r.fail("envelope with lower bound above upper bound");
    }
    let mbts = crate::mbts::Mbts::from_parts(upper, lower);
    match kind {
        KIND_LEAF => {
            let mut positions = Vec::with_capacity(entries);
            for _ in 0..entries {
                let p = r.usize()?;
                if p >= windows {
                    return r.fail(format!(
                        "position {p} beyond the last window {}",
                        windows - 1
                    ));
                }
                positions.push(p);
            }
            Ok(TsNode::Leaf(LeafNode { mbts, positions }))
        }
        KIND_INTERNAL => {
            let mut children = Vec::with_capacity(entries);
            for _ in 0..entries {
                children.push(read_ts_node(r, l, max_c, windows, remaining)?);
            }
            Ok(TsNode::Internal(InternalNode { mbts, children }))
        }
        other => r.fail(format!("unknown node kind {other}")),
    }
}

// ---------------------------------------------------------------------------
// Mean-bucket index
// ---------------------------------------------------------------------------

impl KvIndex {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&KV_MAGIC);
        out.write_u32::<LE>(FORMAT_VERSION).unwrap();
        out.write_u64::<LE>(self.l as u64).unwrap();
        out.write_u8(mode_byte(self.mode)).unwrap();
        out.write_u64::<LE>(self.series_len as u64).unwrap();
        out.write_f64::<LE>(self.bucket_width).unwrap();
        out.write_u64::<LE>(self.table.len() as u64).unwrap();
        for (&bucket, intervals) in &self.table {
            out.write_i64::<LE>(bucket).unwrap();
            out.write_u32::<LE>(intervals.len() as u32).unwrap();
            for &(a, b) in intervals {
                out.write_u64::<LE>(a as u64).unwrap();
                out.write_u64::<LE>(b as u64).unwrap();
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<KvIndex> {
        let mut r = Reader::new(bytes);
        r.magic_and_version(KV_MAGIC)?;
        let l = r.usize()?;
        let mode = r.mode()?;
        if mode == NormalizationMode::PerSubseqZ {
            return r.fail("mean-bucket index stored under per-window normalization");
        }
        let series_len = r.usize()?;
        if l == 0 || l > series_len {
            return r.fail(format!(
                "window length {l} invalid for series length {series_len}"
            ));
        }
        let bucket_width = r.f64()?;
        if !bucket_width.is_finite() || bucket_width <= 0.0 {
            return r.fail(format!("bucket width {bucket_width} must be positive"));
        }
        let windows = series_len - l + 1;
        let buckets = r.usize()?;
        let mut table = BTreeMap::new();
        let mut last_bucket: Option<i64> = None;
        for _ in 0..buckets {
            let off = r.offset();
            let id = r.cur.read_i64::<LE>().map_err(|_| Error::Format {
                offset: off,
                message: "unexpected end of data".into(),
            })?;
            if let Some(prev) = last_bucket {
                if id <= prev {
                    return r.fail(format!("bucket ids out of order: {id} after {prev}"));
                }
            }
            last_bucket = Some(id);
            let count = r.u32()? as usize;
            let mut intervals = Vec::with_capacity(count);
            for _ in 0..count {
                let a = r.usize()?;
                let b = r.usize()?;
                if a > b || b >= windows {
                    return r.fail(format!("invalid interval [{a}, {b}]"));
                }
                intervals.push((a, b));
            }
            table.insert(id, intervals);
        }
        r.finish()?;
        Ok(KvIndex {
            l,
            bucket_width,
            mode,
            series_len,
            table,
        })
    }
}

// ---------------------------------------------------------------------------
// SAX-word tree
// ---------------------------------------------------------------------------

impl IsaxIndex {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&ISAX_MAGIC);
        out.write_u32::<LE>(FORMAT_VERSION).unwrap();
        out.write_u64::<LE>(self.l as u64).unwrap();
        out.write_u64::<LE>(self.config.segments as u64).unwrap();
        out.write_u16::<LE>(self.config.base_cardinality).unwrap();
        out.write_u16::<LE>(self.config.max_cardinality).unwrap();
        out.write_u64::<LE>(self.config.leaf_cap as u64).unwrap();
        out.write_u8(mode_byte(self.mode)).unwrap();
        out.write_u64::<LE>(self.series_len as u64).unwrap();
        let cuts = self.breakpoints().cuts();
        out.write_u64::<LE>(cuts.len() as u64).unwrap();
        for &c in cuts {
            out.write_f64::<LE>(c).unwrap();
        }
        out.write_u32::<LE>(self.roots.len() as u32).unwrap();
        for root in &self.roots {
            write_isax_node(root, &mut out);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<IsaxIndex> {
        let mut r = Reader::new(bytes);
        r.magic_and_version(ISAX_MAGIC)?;
        let l = r.usize()?;
        let segments = r.usize()?;
        let base_cardinality = r.u16()?;
        let max_cardinality = r.u16()?;
        let leaf_cap = r.usize()?;
        let mode = r.mode()?;
        let series_len = r.usize()?;
        if l == 0 || l > series_len || segments == 0 || segments > l {
            return r.fail("inconsistent length fields".to_string());
        }
        let cut_count = r.usize()?;
        if cut_count + 1 != max_cardinality as usize {
            return r.fail(format!(
                "cut count {cut_count} inconsistent with max cardinality {max_cardinality}"
            ));
        }
        let cuts = r.f64s(cut_count)?;
        let table = BreakpointTable::new(cuts).map_err(|e| Error::Format {
            offset: r.offset(),
            message: e.to_string(),
        })?;
        let config = IsaxConfig {
            segments,
            base_cardinality,
            max_cardinality,
            leaf_cap,
        };
        let windows = series_len - l + 1;
        let root_count = r.u32()? as usize;
        let mut roots = Vec::with_capacity(root_count);
        for _ in 0..root_count {
            roots.push(read_isax_node(&mut r, &config, windows)?);
        }
        r.finish()?;
        Ok(IsaxIndex::from_parts(
            l, config, mode, series_len, table, roots,
        ))
    }
}

fn write_isax_node(node: &IsaxNode, out: &mut Vec<u8>) {
    match &node.payload {
        IsaxPayload::Leaf(positions) => {
            out.write_u8(KIND_LEAF).unwrap();
            write_word(&node.word, out);
            out.write_u32::<LE>(positions.len() as u32).unwrap();
            for &p in positions {
                out.write_u64::<LE>(p as u64).unwrap();
            }
        }
        IsaxPayload::Internal {
            split_seg,
            children,
        } => {
            out.write_u8(KIND_INTERNAL).unwrap();
            write_word(&node.word, out);
            out.write_u16::<LE>(*split_seg).unwrap();
            write_isax_node(&children[0], out);
            write_isax_node(&children[1], out);
        }
    }
}

fn write_word(word: &SaxWord, out: &mut Vec<u8>) {
    for sym in word.symbols() {
        out.write_u16::<LE>(sym.index).unwrap();
        out.write_u16::<LE>(sym.cardinality).unwrap();
    }
}

fn read_isax_node(r: &mut Reader<'_>, config: &IsaxConfig, windows: usize) -> Result<IsaxNode> {
    let kind = r.u8()?;
    let mut symbols = Vec::with_capacity(config.segments);
    for _ in 0..config.segments {
        let index = r.u16()?;
        let cardinality = r.u16()?;
        if !cardinality.is_power_of_two()
            || cardinality < config.base_cardinality
            || cardinality > config.max_cardinality
            || index >= cardinality
        {
            return r.fail(format!(
                "invalid symbol {index}@{cardinality} for cardinalities {}..={}",
                config.base_cardinality, config.max_cardinality
            ));
        }
        symbols.push(SaxSymbol { index, cardinality });
    }
    let word = SaxWord::from_symbols(symbols);
    match kind {
        KIND_LEAF => {
            let count = r.u32()? as usize;
            let mut positions = Vec::with_capacity(count);
            for _ in 0..count {
                let p = r.usize()?;
                if p >= windows {
                    return r.fail(format!("position {p} beyond the last window"));
                }
                positions.push(p);
            }
            Ok(IsaxNode {
                word,
                payload: IsaxPayload::Leaf(positions),
            })
        }
        KIND_INTERNAL => {
            let split_seg = r.u16()?;
            if split_seg as usize >= config.segments {
                return r.fail(format!("split segment {split_seg} out of range"));
            }
            let a = read_isax_node(r, config, windows)?;
            let b = read_isax_node(r, config, windows)?;
            Ok(IsaxNode {
                word,
                payload: IsaxPayload::Internal {
                    split_seg,
                    children: Box::new([a, b]),
                },
            })
        }
        other => r.fail(format!("unknown node kind {other}")),
    }
}

// ---------------------------------------------------------------------------
// Magic-dispatched loading
// ---------------------------------------------------------------------------

/// Any persisted index, dispatched on its file magic.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyIndex {
    Ts(TsIndex),
    Kv(KvIndex),
    Isax(IsaxIndex),
}

impl AnyIndex {
    pub fn from_bytes(bytes: &[u8]) -> Result<AnyIndex> {
        if bytes.len() < 4 {
            return Err(Error::Format {
                offset: 0,
                message: "file shorter than the magic header".into(),
            });
        }
        let magic: [u8; 4] = bytes[..4].try_into().expect("4 bytes");
        match magic {
            TS_MAGIC => Ok(AnyIndex::Ts(TsIndex::from_bytes(bytes)?)),
            KV_MAGIC => Ok(AnyIndex::Kv(KvIndex::from_bytes(bytes)?)),
            ISAX_MAGIC => Ok(AnyIndex::Isax(IsaxIndex::from_bytes(bytes)?)),
            other => Err(Error::Format {
                offset: 0,
                message: format!("unrecognized magic {other:?}"),
            }),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        match self {
            AnyIndex::Ts(i) => i.to_bytes(),
            AnyIndex::Kv(i) => i.to_bytes(),
            AnyIndex::Isax(i) => i.to_bytes(),
        }
    }

    pub fn engine(&self) -> &dyn Engine {
        match self {
            AnyIndex::Ts(i) => i,
            AnyIndex::Kv(i) => i,
            AnyIndex::Isax(i) => i,
        }
    }

    pub fn memory_bytes(&self) -> usize {
        match self {
            AnyIndex::Ts(i) => i.memory_bytes(),
            AnyIndex::Kv(i) => i.memory_bytes(),
            AnyIndex::Isax(i) => i.memory_bytes(),
        }
    }
}
