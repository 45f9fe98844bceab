//! Binary index snapshots.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "JSIM" | version u16 | tree count u32 | ids u32* | removed count u32 |
//! removed ids u32* | node count u64 | label count u32 | label record* |
//! FNV-1a 64 checksum of everything before it
//! ```
//!
//! A label record is its byte length (u32) followed by the label key, the
//! label frequency (u64) and the nested levels, each level being a key count
//! (u32) and then `key u32` + child level pairs. The innermost level stores
//! a posting list as a count and that many tree ids.
//!
//! A label key is a node type byte (0 object, 1 array, 2 key, 3 literal),
//! a label tag byte (0 none, 1 key, 2 null, 3 false, 4 true, 5 number,
//! 6 string) and, for tags 1, 5 and 6, a u32 length and UTF-8 bytes.
//! Numbers are stored in canonical text form.

use std::collections::BTreeMap;

use thiserror::Error;

use super::{JsimIndex, LabelEntry, TreeId};
use crate::tree::{Label, LabelKey, Literal, NodeType, Number};

const MAGIC: &[u8; 4] = b"JSIM";
pub const SNAPSHOT_VERSION: u16 = 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SnapshotError {
    #[error("not an index snapshot (bad magic)")]
    BadMagic,
    #[error("unsupported snapshot version {0}")]
    UnsupportedVersion(u16),
    #[error("snapshot is truncated")]
    Truncated,
    #[error("snapshot checksum mismatch")]
    ChecksumMismatch,
    #[error("corrupt snapshot: {0}")]
    Corrupt(&'static str),
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn put_u32(out: &mut Vec<u8>, x: u32) {
    out.extend_from_slice(&x.to_le_bytes());
}

fn put_len(out: &mut Vec<u8>, n: usize) {
    put_u32(out, u32::try_from(n).expect("count fits in u32"));
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_len(out, s.len());
    out.extend_from_slice(s.as_bytes());
}

fn put_label_key(out: &mut Vec<u8>, key: &LabelKey) {
    out.push(match key.node_type {
        NodeType::Object => 0,
        NodeType::Array => 1,
        NodeType::Key => 2,
        NodeType::Literal => 3,
    });
    match &key.label {
        Label::Null => out.push(0),
        Label::Key(k) => {
            out.push(1);
            put_str(out, k);
        }
        Label::Literal(Literal::Null) => out.push(2),
        Label::Literal(Literal::Bool(false)) => out.push(3),
        Label::Literal(Literal::Bool(true)) => out.push(4),
        Label::Literal(Literal::Number(n)) => {
            out.push(5);
            put_str(out, &n.to_string());
        }
        Label::Literal(Literal::String(s)) => {
            out.push(6);
            put_str(out, s);
        }
    }
}

pub(crate) fn encode(idx: &JsimIndex) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    for set in [&idx.trees, &idx.tombstones] {
        put_len(&mut out, set.len());
        for &id in set {
            put_u32(&mut out, id);
        }
    }
    out.extend_from_slice(&idx.node_count.to_le_bytes());
    put_len(&mut out, idx.labels.len());
    let mut record = Vec::new();
    for (key, entry) in &idx.labels {
        record.clear();
        put_label_key(&mut record, key);
        record.extend_from_slice(&entry.freq.to_le_bytes());
        put_len(&mut record, entry.by_desc.len());
        for (&d, anc) in &entry.by_desc {
            put_u32(&mut record, d);
            put_len(&mut record, anc.len());
            for (&a, lr) in anc {
                put_u32(&mut record, a);
                put_len(&mut record, lr.len());
                for (&l, ids) in lr {
                    put_u32(&mut record, l);
                    put_len(&mut record, ids.len());
                    for &id in ids {
                        put_u32(&mut record, id);
                    }
                }
            }
        }
        put_len(&mut out, record.len());
        out.extend_from_slice(&record);
    }
    let sum = fnv1a(&out);
    out.extend_from_slice(&sum.to_le_bytes());
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], SnapshotError> {
        let end = self.pos.checked_add(n).ok_or(SnapshotError::Truncated)?;
        let s = self.bytes.get(self.pos..end).ok_or(SnapshotError::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, SnapshotError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, SnapshotError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, SnapshotError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    /// A count of items that each need at least `min_size` more bytes.
    fn count(&mut self, min_size: usize) -> Result<usize, SnapshotError> {
        let n = self.u32()? as usize;
        if n.saturating_mul(min_size) > self.bytes.len() - self.pos {
            return Err(SnapshotError::Truncated);
        }
        Ok(n)
    }

    fn string(&mut self) -> Result<String, SnapshotError> {
        let n = self.count(1)?;
        let raw = self.take(n)?;
        String::from_utf8(raw.to_vec()).map_err(|_| SnapshotError::Corrupt("invalid UTF-8"))
    }

    fn sorted_keys<T>(
        &mut self,
        mut item: impl FnMut(&mut Self) -> Result<T, SnapshotError>,
    ) -> Result<BTreeMap<u32, T>, SnapshotError> {
        let n = self.count(8)?;
        let mut map = BTreeMap::new();
        let mut last = None;
        for _ in 0..n {
            let k = self.u32()?;
            if last.is_some_and(|l| l >= k) {
                return Err(SnapshotError::Corrupt("level keys out of order"));
            }
            last = Some(k);
            let child = item(self)?;
            map.insert(k, child);
        }
        if n == 0 {
            return Err(SnapshotError::Corrupt("empty level"));
        }
        Ok(map)
    }

    fn label_key(&mut self) -> Result<LabelKey, SnapshotError> {
        let node_type = match self.u8()? {
            0 => NodeType::Object,
            1 => NodeType::Array,
            2 => NodeType::Key,
            3 => NodeType::Literal,
            _ => return Err(SnapshotError::Corrupt("unknown node type")),
        };
        let label = match self.u8()? {
            0 => Label::Null,
            1 => Label::Key(self.string()?),
            2 => Label::Literal(Literal::Null),
            3 => Label::Literal(Literal::Bool(false)),
            4 => Label::Literal(Literal::Bool(true)),
            5 => {
                let text = self.string()?;
                let n: Number = text
                    .parse()
                    .map_err(|_| SnapshotError::Corrupt("invalid number"))?;
                Label::Literal(Literal::Number(n))
            }
            6 => Label::Literal(Literal::String(self.string()?)),
            _ => return Err(SnapshotError::Corrupt("unknown label tag")),
        };
        let consistent = matches!(
            (&node_type, &label),
            (NodeType::Object | NodeType::Array, Label::Null)
                | (NodeType::Key, Label::Key(_))
                | (NodeType::Literal, Label::Literal(_))
        );
        if !consistent {
            return Err(SnapshotError::Corrupt("label does not match node type"));
        }
        Ok(LabelKey::new(node_type, label))
    }
}

pub(crate) fn decode(bytes: &[u8]) -> Result<JsimIndex, SnapshotError> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(if bytes.len() < MAGIC.len() && MAGIC.starts_with(bytes) {
            SnapshotError::Truncated
        } else {
            SnapshotError::BadMagic
        });
    }
    if bytes.len() < 6 {
        return Err(SnapshotError::Truncated);
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != SNAPSHOT_VERSION {
        return Err(SnapshotError::UnsupportedVersion(version));
    }
    if bytes.len() < 6 + 8 {
        return Err(SnapshotError::Truncated);
    }
    let (body, tail) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(tail.try_into().expect("8 bytes"));
    if fnv1a(body) != stored {
        return Err(SnapshotError::ChecksumMismatch);
    }

    let mut r = Reader { bytes: body, pos: 6 };
    let mut idx = JsimIndex::default();
    for set in [&mut idx.trees, &mut idx.tombstones] {
        let n = r.count(4)?;
        for _ in 0..n {
            set.insert(r.u32()?);
        }
    }
    if !idx.tombstones.is_subset(&idx.trees) {
        return Err(SnapshotError::Corrupt("removed id was never indexed"));
    }
    idx.node_count = r.u64()?;
    let labels = r.count(4)?;
    for _ in 0..labels {
        let len = r.count(1)?;
        let end = r.pos + len;
        let key = r.label_key()?;
        let freq = r.u64()?;
        let trees = &idx.trees;
        let by_desc = r.sorted_keys(|r| {
            r.sorted_keys(|r| {
                r.sorted_keys(|r| {
                    let n = r.count(4)?;
                    let mut ids: Vec<TreeId> = Vec::with_capacity(n);
                    for _ in 0..n {
                        let id = r.u32()?;
                        if ids.last().is_some_and(|&l| l >= id) || !trees.contains(&id) {
                            return Err(SnapshotError::Corrupt("bad posting list"));
                        }
                        ids.push(id);
                    }
                    Ok(ids)
                })
            })
        })?;
        if r.pos != end {
            return Err(SnapshotError::Corrupt("label record length mismatch"));
        }
        if idx.labels.insert(key, LabelEntry { freq, by_desc }).is_some() {
            return Err(SnapshotError::Corrupt("duplicate label record"));
        }
    }
    if r.pos != body.len() {
        return Err(SnapshotError::Corrupt("trailing bytes"));
    }
    Ok(idx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::parse_document;

    fn sample() -> JsimIndex {
        let mut idx = JsimIndex::new();
        for (i, doc) in [
            r#"{"a": [1, 2.5, -3e-9], "b": {"c": null, "d": true, "e": false}}"#,
            r#"["x", "y\n", {"k": "é"}]"#,
            r#"{}"#,
        ]
        .iter()
        .enumerate()
        {
            idx.insert(i as TreeId * 3, &parse_document(doc).unwrap()).unwrap();
        }
        idx.remove(3);
        idx
    }

    #[test]
    fn round_trip() {
        let idx = sample();
        let bytes = idx.save();
        assert_eq!(&bytes[..4], b"JSIM");
        let back = JsimIndex::load(&bytes).unwrap();
        assert_eq!(back, idx);
        assert_eq!(back.save(), bytes);
    }

    #[test]
    fn empty_round_trip() {
        let idx = JsimIndex::new();
        assert_eq!(JsimIndex::load(&idx.save()).unwrap(), idx);
    }

    #[test]
    fn fails_closed() {
        let bytes = sample().save();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert_eq!(JsimIndex::load(&bad), Err(SnapshotError::BadMagic));
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert_eq!(JsimIndex::load(&bad), Err(SnapshotError::UnsupportedVersion(9)));
        for cut in [0, 2, 5, 10, bytes.len() / 2, bytes.len() - 1] {
            assert!(JsimIndex::load(&bytes[..cut]).is_err(), "cut at {cut}");
        }
        let mut bad = bytes.clone();
        let mid = bytes.len() / 2;
        bad[mid] ^= 0x40;
        assert_eq!(JsimIndex::load(&bad), Err(SnapshotError::ChecksumMismatch));
        assert_eq!(JsimIndex::load(b""), Err(SnapshotError::Truncated));
    }
}
