//! Append-only on-disk ledger.
//!
//! File layout (all integers little-endian):
//!
//! ```text
//! magic: 8 bytes  b"PORLEDG1"
//! record*:
//!     len:     u32            length of payload in bytes
//!     payload: len bytes
//!     crc:     u32            CRC-32 (IEEE) of payload
//! ```
//!
//! Payload layout per record:
//!
//! ```text
//! term:         u64
//! index:        u64
//! prev_index:   u64
//! origin:       u32
//! committed_at: u64
//! n_entries:    u8
//! entry*:       key_tag u8, value_len u16, value bytes (UTF-8)
//! ```
//!
//! A write interrupted mid-record leaves a partial tail; `Ledger::open`
//! truncates it, keeps every intact record, and reports the recovery so
//! callers can log it. Appends enforce contiguous indices.

use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use crate::domain::{
    AttackAttribute, AttributeKey, DomainError, LedgerEntry, LogIndex, NodeId, Proposal, SimTime,
    Term,
};

const MAGIC: &[u8; 8] = b"PORLEDG1";
/// Upper bound on a sane payload; anything larger is treated as corruption.
const MAX_PAYLOAD: u32 = 1 << 20;

#[derive(Debug, thiserror::Error)]
pub enum LedgerError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a ledger file (bad magic)")]
    BadMagic,
    #[error("append would create index gap: last {last}, got {got}")]
    IndexGap { last: u64, got: u64 },
    #[error("record decode failed: {0}")]
    Decode(String),
    #[error("{0}")]
    Domain(#[from] DomainError),
}

/// What `open` had to do to make the file consistent again.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RecoveryReport {
    pub truncated_bytes: u64,
    pub recovered: bool,
}

pub struct Ledger {
    file: File,
    path: PathBuf,
    entries: Vec<LedgerEntry>,
}

impl Ledger {
    /// Creates a fresh ledger, replacing any existing file at `path`.
    pub fn create(path: impl AsRef<Path>) -> Result<Self, LedgerError> {
        let path = path.as_ref().to_path_buf();
        let mut file = OpenOptions::new()
            .read(true)
            .write(true)
            .create(true)
            .truncate(true)
            .open(&path)?;
        file.write_all(MAGIC)?;
        file.flush()?;
        Ok(Ledger {
            file,
            path,
            entries: Vec::new(),
        })
    }

    /// Opens an existing ledger, truncating any partial trailing record.
    pub fn open(path: impl AsRef<Path>) -> Result<(Self, RecoveryReport), LedgerError> {
        let path = path.as_ref().to_path_buf();
        let mut file = OpenOptions::new().read(true).write(true).open(&path)?;
        let mut raw = Vec::new();
        file.read_to_end(&mut raw)?;
        if raw.len() < MAGIC.len() || &raw[..MAGIC.len()] != MAGIC {
            return Err(LedgerError::BadMagic);
        }

        let mut entries = Vec::new();
        let mut pos = MAGIC.len();
        let good_end;
        loop {
            if pos == raw.len() {
                good_end = pos;
                break;
            }
            let Some(rest) = record_at(&raw, pos) else {
                good_end = pos;
                break;
            };
            let (payload, next) = rest;
            match decode_entry(payload) {
                Ok(entry) => {
                    entries.push(entry);
                    pos = next;
                }
                Err(_) => {
                    good_end = pos;
                    break;
                }
            }
        }

        let truncated = (raw.len() - good_end) as u64;
        if truncated > 0 {
            file.set_len(good_end as u64)?;
        }
        file.seek(SeekFrom::End(0))?;
        Ok((
            Ledger {
                file,
                path,
                entries,
            },
            RecoveryReport {
                truncated_bytes: truncated,
                recovered: truncated > 0,
            },
        ))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn last_index(&self) -> LogIndex {
        self.entries
            .last()
            .map(|e| e.proposal.index)
            .unwrap_or(LogIndex(0))
    }

    /// Appends one committed entry. The entry's index must directly follow
    /// the current last index.
    pub fn append(&mut self, entry: &LedgerEntry) -> Result<(), LedgerError> {
        let expected = self.last_index().next();
        if entry.proposal.index != expected {
            return Err(LedgerError::IndexGap {
                last: self.last_index().0,
                got: entry.proposal.index.0,
            });
        }
        let payload = encode_entry(entry);
        let mut frame = Vec::with_capacity(payload.len() + 8);
        frame.extend_from_slice(&(payload.len() as u32).to_le_bytes());
        frame.extend_from_slice(&payload);
        frame.extend_from_slice(&crc32(&payload).to_le_bytes());
        self.file.write_all(&frame)?;
        self.file.flush()?;
        self.entries.push(entry.clone());
        Ok(())
    }
}

/// Reads and validates the framed record starting at `pos`.
/// Returns the payload slice and the offset just past the record, or `None`
/// when the bytes at `pos` are short or fail the checksum.
fn record_at(raw: &[u8], pos: usize) -> Option<(&[u8], usize)> {
    let len_end = pos.checked_add(4)?;
    if len_end > raw.len() {
        return None;
    }
    let len = u32::from_le_bytes(raw[pos..len_end].try_into().unwrap());
    if len == 0 || len > MAX_PAYLOAD {
        return None;
    }
    let payload_end = len_end.checked_add(len as usize)?;
    let crc_end = payload_end.checked_add(4)?;
    if crc_end > raw.len() {
        return None;
    }
    let payload = &raw[len_end..payload_end];
    let stored = u32::from_le_bytes(raw[payload_end..crc_end].try_into().unwrap());
    if crc32(payload) != stored {
        return None;
    }
    Some((payload, crc_end))
}

pub fn encode_entry(entry: &LedgerEntry) -> Vec<u8> {
    let p = &entry.proposal;
    let mut out = Vec::with_capacity(64);
    out.extend_from_slice(&p.term.0.to_le_bytes());
    out.extend_from_slice(&p.index.0.to_le_bytes());
    out.extend_from_slice(&p.prev_index.0.to_le_bytes());
    out.extend_from_slice(&p.origin.0.to_le_bytes());
    out.extend_from_slice(&entry.committed_at.0.to_le_bytes());
    out.push(p.entries.len() as u8);
    for attr in &p.entries {
        out.push(attr.key.tag());
        let bytes = attr.value.as_bytes();
        out.extend_from_slice(&(bytes.len() as u16).to_le_bytes());
        out.extend_from_slice(bytes);
    }
    out
}

pub fn decode_entry(payload: &[u8]) -> Result<LedgerEntry, LedgerError> {
    let mut cur = Cursor { buf: payload, pos: 0 };
    let term = Term(cur.u64()?);
    let index = LogIndex(cur.u64()?);
    let prev_index = LogIndex(cur.u64()?);
    let origin = NodeId::new(cur.u32()?);
    let committed_at = SimTime(cur.u64()?);
    let n = cur.u8()? as usize;
    let mut entries = Vec::with_capacity(n);
    for _ in 0..n {
        let tag = cur.u8()?;
        let key = AttributeKey::from_tag(tag)
            .ok_or_else(|| LedgerError::Decode(format!("unknown attribute tag {tag}")))?;
        let len = cur.u16()? as usize;
        let bytes = cur.bytes(len)?;
        let value = std::str::from_utf8(bytes)
            .map_err(|e| LedgerError::Decode(format!("bad utf-8 in value: {e}")))?;
        entries.push(AttackAttribute::new(key, value));
    }
    if cur.pos != payload.len() {
        return Err(LedgerError::Decode(format!(
            "{} trailing bytes",
            payload.len() - cur.pos
        )));
    }
    if index != prev_index.next() {
        return Err(LedgerError::Decode(format!(
            "index {} does not follow prev {}",
            index.0, prev_index.0
        )));
    }
    let proposal = Proposal::new(term, prev_index, entries, origin)?;
    Ok(LedgerEntry {
        proposal,
        committed_at,
    })
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn bytes(&mut self, n: usize) -> Result<&'a [u8], LedgerError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| LedgerError::Decode("record payload too short".into()))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }
    fn u8(&mut self) -> Result<u8, LedgerError> {
        Ok(self.bytes(1)?[0])
    }
    fn u16(&mut self) -> Result<u16, LedgerError> {
        Ok(u16::from_le_bytes(self.bytes(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32, LedgerError> {
        Ok(u32::from_le_bytes(self.bytes(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, LedgerError> {
        Ok(u64::from_le_bytes(self.bytes(8)?.try_into().unwrap()))
    }
}

/// CRC-32 (IEEE 802.3), table-driven.
pub fn crc32(data: &[u8]) -> u32 {
    static TABLE: std::sync::OnceLock<[u32; 256]> = std::sync::OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = [0u32; 256];
        for (i, slot) in t.iter_mut().enumerate() {
            let mut c = i as u32;
            for _ in 0..8 {
                c = if c & 1 != 0 { 0xEDB8_8320 ^ (c >> 1) } else { c >> 1 };
            }
            *slot = c;
        }
        t
    });
    let mut c = 0xFFFF_FFFFu32;
    for &b in data {
        c = table[((c ^ b as u32) & 0xFF) as usize] ^ (c >> 8);
    }
    c ^ 0xFFFF_FFFF
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cti::{generate_cti, generate_proposal, GenerationProfile};

    fn entry(i: u64, committed_at: u64) -> LedgerEntry {
        let profile = GenerationProfile::default();
        let record = generate_cti(&profile, 77, i).unwrap();
        let proposal =
            generate_proposal(&record, Term(1), LogIndex(i - 1), NodeId::new(0)).unwrap();
        LedgerEntry {
            proposal,
            committed_at: SimTime(committed_at),
        }
    }

    #[test]
    fn crc32_known_vectors() {
        // Standard check values for the IEEE polynomial.
        assert_eq!(crc32(b""), 0);
        assert_eq!(crc32(b"123456789"), 0xCBF4_3926);
        assert_eq!(crc32(b"The quick brown fox jumps over the lazy dog"), 0x414F_A339);
    }

    #[test]
    fn roundtrip_encode_decode() {
        let e = entry(1, 250);
        let payload = encode_entry(&e);
        assert_eq!(decode_entry(&payload).unwrap(), e);
    }

    #[test]
    fn append_then_reopen_preserves_entries() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("node.ledger");
        let mut ledger = Ledger::create(&path).unwrap();
        for i in 1..=5 {
            ledger.append(&entry(i, i * 100)).unwrap();
        }
        drop(ledger);

        let (reopened, report) = Ledger::open(&path).unwrap();
        assert!(!report.recovered);
        assert_eq!(reopened.entries().len(), 5);
        assert_eq!(reopened.last_index(), LogIndex(5));
        assert_eq!(reopened.entries()[2], entry(3, 300));
    }

    #[test]
    fn index_gap_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut ledger = Ledger::create(dir.path().join("l")).unwrap();
        ledger.append(&entry(1, 10)).unwrap();
        let err = ledger.append(&entry(3, 20)).unwrap_err();
        assert!(matches!(err, LedgerError::IndexGap { last: 1, got: 3 }));
        // A failed append must not advance state.
        assert_eq!(ledger.last_index(), LogIndex(1));
        ledger.append(&entry(2, 30)).unwrap();
    }

    #[test]
    fn partial_tail_is_truncated_on_open() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l");
        let mut ledger = Ledger::create(&path).unwrap();
        ledger.append(&entry(1, 10)).unwrap();
        ledger.append(&entry(2, 20)).unwrap();
        drop(ledger);

        // Simulate a crash mid-append: frame for entry 3 cut short.
        let payload = encode_entry(&entry(3, 30));
        let mut tail = Vec::new();
        tail.extend_from_slice(&(payload.len() as u32).to_le_bytes());
        tail.extend_from_slice(&payload[..payload.len() / 2]);
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(&tail).unwrap();
        drop(f);

        let (recovered, report) = Ledger::open(&path).unwrap();
        assert!(report.recovered);
        assert_eq!(report.truncated_bytes, tail.len() as u64);
        assert_eq!(recovered.entries().len(), 2);
        assert_eq!(recovered.last_index(), LogIndex(2));
    }

    #[test]
    fn corrupt_crc_drops_tail() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l");
        let mut ledger = Ledger::create(&path).unwrap();
        ledger.append(&entry(1, 10)).unwrap();
        ledger.append(&entry(2, 20)).unwrap();
        drop(ledger);

        // Flip one byte inside the second record's payload.
        let mut raw = std::fs::read(&path).unwrap();
        let idx = raw.len() - 10;
        raw[idx] ^= 0xFF;
        std::fs::write(&path, &raw).unwrap();

        let (recovered, report) = Ledger::open(&path).unwrap();
        assert!(report.recovered);
        assert_eq!(recovered.entries().len(), 1);
    }

    #[test]
    fn append_resumes_after_recovery() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l");
        let mut ledger = Ledger::create(&path).unwrap();
        ledger.append(&entry(1, 10)).unwrap();
        drop(ledger);

        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(&[9, 0, 0]).unwrap();
        drop(f);

        let (mut recovered, report) = Ledger::open(&path).unwrap();
        assert!(report.recovered);
        recovered.append(&entry(2, 40)).unwrap();
        drop(recovered);

        let (again, report) = Ledger::open(&path).unwrap();
        assert!(!report.recovered);
        assert_eq!(again.entries().len(), 2);
    }

    #[test]
    fn bad_magic_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l");
        std::fs::write(&path, b"NOTALEDGERFILE").unwrap();
        assert!(matches!(Ledger::open(&path), Err(LedgerError::BadMagic)));
    }

    #[test]
    fn empty_value_and_long_value_roundtrip() {
        let mut e = entry(1, 1);
        e.proposal.entries[0].value = String::new();
        e.proposal.entries[5].value = "x".repeat(4000);
        let payload = encode_entry(&e);
        assert_eq!(decode_entry(&payload).unwrap(), e);
    }
}
