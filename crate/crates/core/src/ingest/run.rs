//! Intermediate run files.
//!
//! A run starts with the 6-byte magic `MWRUN\x01` and one byte giving the
//! digest width in bytes (8 or 16). Each record follows as
//!
//! ```text
//! varint payload_len
//! u8     src lang id     (index into the run-local LangTable)
//! u8     tgt lang id
//! [W]    src digest, little endian
//! [W]    tgt digest, little endian
//! f64    margin, little endian
//! varint src_len, src bytes
//! varint tgt_len, tgt bytes
//! ```
//!
//! Varints are unsigned LEB128.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::{BinLayout, HashWidth};
use crate::error::{Error, IoContext, Result};

pub const RUN_MAGIC: &[u8; 6] = b"MWRUN\x01";
pub const RUN_HEADER_LEN: u64 = 7;

pub type LangId = u8;

/// Language codes in first-seen order; ids are positions.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct LangTable {
    codes: Vec<String>,
    index: FxHashMap<String, LangId>,
}

impl From<Vec<String>> for LangTable {
    fn from(codes: Vec<String>) -> Self {
        let index = codes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i as LangId))
            .collect();
        LangTable { codes, index }
    }
}

impl From<LangTable> for Vec<String> {
    fn from(t: LangTable) -> Self {
        t.codes
    }
}

impl LangTable {
    pub fn intern(&mut self, code: &str) -> Result<LangId> {
        if let Some(&id) = self.index.get(code) {
            return Ok(id);
        }
        if self.codes.len() > LangId::MAX as usize {
            return Err(Error::data(format!(
                "more than {} languages in one run",
                LangId::MAX as usize + 1
            )));
        }
        let id = self.codes.len() as LangId;
        self.codes.push(code.to_string());
        self.index.insert(code.to_string(), id);
        Ok(id)
    }

    pub fn get(&self, code: &str) -> Option<LangId> {
        self.index.get(code).copied()
    }

    pub fn code(&self, id: LangId) -> &str {
        &self.codes[id as usize]
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn codes(&self) -> &[String] {
        &self.codes
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunRecord {
    pub src_lang: LangId,
    pub tgt_lang: LangId,
    pub src_digest: u128,
    pub tgt_digest: u128,
    pub margin: f64,
    pub src_text: String,
    pub tgt_text: String,
}

pub(crate) fn write_varint(out: &mut Vec<u8>, mut v: u64) {
    while v >= 0x80 {
        out.push((v as u8) | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

/// Decode a varint from the front of `buf`, returning (value, bytes used).
pub(crate) fn read_varint_slice(buf: &[u8]) -> Option<(u64, usize)> {
    let mut v = 0u64;
    for (i, &b) in buf.iter().enumerate().take(10) {
        v |= ((b & 0x7f) as u64) << (7 * i);
        if b & 0x80 == 0 {
            return Some((v, i + 1));
        }
    }
    None
}

/// Returns `Ok(None)` on a clean end of stream.
pub(crate) fn read_varint<R: Read>(r: &mut R) -> std::io::Result<Option<u64>> {
    let mut v = 0u64;
    let mut byte = [0u8; 1];
    for i in 0..10 {
        if r.read(&mut byte)? == 0 {
            return if i == 0 {
                Ok(None)
            } else {
                Err(std::io::ErrorKind::UnexpectedEof.into())
            };
        }
        v |= ((byte[0] & 0x7f) as u64) << (7 * i);
        if byte[0] & 0x80 == 0 {
            return Ok(Some(v));
        }
    }
    Err(std::io::Error::new(std::io::ErrorKind::InvalidData, "varint too long"))
}

/// Append one length-prefixed record to `out`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn encode_record(
    out: &mut Vec<u8>,
    scratch: &mut Vec<u8>,
    width: HashWidth,
    src_lang: LangId,
    tgt_lang: LangId,
    src_digest: u128,
    tgt_digest: u128,
    margin: f64,
    src_text: &str,
    tgt_text: &str,
) {
    let w = width.bytes();
    scratch.clear();
    scratch.push(src_lang);
    scratch.push(tgt_lang);
    scratch.extend_from_slice(&src_digest.to_le_bytes()[..w]);
    scratch.extend_from_slice(&tgt_digest.to_le_bytes()[..w]);
    scratch.extend_from_slice(&margin.to_le_bytes());
    write_varint(scratch, src_text.len() as u64);
    scratch.extend_from_slice(src_text.as_bytes());
    write_varint(scratch, tgt_text.len() as u64);
    scratch.extend_from_slice(tgt_text.as_bytes());
    write_varint(out, scratch.len() as u64);
    out.extend_from_slice(scratch);
}

/// Margin of an encoded payload (without its length prefix).
pub(crate) fn payload_margin(payload: &[u8], width: HashWidth) -> f64 {
    let at = 2 + 2 * width.bytes();
    f64::from_le_bytes(payload[at..at + 8].try_into().unwrap())
}

fn decode_payload(payload: &[u8], width: HashWidth, rec: &mut RunRecord) -> Option<()> {
    let w = width.bytes();
    let fixed = 2 + 2 * w + 8;
    if payload.len() < fixed {
        return None;
    }
    let mut wide = [0u8; 16];
    rec.src_lang = payload[0];
    rec.tgt_lang = payload[1];
    wide[..w].copy_from_slice(&payload[2..2 + w]);
    rec.src_digest = u128::from_le_bytes(wide);
    wide = [0u8; 16];
    wide[..w].copy_from_slice(&payload[2 + w..2 + 2 * w]);
    rec.tgt_digest = u128::from_le_bytes(wide);
    rec.margin = payload_margin(payload, width);

    let mut at = fixed;
    for text in [&mut rec.src_text, &mut rec.tgt_text] {
        let (len, used) = read_varint_slice(&payload[at..])?;
        at += used;
        let end = at.checked_add(len as usize)?;
        let bytes = payload.get(at..end)?;
        text.clear();
        text.push_str(std::str::from_utf8(bytes).ok()?);
        at = end;
    }
    (at == payload.len()).then_some(())
}

pub(crate) fn write_header(out: &mut Vec<u8>, width: HashWidth) {
    out.extend_from_slice(RUN_MAGIC);
    out.push(width.bytes() as u8);
}

fn read_header<R: Read>(r: &mut R, path: &Path) -> Result<HashWidth> {
    let mut header = [0u8; RUN_HEADER_LEN as usize];
    r.read_exact(&mut header).at(path)?;
    if &header[..6] != RUN_MAGIC {
        return Err(Error::data(format!("{} is not a run file", path.display())));
    }
    match header[6] {
        8 => Ok(HashWidth::Bits64),
        16 => Ok(HashWidth::Bits128),
        w => Err(Error::data(format!("{}: unsupported digest width {w}", path.display()))),
    }
}

/// Sequential reader over a run file.
pub struct RunReader {
    inner: BufReader<File>,
    path: PathBuf,
    width: HashWidth,
    payload: Vec<u8>,
}

impl RunReader {
    pub fn open(path: &Path) -> Result<Self> {
        let mut inner = BufReader::with_capacity(1 << 20, File::open(path).at(path)?);
        let width = read_header(&mut inner, path)?;
        Ok(RunReader {
            inner,
            path: path.to_path_buf(),
            width,
            payload: Vec::new(),
        })
    }

    pub fn width(&self) -> HashWidth {
        self.width
    }

    /// Next raw payload (length prefix stripped), or `None` at the end.
    pub(crate) fn next_payload(&mut self) -> Result<Option<&[u8]>> {
        let len = match read_varint(&mut self.inner).at(&self.path)? {
            None => return Ok(None),
            Some(len) => len as usize,
        };
        self.payload.resize(len, 0);
        self.inner.read_exact(&mut self.payload).at(&self.path)?;
        Ok(Some(&self.payload))
    }

    /// Decode the next record into `rec`; `false` at the end of the run.
    pub fn read_into(&mut self, rec: &mut RunRecord) -> Result<bool> {
        let width = self.width;
        let path = self.path.clone();
        match self.next_payload()? {
            None => Ok(false),
            Some(payload) => {
                decode_payload(payload, width, rec)
                    .ok_or_else(|| Error::data(format!("{}: corrupt run record", path.display())))?;
                Ok(true)
            }
        }
    }
}

impl Iterator for RunReader {
    type Item = Result<RunRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        let mut rec = RunRecord::default();
        match self.read_into(&mut rec) {
            Ok(true) => Some(Ok(rec)),
            Ok(false) => None,
            Err(e) => Some(Err(e)),
        }
    }
}

/// A run ordered by descending margin bin, stable within each bin.
#[derive(Debug)]
pub struct OrderedRun {
    pub path: PathBuf,
    pub langs: LangTable,
    pub width: HashWidth,
    pub layout: BinLayout,
    pub records: u64,
    /// Records per bin, indexed by bin.
    pub bin_counts: Vec<u64>,
}

impl OrderedRun {
    pub fn reader(&self) -> Result<RunReader> {
        RunReader::open(&self.path)
    }
}
