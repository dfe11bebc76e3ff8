//! Sharded digest → text store for reconstructing tuples.
//!
//! Shard `s` is `<dir>/<s>.bin` (raw text bytes, append-only) plus
//! `<dir>/<s>.idx`, a sequence of `digest (W bytes LE) | offset u64 LE |
//! length u32 LE` entries. A sentence lives in shard `low64(digest) % shards`
//! so that one shard's index can be loaded at a time.

use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::marker::PhantomData;
use std::os::unix::fs::FileExt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};
use crate::ingest::Digest;

#[derive(Serialize, Deserialize)]
struct StoreMeta {
    shards: usize,
    digest_bytes: usize,
}

fn shard_of<D: Digest>(digest: D, shards: usize) -> usize {
    (digest.low64() % shards as u64) as usize
}

pub struct StoreWriter<D: Digest> {
    dir: PathBuf,
    bins: Vec<BufWriter<File>>,
    idx: Vec<BufWriter<File>>,
    offsets: Vec<u64>,
    entry: Vec<u8>,
    _digest: PhantomData<D>,
}

impl<D: Digest> StoreWriter<D> {
    pub fn create(dir: &Path, shards: usize) -> Result<Self> {
        let shards = shards.max(1);
        fs::create_dir_all(dir).at(dir)?;
        let mut bins = Vec::with_capacity(shards);
        let mut idx = Vec::with_capacity(shards);
        for s in 0..shards {
            let b = dir.join(format!("{s}.bin"));
            let i = dir.join(format!("{s}.idx"));
            bins.push(BufWriter::with_capacity(256 << 10, File::create(&b).at(&b)?));
            idx.push(BufWriter::with_capacity(64 << 10, File::create(&i).at(&i)?));
        }
        let meta = StoreMeta {
            shards,
            digest_bytes: D::WIDTH.bytes(),
        };
        let meta_path = dir.join("meta.json");
        fs::write(&meta_path, serde_json::to_vec(&meta)?).at(&meta_path)?;
        Ok(StoreWriter {
            dir: dir.to_path_buf(),
            bins,
            idx,
            offsets: vec![0; shards],
            entry: Vec::with_capacity(28),
            _digest: PhantomData,
        })
    }

    pub fn append(&mut self, digest: D, text: &str) -> Result<()> {
        let s = shard_of(digest, self.bins.len());
        let len = u32::try_from(text.len())
            .map_err(|_| Error::data("sentence longer than 4 GiB"))?;
        self.bins[s]
            .write_all(text.as_bytes())
            .ctx(|| format!("{}/{s}.bin", self.dir.display()))?;
        self.entry.clear();
        digest.write_le(&mut self.entry);
        self.entry.extend_from_slice(&self.offsets[s].to_le_bytes());
        self.entry.extend_from_slice(&len.to_le_bytes());
        self.idx[s]
            .write_all(&self.entry)
            .ctx(|| format!("{}/{s}.idx", self.dir.display()))?;
        self.offsets[s] += len as u64;
        Ok(())
    }

    pub fn finish(self) -> Result<HashSentenceStore<D>> {
        for w in self.bins.into_iter().chain(self.idx) {
            let mut w = w;
            w.flush().ctx(|| format!("flushing {}", self.dir.display()))?;
        }
        HashSentenceStore::open(&self.dir)
    }
}

#[derive(Debug, Clone)]
pub struct HashSentenceStore<D> {
    dir: PathBuf,
    shards: usize,
    _digest: PhantomData<D>,
}

impl<D: Digest> HashSentenceStore<D> {
    pub fn open(dir: &Path) -> Result<Self> {
        let meta_path = dir.join("meta.json");
        let meta: StoreMeta = serde_json::from_slice(&fs::read(&meta_path).at(&meta_path)?)?;
        if meta.digest_bytes != D::WIDTH.bytes() {
            return Err(Error::config(format!(
                "store at {} holds {}-byte digests",
                dir.display(),
                meta.digest_bytes
            )));
        }
        Ok(HashSentenceStore {
            dir: dir.to_path_buf(),
            shards: meta.shards,
            _digest: PhantomData,
        })
    }

    pub fn shards(&self) -> usize {
        self.shards
    }

    pub fn shard_of(&self, digest: D) -> usize {
        shard_of(digest, self.shards)
    }

    /// Total text bytes across shards (duplicates included).
    pub fn text_bytes(&self) -> Result<u64> {
        let mut total = 0;
        for s in 0..self.shards {
            let p = self.dir.join(format!("{s}.bin"));
            total += fs::metadata(&p).at(&p)?.len();
        }
        Ok(total)
    }

    pub fn load_shard(&self, shard: usize) -> Result<ShardIndex<D>> {
        let idx_path = self.dir.join(format!("{shard}.idx"));
        let bin_path = self.dir.join(format!("{shard}.bin"));
        let mut raw = Vec::new();
        File::open(&idx_path)
            .at(&idx_path)?
            .read_to_end(&mut raw)
            .at(&idx_path)?;
        let w = D::WIDTH.bytes();
        let stride = w + 12;
        if raw.len() % stride != 0 {
            return Err(Error::data(format!("{} is truncated", idx_path.display())));
        }
        let mut entries: Vec<(D, u64, u32)> = raw
            .chunks_exact(stride)
            .map(|c| {
                (
                    D::read_le(&c[..w]),
                    u64::from_le_bytes(c[w..w + 8].try_into().unwrap()),
                    u32::from_le_bytes(c[w + 8..].try_into().unwrap()),
                )
            })
            .collect();
        // Stable, so the first appended copy of a digest is the one kept.
        entries.sort_by_key(|e| e.0);
        entries.dedup_by_key(|e| e.0);
        Ok(ShardIndex {
            entries,
            file: File::open(&bin_path).at(&bin_path)?,
            path: bin_path,
        })
    }

    /// Single lookup; loads the digest's whole shard index.
    pub fn lookup(&self, digest: D) -> Result<Option<String>> {
        self.load_shard(self.shard_of(digest))?.resolve(digest)
    }
}

pub struct ShardIndex<D> {
    entries: Vec<(D, u64, u32)>,
    file: File,
    path: PathBuf,
}

impl<D: Digest> ShardIndex<D> {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn locate(&self, digest: D) -> Option<(u64, u32)> {
        self.entries
            .binary_search_by_key(&digest, |e| e.0)
            .ok()
            .map(|i| (self.entries[i].1, self.entries[i].2))
    }

    pub fn read_text(&self, offset: u64, len: u32, buf: &mut Vec<u8>) -> Result<()> {
        buf.resize(len as usize, 0);
        self.file.read_exact_at(buf, offset).at(&self.path)
    }

    pub fn resolve(&self, digest: D) -> Result<Option<String>> {
        let Some((off, len)) = self.locate(digest) else {
            return Ok(None);
        };
        let mut buf = Vec::new();
        self.read_text(off, len, &mut buf)?;
        String::from_utf8(buf)
            .map(Some)
            .map_err(|_| Error::data(format!("{}: invalid utf-8 at {off}", self.path.display())))
    }
}
