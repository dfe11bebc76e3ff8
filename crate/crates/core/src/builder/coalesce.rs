//! Reconstruct tuples from the inverted maps and the sentence store.
//!
//! Survivors are resolved one store shard at a time and spilled to files
//! partitioned by row range; each row-range partition is then loaded alone,
//! sorted, and emitted. Neither step holds more than one partition's texts.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::invert::Inverted;
use super::store::HashSentenceStore;
use super::tuple::{Member, TranslationTuple};
use crate::error::{Error, IoContext, Result};
use crate::ingest::{Digest, LangId, LangTable};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CoalesceCounts {
    pub tuples: u64,
    pub sentences: u64,
    /// Rows left with fewer than two languages.
    pub rows_dropped: u64,
    /// Emitted sentences per language id.
    pub per_lang: Vec<u64>,
}

fn spill_path(dir: &Path, out_shard: usize, store_shard: usize) -> PathBuf {
    dir.join(format!("o{out_shard}.s{store_shard}.spill"))
}

struct Spilled<D> {
    row: u64,
    lang: LangId,
    digest: D,
    score: f64,
    text: String,
}

/// Emit one tuple per row that keeps ≥ 2 languages, in ascending row order.
pub fn coalesce<D, F>(
    inverted: &Inverted<D>,
    langs: &LangTable,
    store: &HashSentenceStore<D>,
    spill_dir: &Path,
    out_shards: usize,
    mut sink: F,
) -> Result<CoalesceCounts>
where
    D: Digest,
    F: FnMut(TranslationTuple) -> Result<()>,
{
    fs::create_dir_all(spill_dir).at(spill_dir)?;
    let num_rows = inverted.num_rows;
    let mut sizes = vec![0u16; num_rows as usize];
    for list in &inverted.langs {
        for s in list {
            sizes[s.row as usize] += 1;
        }
    }
    let rows_dropped = sizes.iter().filter(|&&n| n < 2).count() as u64;
    let out_shards = out_shards.max(1);
    let out_shard_of = |row: u64| (row as u128 * out_shards as u128 / num_rows.max(1) as u128) as usize;

    let results: Vec<Result<()>> = (0..store.shards())
        .into_par_iter()
        .map(|s| {
            spill_store_shard(inverted, langs, store, s, &sizes, spill_dir, out_shards, &out_shard_of)
        })
        .collect();
    for r in results {
        r?;
    }

    let mut counts = CoalesceCounts {
        rows_dropped,
        per_lang: vec![0; inverted.langs.len()],
        ..Default::default()
    };
    for o in 0..out_shards {
        let mut entries: Vec<Spilled<D>> = Vec::new();
        for s in 0..store.shards() {
            let p = spill_path(spill_dir, o, s);
            if p.exists() {
                read_spill(&p, &mut entries)?;
                fs::remove_file(&p).at(&p)?;
            }
        }
        entries.sort_unstable_by(|a, b| {
            a.row
                .cmp(&b.row)
                .then_with(|| langs.code(a.lang).cmp(langs.code(b.lang)))
        });
        let mut iter = entries.into_iter().peekable();
        while let Some(first) = iter.next() {
            let row = first.row;
            let mut members = BTreeMap::new();
            let mut push = |e: Spilled<D>, counts: &mut CoalesceCounts| {
                counts.per_lang[e.lang as usize] += 1;
                members.insert(
                    langs.code(e.lang).to_string(),
                    Member {
                        digest: e.digest.to_wide(),
                        text: e.text,
                        score: e.score,
                    },
                );
            };
            push(first, &mut counts);
            while iter.peek().is_some_and(|e| e.row == row) {
                push(iter.next().unwrap(), &mut counts);
            }
            counts.tuples += 1;
            counts.sentences += members.len() as u64;
            sink(TranslationTuple { row, members })?;
        }
    }
    Ok(counts)
}

#[allow(clippy::too_many_arguments)]
fn spill_store_shard<D: Digest>(
    inverted: &Inverted<D>,
    langs: &LangTable,
    store: &HashSentenceStore<D>,
    shard: usize,
    sizes: &[u16],
    spill_dir: &Path,
    out_shards: usize,
    out_shard_of: &(dyn Fn(u64) -> usize + Sync),
) -> Result<()> {
    let index = store.load_shard(shard)?;
    // (offset, len, row, lang, digest, score)
    let mut wanted: Vec<(u64, u32, u64, LangId, D, f64)> = Vec::new();
    for (lang, list) in inverted.langs.iter().enumerate() {
        for s in list {
            if sizes[s.row as usize] < 2 || store.shard_of(s.digest) != shard {
                continue;
            }
            let (off, len) = index.locate(s.digest).ok_or_else(|| Error::UnresolvableDigest {
                lang: langs.code(lang as LangId).to_string(),
                digest: s.digest.to_wide(),
            })?;
            wanted.push((off, len, s.row, lang as LangId, s.digest, s.score));
        }
    }
    wanted.sort_unstable_by_key(|w| (w.0, w.2, w.3));

    let mut writers: Vec<Option<BufWriter<File>>> = (0..out_shards).map(|_| None).collect();
    let mut text = Vec::new();
    let mut rec = Vec::new();
    for (off, len, row, lang, digest, score) in wanted {
        index.read_text(off, len, &mut text)?;
        rec.clear();
        rec.extend_from_slice(&row.to_le_bytes());
        rec.push(lang);
        digest.write_le(&mut rec);
        rec.extend_from_slice(&score.to_le_bytes());
        rec.extend_from_slice(&len.to_le_bytes());
        rec.extend_from_slice(&text);
        let o = out_shard_of(row);
        let w = match &mut writers[o] {
            Some(w) => w,
            slot @ None => {
                let p = spill_path(spill_dir, o, shard);
                slot.insert(BufWriter::with_capacity(256 << 10, File::create(&p).at(&p)?))
            }
        };
        w.write_all(&rec).ctx(|| format!("spilling shard {shard}"))?;
    }
    for mut w in writers.into_iter().flatten() {
        w.flush().ctx(|| format!("spilling shard {shard}"))?;
    }
    Ok(())
}

fn read_spill<D: Digest>(path: &Path, out: &mut Vec<Spilled<D>>) -> Result<()> {
    let mut r = BufReader::with_capacity(1 << 20, File::open(path).at(path)?);
    let w = D::WIDTH.bytes();
    let mut head = vec![0u8; 8 + 1 + w + 8 + 4];
    loop {
        match r.read_exact(&mut head) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(()),
            Err(e) => return Err(Error::io(path.display().to_string(), e)),
        }
        let row = u64::from_le_bytes(head[..8].try_into().unwrap());
        let lang = head[8];
        let digest = D::read_le(&head[9..9 + w]);
        let score = f64::from_le_bytes(head[9 + w..17 + w].try_into().unwrap());
        let len = u32::from_le_bytes(head[17 + w..].try_into().unwrap()) as usize;
        let mut text = vec![0u8; len];
        r.read_exact(&mut text).at(path)?;
        let text = String::from_utf8(text)
            .map_err(|_| Error::data(format!("{}: invalid utf-8", path.display())))?;
        out.push(Spilled {
            row,
            lang,
            digest,
            score,
            text,
        });
    }
}
