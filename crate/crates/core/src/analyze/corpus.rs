use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use rustc_hash::FxHashMap;

use crate::builder::{Manifest, TranslationTuple};
use crate::error::{Error, IoContext, Result};
use crate::ingest::{hash_sentence, HashWidth};

/// Tuples per parallel work unit. Fixed so that partial aggregates, and any
/// floating-point merges over them, are the same on every machine.
const CHUNK: usize = 4096;

/// Read-only handle on a corpus directory.
#[derive(Debug, Clone)]
pub struct Corpus {
    dir: PathBuf,
    manifest: Manifest,
}

impl Corpus {
    pub fn open(dir: &Path) -> Result<Self> {
        Ok(Corpus {
            dir: dir.to_path_buf(),
            manifest: Manifest::read(dir)?,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn width(&self) -> HashWidth {
        self.manifest.config.hash_width
    }

    pub fn tuples_path(&self) -> PathBuf {
        self.dir.join("tuples.jsonl")
    }

    /// Sequential iterator over every tuple.
    pub fn tuples(&self) -> Result<impl Iterator<Item = Result<TranslationTuple>>> {
        let path = self.tuples_path();
        let reader = BufReader::with_capacity(1 << 20, File::open(&path).at(&path)?);
        let width = self.width();
        Ok(reader.lines().enumerate().map(move |(i, line)| {
            let line = line.at(&path)?;
            TranslationTuple::from_json_line(&line, width)
                .map_err(|e| Error::data(format!("{}:{}: {e}", path.display(), i + 1)))
        }))
    }

    /// Fold every tuple into per-chunk accumulators in parallel, merging the
    /// partials in file order.
    pub fn par_fold<A, Make, Step, Merge>(&self, make: Make, step: Step, merge: Merge) -> Result<A>
    where
        A: Send,
        Make: Fn() -> A + Sync,
        Step: Fn(&mut A, &TranslationTuple) -> Result<()> + Sync,
        Merge: Fn(&mut A, A),
    {
        let path = self.tuples_path();
        let mut reader = BufReader::with_capacity(1 << 20, File::open(&path).at(&path)?);
        let width = self.width();
        let group = CHUNK * rayon::current_num_threads().max(1) * 2;
        let mut acc = make();
        let mut lines: Vec<String> = Vec::with_capacity(group);
        let mut first_line = 1usize;
        let mut done = false;
        while !done {
            lines.clear();
            while lines.len() < group {
                let mut line = String::new();
                if reader.read_line(&mut line).at(&path)? == 0 {
                    done = true;
                    break;
                }
                if line.ends_with('\n') {
                    line.pop();
                }
                lines.push(line);
            }
            let base = first_line;
            let partials: Vec<Result<A>> = lines
                .par_chunks(CHUNK)
                .enumerate()
                .map(|(c, chunk)| {
                    let mut a = make();
                    for (i, line) in chunk.iter().enumerate() {
                        let t = TranslationTuple::from_json_line(line, width).map_err(|e| {
                            Error::data(format!(
                                "{}:{}: {e}",
                                path.display(),
                                base + c * CHUNK + i
                            ))
                        })?;
                        step(&mut a, &t)?;
                    }
                    Ok(a)
                })
                .collect();
            for p in partials {
                merge(&mut acc, p?);
            }
            first_line += lines.len();
        }
        Ok(acc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Membership {
    pub row: u64,
    pub size: u32,
}

/// (language, 64-bit text digest) → containing tuple. Immutable once built
/// and safe to share across threads.
#[derive(Debug, Default)]
pub struct CorpusIndex {
    langs: FxHashMap<String, u16>,
    map: FxHashMap<(u16, u64), Membership>,
}

impl CorpusIndex {
    pub fn build(corpus: &Corpus) -> Result<Self> {
        let parts = corpus.par_fold(
            Vec::new,
            |v: &mut Vec<(String, u64, Membership)>, t| {
                let m = Membership {
                    row: t.row,
                    size: t.size() as u32,
                };
                for (lang, member) in &t.members {
                    v.push((lang.clone(), hash_sentence(&member.text), m));
                }
                Ok(())
            },
            |acc, mut part| acc.append(&mut part),
        )?;
        let mut index = CorpusIndex::default();
        for (lang, digest, m) in parts {
            index.insert(&lang, digest, m);
        }
        Ok(index)
    }

    pub fn from_tuples<'a>(tuples: impl IntoIterator<Item = &'a TranslationTuple>) -> Self {
        let mut index = CorpusIndex::default();
        for t in tuples {
            let m = Membership {
                row: t.row,
                size: t.size() as u32,
            };
            for (lang, member) in &t.members {
                index.insert(lang, hash_sentence(&member.text), m);
            }
        }
        index
    }

    fn insert(&mut self, lang: &str, digest: u64, m: Membership) {
        let next = self.langs.len() as u16;
        let id = *self.langs.entry(lang.to_string()).or_insert(next);
        self.map.insert((id, digest), m);
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn lookup(&self, lang: &str, text: &str) -> Option<Membership> {
        let id = *self.langs.get(lang)?;
        self.map.get(&(id, hash_sentence(text.trim()))).copied()
    }

    /// Size of the containing tuple, or 1 for sentences not in the corpus.
    pub fn parallelism(&self, lang: &str, text: &str) -> u32 {
        self.lookup(lang, text).map_or(1, |m| m.size)
    }
}
