use rayon::prelude::*;
use rustc_hash::FxHashMap;

use super::table::{LangMap, TupleTable};
use crate::ingest::{Digest, LangId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Survivor<D> {
    pub row: u64,
    pub digest: D,
    pub score: f64,
}

/// Per-language row → sentence maps after near-duplicate removal. Each
/// language's survivors are sorted by row, at most one per row.
#[derive(Debug, Clone)]
pub struct Inverted<D> {
    pub langs: Vec<Vec<Survivor<D>>>,
    /// Table entries per language before removal.
    pub unique: Vec<u64>,
    pub duplicates_removed: Vec<u64>,
    pub num_rows: u64,
}

impl<D: Digest> Inverted<D> {
    pub fn get(&self, lang: LangId, row: u64) -> Option<&Survivor<D>> {
        let list = self.langs.get(lang as usize)?;
        list.binary_search_by_key(&row, |s| s.row).ok().map(|i| &list[i])
    }

    pub fn survivors(&self) -> u64 {
        self.langs.iter().map(|l| l.len() as u64).sum()
    }

    pub fn total_duplicates_removed(&self) -> u64 {
        self.duplicates_removed.iter().sum()
    }
}

fn invert_language<D: Digest>(map: LangMap<D>) -> (Vec<Survivor<D>>, u64, u64) {
    let unique = map.len() as u64;
    let mut slot: FxHashMap<u64, usize> = FxHashMap::default();
    let mut out: Vec<Survivor<D>> = Vec::new();
    let mut removed = 0u64;
    // Insertion order, strict `>`: the earliest-inserted sentence wins ties.
    for (digest, a) in map {
        match slot.get(&a.row) {
            None => {
                slot.insert(a.row, out.len());
                out.push(Survivor {
                    row: a.row,
                    digest,
                    score: a.score,
                });
            }
            Some(&i) => {
                removed += 1;
                if a.score > out[i].score {
                    out[i] = Survivor {
                        row: a.row,
                        digest,
                        score: a.score,
                    };
                }
            }
        }
    }
    out.sort_unstable_by_key(|s| s.row);
    (out, unique, removed)
}

/// Keep, for every (language, row), the highest-scoring sentence. Consumes
/// the table language by language, in parallel.
pub fn invert_and_dedup<D: Digest>(table: TupleTable<D>) -> Inverted<D> {
    let (maps, num_rows) = table.into_maps();
    let per_lang: Vec<_> = maps.into_par_iter().map(invert_language).collect();
    let mut inv = Inverted {
        langs: Vec::with_capacity(per_lang.len()),
        unique: Vec::with_capacity(per_lang.len()),
        duplicates_removed: Vec::with_capacity(per_lang.len()),
        num_rows,
    };
    for (list, unique, removed) in per_lang {
        inv.langs.push(list);
        inv.unique.push(unique);
        inv.duplicates_removed.push(removed);
    }
    inv
}
