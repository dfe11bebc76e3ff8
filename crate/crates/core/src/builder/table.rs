use indexmap::IndexMap;
use rustc_hash::FxBuildHasher;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Digest, LangId, OrderedRun, RunRecord};

/// Row a sentence was assigned to, and the margin of the pair that put it
/// there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assignment {
    pub row: u64,
    pub score: f64,
}

/// Digest to assignment for one language, iterating in insertion order.
pub type LangMap<D> = IndexMap<D, Assignment, FxBuildHasher>;

const MAX_ROWS: u64 = i64::MAX as u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MergeAction {
    /// Neither side was present; both start a new row.
    NewRow,
    /// Source was present; target joined its row.
    JoinedSrc,
    /// Target was present; source joined its row.
    JoinedTgt,
    /// Both sides were already placed by higher-scoring pairs.
    Discarded,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeCounts {
    pub pairs_in: u64,
    pub new_rows: u64,
    pub joined_via_src: u64,
    pub joined_via_tgt: u64,
    pub discarded: u64,
}

impl MergeCounts {
    pub fn joined(&self) -> u64 {
        self.joined_via_src + self.joined_via_tgt
    }

    fn record(&mut self, action: MergeAction) {
        self.pairs_in += 1;
        match action {
            MergeAction::NewRow => self.new_rows += 1,
            MergeAction::JoinedSrc => self.joined_via_src += 1,
            MergeAction::JoinedTgt => self.joined_via_tgt += 1,
            MergeAction::Discarded => self.discarded += 1,
        }
    }
}

/// Per-language sentence → row assignments built up by the merge pass.
#[derive(Debug, Clone)]
pub struct TupleTable<D: Digest> {
    maps: Vec<LangMap<D>>,
    num_rows: u64,
}

impl<D: Digest> Default for TupleTable<D> {
    fn default() -> Self {
        TupleTable {
            maps: Vec::new(),
            num_rows: 0,
        }
    }
}

impl<D: Digest> TupleTable<D> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_rows(&self) -> u64 {
        self.num_rows
    }

    /// Number of language slots (ids `0..n`).
    pub fn languages(&self) -> usize {
        self.maps.len()
    }

    pub fn language(&self, lang: LangId) -> Option<&LangMap<D>> {
        self.maps.get(lang as usize)
    }

    pub fn get(&self, lang: LangId, digest: D) -> Option<Assignment> {
        self.maps.get(lang as usize)?.get(&digest).copied()
    }

    /// Total (lang, digest) entries.
    pub fn entries(&self) -> u64 {
        self.maps.iter().map(|m| m.len() as u64).sum()
    }

    pub(crate) fn into_maps(self) -> (Vec<LangMap<D>>, u64) {
        (self.maps, self.num_rows)
    }

    fn map_mut(&mut self, lang: LangId) -> &mut LangMap<D> {
        let idx = lang as usize;
        if self.maps.len() <= idx {
            self.maps.resize_with(idx + 1, LangMap::default);
        }
        &mut self.maps[idx]
    }

    /// Apply one pair. Existing rows are never merged with each other.
    pub fn apply(
        &mut self,
        src_lang: LangId,
        src: D,
        tgt_lang: LangId,
        tgt: D,
        score: f64,
    ) -> Result<MergeAction> {
        debug_assert_ne!(src_lang, tgt_lang);
        let s = self.get(src_lang, src);
        let t = self.get(tgt_lang, tgt);
        Ok(match (s, t) {
            (None, None) => {
                if self.num_rows >= MAX_ROWS {
                    return Err(Error::RowOverflow);
                }
                let row = self.num_rows;
                self.num_rows += 1;
                self.map_mut(src_lang).insert(src, Assignment { row, score });
                self.map_mut(tgt_lang).insert(tgt, Assignment { row, score });
                MergeAction::NewRow
            }
            (Some(a), None) => {
                self.map_mut(tgt_lang).insert(tgt, Assignment { row: a.row, score });
                MergeAction::JoinedSrc
            }
            (None, Some(b)) => {
                self.map_mut(src_lang).insert(src, Assignment { row: b.row, score });
                MergeAction::JoinedTgt
            }
            (Some(_), Some(_)) => MergeAction::Discarded,
        })
    }
}

/// Fold the ordered run into a [`TupleTable`]. `on_new` sees every sentence
/// the first time it is placed, which is when its text goes to the store.
pub fn merge_pass<D, F>(run: &OrderedRun, mut on_new: F) -> Result<(TupleTable<D>, MergeCounts)>
where
    D: Digest,
    F: FnMut(LangId, D, &str) -> Result<()>,
{
    if run.width != D::WIDTH {
        return Err(Error::config(format!(
            "run digests are {:?} but the table expects {:?}",
            run.width,
            D::WIDTH
        )));
    }
    let mut table = TupleTable::new();
    let mut counts = MergeCounts::default();
    let mut reader = run.reader()?;
    let mut rec = RunRecord::default();
    while reader.read_into(&mut rec)? {
        let src = D::from_wide(rec.src_digest);
        let tgt = D::from_wide(rec.tgt_digest);
        let action = table.apply(rec.src_lang, src, rec.tgt_lang, tgt, rec.margin)?;
        match action {
            MergeAction::NewRow => {
                on_new(rec.src_lang, src, &rec.src_text)?;
                on_new(rec.tgt_lang, tgt, &rec.tgt_text)?;
            }
            MergeAction::JoinedSrc => on_new(rec.tgt_lang, tgt, &rec.tgt_text)?,
            MergeAction::JoinedTgt => on_new(rec.src_lang, src, &rec.src_text)?,
            MergeAction::Discarded => {}
        }
        counts.record(action);
    }
    Ok((table, counts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::hash_sentence as h;

    const EN: LangId = 0;
    const ES: LangId = 1;
    const PT: LangId = 2;
    const DE: LangId = 3;

    #[test]
    fn hello_hola_ola_combine() {
        let mut t = TupleTable::<u64>::new();
        assert_eq!(t.apply(EN, h("hello"), ES, h("hola"), 1.2).unwrap(), MergeAction::NewRow);
        assert_eq!(t.apply(EN, h("hello"), PT, h("olá"), 1.1).unwrap(), MergeAction::JoinedSrc);
        assert_eq!(t.num_rows(), 1);
        assert_eq!(t.get(PT, h("olá")), Some(Assignment { row: 0, score: 1.1 }));
        assert_eq!(t.get(ES, h("hola")), Some(Assignment { row: 0, score: 1.2 }));
    }

    #[test]
    fn target_side_join() {
        let mut t = TupleTable::<u64>::new();
        t.apply(EN, 1, ES, 2, 1.3).unwrap();
        assert_eq!(t.apply(PT, 3, ES, 2, 1.2).unwrap(), MergeAction::JoinedTgt);
        assert_eq!(t.get(PT, 3).unwrap().row, 0);
    }

    #[test]
    fn no_union_of_existing_rows() {
        // (A,B,1.3), (C,D,1.2), (A,C,1.1): the last pair would bridge two
        // rows and is dropped instead.
        let mut t = TupleTable::<u64>::new();
        t.apply(EN, 10, ES, 11, 1.3).unwrap();
        t.apply(DE, 20, PT, 21, 1.2).unwrap();
        assert_eq!(t.apply(EN, 10, DE, 20, 1.1).unwrap(), MergeAction::Discarded);
        assert_eq!(t.num_rows(), 2);
        assert_eq!(t.get(EN, 10).unwrap().row, 0);
        assert_eq!(t.get(DE, 20).unwrap().row, 1);
        assert_eq!(t.entries(), 4);
    }

    #[test]
    fn same_text_in_two_languages_is_two_sentences() {
        let mut t = TupleTable::<u64>::new();
        assert_eq!(t.apply(EN, 5, DE, 5, 1.2).unwrap(), MergeAction::NewRow);
        assert_eq!(t.entries(), 2);
    }

    #[test]
    fn empty_table() {
        let t = TupleTable::<u128>::new();
        assert_eq!(t.num_rows(), 0);
        assert_eq!(t.entries(), 0);
        assert_eq!(t.get(EN, 1), None);
    }
}
