//! Externally supplied per-sentence or per-pair values (quality estimates,
//! perplexities, topic labels) to be stratified by parallelism.

use std::io::BufRead;
use std::path::Path;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};
use crate::ingest::hash_sentence;
use crate::io::{open_input, read_line_bytes};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Keying {
    /// `lang\ttext\tvalue`
    Sentence,
    /// `src_lang\tsrc_text\ttgt_lang\ttgt_text\tvalue`
    Pair,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScoreValue {
    Numeric(f64),
    Label(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Stored {
    Num(f64),
    Label(u32),
}

pub(crate) type Key = (u16, u64);

#[derive(Debug, Clone)]
pub struct ScoreTable {
    kind: ScoreKind,
    keying: Keying,
    labels: Vec<String>,
    label_index: FxHashMap<String, u32>,
    declared: bool,
    langs: FxHashMap<String, u16>,
    sentences: FxHashMap<Key, Stored>,
    pairs: FxHashMap<(Key, Key), Stored>,
}

impl ScoreTable {
    pub fn new(kind: ScoreKind, keying: Keying) -> Self {
        ScoreTable {
            kind,
            keying,
            labels: Vec::new(),
            label_index: FxHashMap::default(),
            declared: false,
            langs: FxHashMap::default(),
            sentences: FxHashMap::default(),
            pairs: FxHashMap::default(),
        }
    }

    /// Categorical table whose labels must come from `labels`; reports list
    /// them in this order.
    pub fn with_labels(keying: Keying, labels: Vec<String>) -> Result<Self> {
        let mut t = ScoreTable::new(ScoreKind::Categorical, keying);
        for l in labels {
            if t.label_index.contains_key(&l) {
                return Err(Error::config(format!("label {l:?} declared twice")));
            }
            t.label_index.insert(l.clone(), t.labels.len() as u32);
            t.labels.push(l);
        }
        t.declared = true;
        Ok(t)
    }

    pub fn kind(&self) -> ScoreKind {
        self.kind
    }

    pub fn keying(&self) -> Keying {
        self.keying
    }

    pub fn len(&self) -> usize {
        self.sentences.len() + self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Label ids in report order: declaration order, or sorted when the
    /// labels were inferred from the data.
    pub fn label_order(&self) -> Vec<(u32, &str)> {
        let mut out: Vec<(u32, &str)> = self
            .labels
            .iter()
            .enumerate()
            .map(|(i, l)| (i as u32, l.as_str()))
            .collect();
        if !self.declared {
            out.sort_by(|a, b| a.1.cmp(b.1));
        }
        out
    }

    pub(crate) fn label_count(&self) -> usize {
        self.labels.len()
    }

    pub(crate) fn lang_id(&self, lang: &str) -> Option<u16> {
        self.langs.get(lang).copied()
    }

    pub(crate) fn sentence(&self, key: Key) -> Option<Stored> {
        self.sentences.get(&key).copied()
    }

    pub(crate) fn pair(&self, src: Key, tgt: Key) -> Option<Stored> {
        self.pairs.get(&(src, tgt)).copied()
    }

    fn key(&mut self, lang: &str, text: &str) -> Result<Key> {
        let lang = lang.trim();
        let text = text.trim();
        if lang.is_empty() || text.is_empty() {
            return Err(Error::data("score entry with empty language or text"));
        }
        let next = self.langs.len() as u16;
        let id = *self.langs.entry(lang.to_string()).or_insert(next);
        Ok((id, hash_sentence(text)))
    }

    fn store(&mut self, value: ScoreValue) -> Result<Stored> {
        match (self.kind, value) {
            (ScoreKind::Numeric, ScoreValue::Numeric(v)) if v.is_finite() => Ok(Stored::Num(v)),
            (ScoreKind::Numeric, ScoreValue::Numeric(v)) => {
                Err(Error::data(format!("non-finite score {v}")))
            }
            (ScoreKind::Categorical, ScoreValue::Label(l)) => {
                if let Some(&i) = self.label_index.get(&l) {
                    return Ok(Stored::Label(i));
                }
                if self.declared {
                    return Err(Error::data(format!("label {l:?} is not in the declared set")));
                }
                let i = self.labels.len() as u32;
                self.label_index.insert(l.clone(), i);
                self.labels.push(l);
                Ok(Stored::Label(i))
            }
            (kind, v) => Err(Error::data(format!("{v:?} does not fit a {kind:?} table"))),
        }
    }

    pub fn insert_sentence(&mut self, lang: &str, text: &str, value: ScoreValue) -> Result<()> {
        if self.keying != Keying::Sentence {
            return Err(Error::config("per-sentence entry in a per-pair table"));
        }
        let key = self.key(lang, text)?;
        let v = self.store(value)?;
        if self.sentences.insert(key, v).is_some() {
            return Err(Error::data(format!("duplicate score for {lang} sentence {text:?}")));
        }
        Ok(())
    }

    pub fn insert_pair(
        &mut self,
        src_lang: &str,
        src_text: &str,
        tgt_lang: &str,
        tgt_text: &str,
        value: ScoreValue,
    ) -> Result<()> {
        if self.keying != Keying::Pair {
            return Err(Error::config("per-pair entry in a per-sentence table"));
        }
        let s = self.key(src_lang, src_text)?;
        let t = self.key(tgt_lang, tgt_text)?;
        let v = self.store(value)?;
        if self.pairs.insert((s, t), v).is_some() {
            return Err(Error::data(format!(
                "duplicate score for pair {src_lang}:{src_text:?} {tgt_lang}:{tgt_text:?}"
            )));
        }
        Ok(())
    }

    fn parse_value(&self, raw: &str) -> Result<ScoreValue> {
        match self.kind {
            ScoreKind::Numeric => raw
                .trim()
                .parse()
                .map(ScoreValue::Numeric)
                .map_err(|_| Error::data(format!("score {raw:?} is not a number"))),
            ScoreKind::Categorical => Ok(ScoreValue::Label(raw.trim().to_string())),
        }
    }

    /// Load entries from TSV into this (possibly label-declared) table.
    pub fn read_tsv<R: BufRead + ?Sized>(&mut self, reader: &mut R, source: &str) -> Result<()> {
        let mut buf = Vec::new();
        let mut line_no = 0u64;
        let fields = match self.keying {
            Keying::Sentence => 3,
            Keying::Pair => 5,
        };
        while read_line_bytes(reader, &mut buf).ctx(|| source.to_string())? {
            line_no += 1;
            let line = std::str::from_utf8(&buf)
                .map_err(|_| Error::data(format!("{source}:{line_no}: invalid utf-8")))?;
            if line.is_empty() {
                continue;
            }
            let at = |e: Error| Error::data(format!("{source}:{line_no}: {e}"));
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != fields {
                return Err(Error::data(format!(
                    "{source}:{line_no}: expected {fields} fields, found {}",
                    f.len()
                )));
            }
            let value = self.parse_value(f[fields - 1]).map_err(at)?;
            match self.keying {
                Keying::Sentence => self.insert_sentence(f[0], f[1], value),
                Keying::Pair => self.insert_pair(f[0], f[1], f[2], f[3], value),
            }
            .map_err(at)?;
        }
        Ok(())
    }

    pub fn from_path(
        path: &Path,
        kind: ScoreKind,
        keying: Keying,
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        let mut table = match labels {
            Some(l) if kind == ScoreKind::Categorical => ScoreTable::with_labels(keying, l)?,
            Some(_) => return Err(Error::config("labels only apply to categorical tables")),
            None => ScoreTable::new(kind, keying),
        };
        let mut reader = open_input(path)?;
        table.read_tsv(&mut reader, &path.display().to_string())?;
        Ok(table)
    }
}
