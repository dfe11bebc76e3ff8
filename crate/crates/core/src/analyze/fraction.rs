use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{pct, Corpus};
use crate::error::{Error, IoContext, Result};
use crate::io::{open_input, read_line_bytes};

/// Which sentence count is the numerator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountMode {
    /// Unique sentences placed in any tuple, near duplicates included.
    #[default]
    WithNearDuplicates,
    /// Sentences remaining after near-duplicate removal.
    Deduplicated,
}

impl std::str::FromStr for CountMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "with-near-duplicates" => Ok(CountMode::WithNearDuplicates),
            "deduplicated" => Ok(CountMode::Deduplicated),
            other => Err(Error::config(format!("unknown count mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FractionRow {
    pub lang: String,
    pub translated: u64,
    pub total: u64,
    pub pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FractionTable {
    pub count_mode: CountMode,
    pub rows: Vec<FractionRow>,
}

impl FractionTable {
    pub fn get(&self, lang: &str) -> Option<&FractionRow> {
        self.rows.iter().find(|r| r.lang == lang)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("lang\ttranslated\ttotal\tpct\n");
        for r in &self.rows {
            let _ = writeln!(out, "{}\t{}\t{}\t{:.2}", r.lang, r.translated, r.total, r.pct);
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// One row per language that has a total; languages without totals are
/// omitted, languages with a total but no translations report 0%.
pub fn fraction_from_counts(
    translated: &BTreeMap<String, u64>,
    totals: &BTreeMap<String, u64>,
    count_mode: CountMode,
) -> Result<FractionTable> {
    let mut rows = Vec::with_capacity(totals.len());
    for (lang, &total) in totals {
        let t = translated.get(lang).copied().unwrap_or(0);
        if t > total {
            return Err(Error::data(format!(
                "{lang}: {t} translated sentences exceed the monolingual total {total}"
            )));
        }
        rows.push(FractionRow {
            lang: lang.clone(),
            translated: t,
            total,
            pct: pct(t, total),
        });
    }
    Ok(FractionTable { count_mode, rows })
}

/// Uses the per-language counts recorded in the corpus manifest.
pub fn fraction_with_translation(
    corpus: &Corpus,
    totals: &BTreeMap<String, u64>,
    count_mode: CountMode,
) -> Result<FractionTable> {
    let translated: BTreeMap<String, u64> = corpus
        .manifest()
        .languages
        .iter()
        .map(|(l, c)| {
            let n = match count_mode {
                CountMode::WithNearDuplicates => c.sentences_unique,
                CountMode::Deduplicated => c.sentences_out,
            };
            (l.clone(), n)
        })
        .collect();
    fraction_from_counts(&translated, totals, count_mode)
}

/// Parse `lang\tcount` lines.
pub fn read_totals(path: &Path) -> Result<BTreeMap<String, u64>> {
    let mut reader = open_input(path)?;
    let mut buf = Vec::new();
    let mut totals = BTreeMap::new();
    let mut line_no = 0;
    while read_line_bytes(&mut reader, &mut buf).at(path)? {
        line_no += 1;
        let line = String::from_utf8_lossy(&buf);
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::data(format!("{}:{line_no}: expected lang<TAB>count", path.display()));
        let (lang, count) = line.split_once('\t').ok_or_else(bad)?;
        let count: u64 = count.trim().parse().map_err(|_| bad())?;
        if totals.insert(lang.trim().to_string(), count).is_some() {
            return Err(Error::data(format!("{}:{line_no}: duplicate language {lang}", path.display())));
        }
    }
    Ok(totals)
}
