use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::Corpus;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LanguageStats {
    pub lang: String,
    pub unique_sentences: u64,
    pub mean_parallelism: f64,
    /// Tuple size → sentences of this language in tuples of that size.
    pub histogram: BTreeMap<u32, u64>,
}

impl LanguageStats {
    fn from_histogram(lang: String, histogram: BTreeMap<u32, u64>) -> Self {
        let n: u64 = histogram.values().sum();
        let weighted: u64 = histogram.iter().map(|(&p, &c)| p as u64 * c).sum();
        LanguageStats {
            lang,
            unique_sentences: n,
            mean_parallelism: if n == 0 { 0.0 } else { weighted as f64 / n as f64 },
            histogram,
        }
    }
}

/// Languages ordered by descending sentence count, ties by code.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LanguageProfile {
    pub languages: Vec<LanguageStats>,
}

impl LanguageProfile {
    pub fn from_histograms(per_lang: BTreeMap<String, BTreeMap<u32, u64>>) -> Self {
        let mut languages: Vec<LanguageStats> = per_lang
            .into_iter()
            .map(|(l, h)| LanguageStats::from_histogram(l, h))
            .collect();
        languages.sort_by(|a, b| {
            b.unique_sentences
                .cmp(&a.unique_sentences)
                .then_with(|| a.lang.cmp(&b.lang))
        });
        LanguageProfile { languages }
    }

    pub fn get(&self, lang: &str) -> Option<&LanguageStats> {
        self.languages.iter().find(|l| l.lang == lang)
    }

    /// Unweighted mean of per-language mean parallelism over the `k`
    /// largest languages.
    pub fn top_k_mean(&self, k: usize) -> Option<f64> {
        mean_of(self.languages.iter().take(k))
    }

    /// Same over the `k` smallest languages.
    pub fn bottom_k_mean(&self, k: usize) -> Option<f64> {
        mean_of(self.languages.iter().rev().take(k))
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("lang\tsentences\tmean_parallelism\thistogram\n");
        for l in &self.languages {
            let hist: Vec<String> = l.histogram.iter().map(|(p, c)| format!("{p}:{c}")).collect();
            let _ = writeln!(
                out,
                "{}\t{}\t{:.4}\t{}",
                l.lang,
                l.unique_sentences,
                l.mean_parallelism,
                hist.join(",")
            );
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

fn mean_of<'a>(it: impl Iterator<Item = &'a LanguageStats>) -> Option<f64> {
    let (n, sum) = it.fold((0usize, 0.0), |(n, s), l| (n + 1, s + l.mean_parallelism));
    (n > 0).then(|| sum / n as f64)
}

pub fn per_language_stats(corpus: &Corpus) -> Result<LanguageProfile> {
    let per_lang = corpus.par_fold(
        BTreeMap::<String, BTreeMap<u32, u64>>::new,
        |acc, t| {
            let size = t.size() as u32;
            for lang in t.members.keys() {
                *acc.entry(lang.clone()).or_default().entry(size).or_default() += 1;
            }
            Ok(())
        },
        |acc, part| {
            for (lang, h) in part {
                let dst = acc.entry(lang).or_default();
                for (p, c) in h {
                    *dst.entry(p).or_default() += c;
                }
            }
        },
    )?;
    Ok(LanguageProfile::from_histograms(per_lang))
}
