//! Synthetic scored bitext: a random stream for stress and oracle testing,
//! and a planted corpus whose tuple sizes and translation rate are known.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use xxhash_rust::xxh3::xxh3_64_with_seed;

use crate::error::{Error, IoContext, Result};
use crate::ingest::BitextRecord;
use crate::io::{create_output, write_atomic};

pub const LANGS: [&str; 26] = [
    "en", "de", "fr", "es", "it", "pt", "nl", "sv", "da", "nb", "fi", "pl", "cs", "sk", "hu", "ro",
    "bg", "el", "ru", "uk", "tr", "ar", "he", "ja", "zh", "ko",
];

const SYLLABLES: [&str; 24] = [
    "ka", "lo", "mi", "ne", "ru", "sa", "ti", "vo", "del", "mar", "tun", "ses", "fo", "pri", "gal",
    "ben", "cu", "dra", "el", "om", "est", "ya", "qui", "zor",
];

/// Deterministic text for sentence `id` of `lang`. Distinct ids give
/// distinct texts.
pub fn sentence_text(lang: &str, id: u64) -> String {
    let mut h = xxh3_64_with_seed(lang.as_bytes(), id);
    let mut next = || {
        h ^= h >> 33;
        h = h.wrapping_mul(0xff51afd7ed558ccd);
        h ^= h >> 29;
        h
    };
    let words = 2 + next() % 16;
    let mut out = String::new();
    for w in 0..words {
        if w > 0 {
            out.push(' ');
        }
        for _ in 0..1 + next() % 3 {
            out.push_str(SYLLABLES[(next() % SYLLABLES.len() as u64) as usize]);
        }
    }
    out.push_str(&format!(" {lang}{id}."));
    out
}

fn check_langs(langs: usize, min: usize) -> Result<()> {
    if langs < min || langs > LANGS.len() {
        return Err(Error::config(format!(
            "language count must be in {min}..={}, got {langs}",
            LANGS.len()
        )));
    }
    Ok(())
}

fn margin(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    // three decimals, so ties occur
    let m = rng.random_range(lo..hi);
    ((m * 1000.0).floor() / 1000.0).max(lo)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomSpec {
    pub pairs: u64,
    pub langs: usize,
    /// Probability that a side reuses an earlier sentence of its language.
    pub reuse: f64,
    /// Draw sentence ids uniformly from a fixed per-language universe
    /// instead; `reuse` is then ignored.
    pub universe: Option<u64>,
    pub seed: u64,
}

impl RandomSpec {
    pub fn validate(&self) -> Result<()> {
        check_langs(self.langs, 2)?;
        if !(0.0..=1.0).contains(&self.reuse) {
            return Err(Error::config("reuse rate must be in [0, 1]"));
        }
        if self.universe == Some(0) {
            return Err(Error::config("universe must be positive"));
        }
        Ok(())
    }

    pub fn records(&self) -> Result<RandomPairs> {
        self.validate()?;
        Ok(RandomPairs {
            spec: self.clone(),
            rng: ChaCha8Rng::seed_from_u64(self.seed),
            issued: vec![0; self.langs],
            emitted: 0,
        })
    }
}

/// Streaming generator; memory does not grow with the number of pairs.
pub struct RandomPairs {
    spec: RandomSpec,
    rng: ChaCha8Rng,
    issued: Vec<u64>,
    emitted: u64,
}

impl RandomPairs {
    fn side(&mut self, lang: usize) -> u64 {
        if let Some(u) = self.spec.universe {
            return self.rng.random_range(0..u);
        }
        let n = self.issued[lang];
        if n > 0 && self.rng.random_bool(self.spec.reuse) {
            self.rng.random_range(0..n)
        } else {
            self.issued[lang] += 1;
            n
        }
    }
}

impl Iterator for RandomPairs {
    type Item = BitextRecord;

    fn next(&mut self) -> Option<BitextRecord> {
        if self.emitted == self.spec.pairs {
            return None;
        }
        self.emitted += 1;
        let s = self.rng.random_range(0..self.spec.langs);
        let mut t = self.rng.random_range(0..self.spec.langs - 1);
        if t >= s {
            t += 1;
        }
        let (si, ti) = (self.side(s), self.side(t));
        let m = margin(&mut self.rng, 0.9, 1.6);
        Some(BitextRecord::new(
            LANGS[s],
            LANGS[t],
            sentence_text(LANGS[s], si),
            sentence_text(LANGS[t], ti),
            m,
        ))
    }
}

pub fn write_random(spec: &RandomSpec, path: &Path) -> Result<u64> {
    let mut w = create_output(path)?;
    let mut n = 0;
    for r in spec.records()? {
        r.write_tsv(&mut w).at(path)?;
        n += 1;
    }
    w.flush().at(path)?;
    Ok(n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSpec {
    pub tuples: u64,
    pub langs: usize,
    /// Relative weight per tuple size (sizes ≥ 2, at most `langs`).
    pub size_weights: BTreeMap<u32, f64>,
    /// Probability that a monolingual sentence has a translation.
    pub translation_rate: f64,
    /// Per non-hub member, probability of an extra near-duplicate variant.
    pub near_dup_rate: f64,
    /// Per pair of non-hub members, probability of a redundant direct pair.
    pub cross_pair_rate: f64,
    pub seed: u64,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        PlantedSpec {
            tuples: 20_000,
            langs: 12,
            size_weights: BTreeMap::from([(2, 0.55), (3, 0.15), (4, 0.1), (5, 0.07), (6, 0.05), (8, 0.05), (10, 0.03)]),
            translation_rate: 0.25,
            near_dup_rate: 0.05,
            cross_pair_rate: 0.1,
            seed: 1,
        }
    }
}

impl PlantedSpec {
    pub fn validate(&self) -> Result<()> {
        check_langs(self.langs, 2)?;
        if self.size_weights.is_empty() {
            return Err(Error::config("size weights are empty"));
        }
        for (&k, &w) in &self.size_weights {
            if k < 2 || k as usize > self.langs {
                return Err(Error::config(format!("tuple size {k} outside 2..={}", self.langs)));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::config(format!("bad weight for size {k}")));
            }
        }
        if !(self.translation_rate > 0.0 && self.translation_rate <= 1.0) {
            return Err(Error::config("translation rate must be in (0, 1]"));
        }
        for (name, p) in [("near-duplicate rate", self.near_dup_rate), ("cross-pair rate", self.cross_pair_rate)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(format!("{name} must be in [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedTruth {
    pub spec: PlantedSpec,
    pub pairs: u64,
    pub tuples_by_size: BTreeMap<u32, u64>,
    /// Unique sentences per language that occur in some pair, variants
    /// included.
    pub translated: BTreeMap<String, u64>,
    /// Monolingual unique-sentence totals.
    pub totals: BTreeMap<String, u64>,
    pub near_duplicates: BTreeMap<String, u64>,
}

pub struct Planted {
    pub records: Vec<BitextRecord>,
    /// `(lang, text)` for every monolingual sentence.
    pub mono: Vec<(String, String)>,
    pub truth: PlantedTruth,
}

/// Each planted tuple is a star from a hub sentence at high margins, so the
/// builder recovers it exactly; cross pairs land later and are discarded,
/// variants land last and lose to the original member.
pub fn planted(spec: &PlantedSpec) -> Result<Planted> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let sizes: Vec<u32> = spec.size_weights.keys().copied().collect();
    let dist = WeightedIndex::new(spec.size_weights.values().copied())
        .map_err(|e| Error::config(format!("size weights: {e}")))?;
    let mut next_id = vec![0u64; spec.langs];
    let mut fresh = |l: usize| {
        next_id[l] += 1;
        sentence_text(LANGS[l], next_id[l] - 1)
    };
    let mut records = Vec::new();
    let mut tuples_by_size: BTreeMap<u32, u64> = sizes.iter().map(|&k| (k, 0)).collect();
    let mut near_duplicates = BTreeMap::new();
    for _ in 0..spec.tuples {
        let k = sizes[dist.sample(&mut rng)];
        *tuples_by_size.get_mut(&k).unwrap() += 1;
        let langs = sample(&mut rng, spec.langs, k as usize).into_vec();
        let texts: Vec<String> = langs.iter().map(|&l| fresh(l)).collect();
        let hub = (LANGS[langs[0]], &texts[0]);
        for (&l, t) in langs.iter().zip(&texts).skip(1) {
            let m = margin(&mut rng, 1.20, 1.50);
            records.push(BitextRecord::new(hub.0, LANGS[l], hub.1.clone(), t.clone(), m));
        }
        for i in 1..langs.len() {
            for j in i + 1..langs.len() {
                if rng.random_bool(spec.cross_pair_rate) {
                    let m = margin(&mut rng, 1.05, 1.15);
                    records.push(BitextRecord::new(
                        LANGS[langs[i]],
                        LANGS[langs[j]],
                        texts[i].clone(),
                        texts[j].clone(),
                        m,
                    ));
                }
            }
        }
        for &l in &langs[1..] {
            if rng.random_bool(spec.near_dup_rate) {
                let m = margin(&mut rng, 1.00, 1.05);
                records.push(BitextRecord::new(hub.0, LANGS[l], hub.1.clone(), fresh(l), m));
                *near_duplicates.entry(LANGS[l].to_string()).or_insert(0) += 1;
            }
        }
    }

    // Untranslated sentences: with translation probability r, the failures
    // before the t-th success are a sum of t geometric draws.
    let r = spec.translation_rate;
    let mut mono = Vec::new();
    let mut translated = BTreeMap::new();
    let mut totals = BTreeMap::new();
    for (l, &t) in next_id.clone().iter().enumerate() {
        if t == 0 {
            continue;
        }
        let mut failures = 0u64;
        if r < 1.0 {
            let ln_q = (1.0 - r).ln();
            for _ in 0..t {
                let u: f64 = 1.0 - rng.random::<f64>();
                failures += (u.ln() / ln_q).floor() as u64;
            }
        }
        let lang = LANGS[l];
        for id in 0..t + failures {
            mono.push((lang.to_string(), sentence_text(lang, id)));
        }
        translated.insert(lang.to_string(), t);
        totals.insert(lang.to_string(), t + failures);
    }

    Ok(Planted {
        truth: PlantedTruth {
            spec: spec.clone(),
            pairs: records.len() as u64,
            tuples_by_size,
            translated,
            totals,
            near_duplicates,
        },
        records,
        mono,
    })
}

/// Write `pairs.tsv`, `mono.tsv`, `totals.tsv` and `truth.json` into `dir`.
pub fn write_planted(spec: &PlantedSpec, dir: &Path) -> Result<PlantedTruth> {
    let p = planted(spec)?;
    fs::create_dir_all(dir).at(dir)?;
    let path = dir.join("pairs.tsv");
    let mut w = create_output(&path)?;
    for r in &p.records {
        r.write_tsv(&mut w).at(&path)?;
    }
    w.flush().at(&path)?;

    let path = dir.join("mono.tsv");
    let mut w = create_output(&path)?;
    for (l, t) in &p.mono {
        writeln!(w, "{l}\t{t}").at(&path)?;
    }
    w.flush().at(&path)?;

    let mut totals = String::new();
    for (l, n) in &p.truth.totals {
        totals.push_str(&format!("{l}\t{n}\n"));
    }
    write_atomic(&dir.join("totals.tsv"), totals.as_bytes())?;
    write_atomic(
        &dir.join("truth.json"),
        (serde_json::to_string_pretty(&p.truth)? + "\n").as_bytes(),
    )?;
    Ok(p.truth)
}
