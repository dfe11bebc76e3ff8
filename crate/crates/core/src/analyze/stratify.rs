//! Summaries of a metric per parallelism bucket, optionally split further
//! by sentence length.

use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::scores::{Key, Stored};
use super::{BucketSet, Corpus, Keying, ScoreKind, ScoreTable};
use crate::builder::TranslationTuple;
use crate::error::{Error, Result};
use crate::ingest::hash_sentence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    Mean,
    Median,
    /// Percentage of each label; categorical tables only.
    Distribution,
}

impl std::str::FromStr for Aggregate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Aggregate::Mean),
            "median" => Ok(Aggregate::Median),
            "distribution" => Ok(Aggregate::Distribution),
            other => Err(Error::config(format!("unknown aggregate {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Metric<'a> {
    Scores(&'a ScoreTable),
    /// Character length of each member sentence, restricted to one language
    /// when given.
    Length { lang: Option<&'a str> },
}

/// Character-length strata `[e0,e1), [e1,e2), …, [ek,∞)` with `e0 = 0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthStrata {
    edges: Vec<u32>,
}

impl Default for LengthStrata {
    fn default() -> Self {
        LengthStrata {
            edges: vec![0, 25, 50, 100],
        }
    }
}

impl LengthStrata {
    pub fn new(edges: Vec<u32>) -> Result<Self> {
        if edges.first() != Some(&0) {
            return Err(Error::config("length strata must start at 0"));
        }
        if edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("length strata edges must increase"));
        }
        Ok(LengthStrata { edges })
    }

    /// `0,25,50,100`
    pub fn parse(spec: &str) -> Result<Self> {
        let edges = spec
            .split(',')
            .map(|e| {
                e.trim()
                    .parse()
                    .map_err(|_| Error::config(format!("bad length edge {e:?}")))
            })
            .collect::<Result<Vec<u32>>>()?;
        LengthStrata::new(edges)
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn index_of(&self, chars: f64) -> usize {
        self.edges.partition_point(|&e| e as f64 <= chars).saturating_sub(1)
    }

    pub fn label(&self, i: usize) -> String {
        match self.edges.get(i + 1) {
            Some(hi) => format!("[{},{})", self.edges[i], hi),
            None => format!("[{},inf)", self.edges[i]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub size: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct StratifyOptions {
    pub buckets: BucketSet,
    pub aggregate: Aggregate,
    pub strata: Option<LengthStrata>,
    /// Uniform sample of matched observations before aggregation.
    pub sample: Option<SampleSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub bucket: String,
    pub stratum: Option<String>,
    pub label: Option<String>,
    /// Observations in the cell; for distributions, observations with this
    /// label.
    pub n: u64,
    /// Mean, median or label percentage; `None` for an empty cell.
    pub value: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Coverage {
    pub table_entries: u64,
    pub matched: u64,
    pub unmatched: u64,
    /// Corpus sentences (per-sentence tables) or tuples (per-pair tables) in
    /// the table's languages with no score.
    pub corpus_unscored: u64,
    /// Observations aggregated, after sampling.
    pub observations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StratifyReport {
    pub metric: String,
    pub aggregate: Aggregate,
    pub buckets: String,
    pub length_strata: Option<Vec<String>>,
    pub sample: Option<SampleSpec>,
    pub coverage: Coverage,
    pub cells: Vec<Cell>,
}

impl StratifyReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("bucket\tstratum\tlabel\tn\tvalue\n");
        for c in &self.cells {
            let value = c.value.map_or_else(|| "NA".to_string(), |v| format!("{v:.6}"));
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                c.bucket,
                c.stratum.as_deref().unwrap_or("all"),
                c.label.as_deref().unwrap_or("-"),
                c.n,
                value
            );
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn cell(&self, bucket: &str, stratum: Option<&str>, label: Option<&str>) -> Option<&Cell> {
        self.cells.iter().find(|c| {
            c.bucket == bucket && c.stratum.as_deref() == stratum && c.label.as_deref() == label
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct Obs {
    cell: u32,
    value: Stored,
}

/// Per-cell accumulators. Means use a running update so that a constant
/// metric reproduces the constant exactly.
#[derive(Debug, Clone)]
struct Grid {
    n: Vec<u64>,
    mean: Vec<f64>,
    values: Vec<Vec<f64>>,
    labels: Vec<Vec<u64>>,
}

impl Grid {
    fn new(cells: usize, aggregate: Aggregate, n_labels: usize) -> Self {
        Grid {
            n: vec![0; cells],
            mean: if aggregate == Aggregate::Mean { vec![0.0; cells] } else { Vec::new() },
            values: if aggregate == Aggregate::Median { vec![Vec::new(); cells] } else { Vec::new() },
            labels: if aggregate == Aggregate::Distribution {
                vec![vec![0; n_labels]; cells]
            } else {
                Vec::new()
            },
        }
    }

    fn add(&mut self, o: Obs) {
        let c = o.cell as usize;
        self.n[c] += 1;
        match o.value {
            Stored::Num(v) => {
                if !self.mean.is_empty() {
                    self.mean[c] += (v - self.mean[c]) / self.n[c] as f64;
                }
                if !self.values.is_empty() {
                    self.values[c].push(v);
                }
            }
            Stored::Label(l) => {
                if !self.labels.is_empty() {
                    self.labels[c][l as usize] += 1;
                }
            }
        }
    }

    fn merge(&mut self, other: Grid) {
        for c in 0..self.n.len() {
            let (na, nb) = (self.n[c], other.n[c]);
            if !self.mean.is_empty() && nb > 0 {
                self.mean[c] = if na == 0 {
                    other.mean[c]
                } else {
                    let (ma, mb) = (self.mean[c], other.mean[c]);
                    ma + (mb - ma) * (nb as f64 / (na + nb) as f64)
                };
            }
            self.n[c] = na + nb;
        }
        for (dst, src) in self.values.iter_mut().zip(other.values) {
            dst.extend(src);
        }
        for (dst, src) in self.labels.iter_mut().zip(other.labels) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
    }
}

struct Partial {
    grid: Grid,
    obs: Vec<Obs>,
    matched: u64,
    unscored: u64,
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    })
}

struct Layout<'a> {
    buckets: &'a BucketSet,
    strata: Option<&'a LengthStrata>,
}

impl Layout<'_> {
    fn strata_len(&self) -> usize {
        self.strata.map_or(1, LengthStrata::len)
    }

    fn cells(&self) -> usize {
        self.buckets.len() * self.strata_len()
    }

    fn cell(&self, size: usize, chars: f64) -> Option<u32> {
        let b = self.buckets.index_of(size as u32)?;
        let s = self.strata.map_or(0, |st| st.index_of(chars));
        Some((b * self.strata_len() + s) as u32)
    }
}

/// Observations contributed by one tuple.
fn observe(
    t: &TranslationTuple,
    metric: Metric<'_>,
    layout: &Layout<'_>,
    mut emit: impl FnMut(Obs),
) -> (u64, u64) {
    let size = t.size();
    let mut matched = 0;
    let mut unscored = 0;
    match metric {
        Metric::Length { lang } => {
            for (l, m) in &t.members {
                if lang.is_some_and(|want| want != l) {
                    continue;
                }
                let chars = m.text.chars().count() as f64;
                if let Some(cell) = layout.cell(size, chars) {
                    matched += 1;
                    emit(Obs {
                        cell,
                        value: Stored::Num(chars),
                    });
                }
            }
        }
        Metric::Scores(table) => {
            let keys: Vec<(Option<u16>, u64, f64)> = t
                .members
                .iter()
                .map(|(l, m)| {
                    (
                        table.lang_id(l),
                        hash_sentence(&m.text),
                        m.text.chars().count() as f64,
                    )
                })
                .collect();
            match table.keying() {
                Keying::Sentence => {
                    for &(id, digest, chars) in &keys {
                        let Some(id) = id else { continue };
                        match table.sentence((id, digest)) {
                            Some(value) => {
                                matched += 1;
                                if let Some(cell) = layout.cell(size, chars) {
                                    emit(Obs { cell, value });
                                }
                            }
                            None => unscored += 1,
                        }
                    }
                }
                Keying::Pair => {
                    let mut in_table = 0;
                    let mut hit = false;
                    for (i, &(si, sd, sc)) in keys.iter().enumerate() {
                        let Some(si) = si else { continue };
                        in_table += 1;
                        for (j, &(ti, td, tc)) in keys.iter().enumerate() {
                            let Some(ti) = ti else { continue };
                            if i == j {
                                continue;
                            }
                            let (s, g): (Key, Key) = ((si, sd), (ti, td));
                            if let Some(value) = table.pair(s, g) {
                                matched += 1;
                                hit = true;
                                if let Some(cell) = layout.cell(size, (sc + tc) / 2.0) {
                                    emit(Obs { cell, value });
                                }
                            }
                        }
                    }
                    if in_table >= 2 && !hit {
                        unscored += 1;
                    }
                }
            }
        }
    }
    (matched, unscored)
}

fn check_compatible(metric: Metric<'_>, aggregate: Aggregate) -> Result<()> {
    let kind = match metric {
        Metric::Scores(t) => t.kind(),
        Metric::Length { .. } => ScoreKind::Numeric,
    };
    match (kind, aggregate) {
        (ScoreKind::Numeric, Aggregate::Mean | Aggregate::Median)
        | (ScoreKind::Categorical, Aggregate::Distribution) => Ok(()),
        (kind, agg) => Err(Error::config(format!(
            "{agg:?} aggregate cannot summarize a {kind:?} metric"
        ))),
    }
}

/// Aggregate `metric` per parallelism bucket over every tuple yielded by
/// `tuples`. The corpus-backed entry point is [`stratify_metric`].
pub fn stratify_tuples<'t>(
    tuples: impl IntoIterator<Item = &'t TranslationTuple>,
    metric: Metric<'_>,
    opts: &StratifyOptions,
) -> Result<StratifyReport> {
    check_compatible(metric, opts.aggregate)?;
    let layout = Layout {
        buckets: &opts.buckets,
        strata: opts.strata.as_ref(),
    };
    let mut part = new_partial(metric, opts, &layout);
    for t in tuples {
        step(&mut part, t, metric, opts, &layout);
    }
    finish(part, metric, opts, &layout)
}

pub fn stratify_metric(
    corpus: &Corpus,
    metric: Metric<'_>,
    opts: &StratifyOptions,
) -> Result<StratifyReport> {
    check_compatible(metric, opts.aggregate)?;
    let layout = Layout {
        buckets: &opts.buckets,
        strata: opts.strata.as_ref(),
    };
    let part = corpus.par_fold(
        || new_partial(metric, opts, &layout),
        |p, t| {
            step(p, t, metric, opts, &layout);
            Ok(())
        },
        |acc, p| {
            acc.grid.merge(p.grid);
            acc.obs.extend(p.obs);
            acc.matched += p.matched;
            acc.unscored += p.unscored;
        },
    )?;
    finish(part, metric, opts, &layout)
}

fn n_labels(metric: Metric<'_>) -> usize {
    match metric {
        Metric::Scores(t) => t.label_count(),
        Metric::Length { .. } => 0,
    }
}

fn new_partial(metric: Metric<'_>, opts: &StratifyOptions, layout: &Layout<'_>) -> Partial {
    Partial {
        grid: Grid::new(layout.cells(), opts.aggregate, n_labels(metric)),
        obs: Vec::new(),
        matched: 0,
        unscored: 0,
    }
}

fn step(p: &mut Partial, t: &TranslationTuple, metric: Metric<'_>, opts: &StratifyOptions, layout: &Layout<'_>) {
    let sampling = opts.sample.is_some();
    let (m, u) = observe(t, metric, layout, |o| {
        if sampling {
            p.obs.push(o)
        } else {
            p.grid.add(o)
        }
    });
    p.matched += m;
    p.unscored += u;
}

fn finish(
    mut part: Partial,
    metric: Metric<'_>,
    opts: &StratifyOptions,
    layout: &Layout<'_>,
) -> Result<StratifyReport> {
    if let Some(spec) = opts.sample {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let take = spec.size.min(part.obs.len());
        let mut picked = sample(&mut rng, part.obs.len(), take).into_vec();
        picked.sort_unstable();
        for i in picked {
            part.grid.add(part.obs[i]);
        }
    }
    let grid = &mut part.grid;

    let (metric_name, table_entries) = match metric {
        Metric::Scores(t) => (
            format!("{:?}-{:?}", t.kind(), t.keying()).to_lowercase(),
            t.len() as u64,
        ),
        Metric::Length { lang } => (format!("length:{}", lang.unwrap_or("all")), 0),
    };
    let labels: Vec<(u32, String)> = match metric {
        Metric::Scores(t) => t.label_order().into_iter().map(|(i, l)| (i, l.to_string())).collect(),
        Metric::Length { .. } => Vec::new(),
    };

    let mut cells = Vec::new();
    let ns = layout.strata_len();
    for (b, bucket) in opts.buckets.iter().enumerate() {
        for s in 0..ns {
            let c = b * ns + s;
            let stratum = layout.strata.map(|st| st.label(s));
            match opts.aggregate {
                Aggregate::Mean => cells.push(Cell {
                    bucket: bucket.label.clone(),
                    stratum,
                    label: None,
                    n: grid.n[c],
                    value: (grid.n[c] > 0).then_some(grid.mean[c]),
                }),
                Aggregate::Median => cells.push(Cell {
                    bucket: bucket.label.clone(),
                    stratum,
                    label: None,
                    n: grid.n[c],
                    value: median(&mut grid.values[c]),
                }),
                Aggregate::Distribution => {
                    let total = grid.n[c];
                    for (id, name) in &labels {
                        let k = grid.labels[c][*id as usize];
                        cells.push(Cell {
                            bucket: bucket.label.clone(),
                            stratum: stratum.clone(),
                            label: Some(name.clone()),
                            n: k,
                            value: (total > 0).then(|| 100.0 * k as f64 / total as f64),
                        });
                    }
                }
            }
        }
    }

    Ok(StratifyReport {
        metric: metric_name,
        aggregate: opts.aggregate,
        buckets: opts.buckets.spec(),
        length_strata: layout
            .strata
            .map(|st| (0..st.len()).map(|i| st.label(i)).collect()),
        sample: opts.sample,
        coverage: Coverage {
            table_entries,
            matched: part.matched,
            unmatched: table_entries.saturating_sub(part.matched),
            corpus_unscored: part.unscored,
            observations: grid.n.iter().sum(),
        },
        cells,
    })
}
