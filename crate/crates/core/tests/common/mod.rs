//! Shared helpers for the integration and acceptance tests: a literal
//! in-memory transcription of the greedy tuple algorithm (plain strings, no
//! hashing, no sharding) and brute-force recounts.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use indexmap::IndexMap;
use mwpar::builder::{build_corpus, BuildConfig, ExecOptions, Manifest};
use mwpar::ingest::{BinLayout, BitextRecord};

/// lang → (text, score)
pub type Members = BTreeMap<String, (String, f64)>;

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct OracleCounts {
    pub new_rows: u64,
    pub joined: u64,
    pub discarded: u64,
    pub unique: u64,
    pub duplicates_removed: u64,
}

pub struct OracleOutput {
    /// Indexed by row id.
    pub rows: Vec<Members>,
    pub counts: OracleCounts,
}

/// Stable sort by descending bin, computed from the bin definition.
pub fn binned_order(records: &[BitextRecord], layout: BinLayout) -> Vec<BitextRecord> {
    let width = (layout.hi - layout.lo) / layout.n_bins as f64;
    let bin = |m: f64| {
        let i = ((m - layout.lo) / width).floor();
        i.clamp(0.0, (layout.n_bins - 1) as f64) as u32
    };
    let mut v: Vec<(u32, BitextRecord)> = records.iter().map(|r| (bin(r.margin), r.clone())).collect();
    v.sort_by_key(|e| std::cmp::Reverse(e.0));
    v.into_iter().map(|(_, r)| r).collect()
}

/// The algorithm over records already in processing order.
pub fn algorithm1(bitext: &[BitextRecord]) -> OracleOutput {
    let mut sent2row: IndexMap<String, IndexMap<String, (u64, f64)>> = IndexMap::new();
    let mut num_rows = 0u64;
    let mut counts = OracleCounts::default();
    for r in bitext {
        let (src, tgt) = (r.src_text.trim().to_string(), r.tgt_text.trim().to_string());
        let src_in = sent2row.get(&r.src_lang).is_some_and(|m| m.contains_key(&src));
        let tgt_in = sent2row.get(&r.tgt_lang).is_some_and(|m| m.contains_key(&tgt));
        if !src_in && !tgt_in {
            sent2row.entry(r.src_lang.clone()).or_default().insert(src, (num_rows, r.margin));
            sent2row.entry(r.tgt_lang.clone()).or_default().insert(tgt, (num_rows, r.margin));
            num_rows += 1;
            counts.new_rows += 1;
        } else if src_in && !tgt_in {
            let src_row = sent2row[&r.src_lang][&src].0;
            sent2row.entry(r.tgt_lang.clone()).or_default().insert(tgt, (src_row, r.margin));
            counts.joined += 1;
        } else if tgt_in && !src_in {
            let tgt_row = sent2row[&r.tgt_lang][&tgt].0;
            sent2row.entry(r.src_lang.clone()).or_default().insert(src, (tgt_row, r.margin));
            counts.joined += 1;
        } else {
            counts.discarded += 1;
        }
    }

    let mut row2sent: HashMap<&str, HashMap<u64, (&str, f64)>> = HashMap::new();
    for (lang, sents) in &sent2row {
        counts.unique += sents.len() as u64;
        for (sent, &(row, score)) in sents {
            let per = row2sent.entry(lang.as_str()).or_default();
            let old = per.get(&row).map_or(-1.0, |e| e.1);
            if per.contains_key(&row) {
                counts.duplicates_removed += 1;
            }
            if score > old {
                per.insert(row, (sent.as_str(), score));
            }
        }
    }

    let mut rows = Vec::with_capacity(num_rows as usize);
    for row in 0..num_rows {
        let mut translations = Members::new();
        for lang in sent2row.keys() {
            if let Some(&(s, score)) = row2sent.get(lang.as_str()).and_then(|m| m.get(&row)) {
                translations.insert(lang.clone(), (s.to_string(), score));
            }
        }
        rows.push(translations);
    }
    OracleOutput { rows, counts }
}

pub fn write_tsv(records: &[BitextRecord], path: &Path) {
    let mut w = BufWriter::new(fs::File::create(path).unwrap());
    for r in records {
        r.write_tsv(&mut w).unwrap();
    }
    w.flush().unwrap();
}

pub fn exec(shards: usize) -> ExecOptions {
    ExecOptions {
        shards,
        ..ExecOptions::default()
    }
}

/// Write `records` to `<dir>/pairs.tsv` and build `<dir>/corpus`.
pub fn build(records: &[BitextRecord], dir: &Path, shards: usize) -> Manifest {
    let input = dir.join("pairs.tsv");
    write_tsv(records, &input);
    let cfg = BuildConfig {
        inputs: vec![input],
        ..BuildConfig::default()
    };
    build_corpus(&cfg, &exec(shards), &dir.join("corpus")).unwrap()
}

/// `(row, members)` per line of `tuples.jsonl`, via plain JSON parsing.
pub fn read_tuples(corpus: &Path) -> Vec<(u64, usize, Members)> {
    let text = fs::read_to_string(corpus.join("tuples.jsonl")).unwrap();
    text.lines()
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            let members = v["members"]
                .as_object()
                .unwrap()
                .iter()
                .map(|(lang, m)| {
                    (
                        lang.clone(),
                        (m["text"].as_str().unwrap().to_string(), m["score"].as_f64().unwrap()),
                    )
                })
                .collect();
            (v["row"].as_u64().unwrap(), v["size"].as_u64().unwrap() as usize, members)
        })
        .collect()
}

/// Compare the pipeline's corpus against the oracle; `Err` describes the
/// first mismatch.
pub fn compare_with_oracle(records: &[BitextRecord], corpus: &Path, m: &Manifest) -> Result<(), String> {
    let ordered = binned_order(records, m.config.bin_layout);
    let oracle = algorithm1(&ordered);
    let expected: Vec<(u64, Members)> = oracle
        .rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.len() >= 2)
        .map(|(i, r)| (i as u64, r.clone()))
        .collect();
    if expected.len() != oracle.rows.len() {
        return Err("oracle produced a row with fewer than two languages".into());
    }
    let got: Vec<(u64, Members)> = read_tuples(corpus).into_iter().map(|(r, _, m)| (r, m)).collect();
    if got.len() != expected.len() {
        return Err(format!("{} tuples, oracle has {}", got.len(), expected.len()));
    }
    for (g, e) in got.iter().zip(&expected) {
        if g != e {
            return Err(format!("row mismatch: got {g:?}, oracle {e:?}"));
        }
    }
    let c = &m.counts;
    let oc = &oracle.counts;
    let ours = (c.pairs_new_row, c.pairs_joined, c.pairs_discarded, c.sentences_unique, c.duplicates_removed);
    let theirs = (oc.new_rows, oc.joined, oc.discarded, oc.unique, oc.duplicates_removed);
    if ours != theirs {
        return Err(format!("stage counts {ours:?}, oracle {theirs:?}"));
    }
    Ok(())
}

/// Structural invariants of a built corpus. Returns every violation found.
pub fn check_invariants(corpus: &Path, m: &Manifest) -> Vec<String> {
    let mut bad = Vec::new();
    let tuples = read_tuples(corpus);
    let mut seen: HashMap<(String, String), u64> = HashMap::new();
    let mut last_row = None;
    let (mut two_tuples, mut two_sentences, mut sentences) = (0u64, 0u64, 0u64);
    for (row, size, members) in &tuples {
        if last_row.is_some_and(|l| l >= *row) {
            bad.push(format!("row {row} out of order"));
        }
        last_row = Some(*row);
        if members.len() < 2 {
            bad.push(format!("row {row} has {} languages", members.len()));
        }
        if *size != members.len() {
            bad.push(format!("row {row} size {size} != {} members", members.len()));
        }
        for (lang, (text, _)) in members {
            if let Some(prev) = seen.insert((lang.clone(), text.clone()), *row) {
                bad.push(format!("{lang}:{text:?} in rows {prev} and {row}"));
            }
        }
        sentences += members.len() as u64;
        if members.len() == 2 {
            two_tuples += 1;
            two_sentences += 2;
        }
    }
    let c = &m.counts;
    if c.pairs_in != c.pairs_new_row + c.pairs_joined + c.pairs_discarded {
        bad.push(format!("pairs_in {} != new + joined + discarded", c.pairs_in));
    }
    if c.rows_created != c.pairs_new_row {
        bad.push("rows_created != pairs_new_row".into());
    }
    if c.sentences_out != sentences || c.tuples_out != tuples.len() as u64 {
        bad.push("manifest output counts disagree with tuples.jsonl".into());
    }
    if c.sentences_unique != c.sentences_out + c.duplicates_removed {
        bad.push("sentences_unique != sentences_out + duplicates_removed".into());
    }
    let stats = fs::read_to_string(corpus.join("stats.tsv")).unwrap();
    let two = stats.lines().find(|l| l.starts_with("2\t")).unwrap();
    let f: Vec<&str> = two.split('\t').collect();
    if f[1].parse::<u64>().unwrap() != two_tuples || f[3].parse::<u64>().unwrap() != two_sentences {
        bad.push(format!("bucket 2 row {two:?} disagrees with recount {two_tuples}/{two_sentences}"));
    }
    if two_sentences != 2 * two_tuples {
        bad.push("bucket 2 sentences != 2 x tuples".into());
    }
    bad
}

/// Every file under `dir` except `run.json`, as relative path → bytes.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in fs::read_dir(dir).unwrap() {
        let e = e.unwrap();
        let name = e.file_name().to_string_lossy().to_string();
        if name == "run.json" || e.file_type().unwrap().is_dir() {
            continue;
        }
        out.insert(name, fs::read(e.path()).unwrap());
    }
    out
}

/// Parallelism of `(lang, text)` by scanning every tuple; 1 when absent.
pub fn scan_parallelism(tuples: &[(u64, usize, Members)], lang: &str, text: &str) -> u32 {
    let text = text.trim();
    for (_, size, members) in tuples {
        if members.get(lang).is_some_and(|(t, _)| t == text) {
            return *size as u32;
        }
    }
    1
}

/// Default buckets by hand: 2, 3-4, 5-7, 8+.
pub fn default_bucket(size: usize) -> usize {
    match size {
        2 => 0,
        3..=4 => 1,
        5..=7 => 2,
        _ => 3,
    }
}

pub const DEFAULT_BUCKET_LABELS: [&str; 4] = ["2", "3-4", "5-7", "8+"];

pub fn stratum(chars: f64, edges: &[u32]) -> usize {
    let mut s = 0;
    for (i, &e) in edges.iter().enumerate() {
        if chars >= e as f64 {
            s = i;
        }
    }
    s
}

pub fn stratum_label(i: usize, edges: &[u32]) -> String {
    match edges.get(i + 1) {
        Some(hi) => format!("[{},{})", edges[i], hi),
        None => format!("[{},inf)", edges[i]),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Val {
    Num(f64),
    Label(String),
}

/// Per-sentence entries keyed by (lang, text), or per-pair entries keyed by
/// (src lang, src text, tgt lang, tgt text).
pub enum Entries {
    Sentence(HashMap<(String, String), Val>),
    Pair(HashMap<(String, String, String, String), Val>),
}

impl Entries {
    pub fn write_tsv(&self, path: &Path) {
        let mut w = BufWriter::new(fs::File::create(path).unwrap());
        let show = |v: &Val| match v {
            Val::Num(x) => format!("{x}"),
            Val::Label(l) => l.clone(),
        };
        match self {
            Entries::Sentence(m) => {
                for ((l, t), v) in m {
                    writeln!(w, "{l}\t{t}\t{}", show(v)).unwrap();
                }
            }
            Entries::Pair(m) => {
                for ((sl, st, tl, tt), v) in m {
                    writeln!(w, "{sl}\t{st}\t{tl}\t{tt}\t{}", show(v)).unwrap();
                }
            }
        }
        w.flush().unwrap();
    }
}

/// Values per (bucket, stratum) cell by scanning every tuple.
pub fn brute_cells(
    tuples: &[(u64, usize, Members)],
    entries: &Entries,
    edges: Option<&[u32]>,
) -> BTreeMap<(usize, usize), Vec<Val>> {
    let mut cells: BTreeMap<(usize, usize), Vec<Val>> = BTreeMap::new();
    let chars = |t: &str| t.chars().count() as f64;
    for (_, size, members) in tuples {
        let b = default_bucket(*size);
        match entries {
            Entries::Sentence(m) => {
                for (lang, (text, _)) in members {
                    if let Some(v) = m.get(&(lang.clone(), text.clone())) {
                        let s = edges.map_or(0, |e| stratum(chars(text), e));
                        cells.entry((b, s)).or_default().push(v.clone());
                    }
                }
            }
            Entries::Pair(m) => {
                for (sl, (st, _)) in members {
                    for (tl, (tt, _)) in members {
                        if sl == tl {
                            continue;
                        }
                        if let Some(v) = m.get(&(sl.clone(), st.clone(), tl.clone(), tt.clone())) {
                            let len = (chars(st) + chars(tt)) / 2.0;
                            let s = edges.map_or(0, |e| stratum(len, e));
                            cells.entry((b, s)).or_default().push(v.clone());
                        }
                    }
                }
            }
        }
    }
    cells
}

pub fn brute_mean(v: &[Val]) -> f64 {
    let xs: Vec<f64> = v.iter().map(|x| match x { Val::Num(n) => *n, _ => unreachable!() }).collect();
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn brute_median(v: &[Val]) -> f64 {
    let mut xs: Vec<f64> = v.iter().map(|x| match x { Val::Num(n) => *n, _ => unreachable!() }).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}
