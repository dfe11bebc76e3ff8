//! End-to-end corpus construction and the corpus directory layout.
//!
//! ```text
//! <out>/tuples.jsonl   one tuple per line, ascending row
//! <out>/manifest.json  output-determining config, input checksums, stage counts
//! <out>/stats.tsv      parallelism histogram over the default buckets
//! <out>/rejects.tsv    line_no, reason, raw line
//! <out>/run.json       the same config plus execution knobs (shards, memory)
//! ```
//!
//! Everything except `run.json` is byte-identical for any shard count or
//! memory budget.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use super::coalesce::coalesce;
use super::invert::invert_and_dedup;
use super::store::StoreWriter;
use super::table::{merge_pass, MergeCounts};
use crate::analyze::{BucketSet, Histogram};
use crate::error::{Error, IoContext, Result};
use crate::ingest::{
    ingest_files, BinLayout, Digest, HashWidth, IngestOptions, IngestSummary, OrderedRun,
    HASH_ALGORITHM, HASH_SEED,
};
use crate::io::{checksum_file, create_output, write_atomic, WorkDir};

pub const MANIFEST_FORMAT: &str = "mwpar-corpus/1";

/// Settings that determine the corpus contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildConfig {
    pub inputs: Vec<PathBuf>,
    pub bin_layout: BinLayout,
    pub hash_width: HashWidth,
    pub reject_cap: f64,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            inputs: Vec::new(),
            bin_layout: BinLayout::default(),
            hash_width: HashWidth::Bits64,
            reject_cap: 0.05,
        }
    }
}

impl BuildConfig {
    pub fn validate(&self) -> Result<()> {
        self.bin_layout.validate()?;
        if !(0.0..=1.0).contains(&self.reject_cap) {
            return Err(Error::config(format!(
                "reject cap must be a fraction in [0, 1], got {}",
                self.reject_cap
            )));
        }
        Ok(())
    }
}

/// Settings that change how the build runs but not what it produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExecOptions {
    pub shards: usize,
    pub memory_budget: u64,
    /// Defaults to `<out>/.work`.
    pub work_dir: Option<PathBuf>,
    pub keep_work: bool,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions {
            shards: 8,
            memory_budget: 2 << 30,
            work_dir: None,
            keep_work: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HashInfo {
    pub algorithm: String,
    pub seed: u64,
    pub bits: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputRecord {
    pub path: PathBuf,
    pub bytes: u64,
    pub sha256: String,
    pub lines: u64,
    pub records: u64,
    pub rejected: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub lines_read: u64,
    pub lines_rejected: u64,
    pub pairs_in: u64,
    pub pairs_new_row: u64,
    pub pairs_joined: u64,
    pub pairs_discarded: u64,
    pub rows_created: u64,
    /// Distinct (lang, text) placed by the merge pass, before near-duplicate
    /// removal.
    pub sentences_unique: u64,
    pub duplicates_removed: u64,
    pub rows_dropped: u64,
    pub tuples_out: u64,
    pub sentences_out: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageCounts {
    pub sentences_unique: u64,
    pub duplicates_removed: u64,
    pub sentences_out: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub config: BuildConfig,
    pub hash: HashInfo,
    pub inputs: Vec<InputRecord>,
    pub counts: StageCounts,
    pub languages: BTreeMap<String, LanguageCounts>,
    /// Parsed pairs per `src-tgt` language pair.
    pub language_pairs: BTreeMap<String, u64>,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let p = dir.join("manifest.json");
        let m: Manifest = serde_json::from_slice(&fs::read(&p).at(&p)?)?;
        if m.format != MANIFEST_FORMAT {
            return Err(Error::data(format!("{}: unknown format {:?}", p.display(), m.format)));
        }
        Ok(m)
    }
}

#[derive(Serialize)]
struct RunRecordFile<'a> {
    config: &'a BuildConfig,
    execution: &'a ExecOptions,
}

struct BuiltCounts {
    merge: MergeCounts,
    unique: Vec<u64>,
    dups: Vec<u64>,
    out: Vec<u64>,
    rows_dropped: u64,
    tuples: u64,
    sentences: u64,
    histogram: Histogram,
}

/// Build a corpus directory at `out` from the configured inputs.
pub fn build_corpus(cfg: &BuildConfig, exec: &ExecOptions, out: &Path) -> Result<Manifest> {
    cfg.validate()?;
    if exec.shards == 0 {
        return Err(Error::config("shard count must be positive"));
    }
    fs::create_dir_all(out).at(out)?;
    let work = WorkDir::create(
        exec.work_dir.clone().unwrap_or_else(|| out.join(".work")),
        exec.keep_work,
    )?;

    let mut inputs = Vec::with_capacity(cfg.inputs.len());
    for p in &cfg.inputs {
        inputs.push(checksum_file(p)?);
    }

    let opts = IngestOptions {
        layout: cfg.bin_layout,
        width: cfg.hash_width,
        shards: exec.shards,
        reject_cap: cfg.reject_cap,
        memory_budget: exec.memory_budget,
    };
    let rejects_path = out.join("rejects.tsv");
    let mut rejects = create_output(&rejects_path)?;
    info!("ingesting {} input(s)", cfg.inputs.len());
    let (run, summary) = ingest_files(&cfg.inputs, &opts, work.path(), &mut rejects)?;
    drop(rejects);
    info!(
        "ingested {} pairs ({} rejected lines)",
        summary.records, summary.rejected
    );

    let built = match cfg.hash_width {
        HashWidth::Bits64 => build_from_run::<u64>(&run, exec, &work, out)?,
        HashWidth::Bits128 => build_from_run::<u128>(&run, exec, &work, out)?,
    };

    let manifest = assemble_manifest(cfg, &run, &summary, inputs, &built);
    write_atomic(&out.join("stats.tsv"), built.histogram.to_tsv().as_bytes())?;
    let mut json = serde_json::to_vec_pretty(&manifest)?;
    json.push(b'\n');
    write_atomic(&out.join("manifest.json"), &json)?;
    let mut run_json = serde_json::to_vec_pretty(&RunRecordFile {
        config: cfg,
        execution: exec,
    })?;
    run_json.push(b'\n');
    write_atomic(&out.join("run.json"), &run_json)?;
    info!(
        "wrote {} tuples with {} sentences",
        manifest.counts.tuples_out, manifest.counts.sentences_out
    );
    Ok(manifest)
}

fn build_from_run<D: Digest>(
    run: &OrderedRun,
    exec: &ExecOptions,
    work: &WorkDir,
    out: &Path,
) -> Result<BuiltCounts> {
    let mut store = StoreWriter::<D>::create(&work.join("store"), exec.shards)?;
    let (table, merge) = merge_pass::<D, _>(run, |_, digest, text| store.append(digest, text))?;
    fs::remove_file(&run.path).at(&run.path)?;
    info!(
        "merge pass: {} rows, {} joined, {} discarded",
        merge.new_rows,
        merge.joined(),
        merge.discarded
    );

    let inverted = invert_and_dedup(table);
    let store = store.finish()?;

    // Enough row-range partitions that one partition's texts fit in a
    // quarter of the budget.
    let part_budget = (exec.memory_budget / 4).max(1 << 20);
    let out_shards = (store.text_bytes()?.div_ceil(part_budget) as usize).max(exec.shards);

    let buckets = BucketSet::default();
    let mut bucket_counts = vec![(0u64, 0u64); buckets.len()];
    let tuples_path = out.join("tuples.jsonl");
    let tmp = out.join("tuples.jsonl.tmp");
    let mut writer = create_output(&tmp)?;
    let mut line = Vec::new();
    let counts = coalesce(&inverted, &run.langs, &store, &work.join("spill"), out_shards, |t| {
        line.clear();
        t.write_json_line(&mut line)?;
        if let Some(b) = buckets.index_of(t.size() as u32) {
            bucket_counts[b].0 += 1;
            bucket_counts[b].1 += t.size() as u64;
        }
        writer.write_all(&line).at(&tmp)
    })?;
    writer.flush().at(&tmp)?;
    drop(writer);
    fs::rename(&tmp, &tuples_path).at(&tuples_path)?;

    Ok(BuiltCounts {
        merge,
        unique: inverted.unique.clone(),
        dups: inverted.duplicates_removed.clone(),
        out: counts.per_lang.clone(),
        rows_dropped: counts.rows_dropped,
        tuples: counts.tuples,
        sentences: counts.sentences,
        histogram: Histogram::from_counts(&buckets, &bucket_counts),
    })
}

fn assemble_manifest(
    cfg: &BuildConfig,
    run: &OrderedRun,
    summary: &IngestSummary,
    checksums: Vec<crate::io::FileChecksum>,
    built: &BuiltCounts,
) -> Manifest {
    let inputs = summary
        .inputs
        .iter()
        .zip(checksums)
        .map(|(s, c)| InputRecord {
            path: s.path.clone(),
            bytes: c.bytes,
            sha256: c.sha256,
            lines: s.lines,
            records: s.records,
            rejected: s.rejected,
        })
        .collect();

    let mut languages = BTreeMap::new();
    for (id, code) in run.langs.codes().iter().enumerate() {
        let at = |v: &Vec<u64>| v.get(id).copied().unwrap_or(0);
        languages.insert(
            code.clone(),
            LanguageCounts {
                sentences_unique: at(&built.unique),
                duplicates_removed: at(&built.dups),
                sentences_out: at(&built.out),
            },
        );
    }

    let m = &built.merge;
    Manifest {
        format: MANIFEST_FORMAT.to_string(),
        config: cfg.clone(),
        hash: HashInfo {
            algorithm: HASH_ALGORITHM.to_string(),
            seed: HASH_SEED,
            bits: cfg.hash_width.bytes() as u32 * 8,
        },
        inputs,
        counts: StageCounts {
            lines_read: summary.lines,
            lines_rejected: summary.rejected,
            pairs_in: m.pairs_in,
            pairs_new_row: m.new_rows,
            pairs_joined: m.joined(),
            pairs_discarded: m.discarded,
            rows_created: m.new_rows,
            sentences_unique: built.unique.iter().sum(),
            duplicates_removed: built.dups.iter().sum(),
            rows_dropped: built.rows_dropped,
            tuples_out: built.tuples,
            sentences_out: built.sentences,
        },
        languages,
        language_pairs: summary
            .pair_counts
            .iter()
            .map(|((s, t), n)| (format!("{s}-{t}"), *n))
            .collect(),
    }
}
