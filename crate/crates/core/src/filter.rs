//! Parallelism-threshold filters for monolingual text and bitext.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analyze::CorpusIndex;
use crate::error::{Error, Result};
use crate::ingest::parse_line;
use crate::io::read_line_bytes;

const BATCH: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterMode {
    Drop,
    /// Emit every line with its parallelism appended.
    Annotate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterScope {
    Monolingual,
    Bitext,
}

impl FromStr for FilterMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "drop" => Ok(FilterMode::Drop),
            "annotate" => Ok(FilterMode::Annotate),
            other => Err(Error::config(format!("unknown filter mode {other:?}"))),
        }
    }
}

impl FromStr for FilterScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "monolingual" | "mono" => Ok(FilterScope::Monolingual),
            "bitext" => Ok(FilterScope::Bitext),
            other => Err(Error::config(format!("unknown filter scope {other:?}"))),
        }
    }
}

/// Parallelism threshold; `inf` keeps everything.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Threshold(pub u32);

impl Threshold {
    pub const INF: Threshold = Threshold(u32::MAX);

    pub fn admits(self, parallelism: u32) -> bool {
        parallelism <= self.0
    }
}

impl FromStr for Threshold {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") {
            return Ok(Threshold::INF);
        }
        match s.parse::<u32>() {
            Ok(n) if n >= 1 => Ok(Threshold(n)),
            _ => Err(Error::config(format!(
                "max parallelism must be an integer >= 1 or inf, got {s:?}"
            ))),
        }
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self == Threshold::INF {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for Threshold {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Threshold {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterPolicy {
    pub max_parallelism: Threshold,
    pub mode: FilterMode,
    pub scope: FilterScope,
}

impl FilterPolicy {
    pub fn new(max_parallelism: Threshold, mode: FilterMode, scope: FilterScope) -> Result<Self> {
        if max_parallelism.0 == 0 {
            return Err(Error::config("max parallelism must be >= 1"));
        }
        Ok(FilterPolicy {
            max_parallelism,
            mode,
            scope,
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeptDropped {
    pub kept: u64,
    pub dropped: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterSummary {
    pub policy: FilterPolicy,
    pub input_lines: u64,
    pub kept: u64,
    pub dropped: u64,
    /// Malformed lines; written to the rejects sink, never to the outputs.
    pub rejected: u64,
    /// Keyed by language (monolingual) or `src-tgt` (bitext).
    pub per_language: BTreeMap<String, KeptDropped>,
    /// Lines per observed parallelism.
    pub parallelism: BTreeMap<u32, u64>,
}

impl FilterSummary {
    fn new(policy: FilterPolicy) -> Self {
        FilterSummary {
            policy,
            input_lines: 0,
            kept: 0,
            dropped: 0,
            rejected: 0,
            per_language: BTreeMap::new(),
            parallelism: BTreeMap::new(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// Where filtered lines go. In annotate mode every line goes to `kept`.
pub struct FilterSinks<'a> {
    pub kept: &'a mut dyn Write,
    pub dropped: Option<&'a mut dyn Write>,
    pub rejects: Option<&'a mut dyn Write>,
}

enum Verdict {
    Scored { key: String, parallelism: u32 },
    Rejected(String),
}

fn mono_verdict(line: &str, index: &CorpusIndex) -> Verdict {
    let mut fields = line.split('\t');
    match (fields.next(), fields.next(), fields.next()) {
        (Some(lang), Some(text), None) if !lang.trim().is_empty() && !text.trim().is_empty() => {
            let lang = lang.trim();
            Verdict::Scored {
                key: lang.to_string(),
                parallelism: index.parallelism(lang, text),
            }
        }
        _ => Verdict::Rejected("expected lang<TAB>text".into()),
    }
}

fn bitext_verdict(line: &str, index: &CorpusIndex) -> Verdict {
    match parse_line(line) {
        Ok(r) => Verdict::Scored {
            key: format!("{}-{}", r.src_lang, r.tgt_lang),
            parallelism: index
                .parallelism(&r.src_lang, &r.src_text)
                .max(index.parallelism(&r.tgt_lang, &r.tgt_text)),
        },
        Err(reason) => Verdict::Rejected(reason.to_string()),
    }
}

pub fn filter_monolingual(
    input: &mut dyn BufRead,
    index: &CorpusIndex,
    policy: &FilterPolicy,
    sinks: FilterSinks<'_>,
) -> Result<FilterSummary> {
    if policy.scope != FilterScope::Monolingual {
        return Err(Error::config("filter_monolingual needs a monolingual policy"));
    }
    run_filter(input, index, policy, sinks, mono_verdict)
}

pub fn filter_bitext(
    input: &mut dyn BufRead,
    index: &CorpusIndex,
    policy: &FilterPolicy,
    sinks: FilterSinks<'_>,
) -> Result<FilterSummary> {
    if policy.scope != FilterScope::Bitext {
        return Err(Error::config("filter_bitext needs a bitext policy"));
    }
    run_filter(input, index, policy, sinks, bitext_verdict)
}

fn run_filter(
    input: &mut dyn BufRead,
    index: &CorpusIndex,
    policy: &FilterPolicy,
    mut sinks: FilterSinks<'_>,
    verdict: fn(&str, &CorpusIndex) -> Verdict,
) -> Result<FilterSummary> {
    let mut summary = FilterSummary::new(*policy);
    let mut lines: Vec<Vec<u8>> = Vec::with_capacity(BATCH);
    let mut buf = Vec::new();
    let mut eof = false;
    let werr = |e| Error::io("writing filter output", e);
    while !eof {
        lines.clear();
        while lines.len() < BATCH {
            if !read_line_bytes(input, &mut buf).map_err(|e| Error::io("reading filter input", e))? {
                eof = true;
                break;
            }
            lines.push(std::mem::take(&mut buf));
        }
        let verdicts: Vec<Verdict> = lines
            .par_iter()
            .map(|raw| match std::str::from_utf8(raw) {
                Ok(line) => verdict(line, index),
                Err(_) => Verdict::Rejected("invalid utf-8".into()),
            })
            .collect();
        for (raw, v) in lines.iter().zip(verdicts) {
            summary.input_lines += 1;
            match v {
                Verdict::Rejected(reason) => {
                    summary.rejected += 1;
                    if let Some(w) = sinks.rejects.as_deref_mut() {
                        write!(w, "{}\t{}\t", summary.input_lines, reason).map_err(werr)?;
                        w.write_all(raw).map_err(werr)?;
                        w.write_all(b"\n").map_err(werr)?;
                    }
                }
                Verdict::Scored { key, parallelism } => {
                    let keep = policy.max_parallelism.admits(parallelism);
                    *summary.parallelism.entry(parallelism).or_default() += 1;
                    let lang = summary.per_language.entry(key).or_default();
                    if keep {
                        summary.kept += 1;
                        lang.kept += 1;
                    } else {
                        summary.dropped += 1;
                        lang.dropped += 1;
                    }
                    match policy.mode {
                        FilterMode::Annotate => {
                            sinks.kept.write_all(raw).map_err(werr)?;
                            writeln!(sinks.kept, "\t{parallelism}").map_err(werr)?;
                        }
                        FilterMode::Drop => {
                            let out = if keep {
                                Some(&mut *sinks.kept)
                            } else {
                                sinks.dropped.as_deref_mut()
                            };
                            if let Some(w) = out {
                                w.write_all(raw).map_err(werr)?;
                                w.write_all(b"\n").map_err(werr)?;
                            }
                        }
                    }
                }
            }
        }
    }
    sinks.kept.flush().map_err(werr)?;
    Ok(summary)
}
