//! The `mwpar` command line.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::analyze::{
    fraction_with_translation, parallelism_histogram, per_language_stats, read_totals,
    stratify_metric, Aggregate, BucketSet, CountMode, Corpus, CorpusIndex, Keying, LengthStrata,
    Metric, SampleSpec, ScoreKind, ScoreTable, StratifyOptions,
};
use crate::builder::{build_corpus, BuildConfig, ExecOptions};
use crate::error::{Error, IoContext, Result};
use crate::filter::{
    filter_bitext, filter_monolingual, FilterMode, FilterPolicy, FilterScope, FilterSinks,
    Threshold,
};
use crate::gen::{write_planted, write_random, PlantedSpec, RandomSpec};
use crate::ingest::{BinLayout, HashWidth};
use crate::io::{create_output, open_input};

#[derive(Debug, Parser)]
#[command(name = "mwpar", version, about = "Build and analyze multi-way parallel corpora from scored bitext")]
pub struct Cli {
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a corpus directory from scored bitext TSV files.
    Build(BuildArgs),
    /// Parallelism histogram, per-language profile, or fraction translated.
    Stats(StatsArgs),
    /// Aggregate a score table or sentence length per parallelism bucket.
    Stratify(StratifyArgs),
    /// Drop or annotate sentences/pairs by parallelism.
    Filter(FilterArgs),
    /// Write synthetic inputs.
    #[command(subcommand)]
    Gen(GenCommand),
}

#[derive(Debug, Args)]
struct BuildArgs {
    /// Input TSV (plain, .gz or .zst); repeatable.
    #[arg(long = "in", value_name = "FILE")]
    inputs: Vec<PathBuf>,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Replay a manifest.json or run.json; flags given here override it.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Margin bins as lo:hi:n_bins.
    #[arg(long, value_name = "LO:HI:N")]
    bins: Option<BinLayout>,
    #[arg(long, value_name = "64|128")]
    hash_bits: Option<HashWidth>,
    /// Maximum fraction of rejected lines.
    #[arg(long)]
    reject_cap: Option<f64>,
    #[arg(long, env = "MWPAR_SHARDS")]
    shards: Option<usize>,
    /// e.g. 4GiB, 512MiB, 1000000
    #[arg(long, env = "MWPAR_MEMORY_BUDGET", value_parser = parse_size)]
    memory_budget: Option<u64>,
    #[arg(long, value_name = "DIR")]
    work_dir: Option<PathBuf>,
    /// Leave intermediate files in the work directory.
    #[arg(long)]
    keep_work: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Report {
    Histogram,
    Languages,
    Fraction,
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Tsv,
    Json,
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Tsv)]
    format: Format,
    /// Report file; standard output when omitted.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long, value_name = "DIR")]
    corpus: PathBuf,
    #[arg(long, value_enum, default_value_t = Report::Histogram)]
    report: Report,
    #[arg(long, default_value = "2,3-4,5-7,8+")]
    buckets: String,
    /// `lang<TAB>count` monolingual totals, for the fraction report.
    #[arg(long, value_name = "FILE")]
    totals: Option<PathBuf>,
    #[arg(long, default_value = "with-near-duplicates")]
    count_mode: CountMode,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MetricArg {
    Scores,
    Length,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KeyingArg {
    Sentence,
    Pair,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AggregateArg {
    Mean,
    Median,
    Distribution,
}

#[derive(Debug, Args)]
struct StratifyArgs {
    #[arg(long, value_name = "DIR")]
    corpus: PathBuf,
    #[arg(long, value_enum, default_value_t = MetricArg::Scores)]
    metric: MetricArg,
    /// Score table TSV.
    #[arg(long, value_name = "FILE", required_if_eq("metric", "scores"))]
    scores: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = KindArg::Numeric)]
    kind: KindArg,
    #[arg(long, value_enum, default_value_t = KeyingArg::Sentence)]
    keying: KeyingArg,
    /// Declared label set for categorical tables, comma separated.
    #[arg(long, value_delimiter = ',')]
    labels: Option<Vec<String>>,
    /// Language for the length metric; all members when omitted.
    #[arg(long)]
    lang: Option<String>,
    #[arg(long, value_enum)]
    aggregate: AggregateArg,
    #[arg(long, default_value = "2,3-4,5-7,8+")]
    buckets: String,
    /// Character-length edges, e.g. 0,25,50,100.
    #[arg(long, value_name = "EDGES")]
    strata: Option<String>,
    /// Aggregate a uniform sample of this many observations.
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScopeArg {
    Monolingual,
    Bitext,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Drop,
    Annotate,
}

#[derive(Debug, Args)]
struct FilterArgs {
    #[arg(long, value_name = "DIR")]
    corpus: PathBuf,
    /// `lang<TAB>text` (monolingual) or bitext TSV.
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    #[arg(long, value_enum)]
    scope: ScopeArg,
    /// Integer >= 1 or inf.
    #[arg(long)]
    max_parallelism: Threshold,
    #[arg(long, value_enum, default_value_t = ModeArg::Drop)]
    mode: ModeArg,
    /// Kept lines (drop mode) or every annotated line.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    #[arg(long, value_name = "FILE")]
    dropped: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    rejects: Option<PathBuf>,
    /// Summary JSON; standard output when omitted.
    #[arg(long, value_name = "FILE")]
    summary: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum GenCommand {
    /// Random scored pairs with sentence reuse.
    Random {
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        #[arg(long)]
        pairs: u64,
        #[arg(long, default_value_t = 26)]
        langs: usize,
        #[arg(long, default_value_t = 0.3)]
        reuse: f64,
        /// Draw sentences from a fixed per-language universe instead.
        #[arg(long)]
        universe: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Planted tuples plus monolingual data with a known translation rate.
    Planted {
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        #[arg(long, default_value_t = 20_000)]
        tuples: u64,
        #[arg(long, default_value_t = 12)]
        langs: usize,
        /// size:weight list, e.g. 2:0.6,3:0.25,8:0.15
        #[arg(long, value_parser = parse_weights)]
        size_weights: Option<BTreeMap<u32, f64>>,
        #[arg(long, default_value_t = 0.25)]
        translation_rate: f64,
        #[arg(long, default_value_t = 0.05)]
        near_dup_rate: f64,
        #[arg(long, default_value_t = 0.1)]
        cross_pair_rate: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

/// `4GiB`, `512MiB`, `2G`, `64k`, or plain bytes.
pub fn parse_size(s: &str) -> std::result::Result<u64, String> {
    let s = s.trim();
    let split = s.find(|c: char| !(c.is_ascii_digit() || c == '.')).unwrap_or(s.len());
    let (num, unit) = s.split_at(split);
    let n: f64 = num.parse().map_err(|_| format!("bad size {s:?}"))?;
    let mult: u64 = match unit.trim().to_ascii_lowercase().as_str() {
        "" | "b" => 1,
        "k" | "kb" => 1_000,
        "kib" => 1 << 10,
        "m" | "mb" => 1_000_000,
        "mib" => 1 << 20,
        "g" | "gb" => 1_000_000_000,
        "gib" => 1 << 30,
        "t" | "tb" => 1_000_000_000_000,
        "tib" => 1 << 40,
        other => return Err(format!("unknown size unit {other:?}")),
    };
    let bytes = n * mult as f64;
    if !(bytes >= 1.0 && bytes < u64::MAX as f64) {
        return Err(format!("size out of range: {s:?}"));
    }
    Ok(bytes as u64)
}

fn parse_weights(s: &str) -> std::result::Result<BTreeMap<u32, f64>, String> {
    s.split(',')
        .map(|kv| {
            let (k, v) = kv.split_once(':').ok_or_else(|| format!("expected size:weight, got {kv:?}"))?;
            let k = k.trim().parse().map_err(|_| format!("bad size {k:?}"))?;
            let v = v.trim().parse().map_err(|_| format!("bad weight {v:?}"))?;
            Ok((k, v))
        })
        .collect()
}

/// Parse `argv`, run the subcommand and return the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("mwpar: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Build(a) => build(a),
        Command::Stats(a) => stats(a),
        Command::Stratify(a) => stratify(a),
        Command::Filter(a) => filter(a),
        Command::Gen(g) => gen(g),
    }
}

#[derive(Deserialize)]
struct ReplayFile {
    config: BuildConfig,
    #[serde(default)]
    execution: Option<ExecOptions>,
}

fn build(a: BuildArgs) -> Result<()> {
    let (mut cfg, mut exec) = match &a.config {
        Some(p) => {
            let r: ReplayFile = serde_json::from_slice(&fs::read(p).at(p)?)
                .map_err(|e| Error::config(format!("{}: {e}", p.display())))?;
            (r.config, r.execution.unwrap_or_default())
        }
        None => (BuildConfig::default(), ExecOptions::default()),
    };
    if !a.inputs.is_empty() {
        cfg.inputs = a.inputs;
    }
    if let Some(b) = a.bins {
        cfg.bin_layout = b;
    }
    if let Some(h) = a.hash_bits {
        cfg.hash_width = h;
    }
    if let Some(c) = a.reject_cap {
        cfg.reject_cap = c;
    }
    if let Some(s) = a.shards {
        exec.shards = s;
    }
    if let Some(m) = a.memory_budget {
        exec.memory_budget = m;
    }
    if a.work_dir.is_some() {
        exec.work_dir = a.work_dir;
    }
    exec.keep_work |= a.keep_work;
    if exec.shards == 0 {
        return Err(Error::config("shard count must be positive"));
    }
    let m = build_corpus(&cfg, &exec, &a.out)?;
    eprintln!(
        "mwpar: {} lines, {} rejected, {} tuples, {} sentences -> {}",
        m.counts.lines_read,
        m.counts.lines_rejected,
        m.counts.tuples_out,
        m.counts.sentences_out,
        a.out.display()
    );
    Ok(())
}

fn emit(output: &OutputArgs, tsv: impl FnOnce() -> String, json: impl FnOnce() -> Result<String>) -> Result<()> {
    let text = match output.format {
        Format::Tsv => tsv(),
        Format::Json => json()?,
    };
    match &output.out {
        Some(p) => fs::write(p, text).at(p),
        None => io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("writing standard output", e)),
    }
}

fn stats(a: StatsArgs) -> Result<()> {
    let corpus = Corpus::open(&a.corpus)?;
    match a.report {
        Report::Histogram => {
            let h = parallelism_histogram(&corpus, &BucketSet::parse(&a.buckets)?)?;
            emit(&a.output, || h.to_tsv(), || h.to_json())
        }
        Report::Languages => {
            let p = per_language_stats(&corpus)?;
            emit(&a.output, || p.to_tsv(), || p.to_json())
        }
        Report::Fraction => {
            let path = a
                .totals
                .as_ref()
                .ok_or_else(|| Error::config("the fraction report needs --totals"))?;
            let f = fraction_with_translation(&corpus, &read_totals(path)?, a.count_mode)?;
            emit(&a.output, || f.to_tsv(), || f.to_json())
        }
    }
}

fn stratify(a: StratifyArgs) -> Result<()> {
    let corpus = Corpus::open(&a.corpus)?;
    let table;
    let metric = match a.metric {
        MetricArg::Scores => {
            let path = a.scores.as_ref().ok_or_else(|| Error::config("--scores is required"))?;
            let kind = match a.kind {
                KindArg::Numeric => ScoreKind::Numeric,
                KindArg::Categorical => ScoreKind::Categorical,
            };
            let keying = match a.keying {
                KeyingArg::Sentence => Keying::Sentence,
                KeyingArg::Pair => Keying::Pair,
            };
            table = ScoreTable::from_path(path, kind, keying, a.labels.clone())?;
            Metric::Scores(&table)
        }
        MetricArg::Length => Metric::Length { lang: a.lang.as_deref() },
    };
    let opts = StratifyOptions {
        buckets: BucketSet::parse(&a.buckets)?,
        aggregate: match a.aggregate {
            AggregateArg::Mean => Aggregate::Mean,
            AggregateArg::Median => Aggregate::Median,
            AggregateArg::Distribution => Aggregate::Distribution,
        },
        strata: a.strata.as_deref().map(LengthStrata::parse).transpose()?,
        sample: a.sample.map(|size| SampleSpec { size, seed: a.seed }),
    };
    let report = stratify_metric(&corpus, metric, &opts)?;
    let c = &report.coverage;
    eprintln!(
        "mwpar: {} table entries, {} matched, {} unmatched, {} unscored in corpus",
        c.table_entries, c.matched, c.unmatched, c.corpus_unscored
    );
    emit(&a.output, || report.to_tsv(), || report.to_json())
}

fn writer(path: &Path) -> Result<BufWriter<File>> {
    create_output(path)
}

fn filter(a: FilterArgs) -> Result<()> {
    let scope = match a.scope {
        ScopeArg::Monolingual => FilterScope::Monolingual,
        ScopeArg::Bitext => FilterScope::Bitext,
    };
    let mode = match a.mode {
        ModeArg::Drop => FilterMode::Drop,
        ModeArg::Annotate => FilterMode::Annotate,
    };
    let policy = FilterPolicy::new(a.max_parallelism, mode, scope)?;
    if a.dropped.is_some() && mode == FilterMode::Annotate {
        return Err(Error::config("--dropped has no effect in annotate mode"));
    }
    let index = CorpusIndex::build(&Corpus::open(&a.corpus)?)?;
    let mut input = open_input(&a.input)?;
    let mut kept = writer(&a.out)?;
    let mut dropped = a.dropped.as_deref().map(writer).transpose()?;
    let mut rejects = a.rejects.as_deref().map(writer).transpose()?;
    let sinks = FilterSinks {
        kept: &mut kept,
        dropped: dropped.as_mut().map(|w| w as &mut dyn Write),
        rejects: rejects.as_mut().map(|w| w as &mut dyn Write),
    };
    let summary = match scope {
        FilterScope::Monolingual => filter_monolingual(&mut input, &index, &policy, sinks)?,
        FilterScope::Bitext => filter_bitext(&mut input, &index, &policy, sinks)?,
    };
    for (w, p) in [(dropped.as_mut(), &a.dropped), (rejects.as_mut(), &a.rejects)] {
        if let (Some(w), Some(p)) = (w, p) {
            w.flush().at(p)?;
        }
    }
    let json = summary.to_json()?;
    match &a.summary {
        Some(p) => fs::write(p, json).at(p),
        None => io::stdout()
            .lock()
            .write_all(json.as_bytes())
            .map_err(|e| Error::io("writing standard output", e)),
    }
}

fn gen(g: GenCommand) -> Result<()> {
    match g {
        GenCommand::Random {
            out,
            pairs,
            langs,
            reuse,
            universe,
            seed,
        } => {
            let n = write_random(
                &RandomSpec {
                    pairs,
                    langs,
                    reuse,
                    universe,
                    seed,
                },
                &out,
            )?;
            eprintln!("mwpar: wrote {n} pairs to {}", out.display());
        }
        GenCommand::Planted {
            out,
            tuples,
            langs,
            size_weights,
            translation_rate,
            near_dup_rate,
            cross_pair_rate,
            seed,
        } => {
            let defaults = PlantedSpec::default();
            let spec = PlantedSpec {
                tuples,
                langs,
                size_weights: size_weights.unwrap_or(defaults.size_weights),
                translation_rate,
                near_dup_rate,
                cross_pair_rate,
                seed,
            };
            let truth = write_planted(&spec, &out)?;
            eprintln!("mwpar: wrote {} pairs to {}", truth.pairs, out.display());
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        assert_eq!(parse_size("4GiB"), Ok(4 << 30));
        assert_eq!(parse_size("512MiB"), Ok(512 << 20));
        assert_eq!(parse_size("2G"), Ok(2_000_000_000));
        assert_eq!(parse_size("1000"), Ok(1000));
        assert_eq!(parse_size("1.5KiB"), Ok(1536));
        assert!(parse_size("lots").is_err());
        assert!(parse_size("0").is_err());
    }

    #[test]
    fn usage_errors_exit_1() {
        assert_eq!(run(["mwpar", "frobnicate"]), 1);
        assert_eq!(run(["mwpar", "stats"]), 1);
        assert_eq!(run(["mwpar", "--help"]), 0);
        assert_eq!(
            run(["mwpar", "filter", "--corpus", "x", "--in", "y", "--scope", "bitext", "--max-parallelism", "0", "--out", "z"]),
            1
        );
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
