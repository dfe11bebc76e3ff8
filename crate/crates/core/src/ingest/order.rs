//! Binned, radix-style ordering of records by descending margin.
//!
//! Records are parsed and hashed in parallel over `shards` contiguous slices
//! of each input batch, then appended in slice order to an unordered run
//! while per-bin record and byte counts accumulate. A counting-sort scatter
//! then copies every record to its bin's region of the ordered run, highest
//! bin first. Both passes are stable, so the result does not depend on the
//! shard count.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::os::unix::fs::FileExt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use rustc_hash::FxHashMap;

use super::record::{parse_line, BitextRecord, RejectReason, RejectRecord};
use super::run::{encode_record, payload_margin, write_header, write_varint, RUN_HEADER_LEN};
use super::{BinLayout, HashWidth, LangTable, OrderedRun, RunReader};
use crate::error::{Error, IoContext, Result};
use crate::io::{open_input, read_line_bytes};

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub layout: BinLayout,
    pub width: HashWidth,
    pub shards: usize,
    /// Maximum tolerated fraction of rejected lines.
    pub reject_cap: f64,
    /// Bytes; sizes parse batches and scatter buffers.
    pub memory_budget: u64,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            layout: BinLayout::default(),
            width: HashWidth::Bits64,
            shards: 1,
            reject_cap: 0.05,
            memory_budget: 2 << 30,
        }
    }
}

impl IngestOptions {
    fn batch_lines(&self) -> usize {
        ((self.memory_budget / 16 / 512) as usize).clamp(1 << 10, 1 << 17)
    }

    fn bin_buffer_bytes(&self) -> usize {
        let per_bin = self.memory_budget / 8 / self.layout.n_bins.max(1) as u64;
        (per_bin as usize).clamp(4 << 10, 1 << 20)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InputSummary {
    pub path: PathBuf,
    pub lines: u64,
    pub records: u64,
    pub rejected: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestSummary {
    pub lines: u64,
    pub records: u64,
    pub rejected: u64,
    pub inputs: Vec<InputSummary>,
    /// Records per (src_lang, tgt_lang).
    pub pair_counts: BTreeMap<(String, String), u64>,
}

struct Hashed {
    rec: BitextRecord,
    src: u128,
    tgt: u128,
}

fn hash_record(rec: BitextRecord, width: HashWidth) -> Hashed {
    Hashed {
        src: width.digest(&rec.src_text),
        tgt: width.digest(&rec.tgt_text),
        rec,
    }
}

/// Unordered run plus the per-bin tallies needed to scatter it.
struct RunBuilder {
    writer: BufWriter<File>,
    path: PathBuf,
    width: HashWidth,
    layout: BinLayout,
    langs: LangTable,
    bin_records: Vec<u64>,
    bin_bytes: Vec<u64>,
    pairs: FxHashMap<(u8, u8), u64>,
    records: u64,
    buf: Vec<u8>,
    scratch: Vec<u8>,
}

impl RunBuilder {
    fn create(path: PathBuf, width: HashWidth, layout: BinLayout) -> Result<Self> {
        let mut writer = BufWriter::with_capacity(1 << 20, File::create(&path).at(&path)?);
        let mut header = Vec::new();
        write_header(&mut header, width);
        writer.write_all(&header).at(&path)?;
        Ok(RunBuilder {
            writer,
            path,
            width,
            layout,
            langs: LangTable::default(),
            bin_records: vec![0; layout.n_bins as usize],
            bin_bytes: vec![0; layout.n_bins as usize],
            pairs: FxHashMap::default(),
            records: 0,
            buf: Vec::new(),
            scratch: Vec::new(),
        })
    }

    fn push(&mut self, h: &Hashed) -> Result<()> {
        let s = self.langs.intern(&h.rec.src_lang)?;
        let t = self.langs.intern(&h.rec.tgt_lang)?;
        self.buf.clear();
        encode_record(
            &mut self.buf,
            &mut self.scratch,
            self.width,
            s,
            t,
            h.src,
            h.tgt,
            h.rec.margin,
            &h.rec.src_text,
            &h.rec.tgt_text,
        );
        self.writer.write_all(&self.buf).at(&self.path)?;
        let bin = self.layout.bin_of(h.rec.margin) as usize;
        self.bin_records[bin] += 1;
        self.bin_bytes[bin] += self.buf.len() as u64;
        *self.pairs.entry((s, t)).or_default() += 1;
        self.records += 1;
        Ok(())
    }

    fn pair_counts(&self) -> BTreeMap<(String, String), u64> {
        self.pairs
            .iter()
            .map(|(&(s, t), &n)| {
                ((self.langs.code(s).to_string(), self.langs.code(t).to_string()), n)
            })
            .collect()
    }

    /// Counting-sort scatter into `ordered`, highest bin first.
    fn into_ordered(mut self, ordered: PathBuf, buffer_bytes: usize) -> Result<OrderedRun> {
        self.writer.flush().at(&self.path)?;
        drop(self.writer);

        let n = self.layout.n_bins as usize;
        let mut cursor = vec![0u64; n];
        let mut at = RUN_HEADER_LEN;
        for b in (0..n).rev() {
            cursor[b] = at;
            at += self.bin_bytes[b];
        }
        let out = File::create(&ordered).at(&ordered)?;
        out.set_len(at).at(&ordered)?;
        let mut header = Vec::new();
        write_header(&mut header, self.width);
        out.write_all_at(&header, 0).at(&ordered)?;

        let mut buffers: Vec<Vec<u8>> = vec![Vec::new(); n];
        let flush = |buf: &mut Vec<u8>, cur: &mut u64| -> Result<()> {
            out.write_all_at(buf, *cur).at(&ordered)?;
            *cur += buf.len() as u64;
            buf.clear();
            Ok(())
        };

        let mut reader = RunReader::open(&self.path)?;
        while let Some(payload) = reader.next_payload()? {
            let bin = self.layout.bin_of(payload_margin(payload, self.width)) as usize;
            let buf = &mut buffers[bin];
            write_varint(buf, payload.len() as u64);
            buf.extend_from_slice(payload);
            if buf.len() >= buffer_bytes {
                flush(buf, &mut cursor[bin])?;
                buf.shrink_to(buffer_bytes);
            }
        }
        for (bin, buf) in buffers.iter_mut().enumerate() {
            if !buf.is_empty() {
                flush(buf, &mut cursor[bin])?;
            }
        }
        out.sync_data().at(&ordered)?;
        drop(reader);
        fs::remove_file(&self.path).at(&self.path)?;

        Ok(OrderedRun {
            path: ordered,
            langs: self.langs,
            width: self.width,
            layout: self.layout,
            records: self.records,
            bin_counts: self.bin_records,
        })
    }
}

fn slice_len(len: usize, shards: usize) -> usize {
    len.div_ceil(shards.max(1)).max(1)
}

/// Order in-memory records by descending margin bin into
/// `work_dir/ordered.run`. Records failing validation are an error here;
/// file inputs go through [`ingest_files`] and its rejects sink instead.
pub fn bin_and_order<I>(records: I, opts: &IngestOptions, work_dir: &Path) -> Result<OrderedRun>
where
    I: IntoIterator<Item = BitextRecord>,
{
    opts.layout.validate()?;
    let mut run = RunBuilder::create(work_dir.join("unordered.run"), opts.width, opts.layout)?;
    let batch = opts.batch_lines();
    let mut pending = Vec::with_capacity(batch);
    let flush = |pending: &mut Vec<BitextRecord>, run: &mut RunBuilder| -> Result<()> {
        let chunk = slice_len(pending.len(), opts.shards);
        let hashed: Vec<Vec<Result<Hashed, RejectReason>>> = pending
            .par_chunks(chunk)
            .map(|slice| {
                slice
                    .iter()
                    .map(|r| r.validate().map(|_| hash_record(r.clone(), opts.width)))
                    .collect()
            })
            .collect();
        for (i, h) in hashed.into_iter().flatten().enumerate() {
            let h = h.map_err(|reason| {
                Error::data(format!("record {}: {reason}", run.records + i as u64 + 1))
            })?;
            run.push(&h)?;
        }
        pending.clear();
        Ok(())
    };
    for rec in records {
        pending.push(rec);
        if pending.len() == batch {
            flush(&mut pending, &mut run)?;
        }
    }
    flush(&mut pending, &mut run)?;
    run.into_ordered(work_dir.join("ordered.run"), opts.bin_buffer_bytes())
}

/// Parse, hash and order every input file, writing rejected lines to
/// `rejects` as `line_no\treason\traw_line`.
pub fn ingest_files(
    inputs: &[PathBuf],
    opts: &IngestOptions,
    work_dir: &Path,
    rejects: &mut dyn Write,
) -> Result<(OrderedRun, IngestSummary)> {
    opts.layout.validate()?;
    let mut run = RunBuilder::create(work_dir.join("unordered.run"), opts.width, opts.layout)?;
    let mut summary = IngestSummary::default();
    let batch = opts.batch_lines();
    let mut line_no = 0u64;

    for path in inputs {
        let mut reader = open_input(path)?;
        let mut input = InputSummary {
            path: path.clone(),
            ..Default::default()
        };
        let mut lines: Vec<(u64, Vec<u8>)> = Vec::with_capacity(batch);
        let mut buf = Vec::new();
        loop {
            let more = read_line_bytes(&mut reader, &mut buf).at(path)?;
            if more {
                line_no += 1;
                lines.push((line_no, std::mem::take(&mut buf)));
            }
            if lines.len() == batch || (!more && !lines.is_empty()) {
                let chunk = slice_len(lines.len(), opts.shards);
                let parsed: Vec<Vec<Result<Hashed, RejectRecord>>> = lines
                    .par_chunks(chunk)
                    .map(|slice| {
                        slice
                            .iter()
                            .map(|(no, raw)| parse_raw(*no, raw, opts.width))
                            .collect()
                    })
                    .collect();
                for item in parsed.into_iter().flatten() {
                    input.lines += 1;
                    match item {
                        Ok(h) => {
                            run.push(&h)?;
                            input.records += 1;
                        }
                        Err(rej) => {
                            rej.write_tsv(rejects).ctx(|| "writing rejects".into())?;
                            input.rejected += 1;
                        }
                    }
                }
                lines.clear();
            }
            if !more {
                break;
            }
        }
        summary.lines += input.lines;
        summary.records += input.records;
        summary.rejected += input.rejected;
        summary.inputs.push(input);
    }
    rejects.flush().ctx(|| "writing rejects".into())?;

    if summary.lines > 0 && summary.rejected as f64 > opts.reject_cap * summary.lines as f64 {
        return Err(Error::RejectCap {
            rejected: summary.rejected,
            lines: summary.lines,
            cap: opts.reject_cap,
        });
    }
    summary.pair_counts = run.pair_counts();
    let ordered = run.into_ordered(work_dir.join("ordered.run"), opts.bin_buffer_bytes())?;
    Ok((ordered, summary))
}

fn parse_raw(line_no: u64, raw: &[u8], width: HashWidth) -> Result<Hashed, RejectRecord> {
    let reject = |reason| RejectRecord {
        line_no,
        reason,
        raw: String::from_utf8_lossy(raw).into_owned(),
    };
    let line = std::str::from_utf8(raw).map_err(|_| reject(RejectReason::InvalidUtf8))?;
    parse_line(line)
        .map(|rec| hash_record(rec, width))
        .map_err(reject)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::RunRecord;

    fn margins(run: &OrderedRun) -> Vec<f64> {
        run.reader().unwrap().map(|r| r.unwrap().margin).collect()
    }

    fn rec(m: f64, tag: &str) -> BitextRecord {
        BitextRecord::new("en", "es", format!("s{tag}"), format!("t{tag}"), m)
    }

    #[test]
    fn one_record_per_bin_descending() {
        let dir = tempfile::tempdir().unwrap();
        let opts = IngestOptions {
            layout: BinLayout::new(1.0, 1.5, 4).unwrap(),
            ..Default::default()
        };
        let recs = vec![rec(1.10, "a"), rec(1.40, "b"), rec(1.25, "c")];
        let run = bin_and_order(recs, &opts, dir.path()).unwrap();
        assert_eq!(margins(&run), vec![1.40, 1.25, 1.10]);
        assert_eq!(run.bin_counts, vec![1, 0, 1, 1]);
        assert!(!dir.path().join("unordered.run").exists());
    }

    #[test]
    fn stable_within_bin() {
        let dir = tempfile::tempdir().unwrap();
        let opts = IngestOptions {
            layout: BinLayout::new(1.0, 1.5, 4).unwrap(),
            ..Default::default()
        };
        let recs = vec![rec(1.01, "low"), rec(1.26, "first"), rec(1.30, "second")];
        let run = bin_and_order(recs, &opts, dir.path()).unwrap();
        let texts: Vec<String> = run.reader().unwrap().map(|r| r.unwrap().src_text).collect();
        assert_eq!(texts, vec!["sfirst", "ssecond", "slow"]);
    }

    #[test]
    fn empty_input_gives_empty_run() {
        let dir = tempfile::tempdir().unwrap();
        let run = bin_and_order(Vec::new(), &IngestOptions::default(), dir.path()).unwrap();
        assert_eq!(run.records, 0);
        assert_eq!(run.reader().unwrap().count(), 0);
    }

    #[test]
    fn invalid_record_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let bad = BitextRecord::new("en", "en", "a", "b", 1.2);
        assert!(bin_and_order(vec![bad], &IngestOptions::default(), dir.path()).is_err());
    }

    #[test]
    fn files_route_rejects_with_global_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.tsv");
        let b = dir.path().join("b.tsv");
        fs::write(&a, "en\tes\thello\thola\t1.25\nen\ten\ta\tb\t1.1\n").unwrap();
        fs::write(&b, "de\tfr\tHallo\tSalut\t1.3\nbroken line\n").unwrap();
        let opts = IngestOptions {
            reject_cap: 0.5,
            ..Default::default()
        };
        let mut rejects = Vec::new();
        let (run, s) = ingest_files(&[a, b], &opts, dir.path(), &mut rejects).unwrap();
        assert_eq!((s.lines, s.records, s.rejected), (4, 2, 2));
        assert_eq!(
            String::from_utf8(rejects).unwrap(),
            "2\tidentical source and target language\ten\ten\ta\tb\t1.1\n\
             4\texpected 5 fields, found 1\tbroken line\n"
        );
        let recs: Vec<RunRecord> = run.reader().unwrap().map(Result::unwrap).collect();
        assert_eq!(recs.len(), 2);
        assert_eq!(run.langs.codes(), &["en", "es", "de", "fr"]);
        assert_eq!(recs[0].src_text, "Hallo");
        assert_eq!(recs[0].src_digest, crate::ingest::hash_sentence("Hallo") as u128);
    }

    #[test]
    fn reject_cap_aborts() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.tsv");
        fs::write(&a, "en\tes\thello\thola\t1.25\nnope\n").unwrap();
        let mut rejects = Vec::new();
        let err = ingest_files(&[a], &IngestOptions::default(), dir.path(), &mut rejects).unwrap_err();
        assert!(matches!(err, Error::RejectCap { rejected: 1, lines: 2, .. }));
    }
}
