use std::fmt::Write as _;

use serde::Serialize;

use super::{pct, BucketSet, Corpus};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramRow {
    pub bucket: String,
    pub tuple_count: u64,
    pub tuple_pct: f64,
    pub sentence_count: u64,
    pub sentence_pct: f64,
}

/// Tuples and sentences per parallelism bucket.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub rows: Vec<HistogramRow>,
    pub total_tuples: u64,
    pub total_sentences: u64,
}

impl Histogram {
    /// From per-bucket `(tuple_count, sentence_count)`, in bucket order.
    pub fn from_counts(buckets: &BucketSet, counts: &[(u64, u64)]) -> Self {
        assert_eq!(buckets.len(), counts.len(), "one count pair per bucket");
        let total_tuples = counts.iter().map(|c| c.0).sum();
        let total_sentences = counts.iter().map(|c| c.1).sum();
        let rows = buckets
            .iter()
            .zip(counts)
            .map(|(b, &(t, s))| HistogramRow {
                bucket: b.label.clone(),
                tuple_count: t,
                tuple_pct: pct(t, total_tuples),
                sentence_count: s,
                sentence_pct: pct(s, total_sentences),
            })
            .collect();
        Histogram {
            rows,
            total_tuples,
            total_sentences,
        }
    }

    /// Share of tuples with three or more languages.
    pub fn multiway_tuple_pct(&self) -> f64 {
        100.0 - self.rows.iter().find(|r| r.bucket == "2").map_or(0.0, |r| r.tuple_pct)
    }

    /// Shaped like the published table: one row per bucket plus a total,
    /// percentages to one decimal.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("bucket\ttuples\ttuple_pct\tsentences\tsentence_pct\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{}\t{:.1}\t{}\t{:.1}",
                r.bucket, r.tuple_count, r.tuple_pct, r.sentence_count, r.sentence_pct
            );
        }
        let full = |n: u64| if n == 0 { 0.0 } else { 100.0 };
        let _ = writeln!(
            out,
            "total\t{}\t{:.1}\t{}\t{:.1}",
            self.total_tuples,
            full(self.total_tuples),
            self.total_sentences,
            full(self.total_sentences)
        );
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

pub fn parallelism_histogram(corpus: &Corpus, buckets: &BucketSet) -> Result<Histogram> {
    let counts = corpus.par_fold(
        || vec![(0u64, 0u64); buckets.len()],
        |acc, t| {
            let size = t.size() as u32;
            if let Some(b) = buckets.index_of(size) {
                acc[b].0 += 1;
                acc[b].1 += size as u64;
            }
            Ok(())
        },
        |acc, part| {
            for (a, p) in acc.iter_mut().zip(part) {
                a.0 += p.0;
                a.1 += p.1;
            }
        },
    )?;
    Ok(Histogram::from_counts(buckets, &counts))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_table_arithmetic() {
        let counts = [(1368, 2736), (573, 1895), (177, 1004), (70, 745)];
        let h = Histogram::from_counts(&BucketSet::default(), &counts);
        let tuple: Vec<String> = h.rows.iter().map(|r| format!("{:.1}", r.tuple_pct)).collect();
        let sent: Vec<String> = h.rows.iter().map(|r| format!("{:.1}", r.sentence_pct)).collect();
        assert_eq!(tuple, ["62.5", "26.2", "8.1", "3.2"]);
        assert_eq!(sent, ["42.9", "29.7", "15.7", "11.7"]);
        assert_eq!(format!("{:.1}", h.multiway_tuple_pct()), "37.5");
    }

    #[test]
    fn single_triple() {
        let h = Histogram::from_counts(&BucketSet::default(), &[(0, 0), (1, 3), (0, 0), (0, 0)]);
        assert_eq!(h.rows[1].tuple_pct, 100.0);
        assert_eq!(h.rows[1].sentence_pct, 100.0);
        assert_eq!(
            h.to_tsv(),
            "bucket\ttuples\ttuple_pct\tsentences\tsentence_pct\n\
             2\t0\t0.0\t0\t0.0\n3-4\t1\t100.0\t3\t100.0\n5-7\t0\t0.0\t0\t0.0\n8+\t0\t0.0\t0\t0.0\n\
             total\t1\t100.0\t3\t100.0\n"
        );
    }

    #[test]
    fn empty_corpus_has_zero_percentages() {
        let h = Histogram::from_counts(&BucketSet::default(), &[(0, 0); 4]);
        assert!(h.rows.iter().all(|r| r.tuple_pct == 0.0 && r.sentence_pct == 0.0));
    }
}
