//! Parallelism statistics over a built corpus.

mod buckets;
mod corpus;
mod fraction;
mod histogram;
mod languages;
mod scores;
mod stratify;

pub use buckets::{BucketSet, ParallelismBucket};
pub use corpus::{Corpus, CorpusIndex, Membership};
pub use fraction::{
    fraction_from_counts, fraction_with_translation, read_totals, CountMode, FractionRow,
    FractionTable,
};
pub use histogram::{parallelism_histogram, Histogram, HistogramRow};
pub use languages::{per_language_stats, LanguageProfile, LanguageStats};
pub use scores::{Keying, ScoreKind, ScoreTable, ScoreValue};
pub use stratify::{
    stratify_metric, stratify_tuples, Aggregate, Cell, Coverage, LengthStrata, Metric, SampleSpec,
    StratifyOptions, StratifyReport,
};

/// Percentage with a zero denominator mapped to 0.
pub(crate) fn pct(part: u64, whole: u64) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}
