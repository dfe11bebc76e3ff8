//! Greedy score-descending tuple construction, near-duplicate removal and
//! reconstruction of finalized translation tuples.

mod coalesce;
mod corpus;
mod invert;
mod store;
mod table;
mod tuple;

pub use coalesce::{coalesce, CoalesceCounts};
pub use corpus::{
    build_corpus, BuildConfig, ExecOptions, HashInfo, InputRecord, LanguageCounts, Manifest,
    StageCounts, MANIFEST_FORMAT,
};
pub use invert::{invert_and_dedup, Inverted, Survivor};
pub use store::{HashSentenceStore, ShardIndex, StoreWriter};
pub use table::{merge_pass, Assignment, LangMap, MergeAction, MergeCounts, TupleTable};
pub use tuple::{Member, TranslationTuple};
