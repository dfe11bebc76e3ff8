//! Parsing, hashing and score-descending ordering of scored bitext.

mod bins;
mod hash;
mod order;
mod record;
mod run;

pub use bins::BinLayout;
pub use hash::{hash_sentence, hash_sentence_128, Digest, HashWidth, HASH_ALGORITHM, HASH_SEED};
pub use order::{bin_and_order, ingest_files, IngestOptions, IngestSummary, InputSummary};
pub use record::{parse_line, BitextRecord, RejectReason, RejectRecord};
pub use run::{LangId, LangTable, OrderedRun, RunReader, RunRecord};
