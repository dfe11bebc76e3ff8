//! Out-of-core construction of deduplicated multi-way parallel corpora from
//! scored bitext, plus the parallelism statistics and filters built on top.
//!
//! The pipeline is `ingest` (parse, hash, binned ordering) followed by
//! `builder` (greedy tuple growth, near-duplicate removal, reconstruction).
//! `analyze` and `filter` read the resulting corpus directory; `gen` writes
//! synthetic inputs with known ground truth.

pub mod analyze;
pub mod builder;
pub mod cli;
pub mod error;
pub mod filter;
pub mod gen;
pub mod ingest;
pub mod io;

pub use error::{Error, Result};
