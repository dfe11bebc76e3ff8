use std::io;
use std::path::Path;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("{rejected} of {lines} input lines rejected, above the cap of {cap}")]
    RejectCap { rejected: u64, lines: u64, cap: f64 },

    #[error("sentence store has no text for language {lang}, digest {digest:#x}")]
    UnresolvableDigest { lang: String, digest: u128 },

    #[error("row id counter overflowed")]
    RowOverflow,

    #[error("malformed json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(context: impl Into<String>, source: io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Disk, quota and allocation failures.
    pub fn is_resource_exhaustion(&self) -> bool {
        match self {
            Error::Io { source, .. } => matches!(
                source.kind(),
                io::ErrorKind::StorageFull | io::ErrorKind::QuotaExceeded | io::ErrorKind::OutOfMemory
            ),
            Error::RowOverflow => true,
            _ => false,
        }
    }

    /// Process exit code: 1 usage, 2 data, 3 resource exhaustion.
    pub fn exit_code(&self) -> i32 {
        if self.is_resource_exhaustion() {
            3
        } else if matches!(self, Error::Config(_)) {
            1
        } else {
            2
        }
    }
}

/// Attach a path or action to an `io::Result`.
pub trait IoContext<T> {
    fn ctx(self, context: impl FnOnce() -> String) -> Result<T>;
    fn at(self, path: &Path) -> Result<T>;
}

impl<T> IoContext<T> for io::Result<T> {
    fn ctx(self, context: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|e| Error::io(context(), e))
    }

    fn at(self, path: &Path) -> Result<T> {
        self.map_err(|e| Error::io(path.display().to_string(), e))
    }
}
