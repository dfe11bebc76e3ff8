//! File helpers shared by every stage: compressed-input autodetection,
//! line reading, checksums and a self-cleaning work directory.

use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest as _, Sha256};

use crate::error::{IoContext, Result};

const READ_BUF: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Compression {
    None,
    Gzip,
    Zstd,
}

impl Compression {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("gz") | Some("gzip") => Compression::Gzip,
            Some("zst") | Some("zstd") => Compression::Zstd,
            _ => Compression::None,
        }
    }
}

/// Open a text input, decompressing by extension (`.gz`, `.zst`).
pub fn open_input(path: &Path) -> Result<Box<dyn BufRead + Send>> {
    let file = File::open(path).at(path)?;
    Ok(match Compression::from_path(path) {
        Compression::None => Box::new(BufReader::with_capacity(READ_BUF, file)),
        Compression::Gzip => Box::new(BufReader::with_capacity(
            READ_BUF,
            flate2::read::MultiGzDecoder::new(file),
        )),
        Compression::Zstd => {
            let dec = zstd::stream::read::Decoder::new(file).at(path)?;
            Box::new(BufReader::with_capacity(READ_BUF, dec))
        }
    })
}

pub fn create_output(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).at(parent)?;
        }
    }
    Ok(BufWriter::with_capacity(READ_BUF, File::create(path).at(path)?))
}

/// Read one `\n`-terminated line into `buf`, stripping `\n` / `\r\n`.
/// Returns `false` at end of stream.
pub fn read_line_bytes<R: BufRead + ?Sized>(reader: &mut R, buf: &mut Vec<u8>) -> io::Result<bool> {
    buf.clear();
    if reader.read_until(b'\n', buf)? == 0 {
        return Ok(false);
    }
    if buf.last() == Some(&b'\n') {
        buf.pop();
        if buf.last() == Some(&b'\r') {
            buf.pop();
        }
    }
    Ok(true)
}

#[derive(Debug, Clone)]
pub struct FileChecksum {
    pub bytes: u64,
    pub sha256: String,
}

pub fn checksum_file(path: &Path) -> Result<FileChecksum> {
    let mut file = File::open(path).at(path)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; READ_BUF];
    let mut bytes = 0u64;
    loop {
        let n = file.read(&mut buf).at(path)?;
        if n == 0 {
            break;
        }
        bytes += n as u64;
        hasher.update(&buf[..n]);
    }
    Ok(FileChecksum {
        bytes,
        sha256: hex::encode(hasher.finalize()),
    })
}

pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut w = create_output(&tmp)?;
        w.write_all(contents).at(&tmp)?;
        w.flush().at(&tmp)?;
    }
    fs::rename(&tmp, path).at(path)
}

/// Scratch directory removed on drop unless `keep` is set. Dropping on an
/// error path is what cleans up partial runs.
#[derive(Debug)]
pub struct WorkDir {
    path: PathBuf,
    keep: bool,
}

impl WorkDir {
    pub fn create(path: PathBuf, keep: bool) -> Result<Self> {
        if path.exists() {
            fs::remove_dir_all(&path).at(&path)?;
        }
        fs::create_dir_all(&path).at(&path)?;
        Ok(WorkDir { path, keep })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn join(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }
}

impl Drop for WorkDir {
    fn drop(&mut self) {
        if !self.keep {
            let _ = fs::remove_dir_all(&self.path);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_crlf() {
        let mut r = io::Cursor::new(b"a\tb\r\nc\n\nlast".to_vec());
        let mut buf = Vec::new();
        let mut lines = Vec::new();
        while read_line_bytes(&mut r, &mut buf).unwrap() {
            lines.push(String::from_utf8(buf.clone()).unwrap());
        }
        assert_eq!(lines, vec!["a\tb", "c", "", "last"]);
    }

    #[test]
    fn gzip_and_zstd_inputs_autodetect() {
        let dir = tempfile::tempdir().unwrap();
        let payload = b"en\tes\thello\thola\t1.25\n";

        let gz = dir.path().join("x.tsv.gz");
        let mut enc = flate2::write::GzEncoder::new(File::create(&gz).unwrap(), Default::default());
        enc.write_all(payload).unwrap();
        enc.finish().unwrap();

        let zs = dir.path().join("x.tsv.zst");
        fs::write(&zs, zstd::encode_all(&payload[..], 3).unwrap()).unwrap();

        for p in [gz, zs] {
            let mut s = String::new();
            open_input(&p).unwrap().read_to_string(&mut s).unwrap();
            assert_eq!(s.as_bytes(), payload);
        }
    }

    #[test]
    fn work_dir_removed_on_drop() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("work");
        {
            let w = WorkDir::create(p.clone(), false).unwrap();
            fs::write(w.join("f"), b"x").unwrap();
        }
        assert!(!p.exists());
    }
}
