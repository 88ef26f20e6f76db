//! CSV tables with a config-hash comment row, written atomically.

use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

/// Hash of the configuration bytes and the effective seed; the worker count is
/// deliberately excluded so it cannot change any output byte.
pub fn config_hash(config_bytes: &[u8], seed: u64) -> String {
    let mut h = Sha256::new();
    h.update(config_bytes);
    h.update(seed.to_le_bytes());
    hex::encode(h.finalize())
}

/// Shortest round-trip scientific form; non-finite values become an empty field.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:e}")
    } else {
        String::new()
    }
}

/// An in-memory CSV table addressed by its path relative to the output root.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub path: PathBuf,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(path: impl Into<PathBuf>, header: &[&'static str]) -> Self {
        Self { path: path.into(), header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self, hash: &str) -> std::io::Result<Vec<u8>> {
        let mut buf = format!("# config_sha256={hash}\n").into_bytes();
        {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut buf);
            w.write_record(&self.header)?;
            for r in &self.rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
        Ok(buf)
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn write_tables(root: &Path, hash: &str, tables: &[Table]) -> std::io::Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for t in tables {
        let p = root.join(&t.path);
        write_atomic(&p, &t.to_bytes(hash)?)?;
        written.push(p);
    }
    Ok(written)
}
