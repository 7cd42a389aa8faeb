//! Atomic file emission and CSV formatting.
//!
//! CSV schema: one header row; floating values printed with 17 significant
//! digits so re-reading reproduces the exact doubles.

use std::io::Write;
use std::path::{Path, PathBuf};

/// Writes via a temporary file in the same directory, then renames;
/// re-running a configuration overwrites deterministically.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp: PathBuf = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

/// Accumulates CSV rows with a fixed column count.
pub struct CsvWriter {
    columns: usize,
    buffer: String,
}

impl CsvWriter {
    pub fn new(header: &[&str]) -> Self {
        Self {
            columns: header.len(),
            buffer: format!("{}\n", header.join(",")),
        }
    }

    pub fn row(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.columns, "row has wrong column count");
        let mut first = true;
        for v in values {
            if !first {
                self.buffer.push(',');
            }
            first = false;
            self.buffer.push_str(&format!("{v:.16e}"));
        }
        self.buffer.push('\n');
    }

    pub fn finish(self, path: &Path) -> std::io::Result<()> {
        write_atomic(path, self.buffer.as_bytes())
    }

    pub fn as_str(&self) -> &str {
        &self.buffer
    }
}
