//! Shared helpers: numeric formatting and atomic file writes.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Format a finite `f64` with 17 significant digits, enough to reproduce
/// the value bit-exactly when parsed back.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write a file atomically: write to a sibling temp file, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp~");
    let mut file = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    file.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    file.sync_all().map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(())
}
