use std::io::Write;
use std::path::Path;

use crate::error::CliError;

/// Print to stdout, or replace `path` atomically (temp file in the same
/// directory, then rename).
pub fn emit(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    let Some(path) = path else {
        let mut out = std::io::stdout().lock();
        out.write_all(text.as_bytes())?;
        return Ok(out.flush()?);
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Internal(e.to_string()))?;
    Ok(())
}
