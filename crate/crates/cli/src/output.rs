use std::io::{self, Write};
use std::path::Path;

use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;

use crate::commands::Report;
use crate::config::RunConfig;

pub fn config_hash(cfg: &RunConfig) -> String {
    Sha256::digest(cfg.canonical().as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn render(cfg: &RunConfig, report: &Report) -> String {
    let mut text = format!("# config-hash: {}\n# command: {}\n", config_hash(cfg), cfg.command);
    for c in &report.comments {
        text += &format!("# {c}\n");
    }
    text += &report.body;
    text
}

/// Writes `contents` to a temporary file beside `path`, then renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
