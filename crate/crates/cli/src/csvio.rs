//! CSV emission. Every file starts with a config-hash comment line and a
//! header row; runs with identical config and seed produce byte-identical
//! files.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};

pub fn write_csv(
    path: &Path,
    config_hash: u64,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<()> {
    let mut text = String::new();
    writeln!(text, "# config_hash={config_hash:016x}").unwrap();
    writeln!(text, "{}", header.join(",")).unwrap();
    for row in rows {
        writeln!(text, "{}", row.join(",")).unwrap();
    }
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Full-precision decimal formatting; parses back to the identical f64.
pub fn fmt(v: f64) -> String {
    format!("{v}")
}
