//! Output files. Every text artifact starts with a `#` line carrying the
//! config digest, the seed and the crate version.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub digest: String,
    /// `None` for outputs that involve no randomness.
    pub seed: Option<u64>,
    pub version: String,
}

impl Provenance {
    pub fn new(digest: String, seed: Option<u64>) -> Self {
        Provenance { digest, seed, version: VERSION.to_string() }
    }

    pub fn header_line(&self) -> String {
        let seed = self.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        format!("# digest={} seed={} version={}", self.digest, seed, self.version)
    }

    /// Reads `digest` and `seed` back from a header line.
    pub fn parse_header(line: &str) -> Option<(String, Option<u64>)> {
        let rest = line.strip_prefix('#')?.trim();
        let mut digest = None;
        let mut seed = None;
        for field in rest.split_whitespace() {
            match field.split_once('=') {
                Some(("digest", d)) => digest = Some(d.to_string()),
                Some(("seed", s)) => seed = s.parse().ok(),
                _ => {}
            }
        }
        Some((digest?, seed))
    }
}

pub struct OutputDir {
    root: PathBuf,
    provenance: Provenance,
}

impl OutputDir {
    pub fn create(root: &Path, provenance: Provenance) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::Io(format!("{}: {e}", root.display())))?;
        Ok(OutputDir { root: root.to_path_buf(), provenance })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Opens `name`, writes the provenance line and hands the writer to `body`.
    pub fn write_text(
        &self,
        name: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> Result<(), CliError>,
    ) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let file = File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        writeln!(w, "{}", self.provenance.header_line())?;
        body(&mut w)?;
        w.flush()?;
        Ok(path)
    }

    /// JSON files carry the provenance as top-level fields instead of a
    /// comment line.
    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }
}

/// `{:.16e}` for finite values, `NaN` otherwise.
pub fn fmt_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "NaN".to_string()
    }
}
