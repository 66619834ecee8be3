//! Batch manifest: a JSON list of attention/hidden-state file pairs with
//! optional tolerance overrides.
//!
//! ```json
//! {
//!   "entries": [
//!     {"id": "sample-1", "a_path": "a1.csv", "t_path": "t1.csv"}
//!   ],
//!   "tolerance": {"rank_rel": 1e-10, "check_abs": 1e-9}
//! }
//! ```
//!
//! Relative paths resolve against the manifest's directory.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub a_path: PathBuf,
    pub t_path: PathBuf,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct ToleranceOverride {
    pub rank_rel: Option<f64>,
    pub check_abs: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct SampleManifest {
    pub entries: Vec<ManifestEntry>,
    #[serde(default)]
    pub tolerance: ToleranceOverride,
}

impl SampleManifest {
    /// Parses the manifest, resolves relative paths, and checks that ids are
    /// unique and every referenced file exists.
    pub fn load(path: &Path) -> CliResult<Self> {
        let content = std::fs::read_to_string(path)
            .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
        let mut manifest: SampleManifest = serde_json::from_str(&content)
            .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
        if manifest.entries.is_empty() {
            return Err(CliError::Parse(format!(
                "{}: manifest has no entries",
                path.display()
            )));
        }
        let base = path.parent().unwrap_or(Path::new("."));
        let mut seen = HashSet::new();
        for entry in &mut manifest.entries {
            if !seen.insert(entry.id.clone()) {
                return Err(CliError::Parse(format!(
                    "{}: duplicate entry id '{}'",
                    path.display(),
                    entry.id
                )));
            }
            for p in [&mut entry.a_path, &mut entry.t_path] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
                if !p.exists() {
                    return Err(CliError::Parse(format!(
                        "{}: entry '{}' references missing file {}",
                        path.display(),
                        entry.id,
                        p.display()
                    )));
                }
            }
        }
        Ok(manifest)
    }
}
