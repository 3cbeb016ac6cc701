//! Run directories, CSV tables and the completion manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::Config;

/// Written last; its presence marks a finished run.
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub config: Config,
    pub seed: u64,
    pub quick: bool,
    pub version: String,
    pub outputs: Vec<String>,
    pub duration_secs: f64,
}

pub struct RunDir {
    path: PathBuf,
    outputs: Vec<String>,
}

impl RunDir {
    /// Creates `<root>/<experiment>-seed<seed>-<timestamp>`, with a numeric
    /// suffix if that name is taken.
    pub fn create(root: &Path, experiment: &str, seed: u64) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
        let base = format!("{experiment}-seed{seed}-{stamp}");
        let mut path = root.join(&base);
        let mut k = 1;
        while path.exists() {
            path = root.join(format!("{base}-{k}"));
            k += 1;
        }
        fs::create_dir(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(Self {
            path,
            outputs: Vec::new(),
        })
    }

    /// Writes `rows` under a header row, one record per row.
    pub fn write_csv<R: Serialize>(&mut self, name: &str, header: &[&str], rows: &[R]) -> Result<()> {
        let file = self.path.join(name);
        let mut writer = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(&file)
            .with_context(|| format!("creating {}", file.display()))?;
        writer.write_record(header)?;
        for row in rows {
            writer.serialize(row)?;
        }
        writer.flush()?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let file = self.path.join(name);
        fs::write(&file, text).with_context(|| format!("writing {}", file.display()))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let file = self.path.join(name);
        fs::write(&file, serde_json::to_string_pretty(value)? + "\n")
            .with_context(|| format!("writing {}", file.display()))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    /// Writes the manifest through a temporary file and a rename.
    pub fn finish(
        self,
        experiment: &str,
        config: &Config,
        quick: bool,
        elapsed: Duration,
    ) -> Result<PathBuf> {
        let manifest = RunManifest {
            experiment: experiment.to_string(),
            config: config.clone(),
            seed: config.seed,
            quick,
            version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: self.outputs,
            duration_secs: elapsed.as_secs_f64(),
        };
        let tmp = self.path.join(format!("{MANIFEST}.tmp"));
        fs::write(&tmp, serde_json::to_string_pretty(&manifest)? + "\n")
            .with_context(|| format!("writing {}", tmp.display()))?;
        fs::rename(&tmp, self.path.join(MANIFEST))?;
        Ok(self.path)
    }
}
