//! Run directory and manifest handling.

use std::fs;
use std::path::{Path, PathBuf};

use doe_core::csvio::{write_path, CsvError};
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Output directory of one invocation. Every file written through it is
/// listed in `manifest.json`.
pub struct RunDir {
    root: PathBuf,
    outputs: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: Option<u64>,
    config: &'a C,
    outputs: &'a [String],
}

impl RunDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::Internal(format!("cannot create {}: {e}", root.display())))?;
        Ok(RunDir {
            root: root.to_path_buf(),
            outputs: Vec::new(),
        })
    }

    pub fn csv(
        &mut self,
        name: &str,
        write: impl FnOnce(std::io::BufWriter<fs::File>) -> Result<(), CsvError>,
    ) -> CliResult<PathBuf> {
        let path = self.root.join(name);
        write_path(&path, write).map_err(CliError::internal)?;
        self.outputs.push(name.to_string());
        Ok(path)
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> CliResult<PathBuf> {
        let path = self.root.join(name);
        let mut text = serde_json::to_string_pretty(value).map_err(CliError::internal)?;
        text.push('\n');
        fs::write(&path, text).map_err(CliError::internal)?;
        self.outputs.push(name.to_string());
        Ok(path)
    }

    /// Writes `manifest.json`. Contains no timestamps or host details, so
    /// identical runs produce identical manifests.
    pub fn finish(self, command: &str, seed: Option<u64>, config: &impl Serialize) -> CliResult<()> {
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed,
            config,
            outputs: &self.outputs,
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(CliError::internal)?;
        text.push('\n');
        fs::write(self.root.join("manifest.json"), text).map_err(CliError::internal)
    }
}
