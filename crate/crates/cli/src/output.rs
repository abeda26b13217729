//! Output directories and their run manifests.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to rerun a command. Paths are recorded as given on the
/// command line; `argv` omits `--out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub argv: Vec<String>,
    pub params: serde_json::Value,
    pub inputs: Vec<InputRecord>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

/// Drops `--out DIR` / `--out=DIR` from an argument list.
pub fn strip_out(argv: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(argv.len());
    let mut skip = false;
    for a in argv {
        if skip {
            skip = false;
        } else if a == "--out" {
            skip = true;
        } else if !a.starts_with("--out=") {
            out.push(a.clone());
        }
    }
    out
}

/// An output directory that remembers what was read and written.
pub struct OutDir {
    root: PathBuf,
    command: String,
    argv: Vec<String>,
    inputs: Vec<InputRecord>,
    outputs: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path, command: &str, argv: &[String]) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::Data(format!("{}: {e}", root.display())))?;
        Ok(OutDir {
            root: root.to_path_buf(),
            command: command.to_string(),
            argv: strip_out(argv),
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn record_input(&mut self, path: &Path) -> Result<(), CliError> {
        let record = InputRecord {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        };
        if !self.inputs.contains(&record) {
            self.inputs.push(record);
        }
        Ok(())
    }

    /// Path for a file the caller writes itself; the name is recorded.
    pub fn path(&mut self, name: &str) -> PathBuf {
        if !self.outputs.iter().any(|o| o == name) {
            self.outputs.push(name.to_string());
        }
        self.root.join(name)
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
        let p = self.path(name);
        fs::write(&p, contents).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value).expect("output values serialize");
        self.write(name, text + "\n")
    }

    pub fn finish(mut self, params: &impl Serialize) -> Result<Manifest, CliError> {
        self.outputs.sort();
        let manifest = Manifest {
            tool: "stvs".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: self.command.clone(),
            argv: self.argv.clone(),
            params: serde_json::to_value(params).expect("parameters serialize"),
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        let p = self.root.join(MANIFEST);
        fs::write(&p, text + "\n").map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_both_out_spellings() {
        let argv: Vec<String> = ["stats", "--out", "a", "--bins", "11", "--out=b"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(strip_out(&argv), vec!["stats", "--bins", "11"]);
    }
}
