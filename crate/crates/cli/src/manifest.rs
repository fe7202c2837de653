use std::path::{Path, PathBuf};

use ctaudit::datamodel::atomic_write;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::{CliResult, Failure};

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a C,
    inputs: &'a [FileDigest],
    outputs: &'a [FileDigest],
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn digest_file(path: &Path) -> CliResult<FileDigest> {
    let bytes = std::fs::read(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    })
}

/// Collects the files a run reads and writes, then records them in a
/// manifest. Outputs are written atomically.
pub struct Run {
    command: &'static str,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

impl Run {
    pub fn new(command: &'static str) -> Run {
        Run { command, inputs: Vec::new(), outputs: Vec::new() }
    }

    pub fn input(&mut self, path: &Path) -> CliResult<()> {
        self.inputs.push(digest_file(path)?);
        Ok(())
    }

    pub fn write(&mut self, path: impl Into<PathBuf>, bytes: &[u8]) -> CliResult<()> {
        let path = path.into();
        atomic_write(&path, bytes)?;
        self.outputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, path: impl Into<PathBuf>, value: &T) -> CliResult<()> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Failure::Data(e.to_string()))?;
        bytes.push(b'\n');
        self.write(path, &bytes)
    }

    pub fn finish<C: Serialize>(self, path: impl AsRef<Path>, config: &C) -> CliResult<()> {
        let m = Manifest {
            tool: "ctaudit",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            config,
            inputs: &self.inputs,
            outputs: &self.outputs,
        };
        let mut bytes = serde_json::to_vec_pretty(&m).map_err(|e| Failure::Data(e.to_string()))?;
        bytes.push(b'\n');
        atomic_write(path, &bytes)?;
        Ok(())
    }
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Data(format!("{}: {e}", dir.display())))
}
