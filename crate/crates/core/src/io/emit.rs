use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum EmitError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

/// Formats with 12 significant digits, fixed-point when the exponent is
/// moderate and scientific otherwise. Trailing zeros are dropped.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..15).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        let s = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        };
        if s == "-0" {
            "0".into()
        } else {
            s
        }
    } else {
        let m = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{m}e{exp}")
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config_sha256: String,
    pub files: Vec<ManifestEntry>,
}

/// Writes files into one directory and remembers their hashes.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, EmitError> {
        std::fs::create_dir_all(root).map_err(|source| EmitError::Io {
            path: root.to_path_buf(),
            source,
        })?;
        Ok(Self {
            root: root.to_path_buf(),
            entries: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), EmitError> {
        let path = self.root.join(name);
        std::fs::write(&path, bytes).map_err(|source| EmitError::Io { path, source })?;
        self.entries.retain(|e| e.file != name);
        self.entries.push(ManifestEntry {
            file: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    /// Writes a CSV table; numeric cells should already be formatted.
    pub fn write_csv(
        &mut self,
        name: &str,
        header: &[&str],
        rows: impl IntoIterator<Item = Vec<String>>,
    ) -> Result<(), EmitError> {
        let csv_err = |source| EmitError::Csv {
            path: self.root.join(name),
            source,
        };
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(csv_err)?;
        for row in rows {
            w.write_record(&row).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| EmitError::Io {
            path: self.root.join(name),
            source: e.into_error(),
        })?;
        self.write(name, &bytes)
    }

    /// Writes `manifest.json` listing every file written so far.
    pub fn finish(self, command: &str, config_text: &str) -> Result<Manifest, EmitError> {
        let mut files = self.entries;
        files.sort_by(|a, b| a.file.cmp(&b.file));
        let manifest = Manifest {
            command: command.to_string(),
            config_sha256: sha256_hex(config_text.as_bytes()),
            files,
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        let path = self.root.join("manifest.json");
        std::fs::write(&path, text).map_err(|source| EmitError::Io { path, source })?;
        Ok(manifest)
    }
}
