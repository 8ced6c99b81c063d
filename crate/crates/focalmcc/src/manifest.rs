//! Dataset manifests: where a CSV comes from and what it must hash to.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::Census;
use crate::error::{IoError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    /// Source URL of the CSV.
    pub url: String,
    /// Path of the CSV relative to the manifest file.
    #[serde(default)]
    pub file: Option<PathBuf>,
    /// Lowercase hex SHA-256 of the file bytes, when known.
    #[serde(default)]
    pub sha256: Option<String>,
    /// Data rows, excluding the header.
    pub rows: usize,
    #[serde(default)]
    pub positives: Option<usize>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::read_text(path)?;
        toml::from_str(&text).map_err(|e| IoError::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serialises")
    }

    /// Resolves `file` against the directory holding the manifest.
    pub fn data_path(&self, manifest_path: &Path) -> Option<PathBuf> {
        let f = self.file.as_ref()?;
        Some(match manifest_path.parent() {
            Some(dir) if f.is_relative() => dir.join(f),
            _ => f.clone(),
        })
    }

    /// Checks the hash of `data` and the census against the manifest.
    pub fn verify(&self, data: &Path, census: &Census) -> Result<()> {
        if let Some(expected) = &self.sha256 {
            let found = sha256_file(data)?;
            if !found.eq_ignore_ascii_case(expected) {
                return Err(IoError::Checksum {
                    path: data.to_path_buf(),
                    expected: expected.clone(),
                    found,
                });
            }
        }
        let rows = census.records + census.rejected;
        if rows != self.rows {
            return Err(IoError::Format {
                path: data.to_path_buf(),
                message: format!("manifest lists {} rows, file has {rows}", self.rows),
            });
        }
        if let Some(p) = self.positives {
            if p != census.positives {
                return Err(IoError::Format {
                    path: data.to_path_buf(),
                    message: format!(
                        "manifest lists {p} positives, file has {}",
                        census.positives
                    ),
                });
            }
        }
        Ok(())
    }
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|source| IoError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(sha256_bytes(&bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input_digest() {
        assert_eq!(
            sha256_bytes(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn round_trips_through_toml() {
        let m = Manifest {
            url: "https://example.org/x.csv".into(),
            file: Some("x.csv".into()),
            sha256: None,
            rows: 3,
            positives: Some(1),
        };
        let back: Manifest = toml::from_str(&m.to_toml()).unwrap();
        assert_eq!(back, m);
        assert_eq!(
            m.data_path(Path::new("data/x.toml")).unwrap(),
            PathBuf::from("data/x.csv")
        );
    }
}
