//! Run directories: every emitted file is recorded in a hashed manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Files of one run, sorted by path. Carries no timestamps, so identical
/// inputs give an identical manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn read(root: &Path) -> Result<Self> {
        let path = root.join(MANIFEST);
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Pretty JSON with a trailing newline, the on-disk form of every report.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

pub struct ArtifactWriter {
    root: PathBuf,
    files: BTreeMap<String, ManifestEntry>,
}

impl ArtifactWriter {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self { root: root.to_path_buf(), files: BTreeMap::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Writes `contents` to `rel` (a `/`-separated path under the root).
    pub fn write(&mut self, rel: &str, contents: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        let entry = ManifestEntry { path: rel.to_string(), sha256: sha256_hex(contents), bytes: contents.len() as u64 };
        self.files.insert(rel.to_string(), entry);
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        self.write(rel, to_json(value)?.as_bytes())
    }

    pub fn finish(self) -> Result<Manifest> {
        let manifest = Manifest { files: self.files.into_values().collect() };
        let path = self.root.join(MANIFEST);
        std::fs::write(&path, to_json(&manifest)?).with_context(|| format!("writing {}", path.display()))?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_is_sorted_and_hashed() {
        let dir = std::env::temp_dir().join(format!("rigidity-lab-artifacts-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        let mut w = ArtifactWriter::create(&dir).unwrap();
        w.write("z.txt", b"z").unwrap();
        w.write("sub/a.txt", b"").unwrap();
        let m = w.finish().unwrap();
        assert_eq!(m.files.iter().map(|e| e.path.as_str()).collect::<Vec<_>>(), ["sub/a.txt", "z.txt"]);
        assert_eq!(m.files[0].sha256, "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
        assert_eq!(Manifest::read(&dir).unwrap(), m);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
