//! Stage manifests and all-or-nothing stage output.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config_sha256: String,
    /// Upstream files as `<stage dir name>/<relative path>` to sha256.
    pub inputs: BTreeMap<String, String>,
    /// Files of this stage, relative to its directory.
    pub outputs: BTreeMap<String, String>,
}

/// Upstream manifest disagrees with the files on disk; exits with status 2.
#[derive(Debug)]
pub struct StaleInput(pub String);

impl std::fmt::Display for StaleInput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for StaleInput {}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut h = Sha256::new();
    io::copy(&mut f, &mut h).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(h.finalize()))
}

pub fn sha256_bytes(b: &[u8]) -> String {
    hex::encode(Sha256::digest(b))
}

/// Every regular file under `dir`, relative, `/`-separated and sorted.
/// Hidden entries and the manifest itself are skipped.
pub fn list_files(dir: &Path) -> Result<Vec<String>> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<()> {
        for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
            let entry = entry?;
            let name = entry.file_name();
            let name = name.to_string_lossy();
            if name.starts_with('.') {
                continue;
            }
            let path = entry.path();
            if entry.file_type()?.is_dir() {
                walk(root, &path, out)?;
            } else {
                let rel = path.strip_prefix(root).expect("under root");
                let rel: Vec<String> = rel
                    .components()
                    .map(|c| c.as_os_str().to_string_lossy().into_owned())
                    .collect();
                out.push(rel.join("/"));
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out)?;
    out.retain(|f| f != MANIFEST_FILE);
    out.sort();
    Ok(out)
}

fn hash_dir(dir: &Path) -> Result<BTreeMap<String, String>> {
    list_files(dir)?
        .into_iter()
        .map(|rel| Ok((rel.clone(), sha256_file(&dir.join(&rel))?)))
        .collect()
}

fn dir_name(dir: &Path) -> String {
    dir.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| ".".into())
}

/// Hashes of an upstream stage's files, checked against its manifest.
///
/// With `required` false a directory without a manifest (hand-made input
/// data) is hashed as found.
pub fn verify_stage(dir: &Path, producer: &str, required: bool) -> Result<BTreeMap<String, String>> {
    let mpath = dir.join(MANIFEST_FILE);
    if !dir.is_dir() {
        return Err(StaleInput(format!("{}: missing; run `{producer}` first", dir.display())).into());
    }
    if !mpath.is_file() {
        if required {
            return Err(StaleInput(format!("{}: missing; run `{producer}` first", mpath.display())).into());
        }
        return Ok(prefixed(dir, hash_dir(dir)?));
    }
    let text = fs::read_to_string(&mpath).with_context(|| format!("reading {}", mpath.display()))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| StaleInput(format!("{}:{}: {e}", mpath.display(), e.line())))?;
    let actual = hash_dir(dir)?;
    for (rel, want) in &manifest.outputs {
        match actual.get(rel) {
            None => {
                return Err(StaleInput(format!(
                    "{}: listed in {} but missing",
                    dir.join(rel).display(),
                    mpath.display()
                ))
                .into())
            }
            Some(got) if got != want => {
                return Err(StaleInput(format!(
                    "{}: content changed since `{}` wrote it; rerun `{producer}`",
                    dir.join(rel).display(),
                    manifest.command
                ))
                .into())
            }
            _ => {}
        }
    }
    if let Some(extra) = actual.keys().find(|k| !manifest.outputs.contains_key(*k)) {
        return Err(StaleInput(format!(
            "{}: not listed in {}",
            dir.join(extra).display(),
            mpath.display()
        ))
        .into());
    }
    Ok(prefixed(dir, manifest.outputs))
}

fn prefixed(dir: &Path, files: BTreeMap<String, String>) -> BTreeMap<String, String> {
    let name = dir_name(dir);
    files.into_iter().map(|(k, v)| (format!("{name}/{k}"), v)).collect()
}

/// A stage's output directory under construction. Nothing is visible at
/// the final path until [`Staging::commit`].
pub struct Staging {
    target: PathBuf,
    tmp: PathBuf,
}

impl Staging {
    pub fn new(target: &Path) -> Result<Self> {
        let parent = target
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        let tmp = parent.join(format!(".{}.staging-{}", dir_name(target), std::process::id()));
        if tmp.exists() {
            fs::remove_dir_all(&tmp).with_context(|| format!("clearing {}", tmp.display()))?;
        }
        fs::create_dir_all(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        Ok(Staging {
            target: target.to_path_buf(),
            tmp,
        })
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.tmp.join(rel)
    }

    /// Hashes the staged files, writes the manifest and swaps the staged
    /// directory into place.
    pub fn commit(
        self,
        command: &str,
        seed: u64,
        config_sha256: String,
        inputs: BTreeMap<String, String>,
    ) -> Result<Manifest> {
        let manifest = Manifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config_sha256,
            inputs,
            outputs: hash_dir(&self.tmp)?,
        };
        let json = serde_json::to_string_pretty(&manifest)? + "\n";
        fs::write(self.tmp.join(MANIFEST_FILE), json)?;
        if self.target.exists() {
            fs::remove_dir_all(&self.target).with_context(|| format!("replacing {}", self.target.display()))?;
        }
        fs::rename(&self.tmp, &self.target).with_context(|| format!("moving output into {}", self.target.display()))?;
        Ok(manifest)
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        if self.tmp.exists() {
            let _ = fs::remove_dir_all(&self.tmp);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stale_file_detected() {
        let root = std::env::temp_dir().join(format!("bodyresp-manifest-{}", std::process::id()));
        let _ = fs::remove_dir_all(&root);
        let target = root.join("stage");
        let st = Staging::new(&target).unwrap();
        fs::create_dir_all(st.path("a")).unwrap();
        fs::write(st.path("a/x.csv"), "1\n").unwrap();
        assert!(!target.exists());
        st.commit("test", 0, String::new(), BTreeMap::new()).unwrap();
        let got = verify_stage(&target, "test", true).unwrap();
        assert_eq!(got.keys().collect::<Vec<_>>(), ["stage/a/x.csv"]);

        fs::write(target.join("a/x.csv"), "2\n").unwrap();
        let err = verify_stage(&target, "test", true).unwrap_err();
        assert!(err.downcast_ref::<StaleInput>().is_some());
        assert!(verify_stage(&root.join("none"), "test", true).is_err());
    }
}
