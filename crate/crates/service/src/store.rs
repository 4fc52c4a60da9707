//! On-disk scenario store.
//!
//! ```text
//! <root>/<scenario>/scenario.toml      config, input paths relative to the scenario
//! <root>/<scenario>/inputs/...         copies of the static inputs
//! <root>/<scenario>/v<n>/              one directory per version, never modified
//!     manifest.toml  result.json  priomap.geojson  flood.geojson
//! ```
//!
//! A version directory is assembled under a temporary name and renamed into
//! place, so readers only ever see complete versions.

use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, ServiceError};
use crate::pipeline::Timings;

pub const SCENARIO_FILE: &str = "scenario.toml";
pub const MANIFEST_FILE: &str = "manifest.toml";
pub const RESULT_FILE: &str = "result.json";
pub const PRIOMAP_FILE: &str = "priomap.geojson";
pub const FLOOD_FILE: &str = "flood.geojson";

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VersionKind {
    Run,
    FloodUpdate,
    WeightUpdate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputRef {
    pub role: String,
    /// Path relative to the scenario directory.
    pub file: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub scenario_id: String,
    pub version: u32,
    pub kind: VersionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_version: Option<u32>,
    pub created_unix_ms: u64,
    pub config_sha256: String,
    pub flood_version_tag: String,
    pub inputs: Vec<InputRef>,
    pub timings: Timings,
}

#[derive(Clone, Debug)]
pub struct Store {
    root: PathBuf,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> Result<Store> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Store { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn scenario_dir(&self, id: &str) -> Result<PathBuf> {
        if !valid_id(id) {
            return Err(ServiceError::not_found(format!("scenario `{id}`")));
        }
        let dir = self.root.join(id);
        if !dir.join(SCENARIO_FILE).is_file() {
            return Err(ServiceError::not_found(format!("scenario `{id}`")));
        }
        Ok(dir)
    }

    /// Claims the next free id `s0001`, `s0002`, ... by creating its directory.
    pub fn allocate(&self) -> Result<(String, PathBuf)> {
        let mut next =
            self.scenario_ids()?.iter().filter_map(|s| s.strip_prefix('s')?.parse::<u32>().ok()).max().unwrap_or(0) + 1;
        loop {
            let id = format!("s{next:04}");
            let dir = self.root.join(&id);
            match fs::create_dir(&dir) {
                Ok(()) => return Ok((id, dir)),
                Err(e) if e.kind() == ErrorKind::AlreadyExists => next += 1,
                Err(e) => return Err(e.into()),
            }
        }
    }

    pub fn scenario_ids(&self) -> Result<Vec<String>> {
        let mut ids: Vec<String> = fs::read_dir(&self.root)?
            .filter_map(|e| e.ok())
            .filter(|e| e.path().is_dir())
            .filter_map(|e| e.file_name().into_string().ok())
            .filter(|n| valid_id(n))
            .collect();
        ids.sort();
        Ok(ids)
    }

    pub fn versions(&self, id: &str) -> Result<Vec<u32>> {
        let dir = self.scenario_dir(id)?;
        let mut out: Vec<u32> = fs::read_dir(dir)?
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().into_string().ok())
            .filter_map(|n| n.strip_prefix('v')?.parse().ok())
            .collect();
        out.sort_unstable();
        Ok(out)
    }

    pub fn latest(&self, id: &str) -> Result<u32> {
        self.versions(id)?
            .last()
            .copied()
            .ok_or_else(|| ServiceError::not_found(format!("scenario `{id}` has no versions")))
    }

    /// The requested version, or the latest when `None`.
    pub fn resolve(&self, id: &str, version: Option<u32>) -> Result<u32> {
        match version {
            None => self.latest(id),
            Some(v) if self.versions(id)?.contains(&v) => Ok(v),
            Some(v) => Err(ServiceError::not_found(format!("scenario `{id}` version {v}"))),
        }
    }

    pub fn version_dir(&self, id: &str, version: u32) -> Result<PathBuf> {
        Ok(self.scenario_dir(id)?.join(format!("v{version}")))
    }

    /// Writes a complete version directory atomically. Fails if it exists.
    pub fn write_version(&self, id: &str, version: u32, files: &[(&str, &[u8])]) -> Result<PathBuf> {
        let dir = self.scenario_dir(id)?;
        let tmp = dir.join(format!(".tmp-v{version}-{}", std::process::id()));
        if tmp.exists() {
            fs::remove_dir_all(&tmp)?;
        }
        fs::create_dir(&tmp)?;
        for (name, bytes) in files {
            fs::write(tmp.join(name), bytes)?;
        }
        let target = dir.join(format!("v{version}"));
        if target.exists() {
            fs::remove_dir_all(&tmp)?;
            return Err(ServiceError::internal(format!("version {version} of `{id}` already exists")));
        }
        fs::rename(&tmp, &target)?;
        Ok(target)
    }

    pub fn read(&self, id: &str, version: u32, file: &str) -> Result<Vec<u8>> {
        let path = self.version_dir(id, version)?.join(file);
        fs::read(&path).map_err(|e| match e.kind() {
            ErrorKind::NotFound => ServiceError::not_found(format!("{}", path.display())),
            _ => e.into(),
        })
    }

    pub fn manifest(&self, id: &str, version: u32) -> Result<Manifest> {
        let text = String::from_utf8(self.read(id, version, MANIFEST_FILE)?)
            .map_err(|e| ServiceError::internal(format!("manifest of {id} v{version}: {e}")))?;
        toml::from_str(&text).map_err(|e| ServiceError::internal(format!("manifest of {id} v{version}: {e}")))
    }
}
