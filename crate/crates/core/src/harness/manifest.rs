//! The run manifest: what a results tree was built from and the state of
//! every (grid cell, seed) run in it.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::config::SweepConfig;
use super::io::{sha256_file, sha256_hex, write_atomic};
use crate::error::{Error, Result};
use crate::reward::{build_weight_grid, MutationSpec, RewardWeights};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Pending,
    /// Policy artifact and curve written, not yet evaluated.
    Trained,
    /// Trained and evaluated.
    Done,
    Failed,
}

/// A file inside the results tree with its content hash.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRef {
    /// Path relative to the results directory.
    pub path: String,
    pub sha256: String,
}

impl FileRef {
    pub fn create(root: &Path, rel: &str, bytes: &[u8]) -> Result<Self> {
        write_atomic(&root.join(rel), bytes)?;
        Ok(Self {
            path: rel.to_string(),
            sha256: sha256_hex(bytes),
        })
    }

    pub fn verify(&self, root: &Path) -> bool {
        sha256_file(&root.join(&self.path)).map(|h| h == self.sha256).unwrap_or(false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub config_index: usize,
    pub seed: u64,
    pub weights: RewardWeights,
    pub status: RunStatus,
    pub artifact: Option<FileRef>,
    pub curve: Option<FileRef>,
    /// Feature rows of this run's evaluations.
    pub features: Option<FileRef>,
    pub trajectories: Vec<FileRef>,
    pub train_seconds: Option<f64>,
    pub error: Option<String>,
}

impl RunEntry {
    pub fn new(config_index: usize, seed: u64, weights: RewardWeights) -> Self {
        Self {
            config_index,
            seed,
            weights,
            status: RunStatus::Pending,
            artifact: None,
            curve: None,
            features: None,
            trajectories: Vec::new(),
            train_seconds: None,
            error: None,
        }
    }

    pub fn dir_name(config_index: usize, seed: u64) -> String {
        format!("runs/c{config_index:02}-s{seed}")
    }

    /// Artifact and curve exist and match their hashes.
    pub fn trained_ok(&self, root: &Path) -> bool {
        matches!(self.status, RunStatus::Trained | RunStatus::Done)
            && self.artifact.as_ref().is_some_and(|f| f.verify(root))
            && self.curve.as_ref().is_some_and(|f| f.verify(root))
    }

    pub fn done_ok(&self, root: &Path) -> bool {
        self.status == RunStatus::Done
            && self.trained_ok(root)
            && self.features.as_ref().is_some_and(|f| f.verify(root))
            && self.trajectories.iter().all(|f| f.verify(root))
    }

    pub fn files(&self) -> impl Iterator<Item = &FileRef> {
        self.artifact
            .iter()
            .chain(self.curve.iter())
            .chain(self.features.iter())
            .chain(self.trajectories.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    /// See [`config_hash`].
    pub config_hash: String,
    pub config: SweepConfig,
    pub baseline: RewardWeights,
    pub mutation: MutationSpec,
    pub grid: Vec<RewardWeights>,
    pub seeds: Vec<u64>,
    pub created_unix: u64,
    pub updated_unix: u64,
    pub runs: Vec<RunEntry>,
}

pub fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Hash of the settings that determine results; worker count, output
/// directory and label overrides are left out.
pub fn config_hash(config: &SweepConfig) -> String {
    let canonical = SweepConfig {
        workers: 0,
        output_dir: String::new(),
        label_overrides: None,
        ..config.clone()
    };
    sha256_hex(canonical.to_toml().as_bytes())
}

impl RunManifest {
    /// Fresh manifest with a pending entry for every grid cell and seed.
    pub fn new(config: &SweepConfig) -> Result<Self> {
        let grid = build_weight_grid(&config.reward, &config.mutation)?;
        let seeds = config.seeds();
        let mut runs = Vec::with_capacity(grid.len() * seeds.len());
        for (i, w) in grid.iter().enumerate() {
            for &s in &seeds {
                runs.push(RunEntry::new(i, s, *w));
            }
        }
        let now = now_unix();
        Ok(Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config_hash(config),
            config: config.clone(),
            baseline: config.reward,
            mutation: config.mutation.clone(),
            grid,
            seeds,
            created_unix: now,
            updated_unix: now,
            runs,
        })
    }

    pub fn load(root: &Path) -> Result<Option<Self>> {
        let path = root.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        let m: RunManifest = serde_path_to_error::deserialize(de)
            .map_err(|e| Error::format(format!("manifest.{}", e.path()), e.into_inner().to_string()))?;
        Ok(Some(m))
    }

    /// Loads the manifest in `root` if it belongs to `config`, or starts a new one.
    pub fn open(root: &Path, config: &SweepConfig) -> Result<Self> {
        match Self::load(root)? {
            Some(m) if m.config_hash == config_hash(config) => Ok(m),
            Some(_) => Err(Error::config(
                "config",
                format!("{} holds results of a different configuration; choose another --out", root.display()),
            )),
            None => {
                let m = Self::new(config)?;
                m.save(root)?;
                Ok(m)
            }
        }
    }

    pub fn save(&self, root: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Runtime(format!("encoding manifest: {e}")))?;
        write_atomic(&root.join(MANIFEST_FILE), text.as_bytes())
    }

    pub fn entry_mut(&mut self, config_index: usize, seed: u64) -> &mut RunEntry {
        let pos = match self.runs.binary_search_by_key(&(config_index, seed), |r| (r.config_index, r.seed)) {
            Ok(p) => p,
            Err(p) => {
                self.runs.insert(p, RunEntry::new(config_index, seed, self.grid[config_index]));
                p
            }
        };
        &mut self.runs[pos]
    }

    pub fn entry(&self, config_index: usize, seed: u64) -> Option<&RunEntry> {
        self.runs.iter().find(|r| r.config_index == config_index && r.seed == seed)
    }

    /// Whether the stored grid is exactly what `(baseline, mutation)` produce.
    pub fn grid_reproduces(&self) -> bool {
        match build_weight_grid(&self.baseline, &self.mutation) {
            Ok(g) => serde_json::to_string(&g).ok() == serde_json::to_string(&self.grid).ok(),
            Err(_) => false,
        }
    }

    /// Every referenced file exists with the recorded hash.
    pub fn verify_files(&self, root: &Path) -> std::result::Result<(), String> {
        for r in &self.runs {
            for f in r.files() {
                if !f.verify(root) {
                    return Err(f.path.clone());
                }
            }
        }
        Ok(())
    }
}
