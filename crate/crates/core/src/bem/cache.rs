//! On-disk cache of solved resonance sets.
//!
//! One JSON record per line, keyed by a SHA-256 over the inputs that
//! determine the result. Unreadable lines are skipped with a warning so a
//! damaged cache degrades to recomputation.

use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Kind, Resonance, SolverConfig};
use crate::error::Result;

pub const CACHE_FILE: &str = "resonances.jsonl";

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Record {
    key: String,
    epsilon: f64,
    refractive_index: f64,
    kind: Kind,
    element_count: usize,
    resonances: Vec<Resonance>,
}

#[derive(Debug, Clone)]
pub struct ResonanceCache {
    path: PathBuf,
}

/// Hex digest identifying `(epsilon, n, kind, M, window, parity)`.
pub fn cache_key(epsilon: f64, config: &SolverConfig, kind: Kind) -> String {
    let w = &config.window;
    let text = format!(
        "eps={:e};n={:e};kind={};M={};re=[{:e},{:e}];im=[{:e},{:e}];parity={:?}",
        epsilon,
        config.refractive_index,
        kind,
        config.element_count,
        w.re_min,
        w.re_max,
        w.im_min,
        w.im_max,
        config.parity
    );
    hex::encode(Sha256::digest(text.as_bytes()))
}

impl ResonanceCache {
    /// Uses `dir/resonances.jsonl`, creating the directory if needed.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        fs::create_dir_all(dir.as_ref())?;
        Ok(Self { path: dir.as_ref().join(CACHE_FILE) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Most recent record for the key, if any.
    pub fn get(&self, epsilon: f64, config: &SolverConfig, kind: Kind) -> Option<Vec<Resonance>> {
        let key = cache_key(epsilon, config, kind);
        let file = fs::File::open(&self.path).ok()?;
        let mut hit = None;
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let Ok(line) = line else {
                warn!("cache {}: unreadable line {}", self.path.display(), n + 1);
                continue;
            };
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<Record>(&line) {
                Ok(rec) if rec.key == key => hit = Some(rec.resonances),
                Ok(_) => {}
                Err(e) => warn!("cache {}: ignoring corrupt line {}: {e}", self.path.display(), n + 1),
            }
        }
        hit
    }

    pub fn put(&self, epsilon: f64, config: &SolverConfig, kind: Kind, resonances: &[Resonance]) -> Result<()> {
        let rec = Record {
            key: cache_key(epsilon, config, kind),
            epsilon,
            refractive_index: config.refractive_index,
            kind,
            element_count: config.element_count,
            resonances: resonances.to_vec(),
        };
        let mut line = serde_json::to_string(&rec).map_err(|e| crate::error::CavityError::Io(e.to_string()))?;
        line.push('\n');
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path)?;
        // one write per record so concurrent appenders do not interleave lines
        f.write_all(line.as_bytes())?;
        Ok(())
    }
}
