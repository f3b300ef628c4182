//! Run configuration: a TOML file, then command-line overrides.
//!
//! ```toml
//! seed = 7
//!
//! [solver]
//! refractive_index = 2.825
//! element_count = 128
//!
//! [sweep]
//! epsilons = "default"        # or "0:0.23:0.01", or "0,0.1,0.2"
//! grid_per_axis = 200
//!
//! [paths]
//! output_dir = "out"
//! cache_dir = ".cavity-cache"
//! ```

use std::path::{Path, PathBuf};

use cavity_core::bem::SolverConfig;
use cavity_core::tracking::{default_epsilon_grid, ModeLabel, SweepConfig};
use serde::Deserialize;

use crate::CliError;

/// Environment variable that overrides the cache directory.
pub const CACHE_ENV: &str = "CAVITY_CACHE_DIR";
pub const DEFAULT_CACHE_DIR: &str = ".cavity-cache";

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub epsilons: String,
    pub grid_per_axis: usize,
    pub labels: [ModeLabel; 2],
    pub overlap_threshold: f64,
    pub window_factor: f64,
    pub min_window: f64,
    pub floor_fraction: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        let d = SweepConfig::default();
        Self {
            epsilons: "default".into(),
            grid_per_axis: d.grid_per_axis,
            labels: d.labels,
            overlap_threshold: d.overlap_threshold,
            window_factor: d.window_factor,
            min_window: d.min_window,
            floor_fraction: d.floor_fraction,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub output_dir: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub solver: SolverConfig,
    pub sweep: SweepSection,
    pub paths: Paths,
    pub seed: u64,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    /// The environment variable wins over the file.
    pub fn cache_dir(&self) -> PathBuf {
        match std::env::var_os(CACHE_ENV) {
            Some(v) if !v.is_empty() => PathBuf::from(v),
            _ => self.paths.cache_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR)),
        }
    }

    pub fn sweep_config(&self) -> Result<SweepConfig, CliError> {
        let s = &self.sweep;
        let config = SweepConfig {
            solver: self.solver.clone(),
            epsilons: parse_epsilons(&s.epsilons)?,
            grid_per_axis: s.grid_per_axis,
            labels: s.labels,
            overlap_threshold: s.overlap_threshold,
            window_factor: s.window_factor,
            min_window: s.min_window,
            floor_fraction: s.floor_fraction,
        };
        config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(config)
    }
}

/// `default`, `start:stop:step` (inclusive) or a comma-separated list.
pub fn parse_epsilons(spec: &str) -> Result<Vec<f64>, CliError> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Err(CliError::Usage("epsilon grid is empty".into()));
    }
    if spec == "default" {
        return Ok(default_epsilon_grid());
    }
    let num = |t: &str| -> Result<f64, CliError> {
        t.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("bad number {t:?} in epsilon grid")))
    };
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [start, stop, step] = parts.as_slice() else {
            return Err(CliError::Usage(format!("epsilon range must be start:stop:step, got {spec:?}")));
        };
        let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
        if !(step > 0.0) || stop < start {
            return Err(CliError::Usage(format!("epsilon range {spec:?} is empty")));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        // rounded so that 0.1 + 0.01 prints as 0.11 in file names and tables
        return Ok((0..count).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect());
    }
    spec.split(',').map(num).collect()
}

/// `min:max` with `min < max`.
pub fn parse_range(spec: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::Usage(format!("range must be min:max with min < max, got {spec:?}"));
    let (a, b) = spec.split_once(':').ok_or_else(bad)?;
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    if !(a < b) {
        return Err(bad());
    }
    Ok((a, b))
}

/// `re,im`.
pub fn parse_complex(spec: &str) -> Result<num_complex::Complex64, CliError> {
    let bad = || CliError::Usage(format!("complex value must be re,im, got {spec:?}"));
    let (a, b) = spec.split_once(',').ok_or_else(bad)?;
    Ok(num_complex::Complex64::new(a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_specs() {
        assert_eq!(parse_epsilons("0:0.05:0.01").unwrap(), vec![0.0, 0.01, 0.02, 0.03, 0.04, 0.05]);
        assert_eq!(parse_epsilons("0.1, 0.2").unwrap(), vec![0.1, 0.2]);
        assert_eq!(parse_epsilons("default").unwrap(), default_epsilon_grid());
        assert!(parse_epsilons("").is_err());
        assert!(parse_epsilons("0.2:0.1:0.01").is_err());
        assert!(parse_epsilons("a,b").is_err());
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("8:12").unwrap(), (8.0, 12.0));
        assert!(parse_range("12:8").is_err());
        assert!(parse_range("8").is_err());
        assert_eq!(parse_complex("1.5,-0.25").unwrap(), num_complex::Complex64::new(1.5, -0.25));
    }

    #[test]
    fn partial_toml() {
        let c: RunConfig = toml::from_str("seed = 3\n[solver]\nrefractive_index = 2.82\n").unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.solver.refractive_index, 2.82);
        assert_eq!(c.solver.element_count, SolverConfig::default().element_count);
        assert!(toml::from_str::<RunConfig>("bogus = 1").is_err());
    }
}
