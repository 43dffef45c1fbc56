//! TOML run configuration. Values here sit between command-line flags
//! (which win) and built-in defaults.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub graph: Option<PathBuf>,
    pub eps: Option<f64>,
    pub delta: Option<u64>,
    pub rho: Option<f64>,
    pub alpha: Option<f64>,
    pub alphas: Option<Vec<f64>>,
    pub t_file: Option<PathBuf>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub packing_cap: Option<usize>,
    pub domset_cap: Option<usize>,
    pub datasets: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
    }
}

pub const DEFAULT_EPS: f64 = 1.0;
pub const DEFAULT_DELTA: u64 = 1;
pub const DEFAULT_RHO: f64 = 0.5;
pub const DEFAULT_TRIALS: usize = 10_000;
pub const DEFAULT_JOBS: usize = 1;
pub const DEFAULT_ALPHAS: [f64; 6] = [0.0, 0.1, 0.25, 0.5, 0.75, 1.0];

/// First present value: flag, then config file.
pub fn pick<T: Clone>(flag: Option<T>, file: &Option<T>) -> Option<T> {
    flag.or_else(|| file.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects_unknown_keys() {
        let cfg: FileConfig = toml::from_str("eps = 0.5\nseed = 7\nalphas = [0.0, 1.0]").unwrap();
        assert_eq!(cfg.eps, Some(0.5));
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(pick(Some(2.0), &cfg.eps), Some(2.0));
        assert_eq!(pick(None, &cfg.eps), Some(0.5));
        assert!(toml::from_str::<FileConfig>("epsilon = 1").is_err());
    }
}
