//! Flat JSON experiment document. Every key is optional; command-line flags
//! take precedence over the document, which takes precedence over defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub functional: Option<String>,
    #[serde(rename = "H")]
    pub hurst: Option<f64>,
    pub mu: Option<f64>,
    #[serde(rename = "T")]
    pub horizon: Option<f64>,
    pub u: Option<Vec<f64>>,
    pub variant: Option<String>,
    pub simulate_constants: Option<bool>,

    pub paths: Option<u64>,
    pub steps: Option<usize>,
    pub seed: Option<u64>,
    pub sampler: Option<String>,
    pub dump_paths: Option<PathBuf>,

    pub kind: Option<String>,
    pub nu: Option<f64>,
    pub b: Option<Vec<f64>>,
    pub eta: Option<f64>,
    pub sims: Option<u64>,
    pub cache: Option<PathBuf>,

    pub suite: Option<String>,
    pub out_dir: Option<PathBuf>,
    pub lemma_hurst: Option<Vec<f64>>,
    pub lemma_mu: Option<f64>,
    #[serde(rename = "lemma_T")]
    pub lemma_horizon: Option<f64>,
    pub u_ladder: Option<Vec<f64>>,
    pub delta_ladder: Option<Vec<f64>>,
    pub convergence_hurst: Option<Vec<f64>>,
    pub convergence_mu: Option<f64>,
    #[serde(rename = "convergence_T")]
    pub convergence_horizon: Option<f64>,
    pub convergence_u: Option<Vec<f64>>,
    pub functionals: Option<Vec<String>>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }
}

/// First of flag, config value.
pub fn pick<T: Clone>(flag: Option<T>, config: &Option<T>) -> Option<T> {
    flag.or_else(|| config.clone())
}

/// Repeatable flag if given at least once, else the config list.
pub fn pick_list<T: Clone>(flag: Vec<T>, config: &Option<Vec<T>>) -> Option<Vec<T>> {
    if flag.is_empty() {
        config.clone()
    } else {
        Some(flag)
    }
}
