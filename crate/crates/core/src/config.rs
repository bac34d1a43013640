//! Optional TOML config file. Keys mirror the long flag names with
//! underscores; a flag given on the command line always wins.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Deserialize;

pub const SEED_ENV: &str = "FOVEASTREAM_SEED";

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub width: Option<u32>,
    pub height: Option<u32>,
    pub mb_size: Option<u32>,
    pub qo_max: Option<f64>,
    pub w_frac: Option<f64>,
    pub base_qp: Option<f64>,
    pub ref_bits: Option<f64>,
    pub halving_step: Option<f64>,
    pub weights: Option<PathBuf>,
    pub seed: Option<u64>,
    pub fps: Option<f64>,
    pub duration: Option<f64>,
    pub latency_ms: Option<f64>,
    pub jitter_ms: Option<f64>,
    pub loss: Option<f64>,
    pub filter: Option<bool>,
    pub alpha: Option<f64>,
    pub saccade_speed: Option<f64>,
    pub rate_hz: Option<f64>,
    pub bin_size: Option<f64>,
    pub bandwidth: Option<f64>,
    pub radius: Option<f64>,
    pub addr: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}
