//! TOML configuration files. Every command reads its own table and
//! command-line flags take precedence. Seeds are accepted only as flags.

use std::path::Path;

use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub stats: StatsSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub bound: BoundSection,
    #[serde(default)]
    pub size_study: SizeStudySection,
    #[serde(default)]
    pub layout: LayoutSection,
    #[serde(default)]
    pub ingest: IngestSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub sites: Option<usize>,
    pub eta: Option<f64>,
    pub c_mean: Option<f64>,
    pub z_normalized: Option<f64>,
    pub excited_site: Option<usize>,
    pub samples: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsSection {
    pub resample_size: Option<usize>,
    pub repeats: Option<usize>,
    pub bins: Option<usize>,
    pub excited_site: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub site_counts: Option<Vec<usize>>,
    pub disorder_levels: Option<Vec<f64>>,
    pub min_sites: Option<usize>,
    pub max_sites: Option<usize>,
    pub eta_step: Option<f64>,
    pub eta_max: Option<f64>,
    pub c_mean: Option<f64>,
    pub z_normalized: Option<f64>,
    pub ensemble_size: Option<usize>,
    pub repeats: Option<usize>,
    pub excited_site: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundSection {
    pub threshold: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SizeStudySection {
    pub odd_sites: Option<usize>,
    pub even_sites: Option<usize>,
    pub sizes: Option<Vec<usize>>,
    pub repeats: Option<usize>,
    pub eta: Option<f64>,
    pub c_mean: Option<f64>,
    pub z_normalized: Option<f64>,
    pub excited_site: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutSection {
    pub couplings: Option<Vec<f64>>,
    pub sites: Option<usize>,
    pub eta: Option<f64>,
    pub c_mean: Option<f64>,
    pub d_ref_um: Option<f64>,
    pub c_ref: Option<f64>,
    pub decay_length_um: Option<f64>,
    pub wavelength_nm: Option<f64>,
    pub waveguide_length_mm: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestSection {
    pub spots: Option<String>,
    pub background: Option<String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> CliResult<FileConfig> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))
    }
}
