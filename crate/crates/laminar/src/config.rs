//! JSON configuration schemas for the command-line front end. Unknown keys
//! are rejected everywhere.

use crate::graph::{
    build_bipartite_2d, build_ring_with_offsets, BilayerGraph, DegreeProfile, GraphError,
};
use crate::kinetics::HillParameters;
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub n1_l1: usize,
    pub n2_l1: usize,
    pub n1_l2: usize,
    pub n2_l2: usize,
}

impl From<ProfileConfig> for DegreeProfile {
    fn from(p: ProfileConfig) -> Self {
        DegreeProfile {
            n1_l1: p.n1_l1,
            n2_l1: p.n2_l1,
            n1_l2: p.n1_l2,
            n2_l2: p.n2_l2,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum GraphPreset {
    /// Ring layers with two same-layer and two cross-layer neighbours.
    Contact,
    /// Ring layers with two same-layer and four cross-layer neighbours.
    Diffusion,
    /// Bipartite pairing: ring layers with one straight cross edge.
    Bipartite2d,
}

/// Graph specification: `{layer1_size, layer2_size, profile?, preset?,
/// cross_offsets?}`; a preset fixes the degree profile.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    pub layer1_size: usize,
    pub layer2_size: usize,
    #[serde(default)]
    pub profile: Option<ProfileConfig>,
    #[serde(default)]
    pub preset: Option<GraphPreset>,
    #[serde(default)]
    pub cross_offsets: Option<Vec<i64>>,
}

impl GraphConfig {
    pub fn build(&self) -> Result<BilayerGraph> {
        if self.layer1_size != self.layer2_size {
            return Err(ConfigError::Invalid(format!(
                "ring construction needs equal layer sizes, got {} and {}",
                self.layer1_size, self.layer2_size
            )));
        }
        let preset_profile = self.preset.map(|p| match p {
            GraphPreset::Contact => DegreeProfile::uniform(2, 2),
            GraphPreset::Diffusion => DegreeProfile::uniform(2, 4),
            GraphPreset::Bipartite2d => DegreeProfile::uniform(2, 1),
        });
        let profile = match (preset_profile, self.profile) {
            (Some(preset), Some(explicit)) => {
                if DegreeProfile::from(explicit) != preset {
                    return Err(ConfigError::Invalid(
                        "profile conflicts with preset".to_string(),
                    ));
                }
                preset
            }
            (Some(preset), None) => preset,
            (None, Some(explicit)) => explicit.into(),
            (None, None) => {
                return Err(ConfigError::Invalid(
                    "either profile or preset is required".to_string(),
                ))
            }
        };
        if self.preset == Some(GraphPreset::Bipartite2d) && self.cross_offsets.is_none() {
            return Ok(build_bipartite_2d(self.layer1_size)?);
        }
        Ok(build_ring_with_offsets(
            self.layer1_size,
            profile,
            self.cross_offsets.as_deref(),
        )?)
    }
}

fn default_w2_pair() -> [f64; 2] {
    [1.0, 1.0]
}

fn default_seed() -> u64 {
    1
}

fn default_magnitude() -> f64 {
    0.01
}

fn default_t_max() -> f64 {
    1000.0
}

fn default_grid_n() -> usize {
    60
}

fn default_grid_min() -> f64 {
    1e-2
}

fn default_grid_max() -> f64 {
    2.0
}

fn default_component() -> usize {
    0
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightPair {
    pub w1: f64,
    pub w2: f64,
}

/// `spectrum` and `quotient`: one graph at one weight point.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleGraphConfig {
    pub graph: GraphConfig,
    pub weights: WeightPair,
}

/// `hss`: kinetics only.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct HssConfig {
    #[serde(default)]
    pub kinetics: HillParameters,
}

/// `stability`: both graphs at one weight point.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityConfig {
    #[serde(default)]
    pub kinetics: HillParameters,
    pub graphs: [GraphConfig; 2],
    pub w1: [f64; 2],
    #[serde(default = "default_w2_pair")]
    pub w2: [f64; 2],
}

/// `simulate`: one full (or quotient) run.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default)]
    pub kinetics: HillParameters,
    pub graphs: [GraphConfig; 2],
    pub w1: [f64; 2],
    #[serde(default = "default_w2_pair")]
    pub w2: [f64; 2],
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_magnitude")]
    pub magnitude: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    /// Simulate the 2-cell quotient system instead of the full tissue.
    #[serde(default)]
    pub quotient: bool,
    #[serde(default = "default_component")]
    pub component: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_grid_n")]
    pub n1: usize,
    #[serde(default = "default_grid_n")]
    pub n2: usize,
    #[serde(default = "default_grid_min")]
    pub min: f64,
    #[serde(default = "default_grid_max")]
    pub max: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n1: default_grid_n(),
            n2: default_grid_n(),
            min: default_grid_min(),
            max: default_grid_max(),
        }
    }
}

/// `sweep`: the polarity-plane region map.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFileConfig {
    #[serde(default)]
    pub kinetics: HillParameters,
    pub graphs: [GraphConfig; 2],
    #[serde(default = "default_w2_pair")]
    pub w2: [f64; 2],
    #[serde(default)]
    pub grid: GridConfig,
    /// Classify each cell by a full simulation as well.
    #[serde(default)]
    pub simulate: bool,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_magnitude")]
    pub magnitude: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
}

pub fn parse<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}
