//! JSON run configuration and its expansion into library objects.

use std::path::PathBuf;
use std::str::FromStr;

use coupled_susy::linalg::RMatrix;
use coupled_susy::models::{FigurePreset, PresetName};
use coupled_susy::susy::{CanonicalParametrization, U0Parametrization};
use coupled_susy::{ChannelSet, FactorizationSpec, Parametrization, Transform};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channels: Option<ChannelsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factorization: Option<FactorizationConfig>,
    pub parametrization: ParametrizationConfig,
    #[serde(default)]
    pub r_grid: RGrid,
    #[serde(default)]
    pub e_grid: EGrid,
    #[serde(default)]
    pub outputs: OutputsConfig,
    /// Provenance of an expanded preset; ignored by the computation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<PresetMetadata>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelsConfig {
    pub thresholds: Vec<f64>,
}

/// Exactly one of `energy` or `kappa`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorizationConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum ParametrizationConfig {
    U0 {
        matrix: Vec<Vec<f64>>,
    },
    Canonical {
        rank: usize,
        /// Channel order putting the rank block first; identity when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reorder: Option<Vec<usize>>,
        q0: Vec<Vec<f64>>,
        x0: Vec<Vec<f64>>,
    },
    Preset {
        name: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RGrid {
    pub r_max: f64,
    pub n_points: usize,
}

impl Default for RGrid {
    fn default() -> Self {
        Self {
            r_max: 8.0,
            n_points: 401,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EGrid {
    pub e_min: f64,
    pub e_max: f64,
    pub n_points: usize,
}

impl Default for EGrid {
    fn default() -> Self {
        Self {
            e_min: 0.0,
            e_max: 20.0,
            n_points: 401,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputsConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("."),
            formats: vec![Format::Csv],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetMetadata {
    pub name: String,
    pub r_range: [f64; 2],
    pub e_range: [f64; 2],
}

/// A validated configuration with everything a command needs.
pub struct Run {
    /// Fully expanded configuration; re-running it reproduces the outputs.
    pub effective: RunConfig,
    pub spec: FactorizationSpec,
    pub parametrization: Parametrization,
}

impl Run {
    pub fn transform(&self) -> Result<Transform, CliError> {
        Ok(Transform::new(self.spec.clone(), self.parametrization.clone())?)
    }

    pub fn radii(&self) -> Vec<f64> {
        let g = &self.effective.r_grid;
        linspace(0.0, g.r_max, g.n_points)
    }

    pub fn energies(&self) -> Vec<f64> {
        let g = &self.effective.e_grid;
        linspace(g.e_min, g.e_max, g.n_points)
    }
}

/// `n >= 2` points with both ends included.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 })
        .collect()
}

pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
}

/// Configuration of a named figure preset with the default grids.
pub fn preset_config(name: PresetName) -> RunConfig {
    RunConfig {
        channels: None,
        factorization: None,
        parametrization: ParametrizationConfig::Preset {
            name: name.as_str().to_string(),
        },
        r_grid: RGrid::default(),
        e_grid: EGrid::default(),
        outputs: OutputsConfig::default(),
        preset: None,
    }
}

fn invalid(field: &str, message: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{field}: {message}"))
}

fn matrix(field: &str, rows: &[Vec<f64>], n_rows: usize, n_cols: usize) -> Result<RMatrix, CliError> {
    if rows.len() != n_rows {
        return Err(invalid(field, format!("expected {n_rows} rows, got {}", rows.len())));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n_cols {
            return Err(invalid(&format!("{field}[{i}]"), format!("expected {n_cols} entries, got {}", row.len())));
        }
    }
    Ok(RMatrix::from_fn(n_rows, n_cols, |i, j| rows[i][j]))
}

fn validate_grids(config: &RunConfig) -> Result<(), CliError> {
    let r = &config.r_grid;
    if !(r.r_max > 0.0 && r.r_max.is_finite()) {
        return Err(invalid("r_grid.r_max", "must be positive and finite"));
    }
    if r.n_points < 2 {
        return Err(invalid("r_grid.n_points", "must be at least 2"));
    }
    let e = &config.e_grid;
    if !(e.e_min.is_finite() && e.e_max.is_finite() && e.e_max > e.e_min) {
        return Err(invalid("e_grid", "e_max must exceed e_min"));
    }
    if e.n_points < 2 {
        return Err(invalid("e_grid.n_points", "must be at least 2"));
    }
    if config.outputs.formats.is_empty() {
        return Err(invalid("outputs.formats", "must name at least one format"));
    }
    Ok(())
}

/// Validates `config` and expands presets into explicit parameters.
pub fn resolve(config: &RunConfig) -> Result<Run, CliError> {
    validate_grids(config)?;
    let mut effective = config.clone();
    if let Some(meta) = &config.preset {
        PresetName::from_str(&meta.name).map_err(|e| invalid("preset.name", e))?;
    }
    if let ParametrizationConfig::Preset { name } = &config.parametrization {
        if config.channels.is_some() || config.factorization.is_some() {
            return Err(invalid(
                "parametrization",
                "preset mode fixes channels and factorization; remove them",
            ));
        }
        let name = PresetName::from_str(name).map_err(|e| invalid("parametrization.name", e))?;
        let preset = FigurePreset::new(name);
        effective.channels = Some(ChannelsConfig {
            thresholds: preset.spec.channels().thresholds().to_vec(),
        });
        effective.factorization = Some(FactorizationConfig {
            energy: None,
            kappa: Some(preset.spec.kappa().to_vec()),
        });
        effective.parametrization = ParametrizationConfig::U0 {
            matrix: preset.u0.row_iter().map(|row| row.iter().copied().collect()).collect(),
        };
        effective.preset = Some(PresetMetadata {
            name: name.as_str().to_string(),
            r_range: [preset.r_range.0, preset.r_range.1],
            e_range: [preset.e_range.0, preset.e_range.1],
        });
    }
    let thresholds = effective
        .channels
        .as_ref()
        .ok_or_else(|| invalid("channels", "missing"))?
        .thresholds
        .clone();
    let channels = ChannelSet::new(thresholds).map_err(|e| invalid("channels.thresholds", e))?;
    let factorization = effective
        .factorization
        .as_ref()
        .ok_or_else(|| invalid("factorization", "missing"))?;
    let spec = match (factorization.energy, &factorization.kappa) {
        (Some(e), None) => FactorizationSpec::from_energy(channels, e).map_err(|e| invalid("factorization.energy", e))?,
        (None, Some(k)) => {
            FactorizationSpec::from_kappa(channels, k.clone()).map_err(|e| invalid("factorization.kappa", e))?
        }
        _ => return Err(invalid("factorization", "give exactly one of energy or kappa")),
    };
    let n = spec.n_channels();
    let parametrization = match &effective.parametrization {
        ParametrizationConfig::U0 { matrix: rows } => {
            let u0 = matrix("parametrization.matrix", rows, n, n)?;
            Parametrization::U0(U0Parametrization::new(u0, &spec).map_err(|e| invalid("parametrization.matrix", e))?)
        }
        ParametrizationConfig::Canonical { rank, reorder, q0, x0 } => {
            if *rank > n {
                return Err(invalid("parametrization.rank", format!("exceeds channel count {n}")));
            }
            let q0 = matrix("parametrization.q0", q0, n - rank, *rank)?;
            let x0 = matrix("parametrization.x0", x0, *rank, *rank)?;
            let reorder = reorder.clone().unwrap_or_else(|| (0..n).collect());
            Parametrization::Canonical(
                CanonicalParametrization::new(*rank, reorder, q0, x0, &spec)
                    .map_err(|e| invalid("parametrization", e))?,
            )
        }
        ParametrizationConfig::Preset { .. } => unreachable!("presets are expanded above"),
    };
    Ok(Run {
        effective,
        spec,
        parametrization,
    })
}
