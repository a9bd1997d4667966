//! JSON run configuration.

use std::path::Path;

use ergobound::drift::{Dissipativity, DriftSpec, GalerkinProjection, Growth, Nonlinearity};
use ergobound::ergodicity::{BoundOptions, UltimateBound, DEFAULT_THETA_GRID};
use ergobound::lower_bounds::{DeltaMode, DEFAULT_CONFIDENCE, DEFAULT_ETA};
use ergobound::sim::Preset;
use ergobound::{LinearModel, LogPos, Mat};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub drift: Option<DriftConfig>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub mc: McConfig,
    #[serde(default)]
    pub bounds: BoundsConfig,
    #[serde(default)]
    pub bridge: Option<BridgeConfig>,
    #[serde(default)]
    pub simulation: Option<SimulationConfig>,
    #[serde(default)]
    pub experiment: Option<ExperimentBlock>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Either a preset or explicit matrices (`a` with exactly one of `q`,
/// `q_half`), given as arrays of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default)]
    pub preset: Option<Preset>,
    #[serde(default)]
    pub a: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub q: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub q_half: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonlinearityConfig {
    Zero,
    Constant { value: Vec<f64> },
    Linear { matrix: Vec<Vec<f64>> },
    /// `G_i(x) = Σ_k coefficients[k] x_i^k`.
    Polynomial { coefficients: Vec<f64> },
    Galerkin {
        coefficients: Vec<f64>,
        #[serde(default)]
        shift: f64,
    },
}

/// Overrides on top of the preset drift; `nonlinearity` is required when
/// the model is given by matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftConfig {
    #[serde(default)]
    pub nonlinearity: Option<NonlinearityConfig>,
    #[serde(default)]
    pub growth: Option<Growth>,
    #[serde(default)]
    pub dissipativity: Option<Dissipativity>,
    #[serde(default)]
    pub superlinear: Option<Dissipativity>,
    #[serde(default)]
    pub symmetric: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub steps: usize,
    pub eps_end: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { steps: 256, eps_end: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McConfig {
    pub n_paths: usize,
    /// Samples of `μ₁` for `δ`.
    pub n_mc: usize,
    /// Samples for stationary OU moments `k(p)`.
    pub moment_budget: usize,
    pub seed: u64,
    pub confidence: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_paths: 10_000,
            n_mc: 20_000,
            moment_budget: 100_000,
            seed: 0,
            confidence: DEFAULT_CONFIDENCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsConfig {
    pub radius_x: Option<f64>,
    pub radius_y: Option<f64>,
    /// `ρ = 1 − θ/M_c` candidates.
    pub thetas: Vec<f64>,
    /// Natural log of the largest acceptable `M`.
    pub ln_m_cap: Option<f64>,
    pub delta_mode: DeltaMode,
    pub eta: f64,
    /// Replaces the ultimate bound derived from the model.
    pub ultimate: Option<UltimateBound>,
    pub gap_orders: Vec<f64>,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self {
            radius_x: None,
            radius_y: None,
            thetas: DEFAULT_THETA_GRID.to_vec(),
            ln_m_cap: None,
            delta_mode: DeltaMode::Pointwise,
            eta: DEFAULT_ETA,
            ultimate: None,
            gap_orders: vec![2.0, 4.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BridgeConfig {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub h: f64,
    pub t_max: f64,
    pub n_paths: usize,
    pub record_every: f64,
    pub x0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentBlock {
    pub h: f64,
    pub n_paths: usize,
    pub n_reference: usize,
    pub times: Vec<f64>,
    pub burn_in: f64,
    /// Start of the chain compared with the invariant law.
    pub x: Vec<f64>,
    /// Second start for the two-chain (uniform) comparison.
    #[serde(default)]
    pub x2: Option<Vec<f64>>,
    #[serde(default)]
    pub projection: Option<Vec<usize>>,
    #[serde(default)]
    pub bins: Option<usize>,
}

/// Family `G_α = G + α·perturbation` with a polynomial base drift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub alphas: Vec<f64>,
    pub alpha0: f64,
    pub perturbation: Vec<f64>,
    pub h: f64,
    pub n_reference: usize,
    pub burn_in: f64,
    #[serde(default)]
    pub bins: Option<usize>,
    #[serde(default)]
    pub projection: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: String,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: "ergobound-out".into(),
            formats: vec![Format::Json, Format::Csv],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| CliError::Config {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

fn field(path: &str, message: impl Into<String>) -> CliError {
    CliError::Config {
        path: path.into(),
        message: message.into(),
    }
}

fn matrix(rows: &[Vec<f64>], path: &str) -> Result<Mat, CliError> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(field(path, "expected a non-empty array of equal-length rows"));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(Mat::from_row_slice(n, rows[0].len(), &flat))
}

impl RunConfig {
    /// Model and drift after applying the drift overrides.
    pub fn build(&self) -> Result<(LinearModel, DriftSpec), CliError> {
        let m = &self.model;
        let (model, preset_drift) = match (&m.preset, &m.a) {
            (Some(p), None) if m.q.is_none() && m.q_half.is_none() => {
                let (model, drift) = p.build().map_err(|e| field("model.preset", e.to_string()))?;
                (model, Some(drift))
            }
            (None, Some(a)) => {
                let a = matrix(a, "model.a")?;
                let model = match (&m.q, &m.q_half) {
                    (Some(q), None) => LinearModel::from_q(a, matrix(q, "model.q")?),
                    (None, Some(b)) => LinearModel::from_q_half(a, matrix(b, "model.q_half")?),
                    _ => return Err(field("model", "give exactly one of q and q_half")),
                }
                .map_err(|e| field("model", e.to_string()))?;
                (model, None)
            }
            _ => return Err(field("model", "give either preset or a with q or q_half")),
        };
        let drift = match (&self.drift, preset_drift) {
            (None, Some(d)) => d,
            (None, None) => return Err(field("drift", "required when the model is given by matrices")),
            (Some(dc), base) => {
                let mut d = match (&dc.nonlinearity, base) {
                    (Some(n), _) => DriftSpec::new(nonlinearity(n, model.d)?),
                    (None, Some(b)) => b,
                    (None, None) => {
                        return Err(field("drift.nonlinearity", "required when the model is given by matrices"))
                    }
                };
                if let Some(g) = dc.growth {
                    d.growth = g;
                }
                if dc.dissipativity.is_some() {
                    d.dissipativity = dc.dissipativity;
                }
                if dc.superlinear.is_some() {
                    d.superlinear = dc.superlinear;
                }
                if let Some(s) = dc.symmetric {
                    d.symmetric = s;
                }
                d
            }
        };
        drift.validate(model.d).map_err(|e| field("drift", e.to_string()))?;
        Ok((model, drift))
    }

    pub fn bound_options(&self) -> BoundOptions {
        let b = &self.bounds;
        BoundOptions {
            steps: self.grid.steps,
            eps_end: self.grid.eps_end,
            n_paths: self.mc.n_paths,
            n_mc: self.mc.n_mc,
            confidence: self.mc.confidence,
            eta: b.eta,
            delta_mode: b.delta_mode,
            radius_x: b.radius_x,
            radius_y: b.radius_y,
            thetas: b.thetas.clone(),
            m_cap: b.ln_m_cap.map(LogPos::from_ln),
            gap_orders: b.gap_orders.clone(),
        }
    }
}

fn nonlinearity(n: &NonlinearityConfig, d: usize) -> Result<Nonlinearity, CliError> {
    Ok(match n {
        NonlinearityConfig::Zero => Nonlinearity::Zero,
        NonlinearityConfig::Constant { value } => Nonlinearity::Constant(value.clone()),
        NonlinearityConfig::Linear { matrix: rows } => {
            Nonlinearity::Linear(matrix(rows, "drift.nonlinearity.matrix")?)
        }
        NonlinearityConfig::Polynomial { coefficients } => Nonlinearity::Polynomial(coefficients.clone()),
        NonlinearityConfig::Galerkin { coefficients, shift } => {
            Nonlinearity::Galerkin(GalerkinProjection::new(d, coefficients.clone(), *shift))
        }
    })
}
