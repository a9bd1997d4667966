//! Report envelope shared by every subcommand.

use ergobound::bridge::VNormProfile;
use ergobound::density::DensityEstimate;
use ergobound::drift::{Dissipativity, Growth};
use ergobound::ergodicity::{BoundReport, SymmetryCheck, UltimateBound};
use ergobound::linop::{HsReport, KalmanReport, MomentBound};
use ergobound::lower_bounds::{DeltaReport, MomentReport, PackagedBound};
use ergobound::sim::{ExperimentResult, SweepTable, TvEstimate};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub subcommand: String,
    pub version: String,
    pub seed: u64,
    /// One-sided confidence of every Monte-Carlo-derived constant.
    pub confidence: f64,
    pub pass: bool,
    pub checks: Vec<CheckItem>,
    pub notes: Vec<String>,
    pub body: Body,
}

impl Report {
    pub fn summary(&self) -> String {
        let mut s = format!("{}: {}", self.subcommand, if self.pass { "PASS" } else { "FAIL" });
        for c in &self.checks {
            s.push_str(&format!("\n  [{}] {}: {}", if c.pass { "ok" } else { "FAIL" }, c.name, c.detail));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckItem {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum Body {
    Check(CheckBody),
    BridgeValidate(BridgeBody),
    Density(DensityBody),
    LowerBound(LowerBoundBody),
    Bounds(BoundsBody),
    Simulate(SimulateBody),
    ErgodicityReport(ErgodicityBody),
    Sweep(SweepTable),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckBody {
    pub dimension: usize,
    pub kalman: KalmanReport,
    pub hs: Option<HsReport>,
    pub max_real_eigenvalue: f64,
    pub a_stable: bool,
    pub growth: Growth,
    pub growth_violation: Option<String>,
    pub dissipativity: Option<Dissipativity>,
    pub superlinear: Option<Dissipativity>,
    pub symmetric: bool,
    pub symmetry: Option<SymmetryCheck>,
    pub v_norm: Option<VNormProfile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub strategy: String,
    pub t: f64,
    pub moment: String,
    pub estimate: f64,
    pub oracle: f64,
    pub stderr: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeBody {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub n_paths: usize,
    pub identity_residual: f64,
    pub v_norm: VNormProfile,
    /// Two-sided threshold with a 1% family-wise error rate.
    pub z_threshold: f64,
    pub moments: Vec<MomentCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityBody {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub vs_mu1: DensityEstimate,
    pub vs_lebesgue: DensityEstimate,
    /// Exact Lebesgue density when `G` is linear.
    pub exact: Option<f64>,
    pub martingale_mean: f64,
    pub martingale_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundBody {
    pub moments: MomentReport,
    pub k: f64,
    pub m: f64,
    pub p: f64,
    pub a_b: f64,
    pub packaged: PackagedBound,
    pub delta: DeltaReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsBody {
    pub ultimate_source: Option<String>,
    pub moment_bounds: Vec<MomentBound>,
    pub report: BoundReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateBody {
    pub h: f64,
    pub n_paths: usize,
    pub x0: Vec<f64>,
    pub times: Vec<f64>,
    pub mean: Vec<Vec<f64>>,
    pub variance: Vec<Vec<f64>>,
    pub mean_norm: Vec<f64>,
    pub mean_norm_stderr: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgodicityBody {
    pub bounds: BoundsBody,
    pub reference_drift_tv: Option<TvEstimate>,
    pub reference_noise_tv: Option<TvEstimate>,
    pub v_uniform: Option<ExperimentResult>,
    pub uniform: Option<ExperimentResult>,
    pub ultimate: Option<UltimateBound>,
}
