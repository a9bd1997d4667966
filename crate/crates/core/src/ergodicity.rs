//! Computable ergodicity constants: ultimate bounds, the small-set
//! configuration, Meyn–Tweedie constants, V-uniform and uniform rates, and
//! spectral-gap bounds.
//!
//! `δ` is typically far below `f64` range, so every constant derived from it
//! is carried as a [`LogPos`].

use crate::bridge::TimeGrid;
use crate::drift::{Dissipativity, DriftSpec, Nonlinearity};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat, PsdEigen};
use crate::linop::{LinearModel, MomentBound};
use crate::logscale::{ln_neg_ln_one_minus, LogPos};
use crate::lower_bounds::{
    build_lower_bound, delta_small_set, packaged_bound, DeltaMode, DeltaReport,
    MomentReport, PackagedBound,
};
use crate::rng::Stream;
use serde::{Deserialize, Serialize};

/// `E_x|X_t| ≤ k₀ e^{−k₁t}|x| + ĉ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UltimateBound {
    pub k0: f64,
    pub k1: f64,
    pub c_hat: f64,
}

impl UltimateBound {
    pub fn new(k0: f64, k1: f64, c_hat: f64) -> Result<Self> {
        if !(k0 >= 1.0 && k1 > 0.0 && c_hat >= 0.0) || !(k0.is_finite() && k1.is_finite() && c_hat.is_finite()) {
            return Err(Error::Domain(format!(
                "ultimate bound needs k0 >= 1, k1 > 0, c_hat >= 0; got ({k0}, {k1}, {c_hat})"
            )));
        }
        Ok(Self { k0, k1, c_hat })
    }
}

/// `k₀ = 1`, `k₁` from the dissipativity constants and
/// `ĉ = (k₂ k(s) + k₃)/k₁ + k(1)`.
pub fn ultimate_bound_from_growth(
    diss: Option<&Dissipativity>,
    k_1: &MomentBound,
    k_s: &MomentBound,
) -> Result<UltimateBound> {
    let c = diss.ok_or(Error::MissingConstant("dissipativity constants"))?;
    if (k_s.p - c.s).abs() > 1e-12 || (k_1.p - 1.0).abs() > 1e-12 {
        return Err(Error::Domain("moment orders must be 1 and s".into()));
    }
    UltimateBound::new(1.0, c.k1, (c.k2 * k_s.value + c.k3) / c.k1 + k_1.value)
}

/// Ultimate bound of the Ornstein–Uhlenbeck process with stable generator
/// `closed_loop` and noise `Q`: with `ÃᵀP + PÃ = −I`,
/// `‖e^{Ãt}‖ ≤ √cond(P) e^{−t/(2λ_max(P))}` and `E|Z_t| ≤ √tr Q̃_∞`.
pub fn ultimate_bound_linear(closed_loop: &Mat, q: &Mat) -> Result<UltimateBound> {
    let m = LinearModel::from_q(closed_loop.clone(), q.clone())?;
    let q_inf = m.stationary_covariance()?;
    let d = closed_loop.nrows();
    let p = linalg::lyapunov(&closed_loop.transpose(), &Mat::identity(d, d))
        .ok_or_else(|| Error::InvalidModel("Lyapunov system is singular".into()))?;
    let e = PsdEigen::new(&p);
    let (hi, lo) = (e.max(), e.min());
    if !(lo > 0.0) {
        return Err(Error::InvalidModel("Lyapunov matrix is not positive definite".into()));
    }
    UltimateBound::new((hi / lo).sqrt(), 0.5 / hi, q_inf.trace().max(0.0).sqrt())
}

/// `A + Q^{1/2} L` when `G(x) = Lx`.
pub fn closed_loop(model: &LinearModel, drift: &DriftSpec) -> Option<Mat> {
    match &drift.g {
        Nonlinearity::Linear(l) => Some(&model.a + &model.q_half * l),
        Nonlinearity::Zero => Some(model.a.clone()),
        _ => None,
    }
}

/// `M̂ = k(1) + max((2(k₂k(s)+k₃)/k₁)^{1+ε}, (1/(k₁ε) + 2)^{1/ε})`.
pub fn mhat(superlinear: Option<&Dissipativity>, k_1: f64, k_s: f64) -> Result<f64> {
    let c = superlinear.ok_or(Error::MissingConstant("superlinear dissipativity (eps)"))?;
    if !(c.eps > 0.0) {
        return Err(Error::MissingConstant("superlinear dissipativity (eps)"));
    }
    let first = (2.0 * (c.k2 * k_s + c.k3) / c.k1).powf(1.0 + c.eps);
    let second = (1.0 / (c.k1 * c.eps) + 2.0).powf(1.0 / c.eps);
    Ok(k_1 + first.max(second))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallSetConfig {
    pub radius_x: f64,
    pub radius_y: f64,
    pub t0: f64,
    pub horizon: f64,
    pub b: f64,
    /// The `t₀` log argument was at least 1 and `t₀` was set to 0.
    pub t0_clamped: bool,
}

pub fn small_set_config(ub: &UltimateBound, radius_x: f64, radius_y: f64) -> Result<SmallSetConfig> {
    let UltimateBound { k0, k1, c_hat } = *ub;
    if !(radius_x > 4.0 * c_hat) || !(radius_y > 4.0 * (c_hat + 0.5)) || !radius_y.is_finite() {
        return Err(Error::Domain(format!(
            "need R > 4ĉ = {} and finite r > 4(ĉ + 1/2) = {}; got R = {radius_x}, r = {radius_y}",
            4.0 * c_hat,
            4.0 * (c_hat + 0.5)
        )));
    }
    let arg = radius_x / (2.0 * radius_y * k0) - c_hat / (radius_y * k0);
    if !(arg > 0.0) {
        return Err(Error::Domain(format!(
            "t0 is undefined: need 2ĉ < R; feasible R lies in ({}, ∞)",
            (4.0 * c_hat).max(2.0 * c_hat)
        )));
    }
    let (t0, t0_clamped) = if arg >= 1.0 { (0.0, true) } else { (-arg.ln() / k1, false) };
    let horizon = (t0 + 1.0).max((4.0 * k0).ln() / k1);
    Ok(SmallSetConfig {
        radius_x,
        radius_y,
        t0,
        horizon,
        b: c_hat + 0.5,
        t0_clamped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MtConstants {
    pub delta: LogPos,
    pub b: f64,
    pub v: f64,
    pub gamma_c: LogPos,
    /// `1 − λ̂`; `λ̂` itself rounds to 1 for small `δ`.
    pub one_minus_lambda_hat: LogPos,
    pub b_hat: LogPos,
    pub xi_bar: LogPos,
    pub m_c: LogPos,
}

impl MtConstants {
    pub fn lambda_hat(&self) -> f64 {
        1.0 - self.one_minus_lambda_hat.value()
    }
}

pub fn mt_constants(delta: LogPos, b: f64, v: f64) -> Result<MtConstants> {
    if !(delta.is_positive() && delta.ln() < 0.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(b > 0.0 && v >= 1.0) {
        return Err(Error::Domain(format!("need b > 0 and v >= 1, got b = {b}, v = {v}")));
    }
    let gamma_c = delta.powf(-2.0).mul(LogPos::new(4.0 * b).add(delta.scale(v)));
    let one = LogPos::ONE;
    let oml = LogPos::new(0.5).div(one.add(gamma_c));
    let b_hat = LogPos::new(v).add(gamma_c);
    let xi_bar = delta.powf(-5.0).scale((4.0 - delta.value().powi(2)) * 4.0 * b * b);
    let b_hat_sq = b_hat.powf(2.0);
    let inner = LogPos::sum([
        oml,
        b_hat,
        b_hat_sq,
        xi_bar.mul(b_hat.mul(oml).add(b_hat_sq)),
    ]);
    let m_c = inner.div(oml.powf(2.0));
    Ok(MtConstants {
        delta,
        b,
        v,
        gamma_c,
        one_minus_lambda_hat: oml,
        b_hat,
        xi_bar,
        m_c,
    })
}

/// One admissible rate choice `ρ = 1 − θ/M_c`, `θ ∈ (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub theta: f64,
    pub rho: f64,
    /// `1 − ρ`.
    pub one_minus_rho: LogPos,
    pub omega: LogPos,
    pub m: LogPos,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub table: Vec<RateRow>,
    pub chosen: RateRow,
    pub m_cap: Option<LogPos>,
}

pub const DEFAULT_THETA_GRID: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// `ω = −log(ρ)/T` and
/// `M = (1+γ_c) ρ/(ρ + M_c^{−1} − 1) (ĉ + k₀ + 1) e^{−log ρ}`, which for
/// `ρ = 1 − θ/M_c` equals `(1+γ_c)(ĉ + k₀ + 1) M_c/(1 − θ)`.
pub fn rate_row(mt: &MtConstants, ub: &UltimateBound, horizon: f64, theta: f64) -> Result<RateRow> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Domain(format!("theta must lie in (0, 1), got {theta}")));
    }
    let one_minus_rho = LogPos::new(theta).div(mt.m_c);
    let omega = LogPos::from_ln(ln_neg_ln_one_minus(one_minus_rho.ln()) - horizon.ln());
    let m = LogPos::ONE
        .add(mt.gamma_c)
        .scale(ub.c_hat + ub.k0 + 1.0)
        .mul(mt.m_c)
        .scale(1.0 / (1.0 - theta));
    Ok(RateRow {
        theta,
        rho: 1.0 - one_minus_rho.value(),
        one_minus_rho,
        omega,
        m,
    })
}

/// Sweeps `θ` and picks the largest `ω` with `M ≤ m_cap`.
pub fn rate_report(
    mt: &MtConstants,
    ub: &UltimateBound,
    horizon: f64,
    thetas: &[f64],
    m_cap: Option<LogPos>,
) -> Result<RateReport> {
    let table: Vec<RateRow> = thetas
        .iter()
        .filter(|&&t| t > 0.0 && t < 1.0)
        .map(|&t| rate_row(mt, ub, horizon, t))
        .collect::<Result<_>>()?;
    let chosen = table
        .iter()
        .filter(|r| m_cap.is_none_or(|c| r.m <= c))
        .max_by(|a, b| a.omega.partial_cmp(&b.omega).unwrap())
        .copied()
        .ok_or_else(|| Error::Domain("no admissible rho: grid empty or every M exceeds the cap".into()))?;
    Ok(RateReport { table, chosen, m_cap })
}

/// `ω̂ = −½ log(1 − δ)` and prefactor `(1 − δ)^{−1}`.
pub fn uniform_rate(delta: LogPos) -> Result<(LogPos, f64)> {
    if delta.is_zero() {
        return Ok((LogPos::ZERO, 1.0));
    }
    if !(delta.ln() < 0.0) {
        return Err(Error::Domain(format!("delta must lie in [0, 1), got {delta}")));
    }
    let omega_hat = LogPos::from_ln(ln_neg_ln_one_minus(delta.ln()) - 2f64.ln());
    Ok((omega_hat, 1.0 / (1.0 - delta.value())))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapBound {
    pub p: f64,
    /// `gap(L_p) ≥ ω̂/p`, when a uniform rate is available.
    pub lp: Option<LogPos>,
    /// `‖P_tφ‖_{L²} ≤ e^{−ωt}‖φ‖_{L²}` in the symmetric case (`p = 2` only).
    pub l2_symmetric: Option<LogPos>,
}

pub fn spectral_gap(
    omega_hat: Option<LogPos>,
    omega: Option<LogPos>,
    p: f64,
    symmetric: bool,
) -> Result<GapBound> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::Domain(format!("p must lie in [1, ∞), got {p}")));
    }
    if p == 1.0 && !symmetric {
        return Err(Error::Domain("p = 1 requires a symmetric semigroup".into()));
    }
    Ok(GapBound {
        p,
        lp: omega_hat.map(|w| w.scale(1.0 / p)),
        l2_symmetric: if symmetric && p == 2.0 { omega } else { None },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetryCheck {
    pub a_symmetric: bool,
    pub q_scalar: bool,
    pub gradient: bool,
}

impl SymmetryCheck {
    pub fn consistent(&self) -> bool {
        self.a_symmetric && self.q_scalar && self.gradient
    }
}

/// Numerical sanity check of a symmetry assertion: `A` symmetric, `Q = qI`
/// and `G` passes the discrete curl test.
pub fn symmetry_check(model: &LinearModel, drift: &DriftSpec, stream: &Stream) -> SymmetryCheck {
    let tol = 1e-12 * model.a.norm().max(1.0);
    let q0 = model.q[(0, 0)];
    let qi = Mat::identity(model.d, model.d) * q0;
    SymmetryCheck {
        a_symmetric: (&model.a - model.a.transpose()).norm() <= tol,
        q_scalar: q0 > 0.0 && (&model.q - qi).norm() <= 1e-12 * q0,
        gradient: drift.curl_test(model.d, 64, stream),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundOptions {
    pub steps: usize,
    pub eps_end: f64,
    pub n_paths: usize,
    pub n_mc: usize,
    pub confidence: f64,
    pub eta: f64,
    pub delta_mode: DeltaMode,
    pub radius_x: Option<f64>,
    pub radius_y: Option<f64>,
    pub thetas: Vec<f64>,
    pub m_cap: Option<LogPos>,
    pub gap_orders: Vec<f64>,
}

impl Default for BoundOptions {
    fn default() -> Self {
        Self {
            steps: 256,
            eps_end: 1e-3,
            n_paths: 10_000,
            n_mc: 20_000,
            confidence: 0.99,
            eta: crate::lower_bounds::DEFAULT_ETA,
            delta_mode: DeltaMode::Pointwise,
            radius_x: None,
            radius_y: None,
            thetas: DEFAULT_THETA_GRID.to_vec(),
            m_cap: None,
            gap_orders: vec![2.0, 4.0],
        }
    }
}

/// V-uniform part; depends on the drift only through `(K, m)` and the
/// ultimate bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VUniformReport {
    pub ultimate: UltimateBound,
    pub small_set: SmallSetConfig,
    pub delta: DeltaReport,
    pub mt: MtConstants,
    pub rates: RateReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformReport {
    pub mhat: f64,
    pub radius_x: f64,
    pub delta: DeltaReport,
    pub omega_hat: LogPos,
    pub prefactor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub growth_k: f64,
    pub growth_m: f64,
    pub moments: MomentReport,
    pub packaged: Option<PackagedBound>,
    pub v_uniform: Option<VUniformReport>,
    pub uniform: Option<UniformReport>,
    pub gaps: Vec<GapBound>,
    pub symmetric: bool,
    /// Confidence level of every Monte-Carlo-derived constant.
    pub confidence: f64,
    pub notes: Vec<String>,
}

/// Default small-set radii just above the admissibility thresholds.
pub fn default_radii(ub: &UltimateBound) -> (f64, f64) {
    (4.0 * ub.c_hat + 0.5, 4.0 * (ub.c_hat + 0.5) + 0.5)
}

/// Full bound pipeline. `ub` enables the V-uniform part, `uniform_moments`
/// (`k(1)`, `k(s)` for the superlinear constants) the uniform part.
pub fn bound_report(
    model: &LinearModel,
    drift: &DriftSpec,
    ub: Option<&UltimateBound>,
    uniform_moments: Option<(f64, f64)>,
    opts: &BoundOptions,
    stream: &Stream,
) -> Result<BoundReport> {
    let grid = TimeGrid::uniform(opts.steps, opts.eps_end)?;
    let (moments, lbm) = build_lower_bound(model, drift, &grid, opts.n_paths, opts.confidence, stream)?;
    let packaged = packaged_bound(&lbm, opts.eta)?;
    let mut notes = vec![
        format!(
            "Monte-Carlo constants hold at one-sided confidence {} each",
            opts.confidence
        ),
        "M uses the factor e^{-log rho} = 1/rho".to_string(),
    ];
    let delta_for = |radius_x: f64, radius_y: Option<f64>, label: &str| -> Result<DeltaReport> {
        let (rep, _) = delta_small_set(
            &lbm,
            Some(&packaged),
            opts.delta_mode,
            radius_x,
            radius_y,
            opts.n_mc,
            opts.confidence,
            &stream.substream(label),
        )?;
        Ok(rep)
    };
    let v_uniform = match ub {
        Some(ub) => Some(v_uniform_part(ub, opts, &delta_for, &mut notes)?),
        None => None,
    };
    let uniform = match uniform_moments {
        Some((k_1, k_s)) => {
            let mh = mhat(drift.superlinear.as_ref(), k_1, k_s)?;
            let delta = delta_for(2.0 * mh, None, "delta-uniform")?;
            let (omega_hat, prefactor) = uniform_rate(delta.delta)?;
            Some(UniformReport {
                mhat: mh,
                radius_x: 2.0 * mh,
                delta,
                omega_hat,
                prefactor,
            })
        }
        None => None,
    };
    let omega = v_uniform.as_ref().map(|v| v.rates.chosen.omega);
    let omega_hat = uniform.as_ref().map(|u| u.omega_hat);
    let mut orders = opts.gap_orders.clone();
    if drift.symmetric && !orders.contains(&1.0) {
        orders.insert(0, 1.0);
    }
    let gaps = orders
        .iter()
        .map(|&p| spectral_gap(omega_hat, omega, p, drift.symmetric))
        .collect::<Result<_>>()?;
    Ok(BoundReport {
        growth_k: drift.growth.k,
        growth_m: drift.growth.m,
        moments,
        packaged: Some(packaged),
        v_uniform,
        uniform,
        gaps,
        symmetric: drift.symmetric,
        confidence: opts.confidence,
        notes,
    })
}

fn v_uniform_part(
    ub: &UltimateBound,
    opts: &BoundOptions,
    delta_for: &dyn Fn(f64, Option<f64>, &str) -> Result<DeltaReport>,
    notes: &mut Vec<String>,
) -> Result<VUniformReport> {
    let (dr, dry) = default_radii(ub);
    let small_set = small_set_config(
        ub,
        opts.radius_x.unwrap_or(dr),
        opts.radius_y.unwrap_or(dry),
    )?;
    if small_set.t0_clamped {
        notes.push("t0 log argument >= 1; t0 clamped to 0".into());
    }
    let delta = delta_for(small_set.radius_x, Some(small_set.radius_y), "delta-v-uniform")?;
    if delta.vacuous {
        return Err(Error::Domain(
            "delta lower confidence bound is not positive; increase the Monte-Carlo budget".into(),
        ));
    }
    let mt = mt_constants(delta.delta, small_set.b, small_set.radius_y + 1.0)?;
    let rates = rate_report(&mt, ub, small_set.horizon, &opts.thetas, opts.m_cap)?;
    Ok(VUniformReport {
        ultimate: *ub,
        small_set,
        delta,
        mt,
        rates,
    })
}
