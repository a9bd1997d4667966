//! Simulation experiments: total-variation estimation, ergodicity checks
//! against certified bound curves, parameter sweeps and model presets.

use crate::drift::{DriftSpec, GalerkinProjection, Nonlinearity};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector};
use crate::linop::LinearModel;
use crate::logscale::LogPos;
use crate::rng::{mean_stderr, Stream};
use crate::sde::{sample_marginals, sample_trajectory, steps_for};
use crate::stats::normal_cdf;
use serde::{Deserialize, Serialize};

pub const MIN_TV_SAMPLES: usize = 1000;
const JACKKNIFE_GROUPS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    ExponentialEuler,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub h: f64,
    pub t_max: f64,
    pub n_paths: usize,
    #[serde(default)]
    pub scheme: Scheme,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) || !(self.t_max > 0.0) {
            return Err(Error::Domain("h and t_max must be positive".into()));
        }
        steps_for(self.t_max, self.h).map(|_| ())
    }
}

/// `n_paths` paths from `x0` recorded at every multiple of `record_every`
/// up to `t_max`, indexed `[time][path][coordinate]`.
pub fn simulate_sde(
    model: &LinearModel,
    drift: &DriftSpec,
    x0: &[f64],
    cfg: &SimConfig,
    record_every: f64,
) -> Result<(Vec<f64>, Vec<Vec<Vec<f64>>>)> {
    cfg.validate()?;
    let n = steps_for(cfg.t_max, record_every)?;
    let times: Vec<f64> = (1..=n).map(|k| k as f64 * record_every).collect();
    let s = sample_marginals(model, drift, x0, cfg.h, &times, cfg.n_paths, &Stream::new(cfg.seed))?;
    Ok((times, s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TvMethod {
    #[default]
    Histogram,
}

/// Total variation in the `½ Σ|p − q|` convention (values in `[0, 1]`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvEstimate {
    pub tv: f64,
    pub stderr: f64,
    pub bins_per_axis: usize,
    /// Estimate with half as many bins per axis.
    pub tv_half_bins: f64,
}

fn quantile_edges(values: &mut [f64], bins: usize) -> Vec<f64> {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    (1..bins).map(|k| values[(k * n / bins).min(n - 1)]).collect()
}

fn cell_of(x: &[f64], edges: &[Vec<f64>], bins: usize) -> usize {
    let mut idx = 0;
    for (v, e) in x.iter().zip(edges) {
        idx = idx * bins + e.partition_point(|&b| b <= *v);
    }
    idx
}

fn histogram_tv(a: &[Vec<f64>], b: &[Vec<f64>], bins: usize) -> (f64, f64) {
    let d = a[0].len();
    let edges: Vec<Vec<f64>> = (0..d)
        .map(|k| {
            let mut pooled: Vec<f64> = a.iter().chain(b).map(|x| x[k]).collect();
            quantile_edges(&mut pooled, bins)
        })
        .collect();
    let cells = bins.pow(d as u32);
    let g = JACKKNIFE_GROUPS;
    let mut ca = vec![0u32; g * cells];
    let mut cb = vec![0u32; g * cells];
    let mut na = vec![0usize; g];
    let mut nb = vec![0usize; g];
    for (i, x) in a.iter().enumerate() {
        ca[(i % g) * cells + cell_of(x, &edges, bins)] += 1;
        na[i % g] += 1;
    }
    for (i, x) in b.iter().enumerate() {
        cb[(i % g) * cells + cell_of(x, &edges, bins)] += 1;
        nb[i % g] += 1;
    }
    let mut ta = vec![0u32; cells];
    let mut tb = vec![0u32; cells];
    for k in 0..g {
        for c in 0..cells {
            ta[c] += ca[k * cells + c];
            tb[c] += cb[k * cells + c];
        }
    }
    let tv_without = |skip: Option<usize>| {
        let (sa, sb) = match skip {
            Some(k) => (a.len() - na[k], b.len() - nb[k]),
            None => (a.len(), b.len()),
        };
        let mut acc = 0.0;
        for c in 0..cells {
            let (mut xa, mut xb) = (ta[c], tb[c]);
            if let Some(k) = skip {
                xa -= ca[k * cells + c];
                xb -= cb[k * cells + c];
            }
            acc += (xa as f64 / sa as f64 - xb as f64 / sb as f64).abs();
        }
        0.5 * acc
    };
    let full = tv_without(None);
    let loo: Vec<f64> = (0..g).map(|k| tv_without(Some(k))).collect();
    let m = loo.iter().sum::<f64>() / g as f64;
    let var = (g - 1) as f64 / g as f64 * loo.iter().map(|v| (v - m).powi(2)).sum::<f64>();
    (full, var.sqrt())
}

/// Default bins per axis: about `n^{1/(d+2)}`, at least 4.
pub fn default_bins(n: usize, d: usize) -> usize {
    ((n as f64).powf(1.0 / (d as f64 + 2.0)).round() as usize).clamp(4, 400)
}

/// Histogram TV over a shared grid of pooled per-axis quantiles, with a
/// grouped jackknife standard error.
pub fn empirical_tv(a: &[Vec<f64>], b: &[Vec<f64>], bins: Option<usize>) -> Result<TvEstimate> {
    if a.len() < MIN_TV_SAMPLES || b.len() < MIN_TV_SAMPLES {
        return Err(Error::Budget(format!(
            "TV estimation needs at least {MIN_TV_SAMPLES} samples per law, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let d = a[0].len();
    if d == 0 || d > 3 || b[0].len() != d {
        return Err(Error::Dimension { expected: d.clamp(1, 3), got: b[0].len() });
    }
    let bins = bins.unwrap_or_else(|| default_bins(a.len().min(b.len()), d)).max(2);
    let (tv, stderr) = histogram_tv(a, b, bins);
    let (tv_half_bins, _) = histogram_tv(a, b, (bins / 2).max(2));
    Ok(TvEstimate {
        tv,
        stderr,
        bins_per_axis: bins,
        tv_half_bins,
    })
}

/// Coordinates `coords` of every sample.
pub fn project(samples: &[Vec<f64>], coords: &[usize]) -> Vec<Vec<f64>> {
    samples.iter().map(|x| coords.iter().map(|&c| x[c]).collect()).collect()
}

/// `∫|w_p N(μ_p, s_p²) − w_q N(μ_q, s_q²)|` over the line, exactly, by
/// splitting at the crossing points of the two weighted densities.
fn weighted_normal_l1(wp: f64, mp: f64, sp: f64, wq: f64, mq: f64, sq: f64) -> f64 {
    let a = 0.5 / (sq * sq) - 0.5 / (sp * sp);
    let b = mp / (sp * sp) - mq / (sq * sq);
    let c = (wp / sp).ln() - (wq / sq).ln() - 0.5 * mp * mp / (sp * sp) + 0.5 * mq * mq / (sq * sq);
    let mut roots: Vec<f64> = Vec::with_capacity(2);
    if a.abs() <= 1e-14 * (b.abs() + c.abs()).max(1e-300) {
        if b != 0.0 {
            roots.push(-c / b);
        }
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc > 0.0 {
            let q = -0.5 * (b + b.signum() * disc.sqrt());
            roots.push(q / a);
            if q != 0.0 {
                roots.push(c / q);
            }
        }
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let cdf = |z: f64, m: f64, s: f64| {
        if z == f64::NEG_INFINITY {
            0.0
        } else if z == f64::INFINITY {
            1.0
        } else {
            normal_cdf((z - m) / s)
        }
    };
    let mut cuts = vec![f64::NEG_INFINITY];
    cuts.extend(roots);
    cuts.push(f64::INFINITY);
    cuts.windows(2)
        .map(|w| {
            let dp = cdf(w[1], mp, sp) - cdf(w[0], mp, sp);
            let dq = cdf(w[1], mq, sq) - cdf(w[0], mq, sq);
            (wp * dp - wq * dq).abs()
        })
        .sum()
}

/// TV (`½∫|p − q|`) between two nondegenerate Gaussians in dimension 1 or
/// 2, in coordinates whitened by the second law. In dimension 2 the inner
/// integral is exact and the outer one uses Gauss–Legendre quadrature.
pub fn gaussian_tv(m1: &Vector, c1: &Mat, m2: &Vector, c2: &Mat) -> Result<f64> {
    let d = m1.len();
    let chol = c2.clone().cholesky().ok_or(Error::Singular { t: 0.0, rank: 0, dim: d })?;
    let l = chol.l();
    let linv = l.clone().try_inverse().ok_or(Error::Singular { t: 0.0, rank: 0, dim: d })?;
    let m = &linv * (m1 - m2);
    let c = &linv * c1 * linv.transpose();
    match d {
        1 => Ok(0.5 * weighted_normal_l1(1.0, m[0], c[(0, 0)].sqrt(), 1.0, 0.0, 1.0)),
        2 => {
            let s0 = c[(0, 0)].sqrt();
            let cond_var = c[(1, 1)] - c[(0, 1)] * c[(0, 1)] / c[(0, 0)];
            if !(cond_var > 0.0) {
                return Err(Error::Singular { t: 0.0, rank: 1, dim: 2 });
            }
            let cs = cond_var.sqrt();
            let lo = (m[0] - 12.0 * s0).min(-12.0);
            let hi = (m[0] + 12.0 * s0).max(12.0);
            let inner = |u: f64| {
                let wp = (-0.5 * ((u - m[0]) / s0).powi(2)).exp() / (s0 * (2.0 * std::f64::consts::PI).sqrt());
                let wq = (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
                let mc = m[1] + c[(0, 1)] / c[(0, 0)] * (u - m[0]);
                if wp == 0.0 && wq == 0.0 {
                    return 0.0;
                }
                weighted_normal_l1(wp.max(1e-300), mc, cs, wq.max(1e-300), 0.0, 1.0)
            };
            Ok(0.5 * linalg::gauss_legendre(inner, lo, hi, 400))
        }
        _ => Err(Error::Dimension { expected: 2, got: d }),
    }
}

/// Certified bound on `‖·‖_var` (values up to 2) as a function of time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundCurve {
    /// `M V(x) e^{−ωt}` with `V(x) = |x| + 1`.
    VUniform { m: LogPos, omega: LogPos, v_x: f64 },
    /// `(1 − δ)^{−1} e^{−ω̂t} ‖ν₁ − ν₂‖_var`.
    Uniform { prefactor: f64, omega_hat: LogPos, initial_var: f64 },
}

impl BoundCurve {
    pub fn at(&self, t: f64) -> LogPos {
        match *self {
            BoundCurve::VUniform { m, omega, v_x } => {
                LogPos::from_ln(m.ln() + v_x.ln() - omega.value() * t)
            }
            BoundCurve::Uniform { prefactor, omega_hat, initial_var } => {
                LogPos::from_ln(prefactor.ln() + initial_var.ln() - omega_hat.value() * t)
            }
        }
    }

    /// The same curve with its rate multiplied by `factor`.
    pub fn with_rate_scaled(&self, factor: f64) -> BoundCurve {
        match *self {
            BoundCurve::VUniform { m, omega, v_x } => BoundCurve::VUniform {
                m,
                omega: omega.scale(factor),
                v_x,
            },
            BoundCurve::Uniform { prefactor, omega_hat, initial_var } => BoundCurve::Uniform {
                prefactor,
                omega_hat: omega_hat.scale(factor),
                initial_var,
            },
        }
    }
}

/// Empirical `‖·‖_var` (values in `[0, 2]`) against a bound curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TvCurve {
    pub times: Vec<f64>,
    pub tv_estimates: Vec<f64>,
    pub tv_stderrs: Vec<f64>,
    pub bound_values: Vec<LogPos>,
    /// Exact value when both laws are Gaussian.
    pub exact: Option<Vec<f64>>,
}

impl TvCurve {
    /// `tv ≤ bound + 3σ` at every ladder point.
    pub fn dominated(&self) -> bool {
        self.times.iter().enumerate().all(|(i, _)| {
            let slack = self.tv_estimates[i] - 3.0 * self.tv_stderrs[i];
            slack <= 0.0 || LogPos::new(slack) <= self.bound_values[i]
        })
    }

    pub fn with_bound(&self, bound: &BoundCurve) -> TvCurve {
        TvCurve {
            bound_values: self.times.iter().map(|&t| bound.at(t)).collect(),
            ..self.clone()
        }
    }

    /// RFC-4180 CSV: `t,tv,stderr,bound,ln_bound[,exact]`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,tv,stderr,bound,ln_bound");
        if self.exact.is_some() {
            out.push_str(",exact");
        }
        out.push_str("\r\n");
        for i in 0..self.times.len() {
            let b = self.bound_values[i];
            out.push_str(&format!(
                "{},{},{},{},{}",
                self.times[i],
                self.tv_estimates[i],
                self.tv_stderrs[i],
                b.value(),
                b.ln()
            ));
            if let Some(e) = &self.exact {
                out.push_str(&format!(",{}", e[i]));
            }
            out.push_str("\r\n");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub h: f64,
    pub n_paths: usize,
    /// Size of the reference sample of the invariant law.
    pub n_reference: usize,
    pub times: Vec<f64>,
    /// Burn-in time of the reference chains.
    pub burn_in: f64,
    /// Coordinates used for TV when `d > 3`.
    #[serde(default)]
    pub projection: Option<Vec<usize>>,
    #[serde(default)]
    pub bins: Option<usize>,
    pub seed: u64,
}

/// Reference sample of `μ*`: independent chains from the origin run for
/// `burn_in` and for `2·burn_in`; the later states are the sample and the
/// TV between the two snapshots measures residual drift.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSample {
    pub states: Vec<Vec<f64>>,
    pub drift_tv: TvEstimate,
    /// TV between two independent halves of the sample.
    pub noise_tv: TvEstimate,
    pub burn_in_ok: bool,
}

pub fn reference_sample(
    model: &LinearModel,
    drift: &DriftSpec,
    cfg: &ExperimentConfig,
    stream: &Stream,
) -> Result<ReferenceSample> {
    let x0 = vec![0.0; model.d];
    let mut snaps = sample_marginals(
        model,
        drift,
        &x0,
        cfg.h,
        &[cfg.burn_in, 2.0 * cfg.burn_in],
        cfg.n_reference,
        &stream.substream("reference"),
    )?;
    let late = snaps.pop().unwrap();
    let early = snaps.pop().unwrap();
    let coords = tv_coords(model.d, cfg)?;
    let pl = project(&late, &coords);
    let pe = project(&early, &coords);
    let drift_tv = empirical_tv(&pe, &pl, cfg.bins)?;
    let half = pl.len() / 2;
    let noise_tv = empirical_tv(&pl[..half], &pl[half..], cfg.bins)?;
    let burn_in_ok = drift_tv.tv <= noise_tv.tv + 3.0 * (drift_tv.stderr + noise_tv.stderr);
    Ok(ReferenceSample {
        states: late,
        drift_tv,
        noise_tv,
        burn_in_ok,
    })
}

fn tv_coords(d: usize, cfg: &ExperimentConfig) -> Result<Vec<usize>> {
    match &cfg.projection {
        Some(c) if c.iter().all(|&k| k < d) && !c.is_empty() && c.len() <= 3 => Ok(c.clone()),
        Some(_) => Err(Error::Domain("projection coordinates out of range".into())),
        None if d <= 3 => Ok((0..d).collect()),
        None => Ok(vec![0, 1]),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub curve: TvCurve,
    pub verdict: bool,
    /// Verdict with the rate inflated tenfold; a sound experiment fails it.
    pub negative_control_verdict: bool,
    pub burn_in_ok: bool,
    pub projected: bool,
}

/// `‖P_tδ_x − μ*‖_var` on the time ladder against `bound`.
pub fn ergodicity_experiment(
    model: &LinearModel,
    drift: &DriftSpec,
    x: &[f64],
    bound: &BoundCurve,
    cfg: &ExperimentConfig,
    reference: &ReferenceSample,
    stream: &Stream,
) -> Result<ExperimentResult> {
    let coords = tv_coords(model.d, cfg)?;
    let marg = sample_marginals(model, drift, x, cfg.h, &cfg.times, cfg.n_paths, &stream.substream("from-x"))?;
    let refp = project(&reference.states, &coords);
    let mut curve = TvCurve {
        times: cfg.times.clone(),
        tv_estimates: Vec::new(),
        tv_stderrs: Vec::new(),
        bound_values: Vec::new(),
        exact: None,
    };
    for s in &marg {
        let e = empirical_tv(&project(s, &coords), &refp, cfg.bins)?;
        curve.tv_estimates.push(2.0 * e.tv);
        curve.tv_stderrs.push(2.0 * e.stderr);
    }
    curve = curve.with_bound(bound);
    let negative = curve.with_bound(&bound.with_rate_scaled(10.0));
    Ok(ExperimentResult {
        verdict: curve.dominated(),
        negative_control_verdict: negative.dominated(),
        curve,
        burn_in_ok: reference.burn_in_ok,
        projected: coords.len() < model.d,
    })
}

/// `‖P_tδ_{x₁} − P_tδ_{x₂}‖_var` on the time ladder against `bound`.
pub fn two_start_experiment(
    model: &LinearModel,
    drift: &DriftSpec,
    x1: &[f64],
    x2: &[f64],
    bound: &BoundCurve,
    cfg: &ExperimentConfig,
    stream: &Stream,
) -> Result<ExperimentResult> {
    let coords = tv_coords(model.d, cfg)?;
    let a = sample_marginals(model, drift, x1, cfg.h, &cfg.times, cfg.n_paths, &stream.substream("start-1"))?;
    let b = sample_marginals(model, drift, x2, cfg.h, &cfg.times, cfg.n_paths, &stream.substream("start-2"))?;
    let mut curve = TvCurve {
        times: cfg.times.clone(),
        tv_estimates: Vec::new(),
        tv_stderrs: Vec::new(),
        bound_values: Vec::new(),
        exact: None,
    };
    for (sa, sb) in a.iter().zip(&b) {
        let e = empirical_tv(&project(sa, &coords), &project(sb, &coords), cfg.bins)?;
        curve.tv_estimates.push(2.0 * e.tv);
        curve.tv_stderrs.push(2.0 * e.stderr);
    }
    curve = curve.with_bound(bound);
    let negative = curve.with_bound(&bound.with_rate_scaled(10.0));
    Ok(ExperimentResult {
        verdict: curve.dominated(),
        negative_control_verdict: negative.dominated(),
        curve,
        burn_in_ok: true,
        projected: coords.len() < model.d,
    })
}

/// Exact `‖P_tδ_x − μ*‖_var` for a stable linear system (`G(x) = Lx`).
pub fn exact_linear_tv(closed_loop: &LinearModel, x: &Vector, times: &[f64]) -> Result<Vec<f64>> {
    let q_inf = closed_loop.stationary_covariance()?;
    let zero = Vector::zeros(closed_loop.d);
    times
        .iter()
        .map(|&t| {
            let m = closed_loop.semigroup(t) * x;
            let c = closed_loop.gramian_matrix(t);
            gaussian_tv(&m, &c, &zero, &q_inf).map(|v| 2.0 * v)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub tv: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub alpha0: f64,
    pub rows: Vec<SweepRow>,
    /// TV between two further independent baseline samples.
    pub noise_floor: TvEstimate,
    /// Point estimates do not increase as `|α − α₀|` decreases.
    pub monotone: bool,
    /// The row closest to `α₀` lies within the noise floor plus 3σ.
    pub final_within_noise: bool,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,tv,stderr\r\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{}\r\n", r.alpha, r.tv, r.stderr));
        }
        out
    }
}

/// TV (`½Σ|p − q|`) between invariant samples of the drifts `family(α)`
/// and the baseline `family(α₀)`.
pub fn parameter_sweep(
    model: &LinearModel,
    family: &dyn Fn(f64) -> DriftSpec,
    alphas: &[f64],
    alpha0: f64,
    cfg: &ExperimentConfig,
    stream: &Stream,
) -> Result<SweepTable> {
    let coords = tv_coords(model.d, cfg)?;
    let invariant = |alpha: f64, label: &str| -> Result<Vec<Vec<f64>>> {
        let r = sample_marginals(
            model,
            &family(alpha),
            &vec![0.0; model.d],
            cfg.h,
            &[cfg.burn_in],
            cfg.n_reference,
            &stream.substream(label),
        )?;
        Ok(project(&r[0], &coords))
    };
    let base = invariant(alpha0, "baseline")?;
    let mut ordered: Vec<f64> = alphas.to_vec();
    ordered.sort_by(|a, b| (b - alpha0).abs().partial_cmp(&(a - alpha0).abs()).unwrap());
    let mut rows = Vec::with_capacity(ordered.len());
    for (i, &alpha) in ordered.iter().enumerate() {
        let s = invariant(alpha, &format!("alpha-{i}"))?;
        let e = empirical_tv(&s, &base, cfg.bins)?;
        rows.push(SweepRow { alpha, tv: e.tv, stderr: e.stderr });
    }
    let fa = invariant(alpha0, "floor-a")?;
    let fb = invariant(alpha0, "floor-b")?;
    let noise_floor = empirical_tv(&fa, &fb, cfg.bins)?;
    let monotone = rows.windows(2).all(|w| w[1].tv <= w[0].tv);
    let final_within_noise = rows
        .last()
        .is_some_and(|r| r.tv <= noise_floor.tv + 3.0 * (r.stderr + noise_floor.stderr));
    Ok(SweepTable {
        alpha0,
        rows,
        noise_floor,
        monotone,
        final_within_noise,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub lags: Vec<f64>,
    pub autocorrelation: Vec<f64>,
    /// Smallest `−log(acf(τ))/τ` over lags whose autocorrelation is
    /// resolved above noise.
    pub rate: f64,
}

/// Autocorrelation decay of the observable `f` along one long stationary
/// trajectory.
#[allow(clippy::too_many_arguments)]
pub fn autocorrelation_decay(
    model: &LinearModel,
    drift: &DriftSpec,
    observable: &dyn Fn(&[f64]) -> f64,
    h: f64,
    burn_in: f64,
    record_dt: f64,
    records: usize,
    lags: &[f64],
    stream: &Stream,
) -> Result<DecayReport> {
    let thin = steps_for(record_dt, h)?;
    let burn = steps_for(burn_in, h)?;
    let mut rng = stream.substream("autocorrelation").path(0);
    let traj = sample_trajectory(model, drift, &vec![0.0; model.d], h, burn, thin, records, &mut rng)?;
    let f: Vec<f64> = traj.iter().map(|x| observable(x)).collect();
    let (mean, _) = mean_stderr(&f);
    let c: Vec<f64> = f.iter().map(|v| v - mean).collect();
    let var = c.iter().map(|v| v * v).sum::<f64>() / c.len() as f64;
    let noise = 4.0 / (c.len() as f64).sqrt();
    let mut acf = Vec::with_capacity(lags.len());
    let mut rate = f64::INFINITY;
    for &tau in lags {
        let k = steps_for(tau, record_dt)?;
        let n = c.len() - k;
        let cov = (0..n).map(|i| c[i] * c[i + k]).sum::<f64>() / n as f64;
        let r = cov / var;
        acf.push(r);
        if r > noise {
            rate = rate.min(-r.ln() / tau);
        }
    }
    Ok(DecayReport {
        lags: lags.to_vec(),
        autocorrelation: acf,
        rate,
    })
}

/// Named model and drift presets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum Preset {
    /// Damped oscillator `ÿ = −α₁y − α₂ẏ + σẇ`.
    Oscillator {
        #[serde(default = "one")]
        alpha1: f64,
        #[serde(default = "one")]
        alpha2: f64,
        #[serde(default = "one")]
        sigma: f64,
    },
    Scalar1,
    /// `SCALAR1` with `G(x) = −x`.
    Scalar1Linear,
    /// `SCALAR1` with `G(x) = −x³ + αx`.
    Cubic {
        #[serde(default)]
        alpha: f64,
    },
    Galerkin {
        d: usize,
        coeffs: Vec<f64>,
        #[serde(default = "one")]
        shift: f64,
    },
}

fn one() -> f64 {
    1.0
}

/// Cubic drift `G(x) = −x³ + αx` on `SCALAR1`, with growth and
/// dissipativity constants shared by every `α ∈ [0, ½]`.
pub fn cubic_drift(alpha: f64) -> DriftSpec {
    DriftSpec::new(Nonlinearity::Polynomial(vec![0.0, alpha, 0.0, -1.0]))
        .with_growth(1.5, 3.0)
        .with_dissipativity(0.5, 1.5, 0.5, 3.0)
        .with_superlinear(0.25, 1.5, 0.5, 3.0, 2.0)
        .with_symmetric(true)
}

impl Preset {
    pub fn parse(name: &str) -> Result<Preset> {
        match name {
            "oscillator" => Ok(Preset::Oscillator { alpha1: 1.0, alpha2: 1.0, sigma: 1.0 }),
            "scalar1" => Ok(Preset::Scalar1),
            "scalar1_linear" | "scalar1-linear" => Ok(Preset::Scalar1Linear),
            "cubic" => Ok(Preset::Cubic { alpha: 0.0 }),
            "galerkin" => Ok(Preset::Galerkin { d: 8, coeffs: vec![0.0, 0.0, 0.0, -1.0], shift: 1.0 }),
            other => Err(Error::Domain(format!(
                "unknown preset '{other}' (expected oscillator, scalar1, scalar1_linear, cubic, galerkin)"
            ))),
        }
    }

    pub fn build(&self) -> Result<(LinearModel, DriftSpec)> {
        match self {
            Preset::Oscillator { alpha1, alpha2, sigma } => {
                if !(*alpha1 > 0.0 && *alpha2 > 0.0 && *sigma > 0.0) {
                    return Err(Error::Domain("oscillator needs positive alpha1, alpha2, sigma".into()));
                }
                let model = LinearModel::from_q_half(
                    Mat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
                    Mat::from_row_slice(2, 2, &[0.0, 0.0, 0.0, *sigma]),
                )?;
                let l = Mat::from_row_slice(2, 2, &[0.0, 0.0, -alpha1 / sigma, -alpha2 / sigma]);
                Ok((model, DriftSpec::new(Nonlinearity::Linear(l))))
            }
            Preset::Scalar1 => Ok((LinearModel::scalar(-1.0, 1.0)?, DriftSpec::zero())),
            Preset::Scalar1Linear => Ok((
                LinearModel::scalar(-1.0, 1.0)?,
                DriftSpec::new(Nonlinearity::Linear(Mat::from_element(1, 1, -1.0)))
                    .with_dissipativity(2.0, 0.0, 0.0, 1.0)
                    .with_symmetric(true),
            )),
            Preset::Cubic { alpha } => {
                if !(0.0..=0.5).contains(alpha) {
                    return Err(Error::Domain(format!("cubic alpha must lie in [0, 1/2], got {alpha}")));
                }
                Ok((LinearModel::scalar(-1.0, 1.0)?, cubic_drift(*alpha)))
            }
            Preset::Galerkin { d, coeffs, shift } => {
                if *d == 0 || *d > crate::drift::MAX_STACK_DIM {
                    return Err(Error::Domain(format!("galerkin dimension must lie in 1..=64, got {d}")));
                }
                let a = Mat::from_diagonal(&Vector::from_fn(*d, |k, _| {
                    GalerkinProjection::laplacian_eigenvalue(k) - shift
                }));
                let model = LinearModel::from_q(a, Mat::identity(*d, *d))?;
                let g = Nonlinearity::Galerkin(GalerkinProjection::new(*d, coeffs.clone(), *shift));
                Ok((model, DriftSpec::new(g).with_symmetric(true)))
            }
        }
    }
}

/// Sample mean of `|X_t|` over `n_paths` paths at each of `times`, with
/// standard errors.
pub fn mean_norm_profile(
    model: &LinearModel,
    drift: &DriftSpec,
    x0: &[f64],
    h: f64,
    times: &[f64],
    n_paths: usize,
    stream: &Stream,
) -> Result<Vec<(f64, f64, f64)>> {
    let s = sample_marginals(model, drift, x0, h, times, n_paths, stream)?;
    Ok(times
        .iter()
        .zip(&s)
        .map(|(&t, paths)| {
            let norms: Vec<f64> = paths.iter().map(|x| linalg::norm(x)).collect();
            let (m, se) = mean_stderr(&norms);
            (t, m, se)
        })
        .collect())
}

/// Exact mean and variance after `n` exponential-Euler steps for scalar
/// linear drift `a x + q^{1/2} l x`.
pub fn scalar_linear_scheme_moments(model: &LinearModel, l: f64, h: f64, n: usize, x0: f64) -> Result<(f64, f64)> {
    if model.d != 1 {
        return Err(Error::Dimension { expected: 1, got: model.d });
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Domain(format!("step must be positive, got {h}")));
    }
    let factor = model.semigroup(h)[(0, 0)] + model.phi1(h)[(0, 0)] * model.q_half[(0, 0)] * l;
    let noise = model.gramian_matrix(h)[(0, 0)];
    let mut mean = x0;
    let mut var = 0.0;
    for _ in 0..n {
        mean *= factor;
        var = factor * factor * var + noise;
    }
    Ok((mean, var))
}
