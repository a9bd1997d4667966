//! Girsanov weights and Monte-Carlo transition densities built on the
//! Ornstein–Uhlenbeck bridge.

use crate::bridge::BridgeKernel;
use crate::drift::{DriftSpec, MAX_STACK_DIM};
use crate::error::{Error, Result};
use crate::linalg::{self, matvec, Vector};
use crate::linop::LinearModel;
use crate::rng::{mean_stderr, pairwise_sum, Stream};
use crate::sde::{sample_marginals, OuWithNoise};
use crate::stats::gaussian_log_pdf;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Weight degeneracy is flagged when ESS falls below this fraction of paths.
pub const ESS_WARN_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// Density with respect to `μ₁ = N(0, Q₁)`.
    VsMu1,
    /// Density with respect to Lebesgue measure.
    VsLebesgue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_paths: usize,
    pub reference: Reference,
    pub ess: f64,
    pub degenerate: bool,
    /// Some weight underflowed to zero.
    pub underflow: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSummary {
    pub mean: f64,
    pub stderr: f64,
    pub n_paths: usize,
    pub ess: f64,
    pub degenerate: bool,
    pub underflow: bool,
}

impl WeightSummary {
    pub fn from_weights(w: &[f64]) -> Self {
        let (mean, stderr) = mean_stderr(w);
        let sum = pairwise_sum(w);
        let sq: Vec<f64> = w.iter().map(|v| v * v).collect();
        let sum_sq = pairwise_sum(&sq);
        let ess = if sum_sq > 0.0 { sum * sum / sum_sq } else { 0.0 };
        Self {
            mean,
            stderr,
            n_paths: w.len(),
            ess,
            degenerate: ess < ESS_WARN_FRACTION * w.len() as f64,
            underflow: w.contains(&0.0),
        }
    }

    /// Deviation from `target` in standard errors (0 when both agree exactly).
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = self.mean - target;
        if diff == 0.0 {
            0.0
        } else {
            diff.abs() / self.stderr
        }
    }
}

/// `ρ = Σ⟨G(X_i), ΔW_i⟩ − ½ Σ |G(X_i)|² Δt_i` with left endpoints.
pub fn girsanov_log_weight(
    drift: &DriftSpec,
    states: &[Vector],
    increments: &[Vector],
    dts: &[f64],
) -> Result<f64> {
    let d = states.first().map_or(0, |s| s.len());
    let mut g = vec![0.0; d];
    let mut rho = 0.0;
    for (i, (dw, &dt)) in increments.iter().zip(dts).enumerate() {
        drift.eval(states[i].as_slice(), &mut g);
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteDrift {
                t: dts[..i].iter().sum(),
            });
        }
        rho += linalg::dot(&g, dw.as_slice()) - 0.5 * linalg::dot(&g, &g) * dt;
    }
    Ok(rho)
}

/// Monte-Carlo mean of `exp ρ` over exact OU paths from `x` on `[0, 1]`
/// with `steps` uniform steps.
pub fn martingale_check(
    model: &LinearModel,
    drift: &DriftSpec,
    x: &Vector,
    steps: usize,
    n_paths: usize,
    stream: &Stream,
) -> Result<WeightSummary> {
    drift.validate(model.d)?;
    if drift.g.is_zero() {
        return Ok(WeightSummary::from_weights(&vec![1.0; n_paths]));
    }
    let d = model.d;
    let h = 1.0 / steps as f64;
    let ou = OuWithNoise::new(model, h);
    let s = stream.substream("martingale");
    let weights: Vec<Result<f64>> = s.map_paths(n_paths, |_, rng| {
        let mut z = [0.0f64; MAX_STACK_DIM];
        let mut next = [0.0f64; MAX_STACK_DIM];
        let mut dw = [0.0f64; MAX_STACK_DIM];
        let mut g = [0.0f64; MAX_STACK_DIM];
        z[..d].copy_from_slice(x.as_slice());
        let mut rho = 0.0;
        for i in 0..steps {
            ou.step(&z[..d], &mut next[..d], &mut dw[..d], rng);
            drift.eval(&z[..d], &mut g[..d]);
            let gg = linalg::dot(&g[..d], &g[..d]);
            if !gg.is_finite() {
                return Err(Error::NonFiniteDrift { t: i as f64 * h });
            }
            rho += linalg::dot(&g[..d], &dw[..d]) - 0.5 * gg * h;
            z[..d].copy_from_slice(&next[..d]);
        }
        Ok(rho.exp())
    });
    let w: Vec<f64> = weights.into_iter().collect::<Result<_>>()?;
    Ok(WeightSummary::from_weights(&w))
}

/// Per-(x, y) data for the density functional.
struct Endpoints {
    /// Bridge means `m_i` at every node, row-wise.
    means: Vec<f64>,
    /// `B₂(t_i)x − B₃(t_i)y` for every left endpoint.
    offsets: Vec<f64>,
}

fn endpoints(kernel: &BridgeKernel, x: &Vector, y: &Vector) -> Endpoints {
    let d = kernel.d();
    let m = kernel.grid.steps();
    let mut means = vec![0.0; (m + 1) * d];
    let mut offsets = vec![0.0; m * d];
    for i in 0..=m {
        let (mean, _) = kernel.marginal(i, x, y);
        means[i * d..(i + 1) * d].copy_from_slice(mean.as_slice());
        if i < m {
            let ops = kernel.nodes[i].ops.as_ref().expect("interior node");
            let off = &ops.b2 * x - &ops.b3 * y;
            offsets[i * d..(i + 1) * d].copy_from_slice(off.as_slice());
        }
    }
    Endpoints { means, offsets }
}

/// Quadrature for the `ds` integrals of the density functional. The `dζ`
/// integral is always left-point (Itô).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    LeftPoint,
    #[default]
    Trapezoid,
}

/// Log of the density functional for one bridge path:
/// `Σ⟨G, Δζ⟩ − ∫ ½|G|² + ⟨G, B₁Ẑ + B₂x − B₃y⟩ ds`, with `Ẑ` the centered
/// bridge.
fn log_functional(
    kernel: &BridgeKernel,
    drift: &DriftSpec,
    ep: &Endpoints,
    states: &[f64],
    incs: &[f64],
    quad: Quadrature,
) -> Result<f64> {
    let d = kernel.d();
    let m = kernel.grid.steps();
    let mut g = [0.0f64; MAX_STACK_DIM];
    let mut zc = [0.0f64; MAX_STACK_DIM];
    let mut corr = [0.0f64; MAX_STACK_DIM];
    // Lebesgue integrand ½|G|² + ⟨G, B₁Ẑ + B₂x − B₃y⟩ at every left endpoint.
    let mut stoch = 0.0;
    let mut lebesgue = 0.0;
    let mut prev_f = 0.0;
    for i in 0..m {
        let xs = &states[i * d..(i + 1) * d];
        drift.eval(xs, &mut g[..d]);
        let gg = linalg::dot(&g[..d], &g[..d]);
        if !gg.is_finite() {
            return Err(Error::NonFiniteDrift {
                t: kernel.grid.nodes[i],
            });
        }
        for k in 0..d {
            zc[k] = xs[k] - ep.means[i * d + k];
        }
        let ops = kernel.nodes[i].ops.as_ref().expect("interior node");
        matvec(&ops.b1, &zc[..d], &mut corr[..d]);
        for k in 0..d {
            corr[k] += ep.offsets[i * d + k];
        }
        let f = 0.5 * gg + linalg::dot(&g[..d], &corr[..d]);
        stoch += linalg::dot(&g[..d], &incs[i * d..(i + 1) * d]);
        match quad {
            Quadrature::LeftPoint => lebesgue += f * kernel.grid.dt(i),
            Quadrature::Trapezoid => {
                if i > 0 {
                    lebesgue += 0.5 * (prev_f + f) * kernel.grid.dt(i - 1);
                }
                // The integrand is undefined at t = 1; the last interval is
                // left-point.
                if i + 1 == m {
                    lebesgue += f * kernel.grid.dt(i);
                }
            }
        }
        prev_f = f;
    }
    Ok(stoch - lebesgue)
}

/// Per-path values of the density functional `Φ(x, y)` on strategy-B
/// bridges.
pub fn h_samples(
    kernel: &BridgeKernel,
    drift: &DriftSpec,
    x: &Vector,
    y: &Vector,
    n_paths: usize,
    quad: Quadrature,
    stream: &Stream,
) -> Result<Vec<f64>> {
    drift.validate(kernel.d())?;
    if drift.g.is_zero() {
        return Ok(vec![1.0; n_paths]);
    }
    let d = kernel.d();
    let m = kernel.grid.steps();
    let ep = endpoints(kernel, x, y);
    let vals: Vec<Result<f64>> = stream.map_paths(n_paths, |_, rng| {
        let mut states = vec![0.0; (m + 1) * d];
        let mut incs = vec![0.0; m * d];
        kernel.sample_sde_into(rng, x.as_slice(), y.as_slice(), &mut states, &mut incs)?;
        Ok(log_functional(kernel, drift, &ep, &states, &incs, quad)?.exp())
    });
    vals.into_iter().collect()
}

pub fn h_estimate(
    kernel: &BridgeKernel,
    drift: &DriftSpec,
    x: &Vector,
    y: &Vector,
    n_paths: usize,
    quad: Quadrature,
    stream: &Stream,
) -> Result<WeightSummary> {
    let w = h_samples(kernel, drift, x, y, n_paths, quad, stream)?;
    Ok(WeightSummary::from_weights(&w))
}

/// `h(x, y) g(x, y)` (density against `μ₁`), optionally converted to a
/// Lebesgue density by the `N(0, Q₁)` pdf at `y`.
pub fn transition_density(
    kernel: &BridgeKernel,
    drift: &DriftSpec,
    x: &Vector,
    y: &Vector,
    n_paths: usize,
    quad: Quadrature,
    stream: &Stream,
    reference: Reference,
) -> Result<DensityEstimate> {
    let model = &kernel.model;
    let w = h_estimate(kernel, drift, x, y, n_paths, quad, &stream.substream("density"))?;
    let mut log_scale = model.cameron_martin_log_g(x, y)?;
    if reference == Reference::VsLebesgue {
        let zero = Vector::zeros(model.d);
        log_scale += gaussian_log_pdf(&zero, &kernel.q1.qt, y)
            .ok_or(Error::Singular {
                t: 1.0,
                rank: kernel.q1.rank,
                dim: model.d,
            })?;
    }
    let scale = log_scale.exp();
    Ok(DensityEstimate {
        value: w.mean * scale,
        stderr: w.stderr * scale,
        n_paths,
        reference,
        ess: w.ess,
        degenerate: w.degenerate,
        underflow: w.underflow || (w.mean > 0.0 && w.mean * scale == 0.0),
    })
}

/// Monte-Carlo estimate of `∫ h(x, y) g(x, y) μ₁(dy)`, one bridge per outer
/// sample `y ~ μ₁`.
pub fn normalization_check(
    kernel: &BridgeKernel,
    drift: &DriftSpec,
    x: &Vector,
    n_outer: usize,
    quad: Quadrature,
    stream: &Stream,
) -> Result<WeightSummary> {
    drift.validate(kernel.d())?;
    let d = kernel.d();
    let m = kernel.grid.steps();
    let model = &kernel.model;
    let q1_root = kernel.q1.root.clone();
    let s = stream.substream("normalization");
    let vals: Vec<Result<f64>> = s.map_paths(n_outer, |_, rng| {
        let mut xi = vec![0.0; d];
        let mut yv = vec![0.0; d];
        for v in xi.iter_mut() {
            *v = StandardNormal.sample(rng);
        }
        matvec(&q1_root, &xi, &mut yv);
        let y = Vector::from_vec(yv);
        let log_g = model.cameron_martin_log_g(x, &y)?;
        if drift.g.is_zero() {
            return Ok(log_g.exp());
        }
        let ep = endpoints(kernel, x, &y);
        let mut states = vec![0.0; (m + 1) * d];
        let mut incs = vec![0.0; m * d];
        kernel.sample_sde_into(rng, x.as_slice(), y.as_slice(), &mut states, &mut incs)?;
        Ok((log_functional(kernel, drift, &ep, &states, &incs, quad)? + log_g).exp())
    });
    let w: Vec<f64> = vals.into_iter().collect::<Result<_>>()?;
    Ok(WeightSummary::from_weights(&w))
}

/// Gaussian-kernel density estimate of the law of `X₁` started at `x`,
/// simulated by exponential Euler with step `h`. Standard error by a
/// 20-batch jackknife.
pub fn kde_oracle_density(
    model: &LinearModel,
    drift: &DriftSpec,
    x: &Vector,
    y: &Vector,
    n_paths: usize,
    bandwidth: f64,
    h: f64,
    stream: &Stream,
) -> Result<DensityEstimate> {
    let d = model.d;
    if d > 3 {
        return Err(Error::Dimension { expected: 3, got: d });
    }
    if !(bandwidth > 0.0) {
        return Err(Error::Domain("bandwidth must be positive".into()));
    }
    let samples = sample_marginals(model, drift, x.as_slice(), h, &[1.0], n_paths, &stream.substream("kde"))?
        .pop()
        .unwrap();
    let norm = (2.0 * std::f64::consts::PI).powf(-(d as f64) / 2.0) / bandwidth.powi(d as i32);
    let k: Vec<f64> = samples
        .iter()
        .map(|s| {
            let r2: f64 = s.iter().zip(y.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
            norm * (-0.5 * r2 / (bandwidth * bandwidth)).exp()
        })
        .collect();
    let value = pairwise_sum(&k) / n_paths as f64;
    let stderr = batch_jackknife(&k, 20);
    Ok(DensityEstimate {
        value,
        stderr,
        n_paths,
        reference: Reference::VsLebesgue,
        ess: n_paths as f64,
        degenerate: false,
        underflow: value == 0.0,
    })
}

/// Jackknife standard error of the mean over `batches` contiguous batches.
pub fn batch_jackknife(v: &[f64], batches: usize) -> f64 {
    let n = v.len();
    let b = batches.min(n).max(2);
    let total = pairwise_sum(v);
    let loo: Vec<f64> = (0..b)
        .map(|j| {
            let lo = j * n / b;
            let hi = (j + 1) * n / b;
            (total - pairwise_sum(&v[lo..hi])) / (n - (hi - lo)) as f64
        })
        .collect();
    let mean = loo.iter().sum::<f64>() / b as f64;
    let var = loo.iter().map(|t| (t - mean).powi(2)).sum::<f64>() * (b - 1) as f64 / b as f64;
    var.sqrt()
}
