//! Explicit lower bound on the transition density against `μ₁` and the
//! small-set constant `δ` it induces.
//!
//! With `X = |x|`, `Lm(n) = L(n)(1 + Xⁿ + U(y)ⁿ)` and `b(x) = |Q₁^{-1/2}S₁x|`
//! (an upper bound of `∫|B₂(s)x| ds`), the exponent is
//!
//! ```text
//! −K²[1 + Lm(2m)] − K c_B1 − K b(x) − K U₁(y) − K Lm(m)(b(x) + U₁(y))
//!   − K √Lm(2m) c_B1 − X U₂(y) − ½‖Q₁^{-1/2}S₁‖² X²
//! ```
//!
//! where the cross term `E[sup|Ẑ^{x,y}|^m ∫|B₁Ẑ|]` is bounded by
//! Cauchy–Schwarz and `E(∫|B₁Ẑ|)² ≤ c_B1²` by Minkowski.

use crate::bridge::{BridgeKernel, TimeGrid};
use crate::drift::DriftSpec;
use crate::error::{Error, Result};
use crate::linalg::{self, op_norm, Mat, Vector};
use crate::linop::LinearModel;
use crate::logscale::LogPos;
use crate::rng::{mean_stderr, Stream};
use crate::stats::z_one_sided;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub const DEFAULT_ETA: f64 = 0.05;
pub const DEFAULT_CONFIDENCE: f64 = 0.99;

/// `(U(y), U₁(y), U₂(y))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YFunctionals {
    pub u: f64,
    pub u1: f64,
    pub u2: f64,
}

/// Grid-based `y` functionals: `U = max_i |J_{t_i} y|`,
/// `U₁ = Σ |B₃(t_i) y| Δt_i`, `U₂ = |S₁ᵀ Q₁^{-1} y|`.
pub fn y_functionals(kernel: &BridgeKernel, y: &Vector) -> YFunctionals {
    let u = kernel
        .nodes
        .iter()
        .map(|n| (&n.j * y).norm())
        .fold(0.0, f64::max);
    let u1 = (0..kernel.grid.steps())
        .map(|i| (&kernel.nodes[i].ops.as_ref().unwrap().b3 * y).norm() * kernel.grid.dt(i))
        .sum();
    let u2 = (kernel.s1.transpose() * &kernel.q1.pinv * y).norm();
    YFunctionals { u, u1, u2 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEntry {
    pub n: f64,
    /// Upper confidence bound on `E sup_t |Ẑ_t|ⁿ`.
    pub sup_moment_ucb: f64,
    pub sup_moment_estimate: f64,
    pub sup_moment_stderr: f64,
    /// `L(n)` with `E sup|Ẑ^{x,y}|ⁿ ≤ L(n)(1 + |x|ⁿ + U(y)ⁿ)`.
    pub l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub entries: Vec<MomentEntry>,
    /// `∫₀¹ √tr(B₁ Q̂ B₁ᵀ) ds ≥ E ∫₀¹ |B₁(s)Ẑ_s| ds`.
    pub c_b1: f64,
    /// Bound on `E(∫₀¹ |B₁(s)Ẑ_s| ds)²`.
    pub c_b1_sq: f64,
    /// `max_t ‖S_t − J_t S₁‖`.
    pub c_s: f64,
    pub confidence: f64,
    pub n_paths: usize,
}

impl MomentReport {
    pub fn l(&self, n: f64) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| (e.n - n).abs() < 1e-12)
            .map(|e| e.l)
    }
}

/// Integrand `√tr(B₁(s) Q̂_s B₁(s)ᵀ)` with `τ = 1 − s`, evaluated through
/// `tr(Q^{1/2} S_τᵀ (Q_τ^{-1} − Q₁^{-1}) S_τ Q^{1/2})`.
fn b1_spread(model: &LinearModel, q1_pinv: &Mat, tau: f64) -> Option<f64> {
    let g = model.gramian(tau);
    if g.rank < model.d || g.condition() > 1e9 {
        return None;
    }
    let m = model.semigroup(tau) * &model.q_half;
    let tr = (m.transpose() * (&g.pinv - q1_pinv) * &m).trace();
    Some(tr.max(0.0).sqrt())
}

/// `∫₀¹ √tr(B₁ Q̂ B₁ᵀ) ds` by Gauss–Legendre in `u = √(1 − s)`, which makes
/// the integrand bounded. Below the smallest well-conditioned `u` the tail
/// is bounded by twice the rectangle at that point.
pub fn c_b1_integral(model: &LinearModel, q1_pinv: &Mat) -> f64 {
    let f = |u: f64| b1_spread(model, q1_pinv, u * u).map(|v| 2.0 * u * v);
    let mut u_min = 1e-4;
    while f(u_min).is_none() && u_min < 0.5 {
        u_min *= 2.0;
    }
    let tail = 2.0 * u_min * f(u_min).unwrap_or(0.0).max(f(2.0 * u_min).unwrap_or(0.0));
    let body = linalg::gauss_legendre(|u| f(u).unwrap_or(0.0), u_min, 1.0, 64);
    body + tail
}

/// Moment constants of the centered bridge, by Monte Carlo over strategy-A
/// paths for the `sup` moments and by quadrature for `c_B1`.
pub fn bridge_moment_constants(
    kernel: &BridgeKernel,
    orders: &[f64],
    n_paths: usize,
    confidence: f64,
    stream: &Stream,
) -> Result<MomentReport> {
    if n_paths < 1000 {
        return Err(Error::Budget(format!(
            "bridge moments need at least 1000 paths, got {n_paths}"
        )));
    }
    if !(confidence > 0.5 && confidence < 1.0) {
        return Err(Error::Domain(format!("confidence must lie in (0.5, 1), got {confidence}")));
    }
    let d = kernel.d();
    let npts = kernel.grid.nodes.len();
    let s = stream.substream("bridge-moments");
    let sups: Vec<f64> = s.map_paths(n_paths, |_, rng| {
        let mut z = vec![0.0; npts * d];
        let mut out = vec![0.0; npts * d];
        kernel.sample_centered_into(rng, &mut z, &mut out);
        out.chunks(d).map(linalg::norm).fold(0.0, f64::max)
    });
    let z = z_one_sided(confidence);
    let c_s = kernel
        .nodes
        .iter()
        .map(|n| op_norm(&(&n.s_t - &n.j * &kernel.s1)))
        .fold(0.0, f64::max);
    let entries = orders
        .iter()
        .map(|&n| {
            let pow: Vec<f64> = sups.iter().map(|v| v.powf(n)).collect();
            let (mean, se) = mean_stderr(&pow);
            let ucb = mean + z * se;
            let l = 3f64.powf(n - 1.0).max(1.0) * ucb.max(c_s.powf(n)).max(1.0);
            MomentEntry {
                n,
                sup_moment_ucb: ucb,
                sup_moment_estimate: mean,
                sup_moment_stderr: se,
                l,
            }
        })
        .collect();
    let c_b1 = c_b1_integral(&kernel.model, &kernel.q1.pinv);
    Ok(MomentReport {
        entries,
        c_b1,
        c_b1_sq: c_b1 * c_b1,
        c_s,
        confidence,
        n_paths,
    })
}

/// Evaluable pointwise lower bound `ℓ(x, y) = exp(exponent(x, y))`.
#[derive(Debug, Clone)]
pub struct LowerBoundModel {
    pub k: f64,
    pub m: f64,
    pub l_m: f64,
    pub l_2m: f64,
    pub c_b1: f64,
    /// `‖Q₁^{-1/2} S₁‖`.
    pub a_b: f64,
    pub kernel: BridgeKernel,
    q1_pinv_root_s1: Mat,
    pub confidence: f64,
}

/// Terms of the exponent, all nonnegative; the exponent is their negated sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentInputs {
    pub x_norm: f64,
    /// `|Q₁^{-1/2} S₁ x|` (or an upper bound).
    pub b2_int: f64,
    pub y: YFunctionals,
}

impl LowerBoundModel {
    pub fn new(report: &MomentReport, kernel: &BridgeKernel, drift: &DriftSpec) -> Result<Self> {
        let m = drift.growth.m;
        let l_m = report.l(m).ok_or(Error::MissingConstant("L(m)"))?;
        let l_2m = report.l(2.0 * m).ok_or(Error::MissingConstant("L(2m)"))?;
        let q1_pinv_root_s1 = &kernel.q1.pinv_root * &kernel.s1;
        Ok(Self {
            k: drift.growth.k,
            m,
            l_m,
            l_2m,
            c_b1: report.c_b1,
            a_b: op_norm(&q1_pinv_root_s1),
            kernel: kernel.clone(),
            q1_pinv_root_s1,
            confidence: report.confidence,
        })
    }

    /// `p = max(2, 2m)`.
    pub fn p(&self) -> f64 {
        (2.0 * self.m).max(2.0)
    }

    pub fn exponent_from(&self, e: &ExponentInputs) -> f64 {
        let (k, m) = (self.k, self.m);
        let xn = e.x_norm;
        let YFunctionals { u, u1, u2 } = e.y;
        let lm = self.l_m * (1.0 + xn.powf(m) + u.powf(m));
        let l2m = self.l_2m * (1.0 + xn.powf(2.0 * m) + u.powf(2.0 * m));
        -(k * k * (1.0 + l2m)
            + k * self.c_b1
            + k * e.b2_int
            + k * u1
            + k * lm * (e.b2_int + u1)
            + k * l2m.sqrt() * self.c_b1
            + xn * u2
            + 0.5 * self.a_b * self.a_b * xn * xn)
    }

    pub fn exponent(&self, x: &Vector, y: &Vector) -> f64 {
        self.exponent_from(&ExponentInputs {
            x_norm: x.norm(),
            b2_int: (&self.q1_pinv_root_s1 * x).norm(),
            y: y_functionals(&self.kernel, y),
        })
    }

    /// Lower bound of the exponent over `|x| ≤ R` (all terms are monotone in
    /// `|x|` and `b(x) ≤ ‖Q₁^{-1/2}S₁‖ |x|`).
    pub fn exponent_inf_ball(&self, radius: f64, y: &YFunctionals) -> f64 {
        self.exponent_from(&ExponentInputs {
            x_norm: radius,
            b2_int: self.a_b * radius,
            y: *y,
        })
    }

    /// Linear bounds `U ≤ a_U|y|`, `U₁ ≤ a₁|y|`, `U₂ ≤ a₂|y|`.
    pub fn y_slopes(&self) -> (f64, f64, f64) {
        let k = &self.kernel;
        let a_u = k.nodes.iter().map(|n| op_norm(&n.j)).fold(0.0, f64::max);
        let a_1 = (0..k.grid.steps())
            .map(|i| op_norm(&k.nodes[i].ops.as_ref().unwrap().b3) * k.grid.dt(i))
            .sum();
        let a_2 = op_norm(&(k.s1.transpose() * &k.q1.pinv));
        (a_u, a_1, a_2)
    }
}

/// `b₁ exp(−b₂|x|^p − b₃|y|^p)` with `b₁` carried in log form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PackagedBound {
    pub b1: LogPos,
    pub b2: f64,
    pub b3: f64,
    pub p: f64,
    pub eta: f64,
}

impl PackagedBound {
    pub fn ln_value(&self, x_norm: f64, y_norm: f64) -> f64 {
        self.b1.ln() - self.b2 * x_norm.powf(self.p) - self.b3 * y_norm.powf(self.p)
    }
}

/// Monomial `c Xⁱ Yʲ` of the polynomial bounding the negated exponent.
#[derive(Debug, Clone, Copy)]
struct Monomial {
    c: f64,
    i: f64,
    j: f64,
}

fn monomials(lbm: &LowerBoundModel) -> Vec<Monomial> {
    let (a_u, a_1, a_2) = lbm.y_slopes();
    let (k, m, a_b) = (lbm.k, lbm.m, lbm.a_b);
    let mut out = Vec::new();
    let mut push = |c: f64, i: f64, j: f64| {
        if c > 0.0 {
            out.push(Monomial { c, i, j })
        }
    };
    // K²[1 + L(2m)(1 + X^{2m} + a_U^{2m} Y^{2m})]
    push(k * k * (1.0 + lbm.l_2m), 0.0, 0.0);
    push(k * k * lbm.l_2m, 2.0 * m, 0.0);
    push(k * k * lbm.l_2m * a_u.powf(2.0 * m), 0.0, 2.0 * m);
    // K c_B1 + K a_b X + K a₁ Y
    push(k * lbm.c_b1, 0.0, 0.0);
    push(k * a_b, 1.0, 0.0);
    push(k * a_1, 0.0, 1.0);
    // K L(m)(1 + X^m + a_U^m Y^m)(a_b X + a₁ Y)
    let lm_terms = [(1.0, 0.0, 0.0), (1.0, m, 0.0), (a_u.powf(m), 0.0, m)];
    for &(c, i, j) in &lm_terms {
        push(k * lbm.l_m * c * a_b, i + 1.0, j);
        push(k * lbm.l_m * c * a_1, i, j + 1.0);
    }
    // K c_B1 √L(2m) (1 + X^m + a_U^m Y^m), using √(a+b+c) ≤ √a+√b+√c.
    let s = k * lbm.c_b1 * lbm.l_2m.sqrt();
    push(s, 0.0, 0.0);
    push(s, m, 0.0);
    push(s * a_u.powf(m), 0.0, m);
    // a₂ X Y + ½ a_b² X²
    push(a_2, 1.0, 1.0);
    push(0.5 * a_b * a_b, 2.0, 0.0);
    out
}

/// Packages the exponent into `(b₁, b₂, b₃, p)` by Young splitting with
/// parameter `η`, then checks `packaged ≤ pointwise` on a 21×21 grid over
/// `[−3, 3]²` (along `e₁` and the diagonal direction when `d > 1`).
pub fn packaged_bound(lbm: &LowerBoundModel, eta: f64) -> Result<PackagedBound> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Domain(format!("eta must lie in (0, 1), got {eta}")));
    }
    let p = lbm.p();
    let mut b2 = 0.0;
    let mut b3 = 0.0;
    let mut constant = 0.0;
    let mut x_pows: Vec<(f64, f64)> = Vec::new();
    let mut y_pows: Vec<(f64, f64)> = Vec::new();
    for mono in monomials(lbm) {
        let Monomial { c, i, j } = mono;
        if i > 0.0 && j > 0.0 {
            // c XⁱYʲ ≤ η X^q + β Y^q, q = i + j, by weighted Young.
            let q = i + j;
            let sq = eta * q / (c * i);
            let beta = c * (j / q) * sq.powf(-i / j);
            x_pows.push((eta, q));
            y_pows.push((beta, q));
        } else if i > 0.0 {
            x_pows.push((c, i));
        } else if j > 0.0 {
            y_pows.push((c, j));
        } else {
            constant += c;
        }
    }
    let mut absorb = |pows: &[(f64, f64)], lead: &mut f64| {
        for &(c, q) in pows {
            if (q - p).abs() < 1e-12 {
                *lead += c;
            } else if q < p {
                // c X^q ≤ η X^p + c X*^q (1 − q/p) with X* = (cq/(ηp))^{1/(p−q)}.
                let xs = (c * q / (eta * p)).powf(1.0 / (p - q));
                constant += c * xs.powf(q) * (1.0 - q / p);
                *lead += eta;
            } else {
                unreachable!("monomial degree {q} exceeds p = {p}");
            }
        }
    };
    absorb(&x_pows, &mut b2);
    absorb(&y_pows, &mut b3);
    let pb = PackagedBound {
        b1: LogPos::from_ln(-constant),
        b2,
        b3,
        p,
        eta,
    };
    verify_packaged(lbm, &pb)?;
    Ok(pb)
}

fn verify_packaged(lbm: &LowerBoundModel, pb: &PackagedBound) -> Result<()> {
    let d = lbm.kernel.d();
    let mut dirs = vec![Vector::from_fn(d, |i, _| if i == 0 { 1.0 } else { 0.0 })];
    if d > 1 {
        dirs.push(Vector::from_element(d, 1.0 / (d as f64).sqrt()));
    }
    for dx in &dirs {
        for dy in &dirs {
            for a in 0..21 {
                for b in 0..21 {
                    let xs = -3.0 + 0.3 * a as f64;
                    let ys = -3.0 + 0.3 * b as f64;
                    let x = dx * xs;
                    let y = dy * ys;
                    let point = lbm.exponent(&x, &y);
                    let pack = pb.ln_value(xs.abs(), ys.abs());
                    if pack > point + 1e-9 * point.abs().max(1.0) {
                        return Err(Error::PackagedVerification {
                            x: xs,
                            y: ys,
                            excess: pack - point,
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DeltaMode {
    /// Infimum of the pointwise bound over the ball, integrated against `μ₁`.
    #[default]
    Pointwise,
    /// `½ b₁ e^{−b₂R^p} E[1_{B_r} e^{−b₃|y|^p}]`.
    Packaged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub delta: LogPos,
    pub mode: DeltaMode,
    pub radius_x: f64,
    /// `None` for `r = ∞`.
    pub radius_y: Option<f64>,
    /// Monte-Carlo mean of the integrand, relative to `exp(ln_scale)`.
    pub mc_mean_scaled: f64,
    pub mc_stderr_scaled: f64,
    pub ln_scale: f64,
    pub n_mc: usize,
    pub retained: usize,
    pub confidence: f64,
    /// Neither certified lower bound was positive.
    pub vacuous: bool,
    pub method: DeltaMethod,
    /// Radius of the `y`-ball used by [`DeltaMethod::Ball`].
    pub ball_radius: Option<f64>,
}

/// Which certified lower bound of the `μ₁`-integral produced `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaMethod {
    /// Lower confidence bound of the plain Monte-Carlo mean.
    MonteCarlo,
    /// `P(|y| ≤ ρ)` (lower confidence bound) times the infimum of the
    /// integrand over that ball, from `U ≤ a_U|y|`, `U₁ ≤ a₁|y|`, `U₂ ≤ a₂|y|`.
    Ball,
    Vacuous,
}

/// Ball radii for [`DeltaMethod::Ball`], in units of `√λ_max(Q₁)`.
const BALL_FRACTIONS: [f64; 12] = [0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0];

/// Samples of `μ₁` with the self-normalized minorizing-measure weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MinorizingMeasure {
    pub samples: Vec<Vector>,
    pub weights: Vec<f64>,
}

/// `δ = ½ · LCB(E_{y∼μ₁}[1_{|y|≤r} inf_{|x|≤R} ℓ(x, y)])`, taking the
/// larger of the direct Monte-Carlo bound and the ball bound, each at half
/// the error budget.
#[allow(clippy::too_many_arguments)]
pub fn delta_small_set(
    lbm: &LowerBoundModel,
    packaged: Option<&PackagedBound>,
    mode: DeltaMode,
    radius_x: f64,
    radius_y: Option<f64>,
    n_mc: usize,
    confidence: f64,
    stream: &Stream,
) -> Result<(DeltaReport, MinorizingMeasure)> {
    if !(radius_x > 0.0) || radius_y.is_some_and(|r| !(r > 0.0)) {
        return Err(Error::Domain("small-set radii must be positive".into()));
    }
    if n_mc < 100 {
        return Err(Error::Budget(format!("delta needs at least 100 samples, got {n_mc}")));
    }
    let pb = match mode {
        DeltaMode::Packaged => Some(packaged.ok_or(Error::MissingConstant("packaged bound"))?),
        DeltaMode::Pointwise => None,
    };
    let kernel = &lbm.kernel;
    let d = kernel.d();
    let root = kernel.q1.root.clone();
    let s = stream.substream("delta");
    let draws: Vec<(Vector, f64)> = s.map_paths(n_mc, |_, rng| {
        let xi = Vector::from_fn(d, |_, _| StandardNormal.sample(rng));
        let y = &root * xi;
        let yn = y.norm();
        let ln = if radius_y.is_some_and(|r| yn > r) {
            f64::NEG_INFINITY
        } else {
            match pb {
                Some(pb) => -pb.b3 * yn.powf(pb.p),
                None => lbm.exponent_inf_ball(radius_x, &y_functionals(kernel, &y)),
            }
        };
        (y, ln)
    });
    let ln_scale = draws.iter().map(|d| d.1).fold(f64::NEG_INFINITY, f64::max);
    let retained = draws.iter().filter(|d| d.1 > f64::NEG_INFINITY).count();
    let scaled: Vec<f64> = draws
        .iter()
        .map(|d| if ln_scale.is_finite() { (d.1 - ln_scale).exp() } else { 0.0 })
        .collect();
    // The direct estimate and the ball candidates share the error budget.
    let alpha = 1.0 - confidence;
    let (mean, se) = mean_stderr(&scaled);
    let lcb = mean - z_one_sided(1.0 - alpha / 2.0) * se;
    let prefactor = match pb {
        Some(pb) => pb.b1.ln() - pb.b2 * radius_x.powf(pb.p),
        None => 0.0,
    };
    let ln_mc = if lcb > 0.0 && ln_scale.is_finite() {
        ln_scale + lcb.ln()
    } else {
        f64::NEG_INFINITY
    };
    let (a_u, a_1, a_2) = lbm.y_slopes();
    let ln_inf_on_ball = |rho: f64| match pb {
        Some(pb) => -pb.b3 * rho.powf(pb.p),
        None => lbm.exponent_from(&ExponentInputs {
            x_norm: radius_x,
            b2_int: lbm.a_b * radius_x,
            y: YFunctionals {
                u: a_u * rho,
                u1: a_1 * rho,
                u2: a_2 * rho,
            },
        }),
    };
    let sigma = kernel.q1.eigen.max().sqrt();
    let candidates: Vec<f64> = BALL_FRACTIONS
        .iter()
        .map(|f| f * sigma)
        .filter(|&rho| radius_y.is_none_or(|r| rho < r))
        .collect();
    let z_ball = z_one_sided(1.0 - alpha / (2.0 * candidates.len().max(1) as f64));
    let mut ln_ball = f64::NEG_INFINITY;
    let mut ball_radius = None;
    for &rho in &candidates {
        let inside = draws.iter().filter(|d| d.0.norm() <= rho).count() as f64 / n_mc as f64;
        let p_lcb = inside - z_ball * (inside * (1.0 - inside) / n_mc as f64).sqrt();
        if p_lcb > 0.0 {
            let v = p_lcb.ln() + ln_inf_on_ball(rho);
            if v > ln_ball {
                ln_ball = v;
                ball_radius = Some(rho);
            }
        }
    }
    let best = ln_mc.max(ln_ball);
    let vacuous = best == f64::NEG_INFINITY;
    let delta = if vacuous {
        LogPos::ZERO
    } else {
        LogPos::from_ln(0.5f64.ln() + prefactor + best)
    };
    let method = if vacuous {
        DeltaMethod::Vacuous
    } else if ln_mc >= ln_ball {
        DeltaMethod::MonteCarlo
    } else {
        DeltaMethod::Ball
    };
    let total: f64 = scaled.iter().sum();
    let (samples, weights): (Vec<Vector>, Vec<f64>) = draws
        .into_iter()
        .zip(&scaled)
        .filter(|(_, &w)| w > 0.0)
        .map(|((y, _), &w)| (y, w / total))
        .unzip();
    Ok((
        DeltaReport {
            delta,
            mode,
            radius_x,
            radius_y,
            mc_mean_scaled: mean,
            mc_stderr_scaled: se,
            ln_scale: ln_scale + prefactor,
            n_mc,
            retained,
            confidence,
            vacuous,
            method,
            ball_radius,
        },
        MinorizingMeasure { samples, weights },
    ))
}

/// Kernel, moments and pointwise model in one call.
pub fn build_lower_bound(
    model: &LinearModel,
    drift: &DriftSpec,
    grid: &TimeGrid,
    n_paths: usize,
    confidence: f64,
    stream: &Stream,
) -> Result<(MomentReport, LowerBoundModel)> {
    drift.validate(model.d)?;
    let kernel = BridgeKernel::build(model, grid)?;
    let m = drift.growth.m;
    let report = bridge_moment_constants(&kernel, &[m, 2.0 * m], n_paths, confidence, stream)?;
    let lbm = LowerBoundModel::new(&report, &kernel, drift)?;
    Ok((report, lbm))
}
