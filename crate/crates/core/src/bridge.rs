//! Ornstein–Uhlenbeck bridge kernel on a time grid and two bridge samplers.
//!
//! Strategy A transforms an unconditioned OU path drawn with exact Gaussian
//! transitions: `Ẑ_t = Z_t − J_t Z_1`. Strategy B integrates the bridge SDE
//! (the Doob transform of the OU process towards `y`), by default with its
//! exact Gaussian transitions and optionally by Euler–Maruyama, and keeps the
//! driving increments, which the density functional needs.

use crate::error::{Error, Result};
use crate::linalg::{self, matvec, matvec_add, op_norm, Mat, PsdEigen, Vector};
use crate::linop::{Gramian, LinearModel, MAX_GRAMIAN_CONDITION};
use crate::rng::PathRng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub const DEFAULT_STEPS: usize = 512;
pub const DEFAULT_EPS_END: f64 = 1e-3;
/// Bridge-SDE states above this norm abort the path.
pub const BLOW_UP_NORM: f64 = 1e8;

/// Integrator for the bridge SDE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BridgeScheme {
    EulerMaruyama,
    /// Exact Gaussian transition of the linear bridge SDE, drawn jointly
    /// with its driving increment.
    #[default]
    Exact,
}

/// Nodes `0 = t_0 < … < t_{M−1} = 1 − eps_end < t_M = 1`; uniform up to
/// `1 − eps_end`, then a final short interval of length `eps_end`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub nodes: Vec<f64>,
    pub eps_end: f64,
}

impl TimeGrid {
    pub fn uniform(steps: usize, eps_end: f64) -> Result<Self> {
        if steps < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 steps, got {steps}")));
        }
        if !(eps_end > 0.0 && eps_end <= 0.1) {
            return Err(Error::InvalidGrid(format!(
                "eps_end must lie in (0, 0.1], got {eps_end}"
            )));
        }
        let last = 1.0 - eps_end;
        let mut nodes: Vec<f64> = (0..steps)
            .map(|i| last * i as f64 / (steps - 1) as f64)
            .collect();
        nodes[steps - 1] = last;
        nodes.push(1.0);
        Ok(Self { nodes, eps_end })
    }

    pub fn from_nodes(nodes: Vec<f64>, eps_end: f64) -> Result<Self> {
        let ok = nodes.len() >= 3
            && nodes[0] == 0.0
            && *nodes.last().unwrap() == 1.0
            && nodes.windows(2).all(|w| w[1] > w[0])
            && eps_end > 0.0
            && eps_end <= 0.1
            && nodes[nodes.len() - 2] <= 1.0 - eps_end + 1e-15;
        if !ok {
            return Err(Error::InvalidGrid(
                "nodes must increase strictly from 0 to 1 with the last interior node at most 1 - eps_end"
                    .into(),
            ));
        }
        Ok(Self { nodes, eps_end })
    }

    /// Number of steps `M`.
    pub fn steps(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn dt(&self, i: usize) -> f64 {
        self.nodes[i + 1] - self.nodes[i]
    }

    /// Index of the node closest to `t`.
    pub fn nearest(&self, t: f64) -> usize {
        let mut best = 0;
        for (i, &s) in self.nodes.iter().enumerate() {
            if (s - t).abs() < (self.nodes[best] - t).abs() {
                best = i;
            }
        }
        best
    }
}

/// Operators entering the drift of the bridge SDE and the density
/// correction at a node `t < 1`.
#[derive(Debug, Clone)]
pub struct DriftOps {
    /// `H_t = Q_{1−t}^{-1/2} S_{1−t} Q^{1/2}`.
    pub h: Mat,
    /// `B₁ = Q^{1/2} S_{1−t}ᵀ Q_{1−t}^{-1} S_{1−t}`.
    pub b1: Mat,
    /// `B₂ = Q^{1/2} S_{1−t}ᵀ Q₁^{-1} S₁`.
    pub b2: Mat,
    /// `B₃ = Q^{1/2} S_{1−t}ᵀ Q₁^{-1}`.
    pub b3: Mat,
    /// `C = Q^{1/2} S_{1−t}ᵀ Q_{1−t}^{-1}`; the bridge control is `C y − B₁ X`.
    pub c: Mat,
}

impl DriftOps {
    fn at(model: &LinearModel, q1_pinv: &Mat, s1: &Mat, t: f64) -> Result<Self> {
        let rem = 1.0 - t;
        let s_rem = model.semigroup(rem);
        let g_rem = model.gramian(rem);
        let cond = g_rem.condition();
        if g_rem.rank < model.d || cond > MAX_GRAMIAN_CONDITION {
            return Err(Error::Conditioning { t: rem, condition: cond });
        }
        let lead = &model.q_half * s_rem.transpose();
        let c = &lead * &g_rem.pinv;
        let b1 = &c * &s_rem;
        let b3 = &lead * q1_pinv;
        let b2 = &b3 * s1;
        let h = &g_rem.pinv_root * &s_rem * &model.q_half;
        Ok(Self { h, b1, b2, b3, c })
    }
}

/// Kernel data at one grid node.
#[derive(Debug, Clone)]
pub struct BridgeNode {
    pub t: f64,
    pub s_t: Mat,
    pub s_rem: Mat,
    pub gramian: Gramian,
    /// `V_t = Q₁^{-1/2} S_{1−t} Q_t^{1/2}`.
    pub v: Mat,
    /// `J_t = Q_t S_{1−t}ᵀ Q₁^{-1}`.
    pub j: Mat,
    /// `Q̂_t = Q_t^{1/2}(I − V_tᵀV_t)Q_t^{1/2}`.
    pub q_hat: Mat,
    /// `None` at `t = 1`.
    pub ops: Option<DriftOps>,
}

/// Bridge operators tabulated on a [`TimeGrid`].
#[derive(Debug, Clone)]
pub struct BridgeKernel {
    pub model: LinearModel,
    pub grid: TimeGrid,
    pub nodes: Vec<BridgeNode>,
    pub s1: Mat,
    pub q1: Gramian,
    /// Exact one-step transitions `(S_h, Q_h^{1/2})` per interval.
    pub steps: Vec<(Mat, Mat)>,
    /// Per-interval `(A − Q^{1/2}B₁, Q^{1/2}C)` for the Euler scheme.
    euler: Vec<(Mat, Mat)>,
    exact: Vec<ExactStep>,
    pub scheme: BridgeScheme,
}

/// `X_{t} | X_s, Δζ ~ N(P X_s + C y + Γ Δζ / h, R)` over one interval.
#[derive(Debug, Clone)]
struct ExactStep {
    p: Mat,
    c: Mat,
    gain: Mat,
    resid_root: Mat,
}

/// Transition operator `Ψ(t, s) = S_{t−s} − Q_{t−s} S_{1−t}ᵀ Q_{1−s}^{-1} S_{1−s}`
/// of the bridge dynamics and the `y` coefficient `Q_{t−s} S_{1−t}ᵀ Q_{1−s}^{-1}`.
fn bridge_flow(model: &LinearModel, s: f64, t: f64) -> (Mat, Mat, Mat) {
    let q_ts = model.gramian_matrix(t - s);
    let rem_inv = model.gramian(1.0 - s).pinv;
    let lead = &q_ts * model.semigroup(1.0 - t).transpose() * &rem_inv;
    let psi = model.semigroup(t - s) - &lead * model.semigroup(1.0 - s);
    let cov = &q_ts - &lead * model.semigroup(1.0 - t) * &q_ts;
    (psi, lead, linalg::symmetrize(&cov))
}

impl ExactStep {
    fn new(model: &LinearModel, s: f64, t: f64) -> Self {
        let h = t - s;
        let (p, c, cov) = bridge_flow(model, s, t);
        // Γ = ∫_s^t Ψ(t, u) Q^{1/2} du by composite Gauss–Legendre.
        let panels = 4;
        let w = h / panels as f64;
        let mut gamma = Mat::zeros(model.d, model.d);
        for k in 0..panels {
            let mid = s + (k as f64 + 0.5) * w;
            for &(x, wt) in linalg::GL8.iter() {
                let u = mid + 0.5 * w * x;
                let (psi, _, _) = bridge_flow(model, u, t);
                gamma += psi * (0.5 * w * wt);
            }
        }
        let gain = gamma * &model.q_half / h;
        let resid = &cov - &gain * gain.transpose() * h;
        Self {
            p,
            c,
            gain,
            resid_root: PsdEigen::new(&resid).sqrt(),
        }
    }
}

impl BridgeKernel {
    pub fn build(model: &LinearModel, grid: &TimeGrid) -> Result<Self> {
        let d = model.d;
        let kalman = model.kalman_strong_feller();
        if !kalman.strong_feller {
            return Err(Error::Singular {
                t: 1.0,
                rank: kalman.kalman_rank,
                dim: d,
            });
        }
        let s1 = model.semigroup(1.0);
        let q1 = model.gramian(1.0);
        q1.require_invertible(d)?;
        let eye = Mat::identity(d, d);
        let mut nodes = Vec::with_capacity(grid.nodes.len());
        for (i, &t) in grid.nodes.iter().enumerate() {
            let s_t = model.semigroup(t);
            let s_rem = model.semigroup(1.0 - t);
            let gramian = model.gramian(t);
            let v = &q1.pinv_root * &s_rem * &gramian.root;
            let j = &gramian.qt * s_rem.transpose() * &q1.pinv;
            let q_hat = linalg::symmetrize(&(&gramian.root * (&eye - v.transpose() * &v) * &gramian.root));
            let ops = if i + 1 < grid.nodes.len() {
                Some(DriftOps::at(model, &q1.pinv, &s1, t)?)
            } else {
                None
            };
            nodes.push(BridgeNode {
                t,
                s_t,
                s_rem,
                gramian,
                v,
                j,
                q_hat,
                ops,
            });
        }
        let mut steps = Vec::with_capacity(grid.steps());
        let mut euler = Vec::with_capacity(grid.steps());
        let mut exact = Vec::with_capacity(grid.steps());
        for i in 0..grid.steps() {
            let h = grid.dt(i);
            let root = PsdEigen::new(&model.gramian_matrix(h)).sqrt();
            steps.push((model.semigroup(h), root));
            let ops = nodes[i].ops.as_ref().expect("interior node");
            euler.push((&model.a - &model.q_half * &ops.b1, &model.q_half * &ops.c));
            if i + 1 < grid.steps() {
                exact.push(ExactStep::new(model, grid.nodes[i], grid.nodes[i + 1]));
            }
        }
        Ok(Self {
            model: model.clone(),
            grid: grid.clone(),
            nodes,
            s1,
            q1,
            steps,
            euler,
            exact,
            scheme: BridgeScheme::default(),
        })
    }

    pub fn with_scheme(mut self, scheme: BridgeScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn d(&self) -> usize {
        self.model.d
    }

    /// Mean `S_t x + J_t(y − S₁x)` and covariance `Q̂_t` of the bridge at
    /// node `i`.
    pub fn marginal(&self, i: usize, x: &Vector, y: &Vector) -> (Vector, Mat) {
        let n = &self.nodes[i];
        let mean = &n.s_t * x + &n.j * (y - &self.s1 * x);
        (mean, n.q_hat.clone())
    }

    /// `max_i ‖Q̂_t − (Q_t − J_t S_{1−t} Q_t)‖` over the grid.
    pub fn identity_residual(&self) -> f64 {
        self.nodes
            .iter()
            .map(|n| {
                let alt = &n.gramian.qt - &n.j * &n.s_rem * &n.gramian.qt;
                (&n.q_hat - alt).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `(t, ‖V_t‖)` at interior nodes `0 < t ≤ 1 − eps_end`, with a flag for
    /// any norm `≥ 1`.
    pub fn v_norm_profile(&self) -> VNormProfile {
        let last = 1.0 - self.grid.eps_end + 1e-15;
        let points: Vec<(f64, f64)> = self
            .nodes
            .iter()
            .filter(|n| n.t > 0.0 && n.t <= last)
            .map(|n| (n.t, op_norm(&n.v)))
            .collect();
        let violations = points.iter().filter(|p| p.1 >= 1.0).count();
        VNormProfile { points, violations }
    }

    pub fn q_hat_traces(&self) -> Vec<(f64, f64)> {
        self.nodes.iter().map(|n| (n.t, n.q_hat.trace())).collect()
    }

    /// Strategy A: centered bridge `Ẑ_t = Z_t − J_t Z_1` at every node,
    /// written row-wise into `out` (`(M+1)·d` entries). `z` is scratch of
    /// the same size.
    pub fn sample_centered_into(&self, rng: &mut PathRng, z: &mut [f64], out: &mut [f64]) {
        let d = self.d();
        let m = self.grid.steps();
        let mut xi = [0.0f64; 64];
        let mut xi_heap;
        let xi: &mut [f64] = if d <= 64 {
            &mut xi[..d]
        } else {
            xi_heap = vec![0.0; d];
            &mut xi_heap
        };
        z[..d].iter_mut().for_each(|v| *v = 0.0);
        for i in 0..m {
            let (s_h, root) = &self.steps[i];
            let (prev, next) = z.split_at_mut((i + 1) * d);
            let prev = &prev[i * d..];
            let next = &mut next[..d];
            for v in xi.iter_mut() {
                *v = StandardNormal.sample(rng);
            }
            matvec(s_h, prev, next);
            matvec_add(root, xi, next);
        }
        let z1 = &z[m * d..(m + 1) * d];
        for (i, node) in self.nodes.iter().enumerate() {
            let o = &mut out[i * d..(i + 1) * d];
            matvec(&node.j, z1, o);
            for k in 0..d {
                o[k] = z[i * d + k] - o[k];
            }
        }
        // J_1 is the identity on the range of Q₁, which is all of ℝ^d here.
        out[m * d..].iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn sample_centered_path(&self, rng: &mut PathRng) -> Vec<Vector> {
        let d = self.d();
        let n = self.grid.nodes.len();
        let mut z = vec![0.0; n * d];
        let mut out = vec![0.0; n * d];
        self.sample_centered_into(rng, &mut z, &mut out);
        out.chunks(d).map(Vector::from_column_slice).collect()
    }

    /// Strategy B: the configured scheme for
    /// `dX = (A X + Q^{1/2}(C_t y − B₁(t) X)) dt + Q^{1/2} dζ` from `x` up to
    /// `1 − eps_end`; the final node is set to `y`. States go to `states`
    /// (`(M+1)·d`), the increments `Δζ_i` to `incs` (`M·d`, including the
    /// final interval so that functionals can use them).
    pub fn sample_sde_into(
        &self,
        rng: &mut PathRng,
        x: &[f64],
        y: &[f64],
        states: &mut [f64],
        incs: &mut [f64],
    ) -> Result<()> {
        let d = self.d();
        let m = self.grid.steps();
        let mut buf = [0.0f64; 128];
        let mut heap;
        let (drift, noise): (&mut [f64], &mut [f64]) = if d <= 64 {
            let (a, b) = buf.split_at_mut(64);
            (&mut a[..d], &mut b[..d])
        } else {
            heap = vec![0.0; 2 * d];
            heap.split_at_mut(d)
        };
        states[..d].copy_from_slice(x);
        for i in 0..m {
            let h = self.grid.dt(i);
            let sq = h.sqrt();
            let inc = &mut incs[i * d..(i + 1) * d];
            for v in inc.iter_mut() {
                let z: f64 = StandardNormal.sample(rng);
                *v = sq * z;
            }
            let (prev, next) = states.split_at_mut((i + 1) * d);
            let prev = &prev[i * d..];
            let next = &mut next[..d];
            if i + 1 == m {
                next.copy_from_slice(y);
                break;
            }
            let mut nrm = 0.0;
            match self.scheme {
                BridgeScheme::EulerMaruyama => {
                    let (a_eff, c_eff) = &self.euler[i];
                    matvec(a_eff, prev, drift);
                    matvec_add(c_eff, y, drift);
                    matvec(&self.model.q_half, inc, noise);
                    for k in 0..d {
                        next[k] = prev[k] + drift[k] * h + noise[k];
                        nrm += next[k] * next[k];
                    }
                }
                BridgeScheme::Exact => {
                    let ex = &self.exact[i];
                    for v in noise.iter_mut() {
                        *v = StandardNormal.sample(rng);
                    }
                    matvec(&ex.p, prev, next);
                    matvec_add(&ex.c, y, next);
                    matvec_add(&ex.gain, inc, next);
                    matvec_add(&ex.resid_root, noise, next);
                    nrm = linalg::dot(next, next);
                }
            }
            if !(nrm.sqrt() <= BLOW_UP_NORM) {
                return Err(Error::BlowUp {
                    t: self.grid.nodes[i + 1],
                    norm: nrm.sqrt(),
                });
            }
        }
        Ok(())
    }

    pub fn sample_sde_path(&self, rng: &mut PathRng, x: &Vector, y: &Vector) -> Result<BridgePath> {
        let d = self.d();
        let m = self.grid.steps();
        let mut states = vec![0.0; (m + 1) * d];
        let mut incs = vec![0.0; m * d];
        self.sample_sde_into(rng, x.as_slice(), y.as_slice(), &mut states, &mut incs)?;
        Ok(BridgePath {
            grid: self.grid.clone(),
            states: states.chunks(d).map(Vector::from_column_slice).collect(),
            noise_increments: incs.chunks(d).map(Vector::from_column_slice).collect(),
            x: x.clone(),
            y: y.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VNormProfile {
    pub points: Vec<(f64, f64)>,
    pub violations: usize,
}

#[derive(Debug, Clone)]
pub struct BridgePath {
    pub grid: TimeGrid,
    pub states: Vec<Vector>,
    pub noise_increments: Vec<Vector>,
    pub x: Vector,
    pub y: Vector,
}
