//! Linear Ornstein–Uhlenbeck machinery: semigroup, Gramians, regularity
//! diagnostics, stationary moments and the Cameron–Martin density.

use crate::error::{Error, Result};
use crate::linalg::{self, expm, gauss_legendre, symmetrize, Mat, PsdEigen, Vector, GL8};
use crate::rng::{mean_stderr, Stream};
use crate::stats::z_one_sided;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Real parts of eigenvalues of `A` must be below `-STABILITY_MARGIN`.
pub const STABILITY_MARGIN: f64 = 1e-10;

/// Condition number above which a Gramian of full Kalman rank is treated as
/// numerically singular.
pub const MAX_GRAMIAN_CONDITION: f64 = 1e11;

/// The linear part `dZ = A Z dt + Q^{1/2} dW`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub d: usize,
    pub a: Mat,
    pub q: Mat,
    pub q_half: Mat,
}

fn check_finite(m: &Mat, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidModel(format!("{what} has non-finite entries")))
    }
}

impl LinearModel {
    /// Model from a covariance `Q`; the symmetric square root is computed.
    pub fn from_q(a: Mat, q: Mat) -> Result<Self> {
        let d = a.nrows();
        if d == 0 || a.ncols() != d {
            return Err(Error::InvalidModel(format!(
                "A must be square and nonempty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if q.shape() != (d, d) {
            return Err(Error::InvalidModel(format!(
                "Q must be {d}x{d}, got {}x{}",
                q.nrows(),
                q.ncols()
            )));
        }
        check_finite(&a, "A")?;
        check_finite(&q, "Q")?;
        let scale = q.norm().max(1.0);
        if (&q - q.transpose()).norm() > 1e-10 * scale {
            return Err(Error::InvalidModel("Q is not symmetric".into()));
        }
        let eig = PsdEigen::new(&q);
        if eig.min() < -1e-10 * scale {
            return Err(Error::InvalidModel(format!(
                "Q is not positive semidefinite (smallest eigenvalue {:.3e})",
                eig.min()
            )));
        }
        let q = symmetrize(&q);
        let q_half = eig.sqrt();
        Ok(Self { d, a, q, q_half })
    }

    /// Model from a noise factor `B` with `Q = B Bᵀ`. A symmetric psd `B` is
    /// kept as the square root verbatim.
    pub fn from_q_half(a: Mat, b: Mat) -> Result<Self> {
        let d = a.nrows();
        if b.nrows() != d {
            return Err(Error::InvalidModel(format!(
                "Qhalf must have {d} rows, got {}",
                b.nrows()
            )));
        }
        check_finite(&b, "Qhalf")?;
        let q = symmetrize(&(&b * b.transpose()));
        let mut m = Self::from_q(a, q)?;
        if b.ncols() == d && (&b - b.transpose()).norm() <= 1e-14 * b.norm().max(1.0) {
            let e = PsdEigen::new(&b);
            if e.min() >= 0.0 {
                m.q_half = b;
            }
        }
        Ok(m)
    }

    pub fn scalar(a: f64, q: f64) -> Result<Self> {
        Self::from_q(Mat::from_element(1, 1, a), Mat::from_element(1, 1, q))
    }

    /// `S_t = e^{tA}`.
    pub fn semigroup(&self, t: f64) -> Mat {
        expm(&(&self.a * t))
    }

    /// `Q_t` by the augmented-block exponential: with
    /// `C = [[-A, Q], [0, Aᵀ]] t`, `exp(C) = [[·, F12], [0, F22]]` and
    /// `Q_t = F22ᵀ F12`.
    pub fn gramian_matrix(&self, t: f64) -> Mat {
        let d = self.d;
        if t == 0.0 {
            return Mat::zeros(d, d);
        }
        let mut c = Mat::zeros(2 * d, 2 * d);
        c.view_mut((0, 0), (d, d)).copy_from(&(-&self.a * t));
        c.view_mut((0, d), (d, d)).copy_from(&(&self.q * t));
        c.view_mut((d, d), (d, d)).copy_from(&(self.a.transpose() * t));
        let e = expm(&c);
        let f12 = e.view((0, d), (d, d)).into_owned();
        let f22 = e.view((d, d), (d, d)).into_owned();
        symmetrize(&(f22.transpose() * f12))
    }

    /// `Q_t` by composite Gauss–Legendre quadrature of `S_s Q S_sᵀ`, with
    /// panel doubling until successive values agree to `rtol`.
    pub fn gramian_quadrature(&self, t: f64, rtol: f64) -> Mat {
        let d = self.d;
        if t == 0.0 {
            return Mat::zeros(d, d);
        }
        let integrate = |panels: usize| -> Mat {
            let h = t / panels as f64;
            let mut acc = Mat::zeros(d, d);
            for p in 0..panels {
                let mid = (p as f64 + 0.5) * h;
                for &(x, w) in GL8.iter() {
                    let s = self.semigroup(mid + 0.5 * h * x);
                    acc += (&s * &self.q * s.transpose()) * w;
                }
            }
            acc * (0.5 * h)
        };
        let mut panels = 1;
        let mut prev = integrate(panels);
        while panels < 1 << 12 {
            panels *= 2;
            let next = integrate(panels);
            let done = (&next - &prev).norm() <= rtol * next.norm().max(f64::MIN_POSITIVE);
            prev = next;
            if done {
                break;
            }
        }
        symmetrize(&prev)
    }

    pub fn gramian(&self, t: f64) -> Gramian {
        Gramian::from_matrix(t, self.gramian_matrix(t))
    }

    /// `Φ₁(h) = ∫₀ʰ S_u du`, the top-right block of `exp([[A, I], [0, 0]] h)`.
    pub fn phi1(&self, h: f64) -> Mat {
        let d = self.d;
        let mut c = Mat::zeros(2 * d, 2 * d);
        c.view_mut((0, 0), (d, d)).copy_from(&(&self.a * h));
        c.view_mut((0, d), (d, d)).copy_from(&(Mat::identity(d, d) * h));
        expm(&c).view((0, d), (d, d)).into_owned()
    }

    pub fn kalman_strong_feller(&self) -> KalmanReport {
        let d = self.d;
        let mut blocks = Mat::zeros(d, d * d);
        let mut power = self.q_half.clone();
        for k in 0..d {
            // Block scaling leaves the rank unchanged and keeps stiff `A` resolvable.
            let n = power.norm();
            if n > 0.0 {
                power /= n;
            }
            blocks.view_mut((0, k * d), (d, d)).copy_from(&power);
            power = &self.a * power;
        }
        let rank = linalg::rank(&blocks, 1e-10);
        KalmanReport {
            kalman_rank: rank,
            strong_feller: rank == d,
        }
    }

    pub fn max_real_eigenvalue(&self) -> f64 {
        self.a
            .complex_eigenvalues()
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_stable(&self) -> bool {
        self.max_real_eigenvalue() < -STABILITY_MARGIN
    }

    fn require_stable(&self) -> Result<()> {
        let m = self.max_real_eigenvalue();
        if m < -STABILITY_MARGIN {
            Ok(())
        } else {
            Err(Error::NotStable { max_real_part: m })
        }
    }

    /// `Q_∞` solving `A Q_∞ + Q_∞ Aᵀ + Q = 0`.
    pub fn stationary_covariance(&self) -> Result<Mat> {
        self.require_stable()?;
        linalg::lyapunov(&self.a, &self.q)
            .ok_or_else(|| Error::InvalidModel("Lyapunov system is singular".into()))
    }

    /// Quadrature values of `∫_ε^1 ‖Q_t^{-1/2} S_t Q^{1/2}‖_HS dt` over a
    /// decreasing ladder of ε, with a geometric-tail convergence test.
    pub fn hs_integrability(&self, eps_ladder: &[f64], rtol: f64) -> Result<HsReport> {
        let kalman = self.kalman_strong_feller();
        if !kalman.strong_feller {
            return Err(Error::Singular {
                t: 1.0,
                rank: kalman.kalman_rank,
                dim: self.d,
            });
        }
        let mut ladder = eps_ladder.to_vec();
        ladder.sort_by(|a, b| b.total_cmp(a));
        if ladder.is_empty() || ladder.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            return Err(Error::Domain("epsilon ladder must lie in (0, 1)".into()));
        }
        let integrand = |t: f64| -> Result<f64> {
            let g = self.gramian(t);
            let cond = g.condition();
            if g.rank < self.d || cond > MAX_GRAMIAN_CONDITION {
                return Err(Error::Conditioning { t, condition: cond });
            }
            Ok((&g.pinv_root * self.semigroup(t) * &self.q_half).norm())
        };
        // Substituting t = u² removes the t^{-1/2} endpoint singularity.
        let mut values = Vec::with_capacity(ladder.len());
        let mut total = 0.0;
        let mut upper = 1.0_f64;
        for &eps in &ladder {
            let (lo, hi) = (eps.sqrt(), upper.sqrt());
            let mut err = None;
            let piece = gauss_legendre(
                |u| match integrand(u * u) {
                    Ok(v) => 2.0 * u * v,
                    Err(e) => {
                        err.get_or_insert(e);
                        0.0
                    }
                },
                lo,
                hi,
                16,
            );
            if let Some(e) = err {
                return Err(e);
            }
            total += piece;
            values.push((eps, total));
            upper = eps;
        }
        let n = values.len();
        let (converged, tail) = if n >= 3 {
            let d1 = values[n - 2].1 - values[n - 3].1;
            let d2 = values[n - 1].1 - values[n - 2].1;
            let ratio = if d1 > 0.0 { d2 / d1 } else { 0.0 };
            if ratio < 1.0 {
                let tail = d2 * ratio / (1.0 - ratio);
                (tail <= rtol * total, tail)
            } else {
                (false, f64::INFINITY)
            }
        } else {
            (false, f64::INFINITY)
        };
        Ok(HsReport {
            kalman_rank: kalman.kalman_rank,
            strong_feller: true,
            hs_integral: values,
            extrapolated: total + tail,
            converged,
        })
    }

    /// Certified upper bound on `k(p) = sup_t E|Z_t|^p` for `Z_0 = 0`.
    ///
    /// The supremum is attained by the stationary law since `Q_t` increases
    /// in the Loewner order. `p = 2` is exact; other `p` use a Monte-Carlo
    /// upper confidence bound, further capped for `p < 2` by Jensen's
    /// inequality `E|Z|^p ≤ (tr Q_∞)^{p/2}`.
    pub fn ou_moment_k(
        &self,
        p: f64,
        budget: usize,
        confidence: f64,
        stream: &Stream,
    ) -> Result<MomentBound> {
        if !(p > 0.0) {
            return Err(Error::Domain(format!("moment order must be positive, got {p}")));
        }
        if self.q.iter().all(|&v| v == 0.0) {
            return Ok(MomentBound::exact(p, 0.0));
        }
        let q_inf = self.stationary_covariance()?;
        let tr = q_inf.trace();
        if p == 2.0 {
            return Ok(MomentBound::exact(p, tr));
        }
        if budget < 100 {
            return Err(Error::Budget(format!(
                "moment k({p}) needs at least 100 samples, got {budget}"
            )));
        }
        let root = PsdEigen::new(&q_inf).sqrt();
        let d = self.d;
        let s = stream.substream("ou-moment");
        let samples = s.map_paths(budget, |_, rng| {
            let mut xi = vec![0.0; d];
            let mut z = vec![0.0; d];
            for v in xi.iter_mut() {
                *v = StandardNormal.sample(rng);
            }
            linalg::matvec(&root, &xi, &mut z);
            linalg::norm(&z).powf(p)
        });
        let (mean, se) = mean_stderr(&samples);
        let mut ucb = mean + z_one_sided(confidence) * se;
        if p < 2.0 {
            ucb = ucb.min(tr.powf(p / 2.0));
        }
        Ok(MomentBound {
            p,
            value: ucb,
            estimate: mean,
            stderr: se,
            exact: false,
            confidence: Some(confidence),
        })
    }

    /// `ln g(x, y) = ⟨Q₁^{-1} S₁ x, y⟩ − ½⟨Q₁^{-1} S₁ x, S₁ x⟩`.
    pub fn cameron_martin_log_g(&self, x: &Vector, y: &Vector) -> Result<f64> {
        let g1 = self.gramian(1.0);
        g1.require_invertible(self.d)?;
        let s1x = self.semigroup(1.0) * x;
        let w = &g1.pinv * &s1x;
        Ok(w.dot(y) - 0.5 * w.dot(&s1x))
    }

    pub fn cameron_martin_g(&self, x: &Vector, y: &Vector) -> Result<f64> {
        self.cameron_martin_log_g(x, y).map(f64::exp)
    }
}

/// `Q_t` with its spectral data, root and pseudo-inverses.
#[derive(Debug, Clone)]
pub struct Gramian {
    pub t: f64,
    pub qt: Mat,
    pub eigen: PsdEigen,
    pub rank: usize,
    pub root: Mat,
    pub pinv_root: Mat,
    pub pinv: Mat,
}

impl Gramian {
    pub fn from_matrix(t: f64, qt: Mat) -> Self {
        let eigen = PsdEigen::new(&qt);
        Self {
            t,
            rank: eigen.rank,
            root: eigen.sqrt(),
            pinv_root: eigen.pinv_sqrt(),
            pinv: eigen.pinv(),
            qt,
            eigen,
        }
    }

    /// `λ_max / λ_min` (infinite when singular).
    pub fn condition(&self) -> f64 {
        let min = self.eigen.min();
        if min <= 0.0 {
            f64::INFINITY
        } else {
            self.eigen.max() / min
        }
    }

    pub fn require_invertible(&self, d: usize) -> Result<()> {
        if self.rank < d {
            return Err(Error::Singular {
                t: self.t,
                rank: self.rank,
                dim: d,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KalmanReport {
    pub kalman_rank: usize,
    pub strong_feller: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HsReport {
    pub kalman_rank: usize,
    pub strong_feller: bool,
    /// `(ε, ∫_ε^1 ...)` in order of decreasing ε.
    pub hs_integral: Vec<(f64, f64)>,
    /// Last value plus the geometric tail estimate.
    pub extrapolated: f64,
    pub converged: bool,
}

pub const DEFAULT_EPS_LADDER: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

/// Largest estimated tail, relative to the integral, accepted as converged.
pub const DEFAULT_HS_RTOL: f64 = 0.05;

/// Upper bound on a stationary OU moment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentBound {
    pub p: f64,
    /// The certified value used downstream.
    pub value: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub exact: bool,
    /// `None` for exact values.
    pub confidence: Option<f64>,
}

impl MomentBound {
    pub fn exact(p: f64, value: f64) -> Self {
        Self {
            p,
            value,
            estimate: value,
            stderr: 0.0,
            exact: true,
            confidence: None,
        }
    }
}
