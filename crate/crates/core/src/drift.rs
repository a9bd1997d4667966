//! The nonlinearity `G` (with `F = Q^{1/2} G`) and its growth and
//! dissipativity constants.

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::rng::Stream;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

/// Largest state dimension handled without heap scratch.
pub const MAX_STACK_DIM: usize = 64;

/// Polynomial nonlinearity projected onto the first `d` cosine modes of the
/// Neumann Laplacian on (0, 1), evaluated by midpoint collocation.
#[derive(Debug, Clone, PartialEq)]
pub struct GalerkinProjection {
    pub d: usize,
    /// `f(u) = Σ_k coeffs[k] u^k`.
    pub coeffs: Vec<f64>,
    /// Linear damping moved from `f` into `A`; `G` evaluates `f(u) + shift·u`.
    pub shift: f64,
    /// `basis[j * d + k] = e_k(ξ_j)` at the collocation nodes.
    basis: Vec<f64>,
    nodes: usize,
}

impl GalerkinProjection {
    pub fn new(d: usize, coeffs: Vec<f64>, shift: f64) -> Self {
        let nodes = 3 * d + 1;
        let mut basis = vec![0.0; nodes * d];
        for j in 0..nodes {
            let xi = (j as f64 + 0.5) / nodes as f64;
            for k in 0..d {
                basis[j * d + k] = if k == 0 {
                    1.0
                } else {
                    SQRT_2 * (k as f64 * PI * xi).cos()
                };
            }
        }
        Self {
            d,
            coeffs,
            shift,
            basis,
            nodes,
        }
    }

    /// `(Neumann eigenvalue k)`: `−(kπ)²`.
    pub fn laplacian_eigenvalue(k: usize) -> f64 {
        -(k as f64 * PI).powi(2)
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let d = self.d;
        out.iter_mut().for_each(|o| *o = 0.0);
        let w = 1.0 / self.nodes as f64;
        for j in 0..self.nodes {
            let row = &self.basis[j * d..(j + 1) * d];
            let u = linalg::dot(row, x);
            let mut f = 0.0;
            for &c in self.coeffs.iter().rev() {
                f = f * u + c;
            }
            let val = (f + self.shift * u) * w;
            for (o, &e) in out.iter_mut().zip(row) {
                *o += val * e;
            }
        }
    }

    /// `K` with `|G(x)| ≤ K(1 + |x|^m)`, from `sup|u| ≤ √(2d)|x|` and
    /// discrete orthonormality of the collocated basis.
    pub fn growth_constant(&self) -> f64 {
        let sup = (2.0 * self.d as f64).sqrt();
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                let c = if k == 1 { c + self.shift } else { c };
                if k == 0 {
                    c.abs()
                } else {
                    c.abs() * sup.powi(k as i32 - 1)
                }
            })
            .sum::<f64>()
            + if self.coeffs.len() < 2 { self.shift.abs() } else { 0.0 }
    }
}

/// The map `G: ℝ^d → ℝ^d`.
#[derive(Debug, Clone, PartialEq)]
pub enum Nonlinearity {
    Zero,
    Constant(Vec<f64>),
    /// `G(x) = L x`.
    Linear(Mat),
    /// `G_i(x) = Σ_k coeffs[k] x_i^k` for every coordinate.
    Polynomial(Vec<f64>),
    Galerkin(GalerkinProjection),
}

impl Nonlinearity {
    #[inline]
    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Nonlinearity::Zero => out.iter_mut().for_each(|o| *o = 0.0),
            Nonlinearity::Constant(c) => out.copy_from_slice(c),
            Nonlinearity::Linear(l) => linalg::matvec(l, x, out),
            Nonlinearity::Polynomial(c) => {
                for (o, &xi) in out.iter_mut().zip(x) {
                    let mut acc = 0.0;
                    for &ck in c.iter().rev() {
                        acc = acc * xi + ck;
                    }
                    *o = acc;
                }
            }
            Nonlinearity::Galerkin(g) => g.eval(x, out),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Nonlinearity::Zero => true,
            Nonlinearity::Constant(c) | Nonlinearity::Polynomial(c) => c.iter().all(|&v| v == 0.0),
            Nonlinearity::Linear(l) => l.iter().all(|&v| v == 0.0),
            Nonlinearity::Galerkin(_) => false,
        }
    }

    /// Dimension this map requires, if fixed.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Nonlinearity::Constant(c) => Some(c.len()),
            Nonlinearity::Linear(l) => Some(l.nrows()),
            Nonlinearity::Galerkin(g) => Some(g.d),
            _ => None,
        }
    }

    /// Smallest `(K, m)` this crate can certify symbolically.
    pub fn default_growth(&self) -> Growth {
        match self {
            Nonlinearity::Zero => Growth { k: 0.0, m: 1.0 },
            Nonlinearity::Constant(c) => Growth {
                k: linalg::norm(c),
                m: 1.0,
            },
            Nonlinearity::Linear(l) => Growth {
                k: linalg::op_norm(l),
                m: 1.0,
            },
            Nonlinearity::Polynomial(c) => Growth {
                k: c.iter().map(|v| v.abs()).sum(),
                m: (c.len().max(2) - 1) as f64,
            },
            Nonlinearity::Galerkin(g) => Growth {
                k: g.growth_constant(),
                m: (g.coeffs.len().max(2) - 1) as f64,
            },
        }
    }

    /// Whether `G` is a gradient field by construction.
    pub fn is_gradient_by_construction(&self) -> bool {
        match self {
            Nonlinearity::Zero
            | Nonlinearity::Constant(_)
            | Nonlinearity::Polynomial(_)
            | Nonlinearity::Galerkin(_) => true,
            Nonlinearity::Linear(l) => (l - l.transpose()).norm() <= 1e-12 * l.norm().max(1.0),
        }
    }
}

/// `|G(x)| ≤ K(1 + |x|^m)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Growth {
    pub k: f64,
    pub m: f64,
}

/// Constants of `⟨Ãx + F(x+y), x*⟩ ≤ −k₁|x|^{1+ε} + k₂|y|^s + k₃`; the
/// linear version has `ε = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dissipativity {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub s: f64,
    #[serde(default)]
    pub eps: f64,
}

impl Dissipativity {
    fn validate(&self, what: &str) -> Result<()> {
        let ok = self.k1 > 0.0 && self.k2 >= 0.0 && self.k3 >= 0.0 && self.s > 0.0 && self.eps >= 0.0;
        if ok && self.k1.is_finite() && self.k2.is_finite() && self.k3.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "{what} constants need k1 > 0, k2, k3 >= 0, s > 0, eps >= 0"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftSpec {
    pub g: Nonlinearity,
    pub growth: Growth,
    /// Linear-growth dissipativity (`ε = 0`).
    pub dissipativity: Option<Dissipativity>,
    /// Superlinear dissipativity (`ε > 0`).
    pub superlinear: Option<Dissipativity>,
    /// User assertion that the generator is symmetric.
    pub symmetric: bool,
}

impl DriftSpec {
    pub fn new(g: Nonlinearity) -> Self {
        let growth = g.default_growth();
        Self {
            g,
            growth,
            dissipativity: None,
            superlinear: None,
            symmetric: false,
        }
    }

    pub fn zero() -> Self {
        Self::new(Nonlinearity::Zero)
    }

    pub fn with_growth(mut self, k: f64, m: f64) -> Self {
        self.growth = Growth { k, m };
        self
    }

    pub fn with_dissipativity(mut self, k1: f64, k2: f64, k3: f64, s: f64) -> Self {
        self.dissipativity = Some(Dissipativity {
            k1,
            k2,
            k3,
            s,
            eps: 0.0,
        });
        self
    }

    pub fn with_superlinear(mut self, k1: f64, k2: f64, k3: f64, s: f64, eps: f64) -> Self {
        self.superlinear = Some(Dissipativity { k1, k2, k3, s, eps });
        self
    }

    pub fn with_symmetric(mut self, symmetric: bool) -> Self {
        self.symmetric = symmetric;
        self
    }

    #[inline]
    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        self.g.eval(x, out)
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if let Some(n) = self.g.dim() {
            if n != d {
                return Err(Error::Dimension { expected: d, got: n });
            }
        }
        if d > MAX_STACK_DIM {
            return Err(Error::Dimension {
                expected: MAX_STACK_DIM,
                got: d,
            });
        }
        let Growth { k, m } = self.growth;
        if !(k >= 0.0 && k.is_finite() && m > 0.0 && m.is_finite()) {
            return Err(Error::Domain(format!(
                "growth constants need K >= 0 and m > 0, got K = {k}, m = {m}"
            )));
        }
        if let Some(c) = &self.dissipativity {
            c.validate("dissipativity")?;
        }
        if let Some(c) = &self.superlinear {
            c.validate("superlinear dissipativity")?;
            if c.eps <= 0.0 {
                return Err(Error::Domain("superlinear dissipativity needs eps > 0".into()));
            }
        }
        Ok(())
    }

    /// Checks `|G(x)| ≤ K(1 + |x|^m)` on random states at norms spread over
    /// `[0, max_norm]`, plus the origin.
    pub fn growth_spot_check(&self, d: usize, samples: usize, max_norm: f64, stream: &Stream) -> Result<()> {
        self.validate(d)?;
        let mut rng = stream.substream("growth-check").path(0);
        let mut x = vec![0.0; d];
        let mut g = vec![0.0; d];
        for i in 0..=samples {
            let r = if i == 0 {
                0.0
            } else {
                max_norm * (i as f64 / samples as f64).powi(2)
            };
            for v in x.iter_mut() {
                *v = rng.random::<f64>() * 2.0 - 1.0;
            }
            let n = linalg::norm(&x).max(f64::MIN_POSITIVE);
            x.iter_mut().for_each(|v| *v *= r / n);
            self.eval(&x, &mut g);
            let gn = linalg::norm(&g);
            let bound = self.growth.k * (1.0 + r.powf(self.growth.m));
            if !gn.is_finite() || gn > bound * (1.0 + 1e-12) + 1e-300 {
                return Err(Error::GrowthViolation {
                    at_norm: r,
                    g_norm: gn,
                    bound,
                });
            }
        }
        Ok(())
    }

    /// Discrete curl test: for random 2-planes through random points the
    /// circulation of `G` around a small square must vanish.
    pub fn curl_test(&self, d: usize, trials: usize, stream: &Stream) -> bool {
        if d == 1 {
            return true;
        }
        let mut rng = stream.substream("curl-test").path(0);
        let h = 1e-4;
        let mut x = vec![0.0; d];
        let mut u = vec![0.0; d];
        let mut v = vec![0.0; d];
        let mut g = vec![0.0; d];
        let mut p = vec![0.0; d];
        for _ in 0..trials {
            for k in 0..d {
                x[k] = rng.random::<f64>() * 2.0 - 1.0;
                u[k] = rng.random::<f64>() - 0.5;
                v[k] = rng.random::<f64>() - 0.5;
            }
            let nu = linalg::norm(&u);
            u.iter_mut().for_each(|a| *a /= nu);
            let uv = linalg::dot(&u, &v);
            for k in 0..d {
                v[k] -= uv * u[k];
            }
            let nv = linalg::norm(&v);
            v.iter_mut().for_each(|a| *a /= nv);
            // ∂_u⟨G, v⟩ − ∂_v⟨G, u⟩ by central differences.
            let mut directional = |dir: &[f64], sign: f64, proj: &[f64]| {
                for k in 0..d {
                    p[k] = x[k] + sign * h * dir[k];
                }
                self.eval(&p, &mut g);
                linalg::dot(&g, proj)
            };
            let du_gv = (directional(&u, 1.0, &v) - directional(&u, -1.0, &v)) / (2.0 * h);
            let dv_gu = (directional(&v, 1.0, &u) - directional(&v, -1.0, &u)) / (2.0 * h);
            let scale = du_gv.abs().max(dv_gu.abs()).max(1.0);
            if (du_gv - dv_gu).abs() > 1e-5 * scale {
                return false;
            }
        }
        true
    }
}
