//! Small dense linear-algebra helpers on top of `nalgebra`.
//!
//! Everything here works on `DMatrix<f64>`; dimensions in this crate are
//! small (a handful of states, at most a few dozen Galerkin modes).

use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative eigenvalue cutoff for pseudo-inverses and ranks.
pub const PINV_RTOL: f64 = 1e-12;

/// Matrix exponential (scaling and squaring with Padé approximants).
pub fn expm(m: &Mat) -> Mat {
    m.clone().exp()
}

pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

/// Eigen-decomposition of a symmetric positive-semidefinite matrix.
///
/// Eigenvalues below `PINV_RTOL * max(λ)` (and all negative round-off) are
/// clamped to zero. Eigenvalues are returned in ascending order.
#[derive(Debug, Clone)]
pub struct PsdEigen {
    pub values: Vector,
    pub vectors: Mat,
    pub rank: usize,
    cutoff: f64,
}

impl PsdEigen {
    pub fn new(m: &Mat) -> Self {
        let eig = SymmetricEigen::new(symmetrize(m));
        let n = eig.eigenvalues.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let values = Vector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
        let mut vectors = Mat::zeros(n, n);
        for (k, &i) in order.iter().enumerate() {
            vectors.set_column(k, &eig.eigenvectors.column(i));
        }
        let max = values.iter().cloned().fold(0.0_f64, f64::max);
        let cutoff = PINV_RTOL * max;
        let rank = values.iter().filter(|&&v| v > cutoff && v > 0.0).count();
        Self {
            values,
            vectors,
            rank,
            cutoff,
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0_f64, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Mat {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for k in 0..n {
            let v = self.values[k];
            let s = if v > self.cutoff && v > 0.0 { f(v) } else { 0.0 };
            scaled.column_mut(k).scale_mut(s);
        }
        symmetrize(&(scaled * self.vectors.transpose()))
    }

    /// Principal square root (zero on the numerically null space).
    pub fn sqrt(&self) -> Mat {
        self.map(f64::sqrt)
    }

    /// Moore–Penrose pseudo-inverse of the square root.
    pub fn pinv_sqrt(&self) -> Mat {
        self.map(|v| 1.0 / v.sqrt())
    }

    pub fn pinv(&self) -> Mat {
        self.map(|v| 1.0 / v)
    }

    /// Orthogonal projector onto the numerical range.
    pub fn range_projector(&self) -> Mat {
        self.map(|_| 1.0)
    }
}

/// Largest singular value.
pub fn op_norm(m: &Mat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Numerical rank with relative tolerance on singular values.
pub fn rank(m: &Mat, rtol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rtol * max).count()
}

/// Euclidean norm of a slice.
#[inline]
pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `out = m * v` for a column-major `DMatrix`, without allocation.
#[inline]
pub fn matvec(m: &Mat, v: &[f64], out: &mut [f64]) {
    let (r, c) = m.shape();
    debug_assert_eq!(c, v.len());
    debug_assert_eq!(r, out.len());
    let data = m.as_slice();
    out.iter_mut().for_each(|o| *o = 0.0);
    for (j, &vj) in v.iter().enumerate() {
        if vj == 0.0 {
            continue;
        }
        let col = &data[j * r..(j + 1) * r];
        for (o, &mij) in out.iter_mut().zip(col) {
            *o += mij * vj;
        }
    }
}

/// `out += m * v`.
#[inline]
pub fn matvec_add(m: &Mat, v: &[f64], out: &mut [f64]) {
    let r = m.nrows();
    let data = m.as_slice();
    for (j, &vj) in v.iter().enumerate() {
        if vj == 0.0 {
            continue;
        }
        let col = &data[j * r..(j + 1) * r];
        for (o, &mij) in out.iter_mut().zip(col) {
            *o += mij * vj;
        }
    }
}

/// Solve the continuous Lyapunov equation `A X + X Aᵀ + C = 0` by
/// vectorisation. Returns `None` when the Kronecker system is singular.
pub fn lyapunov(a: &Mat, c: &Mat) -> Option<Mat> {
    let d = a.nrows();
    let eye = Mat::identity(d, d);
    let big = eye.kronecker(a) + a.kronecker(&eye);
    let rhs = -Vector::from_column_slice(c.as_slice());
    let sol = big.lu().solve(&rhs)?;
    Some(symmetrize(&Mat::from_column_slice(d, d, sol.as_slice())))
}

/// Relative Frobenius distance `‖a − b‖ / max(‖b‖, tiny)`.
pub fn rel_frobenius(a: &Mat, b: &Mat) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Fixed-order Gauss–Legendre rule on [-1, 1] (8 nodes).
pub(crate) const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

/// Composite 8-point Gauss–Legendre quadrature of a scalar function on
/// `[a, b]` split into `panels` equal panels.
pub fn gauss_legendre(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        for &(x, w) in GL8.iter() {
            total += w * f(mid + 0.5 * h * x);
        }
    }
    total * 0.5 * h
}
