//! Exponential-Euler stepping of `dX = (AX + F(X)) dt + Q^{1/2} dW`:
//! `X_{n+1} = S_h X_n + Φ₁(h) Q^{1/2} G(X_n) + η_n`, `η_n ~ N(0, Q_h)`.

use crate::drift::{DriftSpec, MAX_STACK_DIM};
use crate::error::{Error, Result};
use crate::linalg::{matvec, matvec_add, Mat, PsdEigen};
use crate::linop::LinearModel;
use crate::rng::{PathRng, Stream};
use rand_distr::{Distribution, StandardNormal};

pub const BLOW_UP_NORM: f64 = 1e8;

#[derive(Debug, Clone)]
pub struct ExpEuler {
    pub h: f64,
    s_h: Mat,
    /// `Φ₁(h) Q^{1/2}`.
    gain: Mat,
    noise_root: Mat,
    d: usize,
}

impl ExpEuler {
    pub fn new(model: &LinearModel, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Domain(format!("step must be positive, got {h}")));
        }
        Ok(Self {
            h,
            s_h: model.semigroup(h),
            gain: model.phi1(h) * &model.q_half,
            noise_root: PsdEigen::new(&model.gramian_matrix(h)).sqrt(),
            d: model.d,
        })
    }

    /// One step from `x` into `out`.
    #[inline]
    pub fn step(&self, drift: &DriftSpec, x: &[f64], out: &mut [f64], rng: &mut PathRng) {
        let d = self.d;
        let mut g = [0.0f64; MAX_STACK_DIM];
        let mut xi = [0.0f64; MAX_STACK_DIM];
        for v in xi[..d].iter_mut() {
            *v = StandardNormal.sample(rng);
        }
        matvec(&self.s_h, x, out);
        if !drift.g.is_zero() {
            drift.eval(x, &mut g[..d]);
            matvec_add(&self.gain, &g[..d], out);
        }
        matvec_add(&self.noise_root, &xi[..d], out);
    }

    /// Advance `x` in place by `n` steps.
    pub fn advance(
        &self,
        drift: &DriftSpec,
        x: &mut [f64],
        n: usize,
        t0: f64,
        rng: &mut PathRng,
    ) -> Result<()> {
        let mut next = [0.0f64; MAX_STACK_DIM];
        let d = self.d;
        for k in 0..n {
            self.step(drift, x, &mut next[..d], rng);
            x.copy_from_slice(&next[..d]);
            let nrm = crate::linalg::norm(x);
            if !(nrm <= BLOW_UP_NORM) {
                return Err(Error::BlowUp {
                    t: t0 + (k + 1) as f64 * self.h,
                    norm: nrm,
                });
            }
        }
        Ok(())
    }
}

/// Number of steps of size `h` reaching `t`, requiring `t` to be a multiple
/// of `h` within rounding.
pub fn steps_for(t: f64, h: f64) -> Result<usize> {
    let n = (t / h).round();
    if (n * h - t).abs() > 1e-9 * t.max(1.0) {
        return Err(Error::Domain(format!(
            "time {t} is not a multiple of the step {h}"
        )));
    }
    Ok(n as usize)
}

/// States of `n_paths` independent paths from `x0` at each of `times`
/// (nondecreasing), indexed `[time][path][coordinate]`.
pub fn sample_marginals(
    model: &LinearModel,
    drift: &DriftSpec,
    x0: &[f64],
    h: f64,
    times: &[f64],
    n_paths: usize,
    stream: &Stream,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let stepper = ExpEuler::new(model, h)?;
    let counts: Vec<usize> = times.iter().map(|&t| steps_for(t, h)).collect::<Result<_>>()?;
    if counts.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("sample times must be nondecreasing".into()));
    }
    let per_path: Vec<Result<Vec<Vec<f64>>>> = stream.map_paths(n_paths, |_, rng| {
        let mut x = x0.to_vec();
        let mut done = 0;
        let mut out = Vec::with_capacity(times.len());
        for &c in &counts {
            stepper.advance(drift, &mut x, c - done, done as f64 * h, rng)?;
            done = c;
            out.push(x.clone());
        }
        Ok(out)
    });
    let mut by_time = vec![Vec::with_capacity(n_paths); times.len()];
    for p in per_path {
        for (k, s) in p?.into_iter().enumerate() {
            by_time[k].push(s);
        }
    }
    Ok(by_time)
}

/// One long trajectory from `x0`, recorded every `thin` steps after `burn`
/// steps.
pub fn sample_trajectory(
    model: &LinearModel,
    drift: &DriftSpec,
    x0: &[f64],
    h: f64,
    burn: usize,
    thin: usize,
    records: usize,
    rng: &mut PathRng,
) -> Result<Vec<Vec<f64>>> {
    let stepper = ExpEuler::new(model, h)?;
    let mut x = x0.to_vec();
    stepper.advance(drift, &mut x, burn, 0.0, rng)?;
    let mut out = Vec::with_capacity(records);
    for r in 0..records {
        stepper.advance(drift, &mut x, thin, (burn + r * thin) as f64 * h, rng)?;
        out.push(x.clone());
    }
    Ok(out)
}

/// OU increments together with their driving Brownian increments:
/// `ΔW ~ N(0, hI)` and `η | ΔW ~ N(Φ₁Q^{1/2}ΔW/h, Q_h − Φ₁QΦ₁ᵀ/h)`, so
/// that `Z_{n+1} = S_h Z_n + η_n` is exact in law jointly with `W`.
#[derive(Debug, Clone)]
pub struct OuWithNoise {
    pub h: f64,
    s_h: Mat,
    gain: Mat,
    resid_root: Mat,
    d: usize,
}

impl OuWithNoise {
    pub fn new(model: &LinearModel, h: f64) -> Self {
        let phi = model.phi1(h);
        let gain = &phi * &model.q_half / h;
        let resid = model.gramian_matrix(h) - &phi * &model.q * phi.transpose() / h;
        Self {
            h,
            s_h: model.semigroup(h),
            gain,
            resid_root: PsdEigen::new(&resid).sqrt(),
            d: model.d,
        }
    }

    #[inline]
    pub fn step(&self, z: &[f64], out: &mut [f64], dw: &mut [f64], rng: &mut PathRng) {
        let d = self.d;
        let sq = self.h.sqrt();
        let mut xi = [0.0f64; MAX_STACK_DIM];
        for v in dw.iter_mut() {
            let n: f64 = StandardNormal.sample(rng);
            *v = sq * n;
        }
        for v in xi[..d].iter_mut() {
            *v = StandardNormal.sample(rng);
        }
        matvec(&self.s_h, z, out);
        matvec_add(&self.gain, dw, out);
        matvec_add(&self.resid_root, &xi[..d], out);
    }
}
