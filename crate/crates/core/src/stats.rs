//! Gaussian helpers and confidence bounds.

use crate::linalg::{Mat, Vector};
use statrs::distribution::{ContinuousCDF, Normal};

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

pub fn normal_cdf(z: f64) -> f64 {
    std_normal().cdf(z)
}

/// Quantile of the standard normal distribution.
pub fn normal_quantile(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

/// One-sided z-score for a confidence level, e.g. 0.99 ↦ 2.326.
pub fn z_one_sided(confidence: f64) -> f64 {
    normal_quantile(confidence)
}

/// Log-density of `N(mean, cov)` at `y`; `None` when `cov` is not positive
/// definite.
pub fn gaussian_log_pdf(mean: &Vector, cov: &Mat, y: &Vector) -> Option<f64> {
    let d = mean.len();
    let chol = cov.clone().cholesky()?;
    let diff = y - mean;
    let w = chol.l().solve_lower_triangular(&diff)?;
    let log_det: f64 = chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>() * 2.0;
    Some(-0.5 * (w.norm_squared() + log_det + d as f64 * (2.0 * std::f64::consts::PI).ln()))
}

pub fn gaussian_pdf(mean: &Vector, cov: &Mat, y: &Vector) -> Option<f64> {
    gaussian_log_pdf(mean, cov, y).map(f64::exp)
}

/// Sample covariance of row-major samples `xs[i][k]` and the standard error
/// of each entry (delta method on the products).
pub fn sample_cov_with_se(xs: &[Vec<f64>]) -> (Vec<f64>, Mat, Mat, Vec<f64>) {
    let n = xs.len();
    let d = xs[0].len();
    let nf = n as f64;
    let mut mean = vec![0.0; d];
    for x in xs {
        for k in 0..d {
            mean[k] += x[k];
        }
    }
    mean.iter_mut().for_each(|m| *m /= nf);
    let mut mean_se = vec![0.0; d];
    let mut cov = Mat::zeros(d, d);
    let mut cov_se = Mat::zeros(d, d);
    for i in 0..d {
        let var: f64 = xs.iter().map(|x| (x[i] - mean[i]).powi(2)).sum::<f64>() / (nf - 1.0);
        mean_se[i] = (var / nf).sqrt();
        for j in 0..d {
            let prods: Vec<f64> = xs
                .iter()
                .map(|x| (x[i] - mean[i]) * (x[j] - mean[j]))
                .collect();
            let c = prods.iter().sum::<f64>() / (nf - 1.0);
            let v = prods.iter().map(|p| (p - c).powi(2)).sum::<f64>() / (nf - 1.0);
            cov[(i, j)] = c;
            cov_se[(i, j)] = (v / nf).sqrt();
        }
    }
    (mean, cov, cov_se, mean_se)
}
