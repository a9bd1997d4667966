use ergobound::bridge::{BridgeKernel, TimeGrid};
use ergobound::drift::DriftSpec;
use ergobound::lower_bounds::{
    bridge_moment_constants, build_lower_bound, c_b1_integral, delta_small_set, packaged_bound, y_functionals,
    DeltaMode, LowerBoundModel, DEFAULT_ETA,
};
use ergobound::sim::{cubic_drift, Preset};
use ergobound::{LinearModel, Stream, Vector};

fn scalar1() -> LinearModel {
    LinearModel::scalar(-1.0, 1.0).unwrap()
}

fn v(x: f64) -> Vector {
    Vector::from_vec(vec![x])
}

fn q(t: f64) -> f64 {
    (1.0 - (-2.0 * t).exp()) / 2.0
}

fn lower_bound(drift: &DriftSpec, seed: u64) -> LowerBoundModel {
    let grid = TimeGrid::uniform(128, 1e-3).unwrap();
    build_lower_bound(&scalar1(), drift, &grid, 4000, 0.99, &Stream::new(seed)).unwrap().1
}

#[test]
fn u_functional_at_one() {
    let k = BridgeKernel::build(&scalar1(), &TimeGrid::uniform(64, 1e-2).unwrap()).unwrap();
    let f = y_functionals(&k, &v(1.0));
    assert!((f.u - 1.0).abs() < 1e-12);
    // U₂ = e^{−1}/Q₁.
    assert!((f.u2 - (-1.0f64).exp() / q(1.0)).abs() < 1e-12);
}

/// `∫₀¹ |B₁(s)| √Q̂_s ds` with `B₁ = e^{−2τ}/Q_τ`, `τ = 1 − s`, by the
/// midpoint rule in `u = √τ`.
fn c_b1_oracle() -> f64 {
    let n = 200_000;
    (0..n)
        .map(|i| {
            let u = (i as f64 + 0.5) / n as f64;
            let tau = u * u;
            let s = 1.0 - tau;
            let q_hat = q(s) - q(s) * q(s) * (-2.0 * tau).exp() / q(1.0);
            2.0 * u * (-2.0 * tau).exp() / q(tau) * q_hat.max(0.0).sqrt() / n as f64
        })
        .sum()
}

#[test]
fn c_b1_matches_scalar_quadrature() {
    let m = scalar1();
    let got = c_b1_integral(&m, &m.gramian(1.0).pinv);
    let want = c_b1_oracle();
    assert!(got >= want * (1.0 - 1e-6) && got <= want * (1.0 + 1e-3), "{got} vs {want}");
}

#[test]
fn sup_moment_exceeds_marginal_variance() {
    let grid = TimeGrid::uniform(128, 1e-3).unwrap();
    let k = BridgeKernel::build(&scalar1(), &grid).unwrap();
    let r = bridge_moment_constants(&k, &[2.0], 5000, 0.99, &Stream::new(4)).unwrap();
    let max_q_hat = k.nodes.iter().map(|n| n.q_hat[(0, 0)]).fold(0.0, f64::max);
    assert!((max_q_hat - 0.2311).abs() < 1e-3);
    assert!(r.entries[0].sup_moment_ucb.is_finite() && r.entries[0].sup_moment_ucb >= max_q_hat);
    assert!(r.l(2.0).unwrap() >= 1.0);
    assert!(bridge_moment_constants(&k, &[2.0], 10, 0.99, &Stream::new(4)).is_err());
}

#[test]
fn linear_lower_bound_below_exact_density() {
    let (_, drift) = Preset::Scalar1Linear.build().unwrap();
    let lbm = lower_bound(&drift, 1);
    assert_eq!(lbm.p(), 2.0);
    let var = (1.0 - (-4.0f64).exp()) / 4.0;
    for xv in [-1.0, 0.0, 1.0] {
        for yv in [-1.0, 0.0, 1.0] {
            let ln_exact = -(yv - (-2.0f64).exp() * xv).powi(2) / (2.0 * var) - 0.5 * var.ln()
                + yv * yv / (2.0 * q(1.0))
                + 0.5 * q(1.0).ln();
            assert!(lbm.exponent(&v(xv), &v(yv)) <= ln_exact, "x = {xv}, y = {yv}");
        }
    }
}

#[test]
fn zero_drift_bound_below_cameron_martin_density() {
    let m = scalar1();
    let lbm = lower_bound(&DriftSpec::zero(), 2);
    for i in 0..15 {
        for j in 0..15 {
            let (xv, yv) = (-3.5 + 0.5 * i as f64, -3.5 + 0.5 * j as f64);
            let ln_g = m.cameron_martin_log_g(&v(xv), &v(yv)).unwrap();
            assert!(lbm.exponent(&v(xv), &v(yv)) <= ln_g + 1e-12);
        }
    }
}

#[test]
fn cubic_power() {
    assert_eq!(lower_bound(&cubic_drift(0.0), 3).p(), 6.0);
}

#[test]
fn delta_point_estimate_is_monotone() {
    let lbm = lower_bound(&cubic_drift(0.0), 5);
    let estimate = |rx: f64, ry: Option<f64>| {
        let (r, _) = delta_small_set(&lbm, None, DeltaMode::Pointwise, rx, ry, 2000, 0.99, &Stream::new(6)).unwrap();
        assert!(r.delta.ln() <= r.ln_scale + r.mc_mean_scaled.ln() + 1e-9 || r.ball_radius.is_some());
        r.ln_scale + r.mc_mean_scaled.ln()
    };
    let by_r: Vec<f64> = [0.5, 1.0, 2.0, 4.0].iter().map(|&r| estimate(r, None)).collect();
    assert!(by_r.windows(2).all(|w| w[1] < w[0]), "{by_r:?}");
    let by_ry: Vec<f64> = [0.3, 0.6, 1.2].iter().map(|&r| estimate(1.0, Some(r))).collect();
    assert!(by_ry.windows(2).all(|w| w[1] >= w[0]), "{by_ry:?}");
}

/// `δ = ½ b₁ e^{−b₂} E e^{−b₃y²}` with `y ∼ N(0, Q₁)`, whose expectation is
/// `(1 + 2b₃Q₁)^{−1/2}`.
#[test]
fn packaged_delta_matches_closed_form() {
    let (_, drift) = Preset::Scalar1Linear.build().unwrap();
    let lbm = lower_bound(&drift, 7);
    let pb = packaged_bound(&lbm, DEFAULT_ETA).unwrap();
    assert_eq!(pb.p, 2.0);
    let (r, _) = delta_small_set(&lbm, Some(&pb), DeltaMode::Packaged, 1.0, None, 100_000, 0.99, &Stream::new(8)).unwrap();
    let ln_oracle = 0.5f64.ln() + pb.b1.ln() - pb.b2 - 0.5 * (1.0 + 2.0 * pb.b3 * q(1.0)).ln();
    let rel_se = r.mc_stderr_scaled / r.mc_mean_scaled;
    assert!(r.delta.ln() <= ln_oracle + 3.0 * rel_se, "{} vs {ln_oracle}", r.delta.ln());
    assert!(r.delta.ln() >= ln_oracle - 6.0 * rel_se, "{} vs {ln_oracle}", r.delta.ln());
}

#[test]
fn packaged_requires_bound_and_rejects_bad_radius() {
    let lbm = lower_bound(&cubic_drift(0.0), 9);
    assert!(delta_small_set(&lbm, None, DeltaMode::Packaged, 1.0, None, 1000, 0.99, &Stream::new(1)).is_err());
    assert!(delta_small_set(&lbm, None, DeltaMode::Pointwise, -1.0, None, 1000, 0.99, &Stream::new(1)).is_err());
    assert!(delta_small_set(&lbm, None, DeltaMode::Pointwise, 1.0, None, 10, 0.99, &Stream::new(1)).is_err());
    assert!(packaged_bound(&lbm, 1.5).is_err());
}
