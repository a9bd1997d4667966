use ergobound::sim::{
    empirical_tv, exact_linear_tv, gaussian_tv, parameter_sweep, scalar_linear_scheme_moments, simulate_sde,
    two_start_experiment, BoundCurve, ExperimentConfig, Preset, SimConfig, TvCurve,
};
use ergobound::ergodicity::closed_loop;
use ergobound::stats::normal_cdf;
use ergobound::{LinearModel, LogPos, Mat, Stream, Vector};
use rand_distr::{Distribution, StandardNormal};

fn normals(n: usize, shift: f64, seed: u64) -> Vec<Vec<f64>> {
    Stream::new(seed).map_paths(n, |_, rng| {
        let z: f64 = StandardNormal.sample(rng);
        vec![z + shift]
    })
}

#[test]
fn scheme_weak_error_halves_with_step() {
    let m = LinearModel::scalar(-1.0, 1.0).unwrap();
    let (x0, t) = (1.0f64, 1.0f64);
    let mean = (-2.0 * t).exp() * x0;
    let var = (1.0 - (-4.0 * t).exp()) / 4.0;
    let gap = |h: f64| {
        let (mu, v) = scalar_linear_scheme_moments(&m, -1.0, h, (t / h).round() as usize, x0).unwrap();
        (mu - mean).abs() + (v - var).abs()
    };
    let (g1, g2, g3) = (gap(0.02), gap(0.01), gap(0.005));
    assert!(g1 < 0.02);
    for ratio in [g1 / g2, g2 / g3] {
        assert!((ratio - 2.0).abs() < 0.1, "ratio {ratio}");
    }
}

#[test]
fn simulated_marginal_matches_scheme_law() {
    let (m, drift) = Preset::Scalar1Linear.build().unwrap();
    let cfg = SimConfig { h: 0.01, t_max: 1.0, n_paths: 40_000, scheme: Default::default(), seed: 3 };
    let (times, s) = simulate_sde(&m, &drift, &[1.0], &cfg, 0.5).unwrap();
    assert_eq!(times, vec![0.5, 1.0]);
    let (mu, v) = scalar_linear_scheme_moments(&m, -1.0, 0.01, 100, 1.0).unwrap();
    let xs: Vec<f64> = s[1].iter().map(|p| p[0]).collect();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    assert!((mean - mu).abs() < 4.0 * (v / xs.len() as f64).sqrt());
    assert!((var / v - 1.0).abs() < 0.03);
    let again = simulate_sde(&m, &drift, &[1.0], &cfg, 0.5).unwrap();
    assert_eq!(again.1, s);
}

#[test]
fn histogram_tv_tracks_gaussian_shift() {
    let a = normals(100_000, 0.0, 1);
    let b = normals(100_000, 1.0, 2);
    let est = empirical_tv(&a, &b, None).unwrap();
    let exact = 2.0 * normal_cdf(0.5) - 1.0;
    let g = gaussian_tv(&Vector::from_vec(vec![0.0]), &Mat::identity(1, 1), &Vector::from_vec(vec![1.0]), &Mat::identity(1, 1))
        .unwrap();
    assert!((g - exact).abs() < 1e-10);
    assert!((est.tv - exact).abs() < 0.02, "{est:?} vs {exact}");
    assert!(empirical_tv(&a[..10], &b[..10], None).is_err());
}

#[test]
fn exact_linear_tv_decays() {
    let (m, d) = Preset::parse("oscillator").unwrap().build().unwrap();
    let cl = LinearModel::from_q_half(closed_loop(&m, &d).unwrap(), m.q_half.clone()).unwrap();
    let tv = exact_linear_tv(&cl, &Vector::from_vec(vec![5.0, 0.0]), &[0.1, 1.0, 5.0, 20.0]).unwrap();
    assert!(tv[0] > 1.9 && tv[3] < 1e-3, "{tv:?}");
    assert!(tv.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn tv_curve_csv() {
    let curve = TvCurve {
        times: vec![1.0, 2.0],
        tv_estimates: vec![0.5, 0.25],
        tv_stderrs: vec![0.01, 0.01],
        bound_values: Vec::new(),
        exact: None,
    };
    let b = BoundCurve::VUniform { m: LogPos::new(4.0), omega: LogPos::new(0.5), v_x: 1.0 };
    let c = curve.with_bound(&b);
    assert!(c.dominated());
    assert!((c.bound_values[1].value() - 4.0 * (-1.0f64).exp()).abs() < 1e-12);
    let csv = c.to_csv();
    assert!(csv.starts_with("t,tv,stderr,bound,ln_bound\r\n"));
    assert_eq!(csv.matches("\r\n").count(), 3);
    let tight = curve.with_bound(&BoundCurve::VUniform { m: LogPos::new(0.1), omega: LogPos::new(0.5), v_x: 1.0 });
    assert!(!tight.dominated());
}

#[test]
fn two_starts_converge() {
    let m = LinearModel::scalar(-1.0, 1.0).unwrap();
    let drift = ergobound::sim::cubic_drift(0.0);
    let cfg = ExperimentConfig {
        h: 0.01,
        n_paths: 5000,
        n_reference: 0,
        times: vec![0.1, 3.0],
        burn_in: 0.0,
        projection: None,
        bins: None,
        seed: 1,
    };
    let bound = BoundCurve::Uniform { prefactor: 1.0, omega_hat: LogPos::new(1e-3), initial_var: 2.0 };
    let r = two_start_experiment(&m, &drift, &[-2.0], &[2.0], &bound, &cfg, &Stream::new(1)).unwrap();
    assert!(r.curve.tv_estimates[0] > 1.5 && r.curve.tv_estimates[1] < 0.2, "{:?}", r.curve);
    assert!(r.verdict);
}

#[test]
fn sweep_orders_rows_by_distance() {
    let m = LinearModel::scalar(-1.0, 1.0).unwrap();
    let cfg = ExperimentConfig {
        h: 0.02,
        n_paths: 0,
        n_reference: 20_000,
        times: Vec::new(),
        burn_in: 4.0,
        projection: None,
        bins: Some(16),
        seed: 2,
    };
    let t = parameter_sweep(&m, &|a| ergobound::sim::cubic_drift(a), &[0.0, 0.5, 0.25], 0.0, &cfg, &Stream::new(2))
        .unwrap();
    assert_eq!(t.rows.iter().map(|r| r.alpha).collect::<Vec<_>>(), vec![0.5, 0.25, 0.0]);
    assert!(t.rows[0].tv > t.rows[2].tv);
    assert!(t.to_csv().starts_with("alpha,tv,stderr\r\n"));
}

#[test]
fn presets_and_configs() {
    for name in ["oscillator", "scalar1", "scalar1_linear", "scalar1-linear", "cubic", "galerkin"] {
        let (m, d) = Preset::parse(name).unwrap().build().unwrap();
        assert!(m.kalman_strong_feller().strong_feller, "{name}");
        d.validate(m.d).unwrap();
    }
    assert!(Preset::parse("duffing").is_err());
    let p: Preset = serde_json::from_str(r#"{"name": "oscillator", "alpha2": 2.0}"#).unwrap();
    assert_eq!(p, Preset::Oscillator { alpha1: 1.0, alpha2: 2.0, sigma: 1.0 });
    assert!(serde_json::from_str::<Preset>(r#"{"name": "cubic", "beta": 1.0}"#).is_err());
    assert!(Preset::Cubic { alpha: 0.7 }.build().is_err());
    let bad = r#"{"h": 0.01, "n_paths": 1, "n_reference": 1, "times": [], "burn_in": 1, "seed": 1, "extra": 0}"#;
    assert!(serde_json::from_str::<ExperimentConfig>(bad).is_err());
}
