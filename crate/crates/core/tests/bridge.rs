use ergobound::bridge::{BridgeKernel, BridgeScheme, TimeGrid};
use ergobound::stats::sample_cov_with_se;
use ergobound::{LinearModel, Mat, Stream, Vector};

fn scalar_kernel(grid: &TimeGrid) -> BridgeKernel {
    BridgeKernel::build(&LinearModel::scalar(-1.0, 1.0).unwrap(), grid).unwrap()
}

fn osc() -> LinearModel {
    LinearModel::from_q_half(
        Mat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
        Mat::from_diagonal(&Vector::from_vec(vec![0.0, 1.0])),
    )
    .unwrap()
}

fn half_grid() -> TimeGrid {
    TimeGrid::from_nodes(vec![0.0, 0.25, 0.5, 0.75, 0.99, 1.0], 0.01).unwrap()
}

#[test]
fn scalar_node_values() {
    let k = scalar_kernel(&half_grid());
    let n = &k.nodes[2];
    assert!((n.v[(0, 0)] - 0.5186).abs() < 1e-4);
    assert!((n.q_hat[(0, 0)] - 0.2311).abs() < 1e-4);
    let (mean, _) = k.marginal(2, &Vector::from_vec(vec![1.0]), &Vector::from_vec(vec![0.0]));
    assert!((mean[0] - 0.4434).abs() < 1e-4);
    assert!(k.identity_residual() < 1e-12);
}

#[test]
fn v_norm_below_one() {
    let grid = TimeGrid::uniform(200, 0.01).unwrap();
    let s = scalar_kernel(&grid).v_norm_profile();
    assert_eq!(s.violations, 0);
    let o = BridgeKernel::build(&osc(), &grid).unwrap().v_norm_profile();
    assert_eq!(o.violations, 0);
    assert!(o.points.iter().all(|p| p.1 < 1.0));
}

#[test]
fn grid_validation() {
    assert!(TimeGrid::uniform(1, 1e-3).is_err());
    assert!(TimeGrid::uniform(10, 0.5).is_err());
    assert!(TimeGrid::from_nodes(vec![0.0, 0.6, 0.5, 1.0], 0.1).is_err());
    let g = TimeGrid::uniform(100, 1e-3).unwrap();
    assert_eq!(g.nodes.len(), 101);
    assert!((g.nodes[99] - 0.999).abs() < 1e-15 && g.nodes[100] == 1.0);
}

#[test]
fn zero_endpoints_give_zero_mean_path() {
    let k = scalar_kernel(&TimeGrid::uniform(64, 1e-2).unwrap());
    let zero = Vector::from_vec(vec![0.0]);
    let paths: Vec<Vec<f64>> = Stream::new(7).map_paths(20_000, |_, rng| {
        k.sample_sde_path(rng, &zero, &zero).unwrap().states.iter().map(|v| v[0]).collect()
    });
    for i in [16, 32, 48] {
        let col: Vec<Vec<f64>> = paths.iter().map(|p| vec![p[i]]).collect();
        let (mean, _, _, se) = sample_cov_with_se(&col);
        assert!(mean[0].abs() < 4.0 * se[0], "node {i}: {} ± {}", mean[0], se[0]);
    }
}

/// Strategies A and B agree for both bridge-SDE schemes.
#[test]
fn strategies_agree_on_scalar_model() {
    let grid = TimeGrid::uniform(128, 1e-2).unwrap();
    let x = Vector::from_vec(vec![1.0]);
    let y = Vector::from_vec(vec![-0.5]);
    for scheme in [BridgeScheme::Exact, BridgeScheme::EulerMaruyama] {
        let k = scalar_kernel(&grid).with_scheme(scheme);
        let i = grid.nearest(0.5);
        let (m, c) = k.marginal(i, &x, &y);
        let b: Vec<Vec<f64>> = Stream::new(11).map_paths(40_000, |_, rng| {
            vec![k.sample_sde_path(rng, &x, &y).unwrap().states[i][0]]
        });
        let (mean, cov, cov_se, se) = sample_cov_with_se(&b);
        assert!((mean[0] - m[0]).abs() < 4.0 * se[0], "{scheme:?} mean");
        assert!((cov[(0, 0)] - c[(0, 0)]).abs() < 4.0 * cov_se[(0, 0)] + 5e-3, "{scheme:?} var");
        let a: Vec<Vec<f64>> = Stream::new(12).map_paths(40_000, |_, rng| {
            vec![m[0] + k.sample_centered_path(rng)[i][0]]
        });
        let (mean_a, cov_a, cov_se_a, se_a) = sample_cov_with_se(&a);
        assert!((mean_a[0] - m[0]).abs() < 4.0 * se_a[0]);
        assert!((cov_a[(0, 0)] - c[(0, 0)]).abs() < 4.0 * cov_se_a[(0, 0)]);
    }
}

#[test]
fn centered_bridge_pins_both_ends() {
    let k = BridgeKernel::build(&osc(), &TimeGrid::uniform(32, 1e-2).unwrap()).unwrap();
    let mut rng = Stream::new(3).path(0);
    let p = k.sample_centered_path(&mut rng);
    assert!(p[0].norm() == 0.0 && p.last().unwrap().norm() == 0.0);
}
