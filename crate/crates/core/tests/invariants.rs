use std::sync::OnceLock;

use ergobound::bridge::{BridgeKernel, TimeGrid};
use ergobound::ergodicity::{mt_constants, rate_row, spectral_gap, uniform_rate, UltimateBound};
use ergobound::lower_bounds::{build_lower_bound, packaged_bound, y_functionals, LowerBoundModel, PackagedBound, DEFAULT_ETA};
use ergobound::sim::{cubic_drift, empirical_tv, gaussian_tv, Preset};
use ergobound::{LinearModel, LogPos, Mat, Stream, Vector};
use proptest::prelude::*;

fn osc_kernel() -> &'static BridgeKernel {
    static K: OnceLock<BridgeKernel> = OnceLock::new();
    K.get_or_init(|| {
        let m = LinearModel::from_q_half(
            Mat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, -1.0]),
            Mat::from_diagonal(&Vector::from_vec(vec![0.0, 1.0])),
        )
        .unwrap();
        BridgeKernel::build(&m, &TimeGrid::uniform(64, 1e-2).unwrap()).unwrap()
    })
}

fn lower_bounds() -> &'static [(LowerBoundModel, PackagedBound); 2] {
    static L: OnceLock<[(LowerBoundModel, PackagedBound); 2]> = OnceLock::new();
    L.get_or_init(|| {
        let grid = TimeGrid::uniform(64, 1e-3).unwrap();
        let m = LinearModel::scalar(-1.0, 1.0).unwrap();
        let build = |d| {
            let (_, lbm) = build_lower_bound(&m, &d, &grid, 2000, 0.99, &Stream::new(1)).unwrap();
            let pb = packaged_bound(&lbm, DEFAULT_ETA).unwrap();
            (lbm, pb)
        };
        [build(Preset::Scalar1Linear.build().unwrap().1), build(cubic_drift(0.0))]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn logpos_matches_float_arithmetic(a in 1e-3f64..1e3, b in 1e-3f64..1e3) {
        let (la, lb) = (LogPos::new(a), LogPos::new(b));
        prop_assert!((la.mul(lb).value() / (a * b) - 1.0).abs() < 1e-12);
        prop_assert!((la.div(lb).value() / (a / b) - 1.0).abs() < 1e-12);
        prop_assert!((la.add(lb).value() / (a + b) - 1.0).abs() < 1e-12);
        let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
        let diff = LogPos::new(hi).sub(LogPos::new(lo)).value();
        prop_assert!((diff - (hi - lo)).abs() <= 1e-12 * hi);
        prop_assert_eq!(la < lb, a < b);
    }

    #[test]
    fn y_functionals_are_homogeneous(y0 in -3.0f64..3.0, y1 in -3.0f64..3.0, c in -4.0f64..4.0) {
        let k = osc_kernel();
        let y = Vector::from_vec(vec![y0, y1]);
        let f = y_functionals(k, &y);
        let g = y_functionals(k, &(&y * c));
        let tol = 1e-12 * (1.0 + f.u + f.u1 + f.u2) * (1.0 + c.abs());
        prop_assert!((g.u - c.abs() * f.u).abs() < tol);
        prop_assert!((g.u1 - c.abs() * f.u1).abs() < tol);
        prop_assert!((g.u2 - c.abs() * f.u2).abs() < tol);
    }

    #[test]
    fn packaged_never_exceeds_pointwise(x in -3.0f64..3.0, y in -3.0f64..3.0) {
        for (lbm, pb) in lower_bounds() {
            let point = lbm.exponent(&Vector::from_vec(vec![x]), &Vector::from_vec(vec![y]));
            prop_assert!(pb.ln_value(x.abs(), y.abs()) <= point + 1e-9 * point.abs().max(1.0));
        }
    }

    #[test]
    fn exponent_decreases_in_x_norm(x in 0.0f64..3.0, dx in 0.01f64..2.0, y in -2.0f64..2.0) {
        for (lbm, _) in lower_bounds() {
            let yv = Vector::from_vec(vec![y]);
            let near = lbm.exponent(&Vector::from_vec(vec![x]), &yv);
            let far = lbm.exponent(&Vector::from_vec(vec![x + dx]), &yv);
            prop_assert!(far <= near);
            prop_assert!(near <= 0.0 || lbm.k == 0.0);
        }
    }

    #[test]
    fn mt_constants_monotone_in_delta(d1 in 1e-6f64..0.99, d2 in 1e-6f64..0.99, b in 0.1f64..5.0, gap in 0.1f64..5.0) {
        let v = (2.0 * b).max(1.0) + gap;
        let a = mt_constants(LogPos::new(d1.min(d2)), b, v).unwrap();
        let c = mt_constants(LogPos::new(d1.max(d2)), b, v).unwrap();
        prop_assert!(a.m_c >= c.m_c);
        prop_assert!(a.m_c >= LogPos::ONE);
        let lh = c.lambda_hat();
        prop_assert!(lh > 0.0 && lh < 1.0);
    }

    #[test]
    fn rate_rows_are_consistent(delta in 1e-4f64..0.9, theta in 0.01f64..0.99, horizon in 0.1f64..10.0) {
        let mt = mt_constants(LogPos::new(delta), 1.0, 3.0).unwrap();
        let ub = UltimateBound::new(1.5, 0.5, 0.7).unwrap();
        let row = rate_row(&mt, &ub, horizon, theta).unwrap();
        prop_assert!(row.omega.is_positive());
        let u = row.one_minus_rho;
        prop_assert!(u.is_positive() && u <= LogPos::ONE.div(mt.m_c));
        // ωT = −ln(1 − u) ∈ [u, u/(1 − u)].
        let excess = row.omega.ln() + horizon.ln() - u.ln();
        prop_assert!(excess >= -1e-12 && excess <= -(1.0 - u.value()).ln() + 1e-12);
        prop_assert!(row.m >= LogPos::ONE.add(mt.gamma_c).scale(3.2).mul(mt.m_c));
    }

    #[test]
    fn uniform_rate_increases_with_delta(d1 in 1e-9f64..0.999, d2 in 1e-9f64..0.999) {
        let (w1, p1) = uniform_rate(LogPos::new(d1.min(d2))).unwrap();
        let (w2, p2) = uniform_rate(LogPos::new(d1.max(d2))).unwrap();
        prop_assert!(w1 <= w2 && p1 <= p2);
        let g = spectral_gap(Some(w2), None, 3.0, false).unwrap();
        prop_assert!((g.lp.unwrap().value() * 3.0 / w2.value() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_tv_is_a_distance(m1 in -2.0f64..2.0, m2 in -2.0f64..2.0, s1 in 0.3f64..3.0, s2 in 0.3f64..3.0) {
        let (a, b) = (Vector::from_vec(vec![m1]), Vector::from_vec(vec![m2]));
        let (ca, cb) = (Mat::from_element(1, 1, s1), Mat::from_element(1, 1, s2));
        let ab = gaussian_tv(&a, &ca, &b, &cb).unwrap();
        let ba = gaussian_tv(&b, &cb, &a, &ca).unwrap();
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((ab - ba).abs() < 1e-9);
        prop_assert!(gaussian_tv(&a, &ca, &a, &ca).unwrap() < 1e-12);
    }

    #[test]
    fn empirical_tv_is_symmetric(seed in 0u64..1000, shift in -1.0f64..1.0) {
        let gen = |s: u64, off: f64| -> Vec<Vec<f64>> {
            Stream::new(s).map_paths(2000, |i, _| vec![((i as f64 * 0.618_033_988_7) % 1.0) * 4.0 - 2.0 + off])
        };
        let a = gen(seed, 0.0);
        let b = gen(seed + 1, shift);
        let ab = empirical_tv(&a, &b, Some(20)).unwrap();
        let ba = empirical_tv(&b, &a, Some(20)).unwrap();
        prop_assert!((ab.tv - ba.tv).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab.tv));
    }
}
