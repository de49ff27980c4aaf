use proptest::prelude::*;
use renewal_ldp::lambda::{lambda_eval, lambda_grad};
use renewal_ldp::legendre::{
    conditional_rate_j, marginal_i1, poisson_g, rate_inf_over_region, rate_ld, rate_ld_ascent,
    rate_ld_poisson, ScaledPoint,
};
use renewal_ldp::region::Region;
use renewal_ldp::HoldingTimeModel;

fn model(i: usize) -> HoldingTimeModel {
    HoldingTimeModel::builtins()[i]
}

/// A point of the open cone around the law of large numbers centre.
fn point(m: &HoldingTimeModel, s: f64, frac: f64) -> ScaledPoint {
    let z1 = m.mean() * s;
    ScaledPoint::new(z1, z1 * frac)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn converged_solutions_close_the_duality_gap(i in 0usize..4, s in 0.5f64..2.0, frac in 0.2f64..0.8) {
        let m = model(i);
        let z = point(&m, s, frac);
        let r = rate_ld(&m, z).unwrap();
        prop_assume!(r.converged && !r.on_boundary);
        let t = r.argmax_tilt.unwrap();
        let primal = t.dot(z.as_array()) - lambda_eval(&m, t).unwrap().to_f64();
        let ascent = rate_ld_ascent(&m, z).unwrap().value.to_f64();
        prop_assert!((primal - ascent).abs() < 1e-8, "{primal} vs ascent {ascent}");
        let g = lambda_grad(&m, t).unwrap();
        prop_assert!((g[0] - z.z1).abs() < 1e-8 && (g[1] - z.z2).abs() < 1e-8, "{g:?} vs {z:?}");
    }

    #[test]
    fn exponential_agrees_with_the_g_root(lambda in 0.5f64..3.0, s in 0.3f64..3.0, frac in 0.05f64..0.95) {
        let m = HoldingTimeModel::exponential(lambda).unwrap();
        let z = point(&m, s, frac);
        let a = rate_ld(&m, z).unwrap().value.to_f64();
        let b = rate_ld_poisson(lambda, z).unwrap().value.to_f64();
        prop_assert!((a - b).abs() < 1e-6, "{a} vs {b} at {z:?}");
    }

    #[test]
    fn g_is_increasing(z1 in 0.2f64..4.0, frac in 0.05f64..0.95, u in 0.001f64..0.998, du in 1e-4f64..1e-2) {
        let z2 = z1 * frac;
        let (lo, hi) = (-1.0 / z2, 1.0 / (z1 - z2));
        let a = lo + (hi - lo) * u;
        let b = (a + du * (hi - lo)).min(hi - 1e-9 * (hi - lo));
        prop_assume!(b > a);
        prop_assert!(poisson_g(z1, z2, b) > poisson_g(z1, z2, a));
    }

    #[test]
    fn marginal_plus_conditional(i in 0usize..4, s in 0.5f64..2.0, frac in 0.2f64..0.8) {
        let m = model(i);
        let z = point(&m, s, frac);
        let full = rate_ld(&m, z).unwrap().value.to_f64();
        let i1 = marginal_i1(&m, z.z1).unwrap().value.to_f64();
        let j = conditional_rate_j(&m, z.z1, z.z2).unwrap().to_f64();
        prop_assert!((full - (i1 + j)).abs() < 1e-8);
        prop_assert!(j >= 0.0);
    }
}

#[test]
fn g_at_the_origin() {
    for (z1, z2) in [(1.0, 0.25), (2.0, 1.0), (3.0, 2.5)] {
        assert_eq!(poisson_g(z1, z2, 0.0), 0.0);
        let h = 1e-6;
        let slope = (poisson_g(z1, z2, h) - poisson_g(z1, z2, -h)) / (2.0 * h);
        assert!((slope - z1).abs() < 1e-8);
    }
}

#[test]
fn rate_vanishes_only_at_the_centre() {
    for m in HoldingTimeModel::builtins() {
        let c = [m.mean(), m.mean() / 2.0];
        let at = rate_ld(&m, ScaledPoint::new(c[0], c[1]))
            .unwrap()
            .value
            .to_f64();
        assert!(at.abs() < 1e-10, "{m}: {at}");
        for k in 0..6 {
            let th = std::f64::consts::PI * k as f64 / 3.0 + 0.3;
            let z = ScaledPoint::new(c[0] + 0.05 * th.cos(), c[1] + 0.05 * th.sin());
            let v = rate_ld(&m, z).unwrap().value.to_f64();
            assert!(v > 1e-4, "{m} at {z:?}: {v}");
        }
    }
}

#[test]
fn infinite_outside_the_cone() {
    for m in HoldingTimeModel::builtins() {
        for z in [[1.0, -0.1], [1.0, 1.2], [-1.0, -0.5]] {
            let r = rate_ld(&m, ScaledPoint::new(z[0], z[1])).unwrap();
            assert!(r.value.is_infinite(), "{m} at {z:?}");
        }
    }
}

#[test]
fn region_infimum_is_below_every_member() {
    let m = HoldingTimeModel::exponential(1.0).unwrap();
    let region: Region = "rect(1.4,1.8,0.6,0.8)".parse().unwrap();
    let inf = rate_inf_over_region(&m, &region).unwrap().to_f64();
    for (u, v) in [(1.4, 0.7), (1.6, 0.6), (1.8, 0.8), (1.5, 0.75)] {
        let r = rate_ld(&m, ScaledPoint::new(u, v)).unwrap().value.to_f64();
        assert!(inf <= r + 1e-9);
    }
    let corner = rate_ld(&m, ScaledPoint::new(1.4, 0.7))
        .unwrap()
        .value
        .to_f64();
    assert!((inf - corner).abs() < 1e-6, "{inf} vs {corner}");
}
