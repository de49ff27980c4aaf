use proptest::prelude::*;
use renewal_ldp::lambda::hessian_origin;
use renewal_ldp::legendre::{rate_ld, ScaledPoint};
use renewal_ldp::moderate::{
    correlation_limit, exact_moments, md_event_rate, psi, psi_star, ModerateScaling,
    CORRELATION_LIMIT,
};
use renewal_ldp::region::Region;
use renewal_ldp::{HoldingTimeModel, Tilt};

fn model(i: usize) -> HoldingTimeModel {
    HoldingTimeModel::builtins()[i]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn fenchel_young(i in 0usize..4, z in (-3.0f64..3.0, -3.0f64..3.0), a in (-5.0f64..5.0, -5.0f64..5.0)) {
        let m = model(i);
        let zp = ScaledPoint::new(z.0, z.1);
        let t = Tilt::new(a.0, a.1);
        prop_assert!(psi_star(&m, zp) >= t.dot([z.0, z.1]) - psi(&m, t) - 1e-12);
    }

    #[test]
    fn supremum_attained_at_c_inverse_z(i in 0usize..4, z in (-3.0f64..3.0, -3.0f64..3.0)) {
        let m = model(i);
        let ci = hessian_origin(&m).c_inv;
        let t = Tilt::new(ci[0][0] * z.0 + ci[0][1] * z.1, ci[1][0] * z.0 + ci[1][1] * z.1);
        let v = t.dot([z.0, z.1]) - psi(&m, t);
        let s = psi_star(&m, ScaledPoint::new(z.0, z.1));
        prop_assert!((v - s).abs() < 1e-9 * (1.0 + s));
    }

    #[test]
    fn region_rate_below_members(i in 0usize..4, r in 0.1f64..2.0, u in (-4.0f64..4.0, -4.0f64..4.0)) {
        let m = model(i);
        let region = Region::linf_outside([0.0, 0.0], r);
        let rate = md_event_rate(&m, &region).to_f64();
        if region.contains([u.0, u.1]) {
            prop_assert!(rate <= psi_star(&m, ScaledPoint::new(u.0, u.1)) + 1e-12);
        }
    }
}

#[test]
fn coarse_grid_recovers_psi_star() {
    let m = HoldingTimeModel::gamma(2.0, 2.0).unwrap();
    for k in 0..10 {
        let th = 0.7 * k as f64;
        let z = [0.4 * th.cos(), 0.3 * (1.3 * th).sin()];
        let mut best = f64::NEG_INFINITY;
        let mut arg = Tilt::ORIGIN;
        for i in -60..=60 {
            for j in -60..=60 {
                let t = Tilt::new(i as f64 * 0.5, j as f64 * 0.5);
                let v = t.dot(z) - psi(&m, t);
                if v > best {
                    best = v;
                    arg = t;
                }
            }
        }
        // polish: Newton on a quadratic is one step
        let c = hessian_origin(&m).c;
        let g = [
            z[0] - (c[0][0] * arg.a1 + c[0][1] * arg.a2),
            z[1] - (c[1][0] * arg.a1 + c[1][1] * arg.a2),
        ];
        let ci = hessian_origin(&m).c_inv;
        let t = Tilt::new(
            arg.a1 + ci[0][0] * g[0] + ci[0][1] * g[1],
            arg.a2 + ci[1][0] * g[0] + ci[1][1] * g[1],
        );
        let polished = (t.dot(z) - psi(&m, t)).max(best);
        let exact = psi_star(&m, ScaledPoint::new(z[0], z[1]));
        assert!((polished - exact).abs() < 1e-4, "{polished} vs {exact}");
    }
}

#[test]
fn second_order_expansion_of_the_large_deviation_rate() {
    let eps = 1e-3;
    for m in HoldingTimeModel::builtins() {
        let c = [m.mean(), m.mean() / 2.0];
        for k in 0..8 {
            let th = std::f64::consts::PI * k as f64 / 4.0 + 0.1;
            let u = [th.cos(), th.sin()];
            let z = ScaledPoint::new(c[0] + eps * u[0], c[1] + eps * u[1]);
            let ratio = rate_ld(&m, z).unwrap().value.to_f64() / (eps * eps);
            let want = psi_star(&m, ScaledPoint::new(u[0], u[1]));
            assert!(
                (ratio - want).abs() / want < 0.05,
                "{m} along {u:?}: {ratio} vs {want}"
            );
        }
    }
}

fn weighted_sums(m: &HoldingTimeModel, x: f64) -> [f64; 5] {
    let n = x.ceil() as usize;
    let w: Vec<f64> = (1..=n).map(|j| x - j as f64 + 1.0).collect();
    let (d1, d2) = (m.mean(), m.variance());
    [
        n as f64 * d1,
        n as f64 * d2,
        d1 * w.iter().sum::<f64>(),
        d2 * w.iter().map(|v| v * v).sum::<f64>(),
        d2 * w.iter().sum::<f64>(),
    ]
}

#[test]
fn moments_match_weighted_sums_and_branch_limits() {
    for m in HoldingTimeModel::builtins() {
        for x in [1.0, 2.0, 2.5, 7.25, 10.0, 10.5, 31.9] {
            let r = exact_moments(&m, x).unwrap();
            let got = [r.mean_tau, r.var_tau, r.mean_area, r.var_area, r.cov];
            for (g, w) in got.iter().zip(weighted_sums(&m, x)) {
                assert!(
                    (g - w).abs() < 1e-10 * (1.0 + w.abs()),
                    "{m} x={x}: {g} vs {w}"
                );
            }
        }
        for k in 2..6 {
            let mk = k as f64;
            let below = exact_moments(&m, mk + 1.0 - 1e-9).unwrap();
            let at_next = exact_moments(&m, mk + 1.0).unwrap();
            assert!((below.var_area - at_next.var_area).abs() < 1e-6 * at_next.var_area);
            assert!((below.mean_area - at_next.mean_area).abs() < 1e-6 * at_next.mean_area);
            let above = exact_moments(&m, mk + 1e-9).unwrap();
            let at = exact_moments(&m, mk).unwrap();
            // one extra holding time enters just above an integer
            assert!((above.mean_tau - at.mean_tau - m.mean()).abs() < 1e-12);
            assert!(above.var_area > at.var_area);
        }
    }
}

#[test]
fn correlation_bound() {
    for m in HoldingTimeModel::builtins() {
        for x in [10.0, 10.5, 25.0, 100.0, 1e3, 1e4] {
            let c = correlation_limit(&m, x).unwrap();
            assert!(
                (c.rho_x - CORRELATION_LIMIT).abs() < 2.0 / x,
                "{m} x={x}: {}",
                c.rho_x
            );
            assert_eq!(c.limit, CORRELATION_LIMIT);
        }
    }
    assert!((CORRELATION_LIMIT - 3f64.sqrt() / 2.0).abs() < 1e-16);
}

#[test]
fn scaling_checks() {
    let s = ModerateScaling::power(0.5).unwrap();
    assert!(s.validate_on(&[10.0, 100.0, 1000.0]).is_ok());
    assert!(ModerateScaling::power(1.0).is_err());
    assert!(ModerateScaling::Custom(|_| 1.0)
        .validate_on(&[1.0, 2.0])
        .is_err());
    assert!((s.multiplier(100.0) - 10f64.sqrt()).abs() < 1e-12);
}
