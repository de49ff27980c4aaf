use proptest::prelude::*;
use renewal_ldp::lambda::{hessian_origin, lambda_eval, lambda_grad, TiltDomain};
use renewal_ldp::{HoldingTimeModel, Tilt};

const H: f64 = 1e-5;

fn model(i: usize) -> HoldingTimeModel {
    HoldingTimeModel::builtins()[i]
}

fn lam(m: &HoldingTimeModel, a1: f64, a2: f64) -> f64 {
    lambda_eval(m, Tilt::new(a1, a2)).unwrap().to_f64()
}

/// An interior tilt whose segment `α₁ + α₂y` stays `gap` below the boundary.
fn interior(m: &HoldingTimeModel, a2: f64, gap: f64) -> Tilt {
    Tilt::new(m.boundary() - a2.max(0.0) - gap, a2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn gradient_matches_central_differences(i in 0usize..4, a2 in -3.0f64..3.0, gap in 0.1f64..3.0) {
        let m = model(i);
        let t = interior(&m, a2, gap);
        let g = lambda_grad(&m, t).unwrap();
        let fd = [
            (lam(&m, t.a1 + H, t.a2) - lam(&m, t.a1 - H, t.a2)) / (2.0 * H),
            (lam(&m, t.a1, t.a2 + H) - lam(&m, t.a1, t.a2 - H)) / (2.0 * H),
        ];
        for k in 0..2 {
            let err = (g[k] - fd[k]).abs() / g[k].abs().max(1e-3);
            prop_assert!(err < 1e-6, "{m} at {t:?}: grad {g:?} vs fd {fd:?}");
        }
    }

    #[test]
    fn reflection_symmetry(i in 0usize..4, a2 in -3.0f64..3.0, gap in 0.01f64..3.0) {
        let m = model(i);
        let t = interior(&m, a2, gap);
        let a = lam(&m, t.a1, t.a2);
        let b = lam(&m, t.a1 + t.a2, -t.a2);
        prop_assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()), "{a} vs {b}");
    }

    #[test]
    fn convex_along_segments(
        i in 0usize..4,
        p in (-3.0f64..3.0, 0.01f64..3.0),
        q in (-3.0f64..3.0, 0.01f64..3.0),
    ) {
        let m = model(i);
        let (s, t) = (interior(&m, p.0, p.1), interior(&m, q.0, q.1));
        let mid = Tilt::new(0.5 * (s.a1 + t.a1), 0.5 * (s.a2 + t.a2));
        prop_assert!(TiltDomain::limit(&m).contains_interior(mid));
        let lhs = lam(&m, mid.a1, mid.a2);
        let rhs = 0.5 * (lam(&m, s.a1, s.a2) + lam(&m, t.a1, t.a2));
        prop_assert!(lhs <= rhs + 1e-10, "{lhs} > {rhs}");
    }

    #[test]
    fn exponential_closed_form(lambda in 0.3f64..4.0, a1 in -5.0f64..0.99, a2 in -5.0f64..5.0) {
        let m = HoldingTimeModel::exponential(lambda).unwrap();
        let a1 = a1 * lambda;
        prop_assume!(a2.abs() > 1e-3);
        let (u, v) = (lambda - a1 - a2, lambda - a1);
        prop_assume!(u > 0.0 && v > 0.0);
        let closed = lambda.ln() + 1.0 + (u * u.ln() - v * v.ln()) / a2;
        let got = lam(&m, a1, a2);
        prop_assert!((got - closed).abs() < 1e-9, "{got} vs {closed}");
    }
}

#[test]
fn hessian_at_the_origin_matches_second_differences() {
    let h = 1e-4;
    for m in HoldingTimeModel::builtins() {
        let c = hessian_origin(&m).c;
        let f = |a1, a2| lam(&m, a1, a2);
        let f0 = f(0.0, 0.0);
        let d11 = (f(h, 0.0) - 2.0 * f0 + f(-h, 0.0)) / (h * h);
        let d22 = (f(0.0, h) - 2.0 * f0 + f(0.0, -h)) / (h * h);
        let d12 = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h);
        for (got, want) in [(d11, c[0][0]), (d12, c[0][1]), (d22, c[1][1])] {
            assert!((got - want).abs() < 1e-6, "{m}: {got} vs {want}");
        }
    }
}

#[test]
fn value_outside_the_domain_is_infinite() {
    for m in HoldingTimeModel::builtins() {
        let b = m.boundary();
        assert!(lambda_eval(&m, Tilt::new(b + 0.1, -0.05))
            .unwrap()
            .is_infinite());
        assert!(lambda_eval(&m, Tilt::new(b - 0.5, 0.6))
            .unwrap()
            .is_infinite());
        assert!(lambda_grad(&m, Tilt::new(b + 0.1, 0.0)).is_err());
    }
}
