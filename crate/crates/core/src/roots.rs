//! One-dimensional root finding and convex minimization.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub iterations: usize,
}

/// Newton's method safeguarded by a sign-changing bracket `[lo, hi]`.
///
/// `f` returns `(value, derivative)`. `f(lo)` and `f(hi)` must differ in sign.
pub fn newton_bisect<F>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    x_tol: f64,
    max_iter: usize,
) -> Result<Root>
where
    F: FnMut(f64) -> (f64, f64),
{
    let (flo, _) = f(lo);
    let (fhi, _) = f(hi);
    if flo == 0.0 {
        return Ok(Root {
            x: lo,
            iterations: 0,
        });
    }
    if fhi == 0.0 {
        return Ok(Root {
            x: hi,
            iterations: 0,
        });
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::SolverFailure {
            reason: format!("root not bracketed by [{lo}, {hi}]"),
            iterations: 0,
            best_bound: f64::NAN,
        });
    }
    let increasing = flo < 0.0;
    let mut x = 0.5 * (lo + hi);
    for it in 1..=max_iter {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return Ok(Root { x, iterations: it });
        }
        if (fx < 0.0) == increasing {
            lo = x;
        } else {
            hi = x;
        }
        let mut next = x - fx / dfx;
        if !next.is_finite() || next <= lo.min(hi) || next >= lo.max(hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - x).abs();
        x = next;
        if step <= x_tol * (1.0 + x.abs()) || (hi - lo).abs() <= x_tol * (1.0 + x.abs()) {
            return Ok(Root { x, iterations: it });
        }
    }
    Err(Error::SolverFailure {
        reason: "Newton-bisection iteration cap".into(),
        iterations: max_iter,
        best_bound: x,
    })
}

/// Plain bisection on a sign-changing bracket, run until the bracket cannot
/// shrink any further or `max_iter` halvings.
pub fn bisect<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    max_iter: usize,
) -> Result<Root> {
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(Root {
            x: lo,
            iterations: 0,
        });
    }
    if fhi == 0.0 {
        return Ok(Root {
            x: hi,
            iterations: 0,
        });
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::SolverFailure {
            reason: format!("root not bracketed by [{lo}, {hi}]"),
            iterations: 0,
            best_bound: f64::NAN,
        });
    }
    let lo_negative = flo < 0.0;
    for it in 1..=max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            return Ok(Root {
                x: mid,
                iterations: it,
            });
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(Root {
                x: mid,
                iterations: it,
            });
        }
        if (fm < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Root {
        x: 0.5 * (lo + hi),
        iterations: max_iter,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the minimum of a unimodal function on `[a, b]`.
pub fn golden_section<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    x_tol: f64,
    max_iter: usize,
) -> Minimum {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut it = 0;
    while it < max_iter && (b - a).abs() > x_tol * (1.0 + c.abs().max(d.abs())) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        it += 1;
    }
    if fc <= fd {
        Minimum {
            x: c,
            value: fc,
            iterations: it,
        }
    } else {
        Minimum {
            x: d,
            value: fd,
            iterations: it,
        }
    }
}

/// Minimizes a convex function on `[lo, hi]` (`hi` may be `+inf`), expanding
/// the bracket geometrically until the objective rises on both sides.
pub fn minimize_convex<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    start: f64,
    x_tol: f64,
    max_expansions: usize,
) -> Result<Minimum> {
    if hi.is_finite() {
        return Ok(golden_section(f, lo, hi, x_tol, 400));
    }
    let mut b = start.max(lo);
    let mut fb = f(b);
    let mut step = (b - lo).abs().max(1.0);
    let mut c = b + step;
    let mut fc = f(c);
    let mut expansions = 0;
    while fc < fb {
        expansions += 1;
        if expansions > max_expansions {
            return Err(Error::SolverFailure {
                reason: "bracket expansion cap".into(),
                iterations: expansions,
                best_bound: fc,
            });
        }
        b = c;
        fb = fc;
        step *= 2.0;
        c = b + step;
        fc = f(c);
    }
    let mut m = golden_section(&mut f, lo, c, x_tol, 400);
    m.iterations += expansions;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newton_bisect_finds_sqrt2() {
        let r = newton_bisect(|x| (x * x - 2.0, 2.0 * x), 0.0, 2.0, 1e-15, 100).unwrap();
        assert!((r.x - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn unbracketed_root_is_an_error() {
        assert!(newton_bisect(|x| (x * x + 1.0, 2.0 * x), -1.0, 1.0, 1e-12, 50).is_err());
    }

    #[test]
    fn bisection_runs_to_float_resolution() {
        let r = bisect(|x| x.powi(3) - 0.125, 0.0, 1.0, 200).unwrap();
        assert!((r.x - 0.5).abs() < 1e-15);
    }

    #[test]
    fn golden_section_and_unbounded_bracket() {
        let m = golden_section(|x| (x - 0.3).powi(2), -1.0, 2.0, 1e-12, 500);
        assert!((m.x - 0.3).abs() < 1e-6);
        let m = minimize_convex(
            |x| (x - 40.0).powi(2) + 1.0,
            0.0,
            f64::INFINITY,
            1.0,
            1e-12,
            60,
        )
        .unwrap();
        assert!((m.x - 40.0).abs() < 1e-5);
        assert!((m.value - 1.0).abs() < 1e-9);
    }
}
