//! The large deviation rate function `Λ*(z) = sup_α {α·z − Λ(α)}` of
//! `(τ(x)/x, A(x)/x²)`, the marginal rates and the conditional part `J`,
//! plus the explicit solver for exponential holding times.

use serde::{Deserialize, Serialize};

use crate::cgf::{phi_star, HoldingTimeModel};
use crate::error::{Error, Result};
use crate::extended::ExtReal;
use crate::lambda::{lambda_eval, lambda_integral, lambda_local, LocalExpansion, Tilt, TiltDomain};
use crate::quadrature::{self, Endpoint, QuadOptions};
use crate::rate::{RateEvaluation, RateMethod};
use crate::region::{Axis, Region, RegionPiece};
use crate::roots;

/// Point `(z₁, z₂) = (τ/x, A/x²)` of the scaled plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledPoint {
    pub z1: f64,
    pub z2: f64,
}

impl ScaledPoint {
    pub fn new(z1: f64, z2: f64) -> Self {
        Self { z1, z2 }
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.z1, self.z2]
    }

    /// `0 ≤ z₂ ≤ z₁`.
    pub fn in_cone(&self) -> bool {
        0.0 <= self.z2 && self.z2 <= self.z1
    }

    /// `0 < z₂ < z₁`.
    pub fn in_cone_interior(&self) -> bool {
        0.0 < self.z2 && self.z2 < self.z1
    }
}

/// Stopping rules of the Newton solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub residual_tol: f64,
    pub stagnation_tol: f64,
    pub stagnation_window: usize,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            residual_tol: 1e-10,
            stagnation_tol: 1e-14,
            stagnation_window: 5,
            max_iter: 200,
            max_halvings: 60,
        }
    }
}

/// Residual below which a stagnated Newton run still counts as converged.
const STAGNATION_ACCEPT: f64 = 1e-7;

fn center(model: &HoldingTimeModel) -> ScaledPoint {
    let m = model.mean();
    ScaledPoint::new(m, m / 2.0)
}

fn check_finite(z: ScaledPoint) -> Result<()> {
    if z.z1.is_nan() || z.z2.is_nan() {
        return Err(Error::Domain("NaN coordinate".into()));
    }
    Ok(())
}

/// `Λ*(z)`.
///
/// Outside the cone `T` the value is `+inf`. Interior points are solved by
/// damped Newton on `∇Λ(α) = z`; when Newton cannot finish (non-steep models,
/// maximizer on the domain boundary) or `z` lies on the boundary of `T`, the
/// nested one-dimensional ascent takes over.
pub fn rate_ld(model: &HoldingTimeModel, z: ScaledPoint) -> Result<RateEvaluation> {
    check_finite(z)?;
    if !z.in_cone() || !z.z1.is_finite() {
        return Ok(RateEvaluation::infinite(RateMethod::ClosedForm));
    }
    if z == center(model) {
        return Ok(RateEvaluation::zero());
    }
    if !z.in_cone_interior() {
        let mut r = rate_ld_ascent(model, z)?;
        r.on_boundary = true;
        return Ok(r);
    }
    match rate_ld_newton(model, z, &SolverOptions::default()) {
        Ok(r) if r.converged => Ok(r),
        Ok(partial) => {
            let asc = rate_ld_ascent(model, z)?;
            Ok(if asc.value >= partial.value {
                asc
            } else {
                partial
            })
        }
        Err(_) => rate_ld_ascent(model, z),
    }
}

/// Newton only. Returns a non-converged evaluation on stagnation and an
/// error when no acceptable step exists.
pub fn rate_ld_newton(
    model: &HoldingTimeModel,
    z: ScaledPoint,
    opts: &SolverOptions,
) -> Result<RateEvaluation> {
    let zz = z.as_array();
    let dom = TiltDomain::limit(model);
    let mut a = Tilt::ORIGIN;
    let mut loc = lambda_local(model, a)?;
    let mut obj = a.dot(zz) - loc.value;
    let mut history = vec![obj];
    let scale = 1.0 + zz[0].abs().max(zz[1].abs());
    let mut best_residual = f64::INFINITY;
    let closed = model.domain().boundary_closed;
    let b = model.boundary();
    let edge_gap = |t: Tilt| b - t.a1 - t.a2.max(0.0);
    for it in 1..=opts.max_iter {
        let r = [zz[0] - loc.grad[0], zz[1] - loc.grad[1]];
        let res = r[0].abs().max(r[1].abs());
        best_residual = best_residual.min(res);
        if res <= opts.residual_tol * scale {
            return Ok(newton_result(a, obj, true, it));
        }
        let n = history.len();
        if n > opts.stagnation_window
            && (obj - history[n - 1 - opts.stagnation_window]).abs()
                <= opts.stagnation_tol * (1.0 + obj.abs())
        {
            return Ok(newton_result(a, obj, res <= STAGNATION_ACCEPT * scale, it));
        }
        let d = newton_direction(&loc, r).ok_or_else(|| Error::SolverFailure {
            reason: "singular Hessian of Λ".into(),
            iterations: it,
            best_bound: obj.max(0.0),
        })?;
        if closed && edge_gap(a) < 1e-6 * (1.0 + b.abs()) {
            // pressed against a closed boundary: no stationary point nearby
            return Ok(newton_result(a, obj, false, it));
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let cand = Tilt::new(a.a1 + step * d[0], a.a2 + step * d[1]);
            if dom.contains_interior(cand) {
                if let Ok(l) = lambda_local(model, cand) {
                    let cobj = cand.dot(zz) - l.value;
                    if cobj.is_finite() && cobj >= obj - 1e-13 * (1.0 + obj.abs()) {
                        accepted = Some((cand, l, cobj));
                        break;
                    }
                }
            }
            step *= 0.5;
        }
        match accepted {
            Some((cand, l, cobj)) => {
                a = cand;
                loc = l;
                obj = cobj;
                history.push(obj);
            }
            None => {
                return Err(Error::SolverFailure {
                    reason: format!("no acceptable Newton step (residual {best_residual:e})"),
                    iterations: it,
                    best_bound: obj.max(0.0),
                })
            }
        }
    }
    Ok(newton_result(a, obj, false, opts.max_iter))
}

fn newton_direction(loc: &LocalExpansion, r: [f64; 2]) -> Option<[f64; 2]> {
    let h = loc.hess;
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    if !(det > 0.0) || !det.is_finite() {
        return None;
    }
    Some([
        (h[1][1] * r[0] - h[0][1] * r[1]) / det,
        (h[0][0] * r[1] - h[1][0] * r[0]) / det,
    ])
}

fn newton_result(a: Tilt, obj: f64, converged: bool, iterations: usize) -> RateEvaluation {
    RateEvaluation {
        value: ExtReal::Finite(obj.max(0.0)),
        argmax_tilt: Some(a),
        converged,
        iterations,
        method: RateMethod::Newton,
        on_boundary: false,
    }
}

struct Concave1d {
    x: f64,
    value: f64,
    attained: bool,
    at_limit: bool,
    iterations: usize,
}

/// Maximizes a concave function on `(-inf, hi]` (`hi` may be `+inf`),
/// expanding from `start` until the function turns down.
fn maximize_concave<F: FnMut(f64) -> f64>(
    mut f: F,
    start: f64,
    hi: f64,
    max_expansions: usize,
) -> Concave1d {
    let neg = |v: f64| if v.is_nan() { f64::NEG_INFINITY } else { v };
    let x0 = start.min(hi);
    let f0 = neg(f(x0));
    let h0 = 0.5 * (1.0 + x0.abs());
    let mut iterations = 0;
    // decide the direction of increase
    let right = if x0 < hi { (x0 + h0).min(hi) } else { x0 };
    let fr = if right > x0 {
        neg(f(right))
    } else {
        f64::NEG_INFINITY
    };
    let (dir, mut a, mut b, mut fb) = if fr > f0 {
        (1.0, x0, right, fr)
    } else {
        let left = x0 - h0;
        let fl = neg(f(left));
        if fl > f0 {
            (-1.0, x0, left, fl)
        } else {
            // bracketed around x0
            let m = roots::golden_section(|x| -neg(f(x)), left, right.max(x0 + 1e-300), 1e-12, 300);
            let (x, value) = if f0 >= -m.value {
                (x0, f0)
            } else {
                (m.x, -m.value)
            };
            return Concave1d {
                x,
                value,
                attained: true,
                at_limit: false,
                iterations: m.iterations,
            };
        }
    };
    let mut step = (b - a).abs();
    loop {
        iterations += 1;
        if iterations > max_expansions {
            return Concave1d {
                x: b,
                value: fb,
                attained: false,
                at_limit: false,
                iterations,
            };
        }
        step *= 2.0;
        let mut c = b + dir * step;
        if dir > 0.0 && c >= hi {
            c = hi;
        }
        let fc = neg(f(c));
        if fc < fb {
            let (lo, up) = if a < c { (a, c) } else { (c, a) };
            let m = roots::golden_section(|x| -neg(f(x)), lo, up, 1e-12, 300);
            let (x, value) = if fb >= -m.value {
                (b, fb)
            } else {
                (m.x, -m.value)
            };
            return Concave1d {
                x,
                value,
                attained: true,
                at_limit: false,
                iterations: iterations + m.iterations,
            };
        }
        if c == hi {
            return Concave1d {
                x: c,
                value: fc,
                attained: fc.is_finite(),
                at_limit: true,
                iterations,
            };
        }
        a = b;
        b = c;
        fb = fc;
    }
}

struct InnerMax {
    a1: f64,
    value: f64,
    attained: bool,
    at_boundary: bool,
}

/// One-sided `∂/∂α₁` of `α₁ z₁ − Λ` at `α₁ = bmax`, where the top of the
/// segment touches a closed boundary.
fn edge_slope(model: &HoldingTimeModel, bmax: f64, a2: f64, z1: f64) -> Option<f64> {
    if a2 == 0.0 {
        let d = model.cgf_d1(bmax - 1e-12 * (1.0 + bmax.abs()));
        return d.is_finite().then_some(z1 - d);
    }
    let end = if a2 > 0.0 {
        Endpoint::Right
    } else {
        Endpoint::Left
    };
    let opts = QuadOptions {
        abs_tol: 1e-11,
        rel_tol: 1e-11,
        ..QuadOptions::default()
    };
    quadrature::integrate(|y| model.cgf_d1(bmax + a2 * y), 0.0, 1.0, Some(end), &opts)
        .ok()
        .map(|i| z1 - i)
}

/// `sup_{α₁} {α₁ z₁ + α₂ z₂ − Λ(α₁, α₂)}` for fixed `α₂`.
fn inner_sup(model: &HoldingTimeModel, a2: f64, z: [f64; 2]) -> InnerMax {
    let b = model.boundary();
    let bmax = b - a2.max(0.0);
    let objective = |a1: f64, l: &LocalExpansion| a1 * z[0] + a2 * z[1] - l.value;
    let deriv = |a1: f64| -> Option<(f64, f64, f64)> {
        lambda_local(model, Tilt::new(a1, a2))
            .ok()
            .map(|l| (z[0] - l.grad[0], -l.hess[0][0], objective(a1, &l)))
    };
    // upper end of the bracket: approach the domain edge geometrically and
    // stop once the objective turns down; on the full line, double instead
    let mut hi;
    let mut hi_info;
    if model.domain().boundary_closed {
        if let Some(g) = edge_slope(model, bmax, a2, z[0]) {
            if g >= 0.0 {
                let value = match lambda_eval(model, Tilt::new(bmax, a2)) {
                    Ok(ExtReal::Finite(l)) => bmax * z[0] + a2 * z[1] - l,
                    _ => f64::NEG_INFINITY,
                };
                return InnerMax {
                    a1: bmax,
                    value,
                    attained: value.is_finite(),
                    at_boundary: true,
                };
            }
        }
    }
    if bmax.is_finite() {
        let scale = 1.0 + bmax.abs();
        hi = bmax - 0.5 * scale;
        hi_info = deriv(hi);
        let mut gap = 0.5 * scale;
        while let Some((g, _, _)) = hi_info {
            if g < 0.0 || gap < 1e-10 * scale {
                break;
            }
            gap *= 0.5;
            match deriv(bmax - gap) {
                Some(info) => {
                    hi = bmax - gap;
                    hi_info = Some(info);
                }
                None => break,
            }
        }
    } else {
        hi = 1.0;
        hi_info = deriv(hi);
        let mut k = 0;
        while let Some((g, _, _)) = hi_info {
            if g < 0.0 || k > 60 {
                break;
            }
            hi *= 2.0;
            hi_info = deriv(hi);
            k += 1;
        }
    }
    let Some((ghi, _, vhi)) = hi_info else {
        return InnerMax {
            a1: hi,
            value: f64::NEG_INFINITY,
            attained: false,
            at_boundary: true,
        };
    };
    if ghi >= 0.0 {
        // still increasing at the boundary of the domain
        let at_edge = bmax.is_finite();
        return InnerMax {
            a1: hi,
            value: vhi,
            attained: at_edge,
            at_boundary: at_edge,
        };
    }
    let mut lo = hi.min(0.0) - 1.0;
    let mut k = 0;
    loop {
        match deriv(lo) {
            Some((g, _, v)) if g <= 0.0 => {
                lo *= 2.0;
                k += 1;
                if k > 80 {
                    return InnerMax {
                        a1: lo,
                        value: v,
                        attained: false,
                        at_boundary: false,
                    };
                }
            }
            Some(_) => break,
            None => {
                return InnerMax {
                    a1: lo,
                    value: f64::NEG_INFINITY,
                    attained: false,
                    at_boundary: false,
                }
            }
        }
    }
    let root = roots::newton_bisect(
        |a1| match deriv(a1) {
            Some((g, dg, _)) => (g, dg),
            None => (f64::NAN, f64::NAN),
        },
        lo,
        hi,
        1e-14,
        300,
    );
    match root {
        Ok(r) => {
            let v = deriv(r.x).map(|t| t.2).unwrap_or(f64::NEG_INFINITY);
            InnerMax {
                a1: r.x,
                value: v,
                attained: true,
                at_boundary: false,
            }
        }
        Err(_) => InnerMax {
            a1: hi,
            value: vhi,
            attained: false,
            at_boundary: false,
        },
    }
}

/// Nested one-dimensional maximization of `α·z − Λ(α)`: the partial
/// supremum over `α₁` is concave in `α₂`.
pub fn rate_ld_ascent(model: &HoldingTimeModel, z: ScaledPoint) -> Result<RateEvaluation> {
    check_finite(z)?;
    if !z.in_cone() || !z.z1.is_finite() {
        return Ok(RateEvaluation::infinite(RateMethod::ClosedForm));
    }
    let zz = z.as_array();
    let mut evals = 0usize;
    let outer = maximize_concave(
        |a2| {
            evals += 1;
            inner_sup(model, a2, zz).value
        },
        0.0,
        f64::INFINITY,
        60,
    );
    let inner = inner_sup(model, outer.x, zz);
    let value = outer.value.max(inner.value);
    if !value.is_finite() {
        return Err(Error::SolverFailure {
            reason: "ascent found no finite objective value".into(),
            iterations: evals,
            best_bound: 0.0,
        });
    }
    Ok(RateEvaluation {
        value: ExtReal::Finite(value.max(0.0)),
        argmax_tilt: Some(Tilt::new(inner.a1, outer.x)),
        converged: outer.attained && !outer.at_limit && inner.attained,
        iterations: evals + outer.iterations,
        method: RateMethod::Ascent,
        on_boundary: inner.at_boundary || !z.in_cone_interior(),
    })
}

/// `g(α₂) = log((α₂ z₂ + 1)/(α₂ (z₂ − z₁) + 1))`.
pub fn poisson_g(z1: f64, z2: f64, a2: f64) -> f64 {
    (a2 * z2).ln_1p() - (a2 * (z2 - z1)).ln_1p()
}

fn poisson_g_prime(z1: f64, z2: f64, a2: f64) -> f64 {
    z1 / ((a2 * z2 + 1.0) * (a2 * (z2 - z1) + 1.0))
}

/// Inflection point `γ = (2z₂ − z₁)/(2z₂(z₁ − z₂))` of `g`.
pub fn poisson_gamma(z1: f64, z2: f64) -> f64 {
    (2.0 * z2 - z1) / (2.0 * z2 * (z1 - z2))
}

/// Nonzero solution `α₂*` of `g(α₂) = α₂ z₁` (zero when `2z₂ = z₁`).
pub fn poisson_g_root(z1: f64, z2: f64) -> Result<(f64, usize)> {
    if !(0.0 < z2 && z2 < z1) {
        return Err(Error::Domain(format!(
            "({z1}, {z2}) is not in the interior of the cone"
        )));
    }
    let gamma = poisson_gamma(z1, z2);
    if gamma == 0.0 {
        return Ok((0.0, 0));
    }
    let s = gamma.signum();
    let h = |a2: f64| poisson_g(z1, z2, a2) - a2 * z1;
    let end = if s > 0.0 { 1.0 / (z1 - z2) } else { -1.0 / z2 };
    let width = 1.0 / (z1 - z2) + 1.0 / z2;
    let margin = 1e-12 * width;
    let mut near = s * 1e-3;
    if near.abs() >= end.abs() {
        near = 0.5 * end;
    }
    let mut iters = 0;
    // the near side has the sign of −γ
    while h(near) * s >= 0.0 {
        near *= 0.5;
        iters += 1;
        if near.abs() < 1e-300 {
            return Err(Error::SolverFailure {
                reason: "g-root bracket collapsed onto zero".into(),
                iterations: iters,
                best_bound: 0.0,
            });
        }
    }
    let mut gap = (end - near).abs();
    let far = loop {
        gap *= 0.5;
        if gap < margin {
            return Err(Error::SolverFailure {
                reason: "g-root not bracketed before the endpoint".into(),
                iterations: iters,
                best_bound: 0.0,
            });
        }
        let far = end - s * gap;
        iters += 1;
        if h(far) * s > 0.0 {
            break far;
        }
    };
    let (lo, hi) = if near < far { (near, far) } else { (far, near) };
    let root = roots::newton_bisect(
        |a2| (h(a2), poisson_g_prime(z1, z2, a2) - z1),
        lo,
        hi,
        1e-15,
        400,
    )?;
    Ok((root.x, iters + root.iterations))
}

/// `Λ*` for exponential holding times with rate `λ`, through the g-root.
pub fn rate_ld_poisson(lambda: f64, z: ScaledPoint) -> Result<RateEvaluation> {
    let model = HoldingTimeModel::exponential(lambda)?;
    check_finite(z)?;
    if !z.in_cone() || !z.z1.is_finite() {
        return Ok(RateEvaluation::infinite(RateMethod::ClosedForm));
    }
    if !z.in_cone_interior() {
        return Err(Error::Domain(format!(
            "({}, {}) lies on the boundary of the cone",
            z.z1, z.z2
        )));
    }
    let (a2, iterations) = poisson_g_root(z.z1, z.z2)?;
    let a1 = lambda - (a2 * z.z2 + 1.0) / z.z1;
    let tilt = Tilt::new(a1, a2);
    let lam = lambda_eval(&model, tilt)?.to_f64();
    let value = a1 * z.z1 + a2 * z.z2 - lam;
    Ok(RateEvaluation {
        value: ExtReal::Finite(value.max(0.0)),
        argmax_tilt: Some(tilt),
        converged: true,
        iterations,
        method: RateMethod::PoissonGRoot,
        on_boundary: false,
    })
}

/// One row of the `g` versus `h(α₂) = α₂ z₁` plot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GCurvePoint {
    pub a2: f64,
    pub g: f64,
    pub h: f64,
}

/// `n` equally spaced samples of `g` and `h` on the open interval
/// `(−1/z₂, 1/(z₁ − z₂))`.
pub fn poisson_g_curve(z1: f64, z2: f64, n: usize) -> Result<Vec<GCurvePoint>> {
    if !(0.0 < z2 && z2 < z1) {
        return Err(Error::Domain(format!(
            "({z1}, {z2}) is not in the interior of the cone"
        )));
    }
    if n == 0 {
        return Err(Error::ParameterDomain("at least one sample".into()));
    }
    let lo = -1.0 / z2;
    let hi = 1.0 / (z1 - z2);
    Ok((0..n)
        .map(|i| {
            let a2 = lo + (hi - lo) * (i as f64 + 0.5) / n as f64;
            GCurvePoint {
                a2,
                g: poisson_g(z1, z2, a2),
                h: a2 * z1,
            }
        })
        .collect())
}

/// `I₁(z₁) = φ*(z₁)`.
pub fn marginal_i1(model: &HoldingTimeModel, z1: f64) -> Result<RateEvaluation> {
    phi_star(model, z1)
}

/// `I₂(z₂) = inf_{z₁ ≥ z₂} Λ*(z₁, z₂)`.
pub fn marginal_i2(model: &HoldingTimeModel, z2: f64) -> Result<RateEvaluation> {
    if z2.is_nan() {
        return Err(Error::Domain("NaN coordinate".into()));
    }
    if z2 < 0.0 || !z2.is_finite() {
        return Ok(RateEvaluation::infinite(RateMethod::ClosedForm));
    }
    if z2 == model.mean() / 2.0 {
        return Ok(RateEvaluation::zero());
    }
    let mut failure = None;
    let m = roots::minimize_convex(
        |z1| match rate_ld(model, ScaledPoint::new(z1, z2)) {
            Ok(r) => r.value_f64(),
            Err(e) => {
                failure = Some(e);
                f64::INFINITY
            }
        },
        z2,
        f64::INFINITY,
        2.0 * z2,
        1e-10,
        80,
    )?;
    if let Some(e) = failure {
        if !m.value.is_finite() {
            return Err(e);
        }
    }
    let mut inner = rate_ld(model, ScaledPoint::new(m.x, z2))?;
    if inner.value_f64() > m.value {
        inner.value = ExtReal::from_f64(m.value);
    }
    inner.iterations += m.iterations;
    Ok(inner)
}

/// `I₂(z₂) = sup_{α₂} {α₂ z₂ − Λ(0, α₂)}`, an independent route to the
/// second marginal.
pub fn marginal_i2_legendre(model: &HoldingTimeModel, z2: f64) -> Result<RateEvaluation> {
    if z2.is_nan() {
        return Err(Error::Domain("NaN coordinate".into()));
    }
    if z2 <= 0.0 {
        return Ok(RateEvaluation::infinite(RateMethod::ClosedForm));
    }
    let b = model.boundary();
    let grad2 = |a2: f64| {
        lambda_local(model, Tilt::new(0.0, a2)).map(|l| (l.grad[1], l.hess[1][1], l.value))
    };
    let mut hi;
    if b.is_finite() {
        let mut gap = 0.5 * b;
        hi = b - gap;
        while grad2(hi)?.0 <= z2 && gap > 1e-10 * b {
            gap *= 0.5;
            match grad2(b - gap) {
                Ok(_) => hi = b - gap,
                Err(_) => break,
            }
        }
    } else {
        hi = 1.0;
        while grad2(hi)?.0 < z2 {
            hi *= 2.0;
        }
    }
    let (ghi, _, vhi) = grad2(hi)?;
    if ghi <= z2 {
        return Ok(RateEvaluation {
            value: ExtReal::Finite((hi * z2 - vhi).max(0.0)),
            argmax_tilt: Some(Tilt::new(0.0, hi)),
            converged: false,
            iterations: 0,
            method: RateMethod::Ascent,
            on_boundary: true,
        });
    }
    let mut lo = -1.0;
    let mut k = 0;
    while grad2(lo)?.0 >= z2 {
        lo *= 2.0;
        k += 1;
        if k > 200 {
            return Err(Error::SolverFailure {
                reason: "no lower bracket for ∂Λ/∂α₂ = z₂".into(),
                iterations: k,
                best_bound: 0.0,
            });
        }
    }
    let root = roots::newton_bisect(
        |a2| match grad2(a2) {
            Ok((g, h, _)) => (g - z2, h),
            Err(_) => (f64::NAN, f64::NAN),
        },
        lo,
        hi,
        1e-15,
        400,
    )?;
    let (_, _, v) = grad2(root.x)?;
    Ok(RateEvaluation {
        value: ExtReal::Finite((root.x * z2 - v).max(0.0)),
        argmax_tilt: Some(Tilt::new(0.0, root.x)),
        converged: true,
        iterations: root.iterations + k,
        method: RateMethod::Newton,
        on_boundary: false,
    })
}

/// `J(z₂ | z₁) = Λ*(z₁, z₂) − I₁(z₁)`, clamped at zero.
pub fn conditional_rate_j(model: &HoldingTimeModel, z1: f64, z2: f64) -> Result<ExtReal> {
    let full = rate_ld(model, ScaledPoint::new(z1, z2))?;
    let Some(v) = full.value.finite() else {
        return Ok(ExtReal::PosInfinity);
    };
    let Some(i1) = marginal_i1(model, z1)?.value.finite() else {
        return Ok(ExtReal::PosInfinity);
    };
    let j = v - i1;
    if j < -1e-8 {
        return Err(Error::SolverFailure {
            reason: format!("negative conditional rate {j:e}"),
            iterations: full.iterations,
            best_bound: v,
        });
    }
    Ok(ExtReal::Finite(j.max(0.0)))
}

/// `inf {Λ*(z) : z ∈ region}`.
pub fn rate_inf_over_region(model: &HoldingTimeModel, region: &Region) -> Result<ExtReal> {
    let c = center(model);
    let mut best = ExtReal::PosInfinity;
    for piece in &region.pieces {
        if piece.is_empty() {
            continue;
        }
        if piece.contains(c.as_array()) {
            return Ok(ExtReal::ZERO);
        }
        let v = match *piece {
            RegionPiece::HalfPlane {
                axis: Axis::Z1,
                bound,
                ..
            } => marginal_i1(model, bound)?.value,
            RegionPiece::HalfPlane {
                axis: Axis::Z2,
                bound,
                ..
            } => marginal_i2(model, bound)?.value,
            RegionPiece::Rectangle { lo, hi } => rectangle_inf(model, lo, hi)?,
        };
        best = best.min(v);
    }
    Ok(best)
}

fn rectangle_inf(model: &HoldingTimeModel, lo: [f64; 2], hi: [f64; 2]) -> Result<ExtReal> {
    let mut best = f64::INFINITY;
    // when the rectangle meets the open cone, Λ* being closed and convex lets
    // the search ignore edges lying on the cone's boundary rays
    let meets_interior = hi[1] > 0.0 && hi[0] > lo[1].max(0.0);
    let mut edge = |fixed: Axis, at: f64, from: f64, to: f64| -> Result<()> {
        if meets_interior && at == 0.0 {
            return Ok(());
        }
        // clip the edge to the cone
        let (a, b) = match fixed {
            Axis::Z1 => (from.max(0.0), to.min(at)),
            Axis::Z2 => (from.max(at), to),
        };
        if fixed == Axis::Z2 && at < 0.0 {
            return Ok(());
        }
        if !(a <= b) {
            return Ok(());
        }
        let point = |t: f64| match fixed {
            Axis::Z1 => ScaledPoint::new(at, t),
            Axis::Z2 => ScaledPoint::new(t, at),
        };
        let f = |t: f64| {
            rate_ld(model, point(t))
                .map(|r| r.value_f64())
                .unwrap_or(f64::INFINITY)
        };
        let m = if b.is_finite() {
            roots::golden_section(f, a, b, 1e-10, 300)
        } else {
            roots::minimize_convex(f, a, b, a.max(1e-3) * 2.0, 1e-10, 80)?
        };
        best = best.min(m.value);
        Ok(())
    };
    edge(Axis::Z1, lo[0], lo[1], hi[1])?;
    edge(Axis::Z1, hi[0], lo[1], hi[1])?;
    edge(Axis::Z2, lo[1], lo[0], hi[0])?;
    edge(Axis::Z2, hi[1], lo[0], hi[0])?;
    Ok(ExtReal::from_f64(best))
}

/// Objective `α·z − Λ(α)` with the raw integral, usable on the closure of
/// the domain.
pub fn dual_objective(model: &HoldingTimeModel, tilt: Tilt, z: ScaledPoint) -> Result<f64> {
    Ok(tilt.dot(z.as_array()) - lambda_integral(model, tilt)?.to_f64())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e1() -> HoldingTimeModel {
        HoldingTimeModel::exponential(1.0).unwrap()
    }

    #[test]
    fn spec_examples() {
        for m in HoldingTimeModel::builtins() {
            let c = center(&m);
            let r = rate_ld(&m, c).unwrap();
            assert_eq!(r.value, ExtReal::ZERO);
            assert_eq!(r.argmax_tilt, Some(Tilt::ORIGIN));
            assert_eq!(
                rate_ld(&m, ScaledPoint::new(1.0, 2.0)).unwrap().value,
                ExtReal::PosInfinity
            );
        }
        let r = rate_ld(&e1(), ScaledPoint::new(2.0, 1.0)).unwrap();
        assert!((r.value_f64() - (1.0 - 2f64.ln())).abs() < 1e-10);
        assert!(r.converged);
    }

    #[test]
    fn poisson_examples() {
        let r = rate_ld_poisson(1.0, ScaledPoint::new(1.0, 0.5)).unwrap();
        assert_eq!(r.value, ExtReal::ZERO);
        let r = rate_ld_poisson(1.0, ScaledPoint::new(2.0, 1.0)).unwrap();
        assert!((r.value_f64() - (1.0 - 2f64.ln())).abs() < 1e-14);
        assert_eq!(r.argmax_tilt, Some(Tilt::new(0.5, 0.0)));
    }

    #[test]
    fn gradient_matches_target_at_argmax() {
        for m in HoldingTimeModel::builtins() {
            let mu = m.mean();
            for (f1, f2) in [(1.3, 0.4), (0.6, 0.2), (2.0, 0.9)] {
                let z = ScaledPoint::new(f1 * mu, f2 * f1 * mu);
                let r = rate_ld(&m, z).unwrap();
                if r.within_exposed() {
                    let g = crate::lambda::lambda_grad(&m, r.argmax_tilt.unwrap()).unwrap();
                    assert!(
                        (g[0] - z.z1).abs() < 1e-8 && (g[1] - z.z2).abs() < 1e-8,
                        "{m}"
                    );
                }
                assert!(r.value_f64() > 0.0);
            }
        }
    }

    #[test]
    fn newton_and_ascent_agree() {
        for m in HoldingTimeModel::builtins() {
            let mu = m.mean();
            let z = ScaledPoint::new(1.4 * mu, 0.45 * 1.4 * mu);
            let n = rate_ld(&m, z).unwrap();
            let a = rate_ld_ascent(&m, z).unwrap();
            assert!(
                (n.value_f64() - a.value_f64()).abs() < 1e-8,
                "{m}: {n:?} {a:?}"
            );
        }
    }

    #[test]
    fn g_curve_sign_cases() {
        let (r, _) = poisson_g_root(1.0, 0.25).unwrap();
        assert!(r < 0.0);
        let (r, _) = poisson_g_root(1.0, 0.75).unwrap();
        assert!(r > 0.0);
        assert_eq!(poisson_g_root(1.0, 0.5).unwrap().0, 0.0);
        let pts = poisson_g_curve(1.0, 0.25, 200).unwrap();
        assert!(pts.first().unwrap().a2 > -4.0 && pts.last().unwrap().a2 < 4.0 / 3.0);
        for w in pts.windows(2) {
            assert!(w[1].g > w[0].g);
        }
        assert_eq!(poisson_g(1.0, 0.25, 0.0), 0.0);
        let h = 1e-6;
        let d = (poisson_g(1.0, 0.25, h) - poisson_g(1.0, 0.25, -h)) / (2.0 * h);
        assert!((d - 1.0).abs() < 1e-8);
    }

    #[test]
    fn marginals() {
        let m = e1();
        assert_eq!(marginal_i1(&m, 1.0).unwrap().value, ExtReal::ZERO);
        let v = marginal_i1(&m, 0.5).unwrap().value_f64();
        assert!((v - (2f64.ln() - 0.5)).abs() < 1e-12);
        assert_eq!(marginal_i2(&m, 0.5).unwrap().value, ExtReal::ZERO);
        assert_eq!(marginal_i2(&m, -1.0).unwrap().value, ExtReal::PosInfinity);
        let a = marginal_i2(&m, 1.0).unwrap().value_f64();
        let b = marginal_i2_legendre(&m, 1.0).unwrap().value_f64();
        assert!(a > 0.0 && (a - b).abs() < 1e-7, "{a} vs {b}");
    }

    #[test]
    fn decomposition() {
        let m = e1();
        for (z1, z2) in [(1.0, 0.25), (2.0, 0.7), (0.5, 0.3)] {
            let full = rate_ld(&m, ScaledPoint::new(z1, z2)).unwrap().value_f64();
            let i1 = marginal_i1(&m, z1).unwrap().value_f64();
            let j = conditional_rate_j(&m, z1, z2).unwrap().to_f64();
            assert!((full - i1 - j).abs() < 1e-8);
        }
        for z1 in [0.5, 1.0, 2.0] {
            assert!(conditional_rate_j(&m, z1, z1 / 2.0).unwrap().to_f64() < 1e-10);
        }
    }

    #[test]
    fn region_infimum() {
        let m = e1();
        let r: Region = "z1>=1.5".parse().unwrap();
        let v = rate_inf_over_region(&m, &r).unwrap().to_f64();
        assert!((v - (0.5 - 1.5f64.ln())).abs() < 1e-12);
        let r: Region = "rect(0.5,2,0,0.5)".parse().unwrap();
        assert_eq!(rate_inf_over_region(&m, &r).unwrap(), ExtReal::ZERO);
        let r: Region = "rect(1.5,2,0.7,0.9)".parse().unwrap();
        let v = rate_inf_over_region(&m, &r).unwrap().to_f64();
        let p = rate_ld(&m, ScaledPoint::new(1.5, 0.7)).unwrap().value_f64();
        assert!(v <= p + 1e-12 && v > 0.0);
        assert!(rate_inf_over_region(&m, &"z2>=3|z2<=-1".parse().unwrap())
            .unwrap()
            .is_finite());
    }
}
