//! The bivariate limit function `Λ(α₁, α₂) = ∫_0^1 φ(α₁ + α₂ y) dy` of the
//! scaled pair `(τ(x)/x, A(x)/x²)`, its domain, derivatives and regularity.

use serde::{Deserialize, Serialize};

use crate::cgf::{DomainSpec, HoldingTimeModel, LscCase};
use crate::error::{Error, Result};
use crate::extended::ExtReal;
use crate::quadrature::{self, Endpoint, QuadOptions};

/// Dual variable `(α₁, α₂)`, conjugate to `(τ(x)/x, A(x)/x²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tilt {
    pub a1: f64,
    pub a2: f64,
}

impl Tilt {
    pub const ORIGIN: Tilt = Tilt { a1: 0.0, a2: 0.0 };

    pub fn new(a1: f64, a2: f64) -> Self {
        Self { a1, a2 }
    }

    pub fn dot(&self, z: [f64; 2]) -> f64 {
        self.a1 * z[0] + self.a2 * z[1]
    }
}

/// Which moment generating function the domain refers to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "regime", content = "x")]
pub enum Regime {
    /// The limit function `Λ`.
    Limit,
    /// The joint MGF of `(τ(x), A(x))` at a fixed level `x`, in unscaled tilts.
    FiniteX(f64),
}

/// Effective domain of `Λ`, or of the finite-`x` joint MGF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltDomain {
    pub phi_domain: DomainSpec,
    pub lsc_case: LscCase,
    pub regime: Regime,
}

impl TiltDomain {
    pub fn limit(model: &HoldingTimeModel) -> Self {
        Self {
            phi_domain: model.domain(),
            lsc_case: model.domain().lsc_case(),
            regime: Regime::Limit,
        }
    }

    pub fn finite_x(model: &HoldingTimeModel, x: f64) -> Result<Self> {
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::Domain(format!("level x must be positive, got {x}")));
        }
        Ok(Self {
            phi_domain: model.domain(),
            lsc_case: model.domain().lsc_case(),
            regime: Regime::FiniteX(x),
        })
    }

    /// Membership in the set where `Λ` is defined by the integral:
    /// `{α₂ ≥ 0, α₁+α₂ ∈ D(φ)} ∪ {α₂ < 0, α₁ ≤ ᾱ}`.
    pub fn in_integral_set(&self, t: Tilt) -> bool {
        let d = &self.phi_domain;
        if d.is_full_line() {
            return true;
        }
        if t.a2 >= 0.0 {
            d.contains(t.a1 + t.a2)
        } else {
            t.a1 <= d.boundary
        }
    }

    /// Membership in the effective domain (finiteness of the function).
    pub fn contains(&self, t: Tilt) -> bool {
        if !(t.a1.is_finite() && t.a2.is_finite()) {
            return false;
        }
        let d = &self.phi_domain;
        if d.is_full_line() {
            return true;
        }
        match self.regime {
            Regime::Limit => {
                if t.a2 >= 0.0 {
                    d.contains(t.a1 + t.a2)
                } else {
                    t.a1 < d.boundary
                        || (t.a1 == d.boundary && (d.boundary_closed || d.integrable_at_boundary))
                }
            }
            Regime::FiniteX(x) => {
                if t.a2 >= 0.0 {
                    d.contains(t.a1 + t.a2 * x)
                } else {
                    d.contains(t.a1 + t.a2 * min_weight(x))
                }
            }
        }
    }

    pub fn contains_interior(&self, t: Tilt) -> bool {
        if !(t.a1.is_finite() && t.a2.is_finite()) {
            return false;
        }
        let d = &self.phi_domain;
        if d.is_full_line() {
            return true;
        }
        let top = match self.regime {
            Regime::Limit => t.a1 + t.a2.max(0.0),
            Regime::FiniteX(x) => {
                if t.a2 >= 0.0 {
                    t.a1 + t.a2 * x
                } else {
                    t.a1 + t.a2 * min_weight(x)
                }
            }
        };
        top < d.boundary
    }
}

/// Smallest weight `x − [x]` (or 1 for integer `x`) in the area representation.
pub(crate) fn min_weight(x: f64) -> f64 {
    let frac = x - x.floor();
    if frac == 0.0 {
        1.0
    } else {
        frac
    }
}

/// How to evaluate the integral defining `Λ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LambdaMethod {
    /// Closed-form antiderivative when the model has one, quadrature otherwise.
    #[default]
    Auto,
    Quadrature,
}

const SMALL_A2: f64 = 1e-6;

fn quad_opts() -> QuadOptions {
    QuadOptions::default()
}

/// Tolerance ladder for derivative integrals: tight first, then a level that
/// survives the rounding floor of `φ''` close to the domain edge.
const LOCAL_LADDER: [QuadOptions; 2] = [
    QuadOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-14,
        max_subintervals: 1000,
    },
    QuadOptions {
        abs_tol: 1e-11,
        rel_tol: 1e-11,
        max_subintervals: 4096,
    },
];

/// `Λ(α)`, `+inf` outside its effective domain.
pub fn lambda_eval(model: &HoldingTimeModel, tilt: Tilt) -> Result<ExtReal> {
    lambda_eval_with(model, tilt, LambdaMethod::Auto)
}

pub fn lambda_eval_with(
    model: &HoldingTimeModel,
    tilt: Tilt,
    method: LambdaMethod,
) -> Result<ExtReal> {
    let dom = TiltDomain::limit(model);
    if !dom.in_integral_set(tilt) {
        return Ok(ExtReal::PosInfinity);
    }
    raw_integral(model, tilt, method)
}

/// The integral `∫_0^1 φ(α₁ + α₂ y) dy` itself, ignoring the convention that
/// `Λ = +inf` on the part of the boundary where `φ(α₁+α₂) = +inf`.
///
/// On that boundary piece this is the `liminf` of `Λ`; for the exponential
/// family it is finite there, which is why `Λ` fails to be lower
/// semicontinuous.
pub fn lambda_integral(model: &HoldingTimeModel, tilt: Tilt) -> Result<ExtReal> {
    let b = model.boundary();
    let hi = tilt.a1.max(tilt.a1 + tilt.a2);
    if !(tilt.a1.is_finite() && tilt.a2.is_finite()) || hi > b {
        return Ok(ExtReal::PosInfinity);
    }
    raw_integral(model, tilt, LambdaMethod::Quadrature)
}

fn raw_integral(model: &HoldingTimeModel, tilt: Tilt, method: LambdaMethod) -> Result<ExtReal> {
    let Tilt { a1, a2 } = tilt;
    let b = model.boundary();
    let dom = model.domain();
    if a2 == 0.0 {
        return Ok(model.cgf(a1));
    }
    let top = a1.max(a1 + a2);
    if top > b {
        return Ok(ExtReal::PosInfinity);
    }
    let touches = top == b;
    if !touches && a2.abs() < SMALL_A2 {
        let (p, d1, d2) = (model.phi(a1), model.cgf_d1(a1), model.cgf_d2(a1));
        return Ok(ExtReal::Finite(p + a2 * d1 / 2.0 + a2 * a2 * d2 / 6.0));
    }
    if method == LambdaMethod::Auto {
        if let (Some(fa), Some(fb)) = (model.antiderivative(a1), model.antiderivative(a1 + a2)) {
            return Ok(ExtReal::Finite((fb - fa) / a2));
        }
    }
    let f = |y: f64| [model.phi(a1 + a2 * y)];
    let opts = quad_opts();
    let est = if touches {
        let end = if a2 > 0.0 {
            Endpoint::Right
        } else {
            Endpoint::Left
        };
        if dom.boundary_closed {
            quadrature::integrate_vec(f, 0.0, 1.0, Some(end), &opts)
        } else {
            match quadrature::graded(f, 0.0, 1.0, end, &opts) {
                Ok(e) => Ok(e),
                Err(Error::Quadrature(msg)) if msg.contains("does not converge") => {
                    return Ok(ExtReal::PosInfinity)
                }
                Err(e) => Err(e),
            }
        }
    } else {
        quadrature::integrate_vec(f, 0.0, 1.0, None, &opts)
    }?;
    Ok(ExtReal::Finite(est.value[0]))
}

/// `Λ` for exponential holding times with rate `λ` in closed form.
pub fn poisson_lambda(lambda: f64, tilt: Tilt) -> ExtReal {
    let Tilt { a1, a2 } = tilt;
    let xlogx = |v: f64| if v == 0.0 { 0.0 } else { v * v.ln() };
    if a2 == 0.0 {
        return if a1 < lambda {
            ExtReal::Finite((lambda / (lambda - a1)).ln())
        } else {
            ExtReal::PosInfinity
        };
    }
    let inside = if a2 > 0.0 {
        a1 + a2 < lambda
    } else {
        a1 <= lambda
    };
    if !inside {
        return ExtReal::PosInfinity;
    }
    let u = lambda - a1 - a2;
    let v = lambda - a1;
    ExtReal::Finite(lambda.ln() + 1.0 + (xlogx(u) - xlogx(v)) / a2)
}

/// Value, gradient and Hessian of `Λ` at an interior tilt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalExpansion {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

fn require_interior(model: &HoldingTimeModel, tilt: Tilt) -> Result<()> {
    if TiltDomain::limit(model).contains_interior(tilt) {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "tilt ({}, {}) is not in the interior of D(Λ) for {model}",
            tilt.a1, tilt.a2
        )))
    }
}

/// `∇Λ(α) = (∫ φ'(α₁+α₂y) dy, ∫ y φ'(α₁+α₂y) dy)` on the interior of `D(Λ)`.
pub fn lambda_grad(model: &HoldingTimeModel, tilt: Tilt) -> Result<[f64; 2]> {
    lambda_local(model, tilt).map(|l| l.grad)
}

/// Value, gradient and Hessian in one pass.
pub fn lambda_local(model: &HoldingTimeModel, tilt: Tilt) -> Result<LocalExpansion> {
    require_interior(model, tilt)?;
    let Tilt { a1, a2 } = tilt;
    if a2.abs() < SMALL_A2 {
        let (p, d1, d2, d3) = (
            model.phi(a1),
            model.cgf_d1(a1),
            model.cgf_d2(a1),
            model.cgf_d3(a1),
        );
        return Ok(LocalExpansion {
            value: p + a2 * d1 / 2.0 + a2 * a2 * d2 / 6.0,
            grad: [
                d1 + a2 * d2 / 2.0 + a2 * a2 * d3 / 6.0,
                d1 / 2.0 + a2 * d2 / 3.0 + a2 * a2 * d3 / 8.0,
            ],
            hess: [
                [d2 + a2 * d3 / 2.0, d2 / 2.0 + a2 * d3 / 3.0],
                [d2 / 2.0 + a2 * d3 / 3.0, d2 / 3.0 + a2 * d3 / 4.0],
            ],
        });
    }
    let v = match edge_mesh(model, tilt) {
        Some((gap, mesh)) => {
            // s runs from the end of the segment nearest the boundary
            let slope = a2.abs();
            let integrand = |s: f64| {
                let y = if a2 > 0.0 { 1.0 - s } else { s };
                let [p, d1, d2] = model.jet_from_edge(gap + slope * s);
                [p, d1, y * d1, d2, y * d2, y * y * d2]
            };
            ladder(integrand, &mesh)?
        }
        None => {
            let integrand = |y: f64| {
                let a = a1 + a2 * y;
                let d1 = model.cgf_d1(a);
                let d2 = model.cgf_d2(a);
                [model.phi(a), d1, y * d1, d2, y * d2, y * y * d2]
            };
            ladder(integrand, &[0.0, 1.0])?
        }
    };
    Ok(LocalExpansion {
        value: v[0],
        grad: [v[1], v[2]],
        hess: [[v[3], v[4]], [v[4], v[5]]],
    })
}

fn ladder<F: FnMut(f64) -> [f64; 6]>(mut f: F, mesh: &[f64]) -> Result<[f64; 6]> {
    piecewise(&mut f, mesh, &LOCAL_LADDER[0]).or_else(|_| piecewise(&mut f, mesh, &LOCAL_LADDER[1]))
}

/// When the segment `α₁ + α₂y` comes close to the boundary, returns the gap
/// at its nearest end and breakpoints `0, d, 2d, 4d, …, 1` in the distance
/// from that end, `d` being the gap in `y` units.
fn edge_mesh(model: &HoldingTimeModel, tilt: Tilt) -> Option<(f64, Vec<f64>)> {
    let b = model.boundary();
    let Tilt { a1, a2 } = tilt;
    let gap = if a2 > 0.0 { (b - a1) - a2 } else { b - a1 };
    let d = gap / a2.abs();
    if !(d < 1e-2) || !(gap > 0.0) {
        return None;
    }
    let mut mesh = vec![0.0];
    let mut t = d;
    while t < 0.5 {
        mesh.push(t);
        t *= 2.0;
    }
    mesh.push(1.0);
    Some((gap, mesh))
}

fn piecewise<F: FnMut(f64) -> [f64; 6]>(
    mut f: F,
    mesh: &[f64],
    opts: &QuadOptions,
) -> Result<[f64; 6]> {
    let piece_opts = QuadOptions {
        abs_tol: opts.abs_tol / (mesh.len() - 1) as f64,
        ..*opts
    };
    let mut total = [0.0; 6];
    for w in mesh.windows(2) {
        let e = quadrature::adaptive(&mut f, w[0], w[1], &piece_opts)?;
        for k in 0..6 {
            total[k] += e.value[k];
        }
    }
    Ok(total)
}

/// The gradient written through `φ` and its integral only:
/// `((φ(α₁+α₂) − φ(α₁))/α₂, (α₂ φ(α₁+α₂) − ∫φ)/α₂²)`.
///
/// Loses digits as `α₂ → 0`; kept as an independent cross-check.
pub fn lambda_grad_difference_form(model: &HoldingTimeModel, tilt: Tilt) -> Result<[f64; 2]> {
    require_interior(model, tilt)?;
    let Tilt { a1, a2 } = tilt;
    if a2 == 0.0 {
        let d1 = model.cgf_d1(a1);
        return Ok([d1, d1 / 2.0]);
    }
    let pb = model.phi(a1 + a2);
    let pa = model.phi(a1);
    let integral = a2 * raw_integral(model, tilt, LambdaMethod::Quadrature)?.to_f64();
    Ok([(pb - pa) / a2, (a2 * pb - integral) / (a2 * a2)])
}

/// `φ''(0)`, the Hessian `C` of `Λ` at the origin and its inverse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceStructure {
    pub phi2: f64,
    pub c: [[f64; 2]; 2],
    pub c_inv: [[f64; 2]; 2],
}

impl CovarianceStructure {
    pub fn from_phi2(phi2: f64) -> Self {
        Self {
            phi2,
            c: [[phi2, phi2 / 2.0], [phi2 / 2.0, phi2 / 3.0]],
            c_inv: [[4.0 / phi2, -6.0 / phi2], [-6.0 / phi2, 12.0 / phi2]],
        }
    }

    pub fn determinant(&self) -> f64 {
        self.phi2 * self.phi2 / 12.0
    }

    /// `½ αᵀ C α`.
    pub fn quad_c(&self, a: [f64; 2]) -> f64 {
        0.5 * quad_form(&self.c, a)
    }

    /// `½ zᵀ C⁻¹ z`.
    pub fn quad_c_inv(&self, z: [f64; 2]) -> f64 {
        0.5 * quad_form(&self.c_inv, z)
    }
}

pub(crate) fn quad_form(m: &[[f64; 2]; 2], v: [f64; 2]) -> f64 {
    m[0][0] * v[0] * v[0] + 2.0 * m[0][1] * v[0] * v[1] + m[1][1] * v[1] * v[1]
}

pub fn mat_mul(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn hessian_origin(model: &HoldingTimeModel) -> CovarianceStructure {
    CovarianceStructure::from_phi2(model.variance())
}

/// Route to a full large deviation principle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LdpCertificate {
    /// `Λ` is lower semicontinuous and essentially smooth.
    GartnerEllisC,
    /// The image of `∇Λ` is the whole interior of the support cone.
    GradientImage,
    /// Upper bound for closed sets, lower bound restricted to exposed points.
    WeakOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub lsc: bool,
    pub lsc_case: LscCase,
    pub steep: bool,
    pub differentiable: bool,
    pub essentially_smooth: bool,
    pub certificate: LdpCertificate,
}

pub fn regularity_report(model: &HoldingTimeModel) -> RegularityReport {
    let case = model.domain().lsc_case();
    let lsc = case.lower_semicontinuous();
    let steep = !matches!(case, LscCase::ClosedBoundary);
    let differentiable = true;
    let essentially_smooth = steep && differentiable;
    let certificate = if lsc && essentially_smooth {
        LdpCertificate::GartnerEllisC
    } else if model.is_exponential() {
        LdpCertificate::GradientImage
    } else {
        LdpCertificate::WeakOnly
    };
    RegularityReport {
        lsc,
        lsc_case: case,
        steep,
        differentiable,
        essentially_smooth,
        certificate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(l: f64) -> HoldingTimeModel {
        HoldingTimeModel::exponential(l).unwrap()
    }

    #[test]
    fn axis_and_outside() {
        for m in HoldingTimeModel::builtins() {
            for a in [-2.0, -0.3, 0.1] {
                let want = m.cgf(a * m.boundary());
                assert_eq!(
                    lambda_eval(&m, Tilt::new(a * m.boundary(), 0.0)).unwrap(),
                    want
                );
            }
        }
        assert_eq!(
            lambda_eval(&e(1.0), Tilt::new(0.5, 0.6)).unwrap(),
            ExtReal::PosInfinity
        );
    }

    #[test]
    fn exponential_boundary_piece() {
        let m = e(1.0);
        // outside the integral set by convention, though the integral is 1
        assert_eq!(
            lambda_eval(&m, Tilt::new(0.0, 1.0)).unwrap(),
            ExtReal::PosInfinity
        );
        let raw = lambda_integral(&m, Tilt::new(0.0, 1.0)).unwrap().to_f64();
        assert!((raw - 1.0).abs() < 1e-9);
        let near = lambda_eval(&m, Tilt::new(-1e-9, 1.0)).unwrap().to_f64();
        assert!((near - 1.0).abs() < 1e-6);
        // α₂ < 0 with α₁ = ᾱ is inside: the logarithmic singularity is integrable
        let v = lambda_eval_with(&m, Tilt::new(1.0, -1.0), LambdaMethod::Quadrature).unwrap();
        assert!((v.to_f64() - 1.0).abs() < 1e-9);
        assert!(TiltDomain::limit(&m).contains(Tilt::new(1.0, -1.0)));
    }

    #[test]
    fn chi_squared_boundary_diverges() {
        let m = HoldingTimeModel::noncentral_chi_squared(1.0, 1.0).unwrap();
        let t = Tilt::new(0.5, -1.0);
        assert_eq!(lambda_eval(&m, t).unwrap(), ExtReal::PosInfinity);
        assert!(!TiltDomain::limit(&m).contains(t));
        let ig = HoldingTimeModel::inverse_gaussian(1.0).unwrap();
        let v = lambda_eval(&ig, Tilt::new(0.5, -1.0)).unwrap();
        assert!(v.is_finite());
    }

    #[test]
    fn membership_agrees_with_integral_finiteness() {
        for m in HoldingTimeModel::builtins() {
            let dom = TiltDomain::limit(&m);
            let b = m.boundary();
            for i in 0..20 {
                for j in 0..20 {
                    // includes α₁ = ᾱ exactly on the α₂ < 0 side
                    let a1 = b * (-1.5 + 2.5 * i as f64 / 19.0);
                    let a2 = b * (-2.0 + 3.7 * j as f64 / 19.0);
                    let t = Tilt::new(a1, a2);
                    if t.a2 > 0.0 && t.a1 + t.a2 == b {
                        continue;
                    }
                    let fin = lambda_integral(&m, t).unwrap().is_finite();
                    assert_eq!(dom.contains(t), fin, "{m} at ({a1}, {a2})");
                }
            }
            assert!(dom.contains_interior(Tilt::ORIGIN));
        }
    }

    #[test]
    fn finite_x_domains() {
        let m = e(1.0);
        let d5 = TiltDomain::finite_x(&m, 5.0).unwrap();
        assert!(d5.contains(Tilt::new(-0.5, 0.05)));
        assert!(!d5.contains(Tilt::new(0.6, 0.1)));
        assert!(d5.contains(Tilt::new(1.5, -0.6)));
        assert!(!d5.contains(Tilt::new(1.5, -0.4)));
        let d55 = TiltDomain::finite_x(&m, 5.5).unwrap();
        // smallest weight 0.5
        assert!(d55.contains(Tilt::new(1.2, -0.5)));
        assert!(!d55.contains(Tilt::new(1.2, -0.3)));
        assert!(TiltDomain::finite_x(&m, 0.0).is_err());
    }

    #[test]
    fn poisson_closed_form_matches_quadrature() {
        for l in [0.5, 1.0, 2.0] {
            let m = e(l);
            for a1 in [-2.0, -0.5, 0.2] {
                for a2 in [-1.5, -0.2, 0.1, 0.25] {
                    let t = Tilt::new(a1 * l, a2 * l);
                    let q = lambda_eval_with(&m, t, LambdaMethod::Quadrature).unwrap();
                    let c = poisson_lambda(l, t);
                    assert!((q.to_f64() - c.to_f64()).abs() < 1e-9, "{t:?}");
                }
            }
        }
    }

    #[test]
    fn gradient_examples() {
        let g = lambda_grad(&e(1.0), Tilt::ORIGIN).unwrap();
        assert_eq!(g, [1.0, 0.5]);
        assert!(matches!(
            lambda_grad(&e(1.0), Tilt::new(0.0, 1.0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn gradient_forms_agree() {
        for m in HoldingTimeModel::builtins() {
            let b = m.boundary();
            for t in [
                Tilt::new(-0.4 * b, 0.9 * b),
                Tilt::new(0.5 * b, -1.3 * b),
                Tilt::new(0.1, 0.3 * b),
            ] {
                let y = lambda_grad(&m, t).unwrap();
                let d = lambda_grad_difference_form(&m, t).unwrap();
                for k in 0..2 {
                    assert!((y[k] - d[k]).abs() < 1e-8 * (1.0 + y[k].abs()), "{m} {t:?}");
                }
            }
        }
    }

    #[test]
    fn small_a2_branch_is_continuous() {
        for m in HoldingTimeModel::builtins() {
            let a1 = 0.2 * m.boundary();
            let lo = lambda_local(&m, Tilt::new(a1, 0.99e-6)).unwrap();
            let hi = lambda_local(&m, Tilt::new(a1, 1.01e-6)).unwrap();
            let step = 0.02e-6;
            assert!((lo.value + step * lo.grad[1] - hi.value).abs() < 1e-12);
            assert!((lo.grad[0] + step * lo.hess[0][1] - hi.grad[0]).abs() < 1e-10);
            assert!((lo.grad[1] + step * lo.hess[1][1] - hi.grad[1]).abs() < 1e-10);
        }
    }

    #[test]
    fn hessian_structure() {
        let c1 = hessian_origin(&e(1.0));
        assert_eq!(c1.c, [[1.0, 0.5], [0.5, 1.0 / 3.0]]);
        let c2 = hessian_origin(&e(2.0));
        assert_eq!(c2.c, [[0.25, 0.125], [0.125, 0.25 / 3.0]]);
        for m in HoldingTimeModel::builtins() {
            let cs = hessian_origin(&m);
            let id = mat_mul(&cs.c, &cs.c_inv);
            assert!((id[0][0] - 1.0).abs() < 1e-12 && (id[1][1] - 1.0).abs() < 1e-12);
            assert!(id[0][1].abs() < 1e-12 && id[1][0].abs() < 1e-12);
            assert!(cs.determinant() > 0.0);
        }
    }

    #[test]
    fn regularity_taxonomy() {
        let r = regularity_report(&HoldingTimeModel::noncentral_chi_squared(1.0, 1.0).unwrap());
        assert!(r.lsc && r.steep);
        assert_eq!(r.certificate, LdpCertificate::GartnerEllisC);
        let r = regularity_report(&HoldingTimeModel::inverse_gaussian(1.0).unwrap());
        assert!(r.lsc && !r.steep);
        assert_eq!(r.certificate, LdpCertificate::WeakOnly);
        let r = regularity_report(&e(1.0));
        assert!(!r.lsc && r.steep);
        assert_eq!(r.certificate, LdpCertificate::GradientImage);
    }
}
