//! Holding-time models described by their cumulant generating function
//! `phi(a) = log E[exp(a T)]`, its derivatives, its effective domain and the
//! one-dimensional Legendre transform `phi*`.
//!
//! Built-in families:
//!
//! | kind                     | `phi(a)`                                  | domain           |
//! |--------------------------|-------------------------------------------|------------------|
//! | exponential(λ)           | `log(λ/(λ−a))`                            | `(−∞, λ)`        |
//! | inverse Gaussian(μ)      | `μ − sqrt(μ² − 2a)`                       | `(−∞, μ²/2]`     |
//! | noncentral χ²(λ, k)      | `λa/(1−2a) − (k/2) log(1−2a)`             | `(−∞, 1/2)`      |
//! | gamma(shape s, rate r)   | `−s log(1 − a/r)`                         | `(−∞, r)`        |
//!
//! The inverse Gaussian law has density
//! `exp(−(μt−1)²/(2t)) / (sqrt(2π) t^{3/2})`, i.e. mean `1/μ` and shape 1.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extended::ExtReal;
use crate::lambda::Tilt;
use crate::rate::{RateEvaluation, RateMethod};
use crate::roots;
use crate::sampler::Sampler;

/// Effective domain `D(phi) = (−∞, boundary)` or `(−∞, boundary]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    /// `ᾱ > 0`, or `+inf` when `phi` is finite on the whole line.
    pub boundary: f64,
    /// `ᾱ` belongs to `D(phi)`.
    pub boundary_closed: bool,
    /// `phi` is integrable on a left neighbourhood of `ᾱ`.
    pub integrable_at_boundary: bool,
}

impl DomainSpec {
    pub fn full_line() -> Self {
        Self {
            boundary: f64::INFINITY,
            boundary_closed: true,
            integrable_at_boundary: true,
        }
    }

    pub fn is_full_line(&self) -> bool {
        self.boundary == f64::INFINITY
    }

    /// `a ∈ D(phi)`.
    pub fn contains(&self, a: f64) -> bool {
        a < self.boundary || (self.boundary_closed && a == self.boundary)
    }

    /// `a` in the interior of `D(phi)`.
    pub fn contains_interior(&self, a: f64) -> bool {
        a < self.boundary
    }

    pub fn lsc_case(&self) -> LscCase {
        if self.is_full_line() {
            LscCase::FullLine
        } else if self.boundary_closed {
            LscCase::ClosedBoundary
        } else if self.integrable_at_boundary {
            LscCase::OpenIntegrable
        } else {
            LscCase::OpenNonintegrable
        }
    }
}

/// The four shapes of `D(phi)` that decide lower semicontinuity of the
/// bivariate limit function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LscCase {
    /// `D(phi) = (−∞, ᾱ]`: lower semicontinuous.
    ClosedBoundary,
    /// `D(phi) = (−∞, ᾱ)`, `phi` integrable near `ᾱ`: not lower semicontinuous.
    OpenIntegrable,
    /// `D(phi) = (−∞, ᾱ)`, `phi` not integrable near `ᾱ`: lower semicontinuous.
    OpenNonintegrable,
    /// `D(phi) = ℝ`.
    FullLine,
}

impl LscCase {
    pub fn lower_semicontinuous(&self) -> bool {
        !matches!(self, LscCase::OpenIntegrable)
    }
}

/// Family and parameters of a holding-time law.
///
/// Serializes as `{"kind": "...", "params": {...}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    content = "params",
    rename_all = "snake_case",
    deny_unknown_fields
)]
pub enum ModelKind {
    Exponential { lambda: f64 },
    InverseGaussian { mu: f64 },
    NoncentralChiSquared { lambda: f64, k: f64 },
    Gamma { shape: f64, rate: f64 },
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Exponential { .. } => "exponential",
            ModelKind::InverseGaussian { .. } => "inverse_gaussian",
            ModelKind::NoncentralChiSquared { .. } => "noncentral_chi_squared",
            ModelKind::Gamma { .. } => "gamma",
        }
    }

    fn params(&self) -> Vec<f64> {
        match *self {
            ModelKind::Exponential { lambda } => vec![lambda],
            ModelKind::InverseGaussian { mu } => vec![mu],
            ModelKind::NoncentralChiSquared { lambda, k } => vec![lambda, k],
            ModelKind::Gamma { shape, rate } => vec![shape, rate],
        }
    }
}

/// A validated light-tailed positive holding-time law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelKind", into = "ModelKind")]
pub struct HoldingTimeModel {
    kind: ModelKind,
    domain: DomainSpec,
}

impl TryFrom<ModelKind> for HoldingTimeModel {
    type Error = Error;

    fn try_from(kind: ModelKind) -> Result<Self> {
        make_model(kind)
    }
}

impl From<HoldingTimeModel> for ModelKind {
    fn from(m: HoldingTimeModel) -> Self {
        m.kind
    }
}

impl fmt::Display for HoldingTimeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params: Vec<String> = self.kind.params().iter().map(|p| p.to_string()).collect();
        write!(f, "{}:{}", self.kind.name(), params.join(","))
    }
}

/// Parses `kind:p1[,p2]`, e.g. `exponential:1`, `inverse_gaussian:1`,
/// `noncentral_chi_squared:1,1`, `gamma:2,2`.
impl FromStr for HoldingTimeModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected kind:params, found {s:?}")))?;
        let params: Vec<f64> = rest
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad model parameter {t:?}")))
            })
            .collect::<Result<_>>()?;
        let arity = |n: usize| -> Result<()> {
            if params.len() == n {
                Ok(())
            } else {
                Err(Error::Parse(format!(
                    "{name} takes {n} parameter(s), found {}",
                    params.len()
                )))
            }
        };
        let kind = match name.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "exponential" | "exp" => {
                arity(1)?;
                ModelKind::Exponential { lambda: params[0] }
            }
            "inverse_gaussian" | "ig" => {
                arity(1)?;
                ModelKind::InverseGaussian { mu: params[0] }
            }
            "noncentral_chi_squared" | "ncx2" => {
                arity(2)?;
                ModelKind::NoncentralChiSquared {
                    lambda: params[0],
                    k: params[1],
                }
            }
            "gamma" => {
                arity(2)?;
                ModelKind::Gamma {
                    shape: params[0],
                    rate: params[1],
                }
            }
            other => return Err(Error::Parse(format!("unknown model kind {other:?}"))),
        };
        make_model(kind)
    }
}

/// Validates parameters and attaches the effective domain.
pub fn make_model(kind: ModelKind) -> Result<HoldingTimeModel> {
    for p in kind.params() {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::ParameterDomain(format!(
                "{} parameters must be finite and strictly positive, got {p}",
                kind.name()
            )));
        }
    }
    let domain = match kind {
        ModelKind::Exponential { lambda } => DomainSpec {
            boundary: lambda,
            boundary_closed: false,
            integrable_at_boundary: true,
        },
        ModelKind::InverseGaussian { mu } => DomainSpec {
            boundary: 0.5 * mu * mu,
            boundary_closed: true,
            integrable_at_boundary: true,
        },
        ModelKind::NoncentralChiSquared { .. } => DomainSpec {
            boundary: 0.5,
            boundary_closed: false,
            integrable_at_boundary: false,
        },
        ModelKind::Gamma { rate, .. } => DomainSpec {
            boundary: rate,
            boundary_closed: false,
            integrable_at_boundary: true,
        },
    };
    Ok(HoldingTimeModel { kind, domain })
}

impl HoldingTimeModel {
    pub fn exponential(lambda: f64) -> Result<Self> {
        make_model(ModelKind::Exponential { lambda })
    }

    pub fn inverse_gaussian(mu: f64) -> Result<Self> {
        make_model(ModelKind::InverseGaussian { mu })
    }

    pub fn noncentral_chi_squared(lambda: f64, k: f64) -> Result<Self> {
        make_model(ModelKind::NoncentralChiSquared { lambda, k })
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        make_model(ModelKind::Gamma { shape, rate })
    }

    /// One representative of each built-in family.
    pub fn builtins() -> Vec<HoldingTimeModel> {
        vec![
            Self::exponential(1.0).unwrap(),
            Self::inverse_gaussian(1.0).unwrap(),
            Self::noncentral_chi_squared(1.0, 1.0).unwrap(),
            Self::gamma(2.0, 2.0).unwrap(),
        ]
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn domain(&self) -> DomainSpec {
        self.domain
    }

    pub fn boundary(&self) -> f64 {
        self.domain.boundary
    }

    pub fn is_exponential(&self) -> bool {
        matches!(self.kind, ModelKind::Exponential { .. })
    }

    /// `phi(a)`, `+inf` outside `D(phi)`.
    pub fn cgf(&self, a: f64) -> ExtReal {
        ExtReal::from_f64(self.phi(a))
    }

    /// `phi` as a plain float: `+inf` outside the domain.
    pub(crate) fn phi(&self, a: f64) -> f64 {
        if !self.domain.contains(a) {
            return f64::INFINITY;
        }
        match self.kind {
            ModelKind::Exponential { lambda } => -(-a / lambda).ln_1p(),
            ModelKind::Gamma { shape, rate } => -shape * (-a / rate).ln_1p(),
            ModelKind::InverseGaussian { mu } => {
                let root = (mu * mu - 2.0 * a).max(0.0).sqrt();
                2.0 * a / (mu + root)
            }
            ModelKind::NoncentralChiSquared { lambda, k } => {
                let s = 1.0 - 2.0 * a;
                lambda * a / s - 0.5 * k * (-2.0 * a).ln_1p()
            }
        }
    }

    /// `phi'(a)` on the interior of `D(phi)`; NaN elsewhere.
    pub fn cgf_d1(&self, a: f64) -> f64 {
        if !self.domain.contains_interior(a) {
            return f64::NAN;
        }
        match self.kind {
            ModelKind::Exponential { lambda } => 1.0 / (lambda - a),
            ModelKind::Gamma { shape, rate } => shape / (rate - a),
            ModelKind::InverseGaussian { mu } => (mu * mu - 2.0 * a).powf(-0.5),
            ModelKind::NoncentralChiSquared { lambda, k } => {
                let s = 1.0 - 2.0 * a;
                lambda / (s * s) + k / s
            }
        }
    }

    /// `phi''(a)` on the interior of `D(phi)`; NaN elsewhere.
    pub fn cgf_d2(&self, a: f64) -> f64 {
        if !self.domain.contains_interior(a) {
            return f64::NAN;
        }
        match self.kind {
            ModelKind::Exponential { lambda } => (lambda - a).powi(-2),
            ModelKind::Gamma { shape, rate } => shape * (rate - a).powi(-2),
            ModelKind::InverseGaussian { mu } => (mu * mu - 2.0 * a).powf(-1.5),
            ModelKind::NoncentralChiSquared { lambda, k } => {
                let s = 1.0 - 2.0 * a;
                4.0 * lambda / (s * s * s) + 2.0 * k / (s * s)
            }
        }
    }

    /// `(phi, phi', phi'')` at `a = boundary − d`, for `d > 0`, computed
    /// from the distance `d` so that nothing cancels near the edge.
    pub(crate) fn jet_from_edge(&self, d: f64) -> [f64; 3] {
        let a = self.boundary() - d;
        match self.kind {
            ModelKind::Exponential { lambda } => [-(d / lambda).ln(), 1.0 / d, 1.0 / (d * d)],
            ModelKind::Gamma { shape, rate } => {
                [-shape * (d / rate).ln(), shape / d, shape / (d * d)]
            }
            ModelKind::InverseGaussian { mu } => {
                let root = (2.0 * d).sqrt();
                [
                    2.0 * a / (mu + root),
                    1.0 / root,
                    1.0 / (root * root * root),
                ]
            }
            ModelKind::NoncentralChiSquared { lambda, k } => {
                let s = 2.0 * d;
                [
                    lambda * a / s - 0.5 * k * s.ln(),
                    lambda / (s * s) + k / s,
                    4.0 * lambda / (s * s * s) + 2.0 * k / (s * s),
                ]
            }
        }
    }

    /// `phi'''(a)` on the interior of `D(phi)`; NaN elsewhere.
    pub fn cgf_d3(&self, a: f64) -> f64 {
        if !self.domain.contains_interior(a) {
            return f64::NAN;
        }
        match self.kind {
            ModelKind::Exponential { lambda } => 2.0 * (lambda - a).powi(-3),
            ModelKind::Gamma { shape, rate } => 2.0 * shape * (rate - a).powi(-3),
            ModelKind::InverseGaussian { mu } => 3.0 * (mu * mu - 2.0 * a).powf(-2.5),
            ModelKind::NoncentralChiSquared { lambda, k } => {
                let s = 1.0 - 2.0 * a;
                24.0 * lambda / s.powi(4) + 8.0 * k / (s * s * s)
            }
        }
    }

    /// Closed-form `∫_0^a phi`, available for the exponential family.
    pub fn antiderivative(&self, a: f64) -> Option<f64> {
        match self.kind {
            ModelKind::Exponential { lambda } => {
                if a > lambda {
                    return None;
                }
                let u = 1.0 - a / lambda;
                let ulnu = if u == 0.0 { 0.0 } else { u * u.ln() };
                Some(lambda * (1.0 - u + ulnu))
            }
            _ => None,
        }
    }

    pub fn has_antiderivative(&self) -> bool {
        self.is_exponential()
    }

    /// `phi'(0) = E[T]`.
    pub fn mean(&self) -> f64 {
        self.cgf_d1(0.0)
    }

    /// `phi''(0) = Var[T]`.
    pub fn variance(&self) -> f64 {
        self.cgf_d2(0.0)
    }

    /// Exact sampler of the law.
    pub fn sampler(&self) -> Sampler {
        match self.kind {
            ModelKind::Exponential { lambda } => Sampler::Exponential { rate: lambda },
            ModelKind::Gamma { shape, rate } => Sampler::gamma(shape, rate),
            ModelKind::InverseGaussian { mu } => Sampler::InverseGaussian {
                mean: 1.0 / mu,
                shape: 1.0,
            },
            ModelKind::NoncentralChiSquared { lambda, k } => Sampler::NoncentralChiSquared {
                noncentrality: lambda,
                dof: k,
                scale: 1.0,
            },
        }
    }

    /// Sampler of the exponentially tilted law `exp(θt − phi(θ)) P(dt)`.
    ///
    /// Every built-in family is closed under tilting.
    pub fn tilted_sampler(&self, theta: f64) -> Result<Sampler> {
        if !self.domain.contains_interior(theta) {
            return Err(Error::Domain(format!(
                "tilt {theta} is not in the interior of D(phi) for {self}"
            )));
        }
        Ok(match self.kind {
            ModelKind::Exponential { lambda } => Sampler::Exponential {
                rate: lambda - theta,
            },
            ModelKind::Gamma { shape, rate } => Sampler::gamma(shape, rate - theta),
            ModelKind::InverseGaussian { mu } => Sampler::InverseGaussian {
                mean: 1.0 / (mu * mu - 2.0 * theta).sqrt(),
                shape: 1.0,
            },
            ModelKind::NoncentralChiSquared { lambda, k } => {
                let s = 1.0 - 2.0 * theta;
                Sampler::NoncentralChiSquared {
                    noncentrality: lambda / s,
                    dof: k,
                    scale: 1.0 / s,
                }
            }
        })
    }
}

/// `D(phi)` together with its lower-semicontinuity case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainClassification {
    pub domain: DomainSpec,
    pub lsc_case: LscCase,
}

pub fn classify_domain(model: &HoldingTimeModel) -> DomainClassification {
    DomainClassification {
        domain: model.domain(),
        lsc_case: model.domain().lsc_case(),
    }
}

/// `phi*(z) = sup_a {a z − phi(a)}`, by closed form where one exists.
pub fn phi_star(model: &HoldingTimeModel, z1: f64) -> Result<RateEvaluation> {
    if let Some(r) = phi_star_trivial(model, z1) {
        return Ok(r);
    }
    let closed = match model.kind() {
        ModelKind::Exponential { lambda } => {
            let t = lambda * z1;
            Some((t - 1.0 - t.ln(), lambda - 1.0 / z1))
        }
        ModelKind::Gamma { shape, rate } => {
            let t = rate * z1 / shape;
            Some((shape * (t - 1.0 - t.ln()), rate - shape / z1))
        }
        ModelKind::InverseGaussian { mu } => {
            let d = mu * z1 - 1.0;
            Some((d * d / (2.0 * z1), 0.5 * (mu * mu - 1.0 / (z1 * z1))))
        }
        ModelKind::NoncentralChiSquared { .. } => None,
    };
    match closed {
        Some((value, a)) => Ok(RateEvaluation {
            value: ExtReal::Finite(value.max(0.0)),
            argmax_tilt: Some(Tilt::new(a, 0.0)),
            converged: true,
            iterations: 0,
            method: RateMethod::ClosedForm,
            on_boundary: false,
        }),
        None => phi_star_numeric(model, z1),
    }
}

fn phi_star_trivial(model: &HoldingTimeModel, z1: f64) -> Option<RateEvaluation> {
    if !z1.is_finite() || z1 <= 0.0 {
        return Some(RateEvaluation::infinite(RateMethod::ClosedForm));
    }
    if z1 == model.mean() {
        return Some(RateEvaluation::zero());
    }
    None
}

/// `phi*` by bracketed Newton on `phi'(a) = z`, ignoring closed forms.
pub fn phi_star_numeric(model: &HoldingTimeModel, z1: f64) -> Result<RateEvaluation> {
    if let Some(r) = phi_star_trivial(model, z1) {
        return Ok(r);
    }
    let boundary = model.boundary();
    let mean = model.mean();
    let (lo, hi) = if z1 < mean {
        let mut lo = -1.0;
        let mut n = 0;
        while model.cgf_d1(lo) >= z1 {
            lo *= 2.0;
            n += 1;
            if n > 1100 {
                return Err(Error::SolverFailure {
                    reason: "lower bracket for phi'(a) = z not found".into(),
                    iterations: n,
                    best_bound: 0.0,
                });
            }
        }
        (lo, 0.0)
    } else {
        let mut n = 0;
        let mut hi = if boundary.is_finite() {
            0.5 * boundary
        } else {
            1.0
        };
        let mut gap = 0.5 * boundary;
        while model.cgf_d1(hi) <= z1 {
            n += 1;
            if boundary.is_finite() {
                gap *= 0.5;
                let next = boundary - gap;
                if next == hi || next >= boundary {
                    // phi' stays bounded up to the boundary: the supremum sits at ᾱ
                    return Ok(phi_star_at_boundary(model, z1, n));
                }
                hi = next;
            } else {
                hi *= 2.0;
            }
            if n > 1100 {
                return Err(Error::SolverFailure {
                    reason: "upper bracket for phi'(a) = z not found".into(),
                    iterations: n,
                    best_bound: 0.0,
                });
            }
        }
        (0.0, hi)
    };
    let root = roots::newton_bisect(
        |a| (model.cgf_d1(a) - z1, model.cgf_d2(a)),
        lo,
        hi,
        1e-16,
        400,
    )?;
    let a = root.x;
    let value = a * z1 - model.phi(a);
    Ok(RateEvaluation {
        value: ExtReal::Finite(value.max(0.0)),
        argmax_tilt: Some(Tilt::new(a, 0.0)),
        converged: true,
        iterations: root.iterations,
        method: RateMethod::Newton,
        on_boundary: false,
    })
}

fn phi_star_at_boundary(model: &HoldingTimeModel, z1: f64, iterations: usize) -> RateEvaluation {
    let b = model.boundary();
    let phi_b = if model.domain().boundary_closed {
        model.phi(b)
    } else {
        // open boundary with bounded phi': value approached, not attained
        let inner = b - b * 1e-15;
        model.phi(inner)
    };
    RateEvaluation {
        value: ExtReal::Finite((b * z1 - phi_b).max(0.0)),
        argmax_tilt: Some(Tilt::new(b, 0.0)),
        converged: model.domain().boundary_closed,
        iterations,
        method: RateMethod::Newton,
        on_boundary: true,
    }
}
