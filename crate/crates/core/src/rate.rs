use serde::{Deserialize, Serialize};

use crate::extended::ExtReal;
use crate::lambda::Tilt;

/// How a rate value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMethod {
    ClosedForm,
    Newton,
    Ascent,
    PoissonGRoot,
}

/// Value of a Legendre transform together with its maximizing tilt and
/// solver diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEvaluation {
    pub value: ExtReal,
    pub argmax_tilt: Option<Tilt>,
    pub converged: bool,
    pub iterations: usize,
    pub method: RateMethod,
    /// The supremum is approached at the boundary of the effective domain
    /// (or the point lies on the boundary of the support cone).
    pub on_boundary: bool,
}

impl RateEvaluation {
    pub fn infinite(method: RateMethod) -> Self {
        Self {
            value: ExtReal::PosInfinity,
            argmax_tilt: None,
            converged: true,
            iterations: 0,
            method,
            on_boundary: false,
        }
    }

    pub fn zero() -> Self {
        Self {
            value: ExtReal::ZERO,
            argmax_tilt: Some(Tilt::ORIGIN),
            converged: true,
            iterations: 0,
            method: RateMethod::ClosedForm,
            on_boundary: false,
        }
    }

    /// Finite value, or `+inf` as `f64`.
    pub fn value_f64(&self) -> f64 {
        self.value.to_f64()
    }

    /// The maximizer is an interior tilt, so the evaluated point is exposed.
    pub fn within_exposed(&self) -> bool {
        self.converged && self.value.is_finite() && !self.on_boundary && self.argmax_tilt.is_some()
    }
}
