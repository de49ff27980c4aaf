//! Large- and moderate-deviation rate functions for the first-passage time
//! and first-passage area of renewal processes.
//!
//! For a renewal process `N(t)` with holding times `T₁, T₂, …` and a level
//! `x > 0`, `τ(x)` is the first time `x − N(t)` reaches zero and `A(x)` is
//! the area under `x − N(t)` up to `τ(x)`. The crate computes the rate
//! functions of `(τ(x)/x, A(x)/x²)` and checks them by exact sampling.

pub mod cgf;
pub mod conditional;
pub mod error;
pub mod extended;
pub mod lambda;
pub mod legendre;
pub mod moderate;
pub mod quadrature;
pub mod rate;
pub mod region;
pub mod roots;
pub mod sampler;
pub mod simulator;
pub mod special;
pub mod validation;

pub use cgf::{HoldingTimeModel, ModelKind};
pub use error::{Error, Result};
pub use extended::ExtReal;
pub use lambda::Tilt;
pub use rate::{RateEvaluation, RateMethod};
