//! Exponential holding times conditioned on the passage time: the uniform
//! CGF `κ`, its conjugate `κ*`, the conditional MGF of `A(x)` given
//! `τ(x) = y`, the simplex integral `𝓘ₓ(β, y)` and an exact sampler.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cgf::HoldingTimeModel;
use crate::error::{Error, Result};
use crate::extended::ExtReal;
use crate::legendre::conditional_rate_j;
use crate::quadrature;
use crate::roots;

/// `(e^t − 1)/t` in log form, `t = β z₁`.
fn log_expm1_ratio(t: f64) -> f64 {
    if t.abs() < 1e-8 {
        t / 2.0 + t * t / 24.0
    } else if t > 0.0 {
        t + (-(-t).exp_m1() / t).ln()
    } else {
        (t.exp_m1() / t).ln()
    }
}

/// `κ(β; z₁) = log((e^{βz₁} − 1)/(βz₁))`, the CGF of the uniform law on `(0, z₁)`.
pub fn kappa(beta: f64, z1: f64) -> f64 {
    if beta == 0.0 || z1 == 0.0 {
        return 0.0;
    }
    log_expm1_ratio(beta * z1)
}

/// `∂κ/∂β = z₁/(1 − e^{−βz₁}) − 1/β`, increasing from 0 to `z₁`.
pub fn kappa_prime(beta: f64, z1: f64) -> f64 {
    let t = beta * z1;
    let h = if t.abs() < 1e-3 {
        0.5 + t / 12.0 - t * t * t / 720.0
    } else {
        1.0 / -(-t).exp_m1() - 1.0 / t
    };
    z1 * h
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaStar {
    pub value: ExtReal,
    pub beta: Option<f64>,
    pub attained: bool,
    pub iterations: usize,
}

/// `κ*(z₂; z₁) = sup_β {β z₂ − κ(β; z₁)}`.
pub fn kappa_star(z2: f64, z1: f64) -> Result<KappaStar> {
    if z1.is_nan() || z2.is_nan() || z1 < 0.0 {
        return Err(Error::Domain(format!(
            "kappa_star needs z1 >= 0, got ({z2}, {z1})"
        )));
    }
    let outside = KappaStar {
        value: ExtReal::PosInfinity,
        beta: None,
        attained: false,
        iterations: 0,
    };
    if z1 == 0.0 {
        if z2 == 0.0 {
            return Ok(KappaStar {
                value: ExtReal::ZERO,
                beta: Some(0.0),
                attained: true,
                iterations: 0,
            });
        }
        return Ok(outside);
    }
    if !(z2 > 0.0 && z2 < z1) {
        return Ok(outside);
    }
    let f = |b: f64| kappa_prime(b, z1) - z2;
    let mut bound = 1.0;
    let mut iterations = 0;
    while f(-bound) > 0.0 || f(bound) < 0.0 {
        bound *= 2.0;
        iterations += 1;
        if bound > 1e300 {
            return Err(Error::SolverFailure {
                reason: "κ' bracket did not close".into(),
                iterations,
                best_bound: 0.0,
            });
        }
    }
    let root = roots::bisect(f, -bound, bound, 2000)?;
    let beta = root.x;
    Ok(KappaStar {
        value: ExtReal::Finite((beta * z2 - kappa(beta, z1)).max(0.0)),
        beta: Some(beta),
        attained: true,
        iterations: iterations + root.iterations,
    })
}

fn check_xy(x: u64, y: f64) -> Result<()> {
    if x < 1 {
        return Err(Error::Domain("x must be a positive integer".into()));
    }
    if !(y > 0.0 && y.is_finite()) {
        return Err(Error::Domain(format!(
            "y must be finite and positive, got {y}"
        )));
    }
    Ok(())
}

/// `log E[e^{β A(x)} | τ(x) = y] = βy + (x − 1) κ(β; y)`.
pub fn ln_conditional_mgf(x: u64, y: f64, beta: f64) -> Result<f64> {
    check_xy(x, y)?;
    Ok(beta * y + (x - 1) as f64 * kappa(beta, y))
}

/// `E[e^{β A(x)} | τ(x) = y] = e^{βy} ((e^{βy} − 1)/(βy))^{x−1}`.
pub fn conditional_mgf(x: u64, y: f64, beta: f64) -> Result<f64> {
    Ok(ln_conditional_mgf(x, y, beta)?.exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NestedMode {
    #[default]
    ClosedForm,
    BruteForce,
}

/// Largest `x` accepted by the brute-force nested quadrature.
pub const BRUTE_FORCE_MAX_X: u64 = 6;
const NESTED_NODES: usize = 64;

fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// `𝓘ₓ(β, y) = (1 − e^{−βy})^{x−1} / (β^{x−1} (x − 1)!)`.
pub fn nested_integral(x: u64, y: f64, beta: f64, mode: NestedMode) -> Result<f64> {
    check_xy(x, y)?;
    match mode {
        NestedMode::ClosedForm => {
            let t = beta * y;
            // (1 − e^{−βy})/β, with its β → 0 limit
            let base = if t.abs() < 1e-8 {
                y * (1.0 - t / 2.0 + t * t / 6.0)
            } else {
                -(-t).exp_m1() / beta
            };
            let n = x - 1;
            if n <= 20 {
                let fact: f64 = (2..=n).map(|k| k as f64).product();
                return Ok(base.powi(n as i32) / fact);
            }
            Ok((n as f64 * base.ln() - ln_factorial(n)).exp())
        }
        NestedMode::BruteForce => {
            if x > BRUTE_FORCE_MAX_X {
                let evals = (NESTED_NODES as f64).powi(x as i32 - 1);
                return Err(Error::Refused(format!(
                    "brute-force nested quadrature at x = {x} needs about {evals:.1e} integrand evaluations; \
                     the limit is x = {BRUTE_FORCE_MAX_X}"
                )));
            }
            Ok(nested_level(x, y, beta))
        }
    }
}

/// `𝓘ₙ₊₁(β, y) = ∫₀^y e^{−βnt} 𝓘ₙ(β, y − t) dt`, `𝓘₁ = 1`.
fn nested_level(n: u64, y: f64, beta: f64) -> f64 {
    if n <= 1 {
        return 1.0;
    }
    let k = (n - 1) as f64;
    quadrature::rule(NESTED_NODES).integrate(
        |t| (-beta * k * t).exp() * nested_level(n - 1, y - t, beta),
        0.0,
        y,
    )
}

/// `A(x)` given `τ(x) = y`: `y + Σ_{i<x} Uᵢ` with `Uᵢ` uniform on `(0, y)`.
pub fn sample_area_given_tau<R: Rng + ?Sized>(x: u64, y: f64, rng: &mut R) -> f64 {
    let mut area = y;
    for _ in 1..x {
        let u: f64 = rng.random();
        area += y * u;
    }
    area
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalLdpRow {
    pub x: u64,
    pub z1_x: f64,
    /// `(1/x) log E[e^{β A(x)/x} | τ(x) = x z₁⁽ˣ⁾]`.
    pub value: f64,
    pub limit: f64,
    pub error: f64,
}

/// Scaled conditional log-MGF along `z₁⁽ˣ⁾ → z₁`, against `κ(β; z₁)`.
pub fn conditional_ldp_check<F: Fn(u64) -> f64>(
    x_grid: &[u64],
    z1_sequence: F,
    z1_limit: f64,
    beta: f64,
) -> Result<Vec<ConditionalLdpRow>> {
    let limit = kappa(beta, z1_limit);
    x_grid
        .iter()
        .map(|&x| {
            let z1x = z1_sequence(x);
            let xf = x as f64;
            let value = ln_conditional_mgf(x, xf * z1x, beta / xf)? / xf;
            Ok(ConditionalLdpRow {
                x,
                z1_x: z1x,
                value,
                limit,
                error: (value - limit).abs(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChagantyReport {
    pub kappa_star: f64,
    pub j: f64,
    pub abs_diff: f64,
}

/// `κ*(z₂; z₁)` against `J(z₂ | z₁)` for exponential(λ) holding times.
pub fn chaganty_equality(lambda: f64, z1: f64, z2: f64) -> Result<ChagantyReport> {
    if !(z1 > 0.0 && z2 > 0.0 && z2 < z1) {
        return Err(Error::Domain(format!("need 0 < z2 < z1, got ({z1}, {z2})")));
    }
    let model = HoldingTimeModel::exponential(lambda)?;
    let ks = kappa_star(z2, z1)?.value.to_f64();
    let j = conditional_rate_j(&model, z1, z2)?.to_f64();
    Ok(ChagantyReport {
        kappa_star: ks,
        j,
        abs_diff: (ks - j).abs(),
    })
}
