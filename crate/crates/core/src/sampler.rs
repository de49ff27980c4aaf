//! Exact variate generation for the built-in holding-time laws.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

/// Identifier and parameters of an exact sampling method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Sampler {
    /// Inverse CDF.
    Exponential { rate: f64 },
    /// Marsaglia–Tsang rejection, with the `U^{1/s}` boost for shape below one.
    Gamma { shape: f64, rate: f64 },
    /// Michael–Schucany–Haas transformation with multiple roots.
    InverseGaussian { mean: f64, shape: f64 },
    /// `scale · χ²_{k + 2N}` with `N ~ Poisson(noncentrality / 2)`.
    NoncentralChiSquared {
        noncentrality: f64,
        dof: f64,
        scale: f64,
    },
}

impl Sampler {
    pub fn gamma(shape: f64, rate: f64) -> Self {
        Sampler::Gamma { shape, rate }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Sampler::Exponential { rate } => exponential(rng) / rate,
            Sampler::Gamma { shape, rate } => standard_gamma(rng, shape) / rate,
            Sampler::InverseGaussian { mean, shape } => inverse_gaussian(rng, mean, shape),
            Sampler::NoncentralChiSquared {
                noncentrality,
                dof,
                scale,
            } => {
                let n = if noncentrality > 0.0 {
                    Poisson::new(0.5 * noncentrality)
                        .expect("positive Poisson mean")
                        .sample(rng)
                } else {
                    0.0
                };
                scale * 2.0 * standard_gamma(rng, 0.5 * dof + n)
            }
        }
    }
}

/// Standard exponential by inversion; `1 − U` lies in `(0, 1]`.
fn exponential<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    -(-u).ln_1p()
}

fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Gamma(shape, 1).
fn standard_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64) -> f64 {
    if shape < 1.0 {
        let boost = open_uniform(rng).powf(1.0 / shape);
        return standard_gamma(rng, shape + 1.0) * boost;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let z: f64 = rng.sample(StandardNormal);
        let v = 1.0 + c * z;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = open_uniform(rng);
        let z2 = z * z;
        if u < 1.0 - 0.0331 * z2 * z2 || u.ln() < 0.5 * z2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

fn inverse_gaussian<R: Rng + ?Sized>(rng: &mut R, mean: f64, shape: f64) -> f64 {
    let n: f64 = rng.sample(StandardNormal);
    let w = mean * n * n / (2.0 * shape);
    // smaller root of the chi-square transform, written without cancellation
    let y = mean / (1.0 + w + (w * (w + 2.0)).sqrt());
    let u: f64 = rng.random();
    if u * (mean + y) <= mean {
        y
    } else {
        mean * mean / y
    }
}
