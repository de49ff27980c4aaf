//! Exact Monte Carlo for `(τ(x), A(x))` through the weighted sums
//! `τ = Σ Tⱼ`, `A = Σ (x − j + 1) Tⱼ`.
//!
//! Every sample index owns a ChaCha stream keyed by the master seed, so a
//! sample does not depend on how indices are split between workers. Workers
//! take contiguous index ranges and their partial results are merged in
//! worker order.

use std::thread;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cgf::HoldingTimeModel;
use crate::error::{Error, Result};
use crate::extended::ExtReal;
use crate::lambda::{hessian_origin, Tilt};
use crate::legendre::rate_inf_over_region;
use crate::moderate::{
    centering, exact_moments, md_event_rate, n_terms, CenteringMode, ModerateScaling,
};
use crate::region::{Axis, Region, RegionPiece};
use crate::roots;
use crate::sampler::Sampler;
use crate::special::{gamma_upper_tail, log_sum_exp, wilson_interval, Interval, NeumaierSum, Z_99};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassageSample {
    pub x: f64,
    pub tau: f64,
    pub area: f64,
    pub n_terms: u64,
}

/// Random stream of sample `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn check_x(x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!(
            "x must be finite and positive, got {x}"
        )));
    }
    Ok(())
}

/// Weights `x, x − 1, …` of the holding times in `A(x)`.
pub fn weights(x: f64) -> Vec<f64> {
    (0..n_terms(x)).map(|k| x - k as f64).collect()
}

fn draw(sampler: &Sampler, w: &[f64], rng: &mut ChaCha8Rng) -> (f64, f64) {
    let mut tau = 0.0;
    let mut area = 0.0;
    for &wj in w {
        let t = sampler.sample(rng);
        tau += t;
        area += wj * t;
    }
    (tau, area)
}

pub fn sample_passage<R: Rng + ?Sized>(
    model: &HoldingTimeModel,
    x: f64,
    rng: &mut R,
) -> Result<PassageSample> {
    check_x(x)?;
    let s = model.sampler();
    let n = n_terms(x);
    let mut tau = 0.0;
    let mut area = 0.0;
    for k in 0..n {
        let t = s.sample(rng);
        tau += t;
        area += (x - k as f64) * t;
    }
    Ok(PassageSample {
        x,
        tau,
        area,
        n_terms: n,
    })
}

/// Samples `0..n` in index order.
pub fn sample_passages(
    model: &HoldingTimeModel,
    x: f64,
    n: u64,
    seed: u64,
) -> Result<Vec<PassageSample>> {
    check_x(x)?;
    (0..n)
        .map(|i| sample_passage(model, x, &mut stream(seed, i)))
        .collect()
}

/// Partial result of a worker.
pub trait Accumulator: Default + Send {
    fn merge(&mut self, other: Self);
}

/// Runs `body(index, rng, acc)` for `index in 0..n` on `workers` threads.
pub fn run_parallel<A, F>(n: u64, workers: usize, seed: u64, body: F) -> Result<A>
where
    A: Accumulator,
    F: Fn(u64, &mut ChaCha8Rng, &mut A) + Sync,
{
    if workers == 0 {
        return Err(Error::ParameterDomain(
            "worker count must be at least 1".into(),
        ));
    }
    let w = workers as u64;
    let chunk = n.div_ceil(w.max(1));
    let parts: Vec<A> = thread::scope(|scope| {
        let handles: Vec<_> = (0..w)
            .map(|k| {
                let body = &body;
                scope.spawn(move || {
                    let mut acc = A::default();
                    let lo = (k * chunk).min(n);
                    let hi = ((k + 1) * chunk).min(n);
                    for i in lo..hi {
                        let mut rng = stream(seed, i);
                        body(i, &mut rng, &mut acc);
                    }
                    acc
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation worker panicked"))
            .collect()
    });
    let mut total = A::default();
    for p in parts {
        total.merge(p);
    }
    Ok(total)
}

pub fn default_workers() -> usize {
    thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

/// Event of a tail experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TailEvent {
    /// `(τ/x, A/x²)` falls in the region.
    Region { region: Region },
    /// `τ/x ≥ threshold` (`axis = z1`) or `A/x² ≥ threshold` (`axis = z2`).
    Marginal { axis: Axis, threshold: f64 },
}

impl TailEvent {
    pub fn region(&self) -> Region {
        match self {
            TailEvent::Region { region } => region.clone(),
            TailEvent::Marginal { axis, threshold } => Region::half_plane(*axis, *threshold, true),
        }
    }

    /// `z1 ≥ c` when the event is exactly that half-plane.
    fn tau_threshold(&self) -> Option<f64> {
        match self {
            TailEvent::Marginal {
                axis: Axis::Z1,
                threshold,
            } => Some(*threshold),
            TailEvent::Region { region } => match region.pieces.as_slice() {
                [RegionPiece::HalfPlane {
                    axis: Axis::Z1,
                    bound,
                    upper: true,
                }] => Some(*bound),
                _ => None,
            },
            _ => None,
        }
    }
}

impl std::fmt::Display for TailEvent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.region())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub model: HoldingTimeModel,
    pub x: f64,
    pub n_samples: u64,
    pub seed: u64,
    pub workers: usize,
    #[serde(default)]
    pub events: Vec<TailEvent>,
    #[serde(default)]
    pub centering: CenteringMode,
}

impl SimulationConfig {
    pub fn new(model: HoldingTimeModel, x: f64, n_samples: u64, seed: u64) -> Self {
        Self {
            model,
            x,
            n_samples,
            seed,
            workers: default_workers(),
            events: Vec::new(),
            centering: CenteringMode::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_x(self.x)?;
        if self.n_samples < 1 {
            return Err(Error::ParameterDomain(
                "sample count must be at least 1".into(),
            ));
        }
        if self.workers < 1 {
            return Err(Error::ParameterDomain(
                "worker count must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub event: String,
    pub x: f64,
    pub n_samples: u64,
    pub hit_count: u64,
    pub p_hat: f64,
    pub ci99: Interval,
    /// `−(1/x) log p̂`; absent without hits.
    pub empirical_rate: Option<f64>,
    /// `−(1/x) log(3/n)`, reported when there are no hits.
    pub rate_lower_bound: Option<f64>,
    pub predicted_rate: Option<ExtReal>,
    /// Exact probability, when known.
    pub exact_p: Option<f64>,
    pub exact_rate: Option<f64>,
}

#[derive(Default)]
struct Hits(u64);

impl Accumulator for Hits {
    fn merge(&mut self, other: Self) {
        self.0 += other.0;
    }
}

pub fn estimate_tail(config: &SimulationConfig, event: &TailEvent) -> Result<TailEstimate> {
    config.validate()?;
    let x = config.x;
    let region = event.region();
    let sampler = config.model.sampler();
    let w = weights(x);
    let hits: Hits = run_parallel(
        config.n_samples,
        config.workers,
        config.seed,
        |_, rng, acc: &mut Hits| {
            let (tau, area) = draw(&sampler, &w, rng);
            if region.contains([tau / x, area / (x * x)]) {
                acc.0 += 1;
            }
        },
    )?;
    let n = config.n_samples;
    let p_hat = hits.0 as f64 / n as f64;
    let (empirical_rate, rate_lower_bound) = if hits.0 > 0 {
        (Some(-p_hat.ln() / x), None)
    } else {
        (None, Some(-(3.0 / n as f64).ln() / x))
    };
    let (exact_p, exact_rate) = match (config.model.kind(), event.tau_threshold()) {
        (crate::cgf::ModelKind::Exponential { lambda }, Some(c)) => {
            let p = gamma_upper_tail(n_terms(x) as f64, lambda, c * x);
            (Some(p), Some(-p.ln() / x))
        }
        _ => (None, None),
    };
    Ok(TailEstimate {
        event: event.to_string(),
        x,
        n_samples: n,
        hit_count: hits.0,
        p_hat,
        ci99: wilson_interval(hits.0, n, Z_99),
        empirical_rate,
        rate_lower_bound,
        predicted_rate: rate_inf_over_region(&config.model, &region).ok(),
        exact_p,
        exact_rate,
    })
}

pub fn run_events(config: &SimulationConfig) -> Result<Vec<TailEstimate>> {
    config
        .events
        .iter()
        .map(|e| estimate_tail(config, e))
        .collect()
}

/// Sums of centred powers around fixed reference means.
#[derive(Default, Clone)]
struct MomentSums {
    n: u64,
    d: [NeumaierSum; 2],
    dd: [NeumaierSum; 3],
    d4: [NeumaierSum; 3],
}

impl MomentSums {
    fn push(&mut self, d1: f64, d2: f64) {
        self.n += 1;
        self.d[0].add(d1);
        self.d[1].add(d2);
        self.dd[0].add(d1 * d1);
        self.dd[1].add(d1 * d2);
        self.dd[2].add(d2 * d2);
        self.d4[0].add(d1 * d1 * d1 * d1);
        self.d4[1].add(d1 * d1 * d2 * d2);
        self.d4[2].add(d2 * d2 * d2 * d2);
    }

    /// Means, covariance (unbiased) and fourth-order products around the sample mean.
    fn summarize(&self) -> ([f64; 2], [[f64; 2]; 2], [f64; 3]) {
        let n = self.n as f64;
        let m = [self.d[0].value() / n, self.d[1].value() / n];
        let s = |k: usize| self.dd[k].value();
        let c00 = (s(0) - n * m[0] * m[0]) / (n - 1.0);
        let c01 = (s(1) - n * m[0] * m[1]) / (n - 1.0);
        let c11 = (s(2) - n * m[1] * m[1]) / (n - 1.0);
        // the reference means are exact, so the shift is negligible at fourth order
        let q = [
            self.d4[0].value() / n,
            self.d4[1].value() / n,
            self.d4[2].value() / n,
        ];
        (m, [[c00, c01], [c01, c11]], q)
    }
}

impl Accumulator for MomentSums {
    fn merge(&mut self, other: Self) {
        self.n += other.n;
        for k in 0..2 {
            self.d[k].merge(&other.d[k]);
        }
        for k in 0..3 {
            self.dd[k].merge(&other.dd[k]);
            self.d4[k].merge(&other.d4[k]);
        }
    }
}

/// Empirical value with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub value: f64,
    pub std_error: f64,
}

impl Measured {
    /// `|value − target|` in standard errors.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.value - target).abs() / self.std_error
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMoments {
    pub x: f64,
    pub n_samples: u64,
    pub mean_tau: Measured,
    pub var_tau: Measured,
    pub mean_area: Measured,
    pub var_area: Measured,
    pub cov: Measured,
}

pub fn empirical_moments(
    model: &HoldingTimeModel,
    x: f64,
    n: u64,
    seed: u64,
    workers: usize,
) -> Result<EmpiricalMoments> {
    let exact = exact_moments(model, x)?;
    if n < 2 {
        return Err(Error::ParameterDomain("need at least two samples".into()));
    }
    let sampler = model.sampler();
    let w = weights(x);
    let sums: MomentSums = run_parallel(n, workers, seed, |_, rng, acc: &mut MomentSums| {
        let (tau, area) = draw(&sampler, &w, rng);
        acc.push(tau - exact.mean_tau, area - exact.mean_area);
    })?;
    let (m, c, q) = sums.summarize();
    let nf = n as f64;
    let se = |v: f64| (v.max(0.0) / nf).sqrt();
    Ok(EmpiricalMoments {
        x,
        n_samples: n,
        mean_tau: Measured {
            value: exact.mean_tau + m[0],
            std_error: se(c[0][0]),
        },
        mean_area: Measured {
            value: exact.mean_area + m[1],
            std_error: se(c[1][1]),
        },
        var_tau: Measured {
            value: c[0][0],
            std_error: se(q[0] - c[0][0] * c[0][0]),
        },
        var_area: Measured {
            value: c[1][1],
            std_error: se(q[2] - c[1][1] * c[1][1]),
        },
        cov: Measured {
            value: c[0][1],
            std_error: se(q[1] - c[0][1] * c[0][1]),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub x: f64,
    pub n_samples: u64,
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
    pub correlation: f64,
    /// The limit covariance `C`.
    pub predicted: [[f64; 2]; 2],
}

/// Mean and covariance of `√x (τ/x − φ'(0), A/x² − φ'(0)/2)`.
pub fn empirical_clt(
    model: &HoldingTimeModel,
    x: f64,
    n: u64,
    seed: u64,
    workers: usize,
) -> Result<CltReport> {
    check_x(x)?;
    if n < 2 {
        return Err(Error::ParameterDomain("need at least two samples".into()));
    }
    let c0 = centering(model, x, CenteringMode::Theoretical)?;
    let sampler = model.sampler();
    let w = weights(x);
    let root = x.sqrt();
    let sums: MomentSums = run_parallel(n, workers, seed, |_, rng, acc: &mut MomentSums| {
        let (tau, area) = draw(&sampler, &w, rng);
        acc.push(root * (tau / x - c0[0]), root * (area / (x * x) - c0[1]));
    })?;
    let (mean, cov, _) = sums.summarize();
    Ok(CltReport {
        x,
        n_samples: n,
        mean,
        cov,
        correlation: cov[0][1] / (cov[0][0] * cov[1][1]).sqrt(),
        predicted: hessian_origin(model).c,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MdMethod {
    Plain,
    /// Mixture of exponentially tilted laws, one per face of the event, with
    /// a defensive share of the nominal law.
    #[default]
    Tilted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MdRow {
    pub x: f64,
    pub a_x: f64,
    pub p_hat: f64,
    pub std_error: f64,
    pub hit_count: u64,
    /// `a_x log p̂`.
    pub exponent: f64,
    /// `−inf ψ*` over `{‖z‖∞ > δ}`.
    pub predicted: f64,
}

#[derive(Default)]
struct WeightedHits {
    hits: u64,
    sum: NeumaierSum,
    sum_sq: NeumaierSum,
}

impl Accumulator for WeightedHits {
    fn merge(&mut self, other: Self) {
        self.hits += other.hits;
        self.sum.merge(&other.sum);
        self.sum_sq.merge(&other.sum_sq);
    }
}

/// One mixture component: `Tⱼ` drawn with tilt `θⱼ = α₁ + α₂ wⱼ/x`.
struct Component {
    tilt: Tilt,
    samplers: Vec<Sampler>,
    log_mgf: f64,
}

impl Component {
    fn new(model: &HoldingTimeModel, x: f64, w: &[f64], tilt: Tilt) -> Result<Self> {
        let mut samplers = Vec::with_capacity(w.len());
        let mut log_mgf = 0.0;
        for &wj in w {
            let theta = tilt.a1 + tilt.a2 * wj / x;
            samplers.push(model.tilted_sampler(theta)?);
            log_mgf += model.phi(theta);
        }
        Ok(Self {
            tilt,
            samplers,
            log_mgf,
        })
    }

    /// `log dQ/dP` at `(τ, A)`.
    fn log_ratio(&self, tau: f64, area: f64, x: f64) -> f64 {
        self.tilt.a1 * tau + self.tilt.a2 * area / x - self.log_mgf
    }
}

/// Tilt whose finite-`x` mean of `(τ/x, A/x²)` sits on the face
/// `z[axis] = target`, with the other tilt coordinate zero.
fn face_tilt(model: &HoldingTimeModel, x: f64, w: &[f64], axis: Axis, target: f64) -> Option<Tilt> {
    let mean = |a: f64| -> f64 {
        let (t, s) = match axis {
            Axis::Z1 => (Tilt::new(a, 0.0), 0usize),
            Axis::Z2 => (Tilt::new(0.0, a), 1usize),
        };
        let mut acc = 0.0;
        for &wj in w {
            let d = model.cgf_d1(t.a1 + t.a2 * wj / x);
            acc += if s == 0 { d } else { d * wj / x };
        }
        acc / x
    };
    let b = model.boundary();
    let top = match axis {
        Axis::Z1 => b,
        Axis::Z2 => b * x / w[0],
    };
    let f = |a: f64| {
        let m = mean(a);
        if m.is_nan() {
            f64::INFINITY
        } else {
            m - target
        }
    };
    let f0 = f(0.0);
    if f0 == 0.0 {
        return Some(Tilt::ORIGIN);
    }
    let (lo, hi) = if f0 < 0.0 {
        let hi = if top.is_finite() {
            let mut gap = 0.5 * top;
            while f(top - gap) < 0.0 {
                gap *= 0.5;
                if gap < 1e-14 * top {
                    return None;
                }
            }
            top - gap
        } else {
            let mut h = 1.0;
            while f(h) < 0.0 {
                h *= 2.0;
                if h > 1e12 {
                    return None;
                }
            }
            h
        };
        (0.0, hi)
    } else {
        let mut l = -1.0;
        while f(l) > 0.0 {
            l *= 2.0;
            if l < -1e12 {
                return None;
            }
        }
        (l, 0.0)
    };
    let a = roots::bisect(f, lo, hi, 200).ok()?.x;
    Some(match axis {
        Axis::Z1 => Tilt::new(a, 0.0),
        Axis::Z2 => Tilt::new(0.0, a),
    })
}

/// Share of the nominal law in the sampling mixture.
pub const DEFENSIVE_WEIGHT: f64 = 0.2;

/// `P(‖√(x aₓ)·(τ/x − c₁, A/x² − c₂)‖∞ > δ)`.
#[allow(clippy::too_many_arguments)]
pub fn md_probability(
    model: &HoldingTimeModel,
    x: f64,
    scaling: &ModerateScaling,
    delta: f64,
    n: u64,
    seed: u64,
    workers: usize,
    method: MdMethod,
) -> Result<(f64, f64, u64)> {
    check_x(x)?;
    if !(delta >= 0.0) {
        return Err(Error::Domain(format!(
            "delta must be nonnegative, got {delta}"
        )));
    }
    if delta == 0.0 {
        return Ok((1.0, 0.0, n));
    }
    let c0 = centering(model, x, CenteringMode::Theoretical)?;
    let r = delta / scaling.multiplier(x);
    let w = weights(x);
    let nominal = model.sampler();
    let inside = |tau: f64, area: f64| {
        let z = [tau / x - c0[0], area / (x * x) - c0[1]];
        z[0].abs() > r || z[1].abs() > r
    };
    let mut components = Vec::new();
    if method == MdMethod::Tilted {
        for (axis, sign) in [
            (Axis::Z1, 1.0),
            (Axis::Z1, -1.0),
            (Axis::Z2, 1.0),
            (Axis::Z2, -1.0),
        ] {
            let target = c0[axis.index()] + sign * r;
            if target <= 0.0 {
                continue;
            }
            if let Some(t) = face_tilt(model, x, &w, axis, target) {
                components.push(Component::new(model, x, &w, t)?);
            }
        }
    }
    let k = components.len();
    let share = if k == 0 {
        0.0
    } else {
        (1.0 - DEFENSIVE_WEIGHT) / k as f64
    };
    let acc: WeightedHits = run_parallel(n, workers, seed, |_, rng, acc: &mut WeightedHits| {
        if k == 0 {
            let (tau, area) = draw(&nominal, &w, rng);
            if inside(tau, area) {
                acc.hits += 1;
                acc.sum.add(1.0);
                acc.sum_sq.add(1.0);
            }
            return;
        }
        let u: f64 = rng.random();
        let pick = ((u - DEFENSIVE_WEIGHT) / share).floor();
        let (mut tau, mut area) = (0.0, 0.0);
        if u < DEFENSIVE_WEIGHT {
            (tau, area) = draw(&nominal, &w, rng);
        } else {
            let c = &components[(pick as usize).min(k - 1)];
            for (s, &wj) in c.samplers.iter().zip(&w) {
                let t = s.sample(rng);
                tau += t;
                area += wj * t;
            }
        }
        if inside(tau, area) {
            let mut logs = Vec::with_capacity(k + 1);
            logs.push(DEFENSIVE_WEIGHT.ln());
            for c in &components {
                logs.push(share.ln() + c.log_ratio(tau, area, x));
            }
            let lr = (-log_sum_exp(&logs)).exp();
            acc.hits += 1;
            acc.sum.add(lr);
            acc.sum_sq.add(lr * lr);
        }
    })?;
    let nf = n as f64;
    let p = acc.sum.value() / nf;
    let var = (acc.sum_sq.value() / nf - p * p).max(0.0);
    Ok((p, (var / nf).sqrt(), acc.hits))
}

/// `aₓ log P(‖√(x aₓ)·centred pair‖∞ > δ)` along `x_grid`, with the predicted
/// limit `−inf ψ*` over `{‖z‖∞ > δ}`.
#[allow(clippy::too_many_arguments)]
pub fn empirical_md(
    model: &HoldingTimeModel,
    x_grid: &[f64],
    scaling: &ModerateScaling,
    delta: f64,
    n: u64,
    seed: u64,
    workers: usize,
    method: MdMethod,
) -> Result<Vec<MdRow>> {
    let predicted = -md_event_rate(model, &Region::linf_outside([0.0, 0.0], delta)).to_f64();
    x_grid
        .iter()
        .map(|&x| {
            let (p, se, hits) = md_probability(model, x, scaling, delta, n, seed, workers, method)?;
            let a = scaling.a(x);
            let exponent = if p > 0.0 {
                a * p.ln()
            } else {
                a * (3.0 / n as f64).ln()
            };
            Ok(MdRow {
                x,
                a_x: a,
                p_hat: p,
                std_error: se,
                hit_count: hits,
                exponent,
                predicted: if delta == 0.0 { 0.0 } else { predicted },
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MgfCheck {
    pub empirical: f64,
    pub exact: f64,
    pub rel_error: f64,
}

/// Empirical `E exp(α₁ τ(x) + α₂ A(x))` against `Π exp(φ(α₁ + α₂ wⱼ))`.
pub fn mgf_empirical_check(
    model: &HoldingTimeModel,
    x: f64,
    tilt: Tilt,
    n: u64,
    seed: u64,
    workers: usize,
) -> Result<MgfCheck> {
    check_x(x)?;
    let w = weights(x);
    let b = model.boundary();
    let mut log_exact = 0.0;
    for &wj in &w {
        let theta = tilt.a1 + tilt.a2 * wj;
        // 80% of the way to the boundary at most
        if !(theta.is_finite() && theta <= 0.8 * b) {
            return Err(Error::Domain(format!(
                "tilt ({}, {}) puts φ at {theta}, beyond 80% of the boundary {b}",
                tilt.a1, tilt.a2
            )));
        }
        log_exact += model.phi(theta);
    }
    let sampler = model.sampler();
    #[derive(Default)]
    struct S(NeumaierSum);
    impl Accumulator for S {
        fn merge(&mut self, other: Self) {
            self.0.merge(&other.0);
        }
    }
    let s: S = run_parallel(n, workers, seed, |_, rng, acc: &mut S| {
        let (tau, area) = draw(&sampler, &w, rng);
        acc.0.add((tilt.a1 * tau + tilt.a2 * area).exp());
    })?;
    let empirical = s.0.value() / n as f64;
    let exact = log_exact.exp();
    Ok(MgfCheck {
        empirical,
        exact,
        rel_error: (empirical - exact).abs() / exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp1() -> HoldingTimeModel {
        HoldingTimeModel::exponential(1.0).unwrap()
    }

    #[test]
    fn passage_structure() {
        for m in HoldingTimeModel::builtins() {
            let mut rng = stream(1, 0);
            let s = sample_passage(&m, 1.0, &mut rng).unwrap();
            assert_eq!(s.area, s.tau);
            for &x in &[3.0, 3.5, 17.25] {
                let s = sample_passage(&m, x, &mut rng).unwrap();
                assert_eq!(s.n_terms, x.ceil() as u64);
                assert!(s.tau > 0.0 && s.area >= 0.0 && s.area <= x * s.tau);
            }
        }
        assert_eq!(weights(3.0), vec![3.0, 2.0, 1.0]);
        assert_eq!(weights(2.5), vec![2.5, 1.5, 0.5]);
        assert!(sample_passage(&exp1(), 0.0, &mut stream(1, 0)).is_err());
    }

    #[test]
    fn reproducible_across_workers() {
        let mut cfg = SimulationConfig::new(exp1(), 20.0, 20_000, 9);
        let ev = TailEvent::Marginal {
            axis: Axis::Z1,
            threshold: 1.2,
        };
        cfg.workers = 1;
        let a = estimate_tail(&cfg, &ev).unwrap();
        cfg.workers = 3;
        let b = estimate_tail(&cfg, &ev).unwrap();
        let c = estimate_tail(&cfg, &ev).unwrap();
        assert_eq!(a.hit_count, b.hit_count);
        assert_eq!(b, c);
        let m1 = empirical_moments(&exp1(), 5.5, 5000, 4, 2).unwrap();
        let m2 = empirical_moments(&exp1(), 5.5, 5000, 4, 2).unwrap();
        assert_eq!(m1, m2);
        let p = sample_passages(&exp1(), 4.0, 3, 9).unwrap();
        assert_eq!(
            p[2],
            sample_passage(&exp1(), 4.0, &mut stream(9, 2)).unwrap()
        );
    }

    #[test]
    fn tail_with_oracle() {
        let mut cfg = SimulationConfig::new(exp1(), 50.0, 100_000, 7);
        cfg.workers = 2;
        let est = estimate_tail(
            &cfg,
            &TailEvent::Region {
                region: "z1>=1.5".parse().unwrap(),
            },
        )
        .unwrap();
        let exact = est.exact_p.unwrap();
        assert!((exact - 9.039_320_423_540_184e-4).abs() < 1e-12);
        assert!(est.ci99.contains(exact), "{est:?}");
        assert!(est.ci99.contains(est.p_hat));
        let off = estimate_tail(
            &cfg,
            &TailEvent::Region {
                region: "rect(5,6,1,2)".parse().unwrap(),
            },
        )
        .unwrap();
        assert_eq!(off.hit_count, 0);
        assert!(off.empirical_rate.is_none() && off.rate_lower_bound.is_some());
    }

    #[test]
    fn cone_event_never_hit() {
        let mut cfg =
            SimulationConfig::new(HoldingTimeModel::gamma(2.0, 2.0).unwrap(), 10.0, 5000, 3);
        cfg.workers = 1;
        // z2 > z1 restricted to a box around the centre
        let ev = TailEvent::Region {
            region: "rect(0,0.45,0.46,10)".parse().unwrap(),
        };
        assert_eq!(estimate_tail(&cfg, &ev).unwrap().hit_count, 0);
    }

    #[test]
    fn moments_small() {
        for m in HoldingTimeModel::builtins() {
            for x in [3.0, 4.5] {
                let e = exact_moments(&m, x).unwrap();
                let s = empirical_moments(&m, x, 40_000, 12, 2).unwrap();
                assert!(s.mean_tau.z_score(e.mean_tau) < 4.5);
                assert!(s.mean_area.z_score(e.mean_area) < 4.5);
                assert!(s.var_tau.z_score(e.var_tau) < 4.5);
                assert!(s.cov.z_score(e.cov) < 4.5);
            }
        }
    }

    #[test]
    fn clt_small() {
        let r = empirical_clt(&exp1(), 400.0, 20_000, 5, 2).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((r.cov[i][j] - r.predicted[i][j]).abs() < 0.08 * r.predicted[i][j]);
            }
        }
        assert!((r.correlation - 0.866).abs() < 0.03);
    }

    #[test]
    fn mgf_product() {
        let m = exp1();
        let t = Tilt::new(-0.5, 0.05);
        let exact_int: f64 = (1..=5)
            .map(|k| 1.0 / (1.0 - (-0.5 + 0.05 * k as f64)))
            .product();
        let r = mgf_empirical_check(&m, 5.0, t, 100_000, 2, 2).unwrap();
        assert!((r.exact - exact_int).abs() < 1e-14);
        assert!(r.rel_error < 0.02);
        let exact_half: f64 = (0..=5)
            .map(|k| 1.0 / (1.0 - (-0.5 + 0.05 * (5.5 - k as f64))))
            .product();
        let r = mgf_empirical_check(&m, 5.5, t, 100_000, 2, 2).unwrap();
        assert!((r.exact - exact_half).abs() < 1e-14);
        let zero = mgf_empirical_check(&m, 5.0, Tilt::ORIGIN, 10, 1, 1).unwrap();
        assert_eq!((zero.empirical, zero.exact), (1.0, 1.0));
        assert!(mgf_empirical_check(&m, 5.0, Tilt::new(0.0, 0.5), 10, 1, 1).is_err());
    }

    #[test]
    fn tilted_md_matches_plain() {
        let m = exp1();
        let s = ModerateScaling::default();
        let (plain, pse, _) =
            md_probability(&m, 100.0, &s, 1.0, 40_000, 3, 2, MdMethod::Plain).unwrap();
        let (tilt, tse, _) =
            md_probability(&m, 100.0, &s, 1.0, 40_000, 3, 2, MdMethod::Tilted).unwrap();
        assert!(
            (plain - tilt).abs() < 4.0 * (pse * pse + tse * tse).sqrt(),
            "{plain} {tilt}"
        );
        assert!(tse < pse);
        let rows = empirical_md(&m, &[100.0], &s, 0.0, 10, 1, 1, MdMethod::Tilted).unwrap();
        assert_eq!((rows[0].p_hat, rows[0].exponent), (1.0, 0.0));
    }

    #[test]
    fn tilted_md_far_tail() {
        // P(τ/x ≥ 1 + r) is a gamma tail; check the tilted estimator against it at x = 1000
        let m = exp1();
        let x = 1000.0;
        let s = ModerateScaling::default();
        let r = 1.0 / s.multiplier(x);
        let (p, se, _) = md_probability(&m, x, &s, 1.0, 20_000, 8, 2, MdMethod::Tilted).unwrap();
        let upper = gamma_upper_tail(x, 1.0, x * (1.0 + r));
        assert!(p > upper && p < 3.0 * upper, "{p} vs {upper}");
        assert!(se < 0.05 * p);
    }
}
