//! Moderate deviations: the quadratic rates built from the Hessian `C` of
//! `Λ` at the origin, exact finite-`x` moments of `(τ(x), A(x))`, correlation
//! limits and the two confidence intervals for `φ'(0)`.

use serde::{Deserialize, Serialize};

use crate::cgf::HoldingTimeModel;
use crate::error::{Error, Result};
use crate::extended::ExtReal;
use crate::lambda::{hessian_origin, Tilt};
use crate::legendre::ScaledPoint;
use crate::region::{Axis, Region, RegionPiece};
use crate::special::{normal_quantile, Interval};

/// The family `a_x` with `a_x → 0` and `x a_x → ∞`.
#[derive(Debug, Clone, Copy)]
pub enum ModerateScaling {
    /// `a_x = x^(−p)`, `p ∈ (0, 1)`.
    Power {
        p: f64,
    },
    Custom(fn(f64) -> f64),
}

impl Default for ModerateScaling {
    fn default() -> Self {
        ModerateScaling::Power { p: 0.5 }
    }
}

impl ModerateScaling {
    pub fn power(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::ParameterDomain(format!(
                "scaling exponent must lie in (0, 1), got {p}"
            )));
        }
        Ok(ModerateScaling::Power { p })
    }

    pub fn a(&self, x: f64) -> f64 {
        match *self {
            ModerateScaling::Power { p } => x.powf(-p),
            ModerateScaling::Custom(f) => f(x),
        }
    }

    /// `1 / a_x`.
    pub fn speed(&self, x: f64) -> f64 {
        1.0 / self.a(x)
    }

    /// Multiplier `√(x a_x)` of the centred scaled pair.
    pub fn multiplier(&self, x: f64) -> f64 {
        (x * self.a(x)).sqrt()
    }

    /// On an increasing grid: `a_x > 0` decreasing and `x a_x` increasing.
    pub fn validate_on(&self, grid: &[f64]) -> Result<()> {
        for w in grid.windows(2) {
            let (x0, x1) = (w[0], w[1]);
            if !(x0 > 0.0 && x1 > x0) {
                return Err(Error::Domain(
                    "validation grid must be positive and increasing".into(),
                ));
            }
            let (a0, a1) = (self.a(x0), self.a(x1));
            if !(a0 > 0.0 && a1 > 0.0 && a1 < a0) {
                return Err(Error::Domain(format!(
                    "a_x is not positive and decreasing on [{x0}, {x1}]"
                )));
            }
            if !(x1 * a1 > x0 * a0) {
                return Err(Error::Domain(format!(
                    "x a_x is not increasing on [{x0}, {x1}]"
                )));
            }
        }
        Ok(())
    }
}

/// `½ αᵀ C α`.
pub fn psi(model: &HoldingTimeModel, tilt: Tilt) -> f64 {
    hessian_origin(model).quad_c([tilt.a1, tilt.a2])
}

/// `½ zᵀ C⁻¹ z`.
pub fn psi_star(model: &HoldingTimeModel, z: ScaledPoint) -> f64 {
    hessian_origin(model).quad_c_inv(z.as_array())
}

/// Moments of `(τ(x), A(x))` at finite `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub x: f64,
    pub n_terms: u64,
    pub mean_tau: f64,
    pub var_tau: f64,
    pub mean_area: f64,
    pub var_area: f64,
    pub cov: f64,
}

/// Number of holding times in `τ(x)`: `x` for integer `x`, `⌊x⌋ + 1` otherwise.
pub fn n_terms(x: f64) -> u64 {
    x.ceil() as u64
}

pub fn exact_moments(model: &HoldingTimeModel, x: f64) -> Result<MomentReport> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!(
            "x must be finite and positive, got {x}"
        )));
    }
    let d1 = model.mean();
    let d2 = model.variance();
    let report = if x.fract() == 0.0 {
        MomentReport {
            x,
            n_terms: x as u64,
            mean_tau: x * d1,
            var_tau: x * d2,
            mean_area: d1 * x * (x + 1.0) / 2.0,
            var_area: d2 * x * (x + 1.0) * (2.0 * x + 1.0) / 6.0,
            cov: d2 * x * (x + 1.0) / 2.0,
        }
    } else {
        let m = x.floor();
        MomentReport {
            x,
            n_terms: m as u64 + 1,
            mean_tau: (m + 1.0) * d1,
            var_tau: (m + 1.0) * d2,
            mean_area: d1 * (m + 1.0) * (x - m / 2.0),
            var_area: d2 * (m + 1.0) * (12.0 * x * (x - m) + 2.0 * m * (2.0 * m + 1.0)) / 12.0,
            cov: d2 * (m + 1.0) * (x - m / 2.0),
        }
    };
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub rho_x: f64,
    pub limit: f64,
}

pub const CORRELATION_LIMIT: f64 = 0.866_025_403_784_438_6;

pub fn correlation_limit(model: &HoldingTimeModel, x: f64) -> Result<CorrelationReport> {
    let m = exact_moments(model, x)?;
    Ok(CorrelationReport {
        rho_x: m.cov / (m.var_tau * m.var_area).sqrt(),
        limit: CORRELATION_LIMIT,
    })
}

/// Intervals for `φ'(0)` from `τ(x)/x` and from `2A(x)/x²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceIntervals {
    pub level: f64,
    pub tau: Interval,
    pub area: Interval,
}

impl ConfidenceIntervals {
    /// Width of the area interval over that of the `τ` interval.
    pub fn width_ratio(&self) -> f64 {
        self.area.width() / self.tau.width()
    }
}

pub fn confidence_intervals(
    model: &HoldingTimeModel,
    tau_over_x: f64,
    area_over_x2: f64,
    x: f64,
    level: f64,
) -> Result<ConfidenceIntervals> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!(
            "confidence level must lie in (0, 1), got {level}"
        )));
    }
    if !(x > 0.0) {
        return Err(Error::Domain(format!("x must be positive, got {x}")));
    }
    let q = normal_quantile(0.5 * (1.0 + level))?;
    let d2 = model.variance();
    let h_tau = (d2 / x).sqrt() * q;
    let h_area = 2.0 * (d2 / (3.0 * x)).sqrt() * q;
    Ok(ConfidenceIntervals {
        level,
        tau: Interval {
            lo: tau_over_x - h_tau,
            hi: tau_over_x + h_tau,
        },
        area: Interval {
            lo: 2.0 * area_over_x2 - h_area,
            hi: 2.0 * area_over_x2 + h_area,
        },
    })
}

/// `inf { ½ zᵀ C⁻¹ z : z ∈ region }`.
pub fn md_event_rate(model: &HoldingTimeModel, region: &Region) -> ExtReal {
    let cov = hessian_origin(model);
    let mut best = ExtReal::PosInfinity;
    for piece in &region.pieces {
        if piece.is_empty() {
            continue;
        }
        let v = match *piece {
            RegionPiece::HalfPlane { axis, bound, upper } => {
                let inside = if upper { bound <= 0.0 } else { bound >= 0.0 };
                if inside {
                    0.0
                } else {
                    // minimum over the line z[axis] = bound
                    let i = axis.index();
                    bound * bound / (2.0 * cov.c[i][i])
                }
            }
            RegionPiece::Rectangle { lo, hi } => {
                rectangle_min(|z| cov.quad_c_inv(z), &cov.c_inv, lo, hi)
            }
        };
        best = best.min(ExtReal::Finite(v));
    }
    best
}

/// Minimum of the quadratic `q(z) = ½ zᵀ Q z` over a rectangle: zero if the
/// rectangle holds the origin, otherwise the best clamped edge minimizer.
fn rectangle_min<F: Fn([f64; 2]) -> f64>(
    q: F,
    m: &[[f64; 2]; 2],
    lo: [f64; 2],
    hi: [f64; 2],
) -> f64 {
    if lo[0] <= 0.0 && 0.0 <= hi[0] && lo[1] <= 0.0 && 0.0 <= hi[1] {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for axis in [Axis::Z1, Axis::Z2] {
        let i = axis.index();
        let j = axis.other().index();
        for fixed in [lo[i], hi[i]] {
            // stationary point of the edge quadratic in z[j]
            let t = (-m[i][j] * fixed / m[j][j]).clamp(lo[j], hi[j]);
            let mut z = [0.0; 2];
            z[i] = fixed;
            z[j] = t;
            best = best.min(q(z));
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CenteringMode {
    /// `(φ'(0), φ'(0)/2)`.
    #[default]
    Theoretical,
    /// `(E τ(x)/x, E A(x)/x²)`.
    Expectation,
}

pub fn centering(model: &HoldingTimeModel, x: f64, mode: CenteringMode) -> Result<[f64; 2]> {
    match mode {
        CenteringMode::Theoretical => {
            if !(x > 0.0) {
                return Err(Error::Domain(format!("x must be positive, got {x}")));
            }
            let d1 = model.mean();
            Ok([d1, d1 / 2.0])
        }
        CenteringMode::Expectation => {
            let m = exact_moments(model, x)?;
            Ok([m.mean_tau / x, m.mean_area / (x * x)])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambda::mat_mul;
    use crate::legendre::rate_ld;

    fn exp1() -> HoldingTimeModel {
        HoldingTimeModel::exponential(1.0).unwrap()
    }

    #[test]
    fn quadratic_rates() {
        let m = exp1();
        assert_eq!(psi(&m, Tilt::ORIGIN), 0.0);
        assert!((psi(&m, Tilt::new(1.0, 0.0)) - 0.5).abs() < 1e-15);
        assert!((psi(&m, Tilt::new(1.0, 1.0)) - 7.0 / 6.0).abs() < 1e-15);
        assert!((psi_star(&m, ScaledPoint::new(1.0, 0.0)) - 2.0).abs() < 1e-15);
        assert!((psi_star(&m, ScaledPoint::new(0.0, 1.0)) - 6.0).abs() < 1e-15);
        for model in HoldingTimeModel::builtins() {
            let c = hessian_origin(&model);
            let id = mat_mul(&c.c, &c.c_inv);
            assert!((id[0][0] - 1.0).abs() < 1e-12 && id[0][1].abs() < 1e-12);
            assert!(id[1][0].abs() < 1e-12 && (id[1][1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn legendre_pairing_by_grid() {
        let m = HoldingTimeModel::gamma(2.0, 2.0).unwrap();
        for z in [[0.3, 0.1], [-0.5, 0.2], [1.0, -1.0]] {
            let zp = ScaledPoint::new(z[0], z[1]);
            let mut best = f64::NEG_INFINITY;
            let mut arg = [0.0, 0.0];
            for i in -200..=200 {
                for j in -200..=200 {
                    let a = [i as f64 * 0.25, j as f64 * 0.25];
                    let v = a[0] * z[0] + a[1] * z[1] - psi(&m, Tilt::new(a[0], a[1]));
                    if v > best {
                        best = v;
                        arg = a;
                    }
                }
            }
            // Newton polish: the objective is quadratic
            let c = hessian_origin(&m);
            let g = [
                z[0] - (c.c[0][0] * arg[0] + c.c[0][1] * arg[1]),
                z[1] - (c.c[1][0] * arg[0] + c.c[1][1] * arg[1]),
            ];
            let step = [
                c.c_inv[0][0] * g[0] + c.c_inv[0][1] * g[1],
                c.c_inv[1][0] * g[0] + c.c_inv[1][1] * g[1],
            ];
            let a = Tilt::new(arg[0] + step[0], arg[1] + step[1]);
            let polished = a.dot(z) - psi(&m, a);
            assert!(polished >= best - 1e-12);
            assert!((polished - psi_star(&m, zp)).abs() < 1e-4);
        }
    }

    #[test]
    fn second_order_agrees_with_large_deviation_rate() {
        let eps = 1e-3;
        for model in [exp1(), HoldingTimeModel::gamma(2.0, 2.0).unwrap()] {
            let mu = model.mean();
            for u in [[1.0, 0.0], [0.0, 1.0], [0.6, 0.8]] {
                let z = ScaledPoint::new(mu + eps * u[0], mu / 2.0 + eps * u[1]);
                let r = rate_ld(&model, z).unwrap().value_f64() / (eps * eps);
                let target = psi_star(&model, ScaledPoint::new(u[0], u[1]));
                assert!(
                    (r - target).abs() < 0.05 * target,
                    "{model} {u:?}: {r} vs {target}"
                );
            }
        }
    }

    #[test]
    fn moments() {
        let m = exp1();
        let r = exact_moments(&m, 10.0).unwrap();
        let (s1, s2) = (1..=10).fold((0.0, 0.0), |(a, b), k| (a + k as f64, b + (k * k) as f64));
        assert_eq!((r.var_tau, r.cov, r.var_area), (10.0, s1, s2));
        assert_eq!(r.n_terms, 10);
        let g = HoldingTimeModel::gamma(2.0, 2.0).unwrap();
        let r = exact_moments(&g, 10.5).unwrap();
        assert_eq!(r.n_terms, 11);
        assert!((r.var_tau - 11.0 * g.variance()).abs() < 1e-14);
        // weighted sums over w_j = x − j + 1
        let w: Vec<f64> = (0..=10).map(|k| 10.5 - k as f64).collect();
        let sw: f64 = w.iter().sum();
        let sw2: f64 = w.iter().map(|v| v * v).sum();
        assert!((r.mean_area - g.mean() * sw).abs() < 1e-12);
        assert!((r.cov - g.variance() * sw).abs() < 1e-12);
        assert!((r.var_area - g.variance() * sw2).abs() < 1e-10 * sw2);
        let big = exact_moments(&m, 1e6).unwrap();
        assert!((big.var_area / 1e18 - 1.0 / 3.0).abs() < 1e-5);
        assert!(exact_moments(&m, 0.0).is_err());
    }

    #[test]
    fn non_integer_branch_limits() {
        let m = HoldingTimeModel::inverse_gaussian(1.0).unwrap();
        for k in [1.0, 4.0, 17.0] {
            // x ↑ k+1 reaches the integer formula at k+1; x ↓ k keeps one extra zero-weight term
            let up = exact_moments(&m, k + 1.0 - 1e-9).unwrap();
            let at = exact_moments(&m, k + 1.0).unwrap();
            assert!((up.var_area - at.var_area).abs() < 1e-6 * at.var_area);
            assert!((up.mean_area - at.mean_area).abs() < 1e-6 * at.mean_area);
            let down = exact_moments(&m, k + 1e-9).unwrap();
            let at = exact_moments(&m, k).unwrap();
            assert!((down.var_area - at.var_area).abs() < 1e-6 * at.var_area);
            assert!((down.var_tau - at.var_tau - m.variance()).abs() < 1e-12);
        }
    }

    #[test]
    fn correlation() {
        for model in HoldingTimeModel::builtins() {
            let r = correlation_limit(&model, 1000.0).unwrap();
            assert!((r.rho_x - r.limit).abs() < 1e-3);
            assert!((correlation_limit(&model, 1.0).unwrap().rho_x - 1.0).abs() < 1e-15);
            for x in [10.0, 10.5, 37.0, 100.0] {
                let r = correlation_limit(&model, x).unwrap();
                assert!((r.rho_x - CORRELATION_LIMIT).abs() < 2.0 / x);
            }
        }
        assert!((CORRELATION_LIMIT - 3f64.sqrt() / 2.0).abs() < 1e-16);
    }

    #[test]
    fn intervals() {
        let ci = confidence_intervals(&exp1(), 1.0, 0.5, 100.0, 0.95).unwrap();
        assert!((ci.tau.hi - 1.195_996).abs() < 1e-5 && (ci.tau.lo - 0.804_004).abs() < 1e-5);
        assert!((ci.width_ratio() - 2.0 / 3f64.sqrt()).abs() < 1e-12);
        let wide = confidence_intervals(&exp1(), 1.0, 0.5, 100.0, 1.0 - 1e-12).unwrap();
        assert!(wide.tau.width() > 2.5 * ci.tau.width());
        assert!(confidence_intervals(&exp1(), 1.0, 0.5, 100.0, 1.0).is_err());
    }

    #[test]
    fn event_rates() {
        let m = exp1();
        let r: Region = "z1>=1".parse().unwrap();
        assert!((md_event_rate(&m, &r).to_f64() - 0.5).abs() < 1e-15);
        let r: Region = "rect(-1,1,-1,1)".parse().unwrap();
        assert_eq!(md_event_rate(&m, &r), ExtReal::ZERO);
        assert_eq!(md_event_rate(&m, &Region::default()), ExtReal::PosInfinity);
        // brute force over the face of z2 ≥ 1 and over a rectangle
        let cases = ["z2>=1", "rect(0.5,2,-1,0.1)", "rect(-3,-1,0.5,4)", "linf>1"];
        for text in cases {
            let r: Region = text.parse().unwrap();
            let mut brute = f64::INFINITY;
            for i in -4000..=4000 {
                for j in -400..=400 {
                    let z = [i as f64 * 1e-3, j as f64 * 1e-2];
                    let zz = [z[0], z[1]];
                    if r.contains(zz) {
                        brute = brute.min(psi_star(&m, ScaledPoint::new(z[0], z[1])));
                    }
                }
            }
            let exact = md_event_rate(&m, &r).to_f64();
            assert!(
                exact <= brute + 1e-12 && brute - exact < 2e-2,
                "{text}: {exact} vs {brute}"
            );
        }
        let face = md_event_rate(&m, &"z2>=1".parse().unwrap()).to_f64();
        let fine = (0..=300_000)
            .map(|i| psi_star(&m, ScaledPoint::new(i as f64 * 1e-5, 1.0)))
            .fold(f64::INFINITY, f64::min);
        assert!((face - fine).abs() < 1e-6);
        assert!((face - 1.5).abs() < 1e-14);
    }

    #[test]
    fn centerings() {
        let m = exp1();
        assert_eq!(
            centering(&m, 10.0, CenteringMode::Theoretical).unwrap(),
            [1.0, 0.5]
        );
        let e = centering(&m, 10.0, CenteringMode::Expectation).unwrap();
        assert!((e[0] - 1.0).abs() < 1e-15 && (e[1] - 0.55).abs() < 1e-15);
        let far = centering(&m, 1e7, CenteringMode::Expectation).unwrap();
        assert!((far[1] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn scaling_family() {
        let s = ModerateScaling::default();
        assert!(s.validate_on(&[1e2, 1e3, 1e4]).is_ok());
        assert!((s.multiplier(1e4) - 10.0).abs() < 1e-12);
        assert!(ModerateScaling::power(1.0).is_err());
        let bad = ModerateScaling::Custom(|x| 1.0 / x);
        assert!(bad.validate_on(&[1.0, 2.0]).is_err());
    }
}
