//! Gauss–Legendre quadrature: fixed rules, a globally adaptive bisection
//! driver for vector-valued integrands, and a geometrically graded mesh for
//! integrable endpoint singularities.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// An `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the rule by Newton iteration on the Legendre polynomial `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "a Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    pub fn integrate_vec<const N: usize, F: FnMut(f64) -> [f64; N]>(
        &self,
        mut f: F,
        a: f64,
        b: f64,
    ) -> [f64; N] {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = [0.0; N];
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let v = f(mid + half * x);
            for k in 0..N {
                acc[k] += w * v[k];
            }
        }
        acc.map(|v| v * half)
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let (p, pm1) = if n == 0 { (1.0, 0.0) } else { (p1, p0) };
    let d = n as f64 * (x * p - pm1) / (x * x - 1.0);
    (p, d)
}

/// Shared rules: 10 and 20 points drive the adaptive error estimate, 64
/// points serve the fixed iterated integrals.
pub fn rule(n: usize) -> &'static GaussLegendre {
    static R10: OnceLock<GaussLegendre> = OnceLock::new();
    static R20: OnceLock<GaussLegendre> = OnceLock::new();
    static R64: OnceLock<GaussLegendre> = OnceLock::new();
    match n {
        10 => R10.get_or_init(|| GaussLegendre::new(10)),
        20 => R20.get_or_init(|| GaussLegendre::new(20)),
        64 => R64.get_or_init(|| GaussLegendre::new(64)),
        _ => panic!("no shared Gauss-Legendre rule with {n} nodes"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subintervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-14,
            max_subintervals: 1 << 14,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadEstimate<const N: usize> {
    pub value: [f64; N],
    pub error: f64,
    pub subintervals: usize,
}

/// Which end of the interval carries the singularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Left,
    Right,
}

struct Segment<const N: usize> {
    a: f64,
    b: f64,
    value: [f64; N],
    error: f64,
}

impl<const N: usize> PartialEq for Segment<N> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl<const N: usize> Eq for Segment<N> {}

impl<const N: usize> PartialOrd for Segment<N> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<const N: usize> Ord for Segment<N> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn estimate_segment<const N: usize, F: FnMut(f64) -> [f64; N]>(
    f: &mut F,
    a: f64,
    b: f64,
) -> Result<Segment<N>> {
    let fine = rule(20).integrate_vec(&mut *f, a, b);
    let coarse = rule(10).integrate_vec(&mut *f, a, b);
    let mut error: f64 = 0.0;
    for k in 0..N {
        if !fine[k].is_finite() {
            return Err(Error::Quadrature(format!(
                "non-finite integrand on [{a}, {b}]"
            )));
        }
        error = error.max((fine[k] - coarse[k]).abs());
    }
    Ok(Segment {
        a,
        b,
        value: fine,
        error,
    })
}

fn magnitude<const N: usize>(v: &[f64; N]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Globally adaptive bisection: the segment with the largest error estimate
/// is split until the summed estimate meets `max(abs_tol, rel_tol * |I|)`.
pub fn adaptive<const N: usize, F: FnMut(f64) -> [f64; N]>(
    mut f: F,
    a: f64,
    b: f64,
    opts: &QuadOptions,
) -> Result<QuadEstimate<N>> {
    if a == b {
        return Ok(QuadEstimate {
            value: [0.0; N],
            error: 0.0,
            subintervals: 0,
        });
    }
    let mut heap = BinaryHeap::new();
    let first = estimate_segment(&mut f, a, b)?;
    let mut total = first.value;
    let mut err = first.error;
    heap.push(first);
    let mut count = 1usize;
    loop {
        let target = opts.abs_tol.max(opts.rel_tol * magnitude(&total));
        if err <= target {
            // running sums drift; confirm with an exact pass
            total = [0.0; N];
            err = 0.0;
            for s in heap.iter() {
                for k in 0..N {
                    total[k] += s.value[k];
                }
                err += s.error;
            }
            if err <= opts.abs_tol.max(opts.rel_tol * magnitude(&total)) {
                return Ok(QuadEstimate {
                    value: total,
                    error: err,
                    subintervals: count,
                });
            }
        }
        if count >= opts.max_subintervals {
            return Err(Error::Quadrature(format!(
                "subinterval cap {} reached with error {err:e}",
                opts.max_subintervals
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            return Err(Error::Quadrature(format!(
                "segment [{}, {}] cannot be split further",
                worst.a, worst.b
            )));
        }
        let left = estimate_segment(&mut f, worst.a, mid)?;
        let right = estimate_segment(&mut f, mid, worst.b)?;
        for k in 0..N {
            total[k] += left.value[k] + right.value[k] - worst.value[k];
        }
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        count += 1;
    }
}

/// Geometric mesh with ratio 1/2 towards a singular endpoint. Each piece is
/// integrated adaptively; the sweep stops once pieces become negligible and
/// reports divergence when they do not decay.
pub fn graded<const N: usize, F: FnMut(f64) -> [f64; N]>(
    mut f: F,
    a: f64,
    b: f64,
    singular: Endpoint,
    opts: &QuadOptions,
) -> Result<QuadEstimate<N>> {
    let len = b - a;
    let mut total = [0.0; N];
    let mut error = 0.0;
    let mut subintervals = 0;
    let piece_opts = QuadOptions {
        abs_tol: opts.abs_tol * 0.25,
        ..*opts
    };
    let mut far = 1.0_f64;
    for k in 0..1100 {
        let near = 0.5 * far;
        let (lo, hi) = match singular {
            Endpoint::Right => (b - far * len, b - near * len),
            Endpoint::Left => (a + near * len, a + far * len),
        };
        if !(lo < hi) {
            return Err(Error::Quadrature(
                "integral does not converge at the singular endpoint".into(),
            ));
        }
        let piece = adaptive(&mut f, lo, hi, &piece_opts).map_err(|_| {
            Error::Quadrature("integral does not converge at the singular endpoint".into())
        })?;
        for i in 0..N {
            total[i] += piece.value[i];
        }
        error += piece.error;
        subintervals += piece.subintervals;
        // a log-type singularity leaves a tail of about twice the last piece
        if k >= 4 && 2.0 * magnitude(&piece.value) < opts.abs_tol * 0.25 {
            return Ok(QuadEstimate {
                value: total,
                error: error + 2.0 * magnitude(&piece.value),
                subintervals,
            });
        }
        far = near;
    }
    Err(Error::Quadrature(
        "integral does not converge at the singular endpoint".into(),
    ))
}

/// Adaptive integration with the graded mesh as fallback when the
/// subinterval cap is hit.
pub fn integrate_vec<const N: usize, F: FnMut(f64) -> [f64; N]>(
    mut f: F,
    a: f64,
    b: f64,
    singular_hint: Option<Endpoint>,
    opts: &QuadOptions,
) -> Result<QuadEstimate<N>> {
    match adaptive(&mut f, a, b, opts) {
        Ok(r) => Ok(r),
        Err(first) => match singular_hint {
            Some(end) => graded(&mut f, a, b, end, opts),
            None => Err(first),
        },
    }
}

pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    singular_hint: Option<Endpoint>,
    opts: &QuadOptions,
) -> Result<f64> {
    integrate_vec(|t| [f(t)], a, b, singular_hint, opts).map(|r| r.value[0])
}
