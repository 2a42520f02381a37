//! Adaptive Gauss-Legendre quadrature on finite intervals.
//!
//! Each panel is integrated with a fixed-order Gauss-Legendre rule and its
//! error is estimated by comparing against the same rule applied to both
//! halves. The panel with the largest error estimate is bisected until the
//! summed estimate meets the requested tolerance. Panel values are summed in
//! position order at the end, so results do not depend on refinement history
//! beyond which panels exist.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum QuadratureError {
    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
    #[error("integrand returned a non-finite value at x = {x}")]
    NonFinite { x: f64 },
    #[error(
        "no convergence after {panels} panels: value {value:e}, error estimate {error:e}, target {target:e}"
    )]
    NotConverged {
        value: f64,
        error: f64,
        target: f64,
        panels: usize,
    },
}

/// Nodes and weights of an n-point Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the rule by Newton iteration on the Legendre polynomial roots.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
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
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Applies the rule on [a, b].
    pub fn integrate<F>(&self, f: &mut F, a: f64, b: f64) -> Result<f64, QuadratureError>
    where
        F: FnMut(f64) -> f64,
    {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut sum = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let at = mid + half * x;
            let y = f(at);
            if !y.is_finite() {
                return Err(QuadratureError::NonFinite { x: at });
            }
            sum += w * y;
        }
        Ok(sum * half)
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// The 20-point rule shared by every adaptive integration in the crate.
pub fn gauss_legendre_20() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(20))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 0.0,
            max_panels: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn evaluate_panel<F>(f: &mut F, a: f64, b: f64) -> Result<Panel, QuadratureError>
where
    F: FnMut(f64) -> f64,
{
    let rule = gauss_legendre_20();
    let whole = rule.integrate(f, a, b)?;
    let m = 0.5 * (a + b);
    let halves = rule.integrate(f, a, m)? + rule.integrate(f, m, b)?;
    Ok(Panel {
        a,
        b,
        value: halves,
        error: (halves - whole).abs(),
    })
}

/// Integrates `f` over `[a, b]`, starting from panels split at `breakpoints`
/// (points outside the open interval are ignored).
pub fn integrate_adaptive<F>(
    mut f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    opts: &QuadratureOptions,
) -> Result<QuadratureResult, QuadratureError>
where
    F: FnMut(f64) -> f64,
{
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(QuadratureError::InvalidInterval { a, b });
    }
    if a == b {
        return Ok(QuadratureResult {
            value: 0.0,
            error: 0.0,
            panels: 0,
        });
    }
    let mut edges = vec![a];
    edges.extend(breakpoints.iter().copied().filter(|&x| x > a && x < b));
    edges.push(b);
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    let mut heap = BinaryHeap::new();
    for w in edges.windows(2) {
        heap.push(evaluate_panel(&mut f, w[0], w[1])?);
    }
    loop {
        let (value, error) = heap
            .iter()
            .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
        let target = (opts.rel_tol * value.abs()).max(opts.abs_tol);
        if error <= target {
            let mut panels: Vec<Panel> = heap.into_vec();
            panels.sort_by(|p, q| p.a.total_cmp(&q.a));
            let value = panels.iter().map(|p| p.value).sum();
            return Ok(QuadratureResult {
                value,
                error,
                panels: panels.len(),
            });
        }
        if heap.len() >= opts.max_panels {
            return Err(QuadratureError::NotConverged {
                value,
                error,
                target,
                panels: heap.len(),
            });
        }
        let worst = heap.pop().expect("heap is never empty here");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            // Panel can no longer be split in floating point.
            return Err(QuadratureError::NotConverged {
                value,
                error,
                target,
                panels: heap.len() + 1,
            });
        }
        heap.push(evaluate_panel(&mut f, worst.a, m)?);
        heap.push(evaluate_panel(&mut f, m, worst.b)?);
    }
}
