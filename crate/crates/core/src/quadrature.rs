//! Quadrature rules shared by the normalization, statistics and oracle code.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the `n`-point rule by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
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

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// Composite rule over `panels` equal sub-intervals of `[a, b]`.
    pub fn composite(&self, a: f64, b: f64, panels: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|p| {
                let lo = a + p as f64 * h;
                let hi = if p + 1 == panels { b } else { lo + h };
                self.integrate(lo, hi, &mut f)
            })
            .sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let nf = n as f64;
    (p1, nf * (x * p1 - p0) / (x * x - 1.0))
}

/// Result of an auto-refined rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Refined {
    pub value: f64,
    pub points: usize,
}

/// Largest trapezoid resolution tried before giving up.
pub const MAX_PERIODIC_POINTS: usize = 1 << 24;

/// Trapezoid rule for a `2π`-periodic integrand over one period, doubled from
/// `start` points until `accept(previous, refined)` holds.
///
/// Each doubling reuses the previous samples, so the cost of the final
/// estimate is that of the finest grid.
pub fn periodic_trapezoid(
    start: usize,
    max_points: usize,
    f: impl FnMut(f64) -> f64,
    accept: impl Fn(f64, f64) -> bool,
) -> Result<Refined> {
    periodic_trapezoid_confirmed(start, max_points, 1, f, accept)
}

/// As [`periodic_trapezoid`], but `accept` must hold on `confirmations`
/// consecutive doublings. Integrands with isolated non-analytic points
/// converge erratically and can pass a single check by accident.
pub fn periodic_trapezoid_confirmed(
    start: usize,
    max_points: usize,
    confirmations: usize,
    mut f: impl FnMut(f64) -> f64,
    accept: impl Fn(f64, f64) -> bool,
) -> Result<Refined> {
    let mut streak = 0;
    let mut n = start.max(2);
    let mut sum: f64 = (0..n).map(|k| f(TAU * k as f64 / n as f64)).sum();
    let mut estimate = sum * TAU / n as f64;
    loop {
        if 2 * n > max_points {
            return Err(Error::QuadratureFailure {
                last_estimate: estimate,
                points: n,
            });
        }
        let step = TAU / (2 * n) as f64;
        let midpoints: f64 = (0..n).map(|k| f(step * (2 * k + 1) as f64)).sum();
        sum += midpoints;
        n *= 2;
        let refined = sum * TAU / n as f64;
        streak = if accept(estimate, refined) { streak + 1 } else { 0 };
        if streak >= confirmations.max(1) {
            return Ok(Refined {
                value: refined,
                points: n,
            });
        }
        estimate = refined;
    }
}

/// Trapezoid integral of samples on a uniform closed grid.
pub fn trapezoid(values: &[f64], step: f64) -> f64 {
    match values {
        [] | [_] => 0.0,
        [first, inner @ .., last] => step * (0.5 * (first + last) + inner.iter().sum::<f64>()),
    }
}

/// Smallest power of two not below `n`.
pub(crate) fn pow2_at_least(n: f64) -> usize {
    let n = n.max(1.0).ceil() as usize;
    n.next_power_of_two()
}
