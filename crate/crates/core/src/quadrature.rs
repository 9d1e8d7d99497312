//! Composite Gauss–Legendre quadrature with refinement by panel doubling.

use std::collections::HashMap;
use std::ops::{Add, Mul, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

/// Values that can be accumulated by a quadrature rule.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
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

    /// Shared rule of `n` nodes; rules are computed once per process.
    pub fn cached(n: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("quadrature cache poisoned");
        guard
            .entry(n)
            .or_insert_with(|| Arc::new(GaussLegendre::new(n)))
            .clone()
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

    /// Composite rule with `panels` equal panels on `[a, b]`.
    pub fn integrate<T: QuadValue, F: FnMut(f64) -> T>(
        &self,
        a: f64,
        b: f64,
        panels: usize,
        mut f: F,
    ) -> T {
        let h = (b - a) / panels as f64;
        let mut total = T::zero();
        for p in 0..panels {
            let lo = a + h * p as f64;
            let half = 0.5 * h;
            let mid = lo + half;
            let mut acc = T::zero();
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                acc = acc + f(mid + half * x) * *w;
            }
            total = total + acc * half;
        }
        total
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
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

/// Refinement settings for [`adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct Refinement {
    pub points: usize,
    pub initial_panels: usize,
    pub max_panels: usize,
    pub tolerance: f64,
}

/// Result of an adaptive integration: the value and the difference between
/// the last two refinements, used as the error estimate.
#[derive(Debug, Clone, Copy)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
}

/// Doubles the panel count until successive composite estimates agree within
/// the tolerance (or the panel cap is reached).
pub fn adaptive<T: QuadValue, F: Fn(f64) -> T>(
    a: f64,
    b: f64,
    cfg: Refinement,
    f: F,
) -> Estimate<T> {
    if b <= a {
        return Estimate {
            value: T::zero(),
            error: 0.0,
        };
    }
    let rule = GaussLegendre::cached(cfg.points.max(2));
    let mut panels = cfg.initial_panels.max(1);
    let mut prev = rule.integrate(a, b, panels, &f);
    loop {
        let next_panels = panels * 2;
        let next = rule.integrate(a, b, next_panels, &f);
        let diff = (next - prev).magnitude();
        if diff <= cfg.tolerance || next_panels >= cfg.max_panels {
            return Estimate {
                value: next,
                error: diff,
            };
        }
        panels = next_panels;
        prev = next;
    }
}
