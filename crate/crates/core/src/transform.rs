//! Fourier transforms `μ̂(t) = ∫ e^{−2πitx} dμ(x)` and weighted transforms
//! `∫ f(x) e^{−2πitx} dμ(x)`, each with an absolute error bound.

use std::f64::consts::PI;
use std::ops::{Add, Mul};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::MeasureError;
use crate::integrate::{Evaluator, Integrand};
use crate::measure::{Ifs, MeasureExpr, RealizeOptions, DEFAULT_ATOM_CAP};
use crate::phase::cis_turns;
use crate::real;
use crate::test_function::TestFunction;

/// Truncation, quadrature, and realization settings shared by every
/// evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Accuracy {
    /// Factors kept from the infinite IFS mask product.
    pub ifs_depth: u32,
    /// IFS unfolding depth when a leaf has to be realized.
    pub realize_depth: u32,
    /// Gauss–Legendre nodes per panel.
    pub quad_points: usize,
    /// Target absolute error of each adaptive quadrature.
    #[serde(with = "real")]
    pub error_budget: f64,
    /// Cell width when an absolutely continuous factor is realized.
    #[serde(with = "real")]
    pub resolution: f64,
    pub atom_cap: usize,
    /// Panel cap of the adaptive quadrature.
    pub max_panels: usize,
}

impl Default for Accuracy {
    fn default() -> Self {
        Self {
            ifs_depth: 32,
            realize_depth: 12,
            quad_points: 64,
            error_budget: 1e-10,
            resolution: 1.0 / 1024.0,
            atom_cap: DEFAULT_ATOM_CAP,
            max_panels: 1 << 16,
        }
    }
}

impl Accuracy {
    pub fn check(&self) -> Result<(), MeasureError> {
        if self.ifs_depth == 0 || self.realize_depth == 0 {
            return Err(MeasureError::Invalid("IFS depths must be at least 1".into()));
        }
        if self.quad_points < 2 {
            return Err(MeasureError::Invalid("need at least 2 quadrature points".into()));
        }
        if !(self.error_budget > 0.0) || !(self.resolution > 0.0) {
            return Err(MeasureError::Invalid(
                "error budget and resolution must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn realize_options(&self) -> RealizeOptions {
        RealizeOptions {
            depth: self.realize_depth,
            resolution: self.resolution,
            cap: self.atom_cap,
        }
    }
}

/// Frequencies to evaluate and the accuracy to use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformRequest {
    #[serde(with = "real::seq")]
    pub t: Vec<f64>,
    #[serde(default)]
    pub accuracy: Accuracy,
}

impl TransformRequest {
    pub fn at(t: f64) -> Self {
        Self {
            t: vec![t],
            accuracy: Accuracy::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexValueWithError {
    #[serde(with = "real::complex")]
    pub value: Complex64,
    #[serde(with = "real")]
    pub abs_error_bound: f64,
}

impl ComplexValueWithError {
    pub fn exact(value: Complex64) -> Self {
        Self {
            value,
            abs_error_bound: 0.0,
        }
    }

    pub fn zero() -> Self {
        Self::exact(Complex64::new(0.0, 0.0))
    }

    pub fn scale(self, c: Complex64) -> Self {
        Self {
            value: self.value * c,
            abs_error_bound: self.abs_error_bound * c.norm(),
        }
    }

    pub fn with_error(self, extra: f64) -> Self {
        Self {
            abs_error_bound: self.abs_error_bound + extra,
            ..self
        }
    }
}

impl Add for ComplexValueWithError {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            value: self.value + o.value,
            abs_error_bound: self.abs_error_bound + o.abs_error_bound,
        }
    }
}

impl Mul for ComplexValueWithError {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let (a, b) = (self.value.norm(), o.value.norm());
        let (ea, eb) = (self.abs_error_bound, o.abs_error_bound);
        Self {
            value: self.value * o.value,
            abs_error_bound: a * eb + b * ea + ea * eb,
        }
    }
}

impl std::iter::Sum for ComplexValueWithError {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |a, b| a + b)
    }
}

/// One step of the IFS transfer: `m(t) = Σ ρ_a e^{−2πiat}`.
pub fn ifs_mask(digits: &[i64], weights: &[f64], t: f64) -> Complex64 {
    digits
        .iter()
        .zip(weights)
        .map(|(a, rho)| cis_turns(-(*a as f64) * t) * *rho)
        .sum()
}

/// `μ̂(t) ≈ Π_{k=1..K} m(t/R^k)` for the invariant measure of `ifs`.
///
/// The discarded factor `μ̂(t/R^K)` is within `2π r |t| R^{−K}` of 1 (with
/// `r` the hull radius); the bound below uses the slightly larger geometric
/// sum `2π r |t| R^{−K} / (1 − 1/R)` and adds the floating-point error of
/// the product.
pub fn ifs_transform(ifs: &Ifs, t: f64, depth: u32) -> ComplexValueWithError {
    let r = ifs.scale as f64;
    let mut s = t;
    let mut prod = Complex64::new(1.0, 0.0);
    for _ in 0..depth {
        s /= r;
        prod *= ifs_mask(&ifs.digits, &ifs.weights, s);
    }
    let k = depth as f64;
    let tail = 2.0 * PI * ifs.hull().radius() * t.abs() * r.powi(-(depth as i32)) / (1.0 - 1.0 / r);
    let a_max = ifs.digits.iter().map(|a| a.unsigned_abs()).max().unwrap_or(0) as f64;
    let n = ifs.digits.len() as f64;
    let rounding = ((n + 3.0) * k + 8.0) * f64::EPSILON
        + 2.0 * PI * a_max * t.abs() * (k + 1.0) * f64::EPSILON / (r - 1.0);
    ComplexValueWithError {
        value: prod,
        abs_error_bound: tail + rounding,
    }
}

/// `μ̂(t)`.
pub fn ft_measure(mu: &MeasureExpr, t: f64, acc: &Accuracy) -> Result<ComplexValueWithError, MeasureError> {
    acc.check()?;
    Evaluator::new(*acc).integrate(mu, &Integrand::exp(-t))
}

/// `∫ f e^{−2πitx} dμ`.
pub fn ft_weighted(
    f: &TestFunction,
    mu: &MeasureExpr,
    t: f64,
    acc: &Accuracy,
) -> Result<ComplexValueWithError, MeasureError> {
    acc.check()?;
    let ev = Evaluator::new(*acc);
    ev.weighted_transform(f, mu, t)
}

/// Weighted transform over a frequency grid; `f = None` means `f ≡ 1`.
/// Entries are computed independently, so the output does not depend on
/// scheduling.
pub fn ft_grid(
    f: Option<&TestFunction>,
    mu: &MeasureExpr,
    req: &TransformRequest,
) -> Result<Vec<ComplexValueWithError>, MeasureError> {
    req.accuracy.check()?;
    let ev = Evaluator::new(req.accuracy);
    let one = TestFunction::constant();
    let f = f.unwrap_or(&one);
    req.t
        .par_iter()
        .map(|t| ev.weighted_transform(f, mu, *t))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_values() {
        assert_eq!(ifs_mask(&[0, 2], &[0.5, 0.5], 0.0), Complex64::new(1.0, 0.0));
        let m = ifs_mask(&[0, 2], &[0.5, 0.5], 0.125);
        assert!((m - Complex64::new(0.5, -0.5)).norm() < 1e-16);
        assert_eq!(ifs_mask(&[0, 1], &[0.5, 0.5], 0.5).norm(), 0.0);
    }

    #[test]
    fn error_arithmetic() {
        let a = ComplexValueWithError {
            value: Complex64::new(2.0, 0.0),
            abs_error_bound: 0.1,
        };
        let b = ComplexValueWithError {
            value: Complex64::new(0.0, 3.0),
            abs_error_bound: 0.2,
        };
        let p = a * b;
        assert_eq!(p.value, Complex64::new(0.0, 6.0));
        assert!((p.abs_error_bound - (2.0 * 0.2 + 3.0 * 0.1 + 0.02)).abs() < 1e-15);
    }

    #[test]
    fn request_validation() {
        let acc = Accuracy {
            quad_points: 1,
            ..Accuracy::default()
        };
        assert!(acc.check().is_err());
    }
}
