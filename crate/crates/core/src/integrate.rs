//! `∫ h dμ` for piecewise-exponential integrands times density factors,
//! dispatched over the nodes of a measure expression.

use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::MeasureError;
use crate::interval::IntervalUnion;
use crate::measure::{
    realize_with, total_mass, Atoms, BoundedDensity, Domain, Ifs, Mass, MeasureExpr, Realization,
};
use crate::pwexp::PwExp;
use crate::quadrature::{adaptive, Refinement};
use crate::test_function::TestFunction;
use crate::transform::{ifs_transform, Accuracy, ComplexValueWithError as Value};

/// The density factor `x ↦ φ(x + shift)`.
#[derive(Debug, Clone)]
pub struct Factor {
    pub phi: Arc<BoundedDensity>,
    pub shift: f64,
}

/// `h(x) = g(x) · Π φ_k(x + s_k)`.
#[derive(Debug, Clone)]
pub struct Integrand {
    pub g: PwExp,
    pub factors: Vec<Factor>,
}

impl Integrand {
    pub fn one() -> Self {
        Self::from_pw(PwExp::constant(Complex64::new(1.0, 0.0)))
    }

    /// `e^{2πisx}`.
    pub fn exp(s: f64) -> Self {
        Self::from_pw(PwExp::exp(s, Complex64::new(1.0, 0.0)))
    }

    pub fn from_pw(g: PwExp) -> Self {
        Self {
            g,
            factors: Vec::new(),
        }
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        let v = self.g.eval(x);
        if v == Complex64::new(0.0, 0.0) {
            return v;
        }
        self.factors.iter().fold(v, |acc, f| acc * f.phi.eval(x + f.shift))
    }

    /// `x ↦ h(x + s)`.
    pub fn shift(&self, s: f64) -> Self {
        Self {
            g: self.g.shift(s),
            factors: self
                .factors
                .iter()
                .map(|f| Factor {
                    phi: f.phi.clone(),
                    shift: f.shift + s,
                })
                .collect(),
        }
    }

    fn is_plain_global(&self) -> bool {
        self.factors.is_empty() && self.g.is_global()
    }

    fn kinks(&self) -> Vec<f64> {
        let mut ks = self.g.kinks();
        for f in &self.factors {
            ks.extend(f.phi.kinks().into_iter().map(|k| k - f.shift));
        }
        ks.sort_by(f64::total_cmp);
        ks.dedup();
        ks
    }

    fn factor_sup(&self) -> f64 {
        self.factors.iter().map(|f| f.phi.upper()).product()
    }

    pub fn sup(&self) -> f64 {
        self.g.sup_bound() * self.factor_sup()
    }

    /// Lipschitz constant between kinks.
    pub fn lipschitz(&self) -> Option<f64> {
        let sups: Vec<f64> = self.factors.iter().map(|f| f.phi.upper()).collect();
        let mut lip = self.g.lipschitz() * self.factor_sup();
        for (i, f) in self.factors.iter().enumerate() {
            let others: f64 = sups.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, s)| s).product();
            lip += self.g.sup_bound() * f.phi.lipschitz()? * others;
        }
        Some(lip)
    }

    /// Bound on the total size of jumps.
    pub fn jump_total(&self) -> f64 {
        let sups: Vec<f64> = self.factors.iter().map(|f| f.phi.upper()).collect();
        let mut j = self.g.jump_total() * self.factor_sup();
        for (i, f) in self.factors.iter().enumerate() {
            let others: f64 = sups.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, s)| s).product();
            j += self.g.sup_bound() * f.phi.jump_total() * others;
        }
        j
    }

    /// Bounded interval outside which `h` vanishes, if any.
    fn support_hull(&self) -> Option<(f64, f64)> {
        let mut hull = self.g.support_hull();
        for f in &self.factors {
            if let Domain::Set(s) = f.phi.domain() {
                let h = s.hull();
                let (lo, hi) = (h.lo - f.shift, h.hi - f.shift);
                hull = Some(match hull {
                    Some((a, b)) => (a.max(lo), b.min(hi)),
                    None => (lo, hi),
                });
            }
        }
        hull
    }
}

/// Evaluation context: accuracy settings plus a cache of realized
/// subexpressions, so repeated evaluations at many frequencies realize each
/// factor once.
pub struct Evaluator {
    acc: Accuracy,
    cache: Mutex<Vec<(MeasureExpr, Arc<Realization>)>>,
}

impl Evaluator {
    pub fn new(acc: Accuracy) -> Self {
        Self {
            acc,
            cache: Mutex::new(Vec::new()),
        }
    }

    pub fn accuracy(&self) -> &Accuracy {
        &self.acc
    }

    pub fn realization(&self, mu: &MeasureExpr) -> Result<Arc<Realization>, MeasureError> {
        {
            let cache = self.cache.lock().expect("realization cache poisoned");
            if let Some((_, r)) = cache.iter().find(|(m, _)| std::ptr::eq(m, mu) || m == mu) {
                return Ok(r.clone());
            }
        }
        let r = Arc::new(realize_with(mu, &self.acc.realize_options())?);
        self.cache
            .lock()
            .expect("realization cache poisoned")
            .push((mu.clone(), r.clone()));
        Ok(r)
    }

    /// `∫ f e^{−2πitx} dμ`.
    pub fn weighted_transform(&self, f: &TestFunction, mu: &MeasureExpr, t: f64) -> Result<Value, MeasureError> {
        match f.to_pwexp() {
            Some(g) => self.integrate(mu, &Integrand::from_pw(g.mul_exp(-t))),
            None => {
                if !mu.is_purely_atomic() {
                    return Err(MeasureError::Invalid(
                        "point-value test functions need a purely atomic measure".into(),
                    ));
                }
                let r = self.realization(mu)?;
                let mut terms = Vec::with_capacity(r.atoms.len());
                for (p, w) in r.atoms.iter() {
                    let v = f.eval(p).ok_or_else(|| {
                        MeasureError::Invalid(format!("no test-function value at atom {p:?}"))
                    })?;
                    let phase = p.iter().map(|x| x * t).sum::<f64>();
                    terms.push(v * w * crate::phase::cis_turns(-phase));
                }
                let value: Complex64 = terms.iter().sum();
                let scale: f64 = terms.iter().map(|z| z.norm()).sum();
                Ok(Value {
                    value,
                    abs_error_bound: (terms.len() as f64 + 8.0) * f64::EPSILON * scale,
                })
            }
        }
    }

    /// `∫ h dμ` with an absolute error bound.
    pub fn integrate(&self, mu: &MeasureExpr, h: &Integrand) -> Result<Value, MeasureError> {
        match mu {
            MeasureExpr::Lebesgue => self.lebesgue(None, h),
            MeasureExpr::LebesgueOnSet { set } => self.lebesgue(Some(set), h),
            MeasureExpr::Atomic { atoms } => sum_over_atoms(atoms, h),
            MeasureExpr::IfsInvariant { ifs } => self.ifs(mu, ifs, h),
            MeasureExpr::Density { phi, base } => {
                let h = match (phi.as_piecewise_constant(), phi.domain()) {
                    (Some((breaks, values)), domain) => {
                        let mut g = h.g.mul_steps(breaks, values);
                        if let Domain::Set(s) = domain {
                            g = g.restrict(s);
                        }
                        Integrand {
                            g,
                            factors: h.factors.clone(),
                        }
                    }
                    _ => {
                        let mut h = h.clone();
                        h.factors.push(Factor {
                            phi: phi.clone(),
                            shift: 0.0,
                        });
                        h
                    }
                };
                self.integrate(base, &h)
            }
            MeasureExpr::Restrict { set, base } => {
                let h = Integrand {
                    g: h.g.restrict(set),
                    factors: h.factors.clone(),
                };
                self.integrate(base, &h)
            }
            MeasureExpr::Scale { alpha, base } => {
                Ok(self.integrate(base, h)?.scale(Complex64::new(*alpha, 0.0)))
            }
            MeasureExpr::Sum { left, right } => Ok(self.integrate(left, h)? + self.integrate(right, h)?),
            MeasureExpr::Translate { shift, base } => {
                if shift.len() != 1 {
                    return Err(MeasureError::Dimension(
                        "integrals are only evaluated on the line".into(),
                    ));
                }
                self.integrate(base, &h.shift(shift[0]))
            }
            MeasureExpr::Normalize { base } => {
                let (m, em) = match total_mass(base)? {
                    Mass::Finite { value, error } if value > 0.0 => (value, error),
                    Mass::Finite { value, .. } => return Err(MeasureError::NormalizeMass(format!("{value}"))),
                    Mass::Infinite => return Err(MeasureError::NormalizeMass("infinite".into())),
                };
                let v = self.integrate(base, h)?;
                let rel = em / m;
                Ok(Value {
                    value: v.value / m,
                    abs_error_bound: (v.abs_error_bound + v.value.norm() * rel) / (m * (1.0 - rel).max(0.5))
                        + v.value.norm() / m * 4.0 * f64::EPSILON,
                })
            }
            MeasureExpr::Convolve { left, right } => self.convolve(left, right, h),
        }
    }

    fn lebesgue(&self, region: Option<&IntervalUnion>, h: &Integrand) -> Result<Value, MeasureError> {
        if h.factors.is_empty() {
            let g = match region {
                Some(set) => h.g.restrict(set),
                None => h.g.clone(),
            };
            if !g.is_bounded_support() {
                return Err(MeasureError::TransformUndefined(
                    "integrand is not integrable against Lebesgue measure".into(),
                ));
            }
            let (value, err) = g.integral_all();
            return Ok(Value {
                value,
                abs_error_bound: err,
            });
        }
        let hull = h.support_hull();
        let domain = match (region, hull) {
            (Some(set), Some((lo, hi))) => set.clip(lo, hi),
            (Some(set), None) => Some(set.clone()),
            (None, Some((lo, hi))) => IntervalUnion::interval(lo, hi).ok(),
            (None, None) => {
                return Err(MeasureError::TransformUndefined(
                    "integrand is not integrable against Lebesgue measure".into(),
                ))
            }
        };
        let Some(domain) = domain else {
            return Ok(Value::zero());
        };
        let kinks = h.kinks();
        let total = domain.length();
        let freq = h.g.max_abs_freq();
        let mut out = Value::zero();
        for part in domain.parts() {
            let mut cuts = vec![part.lo];
            cuts.extend(kinks.iter().copied().filter(|k| part.lo < *k && *k < part.hi));
            cuts.push(part.hi);
            for c in cuts.windows(2) {
                let len = c[1] - c[0];
                let cfg = Refinement {
                    points: self.acc.quad_points,
                    initial_panels: ((len * freq).ceil() as usize).max(1),
                    max_panels: self.acc.max_panels,
                    tolerance: self.acc.error_budget * len / total,
                };
                let est = adaptive(c[0], c[1], cfg, |x| h.eval(x));
                out = out
                    + Value {
                        value: est.value,
                        abs_error_bound: est.error + 16.0 * f64::EPSILON * est.value.norm(),
                    };
            }
        }
        Ok(out)
    }

    fn ifs(&self, mu: &MeasureExpr, ifs: &Ifs, h: &Integrand) -> Result<Value, MeasureError> {
        if h.is_plain_global() {
            return Ok(h
                .g
                .pieces
                .iter()
                .map(|p| ifs_transform(ifs, -p.freq, self.acc.ifs_depth).scale(p.coef))
                .sum());
        }
        let r = self.realization(mu)?;
        sum_over_cells(&r, h)
    }

    fn convolve(&self, left: &MeasureExpr, right: &MeasureExpr, h: &Integrand) -> Result<Value, MeasureError> {
        if h.is_plain_global() {
            // characters factor over convolutions
            let mut out = Value::zero();
            for p in &h.g.pieces {
                let e = Integrand::exp(p.freq);
                let v = self.integrate(left, &e)? * self.integrate(right, &e)?;
                out = out + v.scale(p.coef);
            }
            return Ok(out);
        }
        for (atomic, other) in [(right, left), (left, right)] {
            if atomic.is_purely_atomic() {
                let r = self.realization(atomic)?;
                return self.sum_shifted(&r.atoms, other, h, 0.0);
            }
        }
        // Realize one factor; G(y) = ∫ h(x + y) dν(x) is Lipschitz with
        // constant mass(ν)·Lip(h) + J(h)·sup(dν/dλ), which bounds the cell error.
        let mut best: Option<(f64, &MeasureExpr, &MeasureExpr)> = None;
        for (realized, other) in [(right, left), (left, right)] {
            let Ok(Mass::Finite { .. }) = total_mass(realized) else { continue };
            let Ok(r) = self.realization(realized) else { continue };
            if !r.exact {
                continue;
            }
            let Some(lip) = convolution_lipschitz(other, h, r.spread) else { continue };
            let bound = lip * r.spread;
            if best.is_none_or(|(b, _, _)| bound < b) {
                best = Some((bound, realized, other));
            }
        }
        let Some((cell_error, realized, other)) = best else {
            return Err(MeasureError::UnrealizableConvolution(
                "no factor can be realized with a certified error bound".into(),
            ));
        };
        let r = self.realization(realized)?;
        self.sum_shifted(&r.atoms, other, h, cell_error)
    }

    /// `Σ_y w_y ∫ h(x + y) dν(x)`, charging `cell_error` per unit weight.
    fn sum_shifted(&self, atoms: &Atoms, other: &MeasureExpr, h: &Integrand, cell_error: f64) -> Result<Value, MeasureError> {
        if atoms.dim() != 1 {
            return Err(MeasureError::Dimension("integrals are only evaluated on the line".into()));
        }
        let parts: Vec<Value> = (0..atoms.len())
            .into_par_iter()
            .map(|i| {
                let w = atoms.weights()[i];
                Ok(self.integrate(other, &h.shift(atoms.x(i)))?.scale(Complex64::new(w, 0.0)))
            })
            .collect::<Result<_, MeasureError>>()?;
        let scale: f64 = parts.iter().map(|v| v.value.norm()).sum();
        let total: Value = parts.into_iter().sum();
        Ok(total.with_error(cell_error * atoms.total_weight() + (atoms.len() as f64 + 4.0) * f64::EPSILON * scale))
    }
}

fn convolution_lipschitz(other: &MeasureExpr, h: &Integrand, spread: f64) -> Option<f64> {
    let lip = h.lipschitz()?;
    let jumps = h.jump_total();
    let dsup = other.density_sup();
    let mass = match total_mass(other).ok()? {
        Mass::Finite { value, error } => Some(value + error),
        Mass::Infinite => None,
    };
    let local_mass = h
        .support_hull()
        .and_then(|(lo, hi)| dsup.map(|d| d * (hi - lo + 2.0 * spread)));
    let m = match (mass, local_mass) {
        (Some(a), Some(b)) => a.min(b),
        (a, b) => a.or(b)?,
    };
    let jump_part = if jumps == 0.0 { 0.0 } else { jumps * dsup? };
    Some(lip * m + jump_part)
}

fn sum_over_atoms(atoms: &Atoms, h: &Integrand) -> Result<Value, MeasureError> {
    if atoms.dim() != 1 {
        return Err(MeasureError::Dimension("integrals are only evaluated on the line".into()));
    }
    let freq = h.g.max_abs_freq();
    let mut value = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    let mut phase = 0.0;
    for (p, w) in atoms.iter() {
        let v = h.eval(p[0]) * w;
        value += v;
        scale += v.norm();
        phase += v.norm() * 2.0 * std::f64::consts::PI * freq * p[0].abs();
    }
    Ok(Value {
        value,
        abs_error_bound: ((atoms.len() as f64 + 8.0) * scale + phase) * f64::EPSILON,
    })
}

/// Sum over a realization whose atoms each carry the exact mass of a cell
/// within `spread` of them. The cell error is `spread·Lip(h)` away from
/// kinks and `2 sup|h|` for cells containing one.
fn sum_over_cells(r: &Realization, h: &Integrand) -> Result<Value, MeasureError> {
    if !r.exact {
        return Err(MeasureError::UnrealizableConvolution(
            "realization does not carry exact cell masses".into(),
        ));
    }
    let mut v = sum_over_atoms(&r.atoms, h)?;
    if r.spread == 0.0 {
        return Ok(v);
    }
    let kinks = h.kinks();
    let sup = h.sup();
    let lip = h.lipschitz();
    let mut err = 0.0;
    for (p, w) in r.atoms.iter() {
        let x = p[0];
        let i = kinks.partition_point(|k| *k < x - r.spread);
        let near_kink = i < kinks.len() && kinks[i] <= x + r.spread;
        err += w * match (near_kink, lip) {
            (false, Some(l)) => (l * r.spread).min(2.0 * sup),
            _ => 2.0 * sup,
        };
    }
    v.abs_error_bound += err;
    Ok(v)
}

/// `∫ h dμ` with default settings.
pub fn integrate(mu: &MeasureExpr, h: &Integrand, acc: &Accuracy) -> Result<Value, MeasureError> {
    Evaluator::new(*acc).integrate(mu, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{DensityForm, Ifs};

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn lebesgue_transform_vanishes_at_integers() {
        let mu = MeasureExpr::lebesgue_interval(0.0, 1.0).unwrap();
        let v = integrate(&mu, &Integrand::exp(-1.0), &Accuracy::default()).unwrap();
        assert!(v.value.norm() <= 1e-15);
    }

    #[test]
    fn non_constant_density_by_quadrature() {
        let phi = BoundedDensity::new(
            DensityForm::PiecewisePolynomial {
                breaks: vec![],
                coefficients: vec![vec![1.0, 1.0]],
            },
            Domain::Set(IntervalUnion::interval(0.0, 1.0).unwrap()),
            1.0,
            2.0,
        )
        .unwrap();
        let mu = MeasureExpr::lebesgue_interval(0.0, 1.0).unwrap().density(phi);
        let v = integrate(&mu, &Integrand::one(), &Accuracy::default()).unwrap();
        assert!(close(v.value, Complex64::new(1.5, 0.0), 1e-12));
    }

    #[test]
    fn convolution_with_atoms_shifts() {
        let mu = MeasureExpr::lebesgue_interval(0.0, 1.0)
            .unwrap()
            .convolve(MeasureExpr::atoms_1d([(5.0, 2.0)]));
        let g = PwExp::constant(Complex64::new(1.0, 0.0)).mul_steps(&[5.5], &[1.0, 0.0]);
        let v = integrate(&mu, &Integrand::from_pw(g), &Accuracy::default()).unwrap();
        assert!(close(v.value, Complex64::new(1.0, 0.0), 1e-14));
    }

    #[test]
    fn step_on_cantor_measure_is_bounded_by_cells() {
        let mu = MeasureExpr::ifs(Ifs::uniform(4, vec![0, 2]));
        // μ₄ puts exactly half its mass on [0, 1/6]
        let g = PwExp::constant(Complex64::new(1.0, 0.0)).mul_steps(&[0.3], &[1.0, 0.0]);
        let v = integrate(&mu, &Integrand::from_pw(g), &Accuracy::default()).unwrap();
        assert!(close(v.value, Complex64::new(0.5, 0.0), v.abs_error_bound + 1e-15));
        assert!(v.abs_error_bound < 1e-12);
    }
}
