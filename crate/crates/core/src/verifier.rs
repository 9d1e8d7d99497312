//! Frame ratios `∫ |(f dμ)^|² dν / ‖f‖²_{L²(μ)}` over families of test
//! functions, exact bounds for finite atomic pairs, and the comparison of
//! both against a bound certificate.

use std::cell::{Cell, RefCell};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constructions::{convolve_frame_measure_with_probability, BoundCert, CertifiedPair, Truncation};
use crate::error::{MeasureError, VerifyError};
use crate::integrate::{Evaluator, Integrand};
use crate::interval::IntervalUnion;
use crate::measure::{
    approximate_identity, support_superset, total_mass, ApproxKind, Atoms, BoundedDensity, Domain, Mass,
    MeasureExpr,
};
use crate::phase::cis_turns;
use crate::pwexp::{Decay, PwExp};
use crate::quadrature::{adaptive, Refinement};
use crate::real;
use crate::test_function::TestFunction;
use crate::transform::Accuracy;

/// Default cap on the number of atoms of `μ` in exact bound computations.
pub const DEFAULT_EXACT_CAP: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyOptions {
    pub accuracy: Accuracy,
    /// Continuous frame measures with unbounded support are integrated over
    /// `[−window, window]`.
    #[serde(with = "real")]
    pub window: f64,
    pub exact_cap: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            accuracy: Accuracy::default(),
            window: 64.0,
            exact_cap: DEFAULT_EXACT_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Trig,
    Step,
    PointValues,
}

/// One test function's frame ratio.
///
/// `error` bounds the distance to the true ratio and already contains the
/// certified truncation tail; `tail` is `None` when the frame measure was
/// truncated and no tail bound is available (the ratio then only bounds the
/// true ratio from below).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRecord {
    pub id: usize,
    #[serde(with = "real::opt")]
    pub ratio: Option<f64>,
    #[serde(with = "real")]
    pub error: f64,
    #[serde(with = "real::opt")]
    pub tail: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Consistent,
    UpperViolated,
    LowerViolated,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Consistent => "consistent",
            Verdict::UpperViolated => "upper-violated",
            Verdict::LowerViolated => "lower-violated",
            Verdict::Inconclusive => "inconclusive",
        }
    }

    pub fn is_violation(self) -> bool {
        matches!(self, Verdict::UpperViolated | Verdict::LowerViolated)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    pub ratios: Vec<RatioRecord>,
    #[serde(with = "real::opt")]
    pub emp_lower: Option<f64>,
    #[serde(with = "real::opt")]
    pub emp_upper: Option<f64>,
    pub cert: Option<BoundCert>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

impl FrameReport {
    /// Largest per-record error among defined ratios.
    pub fn max_error(&self) -> f64 {
        self.ratios
            .iter()
            .filter(|r| r.ratio.is_some())
            .map(|r| r.error)
            .fold(0.0, f64::max)
    }
}

/// `‖f‖²_{L²(μ)}` with an absolute error bound.
pub fn norm_sq(f: &TestFunction, mu: &MeasureExpr, acc: &Accuracy) -> Result<(f64, f64), VerifyError> {
    norm_with(&Evaluator::new(*acc), f, mu)
}

fn norm_with(ev: &Evaluator, f: &TestFunction, mu: &MeasureExpr) -> Result<(f64, f64), VerifyError> {
    let (value, error) = match f.to_pwexp() {
        Some(g) => {
            let v = ev.integrate(mu, &Integrand::from_pw(g.mul(&g.conj())))?;
            (v.value.re, v.abs_error_bound)
        }
        None => {
            let atoms = exact_atoms(ev, mu)?;
            let vals = values_at(f, &atoms)?;
            let s: f64 = vals.iter().zip(atoms.weights()).map(|(v, w)| w * v.norm_sqr()).sum();
            (s, (atoms.len() as f64 + 4.0) * f64::EPSILON * s)
        }
    };
    if value > error {
        Ok((value, error))
    } else {
        Err(VerifyError::ZeroNorm)
    }
}

fn exact_atoms(ev: &Evaluator, mu: &MeasureExpr) -> Result<Arc<Atoms>, VerifyError> {
    if !mu.is_purely_atomic() {
        return Err(VerifyError::NotAtomic(format!("{} node is not purely atomic", mu.tag())));
    }
    let r = ev.realization(mu)?;
    Ok(Arc::new(r.atoms.clone()))
}

/// Values of `f` at the atoms, in atom order.
fn values_at(f: &TestFunction, atoms: &Atoms) -> Result<Vec<Complex64>, VerifyError> {
    let missing = |p: &[f64]| VerifyError::Unevaluable(format!("no value at atom {p:?}"));
    match f {
        TestFunction::PointValues { points, values } => {
            let key = |p: &[f64]| p.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            let table: HashMap<Vec<u64>, Complex64> = points
                .iter()
                .zip(values)
                .map(|(p, v)| (p.iter().map(|x| x.0.to_bits()).collect(), *v))
                .collect();
            atoms
                .iter()
                .map(|(p, _)| table.get(&key(p)).copied().ok_or_else(|| missing(p)))
                .collect()
        }
        _ if atoms.dim() != 1 => Err(VerifyError::Unevaluable(
            "only point-value test functions live on higher-dimensional atoms".into(),
        )),
        _ => atoms.iter().map(|(p, _)| f.eval(p).ok_or_else(|| missing(p))).collect(),
    }
}

/// `Σ_j a_j e^{−2πi t·x_j}` with an error bound covering summation and
/// phase rounding.
fn atomic_transform(atoms: &Atoms, a: &[Complex64], t: &[f64]) -> (Complex64, f64) {
    let d = atoms.dim() as f64;
    let mut value = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    let mut phase_err = 0.0;
    for (j, (p, _)) in atoms.iter().enumerate() {
        let phase: f64 = p.iter().zip(t).map(|(x, s)| x * s).sum();
        let size: f64 = p.iter().zip(t).map(|(x, s)| (x * s).abs()).sum();
        value += a[j] * cis_turns(-phase);
        scale += a[j].norm();
        phase_err += a[j].norm() * 2.0 * PI * (d + 1.0) * f64::EPSILON * size;
    }
    (value, (atoms.len() as f64 + 8.0) * f64::EPSILON * scale + phase_err)
}

/// Accumulated `∫ |F|² dν` over part of `ν`. `tail` is `None` once some part
/// was cut off without a certified bound.
#[derive(Debug, Clone, Copy)]
struct Part {
    value: f64,
    error: f64,
    tail: Option<f64>,
}

impl Part {
    const ZERO: Part = Part {
        value: 0.0,
        error: 0.0,
        tail: Some(0.0),
    };

    fn add(self, o: Part) -> Part {
        Part {
            value: self.value + o.value,
            error: self.error + o.error,
            tail: self.tail.zip(o.tail).map(|(a, b)| a + b),
        }
    }

    fn scale(self, c: f64) -> Part {
        Part {
            value: self.value * c,
            error: self.error * c,
            tail: self.tail.map(|t| t * c),
        }
    }
}

/// Position inside the tree of `ν`: a node coordinate `t` corresponds to the
/// frequency `t + shift`, carries the product of `weight` and `φ(t + off)`
/// over the pending densities, and must lie in `region` when one is set.
#[derive(Clone)]
struct Frame {
    shift: f64,
    weight: f64,
    factors: Vec<(Arc<BoundedDensity>, f64)>,
    region: Option<IntervalUnion>,
}

impl Frame {
    fn root() -> Self {
        Self {
            shift: 0.0,
            weight: 1.0,
            factors: Vec::new(),
            region: None,
        }
    }

    /// The frame seen from `base` in `δ_a ∗ base`.
    fn moved(&self, a: f64) -> Self {
        Self {
            shift: self.shift + a,
            weight: self.weight,
            factors: self.factors.iter().map(|(p, o)| (p.clone(), o + a)).collect(),
            region: self.region.as_ref().map(|r| r.shift(-a)),
        }
    }

    /// Intersects the region; `None` when nothing is left.
    fn restricted(&self, set: &IntervalUnion) -> Option<Self> {
        let region = match &self.region {
            Some(r) => r.intersect(set)?,
            None => set.clone(),
        };
        Some(Self {
            region: Some(region),
            ..self.clone()
        })
    }

    fn factor_at(&self, t: f64) -> f64 {
        self.factors.iter().map(|(p, o)| p.eval(t + o)).product()
    }

    fn factor_sup(&self) -> f64 {
        self.factors.iter().map(|(p, _)| p.upper()).product()
    }
}

/// Everything about `μ` and `f` the `ν` side needs.
struct Probe<'a> {
    ev: &'a Evaluator,
    f: &'a TestFunction,
    mu: &'a MeasureExpr,
    window: f64,
    /// Hull length of `supp μ`, setting the oscillation scale of `F`.
    mu_len: f64,
    decay: Option<Decay>,
}

impl Probe<'_> {
    fn transform(&self, t: f64) -> Result<(Complex64, f64), VerifyError> {
        let v = self.ev.weighted_transform(self.f, self.mu, t)?;
        Ok((v.value, v.abs_error_bound))
    }

    fn walk(&self, nu: &MeasureExpr, st: &Frame) -> Result<Part, VerifyError> {
        match nu {
            MeasureExpr::Lebesgue => self.leaf(st),
            MeasureExpr::LebesgueOnSet { set } => match st.restricted(set) {
                Some(st) => self.leaf(&st),
                None => Ok(Part::ZERO),
            },
            MeasureExpr::Atomic { atoms } => self.atoms(atoms, st),
            MeasureExpr::IfsInvariant { .. } => Err(VerifyError::Unevaluable(
                "frame measures with invariant-measure parts are not integrated".into(),
            )),
            MeasureExpr::Density { phi, base } => {
                let mut st = st.clone();
                st.factors.push((phi.clone(), 0.0));
                self.walk(base, &st)
            }
            MeasureExpr::Restrict { set, base } => match st.restricted(set) {
                Some(st) => self.walk(base, &st),
                None => Ok(Part::ZERO),
            },
            MeasureExpr::Scale { alpha, base } => {
                let mut st = st.clone();
                st.weight *= alpha;
                self.walk(base, &st)
            }
            MeasureExpr::Sum { left, right } => Ok(self.walk(left, st)?.add(self.walk(right, st)?)),
            MeasureExpr::Translate { shift, base } => {
                if shift.len() != 1 {
                    return Err(VerifyError::Unevaluable("translation outside the line".into()));
                }
                self.walk(base, &st.moved(shift[0]))
            }
            MeasureExpr::Normalize { base } => {
                let (m, em) = match total_mass(base)? {
                    Mass::Finite { value, error } if value > error => (value, error),
                    _ => return Err(MeasureError::NormalizeMass(format!("{:?}", base.tag())).into()),
                };
                let p = self.walk(base, st)?;
                let mut out = p.scale(1.0 / m);
                out.error += out.value * em / (m - em);
                Ok(out)
            }
            MeasureExpr::Convolve { left, right } => {
                let (atomic, other) = if right.is_purely_atomic() {
                    (right, left)
                } else if left.is_purely_atomic() {
                    (left, right)
                } else {
                    return Err(VerifyError::Unevaluable(
                        "convolutions in the frame measure need an atomic side".into(),
                    ));
                };
                let atoms = exact_atoms(self.ev, atomic)?;
                if atoms.dim() != 1 {
                    return Err(VerifyError::Unevaluable("atoms off the line".into()));
                }
                let mut out = Part::ZERO;
                for (y, w) in atoms.iter() {
                    let mut moved = st.moved(y[0]);
                    moved.weight *= w;
                    out = out.add(self.walk(other, &moved)?);
                }
                Ok(out)
            }
        }
    }

    fn atoms(&self, atoms: &Atoms, st: &Frame) -> Result<Part, VerifyError> {
        if atoms.dim() != 1 {
            return Err(VerifyError::Unevaluable(
                "atoms off the line need an atomic base measure".into(),
            ));
        }
        let mut out = Part::ZERO;
        for (p, w) in atoms.iter() {
            let x = p[0];
            if st.region.as_ref().is_some_and(|r| !r.contains(x)) {
                continue;
            }
            let c = st.weight * w * st.factor_at(x);
            if c == 0.0 {
                continue;
            }
            let (v, e) = self.transform(x + st.shift)?;
            out.value += c * v.norm_sqr();
            out.error += c * (2.0 * v.norm() * e + e * e) + 4.0 * f64::EPSILON * c * v.norm_sqr();
        }
        Ok(out)
    }

    /// `weight ∫ |F(t + shift)|² Π φ(t + off) dt` over the region, or over
    /// the window when the region is unbounded.
    fn leaf(&self, st: &Frame) -> Result<Part, VerifyError> {
        let mut dom = st.region.clone();
        for (phi, off) in &st.factors {
            if let Domain::Set(s) = phi.domain() {
                let s = s.shift(-off);
                dom = match dom {
                    Some(d) => match d.intersect(&s) {
                        Some(x) => Some(x),
                        None => return Ok(Part::ZERO),
                    },
                    None => Some(s),
                };
            }
        }
        let (domain, windowed) = match dom {
            Some(d) => (d, false),
            None => (
                IntervalUnion::interval(-self.window - st.shift, self.window - st.shift)?,
                true,
            ),
        };
        let mut kinks: Vec<f64> = st
            .factors
            .iter()
            .flat_map(|(p, o)| p.kinks().into_iter().map(move |k| k - o))
            .collect();
        kinks.sort_by(f64::total_cmp);

        let acc = self.ev.accuracy();
        let total = domain.length();
        let f_err = Cell::new(0.0f64);
        let f_max = Cell::new(0.0f64);
        let failure: RefCell<Option<VerifyError>> = RefCell::new(None);
        let q = |t: f64| -> f64 {
            let c = st.factor_at(t);
            if c == 0.0 {
                return 0.0;
            }
            match self.transform(t + st.shift) {
                Ok((v, e)) => {
                    f_err.set(f_err.get().max(e));
                    f_max.set(f_max.get().max(v.norm()));
                    c * v.norm_sqr()
                }
                Err(err) => {
                    failure.borrow_mut().get_or_insert(err);
                    0.0
                }
            }
        };
        let mut value = 0.0;
        let mut quad_err = 0.0;
        for part in domain.parts() {
            let mut cuts = vec![part.lo];
            cuts.extend(kinks.iter().copied().filter(|k| part.lo < *k && *k < part.hi));
            cuts.push(part.hi);
            for c in cuts.windows(2) {
                let len = c[1] - c[0];
                let cfg = Refinement {
                    points: acc.quad_points,
                    initial_panels: (len * self.mu_len / 4.0).ceil() as usize + 1,
                    max_panels: acc.max_panels,
                    tolerance: acc.error_budget * len / total,
                };
                let est = adaptive(c[0], c[1], cfg, q);
                value += est.value;
                quad_err += est.error + 16.0 * f64::EPSILON * est.value.abs();
            }
        }
        if let Some(err) = failure.into_inner() {
            return Err(err);
        }
        let sup = st.weight * st.factor_sup();
        let (e, m) = (f_err.get(), f_max.get());
        let tail = if windowed {
            self.decay
                .as_ref()
                .and_then(|d| d.line_tail(self.window))
                .map(|t| sup * t)
        } else {
            Some(0.0)
        };
        Ok(Part {
            value: st.weight * value,
            error: st.weight * quad_err + sup * total * (2.0 * m * e + e * e),
            tail,
        })
    }
}

/// Density of `μ` with respect to Lebesgue measure as a piecewise
/// exponential, when it is piecewise constant.
fn lebesgue_profile(mu: &MeasureExpr) -> Option<PwExp> {
    let one = Complex64::new(1.0, 0.0);
    match mu {
        MeasureExpr::Lebesgue => Some(PwExp::constant(one)),
        MeasureExpr::LebesgueOnSet { set } => Some(PwExp::constant(one).restrict(set)),
        MeasureExpr::Restrict { set, base } => Some(lebesgue_profile(base)?.restrict(set)),
        MeasureExpr::Density { phi, base } => {
            let (breaks, values) = phi.as_piecewise_constant()?;
            let mut g = lebesgue_profile(base)?.mul_steps(breaks, values);
            if let Domain::Set(s) = phi.domain() {
                g = g.restrict(s);
            }
            Some(g)
        }
        MeasureExpr::Scale { alpha, base } => Some(lebesgue_profile(base)?.scale(Complex64::new(*alpha, 0.0))),
        MeasureExpr::Sum { left, right } => {
            let mut g = lebesgue_profile(left)?;
            g.pieces.extend(lebesgue_profile(right)?.pieces);
            Some(g)
        }
        MeasureExpr::Translate { shift, base } if shift.len() == 1 => Some(lebesgue_profile(base)?.shift(-shift[0])),
        MeasureExpr::Normalize { base } => {
            let m = total_mass(base).ok()?.value()?;
            // slightly inflated so the derived tail stays an upper bound
            Some(lebesgue_profile(base)?.scale(Complex64::new((1.0 + 1e-12) / m, 0.0)))
        }
        _ => None,
    }
}

/// Decay profile of `F = (f dμ)^`, available when `f dμ` is a compactly
/// supported piecewise exponential times Lebesgue measure.
fn transform_decay(f: &TestFunction, mu: &MeasureExpr) -> Option<Decay> {
    let h = f.to_pwexp()?.mul(&lebesgue_profile(mu)?);
    h.decay()
}

fn lattice_tail(t: &Truncation, decay: Option<&Decay>) -> Option<f64> {
    match t {
        Truncation::Lattice {
            lo,
            hi,
            weight_sup,
            spread,
        } => {
            let cut = (-lo).min(*hi) as f64;
            decay?.lattice_tail(cut, *spread).map(|x| weight_sup * x)
        }
    }
}

/// Shared state of one verification run.
struct Run<'a> {
    ev: Evaluator,
    mu: &'a MeasureExpr,
    nu: &'a MeasureExpr,
    truncation: Option<&'a Truncation>,
    window: f64,
    mu_len: f64,
    /// Exact atoms of `μ` and `ν` when both are purely atomic.
    atomic: Option<(Arc<Atoms>, Arc<Atoms>)>,
}

impl<'a> Run<'a> {
    fn new(
        mu: &'a MeasureExpr,
        nu: &'a MeasureExpr,
        truncation: Option<&'a Truncation>,
        opts: &VerifyOptions,
    ) -> Result<Self, VerifyError> {
        opts.accuracy.check()?;
        let ev = Evaluator::new(opts.accuracy);
        let atomic = if mu.is_purely_atomic() && nu.is_purely_atomic() {
            let (a, b) = (exact_atoms(&ev, mu)?, exact_atoms(&ev, nu)?);
            if a.dim() != b.dim() {
                return Err(MeasureError::Dimension(format!("mu in ℝ^{} but nu in ℝ^{}", a.dim(), b.dim())).into());
            }
            Some((a, b))
        } else {
            None
        };
        let mu_len = support_superset(mu).hull().map_or(1.0, |h| h.length().max(1.0));
        Ok(Self {
            ev,
            mu,
            nu,
            truncation,
            window: opts.window,
            mu_len,
            atomic,
        })
    }

    fn record(&self, id: usize, f: &TestFunction) -> Result<RatioRecord, VerifyError> {
        let (norm, norm_err) = match norm_with(&self.ev, f, self.mu) {
            Ok(n) => n,
            Err(VerifyError::ZeroNorm) => {
                return Ok(RatioRecord {
                    id,
                    ratio: None,
                    error: 0.0,
                    tail: None,
                })
            }
            Err(e) => return Err(e),
        };
        let decay = transform_decay(f, self.mu);
        let mut part = match &self.atomic {
            Some((m, n)) => {
                let a: Vec<Complex64> = values_at(f, m)?
                    .into_iter()
                    .zip(m.weights())
                    .map(|(v, w)| v * w)
                    .collect();
                let mut out = Part::ZERO;
                for (lambda, c) in n.iter() {
                    let (v, e) = atomic_transform(m, &a, lambda);
                    out.value += c * v.norm_sqr();
                    out.error += c * (2.0 * v.norm() * e + e * e) + 4.0 * f64::EPSILON * c * v.norm_sqr();
                }
                out
            }
            None => Probe {
                ev: &self.ev,
                f,
                mu: self.mu,
                window: self.window,
                mu_len: self.mu_len,
                decay: decay.clone(),
            }
            .walk(self.nu, &Frame::root())?,
        };
        if let Some(t) = self.truncation {
            let extra = lattice_tail(t, decay.as_ref());
            part.tail = part.tail.zip(extra).map(|(a, b)| a + b);
        }
        let ratio = part.value / norm;
        let num_err = (part.error + ratio * norm_err) / (norm - norm_err) + 4.0 * f64::EPSILON * ratio;
        let tail = part.tail.map(|t| t / (norm - norm_err));
        Ok(RatioRecord {
            id,
            ratio: Some(ratio),
            error: num_err + tail.unwrap_or(0.0),
            tail,
        })
    }
}

/// Frame ratio of a single test function.
pub fn frame_ratio(
    f: &TestFunction,
    mu: &MeasureExpr,
    nu: &MeasureExpr,
    truncation: Option<&Truncation>,
    opts: &VerifyOptions,
) -> Result<RatioRecord, VerifyError> {
    let r = Run::new(mu, nu, truncation, opts)?.record(0, f)?;
    if r.ratio.is_none() {
        return Err(VerifyError::ZeroNorm);
    }
    Ok(r)
}

fn disc_point(rng: &mut ChaCha8Rng) -> Complex64 {
    let r = rng.random::<f64>().sqrt();
    Complex64::from_polar(r, 2.0 * PI * rng.random::<f64>())
}

/// A deterministic family of `count` test functions, the constant function
/// first. Members with zero norm in `L²(μ)` are redrawn.
pub fn gen_test_family(
    mu: &MeasureExpr,
    kind: FamilyKind,
    count: usize,
    max_degree: u32,
    seed: u64,
    acc: &Accuracy,
) -> Result<Vec<TestFunction>, VerifyError> {
    if count == 0 {
        return Err(VerifyError::EmptyFamily);
    }
    let ev = Evaluator::new(*acc);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let one = Complex64::new(1.0, 0.0);
    let atoms = match kind {
        FamilyKind::PointValues => Some(exact_atoms(&ev, mu)?),
        _ => None,
    };
    let hull = match kind {
        FamilyKind::Step => Some(support_superset(mu).hull().ok_or_else(|| {
            VerifyError::Unevaluable("step families need a bounded support".into())
        })?),
        _ => None,
    };
    let mut out = Vec::with_capacity(count);
    out.push(match &atoms {
        Some(a) => TestFunction::point_values(a, vec![one; a.len()])?,
        None => TestFunction::constant(),
    });
    while out.len() < count {
        let mut attempts = 0;
        let f = loop {
            let f = match kind {
                FamilyKind::Trig => {
                    let d = i64::from(rng.random_range(0..=max_degree));
                    TestFunction::trig((-d..=d).map(|k| (k, disc_point(&mut rng))).collect())
                }
                FamilyKind::Step => {
                    let h = hull.expect("hull computed for step families");
                    let k = rng.random_range(2..=5usize);
                    let mut breaks: Vec<f64> = (0..k).map(|_| h.lo + h.length() * rng.random::<f64>()).collect();
                    breaks.sort_by(f64::total_cmp);
                    breaks.dedup();
                    let mut values = vec![Complex64::new(0.0, 0.0); breaks.len() + 1];
                    for v in &mut values[1..breaks.len()] {
                        *v = disc_point(&mut rng);
                    }
                    TestFunction::step(breaks, values)?
                }
                FamilyKind::PointValues => {
                    let a = atoms.as_ref().expect("atoms realized for point-value families");
                    TestFunction::point_values(a, (0..a.len()).map(|_| disc_point(&mut rng)).collect())?
                }
            };
            match norm_with(&ev, &f, mu) {
                Ok(_) => break f,
                Err(VerifyError::ZeroNorm) if attempts < 100 => attempts += 1,
                Err(e) => return Err(e),
            }
        };
        out.push(f);
    }
    Ok(out)
}

/// Frame ratios of every family member, compared against `cert`.
///
/// Upper violations are always decisive since a truncated frame measure only
/// lowers the ratio. Lower violations count only where the truncation tail
/// is certified; elsewhere they make the run inconclusive.
pub fn estimate_bounds(
    mu: &MeasureExpr,
    nu: &MeasureExpr,
    family: &[TestFunction],
    cert: Option<&BoundCert>,
    truncation: Option<&Truncation>,
    opts: &VerifyOptions,
) -> Result<FrameReport, VerifyError> {
    let run = Run::new(mu, nu, truncation, opts)?;
    let ratios = family
        .par_iter()
        .enumerate()
        .map(|(i, f)| run.record(i, f))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(assess(ratios, cert, truncation))
}

fn assess(ratios: Vec<RatioRecord>, cert: Option<&BoundCert>, truncation: Option<&Truncation>) -> FrameReport {
    let defined: Vec<(f64, &RatioRecord)> = ratios.iter().filter_map(|r| r.ratio.map(|x| (x, r))).collect();
    let emp_lower = defined.iter().map(|d| d.0).reduce(f64::min);
    let emp_upper = defined.iter().map(|d| d.0).reduce(f64::max);
    let mut notes = Vec::new();
    if let Some(Truncation::Lattice { lo, hi, .. }) = truncation {
        notes.push(format!("frame measure truncated to atoms in [{lo}, {hi}]"));
    }
    let undefined = ratios.len() - defined.len();
    if undefined > 0 {
        notes.push(format!("{undefined} test functions have zero norm; ratio undefined"));
    }
    if ratios.is_empty() {
        notes.push("empty test family".into());
    }
    let uncertified = defined.iter().filter(|d| d.1.tail.is_none()).count();
    if uncertified > 0 {
        notes.push(format!(
            "{uncertified} ratios cut off without a certified tail; they only bound the true ratio from below"
        ));
    }
    let verdict = match cert {
        None => {
            notes.push("no certificate supplied".into());
            Verdict::Inconclusive
        }
        Some(c) => {
            let upper = defined.iter().filter(|(x, r)| x - r.error > c.b()).count();
            let low: Vec<_> = if c.kind().has_lower_bound() {
                defined.iter().filter(|(x, r)| x + r.error < c.a()).collect()
            } else {
                Vec::new()
            };
            let lower = low.iter().filter(|d| d.1.tail.is_some()).count();
            let unsure = low.len() - lower;
            if upper > 0 {
                notes.push(format!("{upper} ratios exceed B = {} beyond their error", c.b()));
            }
            if lower > 0 {
                notes.push(format!("{lower} ratios fall below A = {} beyond their error", c.a()));
            }
            if unsure > 0 {
                notes.push(format!(
                    "{unsure} ratios fall below A = {} but the truncation tail is not certified",
                    c.a()
                ));
            }
            if upper > 0 {
                Verdict::UpperViolated
            } else if lower > 0 {
                Verdict::LowerViolated
            } else if unsure > 0 || defined.is_empty() {
                Verdict::Inconclusive
            } else {
                Verdict::Consistent
            }
        }
    };
    FrameReport {
        ratios,
        emp_lower,
        emp_upper,
        cert: cert.cloned(),
        verdict,
        notes,
    }
}

/// Generates a family on `pair.mu` and checks it against the pair's
/// certificate and truncation.
pub fn verify_pair(
    pair: &CertifiedPair,
    kind: FamilyKind,
    count: usize,
    max_degree: u32,
    seed: u64,
    opts: &VerifyOptions,
) -> Result<FrameReport, VerifyError> {
    let family = gen_test_family(&pair.mu, kind, count, max_degree, seed, &opts.accuracy)?;
    estimate_bounds(
        &pair.mu,
        &pair.nu,
        &family,
        Some(&pair.cert),
        pair.truncation.as_ref(),
        opts,
    )
}

/// Extreme values of the frame ratio on the finite-dimensional `L²(μ)`,
/// with test functions attaining them.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactBounds {
    pub lower: f64,
    pub upper: f64,
    pub lower_vec: TestFunction,
    pub upper_vec: TestFunction,
}

/// Exact frame bounds of a finite atomic pair: the extreme eigenvalues of
/// `H = Σ_λ c_λ a_λ a_λ*` with `(a_λ)_j = √w_j e^{2πiλ·x_j}`, the frame
/// quadratic form written in the orthonormal basis `δ_{x_j}/√w_j` of `L²(μ)`.
pub fn exact_frame_bounds_atomic(mu: &MeasureExpr, nu: &MeasureExpr, cap: usize) -> Result<ExactBounds, VerifyError> {
    let ev = Evaluator::new(Accuracy::default());
    let m = exact_atoms(&ev, mu)?;
    let n = exact_atoms(&ev, nu)?;
    if m.len() > cap {
        return Err(VerifyError::AtomCap { atoms: m.len(), cap });
    }
    if m.dim() != n.dim() {
        return Err(MeasureError::Dimension(format!("mu in ℝ^{} but nu in ℝ^{}", m.dim(), n.dim())).into());
    }
    let sqrt_w: Vec<f64> = m.weights().iter().map(|w| w.sqrt()).collect();
    let a = DMatrix::from_fn(n.len(), m.len(), |l, j| {
        let phase: f64 = n.point(l).iter().zip(m.point(j)).map(|(s, x)| s * x).sum();
        cis_turns(-phase) * (n.weights()[l].sqrt() * sqrt_w[j])
    });
    let h = a.adjoint() * a;
    let eig = h.symmetric_eigen();
    let (mut lo, mut hi) = (0, 0);
    for (i, v) in eig.eigenvalues.iter().enumerate() {
        if *v < eig.eigenvalues[lo] {
            lo = i;
        }
        if *v > eig.eigenvalues[hi] {
            hi = i;
        }
    }
    let direction = |k: usize| -> Result<TestFunction, VerifyError> {
        let g = eig.eigenvectors.column(k);
        let values = g.iter().zip(&sqrt_w).map(|(z, s)| z / s).collect();
        Ok(TestFunction::point_values(&m, values)?)
    };
    Ok(ExactBounds {
        lower: eig.eigenvalues[lo].max(0.0),
        upper: eig.eigenvalues[hi],
        lower_vec: direction(lo)?,
        upper_vec: direction(hi)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitEntry {
    pub n: u32,
    pub report: FrameReport,
    /// Largest change of the empirical bounds relative to the first entry.
    #[serde(with = "real")]
    pub drift: f64,
    /// Combined error of this run and the first one.
    #[serde(with = "real")]
    pub budget: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub kind: ApproxKind,
    pub entries: Vec<LimitEntry>,
    pub all_consistent: bool,
    pub drift_ok: bool,
}

/// Runs the family on `(μ, ν ∗ ρ_n)` for each `n`, where `ρ_n` is the `n`-th
/// member of the approximate identity `kind`, and checks that every run is
/// consistent with the pair's unchanged certificate and that the empirical
/// bounds move by no more than the runs' combined error.
pub fn approx_identity_limit_check(
    pair: &CertifiedPair,
    kind: ApproxKind,
    n_list: &[u32],
    family: &[TestFunction],
    opts: &VerifyOptions,
) -> Result<LimitReport, VerifyError> {
    if !pair.cert.kind().has_lower_bound() {
        return Err(VerifyError::Unevaluable("the limit check needs a frame certificate".into()));
    }
    let mut entries: Vec<LimitEntry> = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let rho = approximate_identity(kind, n)?;
        let smoothed = convolve_frame_measure_with_probability(pair, &rho)
            .map_err(|e| VerifyError::Unevaluable(e.to_string()))?;
        let report = estimate_bounds(
            &smoothed.mu,
            &smoothed.nu,
            family,
            Some(&smoothed.cert),
            smoothed.truncation.as_ref(),
            opts,
        )?;
        let (drift, budget) = match entries.first() {
            None => (0.0, 2.0 * report.max_error()),
            Some(first) => {
                let gap = |a: Option<f64>, b: Option<f64>| a.zip(b).map_or(0.0, |(x, y)| (x - y).abs());
                (
                    gap(report.emp_upper, first.report.emp_upper).max(gap(report.emp_lower, first.report.emp_lower)),
                    report.max_error() + first.report.max_error(),
                )
            }
        };
        entries.push(LimitEntry {
            n,
            report,
            drift,
            budget,
        });
    }
    Ok(LimitReport {
        kind,
        all_consistent: entries.iter().all(|e| e.report.verdict == Verdict::Consistent),
        drift_ok: entries.iter().all(|e| e.drift <= e.budget),
        entries,
    })
}
