//! Transformers turning certified pairs `(μ, ν, bounds)` into new certified
//! pairs, each applying the bound arithmetic of its rule.

mod catalog;
mod cert;

use serde::{Deserialize, Serialize};

use crate::error::{CertError, MeasureError};
use crate::interval::IntervalUnion;
use crate::measure::{
    finite_mass, support_superset, validate, Atoms, BoundedDensity, Domain, MeasureExpr, SupportSet,
};
use crate::real;

pub use catalog::{canonical_pairs, mu4, mu4_dual, CatalogOptions};
pub use cert::{BoundCert, CertKind, Rule};

/// Default cap on the length of convolution chains.
pub const DEFAULT_CHAIN_CAP: usize = 8;

/// How a discrete frame measure was cut to finitely many atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Truncation {
    /// `ν` is the part on `[lo, hi]` of a measure `Σ_{n∈ℤ} c_n δ_n ∗ ρ` with
    /// `c_n ≤ weight_sup` and `ρ` a probability measure supported in
    /// `[−spread, spread]`.
    Lattice {
        lo: i64,
        hi: i64,
        #[serde(with = "real")]
        weight_sup: f64,
        #[serde(with = "real")]
        spread: f64,
    },
}

impl Truncation {
    pub fn lattice(cut: i64, weight_sup: f64) -> Self {
        Truncation::Lattice {
            lo: -cut,
            hi: cut,
            weight_sup,
            spread: 0.0,
        }
    }

    fn scaled(&self, c: f64) -> Self {
        match self {
            Truncation::Lattice { lo, hi, weight_sup, spread } => Truncation::Lattice {
                lo: *lo,
                hi: *hi,
                weight_sup: weight_sup * c,
                spread: *spread,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifiedPair {
    pub mu: MeasureExpr,
    pub nu: MeasureExpr,
    pub cert: BoundCert,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<Truncation>,
}

impl CertifiedPair {
    /// Builds a pair, rejecting measures that fail validation.
    pub fn new(mu: MeasureExpr, nu: MeasureExpr, cert: BoundCert) -> Result<Self, CertError> {
        for (name, m) in [("mu", &mu), ("nu", &nu)] {
            if let Some(v) = validate(m).into_iter().next() {
                return Err(CertError::Precondition(format!("{name} at {}: {}", v.path, v.message)));
            }
        }
        Ok(Self {
            mu,
            nu,
            cert,
            truncation: None,
        })
    }

    pub fn with_truncation(mut self, t: Truncation) -> Self {
        self.truncation = Some(t);
        self
    }

    fn with(&self, mu: MeasureExpr, nu: MeasureExpr, rule: Rule) -> Result<Self, CertError> {
        Ok(Self {
            mu,
            nu,
            cert: self.cert.then(rule)?,
            truncation: self.truncation.clone(),
        })
    }
}

fn require_frame(pair: &CertifiedPair) -> Result<(), CertError> {
    if pair.cert.kind().has_lower_bound() {
        Ok(())
    } else {
        Err(CertError::Precondition("needs a frame certificate, got a Bessel-only one".into()))
    }
}

fn require_positive(name: &str, x: f64) -> Result<(), CertError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CertError::Precondition(format!("{name} must be positive, got {x}")))
    }
}

/// Whether `set` contains the support of a measure, up to finitely many
/// interval endpoints (a null set for the continuous parts).
fn set_covers(set: &IntervalUnion, supp: &SupportSet) -> bool {
    match supp {
        SupportSet::Points { dim: 1, coords } => coords.iter().all(|x| set.contains(*x)),
        SupportSet::Points { coords, .. } => coords.is_empty(),
        other => other.hull().is_some() && covers_superset(set, other),
    }
}

fn covers_superset(set: &IntervalUnion, supp: &SupportSet) -> bool {
    match supp {
        SupportSet::Intervals { set: s } | SupportSet::Superset { set: s } => set.covers(s, 0.0),
        SupportSet::Attractor { hull, .. } => set.parts().iter().any(|p| p.lo <= hull.lo && hull.hi <= p.hi),
        _ => false,
    }
}

/// Envelope `m ≤ φ ≤ M` must hold on all of `supp` (not only where `φ` is defined).
fn envelope_covers(phi: &BoundedDensity, supp: &SupportSet) -> bool {
    match phi.domain() {
        Domain::Line => true,
        Domain::Set(s) => set_covers(s, supp),
    }
}

fn mass_upper(mu: &MeasureExpr) -> Result<f64, CertError> {
    match crate::measure::total_mass(mu)? {
        crate::measure::Mass::Finite { value, error } => Ok(value + error),
        crate::measure::Mass::Infinite => Err(MeasureError::InfiniteMass.into()),
    }
}

/// Every finite measure is a Bessel measure for every finite measure, with
/// bound `μ(ℝᵈ)·ν(ℝᵈ)`.
pub fn bessel_finite_pair(mu: &MeasureExpr, nu: &MeasureExpr) -> Result<BoundCert, CertError> {
    let (a, b) = (mass_upper(mu)?, mass_upper(nu)?);
    BoundCert::from_rules(vec![Rule::FiniteBessel { mass_mu: a, mass_nu: b }])
}

/// `ν = Σ_{λ∈Λ} c δ_λ` with equal weights `c = B/(#Λ·μ(ℝᵈ))`, a Bessel
/// measure for `μ` with bound `B`.
pub fn discrete_bessel(points: &[Vec<f64>], budget: f64, mu: &MeasureExpr) -> Result<CertifiedPair, CertError> {
    require_positive("budget", budget)?;
    if points.is_empty() {
        return Err(CertError::Precondition("empty point set".into()));
    }
    let dim = points[0].len();
    let mass = finite_mass(mu)?;
    require_positive("mass of mu", mass)?;
    let c = budget / (points.len() as f64 * mass);
    let atoms = Atoms::new(
        dim,
        points.iter().flatten().copied().collect(),
        vec![c; points.len()],
    )?;
    let cert = BoundCert::from_rules(vec![Rule::DiscreteBessel { budget }])?;
    CertifiedPair::new(mu.clone(), MeasureExpr::atomic(atoms), cert)
}

/// Bessel bound for `μ₁ + μ₂` from bounds for `μ₁` and `μ₂` with the same `ν`.
pub fn sum_bessel(c1: &BoundCert, c2: &BoundCert) -> Result<BoundCert, CertError> {
    require_positive("B1", c1.b())?;
    require_positive("B2", c2.b())?;
    c1.then(Rule::SumBessel { other_upper: c2.b() })
}

/// [`sum_bessel`] on pairs sharing `ν`; the result has base `μ₁ + μ₂`.
pub fn sum_bessel_pairs(p1: &CertifiedPair, p2: &CertifiedPair) -> Result<CertifiedPair, CertError> {
    if p1.nu != p2.nu {
        return Err(CertError::Precondition("the two pairs have different frame measures".into()));
    }
    Ok(CertifiedPair {
        mu: p1.mu.clone().plus(p2.mu.clone()),
        nu: p1.nu.clone(),
        cert: sum_bessel(&p1.cert, &p2.cert)?,
        truncation: p1.truncation.clone(),
    })
}

/// `μ' = χ_E φ dμ` (or `φ dμ` without `E`): bounds `(mA, MB)`.
pub fn density_restrict(
    pair: &CertifiedPair,
    set: Option<&IntervalUnion>,
    phi: &BoundedDensity,
) -> Result<CertifiedPair, CertError> {
    require_frame(pair)?;
    require_positive("lower envelope", phi.lower())?;
    let supp = support_superset(&pair.mu);
    let mu = match set {
        Some(e) => {
            let inside = match &supp {
                SupportSet::Points { dim: 1, coords } => coords.iter().any(|x| e.contains(*x)),
                SupportSet::Line => true,
                s => s.hull().is_some_and(|h| e.clip(h.lo, h.hi).is_some()),
            };
            if !inside {
                return Err(CertError::Precondition("E does not meet the support of mu".into()));
            }
            let restricted = support_superset(&pair.mu.clone().restrict(e.clone()));
            if !envelope_covers(phi, &restricted) {
                return Err(CertError::Precondition("density envelope does not cover E".into()));
            }
            pair.mu.clone().density(phi.clone()).restrict(e.clone())
        }
        None => {
            if !envelope_covers(phi, &supp) {
                return Err(CertError::Precondition("density envelope does not cover supp mu".into()));
            }
            pair.mu.clone().density(phi.clone())
        }
    };
    pair.with(mu, pair.nu.clone(), Rule::DensityRestrict { m: phi.lower(), big_m: phi.upper() })
}

/// `μ' = αμ`: bounds `(αA, αB)`.
pub fn scale_base(pair: &CertifiedPair, alpha: f64) -> Result<CertifiedPair, CertError> {
    require_positive("alpha", alpha)?;
    pair.with(pair.mu.clone().scale(alpha), pair.nu.clone(), Rule::ScaleBase { alpha })
}

/// Weight applied to the frame measure.
#[derive(Debug, Clone, PartialEq)]
pub enum FrameWeight {
    Constant(f64),
    Density(BoundedDensity),
}

/// `ν' = φ dν` (or `αν`): bounds `(mA, MB)`.
pub fn scale_frame_measure(pair: &CertifiedPair, weight: &FrameWeight) -> Result<CertifiedPair, CertError> {
    let (nu, m, big_m) = match weight {
        FrameWeight::Constant(alpha) => {
            require_positive("alpha", *alpha)?;
            (pair.nu.clone().scale(*alpha), *alpha, *alpha)
        }
        FrameWeight::Density(phi) => {
            require_positive("lower envelope", phi.lower())?;
            if !envelope_covers(phi, &support_superset(&pair.nu)) {
                return Err(MeasureError::EnvelopeViolation("envelope does not hold on supp nu".into()).into());
            }
            (pair.nu.clone().density(phi.clone()), phi.lower(), phi.upper())
        }
    };
    let mut out = pair.with(pair.mu.clone(), nu, Rule::ScaleFrameMeasure { m, big_m })?;
    out.truncation = pair.truncation.as_ref().map(|t| t.scaled(big_m));
    Ok(out)
}

/// `αν₁ + βν₂` for two frame measures of the same `μ`.
pub fn mix_frame_measures(
    p1: &CertifiedPair,
    p2: &CertifiedPair,
    alpha: f64,
    beta: f64,
) -> Result<CertifiedPair, CertError> {
    require_positive("alpha", alpha)?;
    require_positive("beta", beta)?;
    if p1.mu != p2.mu {
        return Err(CertError::MeasureMismatch);
    }
    let nu = p1.nu.clone().scale(alpha).plus(p2.nu.clone().scale(beta));
    let rule = Rule::Mix {
        alpha,
        beta,
        other_a: p2.cert.a(),
        other_b: p2.cert.b(),
    };
    let mut out = p1.with(p1.mu.clone(), nu, rule)?;
    out.truncation = match (&p1.truncation, &p2.truncation) {
        (None, None) => None,
        (Some(t), None) => Some(t.scaled(alpha)),
        (None, Some(t)) => Some(t.scaled(beta)),
        (
            Some(Truncation::Lattice { lo, hi, weight_sup: w1, spread: s1 }),
            Some(Truncation::Lattice { lo: lo2, hi: hi2, weight_sup: w2, spread: s2 }),
        ) => Some(Truncation::Lattice {
            lo: (*lo).max(*lo2),
            hi: (*hi).min(*hi2),
            weight_sup: alpha * w1 + beta * w2,
            spread: s1.max(*s2),
        }),
    };
    Ok(out)
}

/// `ν' = ν ∗ ρ` for a probability measure `ρ`: bounds unchanged.
pub fn convolve_frame_measure_with_probability(
    pair: &CertifiedPair,
    rho: &MeasureExpr,
) -> Result<CertifiedPair, CertError> {
    let m = finite_mass(rho)?;
    if (m - 1.0).abs() > 1e-12 {
        return Err(CertError::Precondition(format!("rho has mass {m}, not 1")));
    }
    let mut out = pair.with(pair.mu.clone(), pair.nu.clone().convolve(rho.clone()), Rule::ConvolveProbability)?;
    if let Some(Truncation::Lattice { lo, hi, weight_sup, spread }) = &pair.truncation {
        let r = support_superset(rho).hull().map_or(f64::INFINITY, |h| h.radius());
        out.truncation = Some(Truncation::Lattice {
            lo: *lo,
            hi: *hi,
            weight_sup: *weight_sup,
            spread: spread + r,
        });
    }
    Ok(out)
}

/// The set `F` of a base measure `χ_F dλ`.
fn indicator_set(mu: &MeasureExpr) -> Option<IntervalUnion> {
    match mu {
        MeasureExpr::LebesgueOnSet { set } => Some(set.clone()),
        MeasureExpr::Restrict { set, base } if **base == MeasureExpr::Lebesgue => Some(set.clone()),
        _ => None,
    }
}

/// `μ' = χ_F d(φλ ∗ ρ₁ ∗ ⋯ ∗ ρₙ)` with `ρ_k = (1/λ(E_k)) χ_{E_k} dλ` when
/// normalized and `χ_{E_k} dλ` otherwise. Since `φ ∗ ρ₁ ∗ ⋯` keeps the
/// envelope of `φ`, bounds become `(mA, MB)`, times `Π λ(E_k)` when the
/// stages are not normalized.
pub fn convolution_chain(
    base: &CertifiedPair,
    phi: &BoundedDensity,
    sets: &[IntervalUnion],
    normalized: bool,
    cap: usize,
) -> Result<CertifiedPair, CertError> {
    require_frame(base)?;
    if sets.len() > cap {
        return Err(CertError::ChainTooLong { len: sets.len(), cap });
    }
    let f = indicator_set(&base.mu)
        .ok_or_else(|| CertError::Precondition("base measure must be χ_F dλ".into()))?;
    if *phi.domain() != Domain::Line {
        return Err(CertError::Precondition("φ must be defined on the whole line".into()));
    }
    require_positive("lower envelope", phi.lower())?;
    let mut inner = MeasureExpr::Lebesgue.density(phi.clone());
    let mut lengths = Vec::with_capacity(sets.len());
    for e in sets {
        lengths.push(e.length());
        let leaf = MeasureExpr::lebesgue_on(e.clone());
        inner = inner.convolve(if normalized { leaf.normalize() } else { leaf });
    }
    let rule = Rule::ConvolutionChain {
        m: phi.lower(),
        big_m: phi.upper(),
        lengths,
        normalized,
    };
    base.with(inner.restrict(f), base.nu.clone(), rule)
}

/// `μ' = μ + Σ χ_{E_k} φ_k dμ`, each `E_k` covering `supp μ` up to a null
/// set: bounds `((1 + Σm_k)A, (1 + ΣM_k)B)`.
pub fn sum_with_densities(
    pair: &CertifiedPair,
    parts: &[(IntervalUnion, BoundedDensity)],
) -> Result<CertifiedPair, CertError> {
    if parts.is_empty() {
        return Ok(pair.clone());
    }
    let supp = support_superset(&pair.mu);
    let mut mu = pair.mu.clone();
    let (mut ms, mut big_ms) = (Vec::new(), Vec::new());
    for (k, (e, phi)) in parts.iter().enumerate() {
        require_positive("lower envelope", phi.lower())?;
        if !set_covers(e, &supp) {
            return Err(CertError::Precondition(format!("E_{} does not cover supp mu", k + 1)));
        }
        if !envelope_covers(phi, &supp) {
            return Err(CertError::Precondition(format!("envelope of φ_{} does not cover supp mu", k + 1)));
        }
        mu = mu.plus(pair.mu.clone().density(phi.clone()).restrict(e.clone()));
        ms.push(phi.lower());
        big_ms.push(phi.upper());
    }
    pair.with(mu, pair.nu.clone(), Rule::SumWithDensities { m: ms, big_m: big_ms })
}

/// `μ' = (φ ∗ ρ₁ ∗ ⋯ ∗ ρₙ) dμ` for probability measures `ρ_k`: bounds `(mA, MB)`.
pub fn smooth_base(
    pair: &CertifiedPair,
    phi: &BoundedDensity,
    rhos: &[MeasureExpr],
    resolution: f64,
    cap: usize,
) -> Result<CertifiedPair, CertError> {
    require_frame(pair)?;
    if rhos.len() > cap {
        return Err(CertError::ChainTooLong { len: rhos.len(), cap });
    }
    require_positive("lower envelope", phi.lower())?;
    let smoothed = BoundedDensity::smoothed(phi.clone(), rhos.to_vec(), resolution)?;
    let rule = Rule::SmoothBase {
        m: phi.lower(),
        big_m: phi.upper(),
        chain: rhos.len(),
    };
    pair.with(pair.mu.clone().density(smoothed), pair.nu.clone(), rule)
}

/// `μ' = δ_t ∗ μ`: bounds unchanged.
pub fn translate_pair(pair: &CertifiedPair, t: Vec<f64>) -> Result<CertifiedPair, CertError> {
    let mu = pair.mu.clone().translate(t.clone());
    mu.dim()?;
    pair.with(mu, pair.nu.clone(), Rule::Translate { t })
}
