use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use super::{Atoms, Ifs, MeasureExpr, RealizeOptions};
use crate::error::MeasureError;
use crate::interval::IntervalUnion;
use crate::real;

/// Grid size used to spot-check density envelopes.
pub const ENVELOPE_GRID: usize = 10_000;

/// Where a density is defined; it vanishes outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "set", rename_all = "snake_case")]
pub enum Domain {
    Line,
    Set(IntervalUnion),
}

impl Domain {
    pub fn contains(&self, x: f64) -> bool {
        match self {
            Domain::Line => true,
            Domain::Set(s) => s.contains(x),
        }
    }

    pub fn as_set(&self) -> Option<&IntervalUnion> {
        match self {
            Domain::Line => None,
            Domain::Set(s) => Some(s),
        }
    }
}

/// How a density is evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum DensityForm {
    /// `values[i]` on `[breaks[i-1], breaks[i])`; the outer pieces are unbounded.
    PiecewiseConstant {
        #[serde(with = "real::seq")]
        breaks: Vec<f64>,
        #[serde(with = "real::seq")]
        values: Vec<f64>,
    },
    /// Polynomial `Σ c_k x^k` per piece, pieces as above. Unbounded outer
    /// pieces on a whole-line domain must be constant.
    PiecewisePolynomial {
        #[serde(with = "real::seq")]
        breaks: Vec<f64>,
        #[serde(with = "real::seq2")]
        coefficients: Vec<Vec<f64>>,
    },
    /// `|μ̂(x)|²` for the invariant measure of `ifs`, product truncated at `depth`.
    IfsPowerSpectrum { ifs: Ifs, depth: u32 },
    /// `φ ∗ ρ₁ ∗ ⋯ ∗ ρₙ`, evaluated against an atomic realization of the
    /// probability chain.
    Smoothed {
        phi: Arc<BoundedDensity>,
        rhos: Vec<MeasureExpr>,
        #[serde(with = "real")]
        resolution: f64,
        #[serde(skip)]
        chain: ChainCache,
    },
}

/// Lazily realized probability chain of a smoothed density.
#[derive(Debug, Clone, Default)]
pub struct ChainCache(OnceLock<Arc<Atoms>>);

impl PartialEq for ChainCache {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

/// A density `φ` with a stated envelope `lower ≤ φ ≤ upper` on its domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDensity")]
pub struct BoundedDensity {
    form: DensityForm,
    domain: Domain,
    #[serde(with = "real")]
    lower: f64,
    #[serde(with = "real")]
    upper: f64,
}

#[derive(Deserialize)]
struct RawDensity {
    form: DensityForm,
    domain: Domain,
    #[serde(with = "real")]
    lower: f64,
    #[serde(with = "real")]
    upper: f64,
}

impl TryFrom<RawDensity> for BoundedDensity {
    type Error = MeasureError;

    fn try_from(raw: RawDensity) -> Result<Self, Self::Error> {
        BoundedDensity::new(raw.form, raw.domain, raw.lower, raw.upper)
    }
}

impl BoundedDensity {
    /// Builds the density and spot-checks the envelope on a dense grid.
    pub fn new(
        form: DensityForm,
        domain: Domain,
        lower: f64,
        upper: f64,
    ) -> Result<Self, MeasureError> {
        let d = Self {
            form,
            domain,
            lower,
            upper,
        };
        d.check_shape()?;
        d.check_envelope()?;
        Ok(d)
    }

    /// The constant density `c` on `domain`.
    pub fn constant(c: f64, domain: Domain) -> Result<Self, MeasureError> {
        Self::new(
            DensityForm::PiecewiseConstant {
                breaks: vec![],
                values: vec![c],
            },
            domain,
            c,
            c,
        )
    }

    /// Piecewise-constant density with the envelope taken from its values.
    pub fn piecewise_constant(
        breaks: Vec<f64>,
        values: Vec<f64>,
        domain: Domain,
    ) -> Result<Self, MeasureError> {
        let relevant = relevant_values(&breaks, &values, &domain);
        let lower = relevant.iter().copied().fold(f64::INFINITY, f64::min);
        let upper = relevant.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self::new(
            DensityForm::PiecewiseConstant { breaks, values },
            domain,
            lower,
            upper,
        )
    }

    /// `|μ̂|²` of an IFS measure on `domain`. The lower envelope is measured on
    /// the check grid, not certified; on the whole line it is zero.
    pub fn ifs_power_spectrum(ifs: Ifs, depth: u32, domain: Domain) -> Result<Self, MeasureError> {
        let form = DensityForm::IfsPowerSpectrum { ifs, depth };
        let probe = Self {
            form,
            domain,
            lower: 0.0,
            upper: 1.0,
        };
        let lower = match &probe.domain {
            Domain::Line => 0.0,
            Domain::Set(_) => probe
                .check_grid()
                .into_iter()
                .map(|x| probe.eval(x))
                .fold(f64::INFINITY, f64::min),
        };
        Self::new(probe.form, probe.domain, lower, 1.0)
    }

    /// `φ ∗ ρ₁ ∗ ⋯ ∗ ρₙ` for probability measures `ρ_k`; the envelope of `φ`
    /// carries over.
    pub fn smoothed(
        phi: BoundedDensity,
        rhos: Vec<MeasureExpr>,
        resolution: f64,
    ) -> Result<Self, MeasureError> {
        if phi.domain != Domain::Line {
            return Err(MeasureError::InvalidDensity(
                "smoothing needs a density defined on the whole line".into(),
            ));
        }
        let (lower, upper) = (phi.lower, phi.upper);
        Self::new(
            DensityForm::Smoothed {
                phi: Arc::new(phi),
                rhos,
                resolution,
                chain: ChainCache::default(),
            },
            Domain::Line,
            lower,
            upper,
        )
    }

    pub fn form(&self) -> &DensityForm {
        &self.form
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn is_identically_one(&self) -> bool {
        self.domain == Domain::Line && self.lower == 1.0 && self.upper == 1.0
    }

    /// Breakpoints and values when piecewise constant.
    pub fn as_piecewise_constant(&self) -> Option<(&[f64], &[f64])> {
        match &self.form {
            DensityForm::PiecewiseConstant { breaks, values } => Some((breaks, values)),
            _ => None,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if !self.domain.contains(x) {
            return 0.0;
        }
        self.eval_form(x)
    }

    fn eval_form(&self, x: f64) -> f64 {
        match &self.form {
            DensityForm::PiecewiseConstant { breaks, values } => {
                values[breaks.partition_point(|b| *b <= x)]
            }
            DensityForm::PiecewisePolynomial {
                breaks,
                coefficients,
            } => {
                let c = &coefficients[breaks.partition_point(|b| *b <= x)];
                c.iter().rev().fold(0.0, |acc, ck| acc * x + ck)
            }
            DensityForm::IfsPowerSpectrum { ifs, depth } => {
                crate::transform::ifs_transform(ifs, x, *depth).value.norm_sqr()
            }
            DensityForm::Smoothed {
                phi,
                rhos,
                resolution,
                chain,
            } => {
                let atoms = chain.0.get_or_init(|| {
                    Arc::new(realize_chain(rhos, *resolution).unwrap_or_else(|_| Atoms::line([])))
                });
                atoms
                    .iter()
                    .map(|(y, w)| w * phi.eval(x - y[0]))
                    .sum()
            }
        }
    }

    /// Points where the density may fail to be smooth.
    pub fn kinks(&self) -> Vec<f64> {
        let mut ks = match &self.form {
            DensityForm::PiecewiseConstant { breaks, .. }
            | DensityForm::PiecewisePolynomial { breaks, .. } => breaks.clone(),
            _ => Vec::new(),
        };
        if let Domain::Set(s) = &self.domain {
            ks.extend(s.parts().iter().flat_map(|p| [p.lo, p.hi]));
        }
        ks.sort_by(f64::total_cmp);
        ks.dedup();
        ks
    }

    /// Lipschitz constant between kinks, if known.
    pub fn lipschitz(&self) -> Option<f64> {
        match &self.form {
            DensityForm::PiecewiseConstant { .. } => Some(0.0),
            DensityForm::PiecewisePolynomial {
                breaks,
                coefficients,
            } => {
                let mut lip: f64 = 0.0;
                for (i, c) in coefficients.iter().enumerate() {
                    if c.len() <= 1 {
                        continue;
                    }
                    let lo = if i == 0 { f64::NEG_INFINITY } else { breaks[i - 1] };
                    let hi = if i == breaks.len() { f64::INFINITY } else { breaks[i] };
                    let r = lo.abs().max(hi.abs());
                    if !r.is_finite() {
                        return None;
                    }
                    let d: f64 = c
                        .iter()
                        .enumerate()
                        .skip(1)
                        .map(|(k, ck)| k as f64 * ck.abs() * r.powi(k as i32 - 1))
                        .sum();
                    lip = lip.max(d);
                }
                Some(lip)
            }
            DensityForm::IfsPowerSpectrum { ifs, .. } => {
                // |d/dx |μ̂|²| ≤ 2|μ̂||μ̂'| ≤ 4π · sup|supp μ|
                Some(4.0 * std::f64::consts::PI * ifs.hull().radius())
            }
            DensityForm::Smoothed { phi, .. } => phi.lipschitz(),
        }
    }

    /// Bound on the sum of jump sizes (including the domain boundary).
    pub fn jump_total(&self) -> f64 {
        let inner = match &self.form {
            DensityForm::PiecewiseConstant { values, .. } => {
                values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
            }
            DensityForm::PiecewisePolynomial {
                breaks,
                coefficients,
            } => breaks
                .iter()
                .enumerate()
                .map(|(i, b)| {
                    let p = |c: &Vec<f64>| c.iter().rev().fold(0.0, |acc, ck| acc * b + ck);
                    (p(&coefficients[i + 1]) - p(&coefficients[i])).abs()
                })
                .sum(),
            DensityForm::IfsPowerSpectrum { .. } => 0.0,
            DensityForm::Smoothed { phi, .. } => phi.jump_total(),
        };
        let boundary = match &self.domain {
            Domain::Line => 0.0,
            Domain::Set(s) => 2.0 * s.parts().len() as f64 * self.upper,
        };
        inner + boundary
    }

    fn check_shape(&self) -> Result<(), MeasureError> {
        let bad = |m: &str| Err(MeasureError::InvalidDensity(m.to_string()));
        let sorted = |b: &[f64]| b.windows(2).all(|w| w[0] < w[1]) && b.iter().all(|x| x.is_finite());
        match &self.form {
            DensityForm::PiecewiseConstant { breaks, values } => {
                if values.len() != breaks.len() + 1 {
                    return bad("piecewise-constant density needs one more value than breaks");
                }
                if !sorted(breaks) {
                    return bad("breaks must be finite and strictly increasing");
                }
            }
            DensityForm::PiecewisePolynomial {
                breaks,
                coefficients,
            } => {
                if coefficients.len() != breaks.len() + 1 {
                    return bad("piecewise-polynomial density needs one more piece than breaks");
                }
                if !sorted(breaks) {
                    return bad("breaks must be finite and strictly increasing");
                }
                if coefficients.iter().any(|c| c.is_empty()) {
                    return bad("empty polynomial piece");
                }
                if self.domain == Domain::Line
                    && (coefficients[0].len() > 1 || coefficients[coefficients.len() - 1].len() > 1)
                {
                    return bad("unbounded outer pieces must be constant");
                }
            }
            DensityForm::IfsPowerSpectrum { ifs, depth } => {
                if *depth == 0 || ifs.digits.is_empty() || ifs.scale < 2 {
                    return bad("power spectrum needs depth ≥ 1 and a valid IFS");
                }
            }
            DensityForm::Smoothed {
                resolution, rhos, ..
            } => {
                if !(*resolution > 0.0) {
                    return bad("smoothing resolution must be positive");
                }
                for rho in rhos {
                    let m = super::finite_mass(rho)?;
                    if (m - 1.0).abs() > 1e-9 {
                        return bad(&format!("smoothing measure has mass {m}, expected 1"));
                    }
                }
            }
        }
        let zero_floor_ok = matches!(self.form, DensityForm::IfsPowerSpectrum { .. });
        let lower_ok = self.lower > 0.0 || (zero_floor_ok && self.lower == 0.0);
        if !(lower_ok && self.lower <= self.upper && self.upper.is_finite()) {
            return Err(MeasureError::EnvelopeViolation(format!(
                "envelope must satisfy 0 < m ≤ M < ∞, got m = {}, M = {}",
                self.lower, self.upper
            )));
        }
        Ok(())
    }

    fn check_grid(&self) -> Vec<f64> {
        let n = ENVELOPE_GRID;
        match &self.domain {
            Domain::Set(s) => {
                let total = s.length();
                s.parts()
                    .iter()
                    .flat_map(|p| {
                        let k = ((n as f64 * p.length() / total).ceil() as usize).max(2);
                        (0..k).map(move |i| p.lo + p.length() * i as f64 / (k - 1) as f64)
                    })
                    .collect()
            }
            Domain::Line => {
                let ks = self.kinks();
                let (lo, hi) = match (ks.first(), ks.last()) {
                    (Some(a), Some(b)) => (a - 1.0, b + 1.0),
                    _ => (-4.0, 4.0),
                };
                (0..n)
                    .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                    .collect()
            }
        }
    }

    fn check_envelope(&self) -> Result<(), MeasureError> {
        let tol = 1e-12 * self.upper.max(1.0);
        // the envelope holds almost everywhere, so breakpoints are skipped
        let kinks = self.kinks();
        for x in self.check_grid() {
            if kinks.binary_search_by(|k| k.total_cmp(&x)).is_ok() {
                continue;
            }
            let v = self.eval_form(x);
            if !(v >= self.lower - tol && v <= self.upper + tol) {
                return Err(MeasureError::EnvelopeViolation(format!(
                    "φ({x}) = {v} outside [{}, {}]",
                    self.lower, self.upper
                )));
            }
        }
        Ok(())
    }
}

fn relevant_values(breaks: &[f64], values: &[f64], domain: &Domain) -> Vec<f64> {
    match domain {
        Domain::Line => values.to_vec(),
        Domain::Set(s) => values
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                let lo = if *i == 0 { f64::NEG_INFINITY } else { breaks[i - 1] };
                let hi = if *i == breaks.len() { f64::INFINITY } else { breaks[*i] };
                s.parts().iter().any(|p| p.lo.max(lo) < p.hi.min(hi))
            })
            .map(|(_, v)| *v)
            .collect(),
    }
}

fn realize_chain(rhos: &[MeasureExpr], resolution: f64) -> Result<Atoms, MeasureError> {
    let mut chain = MeasureExpr::dirac(0.0);
    for rho in rhos {
        chain = chain.convolve(rho.clone());
    }
    let opts = RealizeOptions {
        resolution,
        ..RealizeOptions::default()
    };
    Ok(super::realize_with(&chain, &opts)?.atoms)
}
