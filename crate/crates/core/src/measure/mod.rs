//! Measure expressions: immutable trees describing Borel measures.

mod approx;
mod density;
mod realize;
mod support;
mod validate;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::MeasureError;
use crate::interval::{Interval, IntervalUnion};
use crate::real::{self, Real};

pub use approx::{approximate_identity, ApproxKind};
pub use density::{BoundedDensity, DensityForm, Domain, ENVELOPE_GRID};
pub use realize::{realize_atomic, realize_with, Realization, RealizeOptions, DEFAULT_ATOM_CAP};
pub use support::{support_superset, SupportSet};
pub use validate::{validate, Violation};

/// Finitely many weighted point masses in `ℝ^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Atoms {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
}

impl Atoms {
    /// Builds from flat coordinates (`dim` per atom). Weights are not checked
    /// here; [`validate`] reports invalid ones.
    pub fn new(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self, MeasureError> {
        if dim == 0 || coords.len() != dim * weights.len() {
            return Err(MeasureError::Dimension(format!(
                "{} coordinates for {} atoms of dimension {dim}",
                coords.len(),
                weights.len()
            )));
        }
        Ok(Self {
            dim,
            coords,
            weights,
        })
    }

    /// One-dimensional atoms from `(point, weight)` pairs.
    pub fn line<I: IntoIterator<Item = (f64, f64)>>(pairs: I) -> Self {
        let (coords, weights) = pairs.into_iter().unzip();
        Self {
            dim: 1,
            coords,
            weights,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Coordinate of atom `i` on the line.
    pub fn x(&self, i: usize) -> f64 {
        self.coords[i * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.coords
            .chunks_exact(self.dim)
            .zip(self.weights.iter().copied())
    }

    pub(crate) fn map_weights(&self, f: impl Fn(&[f64], f64) -> f64) -> Atoms {
        Atoms {
            dim: self.dim,
            coords: self.coords.clone(),
            weights: self.iter().map(|(p, w)| f(p, w)).collect(),
        }
    }

    pub(crate) fn filter(&self, keep: impl Fn(&[f64]) -> bool) -> Atoms {
        let mut coords = Vec::new();
        let mut weights = Vec::new();
        for (p, w) in self.iter() {
            if keep(p) {
                coords.extend_from_slice(p);
                weights.push(w);
            }
        }
        Atoms {
            dim: self.dim,
            coords,
            weights,
        }
    }

    pub(crate) fn translate(&self, shift: &[f64]) -> Atoms {
        let mut coords = self.coords.clone();
        for chunk in coords.chunks_exact_mut(self.dim) {
            for (c, s) in chunk.iter_mut().zip(shift) {
                *c += s;
            }
        }
        Atoms {
            dim: self.dim,
            coords,
            weights: self.weights.clone(),
        }
    }

    /// Sorts atoms lexicographically and merges points closer than
    /// `tol·max(1, |x|)` in every coordinate, adding their weights.
    pub(crate) fn merged(&self, tol: f64) -> Atoms {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            self.point(a)
                .iter()
                .zip(self.point(b))
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut coords: Vec<f64> = Vec::with_capacity(self.coords.len());
        let mut weights: Vec<f64> = Vec::with_capacity(self.len());
        for i in order {
            let p = self.point(i);
            let same = weights.last().is_some() && {
                let q = &coords[coords.len() - self.dim..];
                p.iter()
                    .zip(q)
                    .all(|(a, b)| (a - b).abs() <= tol * a.abs().max(1.0))
            };
            if same {
                *weights.last_mut().unwrap() += self.weights[i];
            } else {
                coords.extend_from_slice(p);
                weights.push(self.weights[i]);
            }
        }
        Atoms {
            dim: self.dim,
            coords,
            weights,
        }
    }

    pub(crate) fn concat(&self, other: &Atoms) -> Result<Atoms, MeasureError> {
        if self.dim != other.dim {
            return Err(MeasureError::Dimension(format!(
                "cannot combine {}-dimensional and {}-dimensional atoms",
                self.dim, other.dim
            )));
        }
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        let mut weights = self.weights.clone();
        weights.extend_from_slice(&other.weights);
        Ok(Atoms {
            dim: self.dim,
            coords,
            weights,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct AtomRecord {
    point: Vec<Real>,
    weight: Real,
}

impl Serialize for Atoms {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter().map(|(p, w)| AtomRecord {
            point: p.iter().map(|x| Real(*x)).collect(),
            weight: Real(w),
        }))
    }
}

impl<'de> Deserialize<'de> for Atoms {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let records = Vec::<AtomRecord>::deserialize(d)?;
        let dim = records.first().map_or(1, |r| r.point.len());
        if records.iter().any(|r| r.point.len() != dim) {
            return Err(serde::de::Error::custom("atoms have inconsistent dimensions"));
        }
        let coords = records.iter().flat_map(|r| r.point.iter().map(|x| x.0)).collect();
        let weights = records.iter().map(|r| r.weight.0).collect();
        Atoms::new(dim, coords, weights).map_err(serde::de::Error::custom)
    }
}

/// Affine iterated function system `τ_a(x) = (x + a)/R` with probability
/// weights; its invariant measure satisfies `μ = Σ ρ_a μ∘τ_a⁻¹`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ifs {
    pub scale: u32,
    pub digits: Vec<i64>,
    #[serde(with = "real::seq")]
    pub weights: Vec<f64>,
}

impl Ifs {
    pub fn new(scale: u32, digits: Vec<i64>, weights: Vec<f64>) -> Self {
        Self {
            scale,
            digits,
            weights,
        }
    }

    /// Equal weights `1/N` over the digits.
    pub fn uniform(scale: u32, digits: Vec<i64>) -> Self {
        let n = digits.len();
        Self {
            scale,
            digits,
            weights: vec![1.0 / n as f64; n],
        }
    }

    /// Convex hull of the attractor, `[min 𝒜/(R−1), max 𝒜/(R−1)]`.
    pub fn hull(&self) -> Interval {
        let r = self.scale as f64 - 1.0;
        let lo = self.digits.iter().copied().min().unwrap_or(0) as f64 / r;
        let hi = self.digits.iter().copied().max().unwrap_or(0) as f64 / r;
        Interval::new(lo, hi)
    }
}

/// Total mass of a measure expression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mass {
    /// Finite mass with an absolute error bound (zero when exact).
    Finite { value: f64, error: f64 },
    Infinite,
}

impl Mass {
    pub fn exact(value: f64) -> Self {
        Mass::Finite { value, error: 0.0 }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Mass::Finite { value, .. } => Some(*value),
            Mass::Infinite => None,
        }
    }

    pub fn error(&self) -> f64 {
        match self {
            Mass::Finite { error, .. } => *error,
            Mass::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Mass::Finite { .. })
    }
}

/// A Borel measure as an algebraic expression. Children are shared, so
/// cloning is cheap and trees can be handed to concurrent evaluators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum MeasureExpr {
    /// Lebesgue measure on the whole line (infinite mass).
    Lebesgue,
    LebesgueOnSet {
        set: IntervalUnion,
    },
    Atomic {
        atoms: Atoms,
    },
    IfsInvariant {
        ifs: Ifs,
    },
    Density {
        phi: Arc<BoundedDensity>,
        base: Arc<MeasureExpr>,
    },
    Restrict {
        set: IntervalUnion,
        base: Arc<MeasureExpr>,
    },
    Scale {
        #[serde(with = "real")]
        alpha: f64,
        base: Arc<MeasureExpr>,
    },
    Sum {
        left: Arc<MeasureExpr>,
        right: Arc<MeasureExpr>,
    },
    Convolve {
        left: Arc<MeasureExpr>,
        right: Arc<MeasureExpr>,
    },
    Translate {
        #[serde(with = "real::seq")]
        shift: Vec<f64>,
        base: Arc<MeasureExpr>,
    },
    Normalize {
        base: Arc<MeasureExpr>,
    },
}

impl MeasureExpr {
    pub fn lebesgue_on(set: IntervalUnion) -> Self {
        MeasureExpr::LebesgueOnSet { set }
    }

    pub fn lebesgue_interval(lo: f64, hi: f64) -> Result<Self, MeasureError> {
        Ok(MeasureExpr::LebesgueOnSet {
            set: IntervalUnion::interval(lo, hi)?,
        })
    }

    pub fn atomic(atoms: Atoms) -> Self {
        MeasureExpr::Atomic { atoms }
    }

    /// One-dimensional atomic measure from `(point, weight)` pairs.
    pub fn atoms_1d<I: IntoIterator<Item = (f64, f64)>>(pairs: I) -> Self {
        MeasureExpr::Atomic {
            atoms: Atoms::line(pairs),
        }
    }

    pub fn dirac(x: f64) -> Self {
        Self::atoms_1d([(x, 1.0)])
    }

    pub fn ifs(ifs: Ifs) -> Self {
        MeasureExpr::IfsInvariant { ifs }
    }

    pub fn density(self, phi: BoundedDensity) -> Self {
        MeasureExpr::Density {
            phi: Arc::new(phi),
            base: Arc::new(self),
        }
    }

    pub fn restrict(self, set: IntervalUnion) -> Self {
        MeasureExpr::Restrict {
            set,
            base: Arc::new(self),
        }
    }

    pub fn scale(self, alpha: f64) -> Self {
        MeasureExpr::Scale {
            alpha,
            base: Arc::new(self),
        }
    }

    pub fn plus(self, other: MeasureExpr) -> Self {
        MeasureExpr::Sum {
            left: Arc::new(self),
            right: Arc::new(other),
        }
    }

    pub fn convolve(self, other: MeasureExpr) -> Self {
        MeasureExpr::Convolve {
            left: Arc::new(self),
            right: Arc::new(other),
        }
    }

    pub fn translate(self, shift: Vec<f64>) -> Self {
        MeasureExpr::Translate {
            shift,
            base: Arc::new(self),
        }
    }

    pub fn translate_1d(self, shift: f64) -> Self {
        self.translate(vec![shift])
    }

    pub fn normalize(self) -> Self {
        MeasureExpr::Normalize {
            base: Arc::new(self),
        }
    }

    /// Node tag, matching the serialized `node` field.
    pub fn tag(&self) -> &'static str {
        match self {
            MeasureExpr::Lebesgue => "lebesgue",
            MeasureExpr::LebesgueOnSet { .. } => "lebesgue_on_set",
            MeasureExpr::Atomic { .. } => "atomic",
            MeasureExpr::IfsInvariant { .. } => "ifs_invariant",
            MeasureExpr::Density { .. } => "density",
            MeasureExpr::Restrict { .. } => "restrict",
            MeasureExpr::Scale { .. } => "scale",
            MeasureExpr::Sum { .. } => "sum",
            MeasureExpr::Convolve { .. } => "convolve",
            MeasureExpr::Translate { .. } => "translate",
            MeasureExpr::Normalize { .. } => "normalize",
        }
    }

    /// Ambient dimension. Only atomic leaves and translations may leave the line.
    pub fn dim(&self) -> Result<usize, MeasureError> {
        match self {
            MeasureExpr::Atomic { atoms } => Ok(atoms.dim()),
            MeasureExpr::Lebesgue
            | MeasureExpr::LebesgueOnSet { .. }
            | MeasureExpr::IfsInvariant { .. } => Ok(1),
            MeasureExpr::Density { base, .. } | MeasureExpr::Restrict { base, .. } => {
                match base.dim()? {
                    1 => Ok(1),
                    d => Err(MeasureError::Dimension(format!(
                        "{} needs a measure on the line, got dimension {d}",
                        self.tag()
                    ))),
                }
            }
            MeasureExpr::Scale { base, .. } | MeasureExpr::Normalize { base } => base.dim(),
            MeasureExpr::Translate { shift, base } => {
                let d = base.dim()?;
                if shift.len() != d {
                    return Err(MeasureError::Dimension(format!(
                        "shift of length {} applied to dimension {d}",
                        shift.len()
                    )));
                }
                Ok(d)
            }
            MeasureExpr::Sum { left, right } | MeasureExpr::Convolve { left, right } => {
                let (a, b) = (left.dim()?, right.dim()?);
                if a != b {
                    return Err(MeasureError::Dimension(format!(
                        "{} of dimensions {a} and {b}",
                        self.tag()
                    )));
                }
                Ok(a)
            }
        }
    }

    /// Whether the tree only combines atomic leaves (so realization is exact).
    pub fn is_purely_atomic(&self) -> bool {
        match self {
            MeasureExpr::Atomic { .. } => true,
            MeasureExpr::Lebesgue
            | MeasureExpr::LebesgueOnSet { .. }
            | MeasureExpr::IfsInvariant { .. } => false,
            MeasureExpr::Density { base, .. }
            | MeasureExpr::Restrict { base, .. }
            | MeasureExpr::Scale { base, .. }
            | MeasureExpr::Translate { base, .. }
            | MeasureExpr::Normalize { base } => base.is_purely_atomic(),
            MeasureExpr::Sum { left, right } | MeasureExpr::Convolve { left, right } => {
                left.is_purely_atomic() && right.is_purely_atomic()
            }
        }
    }

    /// Supremum of the density with respect to Lebesgue measure, when the
    /// measure is absolutely continuous with a bounded density.
    pub fn density_sup(&self) -> Option<f64> {
        match self {
            MeasureExpr::Lebesgue | MeasureExpr::LebesgueOnSet { .. } => Some(1.0),
            MeasureExpr::Atomic { .. } | MeasureExpr::IfsInvariant { .. } => None,
            MeasureExpr::Density { phi, base } => base.density_sup().map(|d| d * phi.upper()),
            MeasureExpr::Restrict { base, .. } | MeasureExpr::Translate { base, .. } => {
                base.density_sup()
            }
            MeasureExpr::Scale { alpha, base } => base.density_sup().map(|d| d * alpha),
            MeasureExpr::Sum { left, right } => Some(left.density_sup()? + right.density_sup()?),
            MeasureExpr::Normalize { base } => {
                let m = total_mass(base).ok()?.value()?;
                base.density_sup().map(|d| d / m)
            }
            MeasureExpr::Convolve { left, right } => {
                let via_left = left
                    .density_sup()
                    .and_then(|d| total_mass(right).ok()?.value().map(|m| d * m));
                let via_right = right
                    .density_sup()
                    .and_then(|d| total_mass(left).ok()?.value().map(|m| d * m));
                match (via_left, via_right) {
                    (Some(a), Some(b)) => Some(a.min(b)),
                    (a, b) => a.or(b),
                }
            }
        }
    }
}

/// Total mass: exact for atomic, interval, IFS, and arithmetic nodes; by
/// quadrature (with an error bound) for density and restriction nodes.
pub fn total_mass(mu: &MeasureExpr) -> Result<Mass, MeasureError> {
    use crate::integrate::{integrate, Integrand};
    use crate::transform::Accuracy;
    Ok(match mu {
        MeasureExpr::Lebesgue => Mass::Infinite,
        MeasureExpr::LebesgueOnSet { set } => Mass::exact(set.length()),
        MeasureExpr::Atomic { atoms } => Mass::exact(atoms.total_weight()),
        MeasureExpr::IfsInvariant { .. } => Mass::exact(1.0),
        MeasureExpr::Density { .. } | MeasureExpr::Restrict { .. } => {
            match integrate(mu, &Integrand::one(), &Accuracy::default()) {
                Ok(v) => Mass::Finite {
                    value: v.value.re,
                    error: v.abs_error_bound,
                },
                Err(MeasureError::InfiniteMass) => Mass::Infinite,
                Err(MeasureError::TransformUndefined(_)) => Mass::Infinite,
                Err(e) => return Err(e),
            }
        }
        MeasureExpr::Scale { alpha, base } => match total_mass(base)? {
            Mass::Finite { value, error } => Mass::Finite {
                value: alpha * value,
                error: alpha * error,
            },
            Mass::Infinite => Mass::Infinite,
        },
        MeasureExpr::Translate { base, .. } => total_mass(base)?,
        MeasureExpr::Sum { left, right } => match (total_mass(left)?, total_mass(right)?) {
            (
                Mass::Finite { value: a, error: ea },
                Mass::Finite { value: b, error: eb },
            ) => Mass::Finite {
                value: a + b,
                error: ea + eb,
            },
            _ => Mass::Infinite,
        },
        MeasureExpr::Convolve { left, right } => match (total_mass(left)?, total_mass(right)?) {
            (
                Mass::Finite { value: a, error: ea },
                Mass::Finite { value: b, error: eb },
            ) => Mass::Finite {
                value: a * b,
                error: a * eb + b * ea + ea * eb,
            },
            (Mass::Finite { value, .. }, Mass::Infinite)
            | (Mass::Infinite, Mass::Finite { value, .. })
                if value == 0.0 =>
            {
                Mass::exact(0.0)
            }
            _ => Mass::Infinite,
        },
        MeasureExpr::Normalize { base } => match total_mass(base)? {
            Mass::Finite { value, .. } if value > 0.0 => Mass::exact(1.0),
            Mass::Finite { value, .. } => {
                return Err(MeasureError::NormalizeMass(format!("{value}")))
            }
            Mass::Infinite => return Err(MeasureError::NormalizeMass("infinite".into())),
        },
    })
}

/// Total mass, failing on infinite mass.
pub fn finite_mass(mu: &MeasureExpr) -> Result<f64, MeasureError> {
    total_mass(mu)?.value().ok_or(MeasureError::InfiniteMass)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mass_examples() {
        let a = MeasureExpr::atoms_1d([(0.0, 1.0), (1.0, 2.0)]);
        assert_eq!(total_mass(&a).unwrap(), Mass::exact(3.0));
        let mu4 = MeasureExpr::ifs(Ifs::uniform(4, vec![0, 2]));
        assert_eq!(total_mass(&mu4).unwrap(), Mass::exact(1.0));
        let conv = MeasureExpr::lebesgue_interval(0.0, 1.0)
            .unwrap()
            .convolve(MeasureExpr::atoms_1d([(5.0, 2.0)]));
        assert_eq!(total_mass(&conv).unwrap(), Mass::exact(2.0));
        assert_eq!(total_mass(&MeasureExpr::Lebesgue).unwrap(), Mass::Infinite);
    }

    #[test]
    fn normalize_rejects_infinite_mass() {
        let bad = MeasureExpr::Lebesgue.normalize();
        assert!(matches!(total_mass(&bad), Err(MeasureError::NormalizeMass(_))));
    }

    #[test]
    fn merging_adds_coincident_weights() {
        let a = Atoms::line([(0.5, 1.0), (0.0, 2.0), (0.5, 3.0)]).merged(1e-12);
        assert_eq!(a, Atoms::line([(0.0, 2.0), (0.5, 4.0)]));
    }

    #[test]
    fn hull_of_cantor_attractor() {
        let h = Ifs::uniform(4, vec![0, 2]).hull();
        assert_eq!((h.lo, h.hi), (0.0, 2.0 / 3.0));
    }
}
