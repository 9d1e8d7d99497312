use serde::{Deserialize, Serialize};

use super::{MeasureExpr, Domain};
use crate::interval::{Interval, IntervalUnion};

/// Largest point set kept explicitly under Minkowski sums.
const POINT_LIMIT: usize = 4096;

/// A closed set known to contain the support of a measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SupportSet {
    Line,
    Intervals { set: IntervalUnion },
    /// Finitely many points of `ℝ^dim`, coordinates flattened.
    Points { dim: usize, coords: Vec<f64> },
    /// IFS attractor together with its convex hull.
    Attractor { scale: u32, digits: Vec<i64>, hull: Interval },
    /// Closed superset whose exact shape is not tracked.
    Superset { set: IntervalUnion },
}

impl SupportSet {
    fn empty(dim: usize) -> Self {
        SupportSet::Points {
            dim,
            coords: Vec::new(),
        }
    }

    fn from_hull(lo: f64, hi: f64) -> Self {
        match IntervalUnion::interval(lo, hi) {
            Ok(set) => SupportSet::Superset { set },
            Err(_) => SupportSet::Points {
                dim: 1,
                coords: vec![lo],
            },
        }
    }

    fn from_points(dim: usize, mut coords: Vec<f64>) -> Self {
        if dim == 1 {
            coords.sort_by(f64::total_cmp);
            coords.dedup();
        }
        SupportSet::Points { dim, coords }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, SupportSet::Points { coords, .. } if coords.is_empty())
    }

    /// Convex hull on the line; `None` for the whole line, empty sets, and
    /// points outside one dimension.
    pub fn hull(&self) -> Option<Interval> {
        match self {
            SupportSet::Line => None,
            SupportSet::Intervals { set } | SupportSet::Superset { set } => Some(set.hull()),
            SupportSet::Attractor { hull, .. } => Some(*hull),
            SupportSet::Points { dim: 1, coords } if !coords.is_empty() => {
                Some(Interval::new(coords[0], coords[coords.len() - 1]))
            }
            SupportSet::Points { .. } => None,
        }
    }

    /// Whether `x` lies within `tol` of the set (one-dimensional sets only).
    pub fn contains(&self, x: f64, tol: f64) -> bool {
        match self {
            SupportSet::Line => true,
            SupportSet::Intervals { set } | SupportSet::Superset { set } => set
                .parts()
                .iter()
                .any(|p| p.lo - tol <= x && x <= p.hi + tol),
            SupportSet::Attractor { hull, .. } => hull.lo - tol <= x && x <= hull.hi + tol,
            SupportSet::Points { dim: 1, coords } => {
                let i = coords.partition_point(|c| *c < x - tol);
                i < coords.len() && coords[i] <= x + tol
            }
            SupportSet::Points { .. } => false,
        }
    }

    /// Whether every point of `set` lies in this superset.
    pub fn covers(&self, set: &IntervalUnion, tol: f64) -> bool {
        match self {
            SupportSet::Line => true,
            SupportSet::Intervals { set: s } | SupportSet::Superset { set: s } => s.covers(set, tol),
            SupportSet::Attractor { hull, .. } => {
                let h = set.hull();
                hull.lo - tol <= h.lo && h.hi <= hull.hi + tol
            }
            SupportSet::Points { .. } => false,
        }
    }

    fn shift(&self, t: &[f64]) -> Self {
        match self {
            SupportSet::Line => SupportSet::Line,
            SupportSet::Intervals { set } => SupportSet::Intervals { set: set.shift(t[0]) },
            SupportSet::Superset { set } => SupportSet::Superset { set: set.shift(t[0]) },
            SupportSet::Attractor { hull, .. } => {
                Self::from_hull(hull.lo + t[0], hull.hi + t[0])
            }
            SupportSet::Points { dim, coords } => {
                let mut c = coords.clone();
                for chunk in c.chunks_exact_mut(*dim) {
                    for (x, s) in chunk.iter_mut().zip(t) {
                        *x += s;
                    }
                }
                Self::from_points(*dim, c)
            }
        }
    }

    fn intersect(&self, set: &IntervalUnion) -> Self {
        match self {
            SupportSet::Line => SupportSet::Intervals { set: set.clone() },
            SupportSet::Intervals { set: s } => match s.intersect(set) {
                Some(set) => SupportSet::Intervals { set },
                None => Self::empty(1),
            },
            SupportSet::Superset { set: s } => match s.intersect(set) {
                Some(set) => SupportSet::Superset { set },
                None => Self::empty(1),
            },
            SupportSet::Attractor { hull, .. } => {
                match set.clip(hull.lo, hull.hi) {
                    Some(set) => SupportSet::Superset { set },
                    None => Self::empty(1),
                }
            }
            SupportSet::Points { dim, coords } => SupportSet::Points {
                dim: *dim,
                coords: coords.iter().copied().filter(|x| set.contains(*x)).collect(),
            },
        }
    }

    fn union(&self, other: &Self) -> Self {
        use SupportSet::*;
        match (self, other) {
            (a, b) if a.is_empty() => b.clone(),
            (a, b) if b.is_empty() => a.clone(),
            (Line, _) | (_, Line) => Line,
            (Points { dim: d1, coords: a }, Points { dim: d2, coords: b }) if d1 == d2 => {
                let mut c = a.clone();
                c.extend_from_slice(b);
                Self::from_points(*d1, c)
            }
            (Intervals { set: a }, Intervals { set: b }) => Intervals {
                set: IntervalUnion::new(
                    a.parts().iter().chain(b.parts()).map(|p| (p.lo, p.hi)),
                )
                .expect("union of valid interval sets"),
            },
            (a, b) => match (a.hull(), b.hull()) {
                (Some(x), Some(y)) => Self::from_hull(x.lo.min(y.lo), x.hi.max(y.hi)),
                _ => Line,
            },
        }
    }

    fn minkowski(&self, other: &Self) -> Self {
        use SupportSet::*;
        match (self, other) {
            (a, b) if a.is_empty() || b.is_empty() => Self::empty(1),
            (Line, _) | (_, Line) => Line,
            (Points { dim, coords: a }, Points { coords: b, .. })
                if a.len() * b.len() / (dim * dim) <= POINT_LIMIT =>
            {
                let mut c = Vec::new();
                for p in a.chunks_exact(*dim) {
                    for q in b.chunks_exact(*dim) {
                        c.extend(p.iter().zip(q).map(|(x, y)| x + y));
                    }
                }
                Self::from_points(*dim, c)
            }
            (Intervals { set }, Points { dim: 1, coords })
            | (Points { dim: 1, coords }, Intervals { set })
                if coords.len() <= POINT_LIMIT =>
            {
                Intervals {
                    set: IntervalUnion::new(coords.iter().flat_map(|x| {
                        set.parts().iter().map(move |p| (p.lo + x, p.hi + x))
                    }))
                    .expect("shifted copies of a valid interval set"),
                }
            }
            (Intervals { set: a }, Intervals { set: b }) => Intervals {
                set: a.minkowski_sum(b),
            },
            (a, b) => match (a.hull(), b.hull()) {
                (Some(x), Some(y)) => Self::from_hull(x.lo + y.lo, x.hi + y.hi),
                _ => Line,
            },
        }
    }
}

/// A closed superset of `supp μ`. Convolutions give Minkowski sums and IFS
/// leaves give the convex hull of the attractor.
pub fn support_superset(mu: &MeasureExpr) -> SupportSet {
    match mu {
        MeasureExpr::Lebesgue => SupportSet::Line,
        MeasureExpr::LebesgueOnSet { set } => SupportSet::Intervals { set: set.clone() },
        MeasureExpr::Atomic { atoms } => SupportSet::from_points(atoms.dim(), atoms.coords().to_vec()),
        MeasureExpr::IfsInvariant { ifs } => SupportSet::Attractor {
            scale: ifs.scale,
            digits: ifs.digits.clone(),
            hull: ifs.hull(),
        },
        MeasureExpr::Density { phi, base } => {
            let s = support_superset(base);
            match phi.domain() {
                Domain::Line => s,
                Domain::Set(set) => s.intersect(set),
            }
        }
        MeasureExpr::Restrict { set, base } => support_superset(base).intersect(set),
        MeasureExpr::Scale { base, .. } | MeasureExpr::Normalize { base } => support_superset(base),
        MeasureExpr::Translate { shift, base } => support_superset(base).shift(shift),
        MeasureExpr::Sum { left, right } => support_superset(left).union(&support_superset(right)),
        MeasureExpr::Convolve { left, right } => {
            support_superset(left).minkowski(&support_superset(right))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Ifs;

    #[test]
    fn translated_point() {
        let mu = MeasureExpr::atoms_1d([(1.0, 1.0)]).translate_1d(3.0);
        assert_eq!(
            support_superset(&mu),
            SupportSet::Points {
                dim: 1,
                coords: vec![4.0]
            }
        );
    }

    #[test]
    fn convolution_of_intervals_and_points() {
        let mu = MeasureExpr::lebesgue_interval(0.0, 1.0)
            .unwrap()
            .convolve(MeasureExpr::atoms_1d([(0.0, 1.0), (5.0, 1.0)]));
        let s = support_superset(&mu);
        assert_eq!(
            s,
            SupportSet::Intervals {
                set: IntervalUnion::new([(0.0, 1.0), (5.0, 6.0)]).unwrap()
            }
        );
        assert!(s.contains(5.5, 0.0) && !s.contains(3.0, 0.0));
    }

    #[test]
    fn attractor_keeps_hull() {
        let s = support_superset(&MeasureExpr::ifs(Ifs::uniform(4, vec![0, 2])));
        assert_eq!(s.hull(), Some(Interval::new(0.0, 2.0 / 3.0)));
    }
}
