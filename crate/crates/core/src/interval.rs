use serde::{Deserialize, Serialize};

use crate::error::MeasureError;

/// Closed interval `[lo, hi]` with finite endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    #[serde(with = "crate::real")]
    pub lo: f64,
    #[serde(with = "crate::real")]
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn radius(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }
}

/// Finite union of disjoint closed intervals of positive length, sorted by
/// left endpoint. Touching or overlapping input intervals are merged.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct IntervalUnion {
    parts: Vec<Interval>,
}

impl IntervalUnion {
    pub fn new<I>(intervals: I) -> Result<Self, MeasureError>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let mut parts: Vec<Interval> = Vec::new();
        for (lo, hi) in intervals {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(MeasureError::InvalidIntervals(format!(
                    "endpoint of [{lo}, {hi}] is not finite"
                )));
            }
            if lo >= hi {
                return Err(MeasureError::InvalidIntervals(format!(
                    "interval [{lo}, {hi}] has no positive length"
                )));
            }
            parts.push(Interval { lo, hi });
        }
        if parts.is_empty() {
            return Err(MeasureError::InvalidIntervals("empty interval set".into()));
        }
        parts.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut merged: Vec<Interval> = Vec::with_capacity(parts.len());
        for p in parts {
            match merged.last_mut() {
                Some(last) if p.lo <= last.hi => last.hi = last.hi.max(p.hi),
                _ => merged.push(p),
            }
        }
        Ok(Self { parts: merged })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self, MeasureError> {
        Self::new([(lo, hi)])
    }

    pub fn parts(&self) -> &[Interval] {
        &self.parts
    }

    pub fn length(&self) -> f64 {
        self.parts.iter().map(Interval::length).sum()
    }

    pub fn contains(&self, x: f64) -> bool {
        // parts are sorted; binary search on the left endpoints
        let idx = self.parts.partition_point(|p| p.lo <= x);
        idx > 0 && self.parts[idx - 1].contains(x)
    }

    pub fn hull(&self) -> Interval {
        Interval {
            lo: self.parts[0].lo,
            hi: self.parts[self.parts.len() - 1].hi,
        }
    }

    /// Intersection; `None` when it has zero length.
    pub fn intersect(&self, other: &IntervalUnion) -> Option<IntervalUnion> {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.parts.len() && j < other.parts.len() {
            let a = self.parts[i];
            let b = other.parts[j];
            let lo = a.lo.max(b.lo);
            let hi = a.hi.min(b.hi);
            if lo < hi {
                out.push((lo, hi));
            }
            if a.hi < b.hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalUnion::new(out).ok()
    }

    pub fn clip(&self, lo: f64, hi: f64) -> Option<IntervalUnion> {
        if lo >= hi {
            return None;
        }
        self.intersect(&IntervalUnion {
            parts: vec![Interval { lo, hi }],
        })
    }

    pub fn shift(&self, s: f64) -> IntervalUnion {
        IntervalUnion {
            parts: self
                .parts
                .iter()
                .map(|p| Interval {
                    lo: p.lo + s,
                    hi: p.hi + s,
                })
                .collect(),
        }
    }

    pub fn minkowski_sum(&self, other: &IntervalUnion) -> IntervalUnion {
        let sums = self.parts.iter().flat_map(|a| {
            other
                .parts
                .iter()
                .map(move |b| (a.lo + b.lo, a.hi + b.hi))
        });
        IntervalUnion::new(sums).expect("sums of positive-length intervals are valid")
    }

    /// Whether `other` is contained in this set up to `tol` at each endpoint.
    pub fn covers(&self, other: &IntervalUnion, tol: f64) -> bool {
        other.parts.iter().all(|b| {
            self.parts
                .iter()
                .any(|a| a.lo - tol <= b.lo && b.hi <= a.hi + tol)
        })
    }
}

impl<'de> Deserialize<'de> for IntervalUnion {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let parts = Vec::<Interval>::deserialize(d)?;
        IntervalUnion::new(parts.into_iter().map(|p| (p.lo, p.hi)))
            .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_touching_and_sorts() {
        let u = IntervalUnion::new([(2.0, 3.0), (0.0, 1.0), (1.0, 1.5)]).unwrap();
        assert_eq!(u.parts(), &[Interval::new(0.0, 1.5), Interval::new(2.0, 3.0)]);
        assert_eq!(u.length(), 2.5);
        assert!(u.contains(1.5) && !u.contains(1.75) && u.contains(3.0));
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(IntervalUnion::new(Vec::<(f64, f64)>::new()).is_err());
        assert!(IntervalUnion::interval(1.0, 1.0).is_err());
        assert!(IntervalUnion::interval(0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn intersection_and_minkowski() {
        let a = IntervalUnion::new([(0.0, 1.0), (2.0, 4.0)]).unwrap();
        let b = IntervalUnion::interval(0.5, 2.5).unwrap();
        let c = a.intersect(&b).unwrap();
        assert_eq!(c.parts(), &[Interval::new(0.5, 1.0), Interval::new(2.0, 2.5)]);
        assert!(a.clip(1.2, 1.8).is_none());
        let s = IntervalUnion::interval(0.0, 1.0)
            .unwrap()
            .minkowski_sum(&IntervalUnion::interval(0.0, 0.5).unwrap());
        assert_eq!(s.parts(), &[Interval::new(0.0, 1.5)]);
    }
}
