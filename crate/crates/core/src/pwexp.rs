//! Piecewise exponential functions `x ↦ Σ c_p e^{2πi s_p x} χ_{[lo_p, hi_p)}(x)`.
//!
//! Trigonometric polynomials, step functions, and their products with
//! indicators, piecewise-constant densities, and characters all stay in this
//! class, which integrates exactly against Lebesgue measure.

use num_complex::Complex64;

use crate::interval::IntervalUnion;
use crate::phase::{cis_turns, exp_integral};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpPiece {
    pub lo: f64,
    pub hi: f64,
    pub freq: f64,
    pub coef: Complex64,
}

impl ExpPiece {
    fn is_global(&self) -> bool {
        self.lo == f64::NEG_INFINITY && self.hi == f64::INFINITY
    }

    fn contains(&self, x: f64) -> bool {
        self.lo <= x && (x < self.hi || self.hi == f64::INFINITY)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PwExp {
    pub pieces: Vec<ExpPiece>,
}

impl PwExp {
    pub fn constant(c: Complex64) -> Self {
        Self::exp(0.0, c)
    }

    pub fn exp(freq: f64, coef: Complex64) -> Self {
        Self {
            pieces: vec![ExpPiece {
                lo: f64::NEG_INFINITY,
                hi: f64::INFINITY,
                freq,
                coef,
            }],
        }
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        self.pieces
            .iter()
            .filter(|p| p.contains(x))
            .map(|p| p.coef * cis_turns(p.freq * x))
            .sum()
    }

    /// Multiplies by `e^{2πisx}`.
    pub fn mul_exp(&self, s: f64) -> Self {
        Self {
            pieces: self
                .pieces
                .iter()
                .map(|p| ExpPiece {
                    freq: p.freq + s,
                    ..*p
                })
                .collect(),
        }
    }

    /// `x ↦ g(x + s)`.
    pub fn shift(&self, s: f64) -> Self {
        if s == 0.0 {
            return self.clone();
        }
        Self {
            pieces: self
                .pieces
                .iter()
                .map(|p| ExpPiece {
                    lo: p.lo - s,
                    hi: p.hi - s,
                    freq: p.freq,
                    coef: p.coef * cis_turns(p.freq * s),
                })
                .collect(),
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            pieces: self
                .pieces
                .iter()
                .map(|p| ExpPiece {
                    coef: p.coef * c,
                    ..*p
                })
                .collect(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            pieces: self
                .pieces
                .iter()
                .map(|p| ExpPiece {
                    freq: -p.freq,
                    coef: p.coef.conj(),
                    ..*p
                })
                .collect(),
        }
    }

    /// Multiplies by the indicator of `set`.
    pub fn restrict(&self, set: &IntervalUnion) -> Self {
        let mut pieces = Vec::new();
        for p in &self.pieces {
            for part in set.parts() {
                let lo = p.lo.max(part.lo);
                let hi = p.hi.min(part.hi);
                if lo < hi {
                    pieces.push(ExpPiece { lo, hi, ..*p });
                }
            }
        }
        Self { pieces }
    }

    /// Multiplies by the step function taking `values[i]` on
    /// `[breaks[i-1], breaks[i])` (outer pieces unbounded).
    pub fn mul_steps(&self, breaks: &[f64], values: &[f64]) -> Self {
        debug_assert_eq!(values.len(), breaks.len() + 1);
        let mut pieces = Vec::new();
        for p in &self.pieces {
            for (i, v) in values.iter().enumerate() {
                if *v == 0.0 {
                    continue;
                }
                let lo = if i == 0 { f64::NEG_INFINITY } else { breaks[i - 1] };
                let hi = if i == breaks.len() { f64::INFINITY } else { breaks[i] };
                let lo = p.lo.max(lo);
                let hi = p.hi.min(hi);
                if lo < hi {
                    pieces.push(ExpPiece {
                        lo,
                        hi,
                        freq: p.freq,
                        coef: p.coef * *v,
                    });
                }
            }
        }
        Self { pieces }
    }

    pub fn mul(&self, other: &PwExp) -> Self {
        let mut pieces = Vec::with_capacity(self.pieces.len() * other.pieces.len());
        for a in &self.pieces {
            for b in &other.pieces {
                let lo = a.lo.max(b.lo);
                let hi = a.hi.min(b.hi);
                if lo < hi {
                    pieces.push(ExpPiece {
                        lo,
                        hi,
                        freq: a.freq + b.freq,
                        coef: a.coef * b.coef,
                    });
                }
            }
        }
        let mut out = Self { pieces };
        out.compact();
        out
    }

    /// Merges pieces sharing support and frequency; drops zero coefficients.
    pub fn compact(&mut self) {
        self.pieces.sort_by(|a, b| {
            a.lo.total_cmp(&b.lo)
                .then(a.hi.total_cmp(&b.hi))
                .then(a.freq.total_cmp(&b.freq))
        });
        let mut out: Vec<ExpPiece> = Vec::with_capacity(self.pieces.len());
        for p in self.pieces.drain(..) {
            match out.last_mut() {
                Some(q) if q.lo == p.lo && q.hi == p.hi && q.freq == p.freq => q.coef += p.coef,
                _ => out.push(p),
            }
        }
        out.retain(|p| p.coef != Complex64::new(0.0, 0.0));
        self.pieces = out;
    }

    pub fn is_global(&self) -> bool {
        self.pieces.iter().all(ExpPiece::is_global)
    }

    pub fn is_bounded_support(&self) -> bool {
        self.pieces
            .iter()
            .all(|p| p.lo.is_finite() && p.hi.is_finite())
    }

    /// Exact `∫_a^b`; pieces are clipped to `[a, b]`.
    pub fn integral(&self, a: f64, b: f64) -> Complex64 {
        self.pieces
            .iter()
            .filter_map(|p| {
                let lo = p.lo.max(a);
                let hi = p.hi.min(b);
                (lo < hi).then(|| p.coef * exp_integral(p.freq, lo, hi))
            })
            .sum()
    }

    pub fn integral_over(&self, set: &IntervalUnion) -> Complex64 {
        set.parts().iter().map(|p| self.integral(p.lo, p.hi)).sum()
    }

    /// Exact integral over the whole line of a compactly supported function,
    /// with a bound on the floating-point error (phase rounding included).
    pub fn integral_all(&self) -> (Complex64, f64) {
        let mut value = Complex64::new(0.0, 0.0);
        let mut err = 0.0;
        for p in &self.pieces {
            let len = p.hi - p.lo;
            value += p.coef * exp_integral(p.freq, p.lo, p.hi);
            let reach = p.lo.abs().max(p.hi.abs());
            err += p.coef.norm()
                * len
                * (16.0 + 2.0 * std::f64::consts::PI * p.freq.abs() * reach)
                * f64::EPSILON;
        }
        (value, err + 4.0 * self.pieces.len() as f64 * f64::EPSILON * value.norm())
    }

    /// Convex hull of the support when it is bounded.
    pub fn support_hull(&self) -> Option<(f64, f64)> {
        if self.pieces.is_empty() || !self.is_bounded_support() {
            return None;
        }
        let lo = self.pieces.iter().map(|p| p.lo).fold(f64::INFINITY, f64::min);
        let hi = self.pieces.iter().map(|p| p.hi).fold(f64::NEG_INFINITY, f64::max);
        Some((lo, hi))
    }

    /// Rounding-error scale of [`integral_over`].
    pub fn integral_rounding(&self, set: &IntervalUnion) -> f64 {
        let mass: f64 = self
            .pieces
            .iter()
            .map(|p| {
                let len: f64 = set
                    .parts()
                    .iter()
                    .map(|q| (p.hi.min(q.hi) - p.lo.max(q.lo)).max(0.0))
                    .sum();
                p.coef.norm() * len
            })
            .sum();
        16.0 * f64::EPSILON * mass
    }

    pub fn sup_bound(&self) -> f64 {
        self.pieces.iter().map(|p| p.coef.norm()).sum()
    }

    /// Lipschitz constant away from the piece endpoints.
    pub fn lipschitz(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| 2.0 * std::f64::consts::PI * p.freq.abs() * p.coef.norm())
            .sum()
    }

    /// Bound on the total size of the jumps at piece endpoints.
    pub fn jump_total(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| {
                let ends = p.lo.is_finite() as u8 + p.hi.is_finite() as u8;
                ends as f64 * p.coef.norm()
            })
            .sum()
    }

    pub fn kinks(&self) -> Vec<f64> {
        let mut ks: Vec<f64> = self
            .pieces
            .iter()
            .flat_map(|p| [p.lo, p.hi])
            .filter(|x| x.is_finite())
            .collect();
        ks.sort_by(f64::total_cmp);
        ks.dedup();
        ks
    }

    pub fn max_abs_freq(&self) -> f64 {
        self.pieces.iter().map(|p| p.freq.abs()).fold(0.0, f64::max)
    }

    /// Total variation of the coefficient step function attached to each
    /// frequency; `None` unless every piece is bounded.
    ///
    /// Integrating by parts, `|∫ g(x) e^{-2πitx} dx| ≤ Σ_k TV_k / (2π|t - k|)`.
    pub fn decay(&self) -> Option<Decay> {
        if !self.is_bounded_support() {
            return None;
        }
        let mut by_freq: Vec<(f64, Vec<(f64, Complex64)>)> = Vec::new();
        for p in &self.pieces {
            let idx = match by_freq.iter().position(|(f, _)| *f == p.freq) {
                Some(i) => i,
                None => {
                    by_freq.push((p.freq, Vec::new()));
                    by_freq.len() - 1
                }
            };
            let events = &mut by_freq[idx].1;
            events.push((p.lo, p.coef));
            events.push((p.hi, -p.coef));
        }
        let terms = by_freq
            .into_iter()
            .map(|(freq, mut events)| {
                events.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut tv = 0.0;
                let mut i = 0;
                while i < events.len() {
                    let x = events[i].0;
                    let mut jump = Complex64::new(0.0, 0.0);
                    while i < events.len() && events[i].0 == x {
                        jump += events[i].1;
                        i += 1;
                    }
                    tv += jump.norm();
                }
                (freq, tv)
            })
            .filter(|(_, tv)| *tv > 0.0)
            .collect();
        Some(Decay { terms })
    }
}

/// Integration-by-parts decay profile of a compactly supported [`PwExp`].
#[derive(Debug, Clone, PartialEq)]
pub struct Decay {
    pub terms: Vec<(f64, f64)>,
}

impl Decay {
    pub fn total_variation(&self) -> f64 {
        self.terms.iter().map(|t| t.1).sum()
    }

    pub fn max_freq(&self) -> f64 {
        self.terms.iter().map(|t| t.0.abs()).fold(0.0, f64::max)
    }

    /// Bound on `|∫ g e^{-2πitx} dx|` valid when `|t| > max_freq`.
    pub fn bound(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|(k, tv)| tv / (2.0 * std::f64::consts::PI * (t - k).abs()))
            .sum()
    }

    /// Bound on `∫_{|t| > cut} |ĝ(t)|² dt` for `cut > max_freq`.
    pub fn line_tail(&self, cut: f64) -> Option<f64> {
        let gap = cut - self.max_freq();
        if gap <= 0.0 {
            return None;
        }
        let tv = self.total_variation();
        Some(tv * tv / (2.0 * std::f64::consts::PI.powi(2) * gap))
    }

    /// Bound on `Σ_{|n| > cut} sup_{|s| ≤ spread} |ĝ(n + s)|²` over integers `n`.
    pub fn lattice_tail(&self, cut: f64, spread: f64) -> Option<f64> {
        let gap = cut - spread - self.max_freq();
        if gap < 1.0 {
            return None;
        }
        let tv = self.total_variation();
        Some(tv * tv / (2.0 * std::f64::consts::PI.powi(2) * gap))
    }
}
