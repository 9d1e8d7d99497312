//! Elements of `L²(μ)` used to probe frame inequalities.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::MeasureError;
use crate::measure::Atoms;
use crate::pwexp::{ExpPiece, PwExp};
use crate::real::{self, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub freq: i64,
    #[serde(with = "real::complex")]
    pub coef: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    /// `Σ c_k e^{2πikx}`.
    Trig { terms: Vec<TrigTerm> },
    /// `values[i]` on `[breaks[i-1], breaks[i])`, outer pieces unbounded.
    Step {
        #[serde(with = "real::seq")]
        breaks: Vec<f64>,
        #[serde(with = "real::complex_seq")]
        values: Vec<Complex64>,
    },
    /// Values at the atoms of an atomic measure.
    PointValues {
        points: Vec<Vec<Real>>,
        #[serde(with = "real::complex_seq")]
        values: Vec<Complex64>,
    },
}

impl TestFunction {
    pub fn constant() -> Self {
        Self::trig(vec![(0, Complex64::new(1.0, 0.0))])
    }

    /// `e_k(x) = e^{2πikx}`.
    pub fn exponential(k: i64) -> Self {
        Self::trig(vec![(k, Complex64::new(1.0, 0.0))])
    }

    pub fn trig(terms: Vec<(i64, Complex64)>) -> Self {
        TestFunction::Trig {
            terms: terms
                .into_iter()
                .map(|(freq, coef)| TrigTerm { freq, coef })
                .collect(),
        }
    }

    pub fn step(breaks: Vec<f64>, values: Vec<Complex64>) -> Result<Self, MeasureError> {
        if values.len() != breaks.len() + 1 {
            return Err(MeasureError::Invalid(
                "step function needs one more value than breakpoints".into(),
            ));
        }
        if !breaks.windows(2).all(|w| w[0] < w[1]) || breaks.iter().any(|b| !b.is_finite()) {
            return Err(MeasureError::Invalid("breakpoints must be finite and increasing".into()));
        }
        Ok(TestFunction::Step { breaks, values })
    }

    /// One value per atom, in atom order.
    pub fn point_values(atoms: &Atoms, values: Vec<Complex64>) -> Result<Self, MeasureError> {
        if values.len() != atoms.len() {
            return Err(MeasureError::Invalid(format!(
                "{} values for {} atoms",
                values.len(),
                atoms.len()
            )));
        }
        Ok(TestFunction::PointValues {
            points: atoms
                .iter()
                .map(|(p, _)| p.iter().map(|x| Real(*x)).collect())
                .collect(),
            values,
        })
    }

    /// Multiplies by a constant.
    pub fn scaled(&self, c: Complex64) -> Self {
        match self {
            TestFunction::Trig { terms } => TestFunction::Trig {
                terms: terms
                    .iter()
                    .map(|t| TrigTerm {
                        freq: t.freq,
                        coef: t.coef * c,
                    })
                    .collect(),
            },
            TestFunction::Step { breaks, values } => TestFunction::Step {
                breaks: breaks.clone(),
                values: values.iter().map(|v| v * c).collect(),
            },
            TestFunction::PointValues { points, values } => TestFunction::PointValues {
                points: points.clone(),
                values: values.iter().map(|v| v * c).collect(),
            },
        }
    }

    /// The function as a piecewise exponential; `None` for point values.
    pub fn to_pwexp(&self) -> Option<PwExp> {
        match self {
            TestFunction::Trig { terms } => {
                let mut g = PwExp {
                    pieces: terms
                        .iter()
                        .map(|t| ExpPiece {
                            lo: f64::NEG_INFINITY,
                            hi: f64::INFINITY,
                            freq: t.freq as f64,
                            coef: t.coef,
                        })
                        .collect(),
                };
                g.compact();
                Some(g)
            }
            TestFunction::Step { breaks, values } => {
                let pieces = values
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| v.norm() > 0.0)
                    .map(|(i, v)| ExpPiece {
                        lo: if i == 0 { f64::NEG_INFINITY } else { breaks[i - 1] },
                        hi: if i == breaks.len() { f64::INFINITY } else { breaks[i] },
                        freq: 0.0,
                        coef: *v,
                    })
                    .collect();
                Some(PwExp { pieces })
            }
            TestFunction::PointValues { .. } => None,
        }
    }

    /// Value at a point; `None` when point values do not cover it.
    pub fn eval(&self, x: &[f64]) -> Option<Complex64> {
        match self {
            TestFunction::PointValues { points, values } => points
                .iter()
                .position(|p| p.len() == x.len() && p.iter().zip(x).all(|(a, b)| a.0 == *b))
                .map(|i| values[i]),
            _ => self.to_pwexp().map(|g| g.eval(x[0])),
        }
    }

    /// Largest absolute frequency of a trigonometric polynomial.
    pub fn degree(&self) -> Option<u64> {
        match self {
            TestFunction::Trig { terms } => Some(terms.iter().map(|t| t.freq.unsigned_abs()).max().unwrap_or(0)),
            _ => None,
        }
    }
}
