use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::CertError;
use crate::real::{self, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertKind {
    /// Upper bound only (`A = 0`).
    Bessel,
    Frame,
    /// `A = B`.
    Tight,
    /// `A = B = 1`.
    Plancherel,
}

impl CertKind {
    fn classify(a: f64, b: f64) -> Self {
        if a == 0.0 {
            CertKind::Bessel
        } else if a == 1.0 && b == 1.0 {
            CertKind::Plancherel
        } else if a == b {
            CertKind::Tight
        } else {
            CertKind::Frame
        }
    }

    pub fn has_lower_bound(self) -> bool {
        self != CertKind::Bessel
    }
}

impl fmt::Display for CertKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CertKind::Bessel => "bessel",
            CertKind::Frame => "frame",
            CertKind::Tight => "tight",
            CertKind::Plancherel => "plancherel",
        })
    }
}

/// One step of bound arithmetic. Replaying the steps in order reproduces
/// the certified `(A, B)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Rule {
    /// Plancherel identity: `(1, 1)`.
    Plancherel,
    /// Bounds taken as given.
    Stated {
        #[serde(with = "real")]
        a: f64,
        #[serde(with = "real")]
        b: f64,
    },
    /// Finite measures: `(0, μ(ℝᵈ)·ν(ℝᵈ))`.
    FiniteBessel {
        #[serde(with = "real")]
        mass_mu: f64,
        #[serde(with = "real")]
        mass_nu: f64,
    },
    /// Discrete weights summing to `budget/μ(ℝᵈ)`: `(0, budget)`.
    DiscreteBessel {
        #[serde(with = "real")]
        budget: f64,
    },
    /// Bessel bound for a sum of base measures: `(0, (√B + √B')²)`.
    SumBessel {
        #[serde(with = "real")]
        other_upper: f64,
    },
    /// `χ_E φ dμ` with `m ≤ φ ≤ M`: `(mA, MB)`.
    DensityRestrict {
        #[serde(with = "real")]
        m: f64,
        #[serde(with = "real", rename = "M")]
        big_m: f64,
    },
    /// `αμ`: `(αA, αB)`.
    ScaleBase {
        #[serde(with = "real")]
        alpha: f64,
    },
    /// `φ dν` with `m ≤ φ ≤ M`: `(mA, MB)`.
    ScaleFrameMeasure {
        #[serde(with = "real")]
        m: f64,
        #[serde(with = "real", rename = "M")]
        big_m: f64,
    },
    /// `αν + βν'`: `(αA + βA', αB + βB')`.
    Mix {
        #[serde(with = "real")]
        alpha: f64,
        #[serde(with = "real")]
        beta: f64,
        #[serde(with = "real")]
        other_a: f64,
        #[serde(with = "real")]
        other_b: f64,
    },
    /// `ν ∗ ρ` for a probability measure `ρ`: unchanged.
    ConvolveProbability,
    /// `χ_F (φ ∗ ρ₁ ∗ ⋯ ∗ ρₙ) dλ` with `ρ_k = χ_{E_k}dλ`, normalized or not:
    /// `(mA, MB)` times `Π λ(E_k)` when unnormalized.
    ConvolutionChain {
        #[serde(with = "real")]
        m: f64,
        #[serde(with = "real", rename = "M")]
        big_m: f64,
        #[serde(with = "real::seq")]
        lengths: Vec<f64>,
        normalized: bool,
    },
    /// `μ + Σ χ_{E_k} φ_k dμ`: `((1 + Σm_k)A, (1 + ΣM_k)B)`.
    SumWithDensities {
        #[serde(with = "real::seq")]
        m: Vec<f64>,
        #[serde(with = "real::seq", rename = "M")]
        big_m: Vec<f64>,
    },
    /// `(φ ∗ ρ₁ ∗ ⋯ ∗ ρₙ) dμ`: `(mA, MB)`.
    SmoothBase {
        #[serde(with = "real")]
        m: f64,
        #[serde(with = "real", rename = "M")]
        big_m: f64,
        chain: usize,
    },
    /// `δ_t ∗ μ`: unchanged.
    Translate {
        #[serde(with = "real::seq")]
        t: Vec<f64>,
    },
    /// `ν` kept only on `|n| ≤ cut`: the upper bound still holds, the lower
    /// bound is only checked empirically.
    Truncate { cut: i64 },
}

impl Rule {
    fn apply(&self, (a, b): (f64, f64)) -> (f64, f64) {
        match self {
            Rule::Plancherel => (1.0, 1.0),
            Rule::Stated { a, b } => (*a, *b),
            Rule::FiniteBessel { mass_mu, mass_nu } => (0.0, mass_mu * mass_nu),
            Rule::DiscreteBessel { budget } => (0.0, *budget),
            Rule::SumBessel { other_upper } => {
                let s = b.sqrt() + other_upper.sqrt();
                (0.0, s * s)
            }
            Rule::DensityRestrict { m, big_m }
            | Rule::ScaleFrameMeasure { m, big_m }
            | Rule::SmoothBase { m, big_m, .. } => (m * a, big_m * b),
            Rule::ScaleBase { alpha } => (alpha * a, alpha * b),
            Rule::Mix {
                alpha,
                beta,
                other_a,
                other_b,
            } => (alpha * a + beta * other_a, alpha * b + beta * other_b),
            Rule::ConvolveProbability | Rule::Translate { .. } | Rule::Truncate { .. } => (a, b),
            Rule::ConvolutionChain {
                m,
                big_m,
                lengths,
                normalized,
            } => {
                let f: f64 = if *normalized { 1.0 } else { lengths.iter().product() };
                (m * a * f, big_m * b * f)
            }
            Rule::SumWithDensities { m, big_m } => {
                ((1.0 + m.iter().sum::<f64>()) * a, (1.0 + big_m.iter().sum::<f64>()) * b)
            }
        }
    }

    fn is_base(&self) -> bool {
        matches!(
            self,
            Rule::Plancherel | Rule::Stated { .. } | Rule::FiniteBessel { .. } | Rule::DiscreteBessel { .. }
        )
    }
}

fn fmt_reals(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::Plancherel => write!(f, "plancherel"),
            Rule::Stated { a, b } => write!(f, "stated(A={a}, B={b})"),
            Rule::FiniteBessel { mass_mu, mass_nu } => {
                write!(f, "finite_bessel(mass_mu={mass_mu}, mass_nu={mass_nu})")
            }
            Rule::DiscreteBessel { budget } => write!(f, "discrete_bessel(B={budget})"),
            Rule::SumBessel { other_upper } => write!(f, "sum_bessel(B2={other_upper})"),
            Rule::DensityRestrict { m, big_m } => write!(f, "density_restrict(m={m}, M={big_m})"),
            Rule::ScaleBase { alpha } => write!(f, "scale_base(alpha={alpha})"),
            Rule::ScaleFrameMeasure { m, big_m } => write!(f, "scale_frame_measure(m={m}, M={big_m})"),
            Rule::Mix {
                alpha,
                beta,
                other_a,
                other_b,
            } => write!(f, "mix(alpha={alpha}, beta={beta}, A2={other_a}, B2={other_b})"),
            Rule::ConvolveProbability => write!(f, "convolve_probability"),
            Rule::ConvolutionChain {
                m,
                big_m,
                lengths,
                normalized,
            } => write!(
                f,
                "convolution_chain(m={m}, M={big_m}, lengths={}, normalized={normalized})",
                fmt_reals(lengths)
            ),
            Rule::SumWithDensities { m, big_m } => {
                write!(f, "sum_with_densities(m={}, M={})", fmt_reals(m), fmt_reals(big_m))
            }
            Rule::SmoothBase { m, big_m, chain } => write!(f, "smooth_base(m={m}, M={big_m}, n={chain})"),
            Rule::Translate { t } => write!(f, "translate(t={})", fmt_reals(t)),
            Rule::Truncate { cut } => write!(f, "truncate(|n|<={cut}; lower bound empirical)"),
        }
    }
}

/// Certified frame bounds `A‖f‖² ≤ ∫|f̂dμ|²dν ≤ B‖f‖²` with the bound
/// arithmetic that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CertRecord", into = "CertRecord")]
pub struct BoundCert {
    a: f64,
    b: f64,
    kind: CertKind,
    provenance: Vec<Rule>,
}

#[derive(Serialize, Deserialize)]
struct CertRecord {
    #[serde(rename = "A")]
    a: Real,
    #[serde(rename = "B")]
    b: Real,
    kind: CertKind,
    provenance: Vec<Rule>,
}

impl From<BoundCert> for CertRecord {
    fn from(c: BoundCert) -> Self {
        CertRecord {
            a: Real(c.a),
            b: Real(c.b),
            kind: c.kind,
            provenance: c.provenance,
        }
    }
}

impl TryFrom<CertRecord> for BoundCert {
    type Error = CertError;

    fn try_from(r: CertRecord) -> Result<Self, CertError> {
        let cert = BoundCert::from_rules(r.provenance)?;
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0);
        if !close(cert.a, r.a.0) || !close(cert.b, r.b.0) || cert.kind != r.kind {
            return Err(CertError::Precondition(format!(
                "stated bounds ({}, {}, {:?}) do not match the provenance ({}, {}, {:?})",
                r.a.0, r.b.0, r.kind, cert.a, cert.b, cert.kind
            )));
        }
        Ok(cert)
    }
}

impl BoundCert {
    /// Replays `rules`, which must start with a base rule.
    pub fn from_rules(rules: Vec<Rule>) -> Result<Self, CertError> {
        match rules.first() {
            Some(r) if r.is_base() => {}
            _ => return Err(CertError::Precondition("provenance must start with a base rule".into())),
        }
        if rules.iter().skip(1).any(Rule::is_base) {
            return Err(CertError::Precondition("only the first rule may be a base rule".into()));
        }
        let (a, b) = rules.iter().fold((0.0, 0.0), |ab, r| r.apply(ab));
        if !(a >= 0.0 && b > 0.0 && a <= b && b.is_finite()) {
            return Err(CertError::Precondition(format!("invalid bounds A = {a}, B = {b}")));
        }
        Ok(Self {
            a,
            b,
            kind: CertKind::classify(a, b),
            provenance: rules,
        })
    }

    pub fn plancherel() -> Self {
        Self::from_rules(vec![Rule::Plancherel]).expect("valid base")
    }

    /// Bounds asserted by the caller.
    pub fn stated(a: f64, b: f64) -> Result<Self, CertError> {
        Self::from_rules(vec![Rule::Stated { a, b }])
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn kind(&self) -> CertKind {
        self.kind
    }

    pub fn provenance(&self) -> &[Rule] {
        &self.provenance
    }

    /// The provenance as readable rule strings.
    pub fn provenance_strings(&self) -> Vec<String> {
        self.provenance.iter().map(Rule::to_string).collect()
    }

    /// Recomputes `(A, B)` from the provenance.
    pub fn replay(&self) -> (f64, f64) {
        self.provenance.iter().fold((0.0, 0.0), |ab, r| r.apply(ab))
    }

    /// Appends a rule and recomputes the bounds.
    pub fn then(&self, rule: Rule) -> Result<Self, CertError> {
        let mut rules = self.provenance.clone();
        rules.push(rule);
        Self::from_rules(rules)
    }
}
