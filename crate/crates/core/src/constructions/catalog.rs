use serde::{Deserialize, Serialize};

use super::{BoundCert, CertifiedPair, Rule, Truncation};
use crate::error::CertError;
use crate::interval::IntervalUnion;
use crate::measure::{Atoms, BoundedDensity, Domain, Ifs, MeasureExpr};
use crate::transform::ifs_transform;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogOptions {
    /// `F` of the Lebesgue pair.
    pub f_set: IntervalUnion,
    /// `E ⊆ [0, 1]` of the integer-lattice pair.
    pub e_set: IntervalUnion,
    /// Lattice pairs keep the atoms with `|n| ≤ trunc_t`.
    pub trunc_t: u32,
    pub ifs_depth: u32,
}

impl Default for CatalogOptions {
    fn default() -> Self {
        let unit = IntervalUnion::interval(0.0, 1.0).expect("unit interval");
        Self {
            f_set: unit.clone(),
            e_set: unit,
            trunc_t: 64,
            ifs_depth: 32,
        }
    }
}

/// Quarter Cantor measure with digits `{0, 2}`.
pub fn mu4() -> Ifs {
    Ifs::uniform(4, vec![0, 2])
}

/// Its spectral companion with digits `{0, 1}`.
pub fn mu4_dual() -> Ifs {
    Ifs::uniform(4, vec![0, 1])
}

/// The four catalogued pairs:
///
/// 1. `(χ_F dλ, λ)`, Plancherel;
/// 2. `(χ_E dλ, Σ_{|n|≤T} δ_n)` with `E ⊆ [0, 1]`, Plancherel up to truncation;
/// 3. `(μ₄, |μ̂′₄|² dλ)`, Plancherel;
/// 4. `(μ₄, Σ_{|n|≤T} |μ̂′₄(n)|² δ_n)`, Plancherel up to truncation.
///
/// The third frame measure lives on the whole line: at `f ≡ 1` the frame
/// ratio is `∫ |μ̂₄ μ̂′₄|² dλ = 1` because `μ₄ ∗ μ′₄` is Lebesgue measure on
/// `[0, 1]`.
pub fn canonical_pairs(opts: &CatalogOptions) -> Result<Vec<CertifiedPair>, CertError> {
    let unit = IntervalUnion::interval(0.0, 1.0)?;
    if !unit.covers(&opts.e_set, 0.0) {
        return Err(CertError::Precondition("E must lie inside [0, 1]".into()));
    }
    let cut = i64::from(opts.trunc_t);
    let truncated = BoundCert::from_rules(vec![Rule::Plancherel, Rule::Truncate { cut }])?;

    let lebesgue = CertifiedPair::new(
        MeasureExpr::lebesgue_on(opts.f_set.clone()),
        MeasureExpr::Lebesgue,
        BoundCert::plancherel(),
    )?;

    let lattice = Atoms::line((-cut..=cut).map(|n| (n as f64, 1.0)));
    let integers = CertifiedPair::new(
        MeasureExpr::lebesgue_on(opts.e_set.clone()),
        MeasureExpr::atomic(lattice),
        truncated.clone(),
    )?
    .with_truncation(Truncation::lattice(cut, 1.0));

    let spectrum = BoundedDensity::ifs_power_spectrum(mu4_dual(), opts.ifs_depth, Domain::Line)?;
    let continuous = CertifiedPair::new(
        MeasureExpr::ifs(mu4()),
        MeasureExpr::Lebesgue.density(spectrum),
        BoundCert::plancherel(),
    )?;

    let dual = mu4_dual();
    let weighted = Atoms::line((-cut..=cut).filter_map(|n| {
        let w = ifs_transform(&dual, n as f64, opts.ifs_depth).value.norm_sqr();
        (w > 0.0).then_some((n as f64, w))
    }));
    let discrete = CertifiedPair::new(MeasureExpr::ifs(mu4()), MeasureExpr::atomic(weighted), truncated)?
        .with_truncation(Truncation::lattice(cut, 1.0));

    Ok(vec![lebesgue, integers, continuous, discrete])
}
