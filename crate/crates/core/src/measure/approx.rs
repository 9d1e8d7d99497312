use serde::{Deserialize, Serialize};

use super::{BoundedDensity, Domain, MeasureExpr};
use crate::error::MeasureError;
use crate::interval::IntervalUnion;

/// The four standard approximate identities on the line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ApproxKind {
    /// `n χ_[0,1/n]`
    I,
    /// `(n/2) χ_[−1/n,1/n]`
    Ii,
    /// `n(n+1) χ_[1/(n+1),1/n]`
    Iii,
    /// `m^{n−1} χ_[0,m^{1−n}]`
    Iv { m: u32 },
}

/// The `n`-th member of the approximate identity `kind`: a uniform
/// probability density on a shrinking interval.
pub fn approximate_identity(kind: ApproxKind, n: u32) -> Result<MeasureExpr, MeasureError> {
    if n == 0 {
        return Err(MeasureError::InvalidApproximateIdentity("n must be at least 1".into()));
    }
    let nf = n as f64;
    let (lo, hi) = match kind {
        ApproxKind::I => (0.0, 1.0 / nf),
        ApproxKind::Ii => (-1.0 / nf, 1.0 / nf),
        ApproxKind::Iii => (1.0 / (nf + 1.0), 1.0 / nf),
        ApproxKind::Iv { m } if m >= 2 => (0.0, (m as f64).powi(1 - n as i32)),
        ApproxKind::Iv { m } => {
            return Err(MeasureError::InvalidApproximateIdentity(format!("m = {m} must be at least 2")))
        }
    };
    let height = match kind {
        ApproxKind::I => nf,
        ApproxKind::Ii => nf / 2.0,
        ApproxKind::Iii => nf * (nf + 1.0),
        ApproxKind::Iv { m } => (m as f64).powi(n as i32 - 1),
    };
    let set = IntervalUnion::interval(lo, hi)?;
    let phi = BoundedDensity::constant(height, Domain::Set(set.clone()))?;
    Ok(MeasureExpr::lebesgue_on(set).density(phi))
}
