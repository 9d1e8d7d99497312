use serde::Serialize;

use super::{total_mass, DensityForm, Mass, MeasureExpr};

/// One broken invariant, located by the path of node tags from the root.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

/// Checks the structural invariants of every node; an empty list means the
/// expression is well formed.
pub fn validate(mu: &MeasureExpr) -> Vec<Violation> {
    let mut out = Vec::new();
    walk(mu, mu.tag().to_string(), &mut out);
    out
}

fn walk(mu: &MeasureExpr, path: String, out: &mut Vec<Violation>) {
    let mut found: Vec<String> = Vec::new();
    let mut flag = |message: String| found.push(message);
    let mut children: Vec<(&MeasureExpr, &str)> = Vec::new();
    match mu {
        MeasureExpr::Lebesgue | MeasureExpr::LebesgueOnSet { .. } => {}
        MeasureExpr::Atomic { atoms } => {
            if atoms.is_empty() {
                flag("no atoms".into());
            }
            if atoms.weights().iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
                flag("non-positive weight".into());
            }
            if atoms.coords().iter().any(|x| !x.is_finite()) {
                flag("non-finite atom coordinate".into());
            }
            if atoms.merged(0.0).len() != atoms.len() {
                flag("duplicate atom points".into());
            }
        }
        MeasureExpr::IfsInvariant { ifs } => {
            if ifs.scale < 2 {
                flag(format!("scale factor {} < 2", ifs.scale));
            }
            if ifs.digits.is_empty() {
                flag("no digits".into());
            }
            if ifs.digits.len() != ifs.weights.len() {
                flag(format!(
                    "{} digits but {} weights",
                    ifs.digits.len(),
                    ifs.weights.len()
                ));
            }
            let mut d = ifs.digits.clone();
            d.sort_unstable();
            d.dedup();
            if d.len() != ifs.digits.len() {
                flag("duplicate digits".into());
            }
            if ifs.weights.iter().any(|w| !(*w > 0.0)) {
                flag("non-positive weight".into());
            }
            let sum: f64 = ifs.weights.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                flag(format!("weights sum {sum} ≠ 1"));
            }
        }
        MeasureExpr::Density { phi, base } => {
            if !(phi.lower() > 0.0 || matches!(phi.form(), DensityForm::IfsPowerSpectrum { .. })) {
                flag(format!("density lower envelope {} is not positive", phi.lower()));
            }
            if !matches!(base.dim(), Ok(1)) {
                flag("density over a measure that is not on the line".into());
            }
            children.push((base, "base"));
        }
        MeasureExpr::Restrict { base, .. } => {
            if !matches!(base.dim(), Ok(1)) {
                flag("restriction of a measure that is not on the line".into());
            }
            children.push((base, "base"));
        }
        MeasureExpr::Scale { alpha, base } => {
            if !(*alpha > 0.0 && alpha.is_finite()) {
                flag(format!("scale factor {alpha} is not positive"));
            }
            children.push((base, "base"));
        }
        MeasureExpr::Translate { shift, base } => {
            if shift.iter().any(|s| !s.is_finite()) {
                flag("non-finite shift".into());
            }
            if let Ok(d) = base.dim() {
                if d != shift.len() {
                    flag(format!("shift of length {} on dimension {d}", shift.len()));
                }
            }
            children.push((base, "base"));
        }
        MeasureExpr::Normalize { base } => {
            match total_mass(base) {
                Ok(Mass::Finite { value, .. }) if value > 0.0 => {}
                Ok(Mass::Finite { value, .. }) => flag(format!("normalizing zero mass {value}")),
                Ok(Mass::Infinite) => flag("normalizing infinite mass".into()),
                Err(e) => flag(e.to_string()),
            }
            children.push((base, "base"));
        }
        MeasureExpr::Sum { left, right } | MeasureExpr::Convolve { left, right } => {
            if let (Ok(a), Ok(b)) = (left.dim(), right.dim()) {
                if a != b {
                    flag(format!("children have dimensions {a} and {b}"));
                }
            }
            children.push((left, "left"));
            children.push((right, "right"));
        }
    }
    out.extend(found.into_iter().map(|message| Violation {
        path: path.clone(),
        message,
    }));
    for (child, name) in children {
        walk(child, format!("{path}/{name}:{}", child.tag()), out);
    }
}
