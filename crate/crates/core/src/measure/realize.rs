use std::sync::Arc;

use super::{finite_mass, support_superset, Atoms, BoundedDensity, DensityForm, Domain, Ifs, MeasureExpr};
use crate::error::MeasureError;
use crate::interval::{Interval, IntervalUnion};
use crate::quadrature::GaussLegendre;

pub const DEFAULT_ATOM_CAP: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealizeOptions {
    /// IFS unfolding depth.
    pub depth: u32,
    /// Cell width for absolutely continuous parts.
    pub resolution: f64,
    /// Largest atom count any intermediate realization may reach.
    pub cap: usize,
}

impl Default for RealizeOptions {
    fn default() -> Self {
        Self {
            depth: 12,
            resolution: 1.0 / 1024.0,
            cap: DEFAULT_ATOM_CAP,
        }
    }
}

/// Atomic approximation of a measure.
///
/// Each atom stands for a cell of the original measure lying within
/// `spread` of it. When `exact` holds, every atom carries exactly the mass of
/// its cell, which is what quadrature error bounds built on a realization
/// rely on.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub atoms: Atoms,
    pub spread: f64,
    pub exact: bool,
}

/// Depth-`depth` unfolding of IFS leaves and midpoint cells of width at most
/// `resolution` for absolutely continuous parts.
pub fn realize_atomic(mu: &MeasureExpr, depth: u32, resolution: f64) -> Result<MeasureExpr, MeasureError> {
    let opts = RealizeOptions {
        depth,
        resolution,
        ..RealizeOptions::default()
    };
    Ok(MeasureExpr::atomic(realize_with(mu, &opts)?.atoms))
}

pub fn realize_with(mu: &MeasureExpr, opts: &RealizeOptions) -> Result<Realization, MeasureError> {
    if !(opts.resolution > 0.0) || opts.depth == 0 {
        return Err(MeasureError::Invalid(
            "realization needs depth ≥ 1 and a positive resolution".into(),
        ));
    }
    realize_in(mu, None, opts)
}

/// Measures of the form `ψ χ_S dλ` with `ψ` a product of bounded densities.
struct LebesgueForm {
    region: Option<IntervalUnion>,
    densities: Vec<Arc<BoundedDensity>>,
}

fn lebesgue_form(mu: &MeasureExpr) -> Option<LebesgueForm> {
    match mu {
        MeasureExpr::Lebesgue => Some(LebesgueForm {
            region: None,
            densities: Vec::new(),
        }),
        MeasureExpr::LebesgueOnSet { set } => Some(LebesgueForm {
            region: Some(set.clone()),
            densities: Vec::new(),
        }),
        MeasureExpr::Density { phi, base } => {
            let mut f = lebesgue_form(base)?;
            if let Domain::Set(s) = phi.domain() {
                f.region = Some(intersect_region(f.region.as_ref(), s)?);
            }
            f.densities.push(phi.clone());
            Some(f)
        }
        MeasureExpr::Restrict { set, base } => {
            let mut f = lebesgue_form(base)?;
            f.region = Some(intersect_region(f.region.as_ref(), set)?);
            Some(f)
        }
        _ => None,
    }
}

fn intersect_region(region: Option<&IntervalUnion>, set: &IntervalUnion) -> Option<IntervalUnion> {
    match region {
        None => Some(set.clone()),
        Some(r) => r.intersect(set),
    }
}

fn check_cap(count: usize, opts: &RealizeOptions) -> Result<(), MeasureError> {
    if count > opts.cap {
        Err(MeasureError::RealizationTooLarge {
            atoms: count,
            cap: opts.cap,
        })
    } else {
        Ok(())
    }
}

fn realize_in(
    mu: &MeasureExpr,
    window: Option<Interval>,
    opts: &RealizeOptions,
) -> Result<Realization, MeasureError> {
    if let Some(form) = lebesgue_form(mu) {
        if !matches!(mu, MeasureExpr::Lebesgue) || window.is_some() {
            return realize_cells(&form, window, opts);
        }
    }
    match mu {
        MeasureExpr::Lebesgue | MeasureExpr::LebesgueOnSet { .. } => Err(MeasureError::InfiniteMass),
        MeasureExpr::Atomic { atoms } => Ok(Realization {
            atoms: atoms.clone(),
            spread: 0.0,
            exact: true,
        }),
        MeasureExpr::IfsInvariant { ifs } => realize_ifs(ifs, opts),
        MeasureExpr::Density { phi, base } => {
            let r = realize_in(base, window, opts)?;
            if r.atoms.dim() != 1 {
                return Err(MeasureError::Dimension("density over a multi-dimensional measure".into()));
            }
            Ok(Realization {
                atoms: r.atoms.map_weights(|p, w| w * phi.eval(p[0])),
                exact: r.exact && r.spread == 0.0,
                spread: r.spread,
            })
        }
        MeasureExpr::Restrict { set, base } => {
            let hull = set.hull();
            let w = match window {
                Some(w) => Interval::new(w.lo.max(hull.lo), w.hi.min(hull.hi)),
                None => hull,
            };
            let r = realize_in(base, Some(w), opts)?;
            if r.atoms.dim() != 1 {
                return Err(MeasureError::Dimension("restriction of a multi-dimensional measure".into()));
            }
            let s = r.spread;
            let straddles = s > 0.0
                && r.atoms.iter().any(|(p, _)| {
                    set.parts().iter().any(|q| {
                        (p[0] - s < q.lo && q.lo < p[0] + s) || (p[0] - s < q.hi && q.hi < p[0] + s)
                    })
                });
            Ok(Realization {
                atoms: r.atoms.filter(|p| set.contains(p[0])),
                spread: s,
                exact: r.exact && !straddles,
            })
        }
        MeasureExpr::Scale { alpha, base } => {
            let r = realize_in(base, window, opts)?;
            Ok(Realization {
                atoms: r.atoms.map_weights(|_, w| w * alpha),
                ..r
            })
        }
        MeasureExpr::Normalize { base } => {
            let m = finite_mass(base)?;
            if !(m > 0.0) {
                return Err(MeasureError::NormalizeMass(format!("{m}")));
            }
            let r = realize_in(base, window, opts)?;
            Ok(Realization {
                atoms: r.atoms.map_weights(|_, w| w / m),
                ..r
            })
        }
        MeasureExpr::Translate { shift, base } => {
            let w = window.map(|w| Interval::new(w.lo - shift[0], w.hi - shift[0]));
            let r = realize_in(base, w, opts)?;
            Ok(Realization {
                atoms: r.atoms.translate(shift),
                ..r
            })
        }
        MeasureExpr::Sum { left, right } => {
            let a = realize_in(left, window, opts)?;
            let b = realize_in(right, window, opts)?;
            check_cap(a.atoms.len() + b.atoms.len(), opts)?;
            Ok(Realization {
                atoms: a.atoms.concat(&b.atoms)?.merged(0.0),
                spread: a.spread.max(b.spread),
                exact: a.exact && b.exact,
            })
        }
        MeasureExpr::Convolve { left, right } => {
            let side_window = |other: &MeasureExpr| -> Option<Interval> {
                let w = window?;
                let h = support_superset(other).hull()?;
                Some(Interval::new(w.lo - h.hi, w.hi - h.lo))
            };
            let a = realize_in(left, side_window(right), opts)?;
            let b = realize_in(right, side_window(left), opts)?;
            if a.atoms.dim() != b.atoms.dim() {
                return Err(MeasureError::Dimension("convolution of different dimensions".into()));
            }
            check_cap(a.atoms.len().saturating_mul(b.atoms.len()), opts)?;
            let dim = a.atoms.dim();
            let mut coords = Vec::with_capacity(a.atoms.len() * b.atoms.len() * dim);
            let mut weights = Vec::with_capacity(a.atoms.len() * b.atoms.len());
            for (p, wp) in a.atoms.iter() {
                for (q, wq) in b.atoms.iter() {
                    coords.extend(p.iter().zip(q).map(|(x, y)| x + y));
                    weights.push(wp * wq);
                }
            }
            let atoms = Atoms::new(dim, coords, weights)?.merged(4.0 * f64::EPSILON);
            Ok(Realization {
                atoms,
                spread: a.spread + b.spread,
                exact: a.exact && b.exact,
            })
        }
    }
}

fn realize_ifs(ifs: &Ifs, opts: &RealizeOptions) -> Result<Realization, MeasureError> {
    let n = ifs.digits.len();
    let count = (n as f64).powi(opts.depth as i32);
    if count > opts.cap as f64 {
        return Err(MeasureError::RealizationTooLarge {
            atoms: count.min(usize::MAX as f64) as usize,
            cap: opts.cap,
        });
    }
    let r = ifs.scale as f64;
    let mut points = vec![0.0];
    let mut weights = vec![1.0];
    let mut step = 1.0;
    for _ in 0..opts.depth {
        step /= r;
        let mut np = Vec::with_capacity(points.len() * n);
        let mut nw = Vec::with_capacity(points.len() * n);
        for (p, w) in points.iter().zip(&weights) {
            for (a, rho) in ifs.digits.iter().zip(&ifs.weights) {
                np.push(p + *a as f64 * step);
                nw.push(w * rho);
            }
        }
        points = np;
        weights = nw;
    }
    let atoms = Atoms::new(1, points, weights)?.merged(0.0);
    Ok(Realization {
        atoms,
        spread: step * ifs.hull().radius(),
        exact: true,
    })
}

fn realize_cells(
    form: &LebesgueForm,
    window: Option<Interval>,
    opts: &RealizeOptions,
) -> Result<Realization, MeasureError> {
    let region = match (&form.region, window) {
        (Some(r), Some(w)) => r.clip(w.lo, w.hi),
        (Some(r), None) => Some(r.clone()),
        (None, Some(w)) => IntervalUnion::interval(w.lo, w.hi).ok(),
        (None, None) => return Err(MeasureError::InfiniteMass),
    };
    let Some(region) = region else {
        return Ok(Realization {
            atoms: Atoms::line([]),
            spread: 0.0,
            exact: true,
        });
    };
    let h = opts.resolution;
    let estimate = region.length() / h + 2.0 * region.parts().len() as f64;
    check_cap(estimate.min(usize::MAX as f64) as usize, opts)?;
    let mut pairs = Vec::with_capacity(estimate as usize);
    for part in region.parts() {
        let first = (part.lo / h).floor() as i64;
        let last = (part.hi / h).ceil() as i64;
        for k in first..last {
            let lo = (k as f64 * h).max(part.lo);
            let hi = ((k + 1) as f64 * h).min(part.hi);
            if lo < hi {
                let w = cell_mass(&form.densities, lo, hi);
                if w > 0.0 {
                    pairs.push((0.5 * (lo + hi), w));
                }
            }
        }
    }
    Ok(Realization {
        atoms: Atoms::line(pairs),
        spread: 0.5 * h,
        exact: true,
    })
}

/// `∫_lo^hi Π φ_k dx`, exact when every factor is piecewise constant.
fn cell_mass(densities: &[Arc<BoundedDensity>], lo: f64, hi: f64) -> f64 {
    if densities.is_empty() {
        return hi - lo;
    }
    let mut cuts = vec![lo];
    for d in densities {
        cuts.extend(d.kinks().into_iter().filter(|k| lo < *k && *k < hi));
    }
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    let all_constant = densities
        .iter()
        .all(|d| matches!(d.form(), DensityForm::PiecewiseConstant { .. }));
    let product = |x: f64| densities.iter().map(|d| d.eval(x)).product::<f64>();
    let rule = GaussLegendre::cached(16);
    cuts.windows(2)
        .filter(|c| c[0] < c[1])
        .map(|c| {
            if all_constant {
                product(0.5 * (c[0] + c[1])) * (c[1] - c[0])
            } else {
                rule.integrate(c[0], c[1], 1, product)
            }
        })
        .sum()
}
