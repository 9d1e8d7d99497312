use framecert_core::constructions::{self as cons, canonical_pairs, CertifiedPair, FrameWeight, DEFAULT_CHAIN_CAP};
use framecert_core::measure::{support_superset, total_mass, validate};
use framecert_core::transform::{ft_grid, TransformRequest};
use framecert_core::verifier::{approx_identity_limit_check, estimate_bounds, gen_test_family};
use serde::Serialize;

use crate::config::{Command, FamilySpec, RunConfig, Step};
use crate::emit;
use crate::CliError;

/// Rendered artifact and exit status of a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub artifact: String,
    pub status: i32,
}

#[derive(Serialize)]
pub struct Description {
    pub dim: usize,
    #[serde(with = "framecert_core::real::opt")]
    pub mass: Option<f64>,
    #[serde(with = "framecert_core::real")]
    pub mass_error: f64,
    pub support: framecert_core::measure::SupportSet,
    pub violations: Vec<framecert_core::measure::Violation>,
}

/// Per-frequency row of the `transform` command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransformRow {
    #[serde(with = "framecert_core::real")]
    pub t: f64,
    #[serde(with = "framecert_core::real")]
    pub re: f64,
    #[serde(with = "framecert_core::real")]
    pub im: f64,
    #[serde(with = "framecert_core::real")]
    pub err: f64,
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let command = cfg
        .command
        .ok_or_else(|| CliError::Config("no command given".into()))?;
    let format = cfg.output.format;
    let catalog = || canonical_pairs(&cfg.catalog).map_err(CliError::from);
    let ok = |artifact| Ok(Outcome { artifact, status: 0 });
    match command {
        Command::Describe => {
            let mu = need(&cfg.measure, "measure")?;
            let mass = total_mass(mu)?;
            let d = Description {
                dim: mu.dim()?,
                mass: mass.value(),
                mass_error: mass.error(),
                support: support_superset(mu),
                violations: validate(mu),
            };
            ok(emit::describe(&d, format))
        }
        Command::Transform => {
            let mu = need(&cfg.measure, "measure")?;
            let t = need(&cfg.grid, "grid")?.points()?;
            let req = TransformRequest {
                t: t.clone(),
                accuracy: cfg.quad.accuracy(),
            };
            let values = ft_grid(cfg.weight.as_ref(), mu, &req)?;
            let rows: Vec<TransformRow> = t
                .iter()
                .zip(values)
                .map(|(t, v)| TransformRow {
                    t: *t,
                    re: v.value.re,
                    im: v.value.im,
                    err: v.abs_error_bound,
                })
                .collect();
            ok(emit::transform(&rows, format))
        }
        Command::Catalog => ok(emit::catalog(&catalog()?, format)),
        Command::Construct => {
            let pairs = catalog()?;
            let mut pair = need(&cfg.pair, "pair")?.resolve(&pairs)?;
            for step in &cfg.steps {
                pair = apply(&pair, step, &pairs)?;
            }
            ok(emit::pair(&pair, format))
        }
        Command::Verify => {
            let pair = need(&cfg.pair, "pair")?.resolve(&catalog()?)?;
            let fam = need(&cfg.family, "family")?;
            let seed = fam
                .seed
                .ok_or_else(|| CliError::Config("verify needs a seed (family.seed or --seed)".into()))?;
            let opts = cfg.quad.verify_options();
            let family = family(&pair.mu, fam, seed, &opts.accuracy)?;
            let report = estimate_bounds(&pair.mu, &pair.nu, &family, Some(&pair.cert), pair.truncation.as_ref(), &opts)?;
            Ok(Outcome {
                status: if report.verdict.is_violation() { 2 } else { 0 },
                artifact: emit::report(&report, format),
            })
        }
        Command::LimitCheck => {
            let pair = need(&cfg.pair, "pair")?.resolve(&catalog()?)?;
            let fam = need(&cfg.family, "family")?;
            let limit = need(&cfg.limit, "limit")?;
            let seed = fam
                .seed
                .ok_or_else(|| CliError::Config("limit-check needs a seed (family.seed or --seed)".into()))?;
            let opts = cfg.quad.verify_options();
            let family = family(&pair.mu, fam, seed, &opts.accuracy)?;
            let report = approx_identity_limit_check(&pair, limit.identity, &limit.n, &family, &opts)?;
            let violated = report.entries.iter().any(|e| e.report.verdict.is_violation());
            Ok(Outcome {
                status: if violated { 2 } else { 0 },
                artifact: emit::limit(&report, format),
            })
        }
    }
}

fn family(
    mu: &framecert_core::MeasureExpr,
    spec: &FamilySpec,
    seed: u64,
    acc: &framecert_core::Accuracy,
) -> Result<Vec<framecert_core::TestFunction>, CliError> {
    if spec.count == 0 {
        return Ok(Vec::new());
    }
    Ok(gen_test_family(mu, spec.kind, spec.count, spec.max_degree, seed, acc)?)
}

fn need<'a, T>(x: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    x.as_ref()
        .ok_or_else(|| CliError::Config(format!("this command needs `{name}`")))
}

fn apply(pair: &CertifiedPair, step: &Step, catalog: &[CertifiedPair]) -> Result<CertifiedPair, CliError> {
    Ok(match step {
        Step::DensityRestrict { set, phi } => cons::density_restrict(pair, set.as_ref(), phi)?,
        Step::ScaleBase { alpha } => cons::scale_base(pair, *alpha)?,
        Step::ScaleFrameMeasure { alpha, phi } => {
            let w = match (alpha, phi) {
                (Some(a), None) => FrameWeight::Constant(a.0),
                (None, Some(p)) => FrameWeight::Density(p.clone()),
                _ => {
                    return Err(CliError::Config(
                        "scale_frame_measure takes exactly one of alpha and phi".into(),
                    ))
                }
            };
            cons::scale_frame_measure(pair, &w)?
        }
        Step::Mix { other, alpha, beta } => cons::mix_frame_measures(pair, &other.resolve(catalog)?, *alpha, *beta)?,
        Step::SumBessel { other } => cons::sum_bessel_pairs(pair, &other.resolve(catalog)?)?,
        Step::ConvolveProbability { rho } => cons::convolve_frame_measure_with_probability(pair, rho)?,
        Step::ConvolutionChain { phi, sets, normalized } => {
            cons::convolution_chain(pair, phi, sets, *normalized, DEFAULT_CHAIN_CAP)?
        }
        Step::SumWithDensities { parts } => {
            let parts: Vec<_> = parts.iter().map(|p| (p.set.clone(), p.phi.clone())).collect();
            cons::sum_with_densities(pair, &parts)?
        }
        Step::SmoothBase { phi, rhos, resolution } => {
            cons::smooth_base(pair, phi, rhos, *resolution, DEFAULT_CHAIN_CAP)?
        }
        Step::Translate { t } => cons::translate_pair(pair, t.clone())?,
    })
}
