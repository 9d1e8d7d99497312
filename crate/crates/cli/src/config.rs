//! The run configuration: a JSON document whose measure subtrees use the
//! node tags of [`MeasureExpr`] one to one.

use std::fmt;

use clap::ValueEnum;
use framecert_core::constructions::{BoundCert, CatalogOptions, CertifiedPair, Truncation};
use framecert_core::measure::{validate, ApproxKind};
use framecert_core::real::{self, Real};
use framecert_core::verifier::{FamilyKind, VerifyOptions, DEFAULT_EXACT_CAP};
use framecert_core::{Accuracy, BoundedDensity, IntervalUnion, MeasureExpr, TestFunction};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Describe,
    Transform,
    Construct,
    Verify,
    LimitCheck,
    Catalog,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Command::Describe => "describe",
            Command::Transform => "transform",
            Command::Construct => "construct",
            Command::Verify => "verify",
            Command::LimitCheck => "limit-check",
            Command::Catalog => "catalog",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    /// Measure for `describe` and `transform`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureExpr>,
    /// Weight `f` of the transform `∫ f e^{−2πitx} dμ`; `f ≡ 1` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<TestFunction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<PairSpec>,
    /// Transformers applied in order by `construct`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub steps: Vec<Step>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<LimitSpec>,
    #[serde(default)]
    pub quad: QuadSpec,
    #[serde(default)]
    pub catalog: CatalogOptions,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadSpec {
    pub ifs_depth: u32,
    pub realize_depth: u32,
    pub quad_points: usize,
    #[serde(rename = "trunc_T")]
    pub trunc_t: u32,
    #[serde(with = "real")]
    pub error_budget: f64,
    #[serde(with = "real")]
    pub resolution: f64,
    #[serde(with = "real")]
    pub window: f64,
    pub exact_cap: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        let acc = Accuracy::default();
        Self {
            ifs_depth: acc.ifs_depth,
            realize_depth: acc.realize_depth,
            quad_points: acc.quad_points,
            trunc_t: 64,
            error_budget: acc.error_budget,
            resolution: acc.resolution,
            window: 64.0,
            exact_cap: DEFAULT_EXACT_CAP,
        }
    }
}

impl QuadSpec {
    pub fn accuracy(&self) -> Accuracy {
        Accuracy {
            ifs_depth: self.ifs_depth,
            realize_depth: self.realize_depth,
            quad_points: self.quad_points,
            error_budget: self.error_budget,
            resolution: self.resolution,
            ..Accuracy::default()
        }
    }

    pub fn verify_options(&self) -> VerifyOptions {
        VerifyOptions {
            accuracy: self.accuracy(),
            window: self.window,
            exact_cap: self.exact_cap,
        }
    }
}

/// Frequencies as an explicit list or as `count` points from `start` to
/// `stop`, evenly or logarithmically spaced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "spacing", rename_all = "snake_case", deny_unknown_fields)]
pub enum Grid {
    List {
        #[serde(with = "real::seq")]
        t: Vec<f64>,
    },
    Linear {
        #[serde(with = "real")]
        start: f64,
        #[serde(with = "real")]
        stop: f64,
        count: usize,
    },
    Log {
        #[serde(with = "real")]
        start: f64,
        #[serde(with = "real")]
        stop: f64,
        count: usize,
    },
}

impl Grid {
    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        let spaced = |start: f64, stop: f64, count: usize, map: &dyn Fn(f64) -> f64| -> Vec<f64> {
            match count {
                0 => vec![],
                1 => vec![map(start)],
                _ => (0..count)
                    .map(|i| map(start + (stop - start) * i as f64 / (count - 1) as f64))
                    .collect(),
            }
        };
        Ok(match self {
            Grid::List { t } => t.clone(),
            Grid::Linear { start, stop, count } => spaced(*start, *stop, *count, &|x| x),
            Grid::Log { start, stop, count } => {
                if !(*start > 0.0 && *stop > 0.0) {
                    return Err(CliError::Config("log grid needs positive endpoints".into()));
                }
                spaced(start.log10(), stop.log10(), *count, &|x| 10f64.powf(x))
            }
        })
    }
}

/// A pair taken from the catalog (1-based index) or given inline; a `cert`
/// next to a catalog index replaces the catalogued certificate.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<MeasureExpr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<MeasureExpr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cert: Option<BoundCert>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<Truncation>,
}

impl PairSpec {
    pub fn resolve(&self, catalog: &[CertifiedPair]) -> Result<CertifiedPair, CliError> {
        let mut pair = match (self.catalog, &self.mu, &self.nu) {
            (Some(k), None, None) => catalog
                .get(k.wrapping_sub(1))
                .cloned()
                .ok_or_else(|| CliError::Config(format!("pair.catalog = {k} is not in 1..={}", catalog.len())))?,
            (None, Some(mu), Some(nu)) => {
                let cert = self
                    .cert
                    .clone()
                    .ok_or_else(|| CliError::Config("inline pair needs a cert".into()))?;
                CertifiedPair::new(mu.clone(), nu.clone(), cert)?
            }
            _ => {
                return Err(CliError::Config(
                    "pair needs either catalog or both mu and nu".into(),
                ))
            }
        };
        if let Some(c) = &self.cert {
            pair.cert = c.clone();
        }
        if let Some(t) = &self.truncation {
            pair.truncation = Some(t.clone());
        }
        Ok(pair)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityPart {
    pub set: IntervalUnion,
    pub phi: BoundedDensity,
}

/// One transformer application.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Step {
    DensityRestrict {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        set: Option<IntervalUnion>,
        phi: BoundedDensity,
    },
    ScaleBase {
        #[serde(with = "real")]
        alpha: f64,
    },
    ScaleFrameMeasure {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<Real>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phi: Option<BoundedDensity>,
    },
    Mix {
        other: PairSpec,
        #[serde(with = "real")]
        alpha: f64,
        #[serde(with = "real")]
        beta: f64,
    },
    SumBessel {
        other: PairSpec,
    },
    ConvolveProbability {
        rho: MeasureExpr,
    },
    ConvolutionChain {
        phi: BoundedDensity,
        sets: Vec<IntervalUnion>,
        #[serde(default = "yes")]
        normalized: bool,
    },
    SumWithDensities {
        parts: Vec<DensityPart>,
    },
    SmoothBase {
        phi: BoundedDensity,
        rhos: Vec<MeasureExpr>,
        #[serde(with = "real")]
        resolution: f64,
    },
    Translate {
        #[serde(with = "real::seq")]
        t: Vec<f64>,
    },
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    pub count: usize,
    #[serde(default = "default_degree")]
    pub max_degree: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn default_degree() -> u32 {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitSpec {
    pub identity: ApproxKind,
    pub n: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

/// Parses and validates a configuration. Schema errors name the offending
/// field path with line and column; measure violations are reported as
/// found by [`validate`].
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        CliError::Config(format!(
            "at `{path}` (line {}, column {}): {inner}",
            inner.line(),
            inner.column()
        ))
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn serialize_config(cfg: &RunConfig) -> String {
    let mut s = serde_json::to_string_pretty(cfg).expect("configs serialize");
    s.push('\n');
    s
}

impl RunConfig {
    fn measures(&self) -> Vec<(String, &MeasureExpr)> {
        let mut out = Vec::new();
        if let Some(m) = &self.measure {
            out.push(("measure".to_string(), m));
        }
        fn pair_measures<'a>(prefix: &str, p: &'a PairSpec, out: &mut Vec<(String, &'a MeasureExpr)>) {
            if let Some(m) = &p.mu {
                out.push((format!("{prefix}.mu"), m));
            }
            if let Some(m) = &p.nu {
                out.push((format!("{prefix}.nu"), m));
            }
        }
        if let Some(p) = &self.pair {
            pair_measures("pair", p, &mut out);
        }
        for (i, s) in self.steps.iter().enumerate() {
            match s {
                Step::Mix { other, .. } | Step::SumBessel { other } => {
                    pair_measures(&format!("steps[{i}].other"), other, &mut out)
                }
                Step::ConvolveProbability { rho } => out.push((format!("steps[{i}].rho"), rho)),
                Step::SmoothBase { rhos, .. } => {
                    for (k, r) in rhos.iter().enumerate() {
                        out.push((format!("steps[{i}].rhos[{k}]"), r));
                    }
                }
                _ => {}
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for (name, m) in self.measures() {
            if let Some(v) = validate(m).into_iter().next() {
                let at = if v.path.is_empty() { String::new() } else { format!("/{}", v.path) };
                return Err(CliError::Config(format!("{name}{at}: {}", v.message)));
            }
        }
        Ok(())
    }
}
