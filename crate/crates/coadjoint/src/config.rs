//! JSON run configuration and its validation.

use std::path::Path;

use coadjoint_core::gaudin::{self, GaudinOrbit};
use coadjoint_core::linalg::{self, ComplexMatrix};
use coadjoint_core::multitime::{FlowId, MultiTimePath};
use coadjoint_core::sampling::{self, GaudinSampling};
use coadjoint_core::scalar::Complex64;
use coadjoint_core::toda_aks::{self, AksChart, CanonicalQP, CanonicalUB, FlaschkaPoint};
use coadjoint_core::toda_cartan::{self, CartanChart, WZPoint};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::harness::{all_gaudin_flows, CheckId, HarnessError, ModelKind, SuiteConfig};

/// Default time span and step of simulated flows.
pub const DEFAULT_DURATION: f64 = 1.0;
pub const DEFAULT_STEP: f64 = 1e-3;
/// Default tolerance of the action comparison.
pub const DEFAULT_ACTION_TOLERANCE: f64 = 1e-6;
/// Trace defect accepted for user-supplied traceless matrices.
pub const TRACE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed configuration: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Harness(#[from] HarnessError),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

/// A complex number written as a JSON number or a `[re, im]` pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexValue {
    Real(f64),
    Pair([f64; 2]),
}

impl ComplexValue {
    pub fn value(self) -> Complex64 {
        match self {
            ComplexValue::Real(x) => Complex64::new(x, 0.0),
            ComplexValue::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

/// Square matrix given by rows.
pub type MatrixValue = Vec<Vec<ComplexValue>>;

fn matrix(rows: &MatrixValue, what: &str) -> Result<ComplexMatrix, ConfigError> {
    let rows: Vec<Vec<Complex64>> = rows.iter().map(|r| r.iter().map(|c| c.value()).collect()).collect();
    ComplexMatrix::from_rows(&rows).map_err(|e| ConfigError::Invalid(format!("{what}: {e}")))
}

fn check_traceless(m: &ComplexMatrix, what: &str) -> Result<(), ConfigError> {
    let defect = m.trace().norm();
    if !m.is_finite() || defect > TRACE_TOLERANCE * (1.0 + m.max_abs()) {
        return invalid(format!("{what} must be finite and traceless (trace {})", m.trace()));
    }
    Ok(())
}

/// Initial point of a Toda chain in a named chart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "chart", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialPoint {
    Flaschka { a: Vec<f64>, b: Vec<f64> },
    Ub { u: Vec<f64>, b: Vec<f64> },
    Qp { q: Vec<f64>, p: Vec<f64> },
    Wz { w: Vec<f64>, z: Vec<f64> },
}

impl InitialPoint {
    fn flaschka(&self) -> Result<FlaschkaPoint, ConfigError> {
        let wrap = |e: coadjoint_core::Error| ConfigError::Invalid(format!("initial point: {e}"));
        Ok(match self {
            InitialPoint::Flaschka { a, b } => FlaschkaPoint::new(a.clone(), b.clone()).map_err(wrap)?,
            InitialPoint::Ub { u, b } => {
                toda_aks::ub_to_flaschka(&CanonicalUB::new(u.clone(), b.clone()).map_err(wrap)?)
            }
            InitialPoint::Qp { q, p } => {
                let qp = CanonicalQP {
                    q: q.clone(),
                    p: p.clone(),
                };
                toda_aks::ub_to_flaschka(&toda_aks::qp_to_ub(&qp).map_err(wrap)?)
            }
            InitialPoint::Wz { w, z } => {
                toda_cartan::wz_to_flaschka(&WZPoint::new(w.clone(), z.clone()).map_err(wrap)?)
            }
        })
    }
}

/// Gaudin data; absent pieces are drawn from the seed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaudinConfig {
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub poles: Option<Vec<ComplexValue>>,
    #[serde(default)]
    pub lambdas: Option<Vec<MatrixValue>>,
    #[serde(default)]
    pub phis: Option<Vec<MatrixValue>>,
    #[serde(default)]
    pub omega: Option<MatrixValue>,
    /// Restricts sampled data to real values.
    #[serde(default)]
    pub real: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    pub level: usize,
    /// Pole index for Gaudin flows; ignored by Toda chains.
    #[serde(default)]
    pub site: usize,
}

impl From<FlowSpec> for FlowId {
    fn from(f: FlowSpec) -> Self {
        FlowId::new(f.level, f.site)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSpec {
    pub flow: FlowSpec,
    /// Signed time along the flow.
    pub duration: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathPair {
    pub first: Vec<SegmentSpec>,
    pub second: Vec<SegmentSpec>,
}

/// One run of the command-line tool.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub model: ModelKind,
    /// Toda: `N` with `L ∈ sl(N+1)`; Gaudin: number of poles.
    #[serde(default)]
    pub sites: Option<usize>,
    #[serde(default)]
    pub initial: Option<InitialPoint>,
    #[serde(default)]
    pub gaudin: Option<GaudinConfig>,
    /// Flows to simulate; all flows of the model when absent.
    #[serde(default)]
    pub flows: Option<Vec<FlowSpec>>,
    #[serde(default = "default_duration")]
    pub duration: f64,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub checks: Option<Vec<String>>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub paths: Option<PathPair>,
    #[serde(default)]
    pub action_tolerance: Option<f64>,
}

fn default_duration() -> f64 {
    DEFAULT_DURATION
}

fn default_step() -> f64 {
    DEFAULT_STEP
}

/// A configured model together with its start point.
#[derive(Clone, Debug)]
pub enum ModelInstance {
    TodaAks { chart: AksChart, start: Vec<f64> },
    TodaCartan { chart: CartanChart, start: Vec<f64> },
    Gaudin { orbit: GaudinOrbit },
}

impl ModelInstance {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelInstance::TodaAks { .. } => ModelKind::TodaAks,
            ModelInstance::TodaCartan { .. } => ModelKind::TodaCartan,
            ModelInstance::Gaudin { .. } => ModelKind::Gaudin,
        }
    }

    pub fn flows(&self) -> Vec<FlowId> {
        use coadjoint_core::multitime::FlowSystem;
        match self {
            ModelInstance::TodaAks { chart, .. } => chart.flows(),
            ModelInstance::TodaCartan { chart, .. } => chart.flows(),
            ModelInstance::Gaudin { orbit } => all_gaudin_flows(orbit.poles().len()),
        }
    }
}

impl ModelConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ModelConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Structural checks that need no model construction.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return invalid(format!(
                "duration must be finite and non-negative, got {}",
                self.duration
            ));
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return invalid(format!("step must be finite and positive, got {}", self.step));
        }
        if let Some(t) = self.action_tolerance {
            if !(t.is_finite() && t >= 0.0) {
                return invalid(format!("action tolerance must be finite and non-negative, got {t}"));
            }
        }
        if self.sites == Some(0) {
            return invalid("sites must be positive");
        }
        match self.model {
            ModelKind::Gaudin => {
                if self.initial.is_some() {
                    return invalid("`initial` applies to Toda models; use `gaudin` for Gaudin data");
                }
            }
            _ => {
                if self.gaudin.is_some() {
                    return invalid("`gaudin` data given for a Toda model");
                }
            }
        }
        self.suite()?;
        if let Some(paths) = &self.paths {
            for seg in paths.first.iter().chain(&paths.second) {
                if !seg.duration.is_finite() {
                    return invalid("path segment durations must be finite");
                }
            }
        }
        Ok(())
    }

    /// Toda site count implied by the configuration.
    fn toda_sites(&self) -> Result<usize, ConfigError> {
        let implied = match &self.initial {
            Some(p) => Some(p.flaschka()?.sites()),
            None => None,
        };
        match (self.sites, implied) {
            (Some(s), Some(i)) if s != i => invalid(format!("sites = {s} but the initial point has {i} sites")),
            (s, i) => Ok(s.or(i).unwrap_or(2)),
        }
    }

    fn gaudin_shape(&self) -> (usize, usize) {
        let g = self.gaudin.clone().unwrap_or_default();
        let sites = self
            .sites
            .or(g.poles.as_ref().map(Vec::len))
            .or(g.lambdas.as_ref().map(Vec::len))
            .unwrap_or(3);
        let dim = g
            .dim
            .or(g.lambdas.as_ref().and_then(|l| l.first()).map(Vec::len))
            .unwrap_or(2);
        (sites, dim)
    }

    /// Campaign settings for `verify`.
    pub fn suite(&self) -> Result<SuiteConfig, ConfigError> {
        let mut suite = SuiteConfig::new(self.model, self.seed);
        match self.model {
            ModelKind::Gaudin => (suite.sites, suite.dim) = self.gaudin_shape(),
            _ => suite.sites = self.toda_sites()?,
        }
        suite.samples = self.samples;
        if let Some(ids) = &self.checks {
            suite.checks = Some(ids.iter().map(|s| s.parse::<CheckId>()).collect::<Result<_, _>>()?);
        }
        suite.validate()?;
        Ok(suite)
    }

    /// Flows to simulate.
    pub fn flow_ids(&self, instance: &ModelInstance) -> Result<Vec<FlowId>, ConfigError> {
        let available = instance.flows();
        let Some(flows) = &self.flows else { return Ok(available) };
        let ids: Vec<FlowId> = flows.iter().map(|&f| f.into()).collect();
        if let Some(bad) = ids.iter().find(|f| !available.contains(f)) {
            return invalid(format!("flow {bad} is not provided by model {}", self.model));
        }
        Ok(ids)
    }

    /// The two action paths, with the configured step.
    pub fn action_paths(&self) -> Result<(MultiTimePath, MultiTimePath), ConfigError> {
        let Some(paths) = &self.paths else {
            return invalid("`paths` is required for the action command");
        };
        let build = |segs: &[SegmentSpec]| {
            segs.iter()
                .fold(MultiTimePath::new(self.step), |p, s| p.then(s.flow.into(), s.duration))
        };
        Ok((build(&paths.first), build(&paths.second)))
    }

    /// Builds the model and its start point, drawing unspecified data from
    /// `seed`.
    pub fn instance(&self, seed: u64) -> Result<ModelInstance, ConfigError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match self.model {
            ModelKind::TodaAks | ModelKind::TodaCartan => {
                let sites = self.toda_sites()?;
                if sites >= linalg::MAX_DIM {
                    return invalid(format!("{sites} sites exceed the supported size"));
                }
                let point = match &self.initial {
                    Some(p) => p.flaschka()?,
                    None if self.model == ModelKind::TodaAks => sampling::random_flaschka(&mut rng, sites),
                    None => toda_cartan::wz_to_flaschka(&sampling::random_wz(&mut rng, sites)),
                };
                if let (ModelKind::TodaAks, Some(InitialPoint::Ub { u, b })) = (self.model, &self.initial) {
                    let start = u.iter().chain(b).copied().collect();
                    Ok(ModelInstance::TodaAks {
                        chart: AksChart { sites },
                        start,
                    })
                } else if let (ModelKind::TodaCartan, Some(InitialPoint::Wz { w, z })) = (self.model, &self.initial) {
                    let start = w.iter().chain(z).copied().collect();
                    Ok(ModelInstance::TodaCartan {
                        chart: CartanChart { sites },
                        start,
                    })
                } else if self.model == ModelKind::TodaAks {
                    let start = toda_aks::flaschka_to_ub(&point).to_vec();
                    Ok(ModelInstance::TodaAks {
                        chart: AksChart { sites },
                        start,
                    })
                } else {
                    let start = toda_cartan::flaschka_to_wz(&point).to_vec();
                    Ok(ModelInstance::TodaCartan {
                        chart: CartanChart { sites },
                        start,
                    })
                }
            }
            ModelKind::Gaudin => self.gaudin_instance(&mut rng),
        }
    }

    fn gaudin_instance(&self, rng: &mut ChaCha8Rng) -> Result<ModelInstance, ConfigError> {
        let g = self.gaudin.clone().unwrap_or_default();
        let (sites, dim) = self.gaudin_shape();
        if !(1..=gaudin::MAX_SITES).contains(&sites) || !(2..=gaudin::MAX_RESIDUE_DIM).contains(&dim) {
            return invalid(format!("unsupported Gaudin shape: {sites} sites, dimension {dim}"));
        }
        let random = sampling::random_gaudin(
            rng,
            &GaudinSampling {
                sites,
                dim,
                real: g.real,
            },
        );
        let poles = match &g.poles {
            Some(p) => p.iter().map(|c| c.value()).collect(),
            None => random.poles().to_vec(),
        };
        if poles.len() != sites {
            return invalid(format!("{} poles given for {sites} sites", poles.len()));
        }
        for (i, a) in poles.iter().enumerate() {
            if !(a.re.is_finite() && a.im.is_finite())
                || poles[..i].iter().any(|b| (a - b).norm() <= gaudin::POLE_GUARD)
            {
                return invalid("poles must be finite and distinct");
            }
        }
        let lambdas = match &g.lambdas {
            Some(ls) => ls
                .iter()
                .enumerate()
                .map(|(s, m)| {
                    let m = matrix(m, &format!("lambda {s}"))?;
                    check_traceless(&m, &format!("lambda {s}"))?;
                    Ok(m)
                })
                .collect::<Result<Vec<_>, ConfigError>>()?,
            None => random.lambdas().to_vec(),
        };
        let phis = match &g.phis {
            Some(ps) => ps
                .iter()
                .enumerate()
                .map(|(s, m)| matrix(m, &format!("phi {s}")))
                .collect::<Result<Vec<_>, _>>()?,
            None if g.lambdas.is_some() => vec![ComplexMatrix::identity(dim); sites],
            None => random.phis().to_vec(),
        };
        let omega = match &g.omega {
            Some(m) => {
                let m = matrix(m, "omega")?;
                check_traceless(&m, "omega")?;
                m
            }
            None if g.lambdas.is_some() => ComplexMatrix::zeros(dim),
            None => random.omega().clone(),
        };
        if lambdas.len() != sites || phis.len() != sites {
            return invalid(format!("expected {sites} lambdas and phis"));
        }
        if lambdas.iter().chain(&phis).chain([&omega]).any(|m| m.dim() != dim) {
            return invalid(format!("all Gaudin matrices must be {dim}×{dim}"));
        }
        let orbit = GaudinOrbit::new(poles, lambdas, phis, omega)
            .map_err(|e| ConfigError::Invalid(format!("Gaudin data: {e}")))?;
        Ok(ModelInstance::Gaudin { orbit })
    }
}
