//! Verification campaigns: seeded sweeps of the structural identities over
//! the three models, aggregated into [`VerificationReport`]s.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use coadjoint_core::dialgebra::{ROperator, Which};
use coadjoint_core::gaudin::{self, GaudinGroup, GaudinOrbit, GaudinResidues};
use coadjoint_core::lie_core::trace_pairing;
use coadjoint_core::linalg::{ComplexMatrix, RealMatrix};
use coadjoint_core::multitime::{
    closure_residual, double_zero_identity, integrate_flow, path_endpoint, Derivatives, FlowId, FlowSystem, JetPoint,
    LagrangianSystem, MultiTimePath, CLOSURE_HALF_WIDTH,
};
use coadjoint_core::sampling::{self, GaudinSampling};
use coadjoint_core::scalar::{Complex64, Scalar};
use coadjoint_core::toda_aks::{self, AksChart, FlaschkaPoint, FlaschkaSystem};
use coadjoint_core::toda_cartan::{self, CartanChart, TIME_SCALE};
use coadjoint_core::{linalg, Error as CoreError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    TodaAks,
    TodaCartan,
    Gaudin,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::TodaAks, ModelKind::TodaCartan, ModelKind::Gaudin];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::TodaAks => "toda-aks",
            ModelKind::TodaCartan => "toda-cartan",
            ModelKind::Gaudin => "gaudin",
        }
    }

    /// Checks run when none are requested explicitly.
    pub fn default_checks(self) -> Vec<CheckId> {
        CheckId::ALL.into_iter().filter(|c| c.applies_to(self)).collect()
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelKind::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| HarnessError::UnknownModel(s.to_owned()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckId {
    Mcybe,
    Skewness,
    Involution,
    Isospectrality,
    FlowCommutativity,
    ChartConsistency,
    ElVsLax,
    Closure,
    DoubleZeroIdentity,
    FactorisationOracle,
    HamiltonianExtraction,
}

impl CheckId {
    pub const ALL: [CheckId; 11] = [
        CheckId::Mcybe,
        CheckId::Skewness,
        CheckId::Involution,
        CheckId::Isospectrality,
        CheckId::FlowCommutativity,
        CheckId::ChartConsistency,
        CheckId::ElVsLax,
        CheckId::Closure,
        CheckId::DoubleZeroIdentity,
        CheckId::FactorisationOracle,
        CheckId::HamiltonianExtraction,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckId::Mcybe => "mcybe",
            CheckId::Skewness => "skewness",
            CheckId::Involution => "involution",
            CheckId::Isospectrality => "isospectrality",
            CheckId::FlowCommutativity => "flow-commutativity",
            CheckId::ChartConsistency => "chart-consistency",
            CheckId::ElVsLax => "el-vs-lax",
            CheckId::Closure => "closure",
            CheckId::DoubleZeroIdentity => "double-zero-identity",
            CheckId::FactorisationOracle => "factorisation-oracle",
            CheckId::HamiltonianExtraction => "hamiltonian-extraction",
        }
    }

    pub fn applies_to(self, model: ModelKind) -> bool {
        use CheckId::*;
        match model {
            ModelKind::TodaAks => self != HamiltonianExtraction,
            ModelKind::TodaCartan => !matches!(self, FactorisationOracle | HamiltonianExtraction),
            ModelKind::Gaudin => !matches!(self, Mcybe | Skewness | DoubleZeroIdentity | FactorisationOracle),
        }
    }

    /// Samples drawn when the campaign does not override the count.
    pub fn default_samples(self) -> usize {
        match self {
            CheckId::Mcybe | CheckId::Skewness => 200,
            CheckId::Involution | CheckId::ChartConsistency | CheckId::ElVsLax | CheckId::DoubleZeroIdentity => 100,
            CheckId::Isospectrality | CheckId::Closure => 3,
            CheckId::FlowCommutativity => 2,
            CheckId::FactorisationOracle => 10,
            CheckId::HamiltonianExtraction => 20,
        }
    }

    /// Stream index of the check's random generator.
    fn stream(self) -> u64 {
        CheckId::ALL.iter().position(|&c| c == self).unwrap() as u64 + 1
    }
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CheckId {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CheckId::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| HarnessError::UnknownCheck(s.to_owned()))
    }
}

/// Tolerances of every check. A row with a model overrides the generic row.
pub const TOLERANCES: &[(CheckId, Option<ModelKind>, f64)] = &[
    (CheckId::Mcybe, None, 1e-12),
    (CheckId::Skewness, None, 1e-12),
    (CheckId::Involution, None, 1e-11),
    (CheckId::Isospectrality, None, 1e-8),
    (CheckId::FlowCommutativity, None, 1e-7),
    (CheckId::ChartConsistency, None, 1e-10),
    (CheckId::ElVsLax, None, 1e-10),
    (CheckId::ElVsLax, Some(ModelKind::Gaudin), 1e-9),
    (CheckId::Closure, None, 1e-6),
    (CheckId::DoubleZeroIdentity, None, 1e-6),
    (CheckId::FactorisationOracle, None, 1e-6),
    (CheckId::HamiltonianExtraction, None, 1e-9),
];

pub fn tolerance(check: CheckId, model: ModelKind) -> f64 {
    let specific = TOLERANCES.iter().find(|(c, m, _)| *c == check && *m == Some(model));
    let generic = TOLERANCES.iter().find(|(c, m, _)| *c == check && m.is_none());
    specific.or(generic).map(|r| r.2).expect("every check has a tolerance")
}

/// Ratio between the on-shell and off-shell tolerances of the double-zero
/// check; on-shell magnitudes are multiplied by it before aggregation.
pub const ON_SHELL_WEIGHT: f64 = 100.0;
/// Lower bound on the AKS skewness defect over basis pairs.
pub const AKS_MIN_SKEW_DEFECT: f64 = 0.1;
/// Accepted deviation of the fitted RK4 order from 4.
pub const ORDER_TOLERANCE: f64 = 0.2;
/// Step sizes of the convergence-order fit.
pub const ORDER_STEPS: [f64; 4] = [0.02, 0.01, 0.005, 0.0025];
/// Residual charged when a qualitative side condition of a check fails.
pub const SIDE_CONDITION_PENALTY: f64 = 1.0;

/// Integration parameters shared by the dynamical checks.
pub const DEFAULT_STEP: f64 = 1e-3;
pub const ISOSPECTRAL_TIME: f64 = 1.0;
pub const STAIRCASE_LEG: f64 = 0.1;
pub const FACTORISATION_STEP: f64 = 1e-4;
pub const FACTORISATION_TIME: f64 = 1.0;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("unknown check id `{0}`")]
    UnknownCheck(String),
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("check `{check}` does not apply to model `{model}`")]
    NotApplicable { check: CheckId, model: ModelKind },
    #[error("invalid size: {0}")]
    InvalidSize(String),
    #[error("check `{check}` could not be evaluated: {source}")]
    Runtime {
        check: CheckId,
        #[source]
        source: CoreError,
    },
}

/// One check run on one model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub model: ModelKind,
    pub check: CheckId,
    pub samples: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub seed: u64,
    /// Wall-clock time in seconds.
    pub timing: f64,
}

/// Campaign description.
#[derive(Clone, Debug, PartialEq)]
pub struct SuiteConfig {
    pub model: ModelKind,
    /// Toda: `N` with `L ∈ sl(N+1)`; Gaudin: number of poles.
    pub sites: usize,
    /// Gaudin residue size.
    pub dim: usize,
    pub seed: u64,
    /// `None` runs the model's default checks.
    pub checks: Option<Vec<CheckId>>,
    /// Overrides every check's sample count.
    pub samples: Option<usize>,
    pub tolerance_scale: f64,
}

impl SuiteConfig {
    /// Default sizes: `sl(3)` Toda chains, 3-site `sl(2)` Gaudin models.
    pub fn new(model: ModelKind, seed: u64) -> Self {
        let sites = if model == ModelKind::Gaudin { 3 } else { 2 };
        Self {
            model,
            sites,
            dim: 2,
            seed,
            checks: None,
            samples: None,
            tolerance_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let ok = match self.model {
            ModelKind::Gaudin => {
                (1..=gaudin::MAX_SITES).contains(&self.sites) && (2..=gaudin::MAX_RESIDUE_DIM).contains(&self.dim)
            }
            _ => (1..linalg::MAX_DIM).contains(&self.sites),
        };
        if !ok {
            return Err(HarnessError::InvalidSize(format!(
                "{} sites, dimension {} for model {}",
                self.sites, self.dim, self.model
            )));
        }
        if !(self.tolerance_scale >= 0.0 && self.tolerance_scale.is_finite()) {
            return Err(HarnessError::InvalidSize(format!(
                "tolerance scale {}",
                self.tolerance_scale
            )));
        }
        if let Some(checks) = &self.checks {
            if let Some(&check) = checks.iter().find(|c| !c.applies_to(self.model)) {
                return Err(HarnessError::NotApplicable {
                    check,
                    model: self.model,
                });
            }
        }
        Ok(())
    }
}

/// Runs the selected checks, in parallel, returning reports in request order.
pub fn run_suite(config: &SuiteConfig) -> Result<Vec<VerificationReport>, HarnessError> {
    config.validate()?;
    let checks = config.checks.clone().unwrap_or_else(|| config.model.default_checks());
    checks
        .par_iter()
        .map(|&check| {
            let samples = config.samples.unwrap_or(check.default_samples());
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(check.stream());
            let started = Instant::now();
            let ctx = Ctx {
                model: config.model,
                sites: config.sites,
                dim: config.dim,
            };
            let residual =
                run_check(&ctx, check, &mut rng, samples).map_err(|source| HarnessError::Runtime { check, source })?;
            let tolerance = tolerance(check, config.model) * config.tolerance_scale;
            Ok(VerificationReport {
                model: config.model,
                check,
                samples,
                max_residual: residual,
                tolerance,
                pass: residual <= tolerance,
                seed: config.seed,
                timing: started.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

type CoreResult<T> = Result<T, CoreError>;

struct Ctx {
    model: ModelKind,
    sites: usize,
    dim: usize,
}

impl Ctx {
    fn n(&self) -> usize {
        self.sites + 1
    }

    fn gaudin(&self, rng: &mut ChaCha8Rng) -> GaudinOrbit {
        sampling::random_gaudin(
            rng,
            &GaudinSampling {
                sites: self.sites,
                dim: self.dim,
                real: false,
            },
        )
    }

    fn toda_state(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match self.model {
            ModelKind::TodaAks => sampling::random_ub(rng, self.sites).to_vec(),
            _ => sampling::random_wz(rng, self.sites).to_vec(),
        }
    }

    fn operator(&self) -> ROperator {
        match self.model {
            ModelKind::TodaAks => ROperator::aks(self.n()),
            _ => ROperator::cartan(self.n()),
        }
    }

    fn toda_gradient(&self, k: usize, l: &RealMatrix) -> CoreResult<RealMatrix> {
        match self.model {
            ModelKind::TodaAks => toda_aks::gradient(k, l),
            _ => toda_cartan::gradient_cartan(k, l),
        }
    }
}

fn run_check(ctx: &Ctx, check: CheckId, rng: &mut ChaCha8Rng, samples: usize) -> CoreResult<f64> {
    let mut worst = 0.0f64;
    let mut record = |r: f64| {
        // NaN must fail the comparison with the tolerance.
        worst = if r.is_nan() { f64::NAN } else { worst.max(r) };
    };
    match check {
        CheckId::Mcybe => {
            let op = ctx.operator();
            for _ in 0..samples {
                let x = sampling::random_traceless(rng, ctx.n());
                let y = sampling::random_traceless(rng, ctx.n());
                record(op.mcybe_residual(&x, &y)?);
            }
        }
        CheckId::Skewness => {
            let op = ctx.operator();
            for _ in 0..samples {
                let x = sampling::random_traceless(rng, ctx.n());
                let y = sampling::random_traceless(rng, ctx.n());
                let rx_y = trace_pairing(&op.apply(&x, Which::R)?, &y)?;
                record(match ctx.model {
                    ModelKind::TodaCartan => (rx_y + trace_pairing(&x, &op.apply(&y, Which::R)?)?).abs(),
                    _ => (rx_y - trace_pairing(&x, &op.adjoint(&y)?)?).abs(),
                });
            }
            if ctx.model == ModelKind::TodaAks && skew_defect(&op)? < AKS_MIN_SKEW_DEFECT {
                record(SIDE_CONDITION_PENALTY);
            }
        }
        CheckId::Involution => {
            for _ in 0..samples {
                if ctx.model == ModelKind::Gaudin {
                    record(gaudin_involution(&ctx.gaudin(rng).lax()?)?);
                } else {
                    let l = toda_lax(ctx, &ctx.toda_state(rng))?;
                    let b = ctx
                        .operator()
                        .lie_poisson(&l, &ctx.toda_gradient(1, &l)?, &ctx.toda_gradient(2, &l)?)?;
                    record(b.abs());
                }
            }
        }
        CheckId::Isospectrality => {
            for _ in 0..samples {
                record(match ctx.model {
                    ModelKind::Gaudin => {
                        let orbit = ctx.gaudin(rng);
                        spectral_drift(&residue_system(&orbit)?, &orbit.lax()?.state())?
                    }
                    model => {
                        let l = toda_lax(ctx, &ctx.toda_state(rng))?;
                        spectral_drift(&LaxMatrixSystem { model, dim: ctx.n() }, l.as_slice())?
                    }
                });
            }
        }
        CheckId::FlowCommutativity => {
            for _ in 0..samples {
                record(match ctx.model {
                    ModelKind::TodaAks => staircase_defect(&AksChart { sites: ctx.sites }, &ctx.toda_state(rng))?,
                    ModelKind::TodaCartan => staircase_defect(&CartanChart { sites: ctx.sites }, &ctx.toda_state(rng))?,
                    ModelKind::Gaudin => {
                        let orbit = ctx.gaudin(rng);
                        staircase_defect(&residue_system(&orbit)?, &orbit.lax()?.state())?
                    }
                });
            }
        }
        CheckId::ChartConsistency => {
            for _ in 0..samples {
                record(match ctx.model {
                    ModelKind::TodaAks => aks_chart_consistency(&sampling::random_ub(rng, ctx.sites))?,
                    ModelKind::TodaCartan => cartan_chart_consistency(&sampling::random_wz(rng, ctx.sites))?,
                    ModelKind::Gaudin => gaudin_chart_consistency(&ctx.gaudin(rng))?,
                });
            }
        }
        CheckId::ElVsLax => {
            for _ in 0..samples {
                record(match ctx.model {
                    ModelKind::Gaudin => gaudin_lax_residual(&ctx.gaudin(rng).lax()?)?,
                    _ => toda_el_vs_lax(ctx, &ctx.toda_state(rng))?,
                });
            }
        }
        CheckId::Closure => {
            for _ in 0..samples {
                record(match ctx.model {
                    ModelKind::TodaAks => closure_all(&AksChart { sites: ctx.sites }, &ctx.toda_state(rng))?,
                    ModelKind::TodaCartan => closure_all(&CartanChart { sites: ctx.sites }, &ctx.toda_state(rng))?,
                    ModelKind::Gaudin => {
                        let group = GaudinGroup::new(ctx.gaudin(rng));
                        closure_all(&group, &group.initial_state())?
                    }
                });
            }
        }
        CheckId::DoubleZeroIdentity => {
            for _ in 0..samples {
                let x = ctx.toda_state(rng);
                record(match ctx.model {
                    ModelKind::TodaAks => double_zero_sample(&AksChart { sites: ctx.sites }, x, rng)?,
                    _ => double_zero_sample(&CartanChart { sites: ctx.sites }, x, rng)?,
                });
            }
        }
        CheckId::FactorisationOracle => {
            let mut first = None;
            for _ in 0..samples {
                let pt = sampling::random_flaschka(rng, ctx.sites);
                record(factorisation_deviation(&pt, FACTORISATION_TIME, FACTORISATION_STEP)?);
                first.get_or_insert(pt);
            }
            if let Some(pt) = first {
                if (convergence_order(&pt, FACTORISATION_TIME, &ORDER_STEPS)? - 4.0).abs() > ORDER_TOLERANCE {
                    record(SIDE_CONDITION_PENALTY);
                }
            }
        }
        CheckId::HamiltonianExtraction => {
            for _ in 0..samples {
                let lax = ctx.gaudin(rng).lax()?;
                let sampled = gaudin::quadratic_residues_by_sampling(&lax)?;
                for (r, h) in sampled.iter().enumerate() {
                    record((gaudin::hamiltonian(&lax, 1, r)? - h).norm());
                }
            }
        }
    }
    Ok(worst)
}

fn toda_lax(ctx: &Ctx, state: &[f64]) -> CoreResult<RealMatrix> {
    match ctx.model {
        ModelKind::TodaAks => AksChart { sites: ctx.sites }.lax(state),
        _ => CartanChart { sites: ctx.sites }.lax(state),
    }
}

/// `max |⟨R E_a, E_b⟩ + ⟨E_a, R E_b⟩|` over a basis of `sl(n)`.
pub fn skew_defect(op: &ROperator) -> CoreResult<f64> {
    let n = op.dim;
    let mut basis = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                basis.push(RealMatrix::unit(n, i, j));
            } else if i + 1 < n {
                basis.push(&RealMatrix::unit(n, i, i) - &RealMatrix::unit(n, i + 1, i + 1));
            }
        }
    }
    let images = basis
        .iter()
        .map(|e| op.apply(e, Which::R))
        .collect::<CoreResult<Vec<_>>>()?;
    let mut worst = 0.0f64;
    for (a, ra) in basis.iter().zip(&images) {
        for (b, rb) in basis.iter().zip(&images) {
            worst = worst.max((trace_pairing(ra, b)? + trace_pairing(a, rb)?).abs());
        }
    }
    Ok(worst)
}

fn gaudin_involution(lax: &gaudin::RationalLax) -> CoreResult<f64> {
    let flows = all_gaudin_flows(lax.sites());
    let grads = flows
        .iter()
        .map(|f| gaudin::gradient(lax, f.level, f.site))
        .collect::<CoreResult<Vec<_>>>()?;
    let mut worst = 0.0f64;
    for (i, gf) in grads.iter().enumerate() {
        for gg in &grads[i + 1..] {
            worst = worst.max(gaudin::poisson_bracket(lax, gf, gg)?.norm());
        }
    }
    Ok(worst)
}

/// `t_k^r` for `k ∈ {1, 2}` and every pole `r`.
pub fn all_gaudin_flows(sites: usize) -> Vec<FlowId> {
    (1..=2)
        .flat_map(|k| (0..sites).map(move |r| FlowId::new(k, r)))
        .collect()
}

pub fn residue_system(orbit: &GaudinOrbit) -> CoreResult<GaudinResidues> {
    GaudinResidues::new(orbit.poles().to_vec(), orbit.omega().clone())
}

fn max_diff<S: Scalar>(a: &[S], b: &[S]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| (x - y).modulus()).fold(0.0, f64::max)
}

/// Toda Lax equation integrated on the matrix entries of `L`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LaxMatrixSystem {
    /// `TodaAks` or `TodaCartan`.
    pub model: ModelKind,
    pub dim: usize,
}

impl FlowSystem for LaxMatrixSystem {
    type Scalar = f64;

    fn state_dim(&self) -> usize {
        self.dim * self.dim
    }

    fn flows(&self) -> Vec<FlowId> {
        vec![FlowId::level(1), FlowId::level(2)]
    }

    fn velocity(&self, flow: FlowId, state: &[f64]) -> CoreResult<Vec<f64>> {
        self.check_flow(flow)?;
        let l = RealMatrix::from_vec(self.dim, state.to_vec())?;
        let dl = match self.model {
            ModelKind::TodaAks => toda_aks::lax_field(flow.level, &l)?,
            _ => toda_cartan::lax_field_cartan(flow.level, &l)?,
        };
        Ok(dl.into_vec())
    }

    fn spectral_invariants(&self, state: &[f64]) -> CoreResult<Vec<f64>> {
        Ok(linalg::charpoly_coeffs(&RealMatrix::from_vec(
            self.dim,
            state.to_vec(),
        )?))
    }
}

/// Largest drift of the spectral invariants over unit time, over all flows.
pub fn spectral_drift<M: FlowSystem>(model: &M, start: &[M::Scalar]) -> CoreResult<f64> {
    let before = model.spectral_invariants(start)?;
    let mut worst = 0.0f64;
    for flow in model.flows() {
        let traj = integrate_flow(model, flow, start, ISOSPECTRAL_TIME, DEFAULT_STEP)?;
        worst = worst.max(max_diff(&before, &model.spectral_invariants(traj.endpoint())?));
    }
    Ok(worst)
}

/// Largest endpoint defect of `(a, b)` versus `(b, a)` staircases over all
/// flow pairs.
pub fn staircase_defect<M: FlowSystem>(model: &M, start: &[M::Scalar]) -> CoreResult<f64> {
    let flows = model.flows();
    let mut worst = 0.0f64;
    for (i, &a) in flows.iter().enumerate() {
        for &b in &flows[i + 1..] {
            let ab = MultiTimePath::new(DEFAULT_STEP)
                .then(a, STAIRCASE_LEG)
                .then(b, STAIRCASE_LEG);
            let ba = MultiTimePath::new(DEFAULT_STEP)
                .then(b, STAIRCASE_LEG)
                .then(a, STAIRCASE_LEG);
            worst = worst.max(max_diff(
                &path_endpoint(model, &ab, start)?,
                &path_endpoint(model, &ba, start)?,
            ));
        }
    }
    Ok(worst)
}

/// Largest on-shell closure residual over all flow pairs.
pub fn closure_all<M: LagrangianSystem>(model: &M, start: &[M::Scalar]) -> CoreResult<f64> {
    let flows = model.flows();
    let mut worst = 0.0f64;
    for (i, &a) in flows.iter().enumerate() {
        for &b in &flows[i + 1..] {
            worst = worst.max(closure_residual(model, a, b, start, CLOSURE_HALF_WIDTH, DEFAULT_STEP)?);
        }
    }
    Ok(worst)
}

fn aks_chart_consistency(pt: &toda_aks::CanonicalUB) -> CoreResult<f64> {
    let f = toda_aks::ub_to_flaschka(pt);
    let mut worst = max_diff(&toda_aks::flaschka_to_ub(&f).to_vec(), &pt.to_vec());
    for k in 1..=2 {
        let field = toda_aks::flow_field_ub(k, pt)?;
        let direct = toda_aks::flow_field_flaschka(k, &f)?;
        worst = worst.max(max_diff(
            &toda_aks::push_ub_tangent(pt, &field).to_vec(),
            &direct.to_vec(),
        ));
        worst = worst.max(max_diff(&toda_aks::pull_to_ub(pt, &direct).to_vec(), &field.to_vec()));
    }
    Ok(worst)
}

fn cartan_chart_consistency(pt: &toda_cartan::WZPoint) -> CoreResult<f64> {
    let f = toda_cartan::wz_to_flaschka(pt);
    let mut worst = max_diff(&toda_cartan::flaschka_to_wz(&f).to_vec(), &pt.to_vec());
    for k in 1..=2 {
        let pushed = toda_cartan::push_wz_tangent(pt, &toda_cartan::flow_field_wz(k, pt)?).to_vec();
        let aks: Vec<f64> = toda_aks::flow_field_flaschka(k, &f)?
            .to_vec()
            .iter()
            .map(|x| TIME_SCALE[k - 1] * x)
            .collect();
        worst = worst.max(max_diff(&pushed, &aks));
    }
    Ok(worst)
}

/// Ring-average residues and the `φ`-lifted flows pushed to the residues.
fn gaudin_chart_consistency(orbit: &GaudinOrbit) -> CoreResult<f64> {
    let lax = orbit.lax()?;
    let mut worst = 0.0f64;
    for r in 0..lax.sites() {
        let ring = gaudin::residue_by_ring(&lax, r, 1e-6, 8)?;
        worst = worst.max(max_diff(ring.as_slice(), lax.residues()[r].as_slice()));
    }
    let inverses = orbit
        .phis()
        .iter()
        .map(ComplexMatrix::inverse)
        .collect::<CoreResult<Vec<_>>>()?;
    for f in all_gaudin_flows(lax.sites()) {
        let dphi = orbit.flow_field_phi(f.level, f.site)?;
        let field = gaudin::flow_field(&lax, f.level, f.site)?;
        for s in 0..lax.sites() {
            let x = &dphi[s] * &inverses[s];
            let pushed = x.commutator(&lax.residues()[s])?;
            worst = worst.max(max_diff(pushed.as_slice(), field[s].as_slice()));
        }
    }
    Ok(worst)
}

/// Chart Euler–Lagrange field pushed to Flaschka coordinates versus the
/// `[R₊∇H_k, L]` field.
fn toda_el_vs_lax(ctx: &Ctx, state: &[f64]) -> CoreResult<f64> {
    let mut worst = 0.0f64;
    for k in 1..=2 {
        let (pushed, lax_field) = match ctx.model {
            ModelKind::TodaAks => {
                let pt = toda_aks::CanonicalUB::from_slice(state)?;
                let l = toda_aks::lax_from_flaschka(&toda_aks::ub_to_flaschka(&pt));
                (
                    toda_aks::push_ub_tangent(&pt, &toda_aks::flow_field_ub(k, &pt)?),
                    toda_aks::lax_field(k, l.matrix())?,
                )
            }
            _ => {
                let pt = toda_cartan::WZPoint::from_slice(state)?;
                let l = toda_cartan::lax_from_wz(&pt);
                (
                    toda_cartan::push_wz_tangent(&pt, &toda_cartan::flow_field_wz(k, &pt)?),
                    toda_cartan::lax_field_cartan(k, l.matrix())?,
                )
            }
        };
        let read = toda_aks::flaschka_tangent_from_lax(&lax_field);
        worst = worst.max(max_diff(&pushed.to_vec(), &read.to_vec()));
    }
    Ok(worst)
}

/// `Σ_s Ȧ_s/(λ − ζ_s)` versus `[M_{k,r}(λ), L(λ)]` at six spectral values,
/// relative to `1 + max|[M, L]|`.
pub fn gaudin_lax_residual(lax: &gaudin::RationalLax) -> CoreResult<f64> {
    let center = lax.poles().iter().fold(Complex64::new(0.0, 0.0), |a, z| a + z) / lax.sites() as f64;
    let spread = lax.poles().iter().map(|z| (z - center).norm()).fold(0.0, f64::max);
    let lambdas: Vec<Complex64> = (0..6)
        .map(|m| center + Complex64::from_polar(0.5 + spread * (0.4 + 0.3 * m as f64), 0.4 + m as f64))
        .collect();
    let mut worst = 0.0f64;
    for f in all_gaudin_flows(lax.sites()) {
        let field = gaudin::flow_field(lax, f.level, f.site)?;
        for &lambda in &lambdas {
            let mut dl = ComplexMatrix::zeros(lax.dim());
            for (d, z) in field.iter().zip(lax.poles()) {
                dl = &dl + &d.scale(Complex64::new(1.0, 0.0) / (lambda - z));
            }
            let rhs = gaudin::m_matrix(lax, f.level, f.site, lambda)?.commutator(&lax.eval(lambda)?)?;
            worst = worst.max((&dl - &rhs).max_abs() / (1.0 + rhs.max_abs()));
        }
    }
    Ok(worst)
}

/// Off-shell finite-difference residual of a random jet, and the on-shell
/// magnitudes weighted by [`ON_SHELL_WEIGHT`].
fn double_zero_sample<M: coadjoint_core::multitime::CanonicalChart>(
    model: &M,
    x: Vec<f64>,
    rng: &mut ChaCha8Rng,
) -> CoreResult<f64> {
    let (t1, t2) = (FlowId::level(1), FlowId::level(2));
    let d = x.len();
    let jet = JetPoint::new(x.clone())
        .with_velocity(t1, sampling::normals(rng, d))
        .with_velocity(t2, sampling::normals(rng, d))
        .with_mixed(t1, t2, sampling::normals(rng, d));
    let off = double_zero_identity(model, t1, t2, &jet, Derivatives::FiniteDifference)?;
    let shell = double_zero_identity(
        model,
        t1,
        t2,
        &JetPoint::on_shell(model, x, &[t1, t2])?,
        Derivatives::Analytic,
    )?;
    let on = shell.lhs.abs().max(shell.rhs.abs()).max(shell.residual());
    Ok(off.residual().max(ON_SHELL_WEIGHT * on))
}

/// Max-entry deviation between RK4 on Flaschka coordinates and the
/// factorisation solution at time `t`.
pub fn factorisation_deviation(pt: &FlaschkaPoint, t: f64, h: f64) -> CoreResult<f64> {
    let sys = FlaschkaSystem { sites: pt.sites() };
    let traj = integrate_flow(&sys, FlowId::level(1), &pt.to_vec(), t, h)?;
    let end = toda_aks::lax_from_flaschka(&FlaschkaPoint::from_slice(pt.sites(), traj.endpoint())?);
    let exact = toda_aks::solve_by_factorisation(&toda_aks::lax_from_flaschka(pt), t)?;
    Ok((end.matrix() - exact.matrix()).max_abs())
}

/// Least-squares slope of `log error` against `log h`.
pub fn convergence_order(pt: &FlaschkaPoint, t: f64, steps: &[f64]) -> CoreResult<f64> {
    let points = steps
        .iter()
        .map(|&h| Ok((h.ln(), factorisation_deviation(pt, t, h)?.ln())))
        .collect::<CoreResult<Vec<_>>>()?;
    let n = points.len() as f64;
    let (mx, my) = (
        points.iter().map(|p| p.0).sum::<f64>() / n,
        points.iter().map(|p| p.1).sum::<f64>() / n,
    );
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(sxy / sxx)
}

/// A model whose flow `flow` carries an extra constant velocity `drift`,
/// both in the dynamics and in the Lagrangian's velocity slot.
pub struct Drifted<'a, M: LagrangianSystem> {
    pub inner: &'a M,
    pub flow: FlowId,
    pub drift: Vec<M::Scalar>,
}

impl<M: LagrangianSystem> FlowSystem for Drifted<'_, M> {
    type Scalar = M::Scalar;

    fn state_dim(&self) -> usize {
        self.inner.state_dim()
    }

    fn flows(&self) -> Vec<FlowId> {
        self.inner.flows()
    }

    fn velocity(&self, flow: FlowId, state: &[M::Scalar]) -> CoreResult<Vec<M::Scalar>> {
        let mut v = self.inner.velocity(flow, state)?;
        if flow == self.flow {
            v.iter_mut().zip(&self.drift).for_each(|(a, &b)| *a += b);
        }
        Ok(v)
    }

    fn spectral_invariants(&self, state: &[M::Scalar]) -> CoreResult<Vec<M::Scalar>> {
        self.inner.spectral_invariants(state)
    }
}

impl<M: LagrangianSystem> LagrangianSystem for Drifted<'_, M> {
    fn momentum(&self, state: &[M::Scalar]) -> CoreResult<Vec<M::Scalar>> {
        self.inner.momentum(state)
    }

    fn hamiltonian(&self, flow: FlowId, state: &[M::Scalar]) -> CoreResult<M::Scalar> {
        self.inner.hamiltonian(flow, state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip_through_strings() {
        for c in CheckId::ALL {
            assert_eq!(c.as_str().parse::<CheckId>().unwrap(), c);
            assert_eq!(serde_json::to_string(&c).unwrap(), format!("\"{}\"", c.as_str()));
        }
        for m in ModelKind::ALL {
            assert_eq!(m.as_str().parse::<ModelKind>().unwrap(), m);
        }
        assert!(matches!("nope".parse::<CheckId>(), Err(HarnessError::UnknownCheck(_))));
    }

    #[test]
    fn every_check_has_a_tolerance() {
        for c in CheckId::ALL {
            for m in ModelKind::ALL {
                assert!(tolerance(c, m) > 0.0);
            }
        }
        assert_eq!(tolerance(CheckId::ElVsLax, ModelKind::Gaudin), 1e-9);
        assert_eq!(tolerance(CheckId::ElVsLax, ModelKind::TodaAks), 1e-10);
    }

    #[test]
    fn empty_check_list_gives_empty_report() {
        let mut cfg = SuiteConfig::new(ModelKind::TodaAks, 1);
        cfg.checks = Some(vec![]);
        assert!(run_suite(&cfg).unwrap().is_empty());
    }

    #[test]
    fn inapplicable_checks_are_rejected() {
        let mut cfg = SuiteConfig::new(ModelKind::Gaudin, 1);
        cfg.checks = Some(vec![CheckId::Mcybe]);
        assert!(matches!(run_suite(&cfg), Err(HarnessError::NotApplicable { .. })));
        let mut cfg = SuiteConfig::new(ModelKind::TodaAks, 1);
        cfg.sites = 0;
        assert!(matches!(run_suite(&cfg), Err(HarnessError::InvalidSize(_))));
    }

    #[test]
    fn check_order_does_not_change_results() {
        let mut a = SuiteConfig::new(ModelKind::TodaCartan, 9);
        a.samples = Some(5);
        a.checks = Some(vec![CheckId::Mcybe, CheckId::Involution, CheckId::ChartConsistency]);
        let mut b = a.clone();
        b.checks = Some(vec![CheckId::ChartConsistency, CheckId::Mcybe, CheckId::Involution]);
        let ra = run_suite(&a).unwrap();
        let rb = run_suite(&b).unwrap();
        for r in &ra {
            let other = rb.iter().find(|x| x.check == r.check).unwrap();
            assert_eq!(r.max_residual.to_bits(), other.max_residual.to_bits());
        }
    }

    #[test]
    fn report_round_trips() {
        let report = VerificationReport {
            model: ModelKind::Gaudin,
            check: CheckId::Closure,
            samples: 3,
            max_residual: 1.234_567_890_123_456_7e-7,
            tolerance: 1e-6,
            pass: true,
            seed: u64::MAX,
            timing: 0.1 + 0.2,
        };
        let text = serde_json::to_string(&report).unwrap();
        assert_eq!(serde_json::from_str::<VerificationReport>(&text).unwrap(), report);
    }
}
