//! Multi-time integration of commuting flows and the Lagrangian multiform
//! test-bed: path actions, closure residuals and the double-zero identity.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::linalg::RealMatrix;
use crate::scalar::{norm2, Scalar};

/// Label of a commuting flow: level `k` and, for multi-site models, a site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FlowId {
    pub level: usize,
    pub site: usize,
}

impl FlowId {
    pub const fn new(level: usize, site: usize) -> Self {
        Self { level, site }
    }

    /// Flow `t_k` of a single-site model.
    pub const fn level(level: usize) -> Self {
        Self { level, site: 0 }
    }
}

impl fmt::Display for FlowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}^{}", self.level, self.site)
    }
}

/// A finite-dimensional phase space carrying a family of commuting flows.
pub trait FlowSystem {
    type Scalar: Scalar;

    fn state_dim(&self) -> usize;

    /// All flows the system provides.
    fn flows(&self) -> Vec<FlowId>;

    /// Right-hand side of `∂_{t_k} ξ = V_k(ξ)`.
    fn velocity(&self, flow: FlowId, state: &[Self::Scalar]) -> Result<Vec<Self::Scalar>>;

    /// Quantities conserved by every flow (characteristic polynomial data).
    fn spectral_invariants(&self, state: &[Self::Scalar]) -> Result<Vec<Self::Scalar>>;

    fn check_flow(&self, flow: FlowId) -> Result<()> {
        if self.flows().contains(&flow) {
            Ok(())
        } else {
            Err(Error::InvalidPath(format!("flow {flow} is not provided by this model")))
        }
    }
}

/// Lagrangian coefficients of the form `𝓛_k(ξ, v) = π(ξ)·v − H_k(ξ)`.
///
/// The momentum map π carries no flow label, so the coefficient of the
/// velocity is the same for every `k`, and `𝓛_k` only ever receives its
/// own velocity `v^{(k)}`.
pub trait LagrangianSystem: FlowSystem {
    fn momentum(&self, state: &[Self::Scalar]) -> Result<Vec<Self::Scalar>>;

    fn hamiltonian(&self, flow: FlowId, state: &[Self::Scalar]) -> Result<Self::Scalar>;

    fn lagrangian(&self, flow: FlowId, state: &[Self::Scalar], velocity: &[Self::Scalar]) -> Result<Self::Scalar> {
        if velocity.len() != self.state_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.state_dim(),
                found: velocity.len(),
            });
        }
        let pi = self.momentum(state)?;
        let kinetic = pi
            .iter()
            .zip(velocity)
            .fold(Self::Scalar::zero(), |acc, (&p, &v)| acc + p * v);
        Ok(kinetic - self.hamiltonian(flow, state)?)
    }

    /// `𝓛_k` evaluated with the flow's own velocity field.
    fn lagrangian_on_shell(&self, flow: FlowId, state: &[Self::Scalar]) -> Result<Self::Scalar> {
        let v = self.velocity(flow, state)?;
        self.lagrangian(flow, state, &v)
    }
}

/// A real chart in which the symplectic form is constant.
pub trait CanonicalChart: LagrangianSystem<Scalar = f64> {
    /// `∂π_α/∂ξ_β`, row `α`.
    fn momentum_jacobian(&self, state: &[f64]) -> Result<RealMatrix>;

    /// `∂H_k/∂ξ` through the chart.
    fn hamiltonian_gradient(&self, flow: FlowId, state: &[f64]) -> Result<Vec<f64>>;

    /// The constant `ω_{αβ} = ∂π_α/∂ξ_β − ∂π_β/∂ξ_α` declared for the chart.
    fn symplectic_form(&self) -> RealMatrix;
}

/// Sampled solution of one flow.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<S> {
    pub times: Vec<f64>,
    pub states: Vec<Vec<S>>,
}

impl<S: Clone> Trajectory<S> {
    pub fn endpoint(&self) -> &[S] {
        self.states.last().expect("trajectory has at least one sample")
    }

    /// Signed time step between consecutive samples (zero for a single sample).
    pub fn step(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            self.times[1] - self.times[0]
        }
    }
}

/// State norm beyond which integration aborts.
pub const BLOW_UP_NORM: f64 = 1e8;

fn axpy<S: Scalar>(y: &[S], a: f64, x: &[S]) -> Vec<S> {
    let a = S::from_f64(a);
    y.iter().zip(x).map(|(&yi, &xi)| yi + a * xi).collect()
}

fn rk4_step<M: FlowSystem + ?Sized>(model: &M, flow: FlowId, y: &[M::Scalar], dt: f64) -> Result<Vec<M::Scalar>> {
    let k1 = model.velocity(flow, y)?;
    let k2 = model.velocity(flow, &axpy(y, 0.5 * dt, &k1))?;
    let k3 = model.velocity(flow, &axpy(y, 0.5 * dt, &k2))?;
    let k4 = model.velocity(flow, &axpy(y, dt, &k3))?;
    let w = M::Scalar::from_f64(dt / 6.0);
    let two = M::Scalar::from_f64(2.0);
    Ok((0..y.len())
        .map(|i| y[i] + w * (k1[i] + two * k2[i] + two * k3[i] + k4[i]))
        .collect())
}

/// Integrates `flow` for signed time `duration` with classical RK4.
///
/// The number of steps is the smallest even integer with `|duration|/steps ≤ h`,
/// so every trajectory can be fed to composite Simpson quadrature.
pub fn integrate_flow<M: FlowSystem + ?Sized>(
    model: &M,
    flow: FlowId,
    start: &[M::Scalar],
    duration: f64,
    h: f64,
) -> Result<Trajectory<M::Scalar>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidPath(format!("step size {h} must be positive")));
    }
    if !duration.is_finite() {
        return Err(Error::InvalidPath(format!("duration {duration} is not finite")));
    }
    if start.len() != model.state_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.state_dim(),
            found: start.len(),
        });
    }
    model.check_flow(flow)?;
    let mut steps = libm::ceil(duration.abs() / h * (1.0 - 1e-12)) as usize;
    steps += steps % 2;
    let dt = if steps == 0 { 0.0 } else { duration / steps as f64 };

    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(start.to_vec());
    for i in 1..=steps {
        let next = rk4_step(model, flow, states.last().unwrap(), dt)?;
        let t = i as f64 * dt;
        let norm = norm2(&next);
        if !norm.is_finite() || norm > BLOW_UP_NORM {
            return Err(Error::BlowUp { t, norm });
        }
        times.push(t);
        states.push(next);
    }
    Ok(Trajectory { times, states })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub flow: FlowId,
    /// Signed duration; negative values run the flow backwards.
    pub duration: f64,
}

/// A piecewise path in multi-time made of segments along single flows.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiTimePath {
    pub segments: Vec<Segment>,
    pub step: f64,
}

impl MultiTimePath {
    pub fn new(step: f64) -> Self {
        Self {
            segments: Vec::new(),
            step,
        }
    }

    pub fn then(mut self, flow: FlowId, duration: f64) -> Self {
        self.segments.push(Segment { flow, duration });
        self
    }

    /// The same curve traversed backwards.
    pub fn reversed(&self) -> Self {
        Self {
            segments: self
                .segments
                .iter()
                .rev()
                .map(|s| Segment {
                    flow: s.flow,
                    duration: -s.duration,
                })
                .collect(),
            step: self.step,
        }
    }

    /// Net displacement per flow.
    pub fn displacement(&self) -> BTreeMap<FlowId, f64> {
        let mut out = BTreeMap::new();
        for s in &self.segments {
            *out.entry(s.flow).or_insert(0.0) += s.duration;
        }
        out
    }

    /// Total arc parameter `Σ |durations|`.
    pub fn arc_length(&self) -> f64 {
        self.segments.iter().map(|s| s.duration.abs()).sum()
    }

    fn validate<M: FlowSystem + ?Sized>(&self, model: &M) -> Result<()> {
        for s in &self.segments {
            model.check_flow(s.flow)?;
        }
        Ok(())
    }
}

/// End point of the path started at `start`.
pub fn path_endpoint<M: FlowSystem + ?Sized>(
    model: &M,
    path: &MultiTimePath,
    start: &[M::Scalar],
) -> Result<Vec<M::Scalar>> {
    path.validate(model)?;
    let mut state = start.to_vec();
    for seg in &path.segments {
        state = integrate_flow(model, seg.flow, &state, seg.duration, path.step)?
            .endpoint()
            .to_vec();
    }
    Ok(state)
}

/// `∫_Γ 𝓛` along the on-shell solution, by composite Simpson per segment.
pub fn action<M: LagrangianSystem + ?Sized>(model: &M, path: &MultiTimePath, start: &[M::Scalar]) -> Result<M::Scalar> {
    Ok(action_with_endpoint(model, path, start)?.0)
}

/// Action together with the path end point.
pub fn action_with_endpoint<M: LagrangianSystem + ?Sized>(
    model: &M,
    path: &MultiTimePath,
    start: &[M::Scalar],
) -> Result<(M::Scalar, Vec<M::Scalar>)> {
    path.validate(model)?;
    let mut total = M::Scalar::zero();
    let mut state = start.to_vec();
    for seg in &path.segments {
        let traj = integrate_flow(model, seg.flow, &state, seg.duration, path.step)?;
        let values = traj
            .states
            .iter()
            .map(|s| model.lagrangian_on_shell(seg.flow, s))
            .collect::<Result<Vec<_>>>()?;
        total += simpson(&values, traj.step());
        state = traj.endpoint().to_vec();
    }
    Ok((total, state))
}

/// Composite Simpson rule on an odd number of equally spaced samples.
pub fn simpson<S: Scalar>(values: &[S], dt: f64) -> S {
    let n = values.len();
    if n < 2 {
        return S::zero();
    }
    debug_assert!(n % 2 == 1, "Simpson needs an even number of intervals");
    let (two, four) = (S::from_f64(2.0), S::from_f64(4.0));
    let mut acc = values[0] + values[n - 1];
    for (i, &v) in values.iter().enumerate().take(n - 1).skip(1) {
        acc += if i % 2 == 1 { four * v } else { two * v };
    }
    acc * S::from_f64(dt / 3.0)
}

/// Default half-width of the finite-difference stencil in closure checks.
pub const CLOSURE_HALF_WIDTH: f64 = 1e-3;

/// Minimum number of integrator steps per stencil half-width.
pub const CLOSURE_SUBSTEPS: f64 = 8.0;

/// Derivative of the on-shell `𝓛_j` along flow `k` at `start` by the
/// fourth-order central stencil with points `±T, ±2T`. The step is capped
/// at `T / CLOSURE_SUBSTEPS`.
pub fn lagrangian_flow_derivative<M: LagrangianSystem + ?Sized>(
    model: &M,
    j: FlowId,
    k: FlowId,
    start: &[M::Scalar],
    half_width: f64,
    h: f64,
) -> Result<M::Scalar> {
    // The stencil only resolves the derivative if the integrator error over
    // a few half-widths stays below the stencil's own error.
    let h = h.min(half_width / CLOSURE_SUBSTEPS);
    let f = |s: f64| -> Result<M::Scalar> {
        let traj = integrate_flow(model, k, start, s, h)?;
        model.lagrangian_on_shell(j, traj.endpoint())
    };
    let (p1, m1, p2, m2) = (
        f(half_width)?,
        f(-half_width)?,
        f(2.0 * half_width)?,
        f(-2.0 * half_width)?,
    );
    let eight = M::Scalar::from_f64(8.0);
    Ok((eight * (p1 - m1) - (p2 - m2)) * M::Scalar::from_f64(1.0 / (12.0 * half_width)))
}

/// `|∂_{t_k}𝓛_j − ∂_{t_j}𝓛_k|` on shell at `start`.
pub fn closure_residual<M: LagrangianSystem + ?Sized>(
    model: &M,
    j: FlowId,
    k: FlowId,
    start: &[M::Scalar],
    half_width: f64,
    h: f64,
) -> Result<f64> {
    if j == k {
        return Err(Error::InvalidPath(format!(
            "closure needs two distinct flows, got {j} twice"
        )));
    }
    let dk_lj = lagrangian_flow_derivative(model, j, k, start, half_width, h)?;
    let dj_lk = lagrangian_flow_derivative(model, k, j, start, half_width, h)?;
    Ok((dk_lj - dj_lk).modulus())
}

/// Chart coordinates together with first and mixed second multi-time
/// derivatives. Mixed data is stored once per unordered pair.
#[derive(Clone, Debug, PartialEq)]
pub struct JetPoint {
    pub xi: Vec<f64>,
    velocities: BTreeMap<FlowId, Vec<f64>>,
    mixed: BTreeMap<(FlowId, FlowId), Vec<f64>>,
}

impl JetPoint {
    pub fn new(xi: Vec<f64>) -> Self {
        Self {
            xi,
            velocities: BTreeMap::new(),
            mixed: BTreeMap::new(),
        }
    }

    pub fn with_velocity(mut self, flow: FlowId, v: Vec<f64>) -> Self {
        self.velocities.insert(flow, v);
        self
    }

    pub fn with_mixed(mut self, a: FlowId, b: FlowId, w: Vec<f64>) -> Self {
        self.mixed.insert(ordered(a, b), w);
        self
    }

    pub fn velocity(&self, flow: FlowId) -> Option<&[f64]> {
        self.velocities.get(&flow).map(Vec::as_slice)
    }

    /// `w^{(a,b)} = w^{(b,a)}`; zero when not set.
    pub fn mixed(&self, a: FlowId, b: FlowId) -> Vec<f64> {
        self.mixed
            .get(&ordered(a, b))
            .cloned()
            .unwrap_or_else(|| vec![0.0; self.xi.len()])
    }

    /// Jet of the actual multi-time solution through `xi`: velocities from
    /// the flow fields and mixed derivatives `D V_a · V_b` symmetrised.
    pub fn on_shell<M: CanonicalChart + ?Sized>(model: &M, xi: Vec<f64>, flows: &[FlowId]) -> Result<Self> {
        let mut jet = Self::new(xi);
        for &f in flows {
            let v = model.velocity(f, &jet.xi)?;
            jet.velocities.insert(f, v);
        }
        for (i, &a) in flows.iter().enumerate() {
            for &b in &flows[i..] {
                let va = &jet.velocities[&a];
                let vb = &jet.velocities[&b];
                let dab = directional_derivative(|x| model.velocity(a, x), &jet.xi, vb)?;
                let dba = directional_derivative(|x| model.velocity(b, x), &jet.xi, va)?;
                let w = dab.iter().zip(&dba).map(|(x, y)| 0.5 * (x + y)).collect();
                jet.mixed.insert(ordered(a, b), w);
            }
        }
        Ok(jet)
    }
}

fn ordered(a: FlowId, b: FlowId) -> (FlowId, FlowId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Step of the central differences used for gradients and jets.
pub const FD_STEP: f64 = 1e-6;

fn directional_derivative(f: impl Fn(&[f64]) -> Result<Vec<f64>>, x: &[f64], dir: &[f64]) -> Result<Vec<f64>> {
    let plus = f(&axpy(x, FD_STEP, dir))?;
    let minus = f(&axpy(x, -FD_STEP, dir))?;
    Ok(plus
        .iter()
        .zip(&minus)
        .map(|(p, m)| (p - m) / (2.0 * FD_STEP))
        .collect())
}

fn scalar_derivative(f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    Ok((f(FD_STEP)? - f(-FD_STEP)?) / (2.0 * FD_STEP))
}

/// How positional derivatives are obtained in the identity check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Derivatives {
    /// Chain rule through the chart.
    Analytic,
    /// Central differences with step [`FD_STEP`].
    FiniteDifference,
}

/// Both sides of the double-zero identity at a jet point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DoubleZero {
    /// `∂_ℓ𝓛_k − ∂_k𝓛_ℓ + Υ_kᵀ P Υ_ℓ`.
    pub lhs: f64,
    /// `{H_k, H_ℓ} = ∇H_kᵀ P ∇H_ℓ`.
    pub rhs: f64,
    /// `∂_ℓ𝓛_k − ∂_k𝓛_ℓ` alone.
    pub closure_part: f64,
    /// `Υ_kᵀ P Υ_ℓ` alone.
    pub euler_lagrange_part: f64,
}

impl DoubleZero {
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

/// Relative tolerance when comparing the momentum curl with the declared
/// symplectic form.
const CANONICAL_TOLERANCE: f64 = 1e-6;

/// Evaluates the identity
/// `∂_ℓ𝓛_k − ∂_k𝓛_ℓ + Υ_kᵀ P Υ_ℓ = {H_k, H_ℓ}` with
/// `Υ_k = ωᵀ v^{(k)} − ∇H_k` and `P = ω⁻¹`, for arbitrary jet data.
pub fn double_zero_identity<M: CanonicalChart + ?Sized>(
    model: &M,
    k: FlowId,
    l: FlowId,
    jet: &JetPoint,
    mode: Derivatives,
) -> Result<DoubleZero> {
    let n = model.state_dim();
    if jet.xi.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: jet.xi.len(),
        });
    }
    let vk = jet
        .velocity(k)
        .ok_or_else(|| Error::InvalidPath(format!("jet lacks velocity for {k}")))?;
    let vl = jet
        .velocity(l)
        .ok_or_else(|| Error::InvalidPath(format!("jet lacks velocity for {l}")))?;
    let w = jet.mixed(k, l);
    let xi = &jet.xi;

    let jac = match mode {
        Derivatives::Analytic => model.momentum_jacobian(xi)?,
        Derivatives::FiniteDifference => {
            let mut jac = RealMatrix::zeros(n);
            for beta in 0..n {
                let mut e = vec![0.0; n];
                e[beta] = 1.0;
                let col = directional_derivative(|x| model.momentum(x), xi, &e)?;
                for alpha in 0..n {
                    jac[(alpha, beta)] = col[alpha];
                }
            }
            jac
        }
    };
    let curl = &jac - &jac.transpose();
    let omega = model.symplectic_form();
    let defect = (&curl - &omega).max_abs();
    if defect > CANONICAL_TOLERANCE * omega.max_abs().max(1.0) {
        return Err(Error::NonCanonicalChart { defect });
    }
    let p = omega
        .inverse()
        .map_err(|_| Error::NonCanonicalChart { defect: f64::INFINITY })?;

    let grad = |f: FlowId| -> Result<Vec<f64>> {
        match mode {
            Derivatives::Analytic => model.hamiltonian_gradient(f, xi),
            Derivatives::FiniteDifference => (0..n)
                .map(|m| {
                    scalar_derivative(|s| {
                        let mut x = xi.clone();
                        x[m] += s;
                        model.hamiltonian(f, &x)
                    })
                })
                .collect(),
        }
    };
    let gk = grad(k)?;
    let gl = grad(l)?;

    // ∂_ℓ 𝓛_k along ξ̇ = v^{(ℓ)}, v̇^{(k)} = w^{(k,ℓ)}.
    let d_along = |flow: FlowId, own: &[f64], other: &[f64], g: &[f64]| -> Result<f64> {
        match mode {
            Derivatives::Analytic => {
                let pi = model.momentum(xi)?;
                let jv = jac.mul_vec(other);
                Ok(dot(own, &jv) + dot(&pi, &w) - dot(g, other))
            }
            Derivatives::FiniteDifference => scalar_derivative(|s| {
                let x = axpy(xi, s, other);
                let v = axpy(own, s, &w);
                model.lagrangian(flow, &x, &v)
            }),
        }
    };
    let dl_lk = d_along(k, vk, vl, &gk)?;
    let dk_ll = d_along(l, vl, vk, &gl)?;

    let upsilon = |v: &[f64], g: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|col| (0..n).map(|m| omega[(m, col)] * v[m]).sum::<f64>() - g[col])
            .collect()
    };
    let uk = upsilon(vk, &gk);
    let ul = upsilon(vl, &gl);
    let el = dot(&uk, &p.mul_vec(&ul));
    let closure_part = dl_lk - dk_ll;
    let rhs = dot(&gk, &p.mul_vec(&gl));
    Ok(DoubleZero {
        lhs: closure_part + el,
        rhs,
        closure_part,
        euler_lagrange_part: el,
    })
}

/// `|LHS − RHS|` of [`double_zero_identity`].
pub fn double_zero_identity_residual<M: CanonicalChart + ?Sized>(
    model: &M,
    k: FlowId,
    l: FlowId,
    jet: &JetPoint,
    mode: Derivatives,
) -> Result<f64> {
    Ok(double_zero_identity(model, k, l, jet, mode)?.residual())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Complex64;

    /// Harmonic oscillator pair `ẍ = −x` with `t₁` rotation and `t₂` the
    /// identity flow scaled by energy; simple enough for closed forms.
    struct Oscillator;

    impl FlowSystem for Oscillator {
        type Scalar = f64;
        fn state_dim(&self) -> usize {
            2
        }
        fn flows(&self) -> Vec<FlowId> {
            vec![FlowId::level(1), FlowId::level(2)]
        }
        fn velocity(&self, flow: FlowId, s: &[f64]) -> Result<Vec<f64>> {
            // ξ = (x, p); H₁ = ½(x² + p²), H₂ = ½H₁².
            let h1 = 0.5 * (s[0] * s[0] + s[1] * s[1]);
            let c = if flow.level == 1 { 1.0 } else { h1 };
            Ok(vec![c * s[1], -c * s[0]])
        }
        fn spectral_invariants(&self, s: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![0.5 * (s[0] * s[0] + s[1] * s[1])])
        }
    }

    impl LagrangianSystem for Oscillator {
        fn momentum(&self, s: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![s[1], 0.0])
        }
        fn hamiltonian(&self, flow: FlowId, s: &[f64]) -> Result<f64> {
            let h1 = 0.5 * (s[0] * s[0] + s[1] * s[1]);
            Ok(if flow.level == 1 { h1 } else { 0.5 * h1 * h1 })
        }
    }

    impl CanonicalChart for Oscillator {
        fn momentum_jacobian(&self, _s: &[f64]) -> Result<RealMatrix> {
            Ok(RealMatrix::from_fn(2, |a, b| if a == 0 && b == 1 { 1.0 } else { 0.0 }))
        }
        fn hamiltonian_gradient(&self, flow: FlowId, s: &[f64]) -> Result<Vec<f64>> {
            let h1 = 0.5 * (s[0] * s[0] + s[1] * s[1]);
            let c = if flow.level == 1 { 1.0 } else { h1 };
            Ok(vec![c * s[0], c * s[1]])
        }
        fn symplectic_form(&self) -> RealMatrix {
            RealMatrix::from_fn(2, |a, b| match (a, b) {
                (0, 1) => 1.0,
                (1, 0) => -1.0,
                _ => 0.0,
            })
        }
    }

    const T1: FlowId = FlowId::level(1);
    const T2: FlowId = FlowId::level(2);

    #[test]
    fn zero_duration_returns_start() {
        let traj = integrate_flow(&Oscillator, T1, &[1.0, 0.0], 0.0, 1e-3).unwrap();
        assert_eq!(traj.states, vec![vec![1.0, 0.0]]);
        assert_eq!(
            path_endpoint(&Oscillator, &MultiTimePath::new(1e-3), &[1.0, 2.0]).unwrap(),
            vec![1.0, 2.0]
        );
        assert_eq!(
            action(&Oscillator, &MultiTimePath::new(1e-3), &[1.0, 2.0]).unwrap(),
            0.0
        );
    }

    #[test]
    fn rk4_matches_rotation_and_has_order_four() {
        let exact = |t: f64| [libm::cos(t), -libm::sin(t)];
        let err = |h: f64| {
            let end = integrate_flow(&Oscillator, T1, &[1.0, 0.0], 1.0, h).unwrap();
            let e = exact(1.0);
            libm::hypot(end.endpoint()[0] - e[0], end.endpoint()[1] - e[1])
        };
        assert!(err(1e-3) < 1e-12);
        let ratio = err(1e-2) / err(5e-3);
        assert!((ratio - 16.0).abs() <= 0.2 * 16.0, "ratio {ratio}");
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(integrate_flow(&Oscillator, T1, &[1.0, 0.0], 1.0, 0.0).is_err());
        assert!(integrate_flow(&Oscillator, T1, &[1.0], 1.0, 1e-3).is_err());
        assert!(integrate_flow(&Oscillator, FlowId::level(3), &[1.0, 0.0], 1.0, 1e-3).is_err());
        assert!(closure_residual(&Oscillator, T1, T1, &[1.0, 0.0], 1e-3, 1e-3).is_err());
    }

    struct Explosive;
    impl FlowSystem for Explosive {
        type Scalar = Complex64;
        fn state_dim(&self) -> usize {
            1
        }
        fn flows(&self) -> Vec<FlowId> {
            vec![T1]
        }
        fn velocity(&self, _f: FlowId, s: &[Complex64]) -> Result<Vec<Complex64>> {
            Ok(vec![s[0] * s[0]])
        }
        fn spectral_invariants(&self, _s: &[Complex64]) -> Result<Vec<Complex64>> {
            Ok(vec![])
        }
    }

    #[test]
    fn blow_up_is_detected() {
        let r = integrate_flow(&Explosive, T1, &[Complex64::new(1.0, 0.0)], 2.0, 1e-3);
        assert!(matches!(r, Err(Error::BlowUp { .. })));
    }

    #[test]
    fn simpson_is_exact_on_cubics() {
        let dt = 0.25;
        let v: Vec<f64> = (0..9)
            .map(|i| {
                let t = i as f64 * dt;
                t * t * t - 2.0 * t
            })
            .collect();
        let exact = 2.0f64.powi(4) / 4.0 - 4.0;
        assert!((simpson(&v, dt) - exact).abs() < 1e-13);
    }

    #[test]
    fn reversed_path_negates_action() {
        let start = [0.8, -0.3];
        let path = MultiTimePath::new(1e-3).then(T1, 0.2).then(T2, 0.3);
        let (s, end) = action_with_endpoint(&Oscillator, &path, &start).unwrap();
        let back = action(&Oscillator, &path.reversed(), &end).unwrap();
        assert!((s + back).abs() < 1e-9);
    }

    #[test]
    fn staircase_paths_agree() {
        let start = [0.8, -0.3];
        let a = MultiTimePath::new(1e-3).then(T1, 0.2).then(T2, 0.2);
        let b = MultiTimePath::new(1e-3).then(T2, 0.2).then(T1, 0.2);
        let (sa, ea) = action_with_endpoint(&Oscillator, &a, &start).unwrap();
        let (sb, eb) = action_with_endpoint(&Oscillator, &b, &start).unwrap();
        assert!(norm2(&[ea[0] - eb[0], ea[1] - eb[1]]) < 1e-10);
        assert!((sa - sb).abs() < 1e-9);
        assert!(closure_residual(&Oscillator, T1, T2, &start, 1e-3, 1e-3).unwrap() < 1e-9);
    }

    #[test]
    fn double_zero_off_and_on_shell() {
        let xi = vec![0.4, 1.1];
        let jet = JetPoint::new(xi.clone())
            .with_velocity(T1, vec![0.3, -2.0])
            .with_velocity(T2, vec![1.7, 0.2])
            .with_mixed(T2, T1, vec![0.5, 0.9]);
        for mode in [Derivatives::Analytic, Derivatives::FiniteDifference] {
            let r = double_zero_identity_residual(&Oscillator, T1, T2, &jet, mode).unwrap();
            assert!(r < 1e-8, "{mode:?}: {r:e}");
        }
        let shell = JetPoint::on_shell(&Oscillator, xi, &[T1, T2]).unwrap();
        let dz = double_zero_identity(&Oscillator, T1, T2, &shell, Derivatives::Analytic).unwrap();
        assert!(dz.lhs.abs() < 1e-12 && dz.rhs.abs() < 1e-12);
        let same = JetPoint::new(vec![0.4, 1.1]).with_velocity(T1, vec![0.3, -2.0]);
        let dz = double_zero_identity(&Oscillator, T1, T1, &same, Derivatives::Analytic).unwrap();
        assert_eq!((dz.lhs, dz.rhs), (0.0, 0.0));
    }

    #[test]
    fn mixed_data_is_symmetric() {
        let jet = JetPoint::new(vec![0.0; 2]).with_mixed(T2, T1, vec![1.0, 2.0]);
        assert_eq!(jet.mixed(T1, T2), jet.mixed(T2, T1));
    }

    struct Skewed;
    impl FlowSystem for Skewed {
        type Scalar = f64;
        fn state_dim(&self) -> usize {
            2
        }
        fn flows(&self) -> Vec<FlowId> {
            vec![T1]
        }
        fn velocity(&self, _f: FlowId, s: &[f64]) -> Result<Vec<f64>> {
            Ok(s.to_vec())
        }
        fn spectral_invariants(&self, _s: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![])
        }
    }
    impl LagrangianSystem for Skewed {
        fn momentum(&self, s: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![s[0] * s[1], 0.0])
        }
        fn hamiltonian(&self, _f: FlowId, _s: &[f64]) -> Result<f64> {
            Ok(0.0)
        }
    }
    impl CanonicalChart for Skewed {
        fn momentum_jacobian(&self, s: &[f64]) -> Result<RealMatrix> {
            Ok(RealMatrix::from_fn(2, |a, b| match (a, b) {
                (0, 0) => s[1],
                (0, 1) => s[0],
                _ => 0.0,
            }))
        }
        fn hamiltonian_gradient(&self, _f: FlowId, _s: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![0.0, 0.0])
        }
        fn symplectic_form(&self) -> RealMatrix {
            Oscillator.symplectic_form()
        }
    }

    #[test]
    fn non_canonical_chart_is_rejected() {
        let jet = JetPoint::new(vec![3.0, 1.0]).with_velocity(T1, vec![1.0, 0.0]);
        let r = double_zero_identity(&Skewed, T1, T1, &jet, Derivatives::Analytic);
        assert!(matches!(r, Err(Error::NonCanonicalChart { .. })));
    }
}
