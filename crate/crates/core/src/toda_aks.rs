//! Open Toda chain on sl(N+1) with the non-skew AKS splitting into
//! skew-symmetric and upper-triangular matrices.
//!
//! Conventions: `H₁ = −½ Tr L²`, `H₂ = −⅓ Tr L³`, so `∇H_k = −L^k` and
//! `∂_{t_k} L = [R₊∇H_k, L]`. Boundary values `b₀ = b_{N+1} = 0` are used in
//! every formula.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::dialgebra::ROperator;
use crate::error::{Error, Result};
use crate::lie_core::{grad_trace_power, TracelessMatrix};
use crate::linalg::{charpoly_coeffs, expm, qr_decompose, RealMatrix, MAX_DIM};
use crate::multitime::{CanonicalChart, FlowId, FlowSystem, LagrangianSystem};

/// Smallest admissible `|b_j|`.
pub const MIN_OFF_DIAGONAL: f64 = 1e-12;

pub(crate) fn check_level(k: usize) -> Result<()> {
    if k == 1 || k == 2 {
        Ok(())
    } else {
        Err(Error::UnsupportedLevel(k))
    }
}

pub(crate) fn check_sites(n: usize) -> Result<()> {
    if n == 0 || n + 1 > MAX_DIM {
        return Err(Error::DimensionOutOfRange(n + 1));
    }
    Ok(())
}

pub(crate) fn check_finite(xs: &[f64], what: &'static str) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub(crate) fn check_nonzero(b: &[f64], name: &str) -> Result<()> {
    if let Some((j, x)) = b.iter().enumerate().find(|(_, x)| x.abs() < MIN_OFF_DIAGONAL) {
        return Err(Error::InvalidPoint(format!("{name}[{j}] = {x:e} is too close to zero")));
    }
    Ok(())
}

/// Diagonal `a` (length N+1) and off-diagonal `b` (length N) of the
/// symmetric tridiagonal Lax matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct FlaschkaPoint {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl FlaschkaPoint {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        check_sites(b.len())?;
        if a.len() != b.len() + 1 {
            return Err(Error::DimensionMismatch {
                expected: b.len() + 1,
                found: a.len(),
            });
        }
        check_finite(&a, "Flaschka a")?;
        check_finite(&b, "Flaschka b")?;
        let sum: f64 = a.iter().sum();
        let scale = a.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        if sum.abs() > 1e-10 * scale {
            return Err(Error::InvalidPoint(format!("Σa = {sum:e} is not zero")));
        }
        check_nonzero(&b, "b")?;
        Ok(Self { a, b })
    }

    /// Skips validation; callers guarantee the invariants by construction.
    pub(crate) fn from_parts(a: Vec<f64>, b: Vec<f64>) -> Self {
        Self { a, b }
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// Number of off-diagonal entries `N`.
    pub fn sites(&self) -> usize {
        self.b.len()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.a.clone();
        v.extend_from_slice(&self.b);
        v
    }

    pub fn from_slice(n: usize, s: &[f64]) -> Result<Self> {
        if s.len() != 2 * n + 1 {
            return Err(Error::DimensionMismatch {
                expected: 2 * n + 1,
                found: s.len(),
            });
        }
        Self::new(s[..=n].to_vec(), s[n + 1..].to_vec())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlaschkaTangent {
    pub da: Vec<f64>,
    pub db: Vec<f64>,
}

impl FlaschkaTangent {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.da.clone();
        v.extend_from_slice(&self.db);
        v
    }
}

/// Canonical coordinates with `a_j = b_j u_j − b_{j−1} u_{j−1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalUB {
    u: Vec<f64>,
    b: Vec<f64>,
}

impl CanonicalUB {
    pub fn new(u: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        check_sites(b.len())?;
        if u.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: b.len(),
                found: u.len(),
            });
        }
        check_finite(&u, "u")?;
        check_finite(&b, "b")?;
        check_nonzero(&b, "b")?;
        Ok(Self { u, b })
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn sites(&self) -> usize {
        self.b.len()
    }

    /// `[u₁..u_N, b₁..b_N]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.u.clone();
        v.extend_from_slice(&self.b);
        v
    }

    pub fn from_slice(s: &[f64]) -> Result<Self> {
        if !s.len().is_multiple_of(2) {
            return Err(Error::DimensionMismatch {
                expected: s.len() + 1,
                found: s.len(),
            });
        }
        let n = s.len() / 2;
        Self::new(s[..n].to_vec(), s[n..].to_vec())
    }

    /// `P_j = b_j u_j`, padded with `P₀ = P_{N+1} = 0`.
    fn products(&self) -> Vec<f64> {
        padded(&self.b.iter().zip(&self.u).map(|(b, u)| b * u).collect::<Vec<_>>())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UBTangent {
    pub du: Vec<f64>,
    pub db: Vec<f64>,
}

impl UBTangent {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.du.clone();
        v.extend_from_slice(&self.db);
        v
    }
}

/// Classical positions and momenta; `q` has N entries, `p` has N+1.
#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalQP {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl CanonicalQP {
    /// The Casimir `Σ p_j`.
    pub fn casimir(&self) -> f64 {
        self.p.iter().sum()
    }
}

pub(crate) fn sq(x: f64) -> f64 {
    x * x
}

fn cube(x: f64) -> f64 {
    x * x * x
}

/// `[0, x₁, …, x_N, 0]`, so index `j` of the result is the 1-based `x_j`.
pub(crate) fn padded(x: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(x.len() + 2);
    v.push(0.0);
    v.extend_from_slice(x);
    v.push(0.0);
    v
}

pub fn lax_from_flaschka(pt: &FlaschkaPoint) -> TracelessMatrix<f64> {
    let n = pt.a.len();
    let l = RealMatrix::from_fn(n, |i, j| {
        if i == j {
            pt.a[i]
        } else if i + 1 == j {
            pt.b[i]
        } else if j + 1 == i {
            pt.b[j]
        } else {
            0.0
        }
    });
    TracelessMatrix::project(&l)
}

/// Reads `(a, b)` from a symmetric tridiagonal matrix.
pub fn flaschka_from_lax(l: &RealMatrix) -> Result<FlaschkaPoint> {
    let n = l.dim();
    let scale = l.max_abs().max(1.0);
    for i in 0..n {
        for j in 0..n {
            if i.abs_diff(j) > 1 && l[(i, j)].abs() > 1e-8 * scale {
                return Err(Error::InvalidPoint(format!("entry ({i},{j}) breaks tridiagonal form")));
            }
        }
    }
    let a = (0..n).map(|i| l[(i, i)]).collect();
    let b = (0..n - 1).map(|i| 0.5 * (l[(i, i + 1)] + l[(i + 1, i)])).collect();
    FlaschkaPoint::new(a, b)
}

/// Reads `(da, db)` from the derivative of a tridiagonal Lax matrix.
pub fn flaschka_tangent_from_lax(dl: &RealMatrix) -> FlaschkaTangent {
    let n = dl.dim();
    FlaschkaTangent {
        da: (0..n).map(|i| dl[(i, i)]).collect(),
        db: (0..n - 1).map(|i| 0.5 * (dl[(i, i + 1)] + dl[(i + 1, i)])).collect(),
    }
}

pub fn ub_to_flaschka(pt: &CanonicalUB) -> FlaschkaPoint {
    let p = pt.products();
    let a = (1..p.len()).map(|j| p[j] - p[j - 1]).collect();
    FlaschkaPoint { a, b: pt.b.clone() }
}

/// Inverse of [`ub_to_flaschka`]: `u_j = (1/b_j) Σ_{ℓ≤j} a_ℓ`.
pub fn flaschka_to_ub(pt: &FlaschkaPoint) -> CanonicalUB {
    let mut partial = 0.0;
    let u =
        pt.b.iter()
            .zip(&pt.a)
            .map(|(b, a)| {
                partial += a;
                partial / b
            })
            .collect();
    CanonicalUB { u, b: pt.b.clone() }
}

/// `q_j = Σ_{k≥j} ln b_k`, `p_j = b_j u_j − b_{j−1} u_{j−1}`.
pub fn ub_to_qp(pt: &CanonicalUB) -> Result<CanonicalQP> {
    if let Some(x) = pt.b.iter().find(|&&x| x <= 0.0) {
        return Err(Error::InvalidPoint(format!(
            "b = {x} must be positive for the (q,p) chart"
        )));
    }
    let n = pt.sites();
    let mut q = vec![0.0; n];
    let mut acc = 0.0;
    for j in (0..n).rev() {
        acc += libm::log(pt.b[j]);
        q[j] = acc;
    }
    let p = ub_to_flaschka(pt).a;
    Ok(CanonicalQP { q, p })
}

/// Inverse of [`ub_to_qp`] on the Casimir level `Σp = 0`.
pub fn qp_to_ub(pt: &CanonicalQP) -> Result<CanonicalUB> {
    let n = pt.q.len();
    if pt.p.len() != n + 1 {
        return Err(Error::DimensionMismatch {
            expected: n + 1,
            found: pt.p.len(),
        });
    }
    let b: Vec<f64> = (0..n)
        .map(|j| libm::exp(pt.q[j] - if j + 1 < n { pt.q[j + 1] } else { 0.0 }))
        .collect();
    let flaschka = FlaschkaPoint::new(pt.p.clone(), b)?;
    Ok(flaschka_to_ub(&flaschka))
}

/// `H₁ = −½ Tr L²` or `H₂ = −⅓ Tr L³`.
pub fn hamiltonian(k: usize, l: &RealMatrix) -> Result<f64> {
    check_level(k)?;
    Ok(-l.powi(k as u32 + 1).trace() / (k + 1) as f64)
}

/// `∇H_k = −L^k`.
pub fn gradient(k: usize, l: &RealMatrix) -> Result<RealMatrix> {
    check_level(k)?;
    Ok(grad_trace_power(l, k as u32, -1.0))
}

/// `H₁` in the `(q, p)` chart: `−½Σp² − Σ e^{2(q_j−q_{j+1})} − e^{2q_N}`.
pub fn hamiltonian_qp(pt: &CanonicalQP) -> f64 {
    let n = pt.q.len();
    let kinetic: f64 = pt.p.iter().map(|p| p * p).sum();
    let potential: f64 = (0..n)
        .map(|j| libm::exp(2.0 * (pt.q[j] - if j + 1 < n { pt.q[j + 1] } else { 0.0 })))
        .sum();
    -0.5 * kinetic - potential
}

/// `∂L = [R₊∇H_k, L]` through the AKS operator.
pub fn lax_field(k: usize, l: &RealMatrix) -> Result<RealMatrix> {
    ROperator::aks(l.dim()).lax_vector_field(l, &gradient(k, l)?)
}

/// Toda equations in Flaschka coordinates.
pub fn flow_field_flaschka(k: usize, pt: &FlaschkaPoint) -> Result<FlaschkaTangent> {
    check_level(k)?;
    let n = pt.sites();
    let a = &pt.a;
    let b = padded(&pt.b);
    // a[j] is a_{j+1}; b[j] is b_j with b₀ = b_{N+1} = 0.
    let (da, db) = match k {
        1 => (
            (0..=n).map(|j| 2.0 * (b[j + 1] * b[j + 1] - b[j] * b[j])).collect(),
            (1..=n).map(|j| b[j] * (a[j] - a[j - 1])).collect(),
        ),
        _ => {
            let ap = |j: isize| if j < 0 || j > n as isize { 0.0 } else { a[j as usize] };
            (
                (0..=n)
                    .map(|j| {
                        let ji = j as isize;
                        2.0 * b[j + 1] * b[j + 1] * (a[j] + ap(ji + 1)) - 2.0 * b[j] * b[j] * (ap(ji - 1) + a[j])
                    })
                    .collect(),
                (1..=n)
                    .map(|j| b[j] * (a[j] * a[j] - a[j - 1] * a[j - 1] + b[j + 1] * b[j + 1] - b[j - 1] * b[j - 1]))
                    .collect(),
            )
        }
    };
    Ok(FlaschkaTangent { da, db })
}

/// Euler–Lagrange equations of `𝓛_k` in the `(u, b)` chart.
pub fn flow_field_ub(k: usize, pt: &CanonicalUB) -> Result<UBTangent> {
    check_level(k)?;
    let n = pt.sites();
    let p = pt.products();
    let b = padded(&pt.b);
    let u = &pt.u;
    // a(j) = P_j − P_{j−1} for j = 1..N+1.
    let a = |j: usize| p[j] - p[j - 1];
    let mut du = Vec::with_capacity(n);
    let mut db = Vec::with_capacity(n);
    for j in 1..=n {
        let uj = u[j - 1];
        match k {
            1 => {
                du.push(2.0 * b[j] + uj * (a(j) - a(j + 1)));
                db.push(b[j] * (a(j + 1) - a(j)));
            }
            _ => {
                let (aj, an) = (a(j), a(j + 1));
                let side = b[j - 1] * b[j - 1] - b[j + 1] * b[j + 1];
                du.push(uj * (aj * aj - an * an) + uj * side + 2.0 * b[j] * (p[j + 1] - p[j - 1]));
                db.push(b[j] * (an * an - aj * aj) - b[j] * side);
            }
        }
    }
    Ok(UBTangent { du, db })
}

/// Chain rule of [`ub_to_flaschka`].
pub fn push_ub_tangent(pt: &CanonicalUB, t: &UBTangent) -> FlaschkaTangent {
    let dp = padded(
        &(0..pt.sites())
            .map(|j| t.db[j] * pt.u[j] + pt.b[j] * t.du[j])
            .collect::<Vec<_>>(),
    );
    FlaschkaTangent {
        da: (1..dp.len()).map(|j| dp[j] - dp[j - 1]).collect(),
        db: t.db.clone(),
    }
}

/// Inverse of [`push_ub_tangent`].
pub fn pull_to_ub(pt: &CanonicalUB, t: &FlaschkaTangent) -> UBTangent {
    let mut partial = 0.0;
    let du = (0..pt.sites())
        .map(|j| {
            partial += t.da[j];
            (partial - pt.u[j] * t.db[j]) / pt.b[j]
        })
        .collect();
    UBTangent { du, db: t.db.clone() }
}

/// Potential part `−H_k` of `𝓛_k` written out as a polynomial in `(u, b)`.
pub fn potential_ub(k: usize, pt: &CanonicalUB) -> Result<f64> {
    check_level(k)?;
    let n = pt.sites();
    let p = pt.products();
    let b = &pt.b;
    Ok(match k {
        1 => {
            let bulk: f64 = (2..=n).map(|j| sq(p[j] - p[j - 1])).sum();
            let bb: f64 = b.iter().map(|x| x * x).sum();
            0.5 * bulk + bb + 0.5 * p[1] * p[1] + 0.5 * p[n] * p[n]
        }
        _ => {
            let bulk: f64 = (2..=n).map(|j| cube(p[j] - p[j - 1])).sum();
            // Σ_j b_j² (a_j + a_{j+1}) with a_j + a_{j+1} = P_{j+1} − P_{j−1}.
            let cross: f64 = (1..=n).map(|j| b[j - 1] * b[j - 1] * (p[j + 1] - p[j - 1])).sum();
            (bulk + cube(p[1]) - cube(p[n])) / 3.0 + cross
        }
    })
}

/// `𝓛_k = −Σ b_j u̇_j − H_k(L)`, any velocity.
pub fn lagrangian_coeff(k: usize, pt: &CanonicalUB, vel: &UBTangent) -> Result<f64> {
    let l = lax_from_flaschka(&ub_to_flaschka(pt));
    let h = hamiltonian(k, l.matrix())?;
    let kinetic: f64 = pt.b.iter().zip(&vel.du).map(|(b, du)| -b * du).sum();
    Ok(kinetic - h)
}

/// Closed-form solution of the first flow:
/// `e^{t L₀} = Q R`, `L(t) = Qᵀ L₀ Q`.
pub fn solve_by_factorisation(l0: &TracelessMatrix<f64>, t: f64) -> Result<TracelessMatrix<f64>> {
    let l = l0.matrix();
    if !l.is_symmetric(1e-12 * l.max_abs().max(1.0)) {
        return Err(Error::InvalidPoint("initial Lax matrix must be symmetric".into()));
    }
    if t == 0.0 {
        return Ok(l0.clone());
    }
    // The flow property lets long times be split into well-conditioned
    // pieces; the spectrum, hence ‖L‖, is preserved along the way.
    let pieces = libm::ceil(t.abs() * l.norm1() / FACTORISATION_SPAN).max(1.0) as usize;
    let dt = t / pieces as f64;
    let mut cur = l.clone();
    for _ in 0..pieces {
        let (q, _) = qr_decompose(&expm(&cur.scale(dt))?)?;
        cur = &(&q.transpose() * &cur) * &q;
    }
    Ok(TracelessMatrix::project(&cur))
}

/// Largest `|t|·‖L‖₁` handled by a single exponential in
/// [`solve_by_factorisation`].
pub const FACTORISATION_SPAN: f64 = 4.0;

/// Characteristic polynomial coefficients `c₁..c_n` of `L`.
pub fn spectral_data(l: &RealMatrix) -> Vec<f64> {
    charpoly_coeffs(l)[1..].to_vec()
}

/// Toda flows on Flaschka coordinates `[a₁..a_{N+1}, b₁..b_N]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FlaschkaSystem {
    pub sites: usize,
}

impl FlowSystem for FlaschkaSystem {
    type Scalar = f64;

    fn state_dim(&self) -> usize {
        2 * self.sites + 1
    }

    fn flows(&self) -> Vec<FlowId> {
        vec![FlowId::level(1), FlowId::level(2)]
    }

    fn velocity(&self, flow: FlowId, state: &[f64]) -> Result<Vec<f64>> {
        self.check_flow(flow)?;
        let pt = FlaschkaPoint::from_slice(self.sites, state)?;
        Ok(flow_field_flaschka(flow.level, &pt)?.to_vec())
    }

    fn spectral_invariants(&self, state: &[f64]) -> Result<Vec<f64>> {
        let pt = FlaschkaPoint::from_slice(self.sites, state)?;
        Ok(spectral_data(lax_from_flaschka(&pt).matrix()))
    }
}

/// Toda multiform in the canonical chart `ξ = [u₁..u_N, b₁..b_N]`, with
/// momentum map `π = (−b, 0)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AksChart {
    pub sites: usize,
}

impl AksChart {
    fn point(&self, state: &[f64]) -> Result<CanonicalUB> {
        if state.len() != 2 * self.sites {
            return Err(Error::DimensionMismatch {
                expected: 2 * self.sites,
                found: state.len(),
            });
        }
        CanonicalUB::from_slice(state)
    }

    pub fn lax(&self, state: &[f64]) -> Result<RealMatrix> {
        Ok(lax_from_flaschka(&ub_to_flaschka(&self.point(state)?)).into_matrix())
    }
}

impl FlowSystem for AksChart {
    type Scalar = f64;

    fn state_dim(&self) -> usize {
        2 * self.sites
    }

    fn flows(&self) -> Vec<FlowId> {
        vec![FlowId::level(1), FlowId::level(2)]
    }

    fn velocity(&self, flow: FlowId, state: &[f64]) -> Result<Vec<f64>> {
        self.check_flow(flow)?;
        Ok(flow_field_ub(flow.level, &self.point(state)?)?.to_vec())
    }

    fn spectral_invariants(&self, state: &[f64]) -> Result<Vec<f64>> {
        Ok(spectral_data(&self.lax(state)?))
    }
}

impl LagrangianSystem for AksChart {
    fn momentum(&self, state: &[f64]) -> Result<Vec<f64>> {
        let pt = self.point(state)?;
        let mut pi: Vec<f64> = pt.b.iter().map(|b| -b).collect();
        pi.resize(2 * self.sites, 0.0);
        Ok(pi)
    }

    fn hamiltonian(&self, flow: FlowId, state: &[f64]) -> Result<f64> {
        self.check_flow(flow)?;
        hamiltonian(flow.level, &self.lax(state)?)
    }
}

impl CanonicalChart for AksChart {
    fn momentum_jacobian(&self, _state: &[f64]) -> Result<RealMatrix> {
        let n = self.sites;
        Ok(RealMatrix::from_fn(
            2 * n,
            |a, b| if a < n && b == a + n { -1.0 } else { 0.0 },
        ))
    }

    fn hamiltonian_gradient(&self, flow: FlowId, state: &[f64]) -> Result<Vec<f64>> {
        self.check_flow(flow)?;
        let pt = self.point(state)?;
        let g = gradient(flow.level, &self.lax(state)?)?;
        let n = self.sites;
        let mut out = vec![0.0; 2 * n];
        for j in 0..n {
            let dd = g[(j, j)] - g[(j + 1, j + 1)];
            out[j] = pt.b[j] * dd;
            out[n + j] = pt.u[j] * dd + g[(j, j + 1)] + g[(j + 1, j)];
        }
        Ok(out)
    }

    fn symplectic_form(&self) -> RealMatrix {
        let n = self.sites;
        RealMatrix::from_fn(2 * n, |a, b| {
            if a < n && b == a + n {
                -1.0
            } else if b < n && a == b + n {
                1.0
            } else {
                0.0
            }
        })
    }
}
