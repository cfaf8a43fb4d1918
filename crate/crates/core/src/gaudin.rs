//! Rational Gaudin model: Lax matrices with simple poles,
//! `L(λ) = Σ_r A_r/(λ − ζ_r) + Ω`, on products of coadjoint orbits
//! `A_r = φ_r Λ_r φ_r⁻¹`.
//!
//! Flows are labelled `(k, r)` with level `k ∈ {1, 2}` and site `r`
//! (0-based). Near `ζ_r` write `μ = λ − ζ_r` and
//! `L = A_r/μ + C₀ + μD + O(μ²)`; then
//! `H_{1,r} = Tr(A_r C₀)`, `H_{2,r} = Tr(A_r C₀²) + Tr(A_r² D)` and
//! `∂_{t_k^r} L = [M_{k,r}, L]` with `M_{k,r} = −(L^k)` principal part at `ζ_r`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{charpoly_coeffs, ComplexMatrix, MAX_DIM};
use crate::multitime::{FlowId, FlowSystem, LagrangianSystem};
use crate::scalar::Complex64;

/// Largest number of sites.
pub const MAX_SITES: usize = 6;
/// Largest residue size.
pub const MAX_RESIDUE_DIM: usize = 4;
/// Minimum distance between poles, and between a pole and an evaluation point.
pub const POLE_GUARD: f64 = 1e-8;
/// Number of fixed spectral-parameter values at which `L(λ₀)` is monitored.
pub const SPECTRAL_SAMPLES: usize = 5;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn check_k(k: usize) -> Result<()> {
    if k == 1 || k == 2 {
        Ok(())
    } else {
        Err(Error::UnsupportedLevel(k))
    }
}

fn check_poles(poles: &[Complex64]) -> Result<()> {
    if poles.is_empty() || poles.len() > MAX_SITES {
        return Err(Error::DimensionOutOfRange(poles.len()));
    }
    if poles.iter().any(|z| !z.is_finite()) {
        return Err(Error::NonFinite("pole"));
    }
    for (i, a) in poles.iter().enumerate() {
        for b in &poles[i + 1..] {
            if (a - b).norm() < POLE_GUARD {
                return Err(Error::CoincidentPoles);
            }
        }
    }
    Ok(())
}

fn check_matrices(ms: &[ComplexMatrix], n: usize) -> Result<()> {
    if n == 0 || n > MAX_RESIDUE_DIM.min(MAX_DIM) {
        return Err(Error::DimensionOutOfRange(n));
    }
    for m in ms {
        if m.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: m.dim(),
            });
        }
        if !m.is_finite() {
            return Err(Error::NonFinite("matrix"));
        }
    }
    Ok(())
}

/// `Σ_r A_r/(λ − ζ_r) + Ω` in partial-fraction form.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalLax {
    poles: Vec<Complex64>,
    residues: Vec<ComplexMatrix>,
    omega: ComplexMatrix,
}

impl RationalLax {
    pub fn new(poles: Vec<Complex64>, residues: Vec<ComplexMatrix>, omega: ComplexMatrix) -> Result<Self> {
        check_poles(&poles)?;
        if residues.len() != poles.len() {
            return Err(Error::DimensionMismatch {
                expected: poles.len(),
                found: residues.len(),
            });
        }
        check_matrices(&residues, omega.dim())?;
        check_matrices(core::slice::from_ref(&omega), omega.dim())?;
        Ok(Self { poles, residues, omega })
    }

    pub fn sites(&self) -> usize {
        self.poles.len()
    }

    /// Size of the matrices.
    pub fn dim(&self) -> usize {
        self.omega.dim()
    }

    pub fn poles(&self) -> &[Complex64] {
        &self.poles
    }

    pub fn residues(&self) -> &[ComplexMatrix] {
        &self.residues
    }

    pub fn omega(&self) -> &ComplexMatrix {
        &self.omega
    }

    fn check_site(&self, r: usize) -> Result<()> {
        if r < self.sites() {
            Ok(())
        } else {
            Err(Error::InvalidSite {
                site: r,
                sites: self.sites(),
            })
        }
    }

    fn check_away(&self, lambda: Complex64) -> Result<()> {
        let distance = self
            .poles
            .iter()
            .map(|z| (lambda - z).norm())
            .fold(f64::INFINITY, f64::min);
        if distance < POLE_GUARD {
            return Err(Error::PoleProximity { distance });
        }
        Ok(())
    }

    pub fn eval(&self, lambda: Complex64) -> Result<ComplexMatrix> {
        self.check_away(lambda)?;
        let mut out = self.omega.clone();
        for (z, a) in self.poles.iter().zip(&self.residues) {
            out = &out + &a.scale(Complex64::new(1.0, 0.0) / (lambda - z));
        }
        Ok(out)
    }

    /// `[C₀, C₁, …, C_{m−1}]` with `L(ζ_r + μ) = A_r/μ + Σ C_j μʲ`.
    pub fn laurent(&self, r: usize, m: usize) -> Result<Vec<ComplexMatrix>> {
        self.check_site(r)?;
        let n = self.dim();
        let mut out = Vec::with_capacity(m);
        for j in 0..m {
            let mut cj = if j == 0 {
                self.omega.clone()
            } else {
                ComplexMatrix::zeros(n)
            };
            for (s, (z, a)) in self.poles.iter().zip(&self.residues).enumerate() {
                if s == r {
                    continue;
                }
                let d = self.poles[r] - z;
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                cj = &cj + &a.scale(c(sign) / d.powu(j as u32 + 1));
            }
            out.push(cj);
        }
        Ok(out)
    }

    /// Same poles and `Ω`, new residues.
    pub fn with_residues(&self, residues: Vec<ComplexMatrix>) -> Result<Self> {
        Self::new(self.poles.clone(), residues, self.omega.clone())
    }

    /// Residues flattened row-major and concatenated.
    pub fn state(&self) -> Vec<Complex64> {
        self.residues
            .iter()
            .flat_map(|a| a.as_slice().iter().copied())
            .collect()
    }

    /// `|Im|` of all data, for real instances.
    pub fn max_imag(&self) -> f64 {
        self.residues
            .iter()
            .map(ComplexMatrix::max_imag)
            .chain([self.omega.max_imag()])
            .chain(self.poles.iter().map(|z| z.im.abs()))
            .fold(0.0, f64::max)
    }
}

/// `H_{k,r}` from the closed formulas.
pub fn hamiltonian(lax: &RationalLax, k: usize, r: usize) -> Result<Complex64> {
    check_k(k)?;
    let coeffs = lax.laurent(r, k)?;
    let a = &lax.residues[r];
    let c0 = &coeffs[0];
    Ok(match k {
        1 => (a * c0).trace(),
        _ => (a * &(c0 * c0)).trace() + (&(a * a) * &coeffs[1]).trace(),
    })
}

/// Truncated Laurent series `Σ_{j ≥ low} X_j μʲ`.
struct Series {
    low: i32,
    coeffs: Vec<ComplexMatrix>,
}

impl Series {
    fn local(lax: &RationalLax, r: usize, top: i32) -> Result<Self> {
        let mut coeffs = vec![lax.residues[r].clone()];
        coeffs.extend(lax.laurent(r, (top + 1).max(0) as usize)?);
        Ok(Self { low: -1, coeffs })
    }

    fn coeff(&self, p: i32) -> Option<&ComplexMatrix> {
        usize::try_from(p - self.low).ok().and_then(|i| self.coeffs.get(i))
    }

    /// Product truncated above power `top`.
    fn mul(&self, other: &Series, top: i32) -> Series {
        let n = self.coeffs[0].dim();
        let low = self.low + other.low;
        let coeffs = (low..=top)
            .map(|p| {
                let mut acc = ComplexMatrix::zeros(n);
                for (i, x) in self.coeffs.iter().enumerate() {
                    if let Some(y) = other.coeff(p - self.low - i as i32) {
                        acc = &acc + &(x * y);
                    }
                }
                acc
            })
            .collect();
        Series { low, coeffs }
    }

    fn power(lax: &RationalLax, r: usize, k: usize, top: i32) -> Result<Series> {
        // L^k needs L up to μ^{top + k − 1}.
        let base = Series::local(lax, r, top + k as i32 - 1)?;
        let mut acc = Series::local(lax, r, top + k as i32 - 1)?;
        for done in 1..k {
            // Each remaining factor can lower the power by one.
            acc = acc.mul(&base, top + (k - 1 - done) as i32);
        }
        Ok(acc)
    }
}

/// `H_{k,r} = res_{ζ_r} Tr L^{k+1}/(k+1)` by Laurent-series arithmetic.
pub fn hamiltonian_series(lax: &RationalLax, k: usize, r: usize) -> Result<Complex64> {
    check_k(k)?;
    let p = Series::power(lax, r, k + 1, -1)?;
    Ok(p.coeff(-1).map(|x| x.trace()).unwrap_or(c(0.0)) / c((k + 1) as f64))
}

/// `M_{k,r}(λ)` from the closed formulas.
pub fn m_matrix(lax: &RationalLax, k: usize, r: usize, lambda: Complex64) -> Result<ComplexMatrix> {
    check_k(k)?;
    lax.check_site(r)?;
    let mu = lambda - lax.poles[r];
    if mu.norm() < POLE_GUARD {
        return Err(Error::PoleProximity { distance: mu.norm() });
    }
    let a = &lax.residues[r];
    Ok(match k {
        1 => a.scale(-c(1.0) / mu),
        _ => {
            let c0 = &lax.laurent(r, 1)?[0];
            let sq = (a * a).scale(c(1.0) / (mu * mu));
            -&(&sq + &a.anticommutator(c0).scale(c(1.0) / mu))
        }
    })
}

/// `M_{k,r}(λ)` as minus the principal part of `L^k` at `ζ_r`.
pub fn m_matrix_series(lax: &RationalLax, k: usize, r: usize, lambda: Complex64) -> Result<ComplexMatrix> {
    check_k(k)?;
    lax.check_site(r)?;
    let mu = lambda - lax.poles[r];
    if mu.norm() < POLE_GUARD {
        return Err(Error::PoleProximity { distance: mu.norm() });
    }
    let p = Series::power(lax, r, k, -1)?;
    let mut out = ComplexMatrix::zeros(lax.dim());
    for j in 1..=k as i32 {
        if let Some(x) = p.coeff(-j) {
            out = &out - &x.scale(c(1.0) / mu.powi(j));
        }
    }
    Ok(out)
}

/// `∇_{A_s} H_{k,r}` for every site `s`, under the trace pairing.
pub fn gradient(lax: &RationalLax, k: usize, r: usize) -> Result<Vec<ComplexMatrix>> {
    check_k(k)?;
    lax.check_site(r)?;
    let coeffs = lax.laurent(r, k)?;
    let a = &lax.residues[r];
    let mut out = Vec::with_capacity(lax.sites());
    for s in 0..lax.sites() {
        if s == r {
            out.push(match k {
                1 => coeffs[0].clone(),
                _ => &a.anticommutator(&coeffs[1]) + &(&coeffs[0] * &coeffs[0]),
            });
        } else {
            out.push(m_matrix(lax, k, r, lax.poles[s])?);
        }
    }
    Ok(out)
}

/// `∂_{t_k^r} A_s = [∇_{A_s} H_{k,r}, A_s]`; `Ω` is constant.
pub fn flow_field(lax: &RationalLax, k: usize, r: usize) -> Result<Vec<ComplexMatrix>> {
    gradient(lax, k, r)?
        .iter()
        .zip(&lax.residues)
        .map(|(x, a)| x.commutator(a))
        .collect()
}

/// `{f, g} = Σ_s Tr(A_s [∇_s f, ∇_s g])`.
pub fn poisson_bracket(lax: &RationalLax, grad_f: &[ComplexMatrix], grad_g: &[ComplexMatrix]) -> Result<Complex64> {
    if grad_f.len() != lax.sites() || grad_g.len() != lax.sites() {
        return Err(Error::DimensionMismatch {
            expected: lax.sites(),
            found: grad_f.len().min(grad_g.len()),
        });
    }
    let mut acc = c(0.0);
    for ((a, f), g) in lax.residues.iter().zip(grad_f).zip(grad_g) {
        acc += (a * &f.commutator(g)?).trace();
    }
    Ok(acc)
}

/// `(1/K) Σ_j μ_j L(ζ_r + μ_j)` over `K` points on the circle `|μ| = radius`.
/// Equals `A_r` up to terms of order `radius^K`.
pub fn residue_by_ring(lax: &RationalLax, r: usize, radius: f64, points: usize) -> Result<ComplexMatrix> {
    lax.check_site(r)?;
    let mut acc = ComplexMatrix::zeros(lax.dim());
    for j in 0..points {
        let lambda = lax.poles[r] + Complex64::from_polar(radius, core::f64::consts::TAU * j as f64 / points as f64);
        // The represented offset, so that μ·A/μ cancels exactly.
        let mu = lambda - lax.poles[r];
        acc = &acc + &lax.eval(lambda)?.scale(mu);
    }
    Ok(acc.scale(c(1.0 / points as f64)))
}

/// Coefficients of `1/(λ − ζ_r)` in `½ Tr L(λ)²`, recovered from `2N + 1`
/// samples by solving for the partial-fraction expansion
/// `Σ_r [c_r/(λ − ζ_r)² + h_r/(λ − ζ_r)] + κ`.
pub fn quadratic_residues_by_sampling(lax: &RationalLax) -> Result<Vec<Complex64>> {
    let n = lax.sites();
    let poles = &lax.poles;
    let mut spacing = f64::INFINITY;
    let mut extent = 0.0f64;
    for (i, a) in poles.iter().enumerate() {
        extent = extent.max((a - poles[0]).norm());
        for b in &poles[i + 1..] {
            spacing = spacing.min((a - b).norm());
        }
    }
    let rho = if spacing.is_finite() { 0.25 * spacing } else { 0.5 };
    let mut samples = Vec::with_capacity(2 * n + 1);
    for z in poles {
        samples.push(z + Complex64::new(rho, 0.3 * rho));
        samples.push(z - Complex64::new(rho, -0.3 * rho));
    }
    samples.push(poles[0] + c(4.0 * (extent + 1.0)));
    let dim = 2 * n + 1;
    let mut rows = Vec::with_capacity(dim * dim);
    let mut rhs = Vec::with_capacity(dim);
    for &lambda in &samples {
        let l = lax.eval(lambda)?;
        rhs.push((&l * &l).trace() * c(0.5));
        for z in poles {
            let inv = c(1.0) / (lambda - z);
            rows.push(inv * inv);
        }
        for z in poles {
            rows.push(c(1.0) / (lambda - z));
        }
        rows.push(c(1.0));
    }
    let m = ComplexMatrix::from_fn(dim, |i, j| rows[i * dim + j]);
    Ok(m.solve(&rhs)?[n..2 * n].to_vec())
}

/// Fixed spectral-parameter values, on a circle enclosing every pole.
pub fn spectral_sample_points(poles: &[Complex64]) -> Vec<Complex64> {
    let radius = 1.0 + 2.0 * poles.iter().map(|z| z.norm()).fold(0.0, f64::max);
    (0..SPECTRAL_SAMPLES)
        .map(|m| {
            Complex64::from_polar(
                radius,
                0.3 + core::f64::consts::TAU * m as f64 / SPECTRAL_SAMPLES as f64,
            )
        })
        .collect()
}

/// Characteristic-polynomial data of `L(λ₀)` at the sample points and of
/// every residue.
pub fn spectral_invariants(lax: &RationalLax) -> Result<Vec<Complex64>> {
    let mut out = Vec::new();
    for lambda in spectral_sample_points(&lax.poles) {
        out.extend_from_slice(&charpoly_coeffs(&lax.eval(lambda)?)[1..]);
    }
    for a in &lax.residues {
        out.extend_from_slice(&charpoly_coeffs(a)[1..]);
    }
    Ok(out)
}

/// Orbit data: fixed `Λ_r`, group elements `φ_r`, and `Ω`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaudinOrbit {
    poles: Vec<Complex64>,
    lambdas: Vec<ComplexMatrix>,
    phis: Vec<ComplexMatrix>,
    omega: ComplexMatrix,
}

impl GaudinOrbit {
    pub fn new(
        poles: Vec<Complex64>,
        lambdas: Vec<ComplexMatrix>,
        phis: Vec<ComplexMatrix>,
        omega: ComplexMatrix,
    ) -> Result<Self> {
        check_poles(&poles)?;
        if lambdas.len() != poles.len() || phis.len() != poles.len() {
            return Err(Error::DimensionMismatch {
                expected: poles.len(),
                found: lambdas.len().min(phis.len()),
            });
        }
        check_matrices(&lambdas, omega.dim())?;
        check_matrices(&phis, omega.dim())?;
        check_matrices(core::slice::from_ref(&omega), omega.dim())?;
        let orbit = Self {
            poles,
            lambdas,
            phis,
            omega,
        };
        orbit.inverses()?;
        Ok(orbit)
    }

    pub fn poles(&self) -> &[Complex64] {
        &self.poles
    }

    pub fn lambdas(&self) -> &[ComplexMatrix] {
        &self.lambdas
    }

    pub fn phis(&self) -> &[ComplexMatrix] {
        &self.phis
    }

    pub fn omega(&self) -> &ComplexMatrix {
        &self.omega
    }

    fn inverses(&self) -> Result<Vec<ComplexMatrix>> {
        self.phis.iter().map(ComplexMatrix::inverse).collect()
    }

    /// `A_r = φ_r Λ_r φ_r⁻¹`.
    pub fn residues(&self) -> Result<Vec<ComplexMatrix>> {
        let inv = self.inverses()?;
        Ok(self
            .phis
            .iter()
            .zip(&self.lambdas)
            .zip(&inv)
            .map(|((p, l), i)| &(p * l) * i)
            .collect())
    }

    pub fn lax(&self) -> Result<RationalLax> {
        RationalLax::new(self.poles.clone(), self.residues()?, self.omega.clone())
    }

    /// Same `Λ`, `ζ`, `Ω` with new group elements.
    pub fn with_phis(&self, phis: Vec<ComplexMatrix>) -> Result<Self> {
        Self::new(self.poles.clone(), self.lambdas.clone(), phis, self.omega.clone())
    }

    /// `∂_{t_k^r} φ_s = (∇_{A_s} H_{k,r}) φ_s`.
    pub fn flow_field_phi(&self, k: usize, r: usize) -> Result<Vec<ComplexMatrix>> {
        let g = gradient(&self.lax()?, k, r)?;
        Ok(g.iter().zip(&self.phis).map(|(x, p)| x * p).collect())
    }

    /// `Σ_s Tr(Λ_s φ_s⁻¹ dφ_s) − H_{k,r}`.
    pub fn lagrangian_coeff(&self, k: usize, r: usize, dphis: &[ComplexMatrix]) -> Result<Complex64> {
        if dphis.len() != self.phis.len() {
            return Err(Error::DimensionMismatch {
                expected: self.phis.len(),
                found: dphis.len(),
            });
        }
        let inv = self.inverses()?;
        let mut kinetic = c(0.0);
        for ((l, i), d) in self.lambdas.iter().zip(&inv).zip(dphis) {
            kinetic += (&(l * i) * d).trace();
        }
        Ok(kinetic - hamiltonian(&self.lax()?, k, r)?)
    }
}

fn all_flows(sites: usize) -> Vec<FlowId> {
    (1..=2)
        .flat_map(|k| (0..sites).map(move |r| FlowId::new(k, r)))
        .collect()
}

fn split_state(state: &[Complex64], sites: usize, n: usize) -> Result<Vec<ComplexMatrix>> {
    if state.len() != sites * n * n {
        return Err(Error::DimensionMismatch {
            expected: sites * n * n,
            found: state.len(),
        });
    }
    state
        .chunks(n * n)
        .map(|ch| ComplexMatrix::from_vec(n, ch.to_vec()))
        .collect()
}

fn flatten(ms: &[ComplexMatrix]) -> Vec<Complex64> {
    ms.iter().flat_map(|m| m.as_slice().iter().copied()).collect()
}

/// Flows acting directly on the residues; state is `[A₀, A₁, …]` flattened.
#[derive(Clone, Debug, PartialEq)]
pub struct GaudinResidues {
    pub poles: Vec<Complex64>,
    pub omega: ComplexMatrix,
}

impl GaudinResidues {
    pub fn new(poles: Vec<Complex64>, omega: ComplexMatrix) -> Result<Self> {
        check_poles(&poles)?;
        check_matrices(core::slice::from_ref(&omega), omega.dim())?;
        Ok(Self { poles, omega })
    }

    pub fn lax(&self, state: &[Complex64]) -> Result<RationalLax> {
        let residues = split_state(state, self.poles.len(), self.omega.dim())?;
        RationalLax::new(self.poles.clone(), residues, self.omega.clone())
    }

    pub fn hamiltonian(&self, flow: FlowId, state: &[Complex64]) -> Result<Complex64> {
        self.check_flow(flow)?;
        hamiltonian(&self.lax(state)?, flow.level, flow.site)
    }
}

impl FlowSystem for GaudinResidues {
    type Scalar = Complex64;

    fn state_dim(&self) -> usize {
        self.poles.len() * self.omega.dim() * self.omega.dim()
    }

    fn flows(&self) -> Vec<FlowId> {
        all_flows(self.poles.len())
    }

    fn velocity(&self, flow: FlowId, state: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_flow(flow)?;
        Ok(flatten(&flow_field(&self.lax(state)?, flow.level, flow.site)?))
    }

    fn spectral_invariants(&self, state: &[Complex64]) -> Result<Vec<Complex64>> {
        spectral_invariants(&self.lax(state)?)
    }
}

/// The multiform on group elements; state is `[φ₀, φ₁, …]` flattened and
/// the momentum is `(Λ_s φ_s⁻¹)ᵀ`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaudinGroup {
    template: GaudinOrbit,
}

impl GaudinGroup {
    /// Uses the poles, `Λ` and `Ω` of `orbit`; its `φ` is only a template.
    pub fn new(orbit: GaudinOrbit) -> Self {
        Self { template: orbit }
    }

    pub fn orbit(&self, state: &[Complex64]) -> Result<GaudinOrbit> {
        let phis = split_state(state, self.template.poles.len(), self.template.omega.dim())?;
        self.template.with_phis(phis)
    }

    /// State of the template orbit.
    pub fn initial_state(&self) -> Vec<Complex64> {
        flatten(&self.template.phis)
    }
}

impl FlowSystem for GaudinGroup {
    type Scalar = Complex64;

    fn state_dim(&self) -> usize {
        let n = self.template.omega.dim();
        self.template.poles.len() * n * n
    }

    fn flows(&self) -> Vec<FlowId> {
        all_flows(self.template.poles.len())
    }

    fn velocity(&self, flow: FlowId, state: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_flow(flow)?;
        Ok(flatten(&self.orbit(state)?.flow_field_phi(flow.level, flow.site)?))
    }

    fn spectral_invariants(&self, state: &[Complex64]) -> Result<Vec<Complex64>> {
        spectral_invariants(&self.orbit(state)?.lax()?)
    }
}

impl LagrangianSystem for GaudinGroup {
    fn momentum(&self, state: &[Complex64]) -> Result<Vec<Complex64>> {
        let orbit = self.orbit(state)?;
        let inv = orbit.inverses()?;
        let p: Vec<ComplexMatrix> = orbit
            .lambdas
            .iter()
            .zip(&inv)
            .map(|(l, i)| (l * i).transpose())
            .collect();
        Ok(flatten(&p))
    }

    fn hamiltonian(&self, flow: FlowId, state: &[Complex64]) -> Result<Complex64> {
        self.check_flow(flow)?;
        hamiltonian(&self.orbit(state)?.lax()?, flow.level, flow.site)
    }
}
