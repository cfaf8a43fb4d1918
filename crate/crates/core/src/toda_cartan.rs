//! Open Toda chain with the skew-symmetric Cartan r-matrix, in the `(w, z)`
//! chart.
//!
//! Conventions: `H₁ = Tr L²`, `H₂ = ⅔ Tr L³`, `𝓛_k = Σ z_i ∂_{t_k} w_i − H_k`.
//! Boundary values `P₀ = P_{N+1} = 0` and `z₀ = z_{N+1} = 0`, where
//! `P_i = w_i z_i`.

use alloc::vec;
use alloc::vec::Vec;

use crate::dialgebra::ROperator;
use crate::error::{Error, Result};
use crate::lie_core::{grad_trace_power, TracelessMatrix};
use crate::linalg::RealMatrix;
use crate::multitime::{CanonicalChart, FlowId, FlowSystem, LagrangianSystem};
use crate::toda_aks::{
    check_finite, check_level, check_nonzero, check_sites, lax_from_flaschka, padded, spectral_data, sq, FlaschkaPoint,
    FlaschkaTangent,
};

/// Factor `c_k` with `∂_{t_k}` here equal to `c_k` times the AKS-normalized
/// `∂_{t_k}` on Flaschka coordinates.
///
/// Both Hamiltonian and kinetic term carry the same factor relative to the
/// AKS conventions, so the directions and speeds agree.
pub const TIME_SCALE: [f64; 2] = [1.0, 1.0];

#[derive(Clone, Debug, PartialEq)]
pub struct WZPoint {
    w: Vec<f64>,
    z: Vec<f64>,
}

impl WZPoint {
    pub fn new(w: Vec<f64>, z: Vec<f64>) -> Result<Self> {
        check_sites(z.len())?;
        if w.len() != z.len() {
            return Err(Error::DimensionMismatch {
                expected: z.len(),
                found: w.len(),
            });
        }
        check_finite(&w, "w")?;
        check_finite(&z, "z")?;
        check_nonzero(&z, "z")?;
        Ok(Self { w, z })
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn sites(&self) -> usize {
        self.z.len()
    }

    /// `[w₁..w_N, z₁..z_N]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.w.clone();
        v.extend_from_slice(&self.z);
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

    /// `[0, P₁, …, P_N, 0]`.
    fn products(&self) -> Vec<f64> {
        padded(&self.w.iter().zip(&self.z).map(|(w, z)| w * z).collect::<Vec<_>>())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WZTangent {
    pub dw: Vec<f64>,
    pub dz: Vec<f64>,
}

impl WZTangent {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.dw.clone();
        v.extend_from_slice(&self.dz);
        v
    }
}

/// `b_i = z_i/2`, `a_i = (P_i − P_{i−1})/2`.
pub fn wz_to_flaschka(pt: &WZPoint) -> FlaschkaPoint {
    let p = pt.products();
    let a = (1..p.len()).map(|i| 0.5 * (p[i] - p[i - 1])).collect();
    FlaschkaPoint::from_parts(a, pt.z.iter().map(|z| 0.5 * z).collect())
}

/// `w_i = 2(Σ_{ℓ≤i} a_ℓ)/z_i`, `z_i = 2b_i`.
pub fn flaschka_to_wz(pt: &FlaschkaPoint) -> WZPoint {
    let mut partial = 0.0;
    let (w, z) = pt
        .b()
        .iter()
        .zip(pt.a())
        .map(|(b, a)| {
            partial += a;
            (partial / b, 2.0 * b)
        })
        .unzip();
    WZPoint { w, z }
}

/// Chain rule of [`wz_to_flaschka`].
pub fn push_wz_tangent(pt: &WZPoint, t: &WZTangent) -> FlaschkaTangent {
    let dp = padded(
        &(0..pt.sites())
            .map(|i| t.dw[i] * pt.z[i] + pt.w[i] * t.dz[i])
            .collect::<Vec<_>>(),
    );
    FlaschkaTangent {
        da: (1..dp.len()).map(|i| 0.5 * (dp[i] - dp[i - 1])).collect(),
        db: t.dz.iter().map(|x| 0.5 * x).collect(),
    }
}

pub fn lax_from_wz(pt: &WZPoint) -> TracelessMatrix<f64> {
    lax_from_flaschka(&wz_to_flaschka(pt))
}

/// `H₁ = Tr L²` or `H₂ = ⅔ Tr L³`.
pub fn hamiltonian_cartan(k: usize, l: &RealMatrix) -> Result<f64> {
    check_level(k)?;
    Ok(2.0 * l.powi(k as u32 + 1).trace() / (k + 1) as f64)
}

/// `∇H_k = 2L^k`.
pub fn gradient_cartan(k: usize, l: &RealMatrix) -> Result<RealMatrix> {
    check_level(k)?;
    Ok(grad_trace_power(l, k as u32, 2.0))
}

/// `H_k` expanded as a polynomial in `(w, z)`.
pub fn hamiltonian_wz(k: usize, pt: &WZPoint) -> Result<f64> {
    check_level(k)?;
    let n = pt.sites();
    let p = pt.products();
    let z = padded(&pt.z);
    Ok(match k {
        1 => (1..=n)
            .map(|i| 0.5 * (z[i] * z[i] + p[i] * p[i]) - 0.5 * p[i] * p[i + 1])
            .sum(),
        _ => {
            0.25 * (1..=n)
                .map(|i| z[i] * z[i] * (p[i + 1] - p[i - 1]) + p[i] * p[i] * p[i + 1] - p[i] * p[i + 1] * p[i + 1])
                .sum::<f64>()
        }
    })
}

/// `∂L = [R₊∇H_k, L]` through the Cartan operator.
pub fn lax_field_cartan(k: usize, l: &RealMatrix) -> Result<RealMatrix> {
    ROperator::cartan(l.dim()).lax_vector_field(l, &gradient_cartan(k, l)?)
}

/// Euler–Lagrange equations `ẇ = ∂H/∂z`, `ż = −∂H/∂w`.
pub fn flow_field_wz(k: usize, pt: &WZPoint) -> Result<WZTangent> {
    check_level(k)?;
    let n = pt.sites();
    let p = pt.products();
    let z = padded(&pt.z);
    let w = &pt.w;
    let mut dw = Vec::with_capacity(n);
    let mut dz = Vec::with_capacity(n);
    for i in 1..=n {
        match k {
            1 => {
                let lap = p[i + 1] - 2.0 * p[i] + p[i - 1];
                dw.push(z[i] - 0.5 * w[i - 1] * lap);
                dz.push(0.5 * z[i] * lap);
            }
            _ => {
                let bracket = sq(p[i + 1] - p[i]) - sq(p[i] - p[i - 1]) + z[i + 1] * z[i + 1] - z[i - 1] * z[i - 1];
                dw.push(0.5 * z[i] * (p[i + 1] - p[i - 1]) - 0.25 * w[i - 1] * bracket);
                dz.push(0.25 * z[i] * bracket);
            }
        }
    }
    Ok(WZTangent { dw, dz })
}

/// `𝓛_k = Σ z_i dw_i − H_k`, any velocity.
pub fn lagrangian_coeff_cartan(k: usize, pt: &WZPoint, vel: &WZTangent) -> Result<f64> {
    let h = hamiltonian_cartan(k, lax_from_wz(pt).matrix())?;
    let kinetic: f64 = pt.z.iter().zip(&vel.dw).map(|(z, dw)| z * dw).sum();
    Ok(kinetic - h)
}

/// Toda multiform in the chart `ξ = [w₁..w_N, z₁..z_N]`, momentum `π = (z, 0)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CartanChart {
    pub sites: usize,
}

impl CartanChart {
    fn point(&self, state: &[f64]) -> Result<WZPoint> {
        if state.len() != 2 * self.sites {
            return Err(Error::DimensionMismatch {
                expected: 2 * self.sites,
                found: state.len(),
            });
        }
        WZPoint::from_slice(state)
    }

    pub fn lax(&self, state: &[f64]) -> Result<RealMatrix> {
        Ok(lax_from_wz(&self.point(state)?).into_matrix())
    }
}

impl FlowSystem for CartanChart {
    type Scalar = f64;

    fn state_dim(&self) -> usize {
        2 * self.sites
    }

    fn flows(&self) -> Vec<FlowId> {
        vec![FlowId::level(1), FlowId::level(2)]
    }

    fn velocity(&self, flow: FlowId, state: &[f64]) -> Result<Vec<f64>> {
        self.check_flow(flow)?;
        Ok(flow_field_wz(flow.level, &self.point(state)?)?.to_vec())
    }

    fn spectral_invariants(&self, state: &[f64]) -> Result<Vec<f64>> {
        Ok(spectral_data(&self.lax(state)?))
    }
}

impl LagrangianSystem for CartanChart {
    fn momentum(&self, state: &[f64]) -> Result<Vec<f64>> {
        let mut pi = self.point(state)?.z;
        pi.resize(2 * self.sites, 0.0);
        Ok(pi)
    }

    fn hamiltonian(&self, flow: FlowId, state: &[f64]) -> Result<f64> {
        self.check_flow(flow)?;
        hamiltonian_cartan(flow.level, &self.lax(state)?)
    }
}

impl CanonicalChart for CartanChart {
    fn momentum_jacobian(&self, _state: &[f64]) -> Result<RealMatrix> {
        let n = self.sites;
        Ok(RealMatrix::from_fn(
            2 * n,
            |a, b| if a < n && b == a + n { 1.0 } else { 0.0 },
        ))
    }

    fn hamiltonian_gradient(&self, flow: FlowId, state: &[f64]) -> Result<Vec<f64>> {
        self.check_flow(flow)?;
        let pt = self.point(state)?;
        let g = gradient_cartan(flow.level, &self.lax(state)?)?;
        let n = self.sites;
        let mut out = vec![0.0; 2 * n];
        for i in 0..n {
            let dd = 0.5 * (g[(i, i)] - g[(i + 1, i + 1)]);
            out[i] = pt.z[i] * dd;
            out[n + i] = pt.w[i] * dd + 0.5 * (g[(i, i + 1)] + g[(i + 1, i)]);
        }
        Ok(out)
    }

    fn symplectic_form(&self) -> RealMatrix {
        let n = self.sites;
        RealMatrix::from_fn(2 * n, |a, b| {
            if a < n && b == a + n {
                1.0
            } else if b < n && a == b + n {
                -1.0
            } else {
                0.0
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dialgebra::Which;
    use crate::lie_core::trace_pairing;
    use crate::multitime::{closure_residual, double_zero_identity, integrate_flow, Derivatives, JetPoint};
    use crate::sampling;
    use crate::testutil::*;
    use crate::toda_aks::{flaschka_tangent_from_lax, flow_field_flaschka};

    const T1: FlowId = FlowId::level(1);
    const T2: FlowId = FlowId::level(2);

    fn wz(w: &[f64], z: &[f64]) -> WZPoint {
        WZPoint::new(w.to_vec(), z.to_vec()).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn chart_examples() {
        let f = wz_to_flaschka(&wz(&[1.0, 1.0], &[2.0, 2.0]));
        assert_eq!(f.a(), &[1.0, 0.0, -1.0]);
        assert_eq!(f.b(), &[1.0, 1.0]);
        let f = wz_to_flaschka(&wz(&[0.0, 0.0], &[3.0, -1.0]));
        assert_eq!(f.a(), &[0.0; 3]);
        assert_eq!(f.b(), &[1.5, -0.5]);
        assert!(WZPoint::new(vec![1.0], vec![0.0]).is_err());
    }

    #[test]
    fn lax_matches_entrywise_form() {
        let mut rng = rng(61);
        for _ in 0..50 {
            let pt = sampling::random_wz(&mut rng, 3);
            let l = lax_from_wz(&pt);
            let (w, z) = (pt.w(), pt.z());
            let p: Vec<f64> = w.iter().zip(z).map(|(w, z)| w * z).collect();
            let expected = RealMatrix::from_fn(4, |i, j| match (i, j) {
                (0, 0) => 0.5 * p[0],
                (3, 3) => -0.5 * p[2],
                (i, j) if i == j => 0.5 * (p[i] - p[i - 1]),
                (i, j) if j == i + 1 => 0.5 * z[i],
                (i, j) if i == j + 1 => 0.5 * z[j],
                _ => 0.0,
            });
            assert!((l.matrix() - &expected).max_abs() <= 1e-14);
        }
    }

    #[test]
    fn round_trip() {
        let mut rng = rng(62);
        for _ in 0..100 {
            let pt = sampling::random_wz(&mut rng, 4);
            let back = flaschka_to_wz(&wz_to_flaschka(&pt));
            assert!(close(&back.to_vec(), &pt.to_vec(), 1e-12));
        }
    }

    #[test]
    fn hamiltonian_examples() {
        let l = lax_from_wz(&wz(&[1.0], &[2.0]));
        assert_eq!(
            l.matrix(),
            &RealMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, -1.0]]).unwrap()
        );
        assert_eq!(hamiltonian_cartan(1, l.matrix()).unwrap(), 4.0);
        assert_eq!(hamiltonian_cartan(1, &RealMatrix::zeros(3)).unwrap(), 0.0);
        assert_eq!(hamiltonian_cartan(2, &RealMatrix::zeros(3)).unwrap(), 0.0);
        assert_eq!(
            hamiltonian_cartan(0, &RealMatrix::zeros(3)),
            Err(Error::UnsupportedLevel(0))
        );
    }

    #[test]
    fn polynomial_matches_trace() {
        let mut rng = rng(63);
        for n in 1..=5 {
            for _ in 0..20 {
                let pt = sampling::random_wz(&mut rng, n);
                for k in 1..=2 {
                    let h = hamiltonian_cartan(k, lax_from_wz(&pt).matrix()).unwrap();
                    let poly = hamiltonian_wz(k, &pt).unwrap();
                    assert!(
                        (h - poly).abs() <= 1e-11 * (1.0 + h.abs()),
                        "n={n} k={k}: {h} vs {poly}"
                    );
                }
            }
        }
    }

    #[test]
    fn field_examples() {
        let t = flow_field_wz(1, &wz(&[0.0], &[2.0])).unwrap();
        assert_eq!(
            t,
            WZTangent {
                dw: vec![2.0],
                dz: vec![0.0]
            }
        );
        let t = flow_field_wz(1, &wz(&[1.0, 1.0], &[2.0, 2.0])).unwrap();
        assert_eq!(t.dz[0], -2.0);
    }

    #[test]
    fn field_is_hamiltonian() {
        let mut rng = rng(64);
        let chart = CartanChart { sites: 3 };
        for _ in 0..20 {
            let x = sampling::random_wz(&mut rng, 3).to_vec();
            for k in [T1, T2] {
                let v = chart.velocity(k, &x).unwrap();
                let g = chart.hamiltonian_gradient(k, &x).unwrap();
                for m in 0..6 {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[m] += 1e-6;
                    xm[m] -= 1e-6;
                    let fd = (chart.hamiltonian(k, &xp).unwrap() - chart.hamiltonian(k, &xm).unwrap()) / 2e-6;
                    assert!((fd - g[m]).abs() < 1e-6 * (1.0 + fd.abs()));
                    let expected = if m < 3 { -v[m + 3] } else { v[m - 3] };
                    assert!((g[m] - expected).abs() < 1e-10 * (1.0 + g[m].abs()), "k={k} m={m}");
                }
            }
        }
    }

    #[test]
    fn fields_agree_across_structures() {
        let mut rng = rng(65);
        for n in 1..=5 {
            for _ in 0..20 {
                let pt = sampling::random_wz(&mut rng, n);
                let f = wz_to_flaschka(&pt);
                let l = lax_from_wz(&pt);
                for k in 1..=2 {
                    let pushed = push_wz_tangent(&pt, &flow_field_wz(k, &pt).unwrap()).to_vec();
                    let aks: Vec<f64> = flow_field_flaschka(k, &f)
                        .unwrap()
                        .to_vec()
                        .iter()
                        .map(|x| TIME_SCALE[k - 1] * x)
                        .collect();
                    let lax = flaschka_tangent_from_lax(&lax_field_cartan(k, l.matrix()).unwrap()).to_vec();
                    assert!(close(&pushed, &aks, 1e-10), "n={n} k={k}");
                    assert!(close(&lax, &aks, 1e-10), "n={n} k={k}");
                }
            }
        }
    }

    #[test]
    fn sign_of_z_does_not_change_flaschka_flow() {
        let mut rng = rng(66);
        for _ in 0..20 {
            let pt = sampling::random_wz(&mut rng, 3);
            let flipped = wz(
                &pt.w().iter().map(|w| -w).collect::<Vec<_>>(),
                &pt.z().iter().map(|z| -z).collect::<Vec<_>>(),
            );
            for k in 1..=2 {
                let a = push_wz_tangent(&pt, &flow_field_wz(k, &pt).unwrap());
                let b = push_wz_tangent(&flipped, &flow_field_wz(k, &flipped).unwrap());
                assert!(close(&a.da, &b.da, 1e-12));
                assert!(close(&a.db, &b.db.iter().map(|x| -x).collect::<Vec<_>>(), 1e-12));
            }
        }
    }

    #[test]
    fn r_is_skew() {
        let mut rng = rng(67);
        let op = ROperator::cartan(4);
        for _ in 0..50 {
            let x = random_traceless(&mut rng, 4, 1.0);
            let y = random_traceless(&mut rng, 4, 1.0);
            let lhs = trace_pairing(&op.apply(&x, Which::R).unwrap(), &y).unwrap();
            let rhs = trace_pairing(&x, &op.apply(&y, Which::R).unwrap()).unwrap();
            assert!((lhs + rhs).abs() <= 1e-13);
        }
    }

    #[test]
    fn lagrangian_examples() {
        let pt = wz(&[0.0], &[2.0]);
        let rest = WZTangent {
            dw: vec![0.0],
            dz: vec![0.0],
        };
        assert_eq!(lagrangian_coeff_cartan(1, &pt, &rest).unwrap(), -2.0);
        let shell = flow_field_wz(1, &pt).unwrap();
        assert_eq!(lagrangian_coeff_cartan(1, &pt, &shell).unwrap(), 2.0);
        let chart = CartanChart { sites: 1 };
        let x = pt.to_vec();
        assert_eq!(chart.lagrangian(T1, &x, &shell.to_vec()).unwrap(), 2.0);
        let j = chart.momentum_jacobian(&x).unwrap();
        assert_eq!(&j - &j.transpose(), chart.symplectic_form());
    }

    #[test]
    fn closure_double_zero_and_conservation() {
        let mut rng = rng(68);
        let chart = CartanChart { sites: 2 };
        for _ in 0..5 {
            let x = sampling::random_wz(&mut rng, 2).to_vec();
            assert!(closure_residual(&chart, T1, T2, &x, 1e-3, 1e-3).unwrap() <= 1e-6);
            let shell = JetPoint::on_shell(&chart, x.clone(), &[T1, T2]).unwrap();
            let dz = double_zero_identity(&chart, T1, T2, &shell, Derivatives::Analytic).unwrap();
            assert!(dz.lhs.abs() <= 1e-8 && dz.rhs.abs() <= 1e-8);
            let jet = JetPoint::new(x.clone())
                .with_velocity(T1, (0..4).map(|_| normal(&mut rng)).collect())
                .with_velocity(T2, (0..4).map(|_| normal(&mut rng)).collect())
                .with_mixed(T1, T2, (0..4).map(|_| normal(&mut rng)).collect());
            let fd = double_zero_identity(&chart, T1, T2, &jet, Derivatives::FiniteDifference).unwrap();
            assert!(fd.residual() <= 1e-6);
            let traj = integrate_flow(&chart, T2, &x, 0.5, 1e-3).unwrap();
            let c0 = chart.spectral_invariants(&x).unwrap();
            let c1 = chart.spectral_invariants(traj.endpoint()).unwrap();
            assert!(close(&c0, &c1, 1e-8));
        }
    }
}
