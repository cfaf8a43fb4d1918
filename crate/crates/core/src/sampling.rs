//! Random chart points for sweeps. Coordinates are drawn from a unit normal;
//! off-diagonal coordinates are shifted by +1.5 and clamped to at least 0.5
//! so the samples stay inside the chart domains.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::gaudin::GaudinOrbit;
use crate::lie_core::TracelessMatrix;
use crate::linalg::{ComplexMatrix, RealMatrix};
use crate::scalar::Complex64;
use crate::toda_aks::{ub_to_flaschka, CanonicalUB, FlaschkaPoint};
use crate::toda_cartan::WZPoint;

/// Shift applied to off-diagonal coordinates.
pub const OFF_DIAGONAL_SHIFT: f64 = 1.5;
/// Lower clamp for off-diagonal coordinates.
pub const OFF_DIAGONAL_FLOOR: f64 = 0.5;

pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

pub fn normals<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| normal(rng)).collect()
}

/// `max(g + 1.5, 0.5)` for standard normal `g`.
pub fn off_diagonal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| (normal(rng) + OFF_DIAGONAL_SHIFT).max(OFF_DIAGONAL_FLOOR))
        .collect()
}

/// Random point of the `(u, b)` chart with `N = sites`.
pub fn random_ub<R: Rng + ?Sized>(rng: &mut R, sites: usize) -> CanonicalUB {
    let u = normals(rng, sites);
    let b = off_diagonal(rng, sites);
    CanonicalUB::new(u, b).expect("sampled (u, b) point is valid")
}

/// Random Flaschka point, obtained from [`random_ub`].
pub fn random_flaschka<R: Rng + ?Sized>(rng: &mut R, sites: usize) -> FlaschkaPoint {
    ub_to_flaschka(&random_ub(rng, sites))
}

/// Random point of the `(w, z)` chart with `N = sites`.
pub fn random_wz<R: Rng + ?Sized>(rng: &mut R, sites: usize) -> WZPoint {
    let w = normals(rng, sites);
    let z = off_diagonal(rng, sites);
    WZPoint::new(w, z).expect("sampled (w, z) point is valid")
}

/// Shape of a random Gaudin instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GaudinSampling {
    pub sites: usize,
    pub dim: usize,
    /// Real poles and real matrices.
    pub real: bool,
}

fn scalar<R: Rng + ?Sized>(rng: &mut R, real: bool) -> Complex64 {
    let re = normal(rng);
    let im = if real { 0.0 } else { normal(rng) };
    Complex64::new(re, im)
}

fn random_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64, real: bool) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, |_, _| scalar(rng, real) * scale)
}

fn traceless(mut m: ComplexMatrix) -> ComplexMatrix {
    let n = m.dim();
    let shift = m.trace() / n as f64;
    for i in 0..n {
        m[(i, i)] -= shift;
    }
    m
}

/// Minimum pole separation of sampled instances.
pub const MIN_POLE_SEPARATION: f64 = 0.5;
/// Smallest accepted `|det φ_r|`.
pub const MIN_GROUP_DETERMINANT: f64 = 0.1;

/// Random Gaudin orbit: poles jittered around `2r − (N−1)`, traceless
/// diagonal `Λ_r`, `φ_r = I + ½G` and `Ω` a half-scale traceless matrix.
pub fn random_gaudin<R: Rng + ?Sized>(rng: &mut R, shape: &GaudinSampling) -> GaudinOrbit {
    let (n, sites, real) = (shape.dim, shape.sites, shape.real);
    let poles = loop {
        let poles: Vec<Complex64> = (0..sites)
            .map(|r| Complex64::new(2.0 * r as f64 - (sites as f64 - 1.0), 0.0) + scalar(rng, real) * 0.3)
            .collect();
        let separated = poles
            .iter()
            .enumerate()
            .all(|(i, a)| poles[i + 1..].iter().all(|b| (a - b).norm() >= MIN_POLE_SEPARATION));
        if separated {
            break poles;
        }
    };
    let lambdas = (0..sites)
        .map(|_| {
            let d: Vec<Complex64> = (0..n).map(|_| scalar(rng, real)).collect();
            traceless(ComplexMatrix::diagonal(&d))
        })
        .collect();
    let phis = (0..sites)
        .map(|_| loop {
            let phi = &ComplexMatrix::identity(n) + &random_matrix(rng, n, 0.5, real);
            if phi.determinant().norm() >= MIN_GROUP_DETERMINANT {
                break phi;
            }
        })
        .collect();
    let omega = traceless(random_matrix(rng, n, 0.5, real));
    GaudinOrbit::new(poles, lambdas, phis, omega).expect("sampled Gaudin orbit is valid")
}

/// Traceless real matrix with unit-normal entries.
pub fn random_traceless<R: Rng + ?Sized>(rng: &mut R, n: usize) -> RealMatrix {
    let m = RealMatrix::from_fn(n, |_, _| normal(rng));
    TracelessMatrix::project(&m).into_matrix()
}
