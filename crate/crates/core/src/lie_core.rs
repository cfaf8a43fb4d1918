//! sl(n) structure: trace pairing, subspace projectors and gradients of
//! trace-power invariants.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// A matrix with vanishing trace, i.e. an element of sl(n).
#[derive(Clone, Debug, PartialEq)]
pub struct TracelessMatrix<S: Scalar>(Matrix<S>);

impl<S: Scalar> TracelessMatrix<S> {
    /// Accepts `m` if `|Tr m| ≤ 1e−12 · max(1, ‖m‖)`.
    pub fn new(m: Matrix<S>) -> Result<Self> {
        let tr = m.trace().modulus();
        if tr > 1e-12 * m.frobenius_norm().max(1.0) {
            return Err(Error::InvalidPoint(alloc::format!("trace {tr:e} is not zero")));
        }
        Ok(Self(m))
    }

    /// Removes the trace part of `m`.
    pub fn project(m: &Matrix<S>) -> Self {
        let n = m.dim();
        let shift = m.trace() / S::from_f64(n as f64);
        let mut out = m.clone();
        for i in 0..n {
            out[(i, i)] -= shift;
        }
        Self(out)
    }

    pub fn matrix(&self) -> &Matrix<S> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix<S> {
        self.0
    }
}

impl<S: Scalar> AsRef<Matrix<S>> for TracelessMatrix<S> {
    fn as_ref(&self) -> &Matrix<S> {
        &self.0
    }
}

/// `⟨X, Y⟩ = Tr(XY)`.
pub fn trace_pairing<S: Scalar>(x: &Matrix<S>, y: &Matrix<S>) -> Result<S> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: y.dim(),
        });
    }
    let n = x.dim();
    let mut acc = S::zero();
    for i in 0..n {
        for j in 0..n {
            acc += x[(i, j)] * y[(j, i)];
        }
    }
    Ok(acc)
}

/// Linear subspaces used by the splittings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    Skew,
    Sym,
    StrictUpper,
    StrictLower,
    Diag,
    /// Upper triangular including the diagonal.
    Upper,
}

/// Orthogonal-in-index projection onto `part`.
///
/// `Skew + Sym = id` and `StrictUpper + Diag + StrictLower = id`.
pub fn project<S: Scalar>(x: &Matrix<S>, part: Part) -> Matrix<S> {
    let n = x.dim();
    let half = S::from_f64(0.5);
    match part {
        Part::Skew => Matrix::from_fn(n, |i, j| (x[(i, j)] - x[(j, i)]) * half),
        Part::Sym => Matrix::from_fn(n, |i, j| (x[(i, j)] + x[(j, i)]) * half),
        Part::StrictUpper => Matrix::from_fn(n, |i, j| if i < j { x[(i, j)] } else { S::zero() }),
        Part::StrictLower => Matrix::from_fn(n, |i, j| if i > j { x[(i, j)] } else { S::zero() }),
        Part::Diag => Matrix::from_fn(n, |i, j| if i == j { x[(i, j)] } else { S::zero() }),
        Part::Upper => Matrix::from_fn(n, |i, j| if i <= j { x[(i, j)] } else { S::zero() }),
    }
}

/// Highest power accepted by [`grad_trace_power`].
pub const MAX_TRACE_POWER: u32 = 5;

/// Gradient `c·Lᵏ` of `H(L) = c·Tr(L^{k+1})/(k+1)` under the trace pairing.
///
/// # Panics
/// If `k` is zero or exceeds [`MAX_TRACE_POWER`].
pub fn grad_trace_power<S: Scalar>(l: &Matrix<S>, k: u32, c: S) -> Matrix<S> {
    assert!((1..=MAX_TRACE_POWER).contains(&k), "trace power out of range");
    l.powi(k).scale(c)
}

/// `c·Tr(L^{k+1})/(k+1)`.
pub fn trace_power_invariant<S: Scalar>(l: &Matrix<S>, k: u32, c: S) -> S {
    c * l.powi(k + 1).trace() / S::from_f64((k + 1) as f64)
}
