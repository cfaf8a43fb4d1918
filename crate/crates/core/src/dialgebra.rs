//! R-operators, the R-bracket, the modified classical Yang–Baxter residual
//! and Lax vector fields `∂L = [R₊∇H, L]`.

use crate::error::{Error, Result};
use crate::lie_core::{project, trace_pairing, Part};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RKind {
    /// `g₊` = skew-symmetric, `g₋` = upper triangular; `R = P₊ − P₋`.
    AksToda,
    /// Strict upper minus strict lower, diagonal annihilated.
    CartanToda,
    /// Partial-fraction splitting of rational loop algebras. Acts on
    /// rational Lax matrices, see [`crate::gaudin`].
    GaudinPartialFraction,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    R,
    Plus,
    Minus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ROperator {
    pub kind: RKind,
    pub dim: usize,
}

impl ROperator {
    pub fn new(kind: RKind, dim: usize) -> Self {
        Self { kind, dim }
    }

    pub fn aks(dim: usize) -> Self {
        Self::new(RKind::AksToda, dim)
    }

    pub fn cartan(dim: usize) -> Self {
        Self::new(RKind::CartanToda, dim)
    }

    /// Whether `R* = −R` under the trace pairing.
    pub fn is_skew(&self) -> bool {
        match self.kind {
            RKind::AksToda => false,
            RKind::CartanToda | RKind::GaudinPartialFraction => true,
        }
    }

    fn check(&self, x: &Matrix<impl Scalar>) -> Result<()> {
        if self.kind == RKind::GaudinPartialFraction {
            return Err(Error::NotApplicable("partial-fraction"));
        }
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.dim(),
            });
        }
        Ok(())
    }

    /// `R`, `R₊ = ½(R + id)` or `R₋ = ½(R − id)` applied to `x`.
    pub fn apply<S: Scalar>(&self, x: &Matrix<S>, which: Which) -> Result<Matrix<S>> {
        self.check(x)?;
        Ok(match self.kind {
            RKind::AksToda => {
                // P₊ projects onto skew matrices along upper triangular ones.
                let lower = project(x, Part::StrictLower);
                let p_plus = &lower - &lower.transpose();
                match which {
                    Which::Plus => p_plus,
                    Which::Minus => &p_plus - x,
                    Which::R => &p_plus.scale(S::from_f64(2.0)) - x,
                }
            }
            RKind::CartanToda => {
                let up = project(x, Part::StrictUpper);
                let lo = project(x, Part::StrictLower);
                let half_diag = project(x, Part::Diag).scale(S::from_f64(0.5));
                match which {
                    Which::R => &up - &lo,
                    Which::Plus => &up + &half_diag,
                    Which::Minus => -&(&lo + &half_diag),
                }
            }
            RKind::GaudinPartialFraction => unreachable!(),
        })
    }

    /// The adjoint `R*` with `⟨R X, Y⟩ = ⟨X, R* Y⟩`, in closed form.
    ///
    /// For the AKS splitting `R* = Π₋ − Π₊` with `Π₋ Y` the strict upper
    /// part of `Y − Yᵀ` and `Π₊ = id − Π₋`.
    pub fn adjoint<S: Scalar>(&self, y: &Matrix<S>) -> Result<Matrix<S>> {
        self.check(y)?;
        Ok(match self.kind {
            RKind::AksToda => {
                let pi_minus = project(&(y - &y.transpose()), Part::StrictUpper);
                &pi_minus.scale(S::from_f64(2.0)) - y
            }
            RKind::CartanToda => -&self.apply(y, Which::R)?,
            RKind::GaudinPartialFraction => unreachable!(),
        })
    }

    /// `‖[RX, RY] − R([RX, Y] + [X, RY]) + [X, Y]‖_F`.
    pub fn mcybe_residual<S: Scalar>(&self, x: &Matrix<S>, y: &Matrix<S>) -> Result<f64> {
        let rx = self.apply(x, Which::R)?;
        let ry = self.apply(y, Which::R)?;
        let lhs = rx.commutator(&ry)?;
        let inner = &rx.commutator(y)? + &x.commutator(&ry)?;
        let corr = self.apply(&inner, Which::R)?;
        Ok((&(&lhs - &corr) + &x.commutator(y)?).frobenius_norm())
    }

    /// `[X, Y]_R = ½([RX, Y] + [X, RY])`.
    pub fn r_bracket<S: Scalar>(&self, x: &Matrix<S>, y: &Matrix<S>) -> Result<Matrix<S>> {
        let rx = self.apply(x, Which::R)?;
        let ry = self.apply(y, Which::R)?;
        Ok((&rx.commutator(y)? + &x.commutator(&ry)?).scale(S::from_f64(0.5)))
    }

    /// Lie–Poisson R-bracket `⟨L, [∇F, ∇G]_R⟩`.
    pub fn lie_poisson<S: Scalar>(&self, l: &Matrix<S>, grad_f: &Matrix<S>, grad_g: &Matrix<S>) -> Result<S> {
        trace_pairing(l, &self.r_bracket(grad_f, grad_g)?)
    }

    /// `∂L = [R₊ ∇H, L]`, after checking that `∇H` commutes with `L`.
    pub fn lax_vector_field<S: Scalar>(&self, l: &Matrix<S>, grad_h: &Matrix<S>) -> Result<Matrix<S>> {
        self.lax_vector_field_with(l, grad_h, Which::Plus)
    }

    /// Same field written with `R₊` or `R₋`; both agree when `[∇H, L] = 0`.
    pub fn lax_vector_field_with<S: Scalar>(
        &self,
        l: &Matrix<S>,
        grad_h: &Matrix<S>,
        which: Which,
    ) -> Result<Matrix<S>> {
        check_invariant_gradient(l, grad_h)?;
        let m = self.apply(grad_h, which)?;
        m.commutator(l)
    }
}

/// Relative commutator defect threshold for invariant gradients.
pub const INVARIANCE_TOLERANCE: f64 = 1e-10;

fn check_invariant_gradient<S: Scalar>(l: &Matrix<S>, grad_h: &Matrix<S>) -> Result<()> {
    let scale = l.frobenius_norm() * grad_h.frobenius_norm();
    let defect = grad_h.commutator(l)?.frobenius_norm();
    if defect > INVARIANCE_TOLERANCE * scale {
        return Err(Error::InvalidHamiltonian {
            defect: defect / scale.max(f64::MIN_POSITIVE),
        });
    }
    Ok(())
}
