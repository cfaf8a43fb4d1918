//! Dense square matrices over `f64` or `Complex64`.
//!
//! Storage is row-major. Arithmetic operators on references panic on a
//! dimension mismatch; the `try_*` methods and [`Matrix::commutator`] return
//! [`Error::DimensionMismatch`] instead.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::scalar::{Complex64, Scalar};

/// Largest matrix dimension accepted by the checked constructors.
pub const MAX_DIM: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<S> {
    n: usize,
    data: Vec<S>,
}

pub type RealMatrix = Matrix<f64>;
pub type ComplexMatrix = Matrix<Complex64>;

impl<S: Scalar> Matrix<S> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![S::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = S::one();
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    /// Builds a matrix from rows, checking shape, size and finiteness.
    pub fn from_rows(rows: &[Vec<S>]) -> Result<Self> {
        let n = rows.len();
        check_dim(n)?;
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_vec(n, data)
    }

    /// Builds a matrix from row-major data, checking size and finiteness.
    pub fn from_vec(n: usize, data: Vec<S>) -> Result<Self> {
        check_dim(n)?;
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: data.len(),
            });
        }
        if !data.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        Ok(Self { n, data })
    }

    /// Elementary matrix `E_ij`.
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n);
        m[(i, j)] = S::one();
        m
    }

    pub fn diagonal(d: &[S]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<S> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn trace(&self) -> S {
        (0..self.n).fold(S::zero(), |acc, i| acc + self[(i, i)])
    }

    pub fn scale(&self, s: S) -> Self {
        self.map(|x| x * s)
    }

    pub fn map(&self, mut f: impl FnMut(S) -> S) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        crate::scalar::norm2(&self.data)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        crate::scalar::max_modulus(&self.data)
    }

    /// Induced 1-norm (largest column sum).
    pub fn norm1(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self[(i, j)].modulus()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(self + other)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(self - other)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(self * other)
    }

    /// `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(&(self * other) - &(other * self))
    }

    /// Anticommutator `self·other + other·self`.
    pub fn anticommutator(&self, other: &Self) -> Self {
        &(self * other) + &(other * self)
    }

    /// `self^k` by repeated squaring; `self^0` is the identity.
    pub fn powi(&self, k: u32) -> Self {
        let mut result = Self::identity(self.n);
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(v.len(), self.n, "vector length must match matrix dimension");
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).fold(S::zero(), |acc, (&a, &b)| acc + a * b))
            .collect()
    }

    /// LU factorisation with partial pivoting, packed in place.
    fn lu(&self) -> Result<(Self, Vec<usize>)> {
        let n = self.n;
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let (p, pmax) =
                (k..n)
                    .map(|i| (i, a[(i, k)].modulus()))
                    .fold((k, -1.0), |best, c| if c.1 > best.1 { c } else { best });
            if pmax <= scale * 1e-14 {
                return Err(Error::Singular);
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = a[(k, k)];
            for i in k + 1..n {
                let f = a[(i, k)] / pivot;
                a[(i, k)] = f;
                for j in k + 1..n {
                    let t = a[(k, j)];
                    a[(i, j)] -= f * t;
                }
            }
        }
        Ok((a, perm))
    }

    fn lu_solve(lu: &Self, perm: &[usize], b: &[S]) -> Vec<S> {
        let n = lu.n;
        let mut x: Vec<S> = perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let t = x[j];
                x[i] -= lu[(i, j)] * t;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let t = x[j];
                x[i] -= lu[(i, j)] * t;
            }
            x[i] = x[i] / lu[(i, i)];
        }
        x
    }

    /// Solves `self · x = b`.
    pub fn solve(&self, b: &[S]) -> Result<Vec<S>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: b.len(),
            });
        }
        let (lu, perm) = self.lu()?;
        Ok(Self::lu_solve(&lu, &perm, b))
    }

    pub fn inverse(&self) -> Result<Self> {
        let n = self.n;
        let (lu, perm) = self.lu()?;
        let mut inv = Self::zeros(n);
        let mut e = vec![S::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = S::zero());
            e[j] = S::one();
            let col = Self::lu_solve(&lu, &perm, &e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Ok(inv)
    }

    pub fn determinant(&self) -> S {
        match self.lu() {
            Err(_) => S::zero(),
            Ok((lu, perm)) => {
                let mut det = (0..self.n).fold(S::one(), |acc, i| acc * lu[(i, i)]);
                if permutation_parity(&perm) {
                    det = -det;
                }
                det
            }
        }
    }
}

impl RealMatrix {
    pub fn to_complex(&self) -> ComplexMatrix {
        Matrix {
            n: self.n,
            data: self.data.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }
}

impl ComplexMatrix {
    /// Largest imaginary part modulus.
    pub fn max_imag(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.im.abs()))
    }

    pub fn real_part(&self) -> RealMatrix {
        Matrix {
            n: self.n,
            data: self.data.iter().map(|z| z.re).collect(),
        }
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DIM {
        return Err(Error::DimensionOutOfRange(n));
    }
    Ok(())
}

/// True for an odd permutation.
fn permutation_parity(perm: &[usize]) -> bool {
    let mut seen = vec![false; perm.len()];
    let mut odd = false;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = perm[i];
            len += 1;
        }
        if len % 2 == 0 {
            odd = !odd;
        }
    }
    odd
}

impl<S> Index<(usize, usize)> for Matrix<S> {
    type Output = S;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.n + j]
    }
}

impl<S> IndexMut<(usize, usize)> for Matrix<S> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.n + j]
    }
}

impl<S: Scalar> Add for &Matrix<S> {
    type Output = Matrix<S>;
    fn add(self, rhs: Self) -> Matrix<S> {
        assert_eq!(self.n, rhs.n, "matrix dimension mismatch");
        Matrix {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect(),
        }
    }
}

impl<S: Scalar> Sub for &Matrix<S> {
    type Output = Matrix<S>;
    fn sub(self, rhs: Self) -> Matrix<S> {
        assert_eq!(self.n, rhs.n, "matrix dimension mismatch");
        Matrix {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        }
    }
}

impl<S: Scalar> Mul for &Matrix<S> {
    type Output = Matrix<S>;
    fn mul(self, rhs: Self) -> Matrix<S> {
        assert_eq!(self.n, rhs.n, "matrix dimension mismatch");
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == S::zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

impl<S: Scalar> Neg for &Matrix<S> {
    type Output = Matrix<S>;
    fn neg(self) -> Matrix<S> {
        self.map(|x| -x)
    }
}

/// Norm above which `expm` refuses to run.
const EXPM_MAX_NORM: f64 = 700.0;

/// Matrix exponential by scaling and squaring with a Taylor core.
///
/// Returns [`Error::Range`] when `‖X‖₁` exceeds the overflow guard and
/// [`Error::NonFinite`] if the result is not finite.
pub fn expm<S: Scalar>(x: &Matrix<S>) -> Result<Matrix<S>> {
    if !x.is_finite() {
        return Err(Error::NonFinite("expm input"));
    }
    let norm = x.norm1();
    if norm > EXPM_MAX_NORM {
        return Err(Error::Range { norm });
    }
    let mut squarings = 0u32;
    let mut scaled_norm = norm;
    while scaled_norm > 0.5 {
        scaled_norm *= 0.5;
        squarings += 1;
    }
    let b = x.scale(S::from_f64(libm::ldexp(1.0, -(squarings as i32))));

    let n = x.dim();
    let mut sum = Matrix::identity(n);
    let mut term = Matrix::identity(n);
    for k in 1..=30 {
        term = (&term * &b).scale(S::from_f64(1.0 / k as f64));
        sum = &sum + &term;
        if term.max_abs() <= 1e-18 * sum.max_abs() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    if !sum.is_finite() {
        return Err(Error::NonFinite("expm result"));
    }
    Ok(sum)
}

/// QR factorisation `X = Q·R` with `Q` orthogonal and `R` upper triangular
/// with a strictly positive diagonal.
pub fn qr_decompose(x: &RealMatrix) -> Result<(RealMatrix, RealMatrix)> {
    let n = x.dim();
    if !x.is_finite() {
        return Err(Error::NonFinite("qr input"));
    }
    let mut r = x.clone();
    let mut q = RealMatrix::identity(n);
    for k in 0..n.saturating_sub(1) {
        let norm_x = libm::sqrt((k..n).map(|i| r[(i, k)] * r[(i, k)]).sum());
        if norm_x == 0.0 {
            continue;
        }
        let alpha = if r[(k, k)] > 0.0 { -norm_x } else { norm_x };
        let mut v: Vec<f64> = (k..n).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm = libm::sqrt(v.iter().map(|t| t * t).sum());
        if vnorm == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|t| *t /= vnorm);
        for j in 0..n {
            let dot: f64 = (k..n).map(|i| v[i - k] * r[(i, j)]).sum();
            for i in k..n {
                r[(i, j)] -= 2.0 * v[i - k] * dot;
            }
        }
        for i in 0..n {
            let dot: f64 = (k..n).map(|j| q[(i, j)] * v[j - k]).sum();
            for j in k..n {
                q[(i, j)] -= 2.0 * dot * v[j - k];
            }
        }
    }
    let tol = n as f64 * f64::EPSILON * x.frobenius_norm();
    for i in 0..n {
        if r[(i, i)].abs() <= tol {
            return Err(Error::Singular);
        }
        if r[(i, i)] < 0.0 {
            for j in 0..n {
                r[(i, j)] = -r[(i, j)];
                q[(j, i)] = -q[(j, i)];
            }
        }
        for j in 0..i {
            r[(i, j)] = 0.0;
        }
    }
    Ok((q, r))
}

/// Characteristic polynomial coefficients of `det(λ − X)`, leading first.
///
/// The result has length `n + 1` with `c[0] = 1`; `c[k]` multiplies
/// `λ^{n−k}`. Computed by the Faddeev–LeVerrier recursion.
pub fn charpoly_coeffs<S: Scalar>(x: &Matrix<S>) -> Vec<S> {
    let n = x.dim();
    let mut coeffs = Vec::with_capacity(n + 1);
    coeffs.push(S::one());
    let mut m = Matrix::<S>::zeros(n);
    for k in 1..=n {
        // M_k = X·M_{k−1} + c_{k−1}·I
        let mut next = x * &m;
        for i in 0..n {
            next[(i, i)] += coeffs[k - 1];
        }
        m = next;
        let c = -(x * &m).trace() / S::from_f64(k as f64);
        coeffs.push(c);
    }
    coeffs
}
