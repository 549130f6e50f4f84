//! Finite-dimensional Hilbert-space arithmetic: coordinate vectors, product
//! vectors and metrics `S` inducing `<x, y>_S = <Sx, y>`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix};
use crate::scalar::{lit, Scalar};

/// A point of a finite-dimensional real Hilbert space.
#[derive(Clone, PartialEq, Default)]
pub struct Vector<T>(Vec<T>);

impl<T: Scalar> Vector<T> {
    /// Builds a vector, rejecting NaN and infinite coordinates.
    pub fn new(coords: Vec<T>) -> Result<Self> {
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("coordinate {i}")));
        }
        Ok(Self(coords))
    }

    /// Builds a vector without the finiteness check. Used on hot paths whose
    /// inputs are already known to be finite; the engine re-checks iterates.
    pub fn from_vec(coords: Vec<T>) -> Self {
        Self(coords)
    }

    pub fn from_f64(coords: &[f64]) -> Self {
        Self(coords.iter().map(|&c| lit(c)).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![T::zero(); dim])
    }

    pub fn filled(dim: usize, value: T) -> Self {
        Self(vec![value; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.0.iter()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&c| crate::scalar::to_f64(c)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.is_zero())
    }

    pub fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected,
                found: self.dim(),
            })
        }
    }

    pub fn dot(&self, other: &Self) -> T {
        debug_assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(&other.0)
            .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
    }

    pub fn norm_sq(&self) -> T {
        self.dot(self)
    }

    pub fn norm(&self) -> T {
        self.norm_sq().sqrt()
    }

    pub fn norm_inf(&self) -> T {
        self.0.iter().fold(T::zero(), |m, c| m.max(c.abs()))
    }

    pub fn scale(&self, s: T) -> Self {
        Self(self.0.iter().map(|&c| c * s).collect())
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: T, other: &Self) {
        debug_assert_eq!(self.dim(), other.dim());
        for (a, &b) in self.0.iter_mut().zip(&other.0) {
            *a += s * b;
        }
    }

    /// `a * self + b * other`
    pub fn lincomb(&self, a: T, b: T, other: &Self) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&x, &y)| a * x + b * y)
                .collect(),
        )
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self(self.0.iter().map(|&c| f(c)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        Self(self.0.iter().zip(&other.0).map(|(&a, &b)| f(a, b)).collect())
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut coords = Vec::with_capacity(self.dim() + other.dim());
        coords.extend_from_slice(&self.0);
        coords.extend_from_slice(&other.0);
        Self(coords)
    }

    pub fn split_at(&self, mid: usize) -> (Self, Self) {
        let (a, b) = self.0.split_at(mid);
        (Self(a.to_vec()), Self(b.to_vec()))
    }

    pub fn dist_inf(&self, other: &Self) -> T {
        self.0
            .iter()
            .zip(&other.0)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }
}

impl<T: fmt::Debug> fmt::Debug for Vector<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl<T> Index<usize> for Vector<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T> IndexMut<usize> for Vector<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.0[i]
    }
}

impl<T: Scalar> Add for &Vector<T> {
    type Output = Vector<T>;
    fn add(self, rhs: Self) -> Vector<T> {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl<T: Scalar> Sub for &Vector<T> {
    type Output = Vector<T>;
    fn sub(self, rhs: Self) -> Vector<T> {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl<T: Scalar> Mul<T> for &Vector<T> {
    type Output = Vector<T>;
    fn mul(self, s: T) -> Vector<T> {
        self.scale(s)
    }
}

impl<T: Scalar> Neg for &Vector<T> {
    type Output = Vector<T>;
    fn neg(self) -> Vector<T> {
        self.map(|c| -c)
    }
}

impl<T: Scalar> FromIterator<T> for Vector<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// A point `(y, z)` of a product space `K x G`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductVec<T> {
    pub primal: Vector<T>,
    pub dual: Vector<T>,
}

impl<T: Scalar> ProductVec<T> {
    pub fn new(primal: Vector<T>, dual: Vector<T>) -> Self {
        Self { primal, dual }
    }

    pub fn flatten(&self) -> Vector<T> {
        self.primal.concat(&self.dual)
    }

    /// Inverse of [`flatten`](Self::flatten) given the primal dimension.
    pub fn split(flat: &Vector<T>, primal_dim: usize) -> Result<Self> {
        if primal_dim > flat.dim() {
            return Err(Error::DimensionMismatch {
                expected: primal_dim,
                found: flat.dim(),
            });
        }
        let (primal, dual) = flat.split_at(primal_dim);
        Ok(Self { primal, dual })
    }
}

/// A bounded, self-adjoint, strongly positive linear operator `S`.
pub trait Metric<T: Scalar>: Send + Sync {
    fn dim(&self) -> usize;

    /// `S x`
    fn apply(&self, x: &Vector<T>) -> Vector<T>;

    /// `S^{-1} x`
    fn apply_inverse(&self, x: &Vector<T>) -> Vector<T>;

    /// `m > 0` with `<Sx, x> >= m |x|^2`.
    fn strong_positivity_bound(&self) -> T;

    /// `M` with `<Sx, x> <= M |x|^2`.
    fn upper_bound(&self) -> T;

    fn is_identity(&self) -> bool {
        false
    }

    fn describe(&self) -> String;
}

/// `<Sx, y>`
pub fn inner_s<T: Scalar>(s: &dyn Metric<T>, x: &Vector<T>, y: &Vector<T>) -> Result<T> {
    x.check_dim(s.dim())?;
    y.check_dim(s.dim())?;
    Ok(s.apply(x).dot(y))
}

/// `|x|_S`
pub fn norm_s<T: Scalar>(s: &dyn Metric<T>, x: &Vector<T>) -> Result<T> {
    Ok(inner_s(s, x, x)?.max(T::zero()).sqrt())
}

/// `|x|_{S^{-1}}`
pub fn norm_s_inv<T: Scalar>(s: &dyn Metric<T>, x: &Vector<T>) -> Result<T> {
    x.check_dim(s.dim())?;
    Ok(s.apply_inverse(x).dot(x).max(T::zero()).sqrt())
}

/// Absolute residual of the four-point identity
/// `2<a-b, d-c>_S = |a-c|_S^2 - |b-c|_S^2 - |a-d|_S^2 + |b-d|_S^2`.
pub fn check_four_point_identity<T: Scalar>(
    s: &dyn Metric<T>,
    a: &Vector<T>,
    b: &Vector<T>,
    c: &Vector<T>,
    d: &Vector<T>,
) -> Result<T> {
    let two = lit::<T>(2.0);
    let lhs = two * inner_s(s, &(a - b), &(d - c))?;
    let sq = |u: &Vector<T>, v: &Vector<T>| -> Result<T> { inner_s(s, &(u - v), &(u - v)) };
    let rhs = sq(a, c)? - sq(b, c)? - sq(a, d)? + sq(b, d)?;
    Ok((lhs - rhs).abs())
}

/// Tolerance the four-point identity residual must respect.
pub fn four_point_tolerance<T: Scalar>(
    s: &dyn Metric<T>,
    a: &Vector<T>,
    b: &Vector<T>,
    c: &Vector<T>,
    d: &Vector<T>,
) -> Result<T> {
    let sq = |u: &Vector<T>, v: &Vector<T>| -> Result<T> { inner_s(s, &(u - v), &(u - v)) };
    let total = sq(a, c)? + sq(b, c)? + sq(a, d)? + sq(b, d)?;
    Ok(lit::<T>(1e-9) * (total + T::one()))
}

/// `S = Id`
#[derive(Clone, Debug)]
pub struct IdentityMetric {
    dim: usize,
}

impl IdentityMetric {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl<T: Scalar> Metric<T> for IdentityMetric {
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply(&self, x: &Vector<T>) -> Vector<T> {
        x.clone()
    }
    fn apply_inverse(&self, x: &Vector<T>) -> Vector<T> {
        x.clone()
    }
    fn strong_positivity_bound(&self) -> T {
        T::one()
    }
    fn upper_bound(&self) -> T {
        T::one()
    }
    fn is_identity(&self) -> bool {
        true
    }
    fn describe(&self) -> String {
        format!("Id({})", self.dim)
    }
}

/// Diagonal metric with strictly positive entries. Covers scaled identities
/// and block-diagonal scalings such as `diag(Id, (tau/sigma) Id)`.
#[derive(Clone, Debug)]
pub struct DiagonalMetric<T> {
    diag: Vec<T>,
    min: T,
    max: T,
}

impl<T: Scalar> DiagonalMetric<T> {
    pub fn new(diag: Vec<T>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidParameter("empty diagonal metric".into()));
        }
        if let Some(i) = diag.iter().position(|d| !(d.is_finite() && *d > T::zero())) {
            return Err(Error::NotPositiveDefinite(format!(
                "diagonal entry {i} is not positive"
            )));
        }
        let min = diag.iter().fold(T::infinity(), |m, &d| m.min(d));
        let max = diag.iter().fold(T::zero(), |m, &d| m.max(d));
        Ok(Self { diag, min, max })
    }

    /// `diag(a Id_{n1}, b Id_{n2})`
    pub fn blocks(n1: usize, a: T, n2: usize, b: T) -> Result<Self> {
        let mut diag = vec![a; n1];
        diag.extend(std::iter::repeat_n(b, n2));
        Self::new(diag)
    }

    pub fn entries(&self) -> &[T] {
        &self.diag
    }
}

impl<T: Scalar> Metric<T> for DiagonalMetric<T> {
    fn dim(&self) -> usize {
        self.diag.len()
    }
    fn apply(&self, x: &Vector<T>) -> Vector<T> {
        x.iter().zip(&self.diag).map(|(&a, &d)| a * d).collect()
    }
    fn apply_inverse(&self, x: &Vector<T>) -> Vector<T> {
        x.iter().zip(&self.diag).map(|(&a, &d)| a / d).collect()
    }
    fn strong_positivity_bound(&self) -> T {
        self.min
    }
    fn upper_bound(&self) -> T {
        self.max
    }
    fn is_identity(&self) -> bool {
        self.diag.iter().all(|d| *d == T::one())
    }
    fn describe(&self) -> String {
        format!("diag(dim {})", self.diag.len())
    }
}

/// General symmetric positive definite metric backed by a Cholesky factor.
#[derive(Clone, Debug)]
pub struct DenseMetric<T> {
    matrix: Matrix<T>,
    factor: Cholesky<T>,
    lower: T,
    upper: T,
}

impl<T: Scalar> DenseMetric<T> {
    pub fn new(matrix: Matrix<T>) -> Result<Self> {
        if matrix.rows() != matrix.cols() {
            return Err(Error::InvalidParameter("metric matrix must be square".into()));
        }
        let asym = matrix.asymmetry();
        if asym > lit::<T>(1e-12) * (T::one() + matrix.max_abs()) {
            return Err(Error::InvalidParameter(format!(
                "metric matrix is not symmetric (asymmetry {asym:e})"
            )));
        }
        let factor = Cholesky::new(&matrix)?;
        let (lower, upper) = matrix.symmetric_eigen_bounds();
        if lower <= T::zero() {
            return Err(Error::NotPositiveDefinite(format!(
                "smallest eigenvalue estimate {lower:e}"
            )));
        }
        Ok(Self {
            matrix,
            factor,
            lower,
            upper,
        })
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }
}

impl<T: Scalar> Metric<T> for DenseMetric<T> {
    fn dim(&self) -> usize {
        self.matrix.rows()
    }
    fn apply(&self, x: &Vector<T>) -> Vector<T> {
        self.matrix.matvec(x)
    }
    fn apply_inverse(&self, x: &Vector<T>) -> Vector<T> {
        self.factor.solve(x)
    }
    fn strong_positivity_bound(&self) -> T {
        self.lower
    }
    fn upper_bound(&self) -> T {
        self.upper
    }
    fn describe(&self) -> String {
        format!("dense SPD({})", self.matrix.rows())
    }
}
