use super::LinearOp;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng;
use crate::scalar::{lit, Scalar};
use crate::space::Vector;

/// Dense linear map.
#[derive(Clone, Debug)]
pub struct MatrixOp<T> {
    matrix: Matrix<T>,
    norm_bound: Option<T>,
}

impl<T: Scalar> MatrixOp<T> {
    pub fn new(matrix: Matrix<T>) -> Self {
        Self {
            matrix,
            norm_bound: None,
        }
    }

    /// Attaches an analytic upper bound on `|V|`.
    pub fn with_norm_bound(mut self, bound: T) -> Self {
        self.norm_bound = Some(bound);
        self
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }
}

impl<T: Scalar> LinearOp<T> for MatrixOp<T> {
    fn dim_in(&self) -> usize {
        self.matrix.cols()
    }

    fn dim_out(&self) -> usize {
        self.matrix.rows()
    }

    fn apply(&self, x: &Vector<T>) -> Vector<T> {
        self.matrix.matvec(x)
    }

    fn apply_adjoint(&self, z: &Vector<T>) -> Vector<T> {
        self.matrix.matvec_transpose(z)
    }

    fn norm_bound(&self) -> Option<T> {
        self.norm_bound
    }

    fn describe(&self) -> String {
        format!("{}x{} matrix", self.matrix.rows(), self.matrix.cols())
    }
}

/// `V = Id`
#[derive(Clone, Copy, Debug)]
pub struct IdentityOp {
    pub dim: usize,
}

impl<T: Scalar> LinearOp<T> for IdentityOp {
    fn dim_in(&self) -> usize {
        self.dim
    }

    fn dim_out(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &Vector<T>) -> Vector<T> {
        x.clone()
    }

    fn apply_adjoint(&self, z: &Vector<T>) -> Vector<T> {
        z.clone()
    }

    fn norm_bound(&self) -> Option<T> {
        Some(T::one())
    }

    fn is_identity(&self) -> bool {
        true
    }

    fn describe(&self) -> String {
        format!("Id({})", self.dim)
    }
}

/// Forward-difference gradient of a `width x height` image stored row by
/// row, with Neumann boundary (the difference across the last column or row
/// is zero). The output holds all horizontal differences followed by all
/// vertical differences, so pixel `i` owns coordinates `i` and `i + n`.
#[derive(Clone, Copy, Debug)]
pub struct Gradient2d {
    pub width: usize,
    pub height: usize,
}

impl Gradient2d {
    pub fn pixels(&self) -> usize {
        self.width * self.height
    }
}

impl<T: Scalar> LinearOp<T> for Gradient2d {
    fn dim_in(&self) -> usize {
        self.pixels()
    }

    fn dim_out(&self) -> usize {
        2 * self.pixels()
    }

    fn apply(&self, x: &Vector<T>) -> Vector<T> {
        let (w, h, n) = (self.width, self.height, self.pixels());
        let mut out = vec![T::zero(); 2 * n];
        for r in 0..h {
            for c in 0..w {
                let i = r * w + c;
                if c + 1 < w {
                    out[i] = x[i + 1] - x[i];
                }
                if r + 1 < h {
                    out[n + i] = x[i + w] - x[i];
                }
            }
        }
        Vector::from_vec(out)
    }

    /// Negative divergence.
    fn apply_adjoint(&self, z: &Vector<T>) -> Vector<T> {
        let (w, h, n) = (self.width, self.height, self.pixels());
        let mut out = vec![T::zero(); n];
        for r in 0..h {
            for c in 0..w {
                let i = r * w + c;
                if c + 1 < w {
                    out[i] -= z[i];
                    out[i + 1] += z[i];
                }
                if r + 1 < h {
                    out[i] -= z[n + i];
                    out[i + w] += z[n + i];
                }
            }
        }
        Vector::from_vec(out)
    }

    fn norm_bound(&self) -> Option<T> {
        Some(lit::<T>(8.0).sqrt())
    }

    fn describe(&self) -> String {
        format!("grad {}x{}", self.width, self.height)
    }
}

/// Power-iteration estimate of `|V|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormEstimate<T> {
    /// Rayleigh-quotient value after the last iteration (a lower bound up
    /// to rounding).
    pub raw: T,
    /// `raw * (1 + 1e-3)`, the value used in step-size conditions.
    pub bound: T,
}

pub const NORM_INFLATION: f64 = 1e-3;

/// Estimates `|V| = sqrt(lambda_max(V* V))` by power iteration from a seeded
/// Gaussian start.
pub fn estimate_operator_norm<T: Scalar>(
    v: &dyn LinearOp<T>,
    iterations: usize,
    seed: u64,
) -> Result<NormEstimate<T>> {
    if v.dim_in() == 0 || v.dim_out() == 0 {
        return Err(Error::InvalidParameter("zero-dimensional operator".into()));
    }
    if iterations == 0 {
        return Err(Error::InvalidParameter("power iteration needs at least one iteration".into()));
    }
    let mut rng = rng::seeded(seed);
    let mut x: Vector<T> = rng::gaussian(&mut rng, v.dim_in());
    let start = x.norm();
    x = x.scale(T::one() / start);
    let mut raw = T::zero();
    for _ in 0..iterations {
        let vx = v.apply(&x);
        raw = vx.norm();
        let next = v.apply_adjoint(&vx);
        let n = next.norm();
        if n.is_zero() {
            break;
        }
        x = next.scale(T::one() / n);
    }
    raw = raw.max(v.apply(&x).norm());
    Ok(NormEstimate {
        raw,
        bound: raw * (T::one() + lit(NORM_INFLATION)),
    })
}
