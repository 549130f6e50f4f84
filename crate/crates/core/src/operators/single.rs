use super::{SingleValuedOp, SingleValuedRef};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{lit, Scalar};
use crate::space::Vector;

/// `x -> Qx + c` with declared constants.
#[derive(Clone, Debug)]
pub struct AffineOp<T> {
    q: Matrix<T>,
    c: Vector<T>,
    lipschitz: T,
    cocoercivity: Option<T>,
}

fn spectral_norm<T: Scalar>(q: &Matrix<T>) -> T {
    let (_, hi) = q.gram().symmetric_eigen_bounds();
    hi.max(T::zero()).sqrt()
}

impl<T: Scalar> AffineOp<T> {
    fn check(q: &Matrix<T>, c: &Vector<T>) -> Result<()> {
        if q.rows() != q.cols() {
            return Err(Error::InvalidParameter("affine operator needs a square matrix".into()));
        }
        c.check_dim(q.rows())
    }

    /// `Q` symmetric positive semidefinite: the map is the gradient of a
    /// convex quadratic, `lambda_max(Q)`-Lipschitz and
    /// `1/lambda_max(Q)`-cocoercive.
    pub fn symmetric_psd(q: Matrix<T>, c: Vector<T>) -> Result<Self> {
        Self::check(&q, &c)?;
        let tol = lit::<T>(1e-12) * (T::one() + q.max_abs());
        if q.asymmetry() > tol {
            return Err(Error::InvalidParameter("Q is not symmetric".into()));
        }
        let (lo, hi) = q.symmetric_eigen_bounds();
        if lo < -tol {
            return Err(Error::InvalidParameter(format!(
                "Q is not positive semidefinite (eigenvalue {lo:e})"
            )));
        }
        let hi = hi.max(T::zero());
        Ok(Self {
            q,
            c,
            lipschitz: hi,
            cocoercivity: Some(hi),
        })
    }

    /// Arbitrary square `Q`: Lipschitz with the spectral norm, no
    /// cocoercivity declared.
    pub fn general(q: Matrix<T>, c: Vector<T>) -> Result<Self> {
        Self::check(&q, &c)?;
        let lipschitz = spectral_norm(&q);
        Ok(Self {
            q,
            c,
            lipschitz,
            cocoercivity: None,
        })
    }

    /// Caller-declared constants, taken at face value.
    pub fn with_constants(
        q: Matrix<T>,
        c: Vector<T>,
        lipschitz: T,
        cocoercivity: Option<T>,
    ) -> Result<Self> {
        Self::check(&q, &c)?;
        Ok(Self {
            q,
            c,
            lipschitz,
            cocoercivity,
        })
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.q
    }

    pub fn shift(&self) -> &Vector<T> {
        &self.c
    }
}

impl<T: Scalar> SingleValuedOp<T> for AffineOp<T> {
    fn dim(&self) -> Option<usize> {
        Some(self.q.rows())
    }

    fn eval(&self, x: &Vector<T>) -> Vector<T> {
        &self.q.matvec(x) + &self.c
    }

    fn lipschitz(&self) -> T {
        self.lipschitz
    }

    fn cocoercivity(&self) -> Option<T> {
        self.cocoercivity
    }

    fn describe(&self) -> String {
        format!("affine({})", self.q.rows())
    }
}

/// `x -> a (x - b)` coordinatewise, `a >= 0`; `b` of length one broadcasts.
#[derive(Clone, Debug)]
pub struct ScaledShift<T> {
    pub a: T,
    pub b: Vector<T>,
}

impl<T: Scalar> ScaledShift<T> {
    pub fn new(a: T, b: Vector<T>) -> Result<Self> {
        if !(a >= T::zero()) {
            return Err(Error::InvalidParameter(format!("scale must be nonnegative, got {a}")));
        }
        Ok(Self { a, b })
    }
}

impl<T: Scalar> SingleValuedOp<T> for ScaledShift<T> {
    fn dim(&self) -> Option<usize> {
        (self.b.dim() > 1).then_some(self.b.dim())
    }

    fn eval(&self, x: &Vector<T>) -> Vector<T> {
        if self.b.dim() == 1 {
            let b = self.b[0];
            x.map(|v| self.a * (v - b))
        } else {
            x.zip_map(&self.b, |v, b| self.a * (v - b))
        }
    }

    fn lipschitz(&self) -> T {
        self.a
    }

    fn cocoercivity(&self) -> Option<T> {
        Some(self.a)
    }

    fn describe(&self) -> String {
        format!("{}*(x - b)", self.a)
    }
}

/// `x -> 0`
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroOp;

impl<T: Scalar> SingleValuedOp<T> for ZeroOp {
    fn dim(&self) -> Option<usize> {
        None
    }

    fn eval(&self, x: &Vector<T>) -> Vector<T> {
        Vector::zeros(x.dim())
    }

    fn lipschitz(&self) -> T {
        T::zero()
    }

    fn cocoercivity(&self) -> Option<T> {
        Some(T::zero())
    }

    fn describe(&self) -> String {
        "0".into()
    }

    fn is_zero(&self) -> bool {
        true
    }
}

/// Sum of single-valued operators. Constants add up: Lipschitz constants
/// always, cocoercivity parameters `l` only when every term declares one.
pub struct SumOp<T: Scalar> {
    terms: Vec<SingleValuedRef<T>>,
}

impl<T: Scalar> SumOp<T> {
    pub fn new(terms: Vec<SingleValuedRef<T>>) -> Self {
        Self { terms }
    }
}

impl<T: Scalar> SingleValuedOp<T> for SumOp<T> {
    fn dim(&self) -> Option<usize> {
        self.terms.iter().find_map(|t| t.dim())
    }

    fn eval(&self, x: &Vector<T>) -> Vector<T> {
        let mut out = Vector::zeros(x.dim());
        for t in &self.terms {
            out.axpy(T::one(), &t.eval(x));
        }
        out
    }

    fn lipschitz(&self) -> T {
        self.terms.iter().map(|t| t.lipschitz()).sum()
    }

    fn cocoercivity(&self) -> Option<T> {
        self.terms
            .iter()
            .map(|t| t.cocoercivity())
            .sum::<Option<T>>()
    }

    fn describe(&self) -> String {
        self.terms
            .iter()
            .map(|t| t.describe())
            .collect::<Vec<_>>()
            .join(" + ")
    }

    fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.is_zero())
    }
}
