use crate::error::{Error, Result};
use crate::operators::{SetValuedRef, SingleValuedRef};
use crate::scalar::Scalar;
use crate::space::Vector;

/// The inclusion `0 in A x + C x` as seen by the engine: the forward
/// operator `C`, its cocoercivity parameter with respect to the kernel's
/// metric, and a membership test for `A + C`. The resolvent side of `A`
/// lives in the kernel.
pub trait Inclusion<T: Scalar>: Send + Sync {
    fn dim(&self) -> usize;

    /// `C x`
    fn forward(&self, x: &Vector<T>) -> Vector<T>;

    /// `l` such that `C` is `1/l`-cocoercive with respect to `S`.
    fn ell(&self) -> T;

    /// Defect of `w in (A + C) x` (zero when the inclusion holds).
    fn membership_defect(&self, x: &Vector<T>, w: &Vector<T>) -> Result<T>;

    fn describe(&self) -> String;
}

/// `0 in A x + C x` on a single space.
#[derive(Clone)]
pub struct CompositeInclusion<T: Scalar> {
    pub a: SetValuedRef<T>,
    pub c: SingleValuedRef<T>,
    pub dim: usize,
    ell: T,
}

impl<T: Scalar> CompositeInclusion<T> {
    /// Uses the cocoercivity declared by `c` (identity metric).
    pub fn new(a: SetValuedRef<T>, c: SingleValuedRef<T>, dim: usize) -> Result<Self> {
        let ell = c.cocoercivity().ok_or_else(|| {
            Error::InvalidParameter(format!("{} is not declared cocoercive", c.describe()))
        })?;
        Ok(Self { a, c, dim, ell })
    }

    /// Overrides `l`, for metrics other than the identity.
    pub fn with_ell(mut self, ell: T) -> Self {
        self.ell = ell;
        self
    }
}

impl<T: Scalar> Inclusion<T> for CompositeInclusion<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn forward(&self, x: &Vector<T>) -> Vector<T> {
        self.c.eval(x)
    }

    fn ell(&self) -> T {
        self.ell
    }

    fn membership_defect(&self, x: &Vector<T>, w: &Vector<T>) -> Result<T> {
        let shifted = w - &self.c.eval(x);
        self.a.membership_residual(x, &shifted)
    }

    fn describe(&self) -> String {
        format!("0 in {} + {}", self.a.describe(), self.c.describe())
    }
}
