//! Operator algebra: maximally monotone operators with computable
//! resolvents, single-valued Lipschitz or cocoercive maps, and bounded
//! linear maps.

mod catalog;
mod counting;
mod linear;
mod single;
mod verify;

pub use catalog::{prox_catalog, MatrixDoc, Prox, ProxParams, QuadForm};
pub use counting::{
    uncounted, CountedLinear, CountedSetValued, CountedSingleValued, EvalCounter, EvalCounts,
};
pub use linear::{estimate_operator_norm, Gradient2d, IdentityOp, MatrixOp, NormEstimate, NORM_INFLATION};
pub use single::{AffineOp, ScaledShift, SumOp, ZeroOp};
pub use verify::{
    verify_adjoint, verify_operator_properties, verify_resolvent, DeclaredConstants,
    PropertyReport, ResolventReport, PROPERTY_SLACK,
};

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::space::Vector;

/// A maximally monotone operator `A` known through its resolvent
/// `(Id + step A)^{-1}`.
pub trait SetValuedOp<T: Scalar>: Send + Sync {
    /// Fixed dimension, or `None` for operators acting coordinatewise on
    /// any dimension.
    fn dim(&self) -> Option<usize>;

    fn resolvent(&self, step: T, point: &Vector<T>) -> Result<Vector<T>>;

    fn describe(&self) -> String;

    /// `true` when the operator is identically zero.
    fn is_zero(&self) -> bool {
        false
    }

    /// Measures whether `w in A x` through the resolvent identity
    /// `x = (Id + A)^{-1}(x + w)`; returns `|(Id + A)^{-1}(x + w) - x|`.
    fn membership_residual(&self, x: &Vector<T>, w: &Vector<T>) -> Result<T> {
        let j = self.resolvent(T::one(), &(x + w))?;
        Ok((&j - x).norm())
    }
}

/// A single-valued operator with declared constants (w.r.t. the identity
/// metric).
pub trait SingleValuedOp<T: Scalar>: Send + Sync {
    fn dim(&self) -> Option<usize>;

    fn eval(&self, x: &Vector<T>) -> Vector<T>;

    /// Declared Lipschitz constant.
    fn lipschitz(&self) -> T;

    /// Declared `l` such that the operator is `1/l`-cocoercive; `None` for
    /// merely Lipschitz operators.
    fn cocoercivity(&self) -> Option<T>;

    fn describe(&self) -> String;

    /// `true` when the operator is identically zero.
    fn is_zero(&self) -> bool {
        false
    }
}

/// A bounded linear map `V: K -> G` with its adjoint.
pub trait LinearOp<T: Scalar>: Send + Sync {
    fn dim_in(&self) -> usize;

    fn dim_out(&self) -> usize;

    fn apply(&self, x: &Vector<T>) -> Vector<T>;

    fn apply_adjoint(&self, z: &Vector<T>) -> Vector<T>;

    /// Analytic upper bound on the operator norm, if known.
    fn norm_bound(&self) -> Option<T> {
        None
    }

    fn is_identity(&self) -> bool {
        false
    }

    fn describe(&self) -> String;
}

/// `(Id + sigma D^{-1})^{-1}(point)` computed via Moreau's identity as
/// `point - sigma (Id + sigma^{-1} D)^{-1}(point / sigma)`.
pub fn resolvent_of_inverse<T: Scalar>(
    d: &dyn SetValuedOp<T>,
    sigma: T,
    point: &Vector<T>,
) -> Result<Vector<T>> {
    Ok(moreau_split(d, sigma, point)?.0)
}

/// Returns `(outer, inner)` with `outer = (Id + sigma D^{-1})^{-1}(point)` and
/// `inner = sigma (Id + sigma^{-1} D)^{-1}(point / sigma)`, so that
/// `outer + inner = point`.
pub fn moreau_split<T: Scalar>(
    d: &dyn SetValuedOp<T>,
    sigma: T,
    point: &Vector<T>,
) -> Result<(Vector<T>, Vector<T>)> {
    if !(sigma > T::zero()) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "Moreau step must be positive, got {sigma}"
        )));
    }
    if d.is_zero() {
        // D = 0 makes D^{-1} the normal cone of {0}.
        return Ok((Vector::zeros(point.dim()), point.clone()));
    }
    let inner = d
        .resolvent(T::one() / sigma, &point.scale(T::one() / sigma))?
        .scale(sigma);
    let outer = point - &inner;
    Ok((outer, inner))
}

pub type SetValuedRef<T> = Arc<dyn SetValuedOp<T>>;
pub type SingleValuedRef<T> = Arc<dyn SingleValuedOp<T>>;
pub type LinearRef<T> = Arc<dyn LinearOp<T>>;

/// `B + D` for a set-valued `B` and single-valued `D`; its resolvent is not
/// tractable in general, membership is checked as `w - Dx in Bx`.
pub struct SumWithSingle<T: Scalar> {
    pub set_valued: SetValuedRef<T>,
    pub single: SingleValuedRef<T>,
}

impl<T: Scalar> SetValuedOp<T> for SumWithSingle<T> {
    fn dim(&self) -> Option<usize> {
        self.set_valued.dim().or(self.single.dim())
    }

    fn resolvent(&self, _step: T, _point: &Vector<T>) -> Result<Vector<T>> {
        Err(Error::Resolvent(format!(
            "resolvent of {} + {} is not available in closed form",
            self.set_valued.describe(),
            self.single.describe()
        )))
    }

    fn describe(&self) -> String {
        format!("{} + {}", self.set_valued.describe(), self.single.describe())
    }

    fn membership_residual(&self, x: &Vector<T>, w: &Vector<T>) -> Result<T> {
        let shifted = w - &self.single.eval(x);
        self.set_valued.membership_residual(x, &shifted)
    }
}
