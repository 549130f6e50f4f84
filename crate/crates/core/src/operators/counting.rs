//! Instrumented wrappers that count operator evaluations.

use std::cell::Cell;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde::Serialize;

use super::{LinearOp, LinearRef, SetValuedOp, SetValuedRef, SingleValuedOp, SingleValuedRef};
use crate::error::Result;
use crate::scalar::Scalar;
use crate::space::Vector;

/// Shared evaluation counters of one wrapped operator.
#[derive(Debug, Default)]
pub struct EvalCounter {
    resolvent: AtomicUsize,
    eval: AtomicUsize,
    apply: AtomicUsize,
    adjoint: AtomicUsize,
}

/// Snapshot of an [`EvalCounter`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct EvalCounts {
    pub resolvent: usize,
    pub eval: usize,
    pub apply: usize,
    pub adjoint: usize,
}

impl EvalCounts {
    pub fn total(&self) -> usize {
        self.resolvent + self.eval + self.apply + self.adjoint
    }
}

impl std::ops::Sub for EvalCounts {
    type Output = EvalCounts;

    fn sub(self, rhs: Self) -> Self {
        EvalCounts {
            resolvent: self.resolvent - rhs.resolvent,
            eval: self.eval - rhs.eval,
            apply: self.apply - rhs.apply,
            adjoint: self.adjoint - rhs.adjoint,
        }
    }
}

impl EvalCounter {
    pub fn snapshot(&self) -> EvalCounts {
        EvalCounts {
            resolvent: self.resolvent.load(Ordering::Relaxed),
            eval: self.eval.load(Ordering::Relaxed),
            apply: self.apply.load(Ordering::Relaxed),
            adjoint: self.adjoint.load(Ordering::Relaxed),
        }
    }

    pub fn reset(&self) {
        for c in [&self.resolvent, &self.eval, &self.apply, &self.adjoint] {
            c.store(0, Ordering::Relaxed);
        }
    }

    fn bump(c: &AtomicUsize) {
        if !PAUSED.with(Cell::get) {
            c.fetch_add(1, Ordering::Relaxed);
        }
    }
}

thread_local! {
    static PAUSED: Cell<bool> = const { Cell::new(false) };
}

/// Runs `f` with counting suspended on the current thread. Monitors use this
/// so that diagnostics do not show up as algorithm cost.
pub fn uncounted<R>(f: impl FnOnce() -> R) -> R {
    let previous = PAUSED.with(|p| p.replace(true));
    let out = f();
    PAUSED.with(|p| p.set(previous));
    out
}

/// Counts resolvent evaluations. Membership checks used by diagnostics are
/// forwarded to the inner operator and not counted.
pub struct CountedSetValued<T: Scalar> {
    inner: SetValuedRef<T>,
    counter: Arc<EvalCounter>,
}

impl<T: Scalar> CountedSetValued<T> {
    pub fn new(inner: SetValuedRef<T>) -> Self {
        Self {
            inner,
            counter: Arc::default(),
        }
    }

    pub fn counter(&self) -> Arc<EvalCounter> {
        self.counter.clone()
    }
}

impl<T: Scalar> SetValuedOp<T> for CountedSetValued<T> {
    fn dim(&self) -> Option<usize> {
        self.inner.dim()
    }

    fn resolvent(&self, step: T, point: &Vector<T>) -> Result<Vector<T>> {
        EvalCounter::bump(&self.counter.resolvent);
        self.inner.resolvent(step, point)
    }

    fn describe(&self) -> String {
        self.inner.describe()
    }

    fn is_zero(&self) -> bool {
        self.inner.is_zero()
    }

    fn membership_residual(&self, x: &Vector<T>, w: &Vector<T>) -> Result<T> {
        self.inner.membership_residual(x, w)
    }
}

/// Counts forward evaluations.
pub struct CountedSingleValued<T: Scalar> {
    inner: SingleValuedRef<T>,
    counter: Arc<EvalCounter>,
}

impl<T: Scalar> CountedSingleValued<T> {
    pub fn new(inner: SingleValuedRef<T>) -> Self {
        Self {
            inner,
            counter: Arc::default(),
        }
    }

    pub fn counter(&self) -> Arc<EvalCounter> {
        self.counter.clone()
    }
}

impl<T: Scalar> SingleValuedOp<T> for CountedSingleValued<T> {
    fn dim(&self) -> Option<usize> {
        self.inner.dim()
    }

    fn eval(&self, x: &Vector<T>) -> Vector<T> {
        EvalCounter::bump(&self.counter.eval);
        self.inner.eval(x)
    }

    fn lipschitz(&self) -> T {
        self.inner.lipschitz()
    }

    fn cocoercivity(&self) -> Option<T> {
        self.inner.cocoercivity()
    }

    fn describe(&self) -> String {
        self.inner.describe()
    }

    fn is_zero(&self) -> bool {
        self.inner.is_zero()
    }
}

/// Counts applications of `V` and `V*`.
pub struct CountedLinear<T: Scalar> {
    inner: LinearRef<T>,
    counter: Arc<EvalCounter>,
}

impl<T: Scalar> CountedLinear<T> {
    pub fn new(inner: LinearRef<T>) -> Self {
        Self {
            inner,
            counter: Arc::default(),
        }
    }

    pub fn counter(&self) -> Arc<EvalCounter> {
        self.counter.clone()
    }
}

impl<T: Scalar> LinearOp<T> for CountedLinear<T> {
    fn dim_in(&self) -> usize {
        self.inner.dim_in()
    }

    fn dim_out(&self) -> usize {
        self.inner.dim_out()
    }

    fn apply(&self, x: &Vector<T>) -> Vector<T> {
        EvalCounter::bump(&self.counter.apply);
        self.inner.apply(x)
    }

    fn apply_adjoint(&self, z: &Vector<T>) -> Vector<T> {
        EvalCounter::bump(&self.counter.adjoint);
        self.inner.apply_adjoint(z)
    }

    fn norm_bound(&self) -> Option<T> {
        self.inner.norm_bound()
    }

    fn is_identity(&self) -> bool {
        self.inner.is_identity()
    }

    fn describe(&self) -> String {
        self.inner.describe()
    }
}
