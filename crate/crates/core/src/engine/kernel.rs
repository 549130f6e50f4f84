use crate::error::{Error, Result};
use crate::operators::SetValuedRef;
use crate::scalar::Scalar;
use crate::space::{Metric, Vector};

/// Step sizes `gamma_k` and Lipschitz constants `L_k` of `gamma_k M_k - S`.
pub trait StepSchedule<T: Scalar> {
    fn gamma(&self, k: usize) -> T;

    fn lipschitz(&self, k: usize) -> T;

    /// `true` when `gamma_k` and `L_k` do not depend on `k`.
    fn is_constant(&self) -> bool {
        false
    }
}

/// `gamma_k = gamma`, `L_k = lipschitz`.
#[derive(Clone, Copy, Debug)]
pub struct ConstantSchedule<T> {
    pub gamma: T,
    pub lipschitz: T,
}

impl<T: Scalar> StepSchedule<T> for ConstantSchedule<T> {
    fn gamma(&self, _k: usize) -> T {
        self.gamma
    }

    fn lipschitz(&self, _k: usize) -> T {
        self.lipschitz
    }

    fn is_constant(&self) -> bool {
        true
    }
}

/// Schedule given by closures.
pub struct FnSchedule<G, L> {
    pub gamma: G,
    pub lipschitz: L,
}

impl<T: Scalar, G: Fn(usize) -> T, L: Fn(usize) -> T> StepSchedule<T> for FnSchedule<G, L> {
    fn gamma(&self, k: usize) -> T {
        (self.gamma)(k)
    }

    fn lipschitz(&self, k: usize) -> T {
        (self.lipschitz)(k)
    }
}

/// A vector `direct + lift(deferred)` whose lifted part is evaluated only
/// when materialized. Kernels whose corrections or metric involve an
/// expensive linear map (such as `V*`) put its argument in `deferred`, so
/// that a whole linear combination costs one application.
#[derive(Clone, Debug, PartialEq)]
pub struct Lazy<T> {
    pub direct: Vector<T>,
    pub deferred: Option<Vector<T>>,
}

impl<T: Scalar> Lazy<T> {
    pub fn direct(v: Vector<T>) -> Self {
        Self {
            direct: v,
            deferred: None,
        }
    }

    pub fn with_deferred(direct: Vector<T>, deferred: Vector<T>) -> Self {
        Self {
            direct,
            deferred: Some(deferred),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::direct(Vector::zeros(dim))
    }

    /// `a * self + b * other`
    pub fn lincomb(&self, a: T, b: T, other: &Self) -> Self {
        let deferred = match (&self.deferred, &other.deferred) {
            (None, None) => None,
            (Some(w), None) => Some(w.scale(a)),
            (None, Some(w)) => Some(w.scale(b)),
            (Some(v), Some(w)) => Some(v.lincomb(a, b, w)),
        };
        Self {
            direct: self.direct.lincomb(a, b, &other.direct),
            deferred,
        }
    }

    pub fn scale(&self, a: T) -> Self {
        Self {
            direct: self.direct.scale(a),
            deferred: self.deferred.as_ref().map(|w| w.scale(a)),
        }
    }

    /// Adds `s * v` to the direct part.
    pub fn add_direct(&mut self, s: T, v: &Vector<T>) {
        self.direct.axpy(s, v);
    }

    pub fn materialize<K: Kernel<T> + ?Sized>(&self, kernel: &K) -> Vector<T> {
        match &self.deferred {
            None => self.direct.clone(),
            Some(w) => &self.direct + &kernel.lift(w),
        }
    }

    /// `true` when both parts are exactly zero.
    pub fn is_exact_zero(&self) -> bool {
        self.direct.is_zero() && self.deferred.as_ref().is_none_or(|w| w.is_zero())
    }
}

/// Per-iterate cache of expensive evaluations, filled by the kernel that
/// produced or inspected the iterate.
#[derive(Clone, Debug, Default)]
pub struct Memo<T> {
    /// Image of the primal block under the coupling map (`V y`).
    pub image: Option<Vector<T>>,
    /// Forward evaluation used by the correction (`D x` or `E y`).
    pub forward: Option<Vector<T>>,
    /// Anchored backward evaluation `(k, value)` for kernels whose
    /// correction depends on the current iterate.
    pub anchored: Option<(usize, Vector<T>)>,
}

/// Current iterate handed to state-dependent kernels.
#[derive(Clone, Copy, Debug)]
pub struct Anchor<'a, T> {
    pub k: usize,
    pub x: &'a Vector<T>,
    pub x_prev: &'a Vector<T>,
}

/// Kernel `M_k` of the nonlinear forward-backward iteration together with
/// the set-valued operator `A` it is paired with.
///
/// The engine never evaluates `M_k` directly; it uses the correction
/// `(gamma_k M_k - S) x` and the resolvent `(M_k + A)^{-1}`.
pub trait Kernel<T: Scalar>: StepSchedule<T> + Send + Sync {
    fn dim(&self) -> usize;

    fn metric(&self) -> &dyn Metric<T>;

    /// `(gamma_k M_k - S) x`.
    fn correction(
        &self,
        k: usize,
        anchor: &Anchor<T>,
        x: &Vector<T>,
        memo: &mut Memo<T>,
    ) -> Result<Lazy<T>>;

    /// `Some(r)` when `correction(k + 1, x) = r * correction(k, x)` for
    /// every `x`, letting the engine rescale instead of re-evaluating.
    fn correction_rescale(&self, _k: usize) -> Option<T> {
        None
    }

    /// `(M_k + A)^{-1} p`. May fill `memo` for the returned point.
    fn resolvent(
        &self,
        k: usize,
        anchor: &Anchor<T>,
        p: &Vector<T>,
        memo: &mut Memo<T>,
    ) -> Result<Vector<T>>;

    /// `S x`, possibly deferring part of it.
    fn metric_apply(&self, x: &Vector<T>, _memo: &mut Memo<T>) -> Lazy<T> {
        Lazy::direct(self.metric().apply(x))
    }

    /// Materializes the deferred part of a [`Lazy`]. Kernels that never
    /// defer keep the default, which should not be reached.
    fn lift(&self, deferred: &Vector<T>) -> Vector<T> {
        debug_assert!(false, "kernel does not defer evaluations");
        Vector::zeros(deferred.dim())
    }

    /// `M_k x`, evaluated independently of the correction path.
    fn kernel_eval(&self, k: usize, anchor: &Anchor<T>, x: &Vector<T>) -> Result<Vector<T>>;

    fn describe(&self) -> String;
}

/// Plain forward-backward kernel `M_k = gamma^{-1} S` with `S = s Id`, paired
/// with `A`: the correction is exactly zero.
pub struct ForwardBackward<T: Scalar> {
    a: SetValuedRef<T>,
    gamma: T,
    scale: T,
    metric: crate::space::DiagonalMetric<T>,
}

impl<T: Scalar> ForwardBackward<T> {
    pub fn new(a: SetValuedRef<T>, gamma: T, dim: usize) -> Result<Self> {
        Self::scaled(a, gamma, T::one(), dim)
    }

    /// Metric `S = scale * Id`.
    pub fn scaled(a: SetValuedRef<T>, gamma: T, scale: T, dim: usize) -> Result<Self> {
        if !(gamma > T::zero()) {
            return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
        }
        let metric = crate::space::DiagonalMetric::new(vec![scale; dim])?;
        Ok(Self {
            a,
            gamma,
            scale,
            metric,
        })
    }
}

impl<T: Scalar> StepSchedule<T> for ForwardBackward<T> {
    fn gamma(&self, _k: usize) -> T {
        self.gamma
    }

    fn lipschitz(&self, _k: usize) -> T {
        T::zero()
    }

    fn is_constant(&self) -> bool {
        true
    }
}

impl<T: Scalar> Kernel<T> for ForwardBackward<T> {
    fn dim(&self) -> usize {
        self.metric.dim()
    }

    fn metric(&self) -> &dyn Metric<T> {
        &self.metric
    }

    fn correction(
        &self,
        _k: usize,
        _anchor: &Anchor<T>,
        x: &Vector<T>,
        _memo: &mut Memo<T>,
    ) -> Result<Lazy<T>> {
        Ok(Lazy::zeros(x.dim()))
    }

    fn correction_rescale(&self, _k: usize) -> Option<T> {
        Some(T::one())
    }

    fn resolvent(
        &self,
        _k: usize,
        _anchor: &Anchor<T>,
        p: &Vector<T>,
        _memo: &mut Memo<T>,
    ) -> Result<Vector<T>> {
        // (s/gamma Id + A)^{-1} p = J_{(gamma/s) A}((gamma/s) p)
        let t = self.gamma / self.scale;
        self.a.resolvent(t, &p.scale(t))
    }

    fn kernel_eval(&self, _k: usize, _anchor: &Anchor<T>, x: &Vector<T>) -> Result<Vector<T>> {
        Ok(x.scale(self.scale / self.gamma))
    }

    fn describe(&self) -> String {
        format!("forward-backward (gamma = {})", self.gamma)
    }
}

/// The additional-momentum iteration with parameter `theta` rewritten as a
/// plain iteration: same `M_k`, step `gamma_k / (1 - theta)`, correction
/// `((gamma_k M_k - S) + theta S) / (1 - theta)` and Lipschitz constant
/// `(L_k + |theta|) / (1 - theta)`.
pub struct Reparameterized<'a, T: Scalar> {
    inner: &'a dyn Kernel<T>,
    theta: T,
}

impl<'a, T: Scalar> Reparameterized<'a, T> {
    pub fn new(inner: &'a dyn Kernel<T>, theta: T) -> Result<Self> {
        if !(theta < T::one()) {
            return Err(Error::InvalidParameter(format!("theta must be < 1, got {theta}")));
        }
        Ok(Self { inner, theta })
    }

    fn factor(&self) -> T {
        T::one() / (T::one() - self.theta)
    }
}

impl<T: Scalar> StepSchedule<T> for Reparameterized<'_, T> {
    fn gamma(&self, k: usize) -> T {
        self.inner.gamma(k) * self.factor()
    }

    fn lipschitz(&self, k: usize) -> T {
        (self.inner.lipschitz(k) + self.theta.abs()) * self.factor()
    }

    fn is_constant(&self) -> bool {
        self.inner.is_constant()
    }
}

impl<T: Scalar> Kernel<T> for Reparameterized<'_, T> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn metric(&self) -> &dyn Metric<T> {
        self.inner.metric()
    }

    fn correction(
        &self,
        k: usize,
        anchor: &Anchor<T>,
        x: &Vector<T>,
        memo: &mut Memo<T>,
    ) -> Result<Lazy<T>> {
        let c = self.inner.correction(k, anchor, x, memo)?;
        let s = self.inner.metric_apply(x, memo);
        Ok(c.lincomb(self.factor(), self.theta * self.factor(), &s))
    }

    fn correction_rescale(&self, k: usize) -> Option<T> {
        self.inner.correction_rescale(k).filter(|r| *r == T::one())
    }

    fn resolvent(
        &self,
        k: usize,
        anchor: &Anchor<T>,
        p: &Vector<T>,
        memo: &mut Memo<T>,
    ) -> Result<Vector<T>> {
        self.inner.resolvent(k, anchor, p, memo)
    }

    fn metric_apply(&self, x: &Vector<T>, memo: &mut Memo<T>) -> Lazy<T> {
        self.inner.metric_apply(x, memo)
    }

    fn lift(&self, deferred: &Vector<T>) -> Vector<T> {
        self.inner.lift(deferred)
    }

    fn kernel_eval(&self, k: usize, anchor: &Anchor<T>, x: &Vector<T>) -> Result<Vector<T>> {
        self.inner.kernel_eval(k, anchor, x)
    }

    fn describe(&self) -> String {
        format!("{} reparameterized (theta = {})", self.inner.describe(), self.theta)
    }
}

/// Largest deviation `|correction(k, x) - (gamma_k M_k x - S x)|_inf` over
/// the given probes, comparing the correction path against `kernel_eval`.
pub fn correction_consistency<T: Scalar>(
    kernel: &dyn Kernel<T>,
    k: usize,
    anchor: &Anchor<T>,
    probes: &[Vector<T>],
) -> Result<T> {
    let mut worst = T::zero();
    for x in probes {
        let mut memo = Memo::default();
        let c = kernel.correction(k, anchor, x, &mut memo)?.materialize(kernel);
        let m = kernel.kernel_eval(k, anchor, x)?;
        let expected = &m.scale(kernel.gamma(k)) - &kernel.metric().apply(x);
        worst = worst.max(c.dist_inf(&expected));
    }
    Ok(worst)
}
