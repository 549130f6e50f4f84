use std::sync::Arc;

use super::{Corollary, Instance, Sequence};
use crate::engine::{Anchor, CompositeInclusion, ForwardBackward, Kernel, Lazy, Memo, StepSchedule};
use crate::error::{Error, Result};
use crate::operators::{SetValuedRef, SingleValuedRef, SumOp, SumWithSingle, ZeroOp};
use crate::scalar::Scalar;
use crate::space::{IdentityMetric, Metric, Vector};

/// `0 in B x + D x + C x` with `B` maximally monotone, `D` monotone and
/// `delta`-Lipschitz, `C` `1/beta`-cocoercive.
#[derive(Clone)]
pub struct CompositeForm<T: Scalar> {
    pub b: SetValuedRef<T>,
    pub d: SingleValuedRef<T>,
    pub c: SingleValuedRef<T>,
    pub delta: T,
    pub beta: T,
    pub dim: usize,
}

impl<T: Scalar> CompositeForm<T> {
    /// Reads `delta` and `beta` from the operators' declared constants.
    pub fn new(b: SetValuedRef<T>, d: SingleValuedRef<T>, c: SingleValuedRef<T>, dim: usize) -> Result<Self> {
        for found in [b.dim(), d.dim(), c.dim()].into_iter().flatten() {
            if found != dim {
                return Err(Error::DimensionMismatch { expected: dim, found });
            }
        }
        let beta = c.cocoercivity().ok_or_else(|| {
            Error::InvalidParameter(format!("{} is not declared cocoercive", c.describe()))
        })?;
        let delta = d.lipschitz();
        Ok(Self {
            b,
            d,
            c,
            delta,
            beta,
            dim,
        })
    }

    /// `D = 0`.
    pub fn without_lipschitz_part(b: SetValuedRef<T>, c: SingleValuedRef<T>, dim: usize) -> Result<Self> {
        Self::new(b, Arc::new(ZeroOp), c, dim)
    }

    fn inclusion(&self) -> Result<CompositeInclusion<T>> {
        let a = Arc::new(SumWithSingle {
            set_valued: self.b.clone(),
            single: self.d.clone(),
        });
        Ok(CompositeInclusion::new(a, self.c.clone(), self.dim)?.with_ell(self.beta))
    }
}

/// Kernel `M_k = alpha_k^{-1} Id - D` paired with `A = B + D`: the
/// correction is `-alpha_k D x` and the resolvent reduces to
/// `J_{alpha_k B}`.
pub struct Fhrb<T: Scalar> {
    b: SetValuedRef<T>,
    d: SingleValuedRef<T>,
    alpha: Sequence<T>,
    delta: T,
    metric: IdentityMetric,
}

impl<T: Scalar> Fhrb<T> {
    pub fn new(form: &CompositeForm<T>, alpha: Sequence<T>) -> Result<Self> {
        alpha.validate_positive("alpha")?;
        Ok(Self {
            b: form.b.clone(),
            d: form.d.clone(),
            alpha,
            delta: form.delta,
            metric: IdentityMetric::new(form.dim),
        })
    }

    fn forward(&self, x: &Vector<T>, memo: &mut Memo<T>) -> Vector<T> {
        memo.forward.get_or_insert_with(|| self.d.eval(x)).clone()
    }
}

impl<T: Scalar> StepSchedule<T> for Fhrb<T> {
    fn gamma(&self, k: usize) -> T {
        self.alpha.at(k)
    }

    fn lipschitz(&self, k: usize) -> T {
        self.alpha.at(k) * self.delta
    }

    fn is_constant(&self) -> bool {
        self.alpha.is_constant()
    }
}

impl<T: Scalar> Kernel<T> for Fhrb<T> {
    fn dim(&self) -> usize {
        Metric::<T>::dim(&self.metric)
    }

    fn metric(&self) -> &dyn Metric<T> {
        &self.metric
    }

    fn correction(&self, k: usize, _anchor: &Anchor<T>, x: &Vector<T>, memo: &mut Memo<T>) -> Result<Lazy<T>> {
        Ok(Lazy::direct(self.forward(x, memo).scale(-self.alpha.at(k))))
    }

    fn correction_rescale(&self, k: usize) -> Option<T> {
        Some(self.alpha.at(k + 1) / self.alpha.at(k))
    }

    fn resolvent(&self, k: usize, _anchor: &Anchor<T>, p: &Vector<T>, _memo: &mut Memo<T>) -> Result<Vector<T>> {
        let a = self.alpha.at(k);
        self.b.resolvent(a, &p.scale(a))
    }

    fn kernel_eval(&self, k: usize, _anchor: &Anchor<T>, x: &Vector<T>) -> Result<Vector<T>> {
        Ok(&x.scale(T::one() / self.alpha.at(k)) - &self.d.eval(x))
    }

    fn describe(&self) -> String {
        format!("forward-half-reflected-backward (D = {})", self.d.describe())
    }
}

/// Plain forward-backward on `B + C`, optionally with heavy-ball momentum.
/// Requires `D = 0`.
pub fn build_forward_backward<T: Scalar>(form: &CompositeForm<T>, gamma: T, theta: T) -> Result<Instance<T>> {
    if !form.d.is_zero() {
        return Err(Error::InvalidParameter(
            "forward-backward needs D = 0; use the half-reflected methods".into(),
        ));
    }
    check_theta(theta)?;
    let kernel = ForwardBackward::new(form.b.clone(), gamma, form.dim)?;
    Ok(Instance {
        kernel: Box::new(kernel),
        inclusion: Box::new(form.inclusion()?),
        theta,
        corollary: Corollary::ForwardBackward {
            gamma,
            beta: form.beta,
            theta,
        },
    })
}

/// Forward-reflected-backward: the cocoercive part is merged into the
/// Lipschitz part, `D' = D + C`, `delta' = delta + beta`, `C' = 0`.
pub fn build_frb<T: Scalar>(form: &CompositeForm<T>, alpha: Sequence<T>) -> Result<Instance<T>> {
    let merged = if form.c.is_zero() {
        form.clone()
    } else {
        let d: SingleValuedRef<T> = Arc::new(SumOp::new(vec![form.d.clone(), form.c.clone()]));
        CompositeForm {
            b: form.b.clone(),
            d,
            c: Arc::new(ZeroOp),
            delta: form.delta + form.beta,
            beta: T::zero(),
            dim: form.dim,
        }
    };
    build_fhrb(&merged, alpha)
}

/// Forward-half-reflected-backward with step sizes `alpha_k`.
pub fn build_fhrb<T: Scalar>(form: &CompositeForm<T>, alpha: Sequence<T>) -> Result<Instance<T>> {
    build_fhrb_momentum(form, alpha, T::zero())
}

/// Forward-half-reflected-backward with additional momentum `theta`.
pub fn build_fhrb_momentum<T: Scalar>(form: &CompositeForm<T>, alpha: Sequence<T>, theta: T) -> Result<Instance<T>> {
    check_theta(theta)?;
    let kernel = Fhrb::new(form, alpha.clone())?;
    Ok(Instance {
        kernel: Box::new(kernel),
        inclusion: Box::new(form.inclusion()?),
        theta,
        corollary: Corollary::Fhrb {
            alpha,
            delta: form.delta,
            beta: form.beta,
            theta,
        },
    })
}

pub(crate) fn check_theta<T: Scalar>(theta: T) -> Result<()> {
    if theta.is_finite() && theta < T::one() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("theta must be < 1, got {theta}")))
    }
}
