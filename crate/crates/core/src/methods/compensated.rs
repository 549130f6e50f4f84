use super::fhrb::check_theta;
use super::primal_dual::{PrimalDualInclusion, PrimalDualProblem};
use super::{Corollary, Instance};
use crate::engine::{Anchor, Kernel, Lazy, Memo, StepSchedule};
use crate::error::{Error, Result};
use crate::operators::resolvent_of_inverse;
use crate::scalar::{lit, Scalar};
use crate::space::{DiagonalMetric, Metric, Vector};

/// Parameters of the resolvent-compensated primal-dual method.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PdResConfig<T> {
    pub tau: T,
    pub sigma: T,
    pub theta: T,
    pub norm_v: Option<T>,
}

impl<T: Scalar> PdResConfig<T> {
    pub fn new(tau: T, sigma: T) -> Self {
        Self {
            tau,
            sigma,
            theta: T::zero(),
            norm_v: None,
        }
    }
}

/// Kernel with `S = diag(Id, (tau/sigma) Id)`, step `tau` and
///
/// ```text
/// M_k (y, z) = (y/tau - V* J(a_k + sigma V y) - E y, z/sigma)
/// ```
///
/// where `J = (Id + sigma D^{-1})^{-1}` and `a_k = z_k + theta (z_k - z_{k-1})`
/// is the dual anchor of the current iterate. `M_k + A` is only inverted at
/// points whose dual block equals `a_k / sigma`, which is where the engine
/// evaluates it.
pub struct PdResolvent<T: Scalar> {
    problem: PrimalDualProblem<T>,
    tau: T,
    sigma: T,
    theta: T,
    norm_v: T,
    metric: DiagonalMetric<T>,
}

impl<T: Scalar> PdResolvent<T> {
    pub fn new(problem: &PrimalDualProblem<T>, config: &PdResConfig<T>) -> Result<Self> {
        if !(config.tau > T::zero() && config.sigma > T::zero()) {
            return Err(Error::InvalidParameter("tau and sigma must be positive".into()));
        }
        check_theta(config.theta)?;
        let norm_v = match config.norm_v {
            Some(n) => n,
            None => problem.norm_v()?,
        };
        let metric = DiagonalMetric::blocks(
            problem.primal_dim(),
            T::one(),
            problem.dual_dim(),
            config.tau / config.sigma,
        )?;
        Ok(Self {
            problem: problem.clone(),
            tau: config.tau,
            sigma: config.sigma,
            theta: config.theta,
            norm_v,
            metric,
        })
    }

    fn split(&self, x: &Vector<T>) -> (Vector<T>, Vector<T>) {
        self.problem.split(x)
    }

    fn anchor_point(&self, anchor: &Anchor<T>) -> Vector<T> {
        let (_, z) = self.split(anchor.x);
        if self.theta == T::zero() {
            return z;
        }
        let (_, z_prev) = self.split(anchor.x_prev);
        z.lincomb(T::one() + self.theta, -self.theta, &z_prev)
    }

    /// `J(a + sigma V y)`
    fn compensate(&self, a: &Vector<T>, vy: &Vector<T>) -> Result<Vector<T>> {
        let w = a.lincomb(T::one(), self.sigma, vy);
        resolvent_of_inverse(self.problem.d.as_ref(), self.sigma, &w)
    }
}

impl<T: Scalar> StepSchedule<T> for PdResolvent<T> {
    fn gamma(&self, _k: usize) -> T {
        self.tau
    }

    /// `tau delta + tau sigma |V|^2`
    fn lipschitz(&self, _k: usize) -> T {
        self.tau * (self.problem.delta + self.sigma * self.norm_v * self.norm_v)
    }

    fn is_constant(&self) -> bool {
        true
    }
}

impl<T: Scalar> Kernel<T> for PdResolvent<T> {
    fn dim(&self) -> usize {
        self.problem.dim()
    }

    fn metric(&self) -> &dyn Metric<T> {
        &self.metric
    }

    /// `(-tau E y - tau V* nu, 0)` with `nu = J(a_k + sigma V y)`; the
    /// `V*` is deferred.
    fn correction(&self, k: usize, anchor: &Anchor<T>, x: &Vector<T>, memo: &mut Memo<T>) -> Result<Lazy<T>> {
        let (y, _) = self.split(x);
        let vy = memo.image.get_or_insert_with(|| self.problem.v.apply(&y)).clone();
        let ey = memo.forward.get_or_insert_with(|| self.problem.e.eval(&y)).clone();
        let nu = match &memo.anchored {
            Some((j, nu)) if *j == k => nu.clone(),
            _ => {
                let nu = self.compensate(&self.anchor_point(anchor), &vy)?;
                memo.anchored = Some((k, nu.clone()));
                nu
            }
        };
        let direct = ey.scale(-self.tau).concat(&Vector::zeros(self.problem.dual_dim()));
        Ok(Lazy::with_deferred(direct, nu.scale(-self.tau)))
    }

    fn resolvent(&self, k: usize, anchor: &Anchor<T>, p: &Vector<T>, memo: &mut Memo<T>) -> Result<Vector<T>> {
        let (py, pz) = self.split(p);
        let a = self.anchor_point(anchor);
        let gap = pz.scale(self.sigma).dist_inf(&a);
        let tol = T::epsilon() * lit(1e4) * (T::one() + a.norm_inf());
        if !(gap <= tol) {
            return Err(Error::Resolvent(format!(
                "resolvent-compensated kernel is only invertible where sigma p_z = a_k (gap {gap:e})"
            )));
        }
        let y = self.problem.b.resolvent(self.tau, &py.scale(self.tau))?;
        let vy = self.problem.v.apply(&y);
        let z = self.compensate(&a, &vy)?;
        memo.image = Some(vy);
        memo.anchored = Some((k, z.clone()));
        Ok(y.concat(&z))
    }

    fn lift(&self, deferred: &Vector<T>) -> Vector<T> {
        self.problem
            .v
            .apply_adjoint(deferred)
            .concat(&Vector::zeros(self.problem.dual_dim()))
    }

    fn kernel_eval(&self, _k: usize, anchor: &Anchor<T>, x: &Vector<T>) -> Result<Vector<T>> {
        let (y, z) = self.split(x);
        let p = &self.problem;
        let nu = self.compensate(&self.anchor_point(anchor), &p.v.apply(&y))?;
        let top = &(&y.scale(T::one() / self.tau) - &p.e.eval(&y)) - &p.v.apply_adjoint(&nu);
        Ok(top.concat(&z.scale(T::one() / self.sigma)))
    }

    fn describe(&self) -> String {
        format!(
            "primal-dual resolvent-compensated (tau = {}, sigma = {})",
            self.tau, self.sigma
        )
    }
}

/// Resolvent-compensated primal-dual method: two `D`-resolvents and one
/// `B`-resolvent per iteration.
pub fn build_pd_resolvent_compensated<T: Scalar>(
    problem: &PrimalDualProblem<T>,
    config: &PdResConfig<T>,
) -> Result<Instance<T>> {
    let kernel = PdResolvent::new(problem, config)?;
    let corollary = Corollary::ResolventCompensated {
        tau: config.tau,
        sigma: config.sigma,
        norm_v: kernel.norm_v,
        delta: problem.delta,
        beta: problem.beta,
        theta: config.theta,
    };
    Ok(Instance {
        kernel: Box::new(kernel),
        inclusion: Box::new(PrimalDualInclusion::new(problem.clone(), problem.beta)),
        theta: config.theta,
        corollary,
    })
}
