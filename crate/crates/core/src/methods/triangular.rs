use super::fhrb::check_theta;
use super::primal_dual::{BlockTriangularMetric, PrimalDualInclusion, PrimalDualProblem};
use super::{Corollary, Instance, Sequence};
use crate::engine::{Anchor, Kernel, Lazy, Memo, StepSchedule};
use crate::error::{Error, Result};
use crate::operators::resolvent_of_inverse;
use crate::scalar::{lit, Scalar};
use crate::space::{Metric, Vector};

/// Parameters of the block-triangular primal-dual method.
#[derive(Clone, Debug, PartialEq)]
pub struct PdTriConfig<T> {
    pub tau: T,
    pub sigma: T,
    /// Relaxation sequence `lambda_k`; `2` recovers the reflected methods.
    pub lambda: Sequence<T>,
    pub theta: T,
    /// Overrides the norm bound of `V` used in the constants.
    pub norm_v: Option<T>,
}

impl<T: Scalar> PdTriConfig<T> {
    pub fn new(tau: T, sigma: T, lambda: Sequence<T>) -> Self {
        Self {
            tau,
            sigma,
            lambda,
            theta: T::zero(),
            norm_v: None,
        }
    }
}

/// Parameters of the half-reflected Douglas-Rachford method (`V = Id`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FhrdrConfig<T> {
    pub tau: T,
    pub varsigma: T,
    pub theta: T,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum DualUpdate<T> {
    /// `z' = (Id + sigma D^{-1})^{-1}(w)` through Moreau's identity.
    Moreau,
    /// Douglas-Rachford form with `V = Id`, `lambda = 2`, `sigma = 1/varsigma`:
    /// `yhat = J_{varsigma D}(p_z + 2 y')`, `z' = (p_z + 2 y' - yhat) / varsigma`.
    DouglasRachford { varsigma: T },
}

/// Kernel with block-triangular metric
/// `S = [[Id, -tau V*], [-tau V, (tau/sigma) Id]]`, step `tau` and
/// `M_k = [[Id/tau - E, -V*], [(1 - lambda_k) V, Id/sigma]]`, paired with
/// `A = (B + E + V*, -V + D^{-1})`. The correction
/// `tau (-E y, (2 - lambda_k) V y)` reuses the cached `V y`.
pub struct PdTriangular<T: Scalar> {
    problem: PrimalDualProblem<T>,
    tau: T,
    sigma: T,
    lambda: Sequence<T>,
    norm_v: T,
    metric: BlockTriangularMetric<T>,
    dual: DualUpdate<T>,
}

impl<T: Scalar> PdTriangular<T> {
    pub fn new(problem: &PrimalDualProblem<T>, config: &PdTriConfig<T>) -> Result<Self> {
        config.lambda.validate_finite("lambda")?;
        let norm_v = match config.norm_v {
            Some(n) if n >= T::zero() => n,
            Some(n) => return Err(Error::InvalidParameter(format!("norm_v must be nonnegative, got {n}"))),
            None => problem.norm_v()?,
        };
        let metric = BlockTriangularMetric::new(problem.v.clone(), config.tau, config.sigma, norm_v)?;
        Ok(Self {
            problem: problem.clone(),
            tau: config.tau,
            sigma: config.sigma,
            lambda: config.lambda.clone(),
            norm_v,
            metric,
            dual: DualUpdate::Moreau,
        })
    }

    /// `tau sigma |V|^2`
    pub fn q(&self) -> T {
        self.tau * self.sigma * self.norm_v * self.norm_v
    }

    fn split(&self, x: &Vector<T>) -> (Vector<T>, Vector<T>) {
        self.problem.split(x)
    }

    fn image(&self, y: &Vector<T>, memo: &mut Memo<T>) -> Vector<T> {
        memo.image.get_or_insert_with(|| self.problem.v.apply(y)).clone()
    }

    fn forward(&self, y: &Vector<T>, memo: &mut Memo<T>) -> Vector<T> {
        memo.forward.get_or_insert_with(|| self.problem.e.eval(y)).clone()
    }
}

impl<T: Scalar> StepSchedule<T> for PdTriangular<T> {
    fn gamma(&self, _k: usize) -> T {
        self.tau
    }

    /// `(|2 - lambda_k| sqrt(tau sigma) |V| + tau delta) / (1 - q)`
    fn lipschitz(&self, k: usize) -> T {
        let coupling = (lit::<T>(2.0) - self.lambda.at(k)).abs() * (self.tau * self.sigma).sqrt() * self.norm_v;
        (coupling + self.tau * self.problem.delta) / (T::one() - self.q())
    }

    fn is_constant(&self) -> bool {
        self.lambda.is_constant()
    }
}

impl<T: Scalar> Kernel<T> for PdTriangular<T> {
    fn dim(&self) -> usize {
        self.problem.dim()
    }

    fn metric(&self) -> &dyn Metric<T> {
        &self.metric
    }

    fn correction(&self, k: usize, _anchor: &Anchor<T>, x: &Vector<T>, memo: &mut Memo<T>) -> Result<Lazy<T>> {
        let (y, _) = self.split(x);
        let vy = self.image(&y, memo);
        let ey = self.forward(&y, memo);
        let reflect = self.tau * (lit::<T>(2.0) - self.lambda.at(k));
        Ok(Lazy::direct(ey.scale(-self.tau).concat(&vy.scale(reflect))))
    }

    fn correction_rescale(&self, k: usize) -> Option<T> {
        (self.lambda.at(k + 1) == self.lambda.at(k)).then_some(T::one())
    }

    fn resolvent(&self, k: usize, _anchor: &Anchor<T>, p: &Vector<T>, memo: &mut Memo<T>) -> Result<Vector<T>> {
        let (py, pz) = self.split(p);
        let y = self.problem.b.resolvent(self.tau, &py.scale(self.tau))?;
        let vy = self.problem.v.apply(&y);
        let z = match self.dual {
            DualUpdate::Moreau => {
                let w = pz.lincomb(self.sigma, self.sigma * self.lambda.at(k), &vy);
                resolvent_of_inverse(self.problem.d.as_ref(), self.sigma, &w)?
            }
            DualUpdate::DouglasRachford { varsigma } => {
                let point = pz.lincomb(T::one(), lit(2.0), &y);
                let yhat = self.problem.d.resolvent(varsigma, &point)?;
                (&point - &yhat).scale(T::one() / varsigma)
            }
        };
        memo.image = Some(vy);
        Ok(y.concat(&z))
    }

    /// Direct part `(y, -tau V y + (tau/sigma) z)`; `-tau z` is deferred
    /// and lifted by `V*` into the primal block.
    fn metric_apply(&self, x: &Vector<T>, memo: &mut Memo<T>) -> Lazy<T> {
        let (y, z) = self.split(x);
        let vy = self.image(&y, memo);
        let bottom = vy.lincomb(-self.tau, self.tau / self.sigma, &z);
        Lazy::with_deferred(y.concat(&bottom), z.scale(-self.tau))
    }

    fn lift(&self, deferred: &Vector<T>) -> Vector<T> {
        self.problem
            .v
            .apply_adjoint(deferred)
            .concat(&Vector::zeros(self.problem.dual_dim()))
    }

    fn kernel_eval(&self, k: usize, _anchor: &Anchor<T>, x: &Vector<T>) -> Result<Vector<T>> {
        let (y, z) = self.split(x);
        let p = &self.problem;
        let top = &(&y.scale(T::one() / self.tau) - &p.e.eval(&y)) - &p.v.apply_adjoint(&z);
        let bottom = p
            .v
            .apply(&y)
            .lincomb(T::one() - self.lambda.at(k), T::one() / self.sigma, &z);
        Ok(top.concat(&bottom))
    }

    fn describe(&self) -> String {
        match self.dual {
            DualUpdate::Moreau => format!(
                "primal-dual triangular (tau = {}, sigma = {})",
                self.tau, self.sigma
            ),
            DualUpdate::DouglasRachford { varsigma } => format!(
                "half-reflected Douglas-Rachford (tau = {}, varsigma = {varsigma})",
                self.tau
            ),
        }
    }
}

fn instance<T: Scalar>(problem: &PrimalDualProblem<T>, kernel: PdTriangular<T>, theta: T, corollary: Corollary<T>) -> Instance<T> {
    let ell = problem.beta / (T::one() - kernel.q());
    Instance {
        kernel: Box::new(kernel),
        inclusion: Box::new(PrimalDualInclusion::new(problem.clone(), ell)),
        theta,
        corollary,
    }
}

/// Block-triangular primal-dual method with relaxation `lambda_k`.
/// `lambda = 2` with `E = F = 0` is Chambolle-Pock, with `E = 0` Vu-Condat,
/// and `lambda = 0` decouples the dual update from the new primal point.
pub fn build_pd_triangular<T: Scalar>(problem: &PrimalDualProblem<T>, config: &PdTriConfig<T>) -> Result<Instance<T>> {
    check_theta(config.theta)?;
    let kernel = PdTriangular::new(problem, config)?;
    let corollary = Corollary::Triangular {
        tau: config.tau,
        sigma: config.sigma,
        norm_v: kernel.norm_v,
        lambda: config.lambda.clone(),
        delta: problem.delta,
        beta: problem.beta,
        theta: config.theta,
    };
    Ok(instance(problem, kernel, config.theta, corollary))
}

/// Half-reflected Douglas-Rachford for `V = Id`: the triangular method with
/// `lambda = 2`, `sigma = 1/varsigma`, its dual step written through
/// `J_{varsigma D}`.
pub fn build_fhrdr<T: Scalar>(problem: &PrimalDualProblem<T>, config: &FhrdrConfig<T>) -> Result<Instance<T>> {
    if !problem.v.is_identity() {
        return Err(Error::InvalidParameter(
            "half-reflected Douglas-Rachford needs V = Id".into(),
        ));
    }
    if !(config.varsigma > T::zero() && config.varsigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "varsigma must be positive, got {}",
            config.varsigma
        )));
    }
    check_theta(config.theta)?;
    let tri = PdTriConfig {
        tau: config.tau,
        sigma: T::one() / config.varsigma,
        lambda: Sequence::Constant(lit(2.0)),
        theta: config.theta,
        norm_v: Some(T::one()),
    };
    let mut kernel = PdTriangular::new(problem, &tri)?;
    kernel.dual = DualUpdate::DouglasRachford {
        varsigma: config.varsigma,
    };
    let corollary = Corollary::Fhrdr {
        tau: config.tau,
        varsigma: config.varsigma,
        delta: problem.delta,
        beta: problem.beta,
        theta: config.theta,
    };
    Ok(instance(problem, kernel, config.theta, corollary))
}
