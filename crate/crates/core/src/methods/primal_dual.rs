use crate::engine::Inclusion;
use crate::error::{Error, Result};
use crate::linalg::conjugate_gradient;
use crate::operators::{estimate_operator_norm, LinearRef, SetValuedRef, SingleValuedRef};
use crate::scalar::{lit, Scalar};
use crate::space::{Metric, Vector};

/// Iterations of power iteration used when `V` has no analytic norm bound.
const NORM_ITERATIONS: usize = 200;

/// Primal-dual inclusion on `K x G`:
///
/// ```text
/// 0 in B y + V* z + E y + F y
/// 0 in D^{-1} z - V y
/// ```
///
/// with `B`, `D` maximally monotone, `E` monotone and `delta`-Lipschitz,
/// `F` `1/beta`-cocoercive and `V: K -> G` bounded linear.
#[derive(Clone)]
pub struct PrimalDualProblem<T: Scalar> {
    pub b: SetValuedRef<T>,
    pub d: SetValuedRef<T>,
    pub e: SingleValuedRef<T>,
    pub f: SingleValuedRef<T>,
    pub v: LinearRef<T>,
    pub delta: T,
    pub beta: T,
}

impl<T: Scalar> PrimalDualProblem<T> {
    pub fn new(
        b: SetValuedRef<T>,
        d: SetValuedRef<T>,
        e: SingleValuedRef<T>,
        f: SingleValuedRef<T>,
        v: LinearRef<T>,
    ) -> Result<Self> {
        let (nk, ng) = (v.dim_in(), v.dim_out());
        for (found, expected) in [(b.dim(), nk), (e.dim(), nk), (f.dim(), nk), (d.dim(), ng)] {
            if let Some(found) = found {
                if found != expected {
                    return Err(Error::DimensionMismatch { expected, found });
                }
            }
        }
        let beta = f.cocoercivity().ok_or_else(|| {
            Error::InvalidParameter(format!("{} is not declared cocoercive", f.describe()))
        })?;
        let delta = e.lipschitz();
        Ok(Self {
            b,
            d,
            e,
            f,
            v,
            delta,
            beta,
        })
    }

    pub fn primal_dim(&self) -> usize {
        self.v.dim_in()
    }

    pub fn dual_dim(&self) -> usize {
        self.v.dim_out()
    }

    pub fn dim(&self) -> usize {
        self.primal_dim() + self.dual_dim()
    }

    /// Analytic bound on `|V|` when available, otherwise an inflated power
    /// iteration estimate.
    pub fn norm_v(&self) -> Result<T> {
        match self.v.norm_bound() {
            Some(b) => Ok(b),
            None => Ok(estimate_operator_norm(self.v.as_ref(), NORM_ITERATIONS, 0)?.bound),
        }
    }

    pub fn split(&self, x: &Vector<T>) -> (Vector<T>, Vector<T>) {
        x.split_at(self.primal_dim())
    }
}

/// The primal-dual inclusion seen by the engine: forward operator
/// `(F y, 0)` with cocoercivity `ell` relative to the kernel's metric.
pub struct PrimalDualInclusion<T: Scalar> {
    pub problem: PrimalDualProblem<T>,
    ell: T,
}

impl<T: Scalar> PrimalDualInclusion<T> {
    pub fn new(problem: PrimalDualProblem<T>, ell: T) -> Self {
        Self { problem, ell }
    }
}

impl<T: Scalar> Inclusion<T> for PrimalDualInclusion<T> {
    fn dim(&self) -> usize {
        self.problem.dim()
    }

    fn forward(&self, x: &Vector<T>) -> Vector<T> {
        let (y, _) = self.problem.split(x);
        self.problem.f.eval(&y).concat(&Vector::zeros(self.problem.dual_dim()))
    }

    fn ell(&self) -> T {
        self.ell
    }

    fn membership_defect(&self, x: &Vector<T>, w: &Vector<T>) -> Result<T> {
        w.check_dim(self.dim())?;
        let p = &self.problem;
        let (y, z) = p.split(x);
        let (wy, wz) = p.split(w);
        // w_y - V* z - E y - F y in B y
        let mut by = &wy - &p.v.apply_adjoint(&z);
        by = &by - &p.e.eval(&y);
        by = &by - &p.f.eval(&y);
        let primal = p.b.membership_residual(&y, &by)?;
        // w_z + V y in D^{-1} z, i.e. z in D(w_z + V y)
        let dual = p.d.membership_residual(&(&wz + &p.v.apply(&y)), &z)?;
        Ok((primal * primal + dual * dual).sqrt())
    }

    fn describe(&self) -> String {
        let p = &self.problem;
        format!(
            "0 in {} + V* z + {} + {}, 0 in ({})^-1 z - V y (V = {})",
            p.b.describe(),
            p.e.describe(),
            p.f.describe(),
            p.d.describe(),
            p.v.describe()
        )
    }
}

/// `S = [[Id, -tau V*], [-tau V, (tau/sigma) Id]]`, strongly positive when
/// `tau sigma |V|^2 < 1`.
pub struct BlockTriangularMetric<T: Scalar> {
    v: LinearRef<T>,
    tau: T,
    sigma: T,
    norm_v: T,
}

impl<T: Scalar> BlockTriangularMetric<T> {
    pub fn new(v: LinearRef<T>, tau: T, sigma: T, norm_v: T) -> Result<Self> {
        if !(tau > T::zero() && sigma > T::zero()) {
            return Err(Error::InvalidParameter("tau and sigma must be positive".into()));
        }
        let q = tau * sigma * norm_v * norm_v;
        if !(q < T::one()) {
            return Err(Error::NotPositiveDefinite(format!(
                "tau*sigma*|V|^2 = {q} must be < 1"
            )));
        }
        Ok(Self {
            v,
            tau,
            sigma,
            norm_v,
        })
    }

    fn split(&self, x: &Vector<T>) -> (Vector<T>, Vector<T>) {
        x.split_at(self.v.dim_in())
    }

    /// Eigenvalues of `[[1, -b], [-b, c]]` with `b = tau |V|`, `c = tau/sigma`.
    fn eigen_pair(&self) -> (T, T) {
        let c = self.tau / self.sigma;
        let b = self.tau * self.norm_v;
        let two = lit::<T>(2.0);
        let mid = (T::one() + c) / two;
        let rad = (((T::one() - c) / two).powi(2) + b * b).sqrt();
        (mid - rad, mid + rad)
    }

    fn solve_spd(&self, apply: impl Fn(&Vector<T>) -> Vector<T>, rhs: &Vector<T>) -> Vector<T> {
        let tol = T::epsilon() * lit(16.0);
        conjugate_gradient(apply, rhs, tol, 10 * rhs.dim() + 200)
    }
}

impl<T: Scalar> Metric<T> for BlockTriangularMetric<T> {
    fn dim(&self) -> usize {
        self.v.dim_in() + self.v.dim_out()
    }

    fn apply(&self, x: &Vector<T>) -> Vector<T> {
        let (y, z) = self.split(x);
        let top = y.lincomb(T::one(), -self.tau, &self.v.apply_adjoint(&z));
        let bottom = self.v.apply(&y).lincomb(-self.tau, self.tau / self.sigma, &z);
        top.concat(&bottom)
    }

    /// Block inverse
    /// `diag((Id - ts V*V)^{-1}, (Id - ts VV*)^{-1}) [[Id, s V*], [s V, (s/t) Id]]`.
    fn apply_inverse(&self, x: &Vector<T>) -> Vector<T> {
        let (f, g) = self.split(x);
        let (t, s) = (self.tau, self.sigma);
        let ts = t * s;
        let rhs_top = f.lincomb(T::one(), s, &self.v.apply_adjoint(&g));
        let rhs_bottom = self.v.apply(&f).lincomb(s, s / t, &g);
        let a = self.solve_spd(
            |u| u.lincomb(T::one(), -ts, &self.v.apply_adjoint(&self.v.apply(u))),
            &rhs_top,
        );
        let b = self.solve_spd(
            |u| u.lincomb(T::one(), -ts, &self.v.apply(&self.v.apply_adjoint(u))),
            &rhs_bottom,
        );
        a.concat(&b)
    }

    fn strong_positivity_bound(&self) -> T {
        self.eigen_pair().0
    }

    fn upper_bound(&self) -> T {
        self.eigen_pair().1
    }

    fn describe(&self) -> String {
        format!(
            "[[Id, -tau V*], [-tau V, (tau/sigma) Id]] (tau = {}, sigma = {})",
            self.tau, self.sigma
        )
    }
}
