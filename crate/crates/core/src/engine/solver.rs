use serde::Serialize;

use super::certify::{certify_momentum, margin_at, Certificate, DEFAULT_EPSILON};
use super::{Anchor, Inclusion, Kernel, Lazy, Memo};
use crate::diagnostics::{self, IterRecord};
use crate::error::{Error, Result};
use crate::operators::uncounted;
use crate::scalar::{lit, to_f64, Scalar};
use crate::space::Vector;

/// Iterate of the nonlinear forward-backward iteration together with the
/// history the next step reuses.
#[derive(Clone, Debug)]
pub struct SolverState<T> {
    k: usize,
    x: Vector<T>,
    x_prev: Vector<T>,
    u: Lazy<T>,
    memo: Memo<T>,
    /// `(gamma_{k-1} M_{k-1} - S) x_k`, computed while forming `u_k`.
    carried: Option<Lazy<T>>,
    cx: Vector<T>,
    sx: Lazy<T>,
    sx_prev: Lazy<T>,
}

impl<T: Scalar> SolverState<T> {
    /// Initial state with `u_0 = 0` and `x_{-1} = x_0` unless overridden.
    pub fn new(
        problem: &dyn Inclusion<T>,
        kernel: &dyn Kernel<T>,
        x0: Vector<T>,
        u0: Option<Vector<T>>,
        x_prev: Option<Vector<T>>,
    ) -> Result<Self> {
        x0.check_dim(kernel.dim())?;
        if !x0.is_finite() {
            return Err(Error::NonFinite("initial point".into()));
        }
        let u = match u0 {
            Some(u) => {
                u.check_dim(kernel.dim())?;
                Lazy::direct(u)
            }
            None => Lazy::zeros(kernel.dim()),
        };
        let mut memo = Memo::default();
        let sx = kernel.metric_apply(&x0, &mut memo);
        let (x_prev, sx_prev) = match x_prev {
            Some(p) => {
                p.check_dim(kernel.dim())?;
                let sp = kernel.metric_apply(&p, &mut Memo::default());
                (p, sp)
            }
            None => (x0.clone(), sx.clone()),
        };
        Ok(Self {
            k: 0,
            cx: problem.forward(&x0),
            x: x0,
            x_prev,
            u,
            memo,
            carried: None,
            sx,
            sx_prev,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn x(&self) -> &Vector<T> {
        &self.x
    }

    pub fn x_prev(&self) -> &Vector<T> {
        &self.x_prev
    }

    pub fn u_lazy(&self) -> &Lazy<T> {
        &self.u
    }

    /// `u_k`
    pub fn u(&self, kernel: &dyn Kernel<T>) -> Vector<T> {
        self.u.materialize(kernel)
    }

    /// `C x_k`
    pub fn cx(&self) -> &Vector<T> {
        &self.cx
    }

    /// `S x_k` and `S x_{k-1}` as cached by the engine.
    pub fn sx(&self) -> (&Lazy<T>, &Lazy<T>) {
        (&self.sx, &self.sx_prev)
    }

    pub fn anchor(&self) -> Anchor<'_, T> {
        Anchor {
            k: self.k,
            x: &self.x,
            x_prev: &self.x_prev,
        }
    }
}

fn check_finite<T: Scalar>(v: &Vector<T>, k: usize, what: &str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Divergence {
            iteration: k,
            detail: format!("non-finite {what}"),
        })
    }
}

/// One iteration `x_{k+1} = (M_k + A)^{-1}(M_k x_k - C x_k + u_k / gamma_k)`,
/// `u_{k+1} = (gamma_k M_k - S)(x_{k+1} - x_k)`.
pub fn step<T: Scalar>(
    problem: &dyn Inclusion<T>,
    kernel: &dyn Kernel<T>,
    state: &SolverState<T>,
) -> Result<SolverState<T>> {
    step_with_momentum(problem, kernel, state, T::zero())
}

/// [`step`] with the forward point shifted by
/// `theta / gamma_k * S (x_k - x_{k-1})`.
pub fn step_with_momentum<T: Scalar>(
    problem: &dyn Inclusion<T>,
    kernel: &dyn Kernel<T>,
    state: &SolverState<T>,
    theta: T,
) -> Result<SolverState<T>> {
    if !(theta < T::one()) {
        return Err(Error::InvalidParameter(format!("theta must be < 1, got {theta}")));
    }
    let k = state.k;
    let anchor = state.anchor();
    let rescale = k.checked_sub(1).and_then(|j| kernel.correction_rescale(j));
    let corr_k = match (&state.carried, rescale) {
        (Some(c), Some(r)) if r == T::one() => c.clone(),
        (Some(c), Some(r)) => c.scale(r),
        _ => {
            let mut memo = state.memo.clone();
            kernel.correction(k, &anchor, &state.x, &mut memo)?
        }
    };
    let gi = T::one() / kernel.gamma(k);

    // M_k x_k = (corr_k + S x_k) / gamma_k
    let mut p = corr_k.lincomb(gi, gi, &state.sx);
    p = p.lincomb(T::one(), gi, &state.u);
    p.add_direct(-T::one(), &state.cx);
    if theta != T::zero() {
        let ds = state.sx.lincomb(T::one(), -T::one(), &state.sx_prev);
        p = p.lincomb(T::one(), theta * gi, &ds);
    }
    let p = p.materialize(kernel);
    check_finite(&p, k, "forward point")?;

    let mut memo = Memo::default();
    let x_next = kernel.resolvent(k, &anchor, &p, &mut memo)?;
    check_finite(&x_next, k, "iterate")?;
    let corr_next = kernel.correction(k, &anchor, &x_next, &mut memo)?;
    let u_next = corr_next.lincomb(T::one(), -T::one(), &corr_k);
    check_finite(&u_next.direct, k, "momentum correction")?;
    let cx = problem.forward(&x_next);
    check_finite(&cx, k, "forward evaluation")?;
    let sx = kernel.metric_apply(&x_next, &mut memo);
    Ok(SolverState {
        k: k + 1,
        x: x_next,
        x_prev: state.x.clone(),
        u: u_next,
        memo,
        carried: Some(corr_next),
        cx,
        sx,
        sx_prev: state.sx.clone(),
    })
}

/// Termination criteria. The run stops once every specified tolerance is
/// met, or after `max_iter` iterations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StoppingRule<T> {
    pub max_iter: usize,
    /// Bound on `|x_{k+1} - x_k|_S`.
    pub step_tol: Option<T>,
    /// Bound on the Euclidean norm of the residual element.
    pub residual_tol: Option<T>,
}

impl<T: Scalar> StoppingRule<T> {
    pub fn iterations(max_iter: usize) -> Self {
        Self {
            max_iter,
            step_tol: None,
            residual_tol: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        for (name, tol) in [("step_tol", self.step_tol), ("residual_tol", self.residual_tol)] {
            if let Some(t) = tol {
                if !(t >= T::zero()) {
                    return Err(Error::InvalidParameter(format!("{name} must be nonnegative")));
                }
            }
        }
        Ok(())
    }

    fn met(&self, step_norm: T, residual_norm: T) -> bool {
        if self.step_tol.is_none() && self.residual_tol.is_none() {
            return false;
        }
        self.step_tol.is_none_or(|t| step_norm <= t)
            && self.residual_tol.is_none_or(|t| residual_norm <= t)
    }
}

#[derive(Clone, Debug)]
pub struct SolveOptions<T> {
    pub stopping: StoppingRule<T>,
    /// Additional momentum; zero gives the plain iteration.
    pub theta: T,
    pub epsilon: T,
    /// Refuse to run when the certificate fails.
    pub enforce_certificate: bool,
    pub u0: Option<Vector<T>>,
    pub x_prev: Option<Vector<T>>,
    /// Known solution for Lyapunov monitoring.
    pub oracle: Option<Vector<T>>,
    /// Record per-iteration diagnostics.
    pub diagnostics: bool,
    /// Keep every iterate `x_k`.
    pub record_iterates: bool,
}

impl<T: Scalar> SolveOptions<T> {
    pub fn new(stopping: StoppingRule<T>) -> Self {
        Self {
            stopping,
            theta: T::zero(),
            epsilon: lit(DEFAULT_EPSILON),
            enforce_certificate: true,
            u0: None,
            x_prev: None,
            oracle: None,
            diagnostics: true,
            record_iterates: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIterations,
}

#[derive(Clone, Debug)]
pub struct SolveTrace<T> {
    pub records: Vec<IterRecord>,
    /// `V_N` of the last iterate, when an oracle was attached.
    pub final_lyapunov: Option<f64>,
    pub iterates: Vec<Vector<T>>,
    pub final_state: SolverState<T>,
    pub termination: Termination,
    pub iterations: usize,
    pub certificate: Certificate,
    pub certificate_enforced: bool,
    pub warnings: Vec<String>,
}

impl<T: Scalar> SolveTrace<T> {
    pub fn solution(&self) -> &Vector<T> {
        self.final_state.x()
    }
}

/// Horizon over which [`solve`] certifies a kernel.
pub fn certificate_horizon<T: Scalar>(kernel: &dyn Kernel<T>, max_iter: usize) -> usize {
    if kernel.is_constant() {
        1
    } else {
        max_iter + 1
    }
}

/// Runs the iteration from `x0` until the stopping rule fires.
pub fn solve<T: Scalar>(
    problem: &dyn Inclusion<T>,
    kernel: &dyn Kernel<T>,
    x0: Vector<T>,
    options: &SolveOptions<T>,
) -> Result<SolveTrace<T>> {
    options.stopping.validate()?;
    if problem.dim() != kernel.dim() {
        return Err(Error::DimensionMismatch {
            expected: kernel.dim(),
            found: problem.dim(),
        });
    }
    let theta = options.theta;
    if !(theta < T::one()) {
        return Err(Error::InvalidParameter(format!("theta must be < 1, got {theta}")));
    }
    let ell = problem.ell();
    let horizon = certificate_horizon(kernel, options.stopping.max_iter);
    let certificate = certify_momentum(kernel, ell, theta, horizon, options.epsilon);
    let mut warnings = Vec::new();
    if !certificate.passed {
        if options.enforce_certificate {
            return Err(Error::Certificate {
                inequality: certificate.inequality().to_string(),
                worst_margin: certificate.worst_margin,
                iteration: certificate.worst_k,
            });
        }
        warnings.push(format!(
            "certificate not enforced: {} fails with margin {:.3e} at k = {}",
            certificate.inequality(),
            certificate.worst_margin,
            certificate.worst_k
        ));
    }

    let mut state = SolverState::new(problem, kernel, x0, options.u0.clone(), options.x_prev.clone())?;
    let mut iterates = Vec::new();
    if options.record_iterates {
        iterates.push(state.x().clone());
    }
    let needs_norms = options.diagnostics
        || options.stopping.step_tol.is_some()
        || options.stopping.residual_tol.is_some();
    let hat = T::one() / (T::one() - theta);
    let mut records = Vec::new();
    let mut lyapunov_k = match (&options.oracle, options.diagnostics) {
        (Some(z), true) => Some(uncounted(|| diagnostics::lyapunov(kernel, &state, z, theta))?),
        _ => None,
    };
    let mut termination = Termination::MaxIterations;
    let mut iterations = 0;
    for _ in 0..options.stopping.max_iter {
        let next = step_with_momentum(problem, kernel, &state, theta)?;
        iterations += 1;
        if options.record_iterates {
            iterates.push(next.x().clone());
        }
        if needs_norms {
            let (step_norm, residual_norm) = uncounted(|| -> Result<(T, T)> {
                let s = diagnostics::step_norm_s(kernel, &state, &next);
                let r = diagnostics::residual_from_states(kernel, &state, &next, theta);
                Ok((s, r.norm()))
            })?;
            if options.diagnostics {
                let k = state.k();
                let lyapunov_next = match &options.oracle {
                    Some(z) => Some(uncounted(|| diagnostics::lyapunov(kernel, &next, z, theta))?),
                    None => None,
                };
                let margin = margin_at(kernel, ell, theta, k);
                let correction_norm = uncounted(|| diagnostics::correction_norm(kernel, &next));
                records.push(IterRecord {
                    k,
                    step_norm_s: to_f64(step_norm),
                    correction_norm: to_f64(correction_norm),
                    residual_norm: to_f64(residual_norm),
                    lyapunov: lyapunov_k.map(to_f64),
                    margin: to_f64(margin),
                    descent_margin: to_f64(margin * hat),
                });
                lyapunov_k = lyapunov_next;
            }
            if options.stopping.met(step_norm, residual_norm) {
                state = next;
                termination = Termination::Converged;
                break;
            }
        }
        state = next;
    }
    Ok(SolveTrace {
        records,
        final_lyapunov: lyapunov_k.map(to_f64),
        iterates,
        final_state: state,
        termination,
        iterations,
        certificate,
        certificate_enforced: options.enforce_certificate,
        warnings,
    })
}
