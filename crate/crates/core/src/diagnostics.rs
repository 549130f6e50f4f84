//! Convergence monitors: Lyapunov values, residual elements, post-hoc
//! verdicts and trace export.

use std::fmt::Write as _;

use serde::Serialize;

use crate::engine::{Inclusion, Kernel, SolveTrace, SolverState};
use crate::error::{Error, Result};
use crate::scalar::{to_f64, Scalar};
use crate::space::Vector;

/// Absolute slack in the Lyapunov descent inequality.
pub const LYAPUNOV_SLACK: f64 = 1e-9;

/// Diagnostics of the step from `x_k` to `x_{k+1}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterRecord {
    pub k: usize,
    /// `|x_{k+1} - x_k|_S`
    pub step_norm_s: f64,
    /// `|u_{k+1}|_{S^-1}`
    pub correction_norm: f64,
    /// Euclidean norm of the residual element in `(A + C) x_{k+1}`.
    pub residual_norm: f64,
    /// `V_k` when a solution is attached.
    pub lyapunov: Option<f64>,
    /// Certificate margin at `k`.
    pub margin: f64,
    /// Coefficient of `|x_{k+1} - x_k|_S^2` in the descent inequality
    /// (`margin / (1 - theta)`).
    pub descent_margin: f64,
}

/// `|x_{k+1} - x_k|_S` from the cached metric images.
pub fn step_norm_s<T: Scalar>(
    kernel: &dyn Kernel<T>,
    state: &SolverState<T>,
    next: &SolverState<T>,
) -> T {
    let dx = next.x() - state.x();
    let sdx = next.sx().0.lincomb(T::one(), -T::one(), state.sx().0).materialize(kernel);
    sdx.dot(&dx).max(T::zero()).sqrt()
}

/// `|u_k|_{S^-1}`
pub fn correction_norm<T: Scalar>(kernel: &dyn Kernel<T>, state: &SolverState<T>) -> T {
    let u = state.u(kernel);
    if u.is_zero() {
        return T::zero();
    }
    kernel.metric().apply_inverse(&u).dot(&u).max(T::zero()).sqrt()
}

/// `(u_k + theta S(x_k - x_{k-1})) / (1 - theta)`, the correction of the
/// equivalent plain iteration (equal to `u_k` for `theta = 0`).
pub fn effective_correction<T: Scalar>(
    kernel: &dyn Kernel<T>,
    state: &SolverState<T>,
    theta: T,
) -> Vector<T> {
    if theta == T::zero() {
        return state.u(kernel);
    }
    let (sx, sx_prev) = state.sx();
    let ds = sx.lincomb(T::one(), -T::one(), sx_prev);
    let f = T::one() / (T::one() - theta);
    state.u_lazy().lincomb(f, theta * f, &ds).materialize(kernel)
}

/// `V_k = |x_k + S^{-1} u_k - z|_S^2 + (1 - L_{k-1}) L_{k-1} |x_k - x_{k-1}|_S^2`
/// with `L_{-1} := L_0`. For `theta != 0` the quantities of the equivalent
/// plain iteration are used: `u_k` as in [`effective_correction`] and
/// `L_{k-1}` replaced by `(L_{k-1} + |theta|) / (1 - theta)`.
pub fn lyapunov<T: Scalar>(
    kernel: &dyn Kernel<T>,
    state: &SolverState<T>,
    z: &Vector<T>,
    theta: T,
) -> Result<T> {
    z.check_dim(kernel.dim())?;
    let metric = kernel.metric();
    let u = effective_correction(kernel, state, theta);
    let w = state.x() - z;
    let mut first = metric.apply(&w).dot(&w);
    if !u.is_zero() {
        let two = T::one() + T::one();
        first = first + two * u.dot(&w) + metric.apply_inverse(&u).dot(&u);
    }
    let l_prev = kernel.lipschitz(state.k().saturating_sub(1));
    let l_prev = (l_prev + theta.abs()) / (T::one() - theta);
    let dx = state.x() - state.x_prev();
    let second = if dx.is_zero() || l_prev == T::zero() {
        T::zero()
    } else {
        (T::one() - l_prev) * l_prev * metric.apply(&dx).dot(&dx)
    };
    Ok(first.max(T::zero()) + second)
}

/// Residual element `r_k in (A + C) x_{k+1}` assembled from the engine's
/// cached quantities:
/// `r_k = (S x_k - S x_{k+1} + u_k - u_{k+1}) / gamma_k + C x_{k+1} - C x_k
///  + theta / gamma_k S(x_k - x_{k-1})`.
pub fn residual_from_states<T: Scalar>(
    kernel: &dyn Kernel<T>,
    state: &SolverState<T>,
    next: &SolverState<T>,
    theta: T,
) -> Vector<T> {
    let gi = T::one() / kernel.gamma(state.k());
    let (sx, sx_prev) = state.sx();
    let mut r = sx.lincomb(gi, -gi, next.sx().0);
    r = r.lincomb(T::one(), gi, state.u_lazy());
    r = r.lincomb(T::one(), -gi, next.u_lazy());
    if theta != T::zero() {
        let ds = sx.lincomb(T::one(), -T::one(), sx_prev);
        r = r.lincomb(T::one(), theta * gi, &ds);
    }
    r.add_direct(T::one(), next.cx());
    r.add_direct(-T::one(), state.cx());
    r.materialize(kernel)
}

/// Residual element
/// `M_k x_k - M_k x_{k+1} + u_k / gamma_k + C x_{k+1} - C x_k
///  + theta / gamma_k S(x_k - x_{k-1})`
/// evaluated through `kernel_eval` and fresh forward evaluations.
pub fn residual<T: Scalar>(
    problem: &dyn Inclusion<T>,
    kernel: &dyn Kernel<T>,
    state: &SolverState<T>,
    next: &SolverState<T>,
    theta: T,
) -> Result<Vector<T>> {
    let k = state.k();
    let anchor = state.anchor();
    let gi = T::one() / kernel.gamma(k);
    let mut r = &kernel.kernel_eval(k, &anchor, state.x())? - &kernel.kernel_eval(k, &anchor, next.x())?;
    r.axpy(gi, &state.u(kernel));
    r.axpy(T::one(), &problem.forward(next.x()));
    r.axpy(-T::one(), &problem.forward(state.x()));
    if theta != T::zero() {
        let s = kernel.metric().apply(&(state.x() - state.x_prev()));
        r.axpy(theta * gi, &s);
    }
    Ok(r)
}

/// Thresholds applied by [`verdict`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct VerdictTolerances {
    pub lyapunov_slack: f64,
    pub step: f64,
    pub correction: f64,
    pub residual: f64,
}

impl Default for VerdictTolerances {
    fn default() -> Self {
        Self {
            lyapunov_slack: LYAPUNOV_SLACK,
            step: 1e-6,
            correction: 1e-6,
            residual: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub checks: Vec<Check>,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Worst violation of `V_k - V_{k+1} >= m_k |x_{k+1} - x_k|_S^2 - slack`
/// at every recorded step, as `(k, defect)` with `defect > 0` meaning a violation.
/// `None` when no Lyapunov values were recorded.
pub fn lyapunov_descent_defect(
    records: &[IterRecord],
    final_lyapunov: Option<f64>,
    slack: f64,
) -> Option<(usize, f64)> {
    let values: Vec<f64> = records
        .iter()
        .map(|r| r.lyapunov)
        .chain(std::iter::once(final_lyapunov))
        .collect::<Option<Vec<_>>>()?;
    let mut worst: Option<(usize, f64)> = None;
    for (i, r) in records.iter().enumerate() {
        let drop = values[i] - values[i + 1];
        let defect = r.descent_margin * r.step_norm_s * r.step_norm_s - slack - drop;
        if worst.is_none_or(|(_, w)| defect > w) {
            worst = Some((r.k, defect));
        }
    }
    worst
}

/// Per-property pass/fail report of a completed run.
pub fn verdict<T: Scalar>(trace: &SolveTrace<T>, tol: &VerdictTolerances) -> Result<Verdict> {
    let records = &trace.records;
    let last = records
        .last()
        .ok_or_else(|| Error::InvalidParameter("empty trace: nothing to judge".into()))?;
    let mut checks = Vec::new();
    let mut push = |name: &str, passed: bool, detail: String| {
        checks.push(Check {
            name: name.to_string(),
            passed,
            detail,
        })
    };
    let cert = &trace.certificate;
    push(
        "certificate",
        cert.passed,
        format!(
            "{}: worst margin {:.6e} at k = {} (eps = {:e})",
            cert.inequality(),
            cert.worst_margin,
            cert.worst_k,
            cert.epsilon
        ),
    );
    if let Some((k, defect)) =
        lyapunov_descent_defect(records, trace.final_lyapunov, tol.lyapunov_slack)
    {
        push(
            "lyapunov_descent",
            defect <= 0.0,
            format!("worst descent defect {defect:.3e} at k = {k}"),
        );
        let values: Vec<f64> = records.iter().filter_map(|r| r.lyapunov).collect();
        let negative = values.iter().any(|&v| v < 0.0);
        push(
            "lyapunov_nonnegative",
            !negative,
            format!("min V_k = {:.6e}", values.iter().cloned().fold(f64::INFINITY, f64::min)),
        );
        let rises = values
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max);
        push(
            "lyapunov_nonincreasing",
            rises <= tol.lyapunov_slack,
            format!("largest increase {rises:.3e}"),
        );
    }
    push(
        "step_decay",
        last.step_norm_s <= tol.step,
        format!("final |x_(k+1) - x_k|_S = {:.3e} (tol {:e})", last.step_norm_s, tol.step),
    );
    push(
        "correction_decay",
        last.correction_norm <= tol.correction,
        format!("final |u_k|_(S^-1) = {:.3e} (tol {:e})", last.correction_norm, tol.correction),
    );
    push(
        "residual_decay",
        last.residual_norm <= tol.residual,
        format!("final residual {:.3e} (tol {:e})", last.residual_norm, tol.residual),
    );
    Ok(Verdict { checks })
}

pub const CSV_HEADER: &str = "k,step_norm_s,correction_norm,residual_norm,lyapunov,margin";

/// Trace as CSV with columns [`CSV_HEADER`]; missing Lyapunov values are
/// left empty.
pub fn trace_csv(records: &[IterRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        let lyap = r.lyapunov.map(|v| format!("{v:e}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{:e},{:e},{:e},{},{:e}",
            r.k, r.step_norm_s, r.correction_norm, r.residual_norm, lyap, r.margin
        );
    }
    out
}

/// Machine-readable summary of a run.
pub fn summary_json<T: Scalar>(trace: &SolveTrace<T>, verdict: Option<&Verdict>) -> serde_json::Value {
    let last = trace.records.last();
    serde_json::json!({
        "iterations": trace.iterations,
        "termination": trace.termination,
        "certificate": {
            "passed": trace.certificate.passed,
            "inequality": trace.certificate.inequality(),
            "worst_margin": trace.certificate.worst_margin,
            "worst_k": trace.certificate.worst_k,
            "epsilon": trace.certificate.epsilon,
            "enforced": trace.certificate_enforced,
        },
        "final": {
            "step_norm_s": last.map(|r| r.step_norm_s),
            "correction_norm": last.map(|r| r.correction_norm),
            "residual_norm": last.map(|r| r.residual_norm),
            "lyapunov": trace.final_lyapunov,
        },
        "solution": trace.solution().iter().map(|&v| to_f64(v)).collect::<Vec<_>>(),
        "warnings": trace.warnings,
        "verdict": verdict,
        "passed": verdict.map(|v| v.passed()),
    })
}
