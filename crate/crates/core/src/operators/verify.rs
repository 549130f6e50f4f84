//! Randomized falsification of declared operator constants.

use serde::Serialize;

use super::{LinearOp, SetValuedOp, SingleValuedOp};
use crate::rng;
use crate::scalar::{to_f64, Scalar};
use crate::space::{Metric, Vector};

/// Slack granted to every declared constant.
pub const PROPERTY_SLACK: f64 = 1e-8;

/// Constants to falsify, all relative to the metric passed to
/// [`verify_operator_properties`].
#[derive(Clone, Copy, Debug, Default)]
pub struct DeclaredConstants<T> {
    pub lipschitz: Option<T>,
    /// `l` with the operator `1/l`-cocoercive.
    pub cocoercivity: Option<T>,
    /// `m` with `<Tx - Ty, x - y> >= m |x - y|_S^2`; `Some(0)` asks for
    /// plain monotonicity.
    pub strong_monotonicity: Option<T>,
}

impl<T: Scalar> DeclaredConstants<T> {
    /// The operator's own declarations plus monotonicity.
    pub fn of(op: &dyn SingleValuedOp<T>) -> Self {
        Self {
            lipschitz: Some(op.lipschitz()),
            cocoercivity: op.cocoercivity(),
            strong_monotonicity: Some(T::zero()),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PropertyReport {
    pub trials: usize,
    /// `max |Tx - Ty|_{S^-1} / |x - y|_S`
    pub worst_lipschitz_ratio: f64,
    /// `min <Tx - Ty, x - y> / |Tx - Ty|_{S^-1}^2 - 1/l` (pairs with
    /// `Tx = Ty` are skipped).
    pub cocoercivity_margin: Option<f64>,
    /// `min <Tx - Ty, x - y> / |x - y|_S^2`
    pub monotonicity_ratio: f64,
    /// `min <Cx - Cy, z - y> + (l/4)|z - x|_S^2`, scaled by
    /// `1 + |z - x|_S^2`.
    pub three_point_margin: Option<f64>,
    pub violations: Vec<String>,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Probes `trials` random pairs (and triples for the three-point
/// inequality) and reports the worst observed ratios, flagging any declared
/// constant violated beyond [`PROPERTY_SLACK`].
pub fn verify_operator_properties<T: Scalar>(
    op: &dyn SingleValuedOp<T>,
    metric: &dyn Metric<T>,
    declared: &DeclaredConstants<T>,
    trials: usize,
    seed: u64,
) -> PropertyReport {
    let n = metric.dim();
    let mut rng = rng::seeded(seed);
    let mut lip: f64 = 0.0;
    let mut coco: Option<f64> = None;
    let mut mono = f64::INFINITY;
    let mut three: Option<f64> = None;
    for _ in 0..trials.max(1) {
        let x: Vector<T> = rng::probe(&mut rng, n);
        let y = &x + &rng::probe::<T>(&mut rng, n);
        let z = &x + &rng::probe::<T>(&mut rng, n);
        let (tx, ty) = (op.eval(&x), op.eval(&y));
        let dx = &x - &y;
        let dt = &tx - &ty;
        let dx_s = to_f64(metric.apply(&dx).dot(&dx));
        let dt_sinv = to_f64(metric.apply_inverse(&dt).dot(&dt));
        let pair = to_f64(dt.dot(&dx));
        if dx_s > 0.0 {
            lip = lip.max((dt_sinv / dx_s).sqrt());
            mono = mono.min(pair / dx_s);
        }
        if let Some(l) = declared.cocoercivity {
            let l = to_f64(l);
            if dt_sinv > 0.0 {
                let m = if l > 0.0 {
                    pair / dt_sinv - 1.0 / l
                } else {
                    f64::NEG_INFINITY
                };
                coco = Some(coco.map_or(m, |c: f64| c.min(m)));
            }
            let dz = &z - &x;
            let zx_s = to_f64(metric.apply(&dz).dot(&dz));
            // <Cx - Cy, z - y>
            let lhs = to_f64(dt.dot(&(&z - &y)));
            let m = (lhs + 0.25 * l * zx_s) / (1.0 + zx_s);
            three = Some(three.map_or(m, |t: f64| t.min(m)));
        }
    }
    let mut violations = Vec::new();
    if let Some(l) = declared.lipschitz {
        let l = to_f64(l);
        if lip > l + PROPERTY_SLACK {
            violations.push(format!("Lipschitz: observed ratio {lip:.6e} > declared {l:.6e}"));
        }
    }
    if let Some(m) = coco {
        if m < -PROPERTY_SLACK {
            violations.push(format!("cocoercivity: margin {m:.3e} below zero"));
        }
    }
    if let Some(t) = three {
        if t < -PROPERTY_SLACK {
            violations.push(format!("three-point inequality: margin {t:.3e} below zero"));
        }
    }
    if let Some(m) = declared.strong_monotonicity {
        let m = to_f64(m);
        if mono < m - PROPERTY_SLACK {
            violations.push(format!(
                "monotonicity: ratio {mono:.6e} below declared {m:.6e}"
            ));
        }
    }
    PropertyReport {
        trials,
        worst_lipschitz_ratio: lip,
        cocoercivity_margin: coco,
        monotonicity_ratio: mono,
        three_point_margin: three,
        violations,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ResolventReport {
    pub trials: usize,
    /// `min (<Jp - Jq, p - q> - |Jp - Jq|^2) / |p - q|^2`
    pub firm_nonexpansiveness_margin: f64,
    pub failures: Vec<String>,
}

impl ResolventReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.firm_nonexpansiveness_margin >= -PROPERTY_SLACK
    }
}

/// Probes firm nonexpansiveness of `(Id + step A)^{-1}` on `dim`-dimensional
/// random pairs, recording any evaluation that fails or returns non-finite
/// values.
pub fn verify_resolvent<T: Scalar>(
    op: &dyn SetValuedOp<T>,
    dim: usize,
    step: T,
    trials: usize,
    seed: u64,
) -> ResolventReport {
    let mut rng = rng::seeded(seed);
    let mut margin = f64::INFINITY;
    let mut failures = Vec::new();
    for _ in 0..trials.max(1) {
        let p: Vector<T> = rng::probe(&mut rng, dim);
        let q = &p + &rng::probe::<T>(&mut rng, dim);
        match (op.resolvent(step, &p), op.resolvent(step, &q)) {
            (Ok(jp), Ok(jq)) if jp.is_finite() && jq.is_finite() => {
                let dj = &jp - &jq;
                let dp = &p - &q;
                let d2 = to_f64(dp.norm_sq());
                if d2 > 0.0 {
                    margin = margin.min(to_f64(dj.dot(&dp) - dj.norm_sq()) / d2);
                }
            }
            (Err(e), _) | (_, Err(e)) => failures.push(e.to_string()),
            _ => failures.push("non-finite resolvent output".into()),
        }
    }
    ResolventReport {
        trials,
        firm_nonexpansiveness_margin: margin,
        failures,
    }
}

/// Worst relative adjoint defect `|<Vx, z> - <x, V* z>| / (|x| |z|)`.
pub fn verify_adjoint<T: Scalar>(v: &dyn LinearOp<T>, trials: usize, seed: u64) -> f64 {
    let mut rng = rng::seeded(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials.max(1) {
        let x: Vector<T> = rng::probe(&mut rng, v.dim_in());
        let z: Vector<T> = rng::probe(&mut rng, v.dim_out());
        let lhs = v.apply(&x).dot(&z);
        let rhs = x.dot(&v.apply_adjoint(&z));
        let denom = x.norm() * z.norm();
        if denom > T::zero() {
            worst = worst.max(to_f64((lhs - rhs).abs() / denom));
        }
    }
    worst
}
