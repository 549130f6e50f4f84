use serde::Serialize;

use super::StepSchedule;
use crate::scalar::{lit, to_f64, Scalar};

/// Default certificate threshold.
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Outcome of checking the step-size condition over a horizon.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub passed: bool,
    pub worst_margin: f64,
    /// Iteration attaining the worst margin.
    pub worst_k: usize,
    pub epsilon: f64,
    pub theta: f64,
    pub horizon: usize,
}

impl Certificate {
    pub fn inequality(&self) -> &'static str {
        if self.theta == 0.0 {
            "1 - L_{k-1} - L_k - gamma_k*l/2 >= eps"
        } else {
            "1 - theta - 2|theta| - L_{k-1} - L_k - gamma_k*l/2 >= eps"
        }
    }
}

/// `1 - theta - 2|theta| - L_{k-1} - L_k - gamma_k l / 2` with
/// `L_{-1} := L_0`.
pub fn margin_at<T: Scalar>(schedule: &(impl StepSchedule<T> + ?Sized), ell: T, theta: T, k: usize) -> T {
    let prev = schedule.lipschitz(k.saturating_sub(1));
    let two = lit::<T>(2.0);
    // grouped so that theta = 1/3 rounds to a margin of exactly zero
    T::one() - (theta + two * theta.abs()) - prev - schedule.lipschitz(k) - schedule.gamma(k) * ell / two
}

/// Checks `1 - L_{k-1} - L_k - gamma_k l / 2 >= epsilon` for
/// `k = 0, ..., horizon - 1`.
pub fn certify<T: Scalar>(
    schedule: &(impl StepSchedule<T> + ?Sized),
    ell: T,
    horizon: usize,
    epsilon: T,
) -> Certificate {
    certify_momentum(schedule, ell, T::zero(), horizon, epsilon)
}

/// Momentum version of [`certify`] with the margin reduced by
/// `theta + 2|theta|`.
pub fn certify_momentum<T: Scalar>(
    schedule: &(impl StepSchedule<T> + ?Sized),
    ell: T,
    theta: T,
    horizon: usize,
    epsilon: T,
) -> Certificate {
    let horizon = horizon.max(1);
    let mut worst = T::infinity();
    let mut worst_k = 0;
    for k in 0..horizon {
        let m = margin_at(schedule, ell, theta, k);
        // NaN margins count as failures
        if !(m >= worst) {
            worst = m;
            worst_k = k;
        }
    }
    Certificate {
        passed: worst >= epsilon,
        worst_margin: to_f64(worst),
        worst_k,
        epsilon: to_f64(epsilon),
        theta: to_f64(theta),
        horizon,
    }
}
