use serde::Serialize;

use super::Sequence;
use crate::scalar::{lit, to_f64, Scalar};

/// Closed-form step-size condition of a method family, written in the
/// method's own parameters.
///
/// `slack(k)` equals `scale()` times the generic margin of the
/// corresponding kernel, and the condition is `slack(k) >= scale() * eps`.
#[derive(Clone, Debug, PartialEq)]
pub enum Corollary<T> {
    /// `gamma beta / 2 <= 1 - theta - 2|theta| - eps`.
    ForwardBackward { gamma: T, beta: T, theta: T },
    /// `a_{k-1} delta + a_k (delta + beta/2) <= 1 - theta - 2|theta| - eps`.
    Fhrb {
        alpha: Sequence<T>,
        delta: T,
        beta: T,
        theta: T,
    },
    /// `(1 - q)(1 - theta - 2|theta|) - (|2 - l_{k-1}| + |2 - l_k|) sqrt(tau sigma) |V|
    /// - tau (2 delta + beta/2) >= (1 - q) eps` with `q = tau sigma |V|^2`.
    Triangular {
        tau: T,
        sigma: T,
        norm_v: T,
        lambda: Sequence<T>,
        delta: T,
        beta: T,
        theta: T,
    },
    /// The triangular condition with `V = Id`, `lambda = 2` and
    /// `sigma = 1/varsigma`; for `theta = 0` it reads
    /// `tau (1/varsigma + 2 delta + beta/2) <= 1 - (1 - tau/varsigma) eps`.
    Fhrdr {
        tau: T,
        varsigma: T,
        delta: T,
        beta: T,
        theta: T,
    },
    /// `2 tau sigma |V|^2 + tau (2 delta + beta/2) <= 1 - theta - 2|theta| - eps`.
    ResolventCompensated {
        tau: T,
        sigma: T,
        norm_v: T,
        delta: T,
        beta: T,
        theta: T,
    },
}

/// Outcome of checking a [`Corollary`] over a horizon.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorollaryCheck {
    pub passed: bool,
    pub worst_slack: f64,
    pub worst_k: usize,
    pub text: String,
}

fn momentum_budget<T: Scalar>(theta: T) -> T {
    T::one() - (theta + lit::<T>(2.0) * theta.abs())
}

impl<T: Scalar> Corollary<T> {
    pub fn theta(&self) -> T {
        match self {
            Self::ForwardBackward { theta, .. }
            | Self::Fhrb { theta, .. }
            | Self::Triangular { theta, .. }
            | Self::Fhrdr { theta, .. }
            | Self::ResolventCompensated { theta, .. } => *theta,
        }
    }

    /// Factor relating the slack to the generic margin.
    pub fn scale(&self) -> T {
        match self {
            Self::Triangular {
                tau, sigma, norm_v, ..
            } => T::one() - *tau * *sigma * *norm_v * *norm_v,
            Self::Fhrdr { tau, varsigma, .. } => T::one() - *tau / *varsigma,
            _ => T::one(),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Self::Fhrb { alpha, .. } => alpha.is_constant(),
            Self::Triangular { lambda, .. } => lambda.is_constant(),
            _ => true,
        }
    }

    /// Slack at iteration `k`, pairing parameters `k - 1` and `k` (index
    /// `-1` reads as `0`).
    pub fn slack(&self, k: usize) -> T {
        let two = lit::<T>(2.0);
        let half = lit::<T>(0.5);
        let j = k.saturating_sub(1);
        let budget = momentum_budget(self.theta());
        match self {
            Self::ForwardBackward { gamma, beta, .. } => budget - *gamma * *beta * half,
            Self::Fhrb {
                alpha, delta, beta, ..
            } => budget - alpha.at(j) * *delta - alpha.at(k) * (*delta + *beta * half),
            Self::Triangular {
                tau,
                sigma,
                norm_v,
                lambda,
                delta,
                beta,
                ..
            } => {
                let q = *tau * *sigma * *norm_v * *norm_v;
                let coupling = (two - lambda.at(j)).abs() + (two - lambda.at(k)).abs();
                (T::one() - q) * budget
                    - coupling * (*tau * *sigma).sqrt() * *norm_v
                    - *tau * (two * *delta + *beta * half)
            }
            Self::Fhrdr {
                tau,
                varsigma,
                delta,
                beta,
                ..
            } => (T::one() - *tau / *varsigma) * budget - *tau * (two * *delta + *beta * half),
            Self::ResolventCompensated {
                tau,
                sigma,
                norm_v,
                delta,
                beta,
                ..
            } => budget - two * *tau * *sigma * *norm_v * *norm_v - *tau * (two * *delta + *beta * half),
        }
    }

    /// Human-readable inequality.
    pub fn text(&self) -> String {
        let budget = if self.theta() == T::zero() {
            "1"
        } else {
            "(1 - theta - 2|theta|)"
        };
        let scaled = if budget == "1" { String::new() } else { format!("*{budget}") };
        match self {
            Self::ForwardBackward { .. } => format!("gamma*beta/2 <= {budget} - eps"),
            Self::Fhrb { .. } => {
                format!("alpha_(k-1)*delta + alpha_k*(delta + beta/2) <= {budget} - eps")
            }
            Self::Triangular { .. } => format!(
                "(1 - q){scaled} - (|2 - lambda_(k-1)| + |2 - lambda_k|)*sqrt(tau*sigma)*|V| \
                 - tau*(2*delta + beta/2) >= (1 - q)*eps, q = tau*sigma*|V|^2"
            ),
            Self::Fhrdr { .. } => format!(
                "(1 - tau/varsigma){scaled} - tau*(2*delta + beta/2) >= (1 - tau/varsigma)*eps"
            ),
            Self::ResolventCompensated { .. } => {
                format!("2*tau*sigma*|V|^2 + tau*(2*delta + beta/2) <= {budget} - eps")
            }
        }
    }

    /// Checks `slack(k) >= scale * eps` for `k < horizon` (one step for
    /// constant parameters).
    pub fn check(&self, horizon: usize, epsilon: T) -> CorollaryCheck {
        let horizon = if self.is_constant() { 1 } else { horizon.max(1) };
        let threshold = self.scale() * epsilon;
        let mut worst = T::infinity();
        let mut worst_k = 0;
        for k in 0..horizon {
            let s = self.slack(k);
            if !(s >= worst) {
                worst = s;
                worst_k = k;
            }
        }
        CorollaryCheck {
            passed: self.scale() > T::zero() && worst >= threshold,
            worst_slack: to_f64(worst),
            worst_k,
            text: self.text(),
        }
    }
}
