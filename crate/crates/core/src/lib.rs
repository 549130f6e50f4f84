//! Nonlinear forward-backward splitting with momentum correction.
//!
//! The [`engine`] runs `x_{k+1} = (M_k + A)^{-1}(M_k x_k - C x_k + u_k / gamma_k)`
//! for any [`engine::Kernel`], certifies step sizes before running and
//! records Lyapunov diagnostics. [`methods`] instantiates the kernel for
//! forward-half-reflected-backward and several primal-dual methods;
//! [`problems`] provides instances with known solutions.
//!
//! Everything numerical is generic over [`scalar::Scalar`] (`f32` or `f64`).

// `!(x > 0)` is the NaN-rejecting comparison throughout
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod engine;
pub mod error;
pub mod linalg;
pub mod methods;
pub mod operators;
pub mod problems;
pub mod rng;
pub mod scalar;
pub mod space;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision vector.
pub type Vector64 = space::Vector<f64>;
/// Single-precision vector.
pub type Vector32 = space::Vector<f32>;
/// Double-precision dense matrix.
pub type Matrix64 = linalg::Matrix<f64>;
/// Single-precision dense matrix.
pub type Matrix32 = linalg::Matrix<f32>;
/// Double-precision method instance.
pub type Instance64 = methods::Instance<f64>;
/// Single-precision method instance.
pub type Instance32 = methods::Instance<f32>;
/// Double-precision solve trace.
pub type SolveTrace64 = engine::SolveTrace<f64>;
/// Single-precision solve trace.
pub type SolveTrace32 = engine::SolveTrace<f32>;
