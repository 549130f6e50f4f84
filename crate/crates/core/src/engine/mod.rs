//! The nonlinear forward-backward iteration with momentum correction and
//! its additional-momentum variant, driven by a [`Kernel`].

mod certify;
mod kernel;
mod problem;
mod solver;

pub use certify::{certify, certify_momentum, margin_at, Certificate, DEFAULT_EPSILON};
pub use kernel::{
    correction_consistency, Anchor, ConstantSchedule, FnSchedule, ForwardBackward, Kernel, Lazy,
    Memo, Reparameterized, StepSchedule,
};
pub use problem::{CompositeInclusion, Inclusion};
pub use solver::{
    certificate_horizon, solve, step, step_with_momentum, SolveOptions, SolveTrace, SolverState,
    StoppingRule, Termination,
};
