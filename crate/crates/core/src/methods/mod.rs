//! Concrete splitting methods built on the generic engine: kernels, their
//! closed-form step-size conditions, and the preset catalog.

mod compensated;
mod corollary;
mod fhrb;
mod presets;
mod primal_dual;
mod sequence;
mod triangular;

pub use compensated::{build_pd_resolvent_compensated, PdResConfig, PdResolvent};
pub use corollary::{Corollary, CorollaryCheck};
pub use fhrb::{build_fhrb, build_fhrb_momentum, build_forward_backward, build_frb, CompositeForm, Fhrb};
pub use presets::{build_preset, preset, presets, Form, Formulation, ParamSpec, Preset, PresetParams};
pub use primal_dual::{BlockTriangularMetric, PrimalDualInclusion, PrimalDualProblem};
pub use sequence::Sequence;
pub use triangular::{build_fhrdr, build_pd_triangular, FhrdrConfig, PdTriConfig, PdTriangular};

use crate::engine::{certify_momentum, solve, Certificate, Inclusion, Kernel, SolveOptions, SolveTrace, StoppingRule};
use crate::error::Result;
use crate::scalar::Scalar;
use crate::space::Vector;

/// A method instantiated on a problem: everything the engine needs plus
/// the method's own step-size condition.
pub struct Instance<T: Scalar> {
    pub kernel: Box<dyn Kernel<T>>,
    pub inclusion: Box<dyn Inclusion<T>>,
    pub theta: T,
    pub corollary: Corollary<T>,
}

impl<T: Scalar> Instance<T> {
    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    /// Generic certificate of the kernel's `(gamma_k, L_k, l)`.
    pub fn certificate(&self, horizon: usize, epsilon: T) -> Certificate {
        certify_momentum(self.kernel.as_ref(), self.inclusion.ell(), self.theta, horizon, epsilon)
    }

    /// Solve options with this instance's momentum.
    pub fn options(&self, stopping: StoppingRule<T>) -> SolveOptions<T> {
        let mut options = SolveOptions::new(stopping);
        options.theta = self.theta;
        options
    }

    /// Runs the engine; the momentum of `options` is replaced by the
    /// instance's.
    pub fn solve(&self, x0: Vector<T>, options: &SolveOptions<T>) -> Result<SolveTrace<T>> {
        let mut options = options.clone();
        options.theta = self.theta;
        solve(self.inclusion.as_ref(), self.kernel.as_ref(), x0, &options)
    }

    pub fn zero_start(&self) -> Vector<T> {
        Vector::zeros(self.dim())
    }
}
