//! Evaluation-counting wrappers around a problem's operators.

use std::sync::Arc;

use nofob::engine::StoppingRule;
use nofob::methods::{Instance, PrimalDualProblem};
use nofob::operators::{
    CountedLinear, CountedSetValued, CountedSingleValued, EvalCounter, EvalCounts, LinearRef, SetValuedRef,
    SingleValuedRef,
};

pub struct Counters {
    pub b: Arc<EvalCounter>,
    pub d: Arc<EvalCounter>,
    pub e: Arc<EvalCounter>,
    pub f: Arc<EvalCounter>,
    pub v: Option<Arc<EvalCounter>>,
}

impl Counters {
    pub fn snapshot(&self) -> [EvalCounts; 5] {
        [
            self.b.snapshot(),
            self.d.snapshot(),
            self.e.snapshot(),
            self.f.snapshot(),
            self.v.as_ref().map(|c| c.snapshot()).unwrap_or_default(),
        ]
    }
}

pub fn set(op: SetValuedRef<f64>) -> (SetValuedRef<f64>, Arc<EvalCounter>) {
    let c = CountedSetValued::new(op);
    let counter = c.counter();
    (Arc::new(c), counter)
}

pub fn single(op: SingleValuedRef<f64>) -> (SingleValuedRef<f64>, Arc<EvalCounter>) {
    let c = CountedSingleValued::new(op);
    let counter = c.counter();
    (Arc::new(c), counter)
}

pub fn counted_pd(p: &PrimalDualProblem<f64>, count_v: bool) -> (PrimalDualProblem<f64>, Counters) {
    let (b, cb) = set(p.b.clone());
    let (d, cd) = set(p.d.clone());
    let (e, ce) = single(p.e.clone());
    let (f, cf) = single(p.f.clone());
    let (v, cv): (LinearRef<f64>, _) = if count_v {
        let c = CountedLinear::new(p.v.clone());
        let counter = c.counter();
        (Arc::new(c), Some(counter))
    } else {
        (p.v.clone(), None)
    };
    let problem = PrimalDualProblem::new(b, d, e, f, v).unwrap();
    (
        problem,
        Counters {
            b: cb,
            d: cd,
            e: ce,
            f: cf,
            v: cv,
        },
    )
}

/// Evaluations of iterations `10..20`, divided by ten.
pub fn per_iteration(inst: &Instance<f64>, counters: &Counters, diagnostics: bool) -> [EvalCounts; 5] {
    let run = |n| {
        let before = counters.snapshot();
        let mut opts = inst.options(StoppingRule::iterations(n));
        opts.diagnostics = diagnostics;
        opts.enforce_certificate = false;
        inst.solve(inst.zero_start(), &opts).unwrap();
        let after = counters.snapshot();
        [0, 1, 2, 3, 4].map(|i| after[i] - before[i])
    };
    let (ten, twenty) = (run(10), run(20));
    [0, 1, 2, 3, 4].map(|i| {
        let d = twenty[i] - ten[i];
        assert!(
            [d.resolvent, d.eval, d.apply, d.adjoint].iter().all(|c| c % 10 == 0),
            "{d:?}"
        );
        EvalCounts {
            resolvent: d.resolvent / 10,
            eval: d.eval / 10,
            apply: d.apply / 10,
            adjoint: d.adjoint / 10,
        }
    })
}

pub fn counts(resolvent: usize, eval: usize, apply: usize, adjoint: usize) -> EvalCounts {
    EvalCounts {
        resolvent,
        eval,
        apply,
        adjoint,
    }
}
