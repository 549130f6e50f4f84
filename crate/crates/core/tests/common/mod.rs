#![allow(dead_code)]

pub mod counted;
pub mod hand;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use nofob::engine::{solve, step_with_momentum, Inclusion, Kernel, SolveOptions, SolverState, StoppingRule};
use nofob::methods::{Formulation, Instance};
use nofob::operators::{AffineOp, MatrixDoc, Prox, SetValuedRef, SingleValuedRef};
use nofob::problems::{FormulationDoc, ProblemDocument, SingleValuedDoc};
use nofob::rng::{gaussian, seeded};
use nofob::space::Vector;
use nofob::Matrix64;

pub fn dvec(v: &Vector<f64>) -> DVector<f64> {
    DVector::from_column_slice(v.as_slice())
}

pub fn from_dvec(v: &DVector<f64>) -> Vector<f64> {
    Vector::from_vec(v.as_slice().to_vec())
}

pub fn dmat(m: &MatrixDoc) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows, m.cols, &m.data)
}

pub fn dmat_of(m: &Matrix64) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.data())
}

/// Largest coordinate deviation between a library vector and a hand one.
pub fn dev(a: &Vector<f64>, b: &DVector<f64>) -> f64 {
    assert_eq!(a.dim(), b.len());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn soft(v: &DVector<f64>, t: f64) -> DVector<f64> {
    v.map(|x| x.signum() * (x.abs() - t).max(0.0))
}

pub fn clamp(v: &DVector<f64>, r: f64) -> DVector<f64> {
    v.map(|x| x.clamp(-r, r))
}

/// `(Q, shift)` of an affine operator document.
pub fn affine_parts(doc: &SingleValuedDoc, dim: usize) -> (DMatrix<f64>, DVector<f64>) {
    match doc {
        SingleValuedDoc::Affine { matrix, shift, .. } => (dmat(matrix), DVector::from_vec(shift.clone())),
        SingleValuedDoc::Zero => (DMatrix::zeros(dim, dim), DVector::zeros(dim)),
        SingleValuedDoc::ScaledShift { a, b } => {
            let shift = if b.len() == 1 { DVector::from_element(dim, -a * b[0]) } else { DVector::from_vec(b.clone()) * -a };
            (DMatrix::identity(dim, dim) * *a, shift)
        }
    }
}

pub fn view(doc: &ProblemDocument, name: &str) -> (Formulation<f64>, Vector<f64>) {
    let v = doc.view(name).unwrap();
    (v.build::<f64>().unwrap(), v.solution::<f64>().unwrap())
}

pub fn formulation_doc<'a>(doc: &'a ProblemDocument, name: &str) -> &'a FormulationDoc {
    &doc.view(name).unwrap().formulation
}

pub fn composite(f: &Formulation<f64>) -> &nofob::methods::CompositeForm<f64> {
    match f {
        Formulation::Composite(c) => c,
        _ => panic!("expected a composite formulation"),
    }
}

pub fn primal_dual(f: &Formulation<f64>) -> &nofob::methods::PrimalDualProblem<f64> {
    match f {
        Formulation::PrimalDual(p) => p,
        _ => panic!("expected a primal-dual formulation"),
    }
}

/// Random 50-dimensional `0 in mu ∂|.|_1 (x) + Q x - c` with `Q` PSD,
/// `lambda_max(Q) = 1`.
pub struct QuadraticL1 {
    pub q: Matrix64,
    pub c: Vector<f64>,
    pub mu: f64,
}

impl QuadraticL1 {
    pub fn new(seed: u64, n: usize) -> Self {
        let mut rng = seeded(seed);
        let g = Matrix64::from_row_major(n, n, gaussian::<f64>(&mut rng, n * n).into_inner()).unwrap();
        let p = g.gram();
        let top = dmat_of(&p).symmetric_eigen().eigenvalues.max();
        let mut q = p.scale(1.0 / top);
        for r in 0..n {
            for c in 0..r {
                let v = 0.5 * (q.get(r, c) + q.get(c, r));
                q.set(r, c, v);
                q.set(c, r, v);
            }
        }
        let c = gaussian::<f64>(&mut rng, n);
        Self { q, c, mu: 0.1 }
    }

    /// `Q = (Id + G^T G / |G^T G|) / 2`, spectrum in `[1/2, 1]`.
    pub fn well_conditioned(seed: u64, n: usize) -> Self {
        let mut data = Self::new(seed, n);
        let mut q = data.q.scale(0.5);
        for i in 0..n {
            q.set(i, i, q.get(i, i) + 0.5);
        }
        data.q = q;
        data
    }

    pub fn dim(&self) -> usize {
        self.c.dim()
    }

    pub fn b(&self) -> SetValuedRef<f64> {
        Arc::new(Prox::L1 { weight: self.mu })
    }

    pub fn c_op(&self) -> SingleValuedRef<f64> {
        Arc::new(AffineOp::symmetric_psd(self.q.clone(), -&self.c).unwrap())
    }

    /// Plain forward-backward `x <- soft(x - g (Q x - c), g mu)`.
    pub fn hand_fb(&self, x0: &DVector<f64>, gamma: f64, iterations: usize) -> Vec<DVector<f64>> {
        let q = dmat_of(&self.q);
        let c = dvec(&self.c);
        let mut x = x0.clone();
        let mut out = vec![x.clone()];
        for _ in 0..iterations {
            x = soft(&(&x - (&q * &x - &c) * gamma), gamma * self.mu);
            out.push(x.clone());
        }
        out
    }

    /// Minimizer from a long hand-coded forward-backward run.
    pub fn oracle(&self) -> DVector<f64> {
        let q = dmat_of(&self.q);
        let c = dvec(&self.c);
        let mut x = DVector::zeros(self.dim());
        for _ in 0..200_000 {
            let next = soft(&(&x - (&q * &x - &c)), self.mu);
            let step = (&next - &x).amax();
            x = next;
            if step < 1e-15 {
                break;
            }
        }
        x
    }
}

/// Iterates `x_0, ..., x_n` of an instance, certificate not enforced.
pub fn trajectory(inst: &Instance<f64>, x0: Vector<f64>, n: usize) -> Vec<Vector<f64>> {
    let mut options = inst.options(StoppingRule::iterations(n));
    options.record_iterates = true;
    options.diagnostics = false;
    options.enforce_certificate = false;
    inst.solve(x0, &options).unwrap().iterates
}

/// Iterates of the engine stepped by hand.
pub fn engine_trajectory(
    problem: &dyn Inclusion<f64>,
    kernel: &dyn Kernel<f64>,
    x0: Vector<f64>,
    theta: f64,
    n: usize,
) -> Vec<Vector<f64>> {
    let mut state = SolverState::new(problem, kernel, x0, None, None).unwrap();
    let mut out = vec![state.x().clone()];
    for _ in 0..n {
        state = step_with_momentum(problem, kernel, &state, theta).unwrap();
        out.push(state.x().clone());
    }
    out
}

/// Runs an instance until the step drops below `tol` or `max_iter`.
pub fn run_to(inst: &Instance<f64>, tol: f64, max_iter: usize) -> nofob::SolveTrace64 {
    let mut options: SolveOptions<f64> = inst.options(StoppingRule {
        max_iter,
        step_tol: Some(tol),
        residual_tol: None,
    });
    options.diagnostics = false;
    inst.solve(inst.zero_start(), &options).unwrap()
}

/// Runs the engine directly with default options.
pub fn run_engine(
    problem: &dyn Inclusion<f64>,
    kernel: &dyn Kernel<f64>,
    x0: Vector<f64>,
    options: &SolveOptions<f64>,
) -> nofob::SolveTrace64 {
    solve(problem, kernel, x0, options).unwrap()
}
