use std::collections::BTreeMap;

use rand::seq::index::sample;

use super::document::{FormulationDoc, LinearDoc, ProblemDocument, SetValuedDoc, SingleValuedDoc, ViewDoc};
use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix};
use crate::operators::{MatrixDoc, ProxParams};
use crate::rng::{gaussian, seeded};
use crate::space::Vector;

/// Iteration cap of the reference forward-backward run.
const REFERENCE_ITERATIONS: usize = 200_000;

/// `min 1/2 |V x - b|^2 + mu |x|_1` with `|V| <= 1`.
#[derive(Clone, Debug)]
pub struct LassoProblem {
    pub v: Matrix<f64>,
    pub b: Vector<f64>,
    pub mu: f64,
    pub solution: Vector<f64>,
}

fn soft(x: f64, t: f64) -> f64 {
    x.signum() * (x.abs() - t).max(0.0)
}

/// Random instance: Gaussian `V` scaled to spectral norm just below one,
/// `b = V x_0 + noise` for a 5-sparse `x_0`.
pub fn make_lasso(seed: u64, m: usize, n: usize, mu: f64) -> Result<LassoProblem> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidParameter("lasso dimensions must be positive".into()));
    }
    let mut rng = seeded(seed);
    let raw = Matrix::from_row_major(m, n, gaussian::<f64>(&mut rng, m * n).into_inner())?;
    let small = if m <= n { raw.matmul(&raw.transpose()) } else { raw.gram() };
    let (_, top) = small.symmetric_eigen_bounds();
    let v = raw.scale(1.0 / (top.sqrt() * (1.0 + 1e-9)));
    let mut x0 = vec![0.0; n];
    let weights = gaussian::<f64>(&mut rng, n.min(5));
    for (i, w) in sample(&mut rng, n, n.min(5)).into_iter().zip(weights.iter()) {
        x0[i] = *w;
    }
    let noise = gaussian::<f64>(&mut rng, m).scale(0.05);
    let b = &v.matvec(&Vector::from_vec(x0)) + &noise;
    LassoProblem::from_data(v, b, mu)
}

impl LassoProblem {
    /// Solves the instance with forward-backward followed by a support
    /// polish (exact least squares on the detected support with fixed
    /// signs), kept when it satisfies the optimality conditions.
    pub fn from_data(v: Matrix<f64>, b: Vector<f64>, mu: f64) -> Result<Self> {
        b.check_dim(v.rows())?;
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(Error::InvalidParameter(format!("mu must be nonnegative, got {mu}")));
        }
        let (_, top) = v.gram().symmetric_eigen_bounds();
        if top > 1.0 + 1e-9 {
            return Err(Error::InvalidParameter(format!("|V|^2 = {top} exceeds one")));
        }
        let mut x = Vector::zeros(v.cols());
        let vtb = v.matvec_transpose(&b);
        for _ in 0..REFERENCE_ITERATIONS {
            let grad = &v.matvec_transpose(&v.matvec(&x)) - &vtb;
            let next: Vector<f64> = x.zip_map(&grad, |xi, gi| soft(xi - gi, mu));
            let done = next.dist_inf(&x) <= 1e-15;
            x = next;
            if done {
                break;
            }
        }
        let mut problem = Self {
            v,
            b,
            mu,
            solution: x,
        };
        if let Some(polished) = problem.polish() {
            if problem.kkt_residual(&polished) <= problem.kkt_residual(&problem.solution) {
                problem.solution = polished;
            }
        }
        Ok(problem)
    }

    fn polish(&self) -> Option<Vector<f64>> {
        let support: Vec<usize> = (0..self.v.cols())
            .filter(|&i| self.solution[i].abs() > 1e-9)
            .collect();
        if support.is_empty() {
            return None;
        }
        let m = self.v.rows();
        let mut cols = Vec::with_capacity(m * support.len());
        for r in 0..m {
            for &j in &support {
                cols.push(self.v.get(r, j));
            }
        }
        let vs = Matrix::from_row_major(m, support.len(), cols).ok()?;
        let chol = Cholesky::new(&vs.gram()).ok()?;
        let signs: Vector<f64> = support.iter().map(|&j| self.solution[j].signum()).collect();
        let rhs = vs.matvec_transpose(&self.b).lincomb(1.0, -self.mu, &signs);
        let xs = chol.solve(&rhs);
        if support
            .iter()
            .zip(xs.iter())
            .any(|(&j, &v)| v.signum() != self.solution[j].signum())
        {
            return None;
        }
        let mut x = Vector::zeros(self.v.cols());
        for (&j, &v) in support.iter().zip(xs.iter()) {
            x[j] = v;
        }
        Some(x)
    }

    pub fn objective(&self, x: &Vector<f64>) -> f64 {
        let r = &self.v.matvec(x) - &self.b;
        0.5 * r.norm_sq() + self.mu * x.iter().map(|c| c.abs()).sum::<f64>()
    }

    /// Distance of `-V^T (V x - b)` from `mu ∂|x|_1`, coordinatewise sup.
    pub fn kkt_residual(&self, x: &Vector<f64>) -> f64 {
        let g = self.v.matvec_transpose(&(&self.v.matvec(x) - &self.b));
        x.iter()
            .zip(g.iter())
            .map(|(&xi, &gi)| {
                if xi != 0.0 {
                    (gi + self.mu * xi.signum()).abs()
                } else {
                    (gi.abs() - self.mu).max(0.0)
                }
            })
            .fold(0.0, f64::max)
    }

    /// `composite`: `B = mu ∂|.|_1`, `C = V^T(V . - b)` with `beta = 1`.
    /// `pd_prox`: `B = mu ∂|.|_1`, `D = ∇ 1/2 |. - b|^2`, `V`, so that
    /// `z* = V x* - b`.
    pub fn document(&self) -> ProblemDocument {
        let gram = self.v.gram();
        let shift = self.v.matvec_transpose(&self.b).scale(-1.0);
        let l1 = SetValuedDoc::new("l1", ProxParams::weight(self.mu));
        let mut views = BTreeMap::new();
        views.insert(
            "composite".to_string(),
            ViewDoc {
                formulation: FormulationDoc::Composite {
                    dim: self.v.cols(),
                    b: l1.clone(),
                    d: SingleValuedDoc::Zero,
                    c: SingleValuedDoc::Affine {
                        matrix: MatrixDoc::from_matrix(&gram),
                        shift: shift.to_f64(),
                        lipschitz: Some(1.0),
                        cocoercivity: Some(1.0),
                    },
                },
                solution: Some(self.solution.to_f64()),
            },
        );
        let residual = &self.v.matvec(&self.solution) - &self.b;
        let quadratic = ProxParams {
            q_diag: Some(vec![1.0; self.v.rows()]),
            b: Some(self.b.to_f64()),
            ..ProxParams::default()
        };
        views.insert(
            "pd_prox".to_string(),
            ViewDoc {
                formulation: FormulationDoc::PrimalDual {
                    b: l1,
                    d: SetValuedDoc::new("quadratic", quadratic),
                    e: SingleValuedDoc::Zero,
                    f: SingleValuedDoc::Zero,
                    v: LinearDoc::Matrix {
                        matrix: MatrixDoc::from_matrix(&self.v),
                        norm_bound: Some(1.0),
                    },
                },
                solution: Some(self.solution.concat(&residual).to_f64()),
            },
        );
        ProblemDocument {
            name: "lasso".into(),
            description: format!(
                "lasso with {} observations, {} unknowns, mu = {}",
                self.v.rows(),
                self.v.cols(),
                self.mu
            ),
            views,
        }
    }
}
