use std::collections::BTreeMap;

use super::document::{FormulationDoc, LinearDoc, ProblemDocument, SetValuedDoc, SingleValuedDoc, ViewDoc};
use crate::error::{Error, Result};
use crate::operators::ProxParams;
use crate::rng::{gaussian, seeded};

/// Primal step of the reference solver; small primal steps converge much
/// faster on this strongly convex problem.
const REFERENCE_TAU: f64 = 0.003;
const REFERENCE_MAX_ITER: usize = 400_000;
const REFERENCE_STEP_TOL: f64 = 1e-14;

/// Isotropic TV denoising `min 1/2 |y - b|^2 + lambda |grad y|_{2,1}` on a
/// `width x height` image (row-major).
#[derive(Clone, Debug)]
pub struct TvProblem {
    pub width: usize,
    pub height: usize,
    pub lambda: f64,
    pub noisy: Vec<f64>,
    /// Reference primal solution.
    pub solution: Vec<f64>,
    /// Reference dual solution `(horizontal; vertical)`.
    pub dual: Vec<f64>,
    /// Iterations used by the reference solver.
    pub reference_iterations: usize,
}

/// Piecewise-constant phantom (a square and a disc on a flat background)
/// plus Gaussian noise of standard deviation 0.1.
pub fn phantom(width: usize, height: usize, seed: u64) -> Vec<f64> {
    let mut rng = seeded(seed);
    let noise = gaussian::<f64>(&mut rng, width * height);
    let (w, h) = (width as f64, height as f64);
    let mut img = Vec::with_capacity(width * height);
    for r in 0..height {
        for c in 0..width {
            let (y, x) = (r as f64 / h, c as f64 / w);
            let mut v = 0.2;
            if (0.25..0.625).contains(&y) && (0.1875..0.5625).contains(&x) {
                v = 0.8;
            }
            if (y - 0.6875).powi(2) + (x - 0.6875).powi(2) < 0.035 {
                v = 0.5;
            }
            img.push(v + 0.1 * noise[r * width + c]);
        }
    }
    img
}

/// Forward differences with zero flux at the far boundary.
fn grad(x: &[f64], w: usize, h: usize, gx: &mut [f64], gy: &mut [f64]) {
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            gx[i] = if c + 1 < w { x[i + 1] - x[i] } else { 0.0 };
            gy[i] = if r + 1 < h { x[i + w] - x[i] } else { 0.0 };
        }
    }
}

/// Negative divergence, the adjoint of [`grad`].
fn neg_div(px: &[f64], py: &[f64], w: usize, h: usize, out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if c + 1 < w {
                out[i] -= px[i];
                out[i + 1] += px[i];
            }
            if r + 1 < h {
                out[i] -= py[i];
                out[i + w] += py[i];
            }
        }
    }
}

/// Textbook primal-dual hybrid gradient for TV denoising, written
/// directly on arrays: dual ascent with projection onto the pointwise
/// `lambda`-ball, primal proximal step of `1/2 |. - b|^2`, extrapolation
/// by two. Returns `(y, p, iterations)`.
pub fn tv_reference(noisy: &[f64], width: usize, height: usize, lambda: f64) -> (Vec<f64>, Vec<f64>, usize) {
    let n = width * height;
    let tau = REFERENCE_TAU;
    let sigma = 1.0 / (8.0 * tau);
    let mut x = vec![0.0; n];
    let mut xbar = vec![0.0; n];
    let mut px = vec![0.0; n];
    let mut py = vec![0.0; n];
    let (mut gx, mut gy, mut d) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut iterations = REFERENCE_MAX_ITER;
    for it in 0..REFERENCE_MAX_ITER {
        grad(&xbar, width, height, &mut gx, &mut gy);
        for i in 0..n {
            let (a, b) = (px[i] + sigma * gx[i], py[i] + sigma * gy[i]);
            let scale = if lambda > 0.0 {
                (a.hypot(b) / lambda).max(1.0)
            } else {
                f64::INFINITY
            };
            px[i] = a / scale;
            py[i] = b / scale;
        }
        neg_div(&px, &py, width, height, &mut d);
        let mut change: f64 = 0.0;
        for i in 0..n {
            let next = (x[i] - tau * d[i] + tau * noisy[i]) / (1.0 + tau);
            change = change.max((next - x[i]).abs());
            xbar[i] = 2.0 * next - x[i];
            x[i] = next;
        }
        if change <= REFERENCE_STEP_TOL {
            iterations = it + 1;
            break;
        }
    }
    px.extend_from_slice(&py);
    (x, px, iterations)
}

/// TV denoising instance with its reference solution.
pub fn make_tv(width: usize, height: usize, lambda: f64, seed: u64) -> Result<TvProblem> {
    if width < 2 || height < 2 {
        return Err(Error::InvalidParameter("image must be at least 2 x 2".into()));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be nonnegative, got {lambda}")));
    }
    let noisy = phantom(width, height, seed);
    let (solution, dual, reference_iterations) = tv_reference(&noisy, width, height, lambda);
    Ok(TvProblem {
        width,
        height,
        lambda,
        noisy,
        solution,
        dual,
        reference_iterations,
    })
}

impl TvProblem {
    /// `pd_prox`: `B = ∇ 1/2 |. - b|^2`, `F = 0`; `pd_smooth`: `B = 0`,
    /// `F = Id - b` with `beta = 1`. Both use `D = lambda ∂|.|_{2,1}` and
    /// `V = grad`.
    pub fn document(&self) -> ProblemDocument {
        let n = self.width * self.height;
        let d = SetValuedDoc::new(
            "group_l21",
            ProxParams {
                weight: Some(self.lambda),
                group_len: Some(2),
                ..ProxParams::default()
            },
        );
        let v = LinearDoc::Gradient2d {
            width: self.width,
            height: self.height,
        };
        let mut solution = self.solution.clone();
        solution.extend_from_slice(&self.dual);
        let quadratic = ProxParams {
            q_diag: Some(vec![1.0; n]),
            b: Some(self.noisy.clone()),
            ..ProxParams::default()
        };
        let mut views = BTreeMap::new();
        views.insert(
            "pd_prox".to_string(),
            ViewDoc {
                formulation: FormulationDoc::PrimalDual {
                    b: SetValuedDoc::new("quadratic", quadratic),
                    d: d.clone(),
                    e: SingleValuedDoc::Zero,
                    f: SingleValuedDoc::Zero,
                    v: v.clone(),
                },
                solution: Some(solution.clone()),
            },
        );
        views.insert(
            "pd_smooth".to_string(),
            ViewDoc {
                formulation: FormulationDoc::PrimalDual {
                    b: SetValuedDoc::zero(),
                    d,
                    e: SingleValuedDoc::Zero,
                    f: SingleValuedDoc::ScaledShift {
                        a: 1.0,
                        b: self.noisy.clone(),
                    },
                    v,
                },
                solution: Some(solution),
            },
        );
        ProblemDocument {
            name: "tv".into(),
            description: format!(
                "TV denoising of a {}x{} phantom, lambda = {}",
                self.width, self.height, self.lambda
            ),
            views,
        }
    }

    /// `1/2 |y - b|^2 + lambda |grad y|_{2,1}`
    pub fn objective(&self, y: &[f64]) -> f64 {
        let n = y.len();
        let (mut gx, mut gy) = (vec![0.0; n], vec![0.0; n]);
        grad(y, self.width, self.height, &mut gx, &mut gy);
        let fidelity: f64 = y.iter().zip(&self.noisy).map(|(a, b)| 0.5 * (a - b).powi(2)).sum();
        let tv: f64 = gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).sum();
        fidelity + self.lambda * tv
    }
}
