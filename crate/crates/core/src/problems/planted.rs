use std::collections::BTreeMap;

use rand::Rng;

use super::document::{FormulationDoc, LinearDoc, ProblemDocument, SetValuedDoc, SingleValuedDoc, ViewDoc};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::operators::{AffineOp, MatrixDoc, ProxParams};
use crate::rng::{gaussian, seeded};
use crate::scalar::{lit, Scalar};
use crate::space::Vector;

/// Random orthogonal matrix (Gram-Schmidt on a Gaussian matrix).
fn orthogonal(rng: &mut impl Rng, n: usize) -> Matrix<f64> {
    let mut cols: Vec<Vector<f64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v = gaussian::<f64>(rng, n);
        for _ in 0..2 {
            for c in &cols {
                let proj = v.dot(c);
                v.axpy(-proj, c);
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            cols.push(v.scale(1.0 / norm));
        }
    }
    let mut m = Matrix::zeros(n, n);
    for (j, c) in cols.iter().enumerate() {
        for i in 0..n {
            m.set(i, j, c[i]);
        }
    }
    m
}

/// Skew-symmetric `n x n` matrix with every singular value equal to
/// `delta` (`n` even): `Q diag(J, ..., J) Q^T` with `J = [[0, delta],
/// [-delta, 0]]` and `Q` random orthogonal. For `n = 2` this is `J` itself.
pub fn skew_matrix(dim: usize, delta: f64, seed: u64) -> Result<Matrix<f64>> {
    if dim == 0 || !dim.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("skew operator needs an even dimension, got {dim}")));
    }
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be nonnegative, got {delta}")));
    }
    let mut j = Matrix::zeros(dim, dim);
    for b in 0..dim / 2 {
        j.set(2 * b, 2 * b + 1, delta);
        j.set(2 * b + 1, 2 * b, -delta);
    }
    if dim == 2 {
        // rotations commute with J
        return Ok(j);
    }
    let mut rng = seeded(seed);
    let q = orthogonal(&mut rng, dim);
    let s = q.matmul(&j).matmul(&q.transpose());
    // exact skew-symmetry
    let mut out = Matrix::zeros(dim, dim);
    for r in 0..dim {
        for c in 0..dim {
            out.set(r, c, 0.5 * (s.get(r, c) - s.get(c, r)));
        }
    }
    Ok(out)
}

/// Monotone (skew) linear operator, `delta`-Lipschitz, not cocoercive.
pub fn make_skew_lipschitz<T: Scalar>(dim: usize, delta: f64, seed: u64) -> Result<AffineOp<T>> {
    let m = skew_matrix(dim, delta, seed)?;
    let data = m.data().iter().map(|&v| lit::<T>(v)).collect();
    AffineOp::with_constants(
        Matrix::from_row_major(dim, dim, data)?,
        Vector::zeros(dim),
        lit(delta),
        None,
    )
}

/// Random symmetric PSD matrix scaled so that `lambda_max = top`.
fn psd_matrix(rng: &mut impl Rng, n: usize, top: f64) -> Result<Matrix<f64>> {
    let g = Matrix::from_row_major(n, n, gaussian::<f64>(rng, n * n).into_inner())?;
    let p = g.gram();
    let (_, hi) = p.symmetric_eigen_bounds();
    let mut out = p.scale(top / hi);
    for r in 0..n {
        for c in 0..r {
            let v = 0.5 * (out.get(r, c) + out.get(c, r));
            out.set(r, c, v);
            out.set(c, r, v);
        }
    }
    Ok(out)
}

/// An element of `weight ∂|.|_1 (x)`.
fn l1_subgradient(rng: &mut impl Rng, x: &Vector<f64>, weight: f64) -> Vector<f64> {
    x.iter()
        .map(|&xi| {
            if xi != 0.0 {
                weight * xi.signum()
            } else {
                weight * rng.random_range(-1.0..1.0)
            }
        })
        .collect()
}

/// Sparse Gaussian vector (about a third of the entries zero).
fn sparse(rng: &mut impl Rng, n: usize) -> Vector<f64> {
    let g = gaussian::<f64>(rng, n);
    g.iter()
        .map(|&v| if rng.random_range(0.0..1.0) < 0.33 { 0.0 } else { v })
        .collect()
}

fn affine_doc(q: &Matrix<f64>, shift: &Vector<f64>, lipschitz: f64, cocoercivity: Option<f64>) -> SingleValuedDoc {
    SingleValuedDoc::Affine {
        matrix: MatrixDoc::from_matrix(q),
        shift: shift.to_f64(),
        lipschitz: Some(lipschitz),
        cocoercivity,
    }
}

/// `0 in B x + D x + C x` with a planted solution: `B = w ∂|.|_1`, `D` skew
/// with `|D| = delta`, `C = Q x + c` with `lambda_max(Q) = beta` and `c`
/// chosen so the planted sparse `x*` solves the inclusion. `dim` even.
pub fn planted_composite(seed: u64, dim: usize, delta: f64, beta: f64) -> Result<ProblemDocument> {
    let skew = skew_matrix(dim, delta, seed.wrapping_add(1))?;
    let mut rng = seeded(seed);
    let weight = 0.5;
    let x = sparse(&mut rng, dim);
    let g = l1_subgradient(&mut rng, &x, weight);
    let q = psd_matrix(&mut rng, dim, beta)?;
    // c = -g - D x* - Q x*
    let c = &(&g.scale(-1.0) - &skew.matvec(&x)) - &q.matvec(&x);
    let mut views = BTreeMap::new();
    views.insert(
        "composite".to_string(),
        ViewDoc {
            formulation: FormulationDoc::Composite {
                dim,
                b: SetValuedDoc::new("l1", ProxParams::weight(weight)),
                d: affine_doc(&skew, &Vector::zeros(dim), delta, None),
                c: affine_doc(&q, &c, beta, Some(beta)),
            },
            solution: Some(x.to_f64()),
        },
    );
    Ok(ProblemDocument {
        name: "planted_composite".into(),
        description: format!("planted composite inclusion, dim {dim}, delta = {delta}, beta = {beta}"),
        views,
    })
}

/// Structure of a planted primal-dual instance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlantedPdOptions {
    pub primal_dim: usize,
    pub dual_dim: usize,
    /// `|E|`; zero omits `E`.
    pub delta: f64,
    /// Cocoercivity constant of `F`; zero omits `F`.
    pub beta: f64,
    /// `V = Id` (requires equal dimensions).
    pub identity_coupling: bool,
}

impl Default for PlantedPdOptions {
    fn default() -> Self {
        Self {
            primal_dim: 6,
            dual_dim: 4,
            delta: 0.5,
            beta: 1.0,
            identity_coupling: false,
        }
    }
}

/// Primal-dual inclusion with planted `(y*, z*)`: `B = w_b ∂|.|_1`,
/// `D = w_d ∂|.|_1`, `E` skew, `F` affine PSD, `V` Gaussian (or `Id`).
/// `z*` is taken in `D(V y*)` and the shift of `F` closes the primal line.
/// With `beta = 0` there is no `F`; `B` becomes `y -> y - c` instead,
/// with `c` chosen to close the line.
pub fn planted_primal_dual(seed: u64, options: &PlantedPdOptions) -> Result<ProblemDocument> {
    let (nk, ng) = (options.primal_dim, options.dual_dim);
    if nk == 0 || ng == 0 {
        return Err(Error::InvalidParameter("planted dimensions must be positive".into()));
    }
    if options.identity_coupling && nk != ng {
        return Err(Error::InvalidParameter("V = Id needs equal dimensions".into()));
    }
    let mut rng = seeded(seed);
    let (wb, wd) = (0.4, 0.6);
    let y = sparse(&mut rng, nk);
    let v = if options.identity_coupling {
        Matrix::identity(nk)
    } else {
        Matrix::from_row_major(ng, nk, gaussian::<f64>(&mut rng, ng * nk).into_inner())?
    };
    let vy = v.matvec(&y);
    let z = l1_subgradient(&mut rng, &vy, wd);
    let gb = l1_subgradient(&mut rng, &y, wb);
    let e = if options.delta > 0.0 {
        if nk % 2 != 0 {
            return Err(Error::InvalidParameter("skew E needs an even primal dimension".into()));
        }
        Some(skew_matrix(nk, options.delta, seed.wrapping_add(1))?)
    } else {
        None
    };
    // base = -V* z* - E y*
    let mut base = v.matvec_transpose(&z).scale(-1.0);
    if let Some(e) = &e {
        base = &base - &e.matvec(&y);
    }
    let (f, b) = if options.beta > 0.0 {
        // F y* = base - g_B
        let q = psd_matrix(&mut rng, nk, options.beta)?;
        let shift = &(&base - &gb) - &q.matvec(&y);
        (affine_doc(&q, &shift, options.beta, Some(options.beta)), SetValuedDoc::new("l1", ProxParams::weight(wb)))
    } else {
        // B y* = y* - c = base
        let c = &y - &base;
        let params = ProxParams {
            q_diag: Some(vec![1.0; nk]),
            b: Some(c.to_f64()),
            ..ProxParams::default()
        };
        (SingleValuedDoc::Zero, SetValuedDoc::new("quadratic", params))
    };
    let e_doc = match &e {
        Some(m) => affine_doc(m, &Vector::zeros(nk), options.delta, None),
        None => SingleValuedDoc::Zero,
    };
    let v_doc = if options.identity_coupling {
        LinearDoc::Identity { dim: nk }
    } else {
        LinearDoc::Matrix {
            matrix: MatrixDoc::from_matrix(&v),
            norm_bound: None,
        }
    };
    let mut views = BTreeMap::new();
    views.insert(
        "primal_dual".to_string(),
        ViewDoc {
            formulation: FormulationDoc::PrimalDual {
                b,
                d: SetValuedDoc::new("l1", ProxParams::weight(wd)),
                e: e_doc,
                f,
                v: v_doc,
            },
            solution: Some(y.concat(&z).to_f64()),
        },
    );
    Ok(ProblemDocument {
        name: "planted_primal_dual".into(),
        description: format!(
            "planted primal-dual inclusion, dims {nk} x {ng}, delta = {}, beta = {}",
            options.delta, options.beta
        ),
        views,
    })
}
