use serde::{Deserialize, Serialize};

use super::SetValuedOp;
use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix};
use crate::scalar::{lit, Scalar};
use crate::space::Vector;

/// Row-major matrix as stored in parameter and problem documents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatrixDoc {
    pub fn to_matrix<T: Scalar>(&self) -> Result<Matrix<T>> {
        Matrix::from_row_major(self.rows, self.cols, self.data.iter().map(|&v| lit(v)).collect())
    }

    pub fn from_matrix<T: Scalar>(m: &Matrix<T>) -> Self {
        Self {
            rows: m.rows(),
            cols: m.cols(),
            data: m.data().iter().map(|&v| crate::scalar::to_f64(v)).collect(),
        }
    }
}

/// Parameters accepted by [`prox_catalog`]. Unused fields must be absent.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProxParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<MatrixDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_diag: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<MatrixDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_len: Option<usize>,
}

impl ProxParams {
    pub fn weight(w: f64) -> Self {
        Self {
            weight: Some(w),
            ..Self::default()
        }
    }

    /// `Q = Id`, `b = 0` on dimension `n`.
    pub fn quadratic_identity(n: usize) -> Self {
        Self {
            q_diag: Some(vec![1.0; n]),
            b: Some(vec![0.0; n]),
            ..Self::default()
        }
    }
}

/// Storage of the quadratic form `Q` in `x -> 1/2 <Qx, x> - <b, x>`.
#[derive(Clone, Debug)]
pub enum QuadForm<T> {
    Dense(Matrix<T>),
    Diagonal(Vec<T>),
}

/// Maximally monotone operators with analytic resolvents (proximal maps).
#[derive(Clone, Debug)]
pub enum Prox<T> {
    /// `A = 0`
    Zero,
    /// `A = weight * ∂|.|_1`, resolvent is soft thresholding.
    L1 { weight: T },
    /// Normal cone of the box `[lo, hi]` (bounds of length one broadcast).
    BoxIndicator { lo: Vec<T>, hi: Vec<T> },
    /// Gradient of `1/2 <Qx, x> - <b, x>` with `Q` symmetric positive
    /// semidefinite.
    Quadratic { q: QuadForm<T>, b: Vector<T> },
    /// Normal cone of `{x : Ax = b}`, `A` with full row rank.
    AffineSubspace {
        a: Matrix<T>,
        b: Vector<T>,
        gram: Cholesky<T>,
    },
    /// `weight * ∂|. - center|_1`
    SubdifferentialAbs { center: Vector<T>, weight: T },
    /// `weight * ∂|.|_{2,1}` where group `i` holds coordinates
    /// `i, i + m, ..., i + (group_len - 1) m` for `m = dim / group_len`.
    GroupL21 { weight: T, group_len: usize },
}

fn soft<T: Scalar>(x: T, t: T) -> T {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        T::zero()
    }
}

fn vec_param<T: Scalar>(name: &str, v: &Option<Vec<f64>>) -> Result<Vector<T>> {
    let v = v
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter(format!("missing `{name}`")))?;
    Vector::new(v.iter().map(|&c| lit(c)).collect())
}

/// Builds a cataloged operator from its name and parameters.
pub fn prox_catalog<T: Scalar>(name: &str, params: &ProxParams) -> Result<Prox<T>> {
    let nonneg_weight = |default: Option<f64>| -> Result<T> {
        let w = params
            .weight
            .or(default)
            .ok_or_else(|| Error::InvalidParameter(format!("{name}: missing `weight`")))?;
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "{name}: weight must be nonnegative, got {w}"
            )));
        }
        Ok(lit(w))
    };
    match name {
        "zero" => Ok(Prox::Zero),
        "l1" => Ok(Prox::L1 {
            weight: nonneg_weight(None)?,
        }),
        "box_indicator" => {
            let lo: Vector<T> = vec_param("lo", &params.lo)?;
            let hi: Vector<T> = vec_param("hi", &params.hi)?;
            if lo.dim() != hi.dim() || lo.dim() == 0 {
                return Err(Error::InvalidParameter(
                    "box_indicator: `lo` and `hi` must have equal nonzero length".into(),
                ));
            }
            if lo.iter().zip(hi.iter()).any(|(l, h)| l > h) {
                return Err(Error::InvalidParameter("box_indicator: lo > hi".into()));
            }
            Ok(Prox::BoxIndicator {
                lo: lo.into_inner(),
                hi: hi.into_inner(),
            })
        }
        "quadratic" => {
            let q = match (&params.q, &params.q_diag) {
                (Some(m), None) => {
                    let m: Matrix<T> = m.to_matrix()?;
                    if m.rows() != m.cols() {
                        return Err(Error::InvalidParameter("quadratic: Q must be square".into()));
                    }
                    let tol = lit::<T>(1e-12) * (T::one() + m.max_abs());
                    if m.asymmetry() > tol {
                        return Err(Error::InvalidParameter("quadratic: Q not symmetric".into()));
                    }
                    let (lo, _) = m.symmetric_eigen_bounds();
                    if lo < -tol {
                        return Err(Error::InvalidParameter(format!(
                            "quadratic: Q is not positive semidefinite (eigenvalue {lo:e})"
                        )));
                    }
                    QuadForm::Dense(m)
                }
                (None, Some(d)) => {
                    if d.iter().any(|&x| !(x.is_finite() && x >= 0.0)) {
                        return Err(Error::InvalidParameter(
                            "quadratic: diagonal Q must be nonnegative".into(),
                        ));
                    }
                    QuadForm::Diagonal(d.iter().map(|&x| lit(x)).collect())
                }
                _ => {
                    return Err(Error::InvalidParameter(
                        "quadratic: exactly one of `q`, `q_diag` required".into(),
                    ))
                }
            };
            let n = match &q {
                QuadForm::Dense(m) => m.rows(),
                QuadForm::Diagonal(d) => d.len(),
            };
            let b = match &params.b {
                Some(_) => vec_param("b", &params.b)?,
                None => Vector::zeros(n),
            };
            b.check_dim(n)?;
            Ok(Prox::Quadratic { q, b })
        }
        "affine_subspace" => {
            let a: Matrix<T> = params
                .a
                .as_ref()
                .ok_or_else(|| Error::InvalidParameter("affine_subspace: missing `a`".into()))?
                .to_matrix()?;
            let b: Vector<T> = vec_param("b", &params.b)?;
            b.check_dim(a.rows())?;
            let gram = Cholesky::new(&a.matmul(&a.transpose())).map_err(|_| {
                Error::InvalidParameter("affine_subspace: `a` must have full row rank".into())
            })?;
            Ok(Prox::AffineSubspace { a, b, gram })
        }
        "subdifferential_abs" => {
            let center = match &params.center {
                Some(_) => vec_param("center", &params.center)?,
                None => Vector::zeros(1),
            };
            Ok(Prox::SubdifferentialAbs {
                center,
                weight: nonneg_weight(Some(1.0))?,
            })
        }
        "group_l21" => {
            let group_len = params
                .group_len
                .filter(|&g| g > 0)
                .ok_or_else(|| Error::InvalidParameter("group_l21: `group_len` >= 1 required".into()))?;
            Ok(Prox::GroupL21 {
                weight: nonneg_weight(None)?,
                group_len,
            })
        }
        other => Err(Error::UnknownOperator(other.to_string())),
    }
}

impl<T: Scalar> Prox<T> {
    pub fn catalog_name(&self) -> &'static str {
        match self {
            Prox::Zero => "zero",
            Prox::L1 { .. } => "l1",
            Prox::BoxIndicator { .. } => "box_indicator",
            Prox::Quadratic { .. } => "quadratic",
            Prox::AffineSubspace { .. } => "affine_subspace",
            Prox::SubdifferentialAbs { .. } => "subdifferential_abs",
            Prox::GroupL21 { .. } => "group_l21",
        }
    }

    /// Parameters reproducing this operator through [`prox_catalog`].
    pub fn params(&self) -> ProxParams {
        let f = |v: &[T]| v.iter().map(|&c| crate::scalar::to_f64(c)).collect::<Vec<_>>();
        match self {
            Prox::Zero => ProxParams::default(),
            Prox::L1 { weight } => ProxParams::weight(crate::scalar::to_f64(*weight)),
            Prox::BoxIndicator { lo, hi } => ProxParams {
                lo: Some(f(lo)),
                hi: Some(f(hi)),
                ..ProxParams::default()
            },
            Prox::Quadratic { q, b } => {
                let mut p = ProxParams {
                    b: Some(b.to_f64()),
                    ..ProxParams::default()
                };
                match q {
                    QuadForm::Dense(m) => p.q = Some(MatrixDoc::from_matrix(m)),
                    QuadForm::Diagonal(d) => p.q_diag = Some(f(d)),
                }
                p
            }
            Prox::AffineSubspace { a, b, .. } => ProxParams {
                a: Some(MatrixDoc::from_matrix(a)),
                b: Some(b.to_f64()),
                ..ProxParams::default()
            },
            Prox::SubdifferentialAbs { center, weight } => ProxParams {
                center: Some(center.to_f64()),
                weight: Some(crate::scalar::to_f64(*weight)),
                ..ProxParams::default()
            },
            Prox::GroupL21 { weight, group_len } => ProxParams {
                weight: Some(crate::scalar::to_f64(*weight)),
                group_len: Some(*group_len),
                ..ProxParams::default()
            },
        }
    }

    fn bound(v: &[T], i: usize) -> T {
        if v.len() == 1 {
            v[0]
        } else {
            v[i]
        }
    }
}

impl<T: Scalar> SetValuedOp<T> for Prox<T> {
    fn dim(&self) -> Option<usize> {
        match self {
            Prox::Zero | Prox::L1 { .. } | Prox::GroupL21 { .. } => None,
            Prox::BoxIndicator { lo, .. } => (lo.len() > 1).then_some(lo.len()),
            Prox::Quadratic { b, .. } => Some(b.dim()),
            Prox::AffineSubspace { a, .. } => Some(a.cols()),
            Prox::SubdifferentialAbs { center, .. } => (center.dim() > 1).then_some(center.dim()),
        }
    }

    fn resolvent(&self, step: T, p: &Vector<T>) -> Result<Vector<T>> {
        if !(step > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "resolvent step must be positive, got {step}"
            )));
        }
        if let Some(n) = self.dim() {
            p.check_dim(n)?;
        }
        let out = match self {
            Prox::Zero => p.clone(),
            Prox::L1 { weight } => {
                let t = step * *weight;
                p.map(|x| soft(x, t))
            }
            Prox::BoxIndicator { lo, hi } => p
                .iter()
                .enumerate()
                .map(|(i, &x)| x.max(Self::bound(lo, i)).min(Self::bound(hi, i)))
                .collect(),
            Prox::Quadratic { q, b } => {
                let rhs = p.lincomb(T::one(), step, b);
                match q {
                    QuadForm::Diagonal(d) => rhs
                        .iter()
                        .zip(d)
                        .map(|(&r, &qi)| r / (T::one() + step * qi))
                        .collect(),
                    QuadForm::Dense(m) => {
                        let sys = Matrix::identity(m.rows()).add_scaled(step, m);
                        Cholesky::new(&sys)?.solve(&rhs)
                    }
                }
            }
            Prox::AffineSubspace { a, b, gram } => {
                let defect = &a.matvec(p) - b;
                let mult = gram.solve(&defect);
                p - &a.matvec_transpose(&mult)
            }
            Prox::SubdifferentialAbs { center, weight } => {
                let t = step * *weight;
                p.iter()
                    .enumerate()
                    .map(|(i, &x)| {
                        let c = if center.dim() == 1 { center[0] } else { center[i] };
                        c + soft(x - c, t)
                    })
                    .collect()
            }
            Prox::GroupL21 { weight, group_len } => {
                let g = *group_len;
                if !p.dim().is_multiple_of(g) {
                    return Err(Error::DimensionMismatch {
                        expected: g * (p.dim() / g + 1),
                        found: p.dim(),
                    });
                }
                let m = p.dim() / g;
                let t = step * *weight;
                let mut out = p.clone();
                for i in 0..m {
                    let norm = (0..g).map(|j| p[i + j * m] * p[i + j * m]).sum::<T>().sqrt();
                    let factor = if norm > t { T::one() - t / norm } else { T::zero() };
                    for j in 0..g {
                        out[i + j * m] = p[i + j * m] * factor;
                    }
                }
                out
            }
        };
        Ok(out)
    }

    fn describe(&self) -> String {
        match self {
            Prox::Zero => "0".into(),
            Prox::L1 { weight } => format!("{weight}*∂|.|_1"),
            Prox::BoxIndicator { .. } => "N_box".into(),
            Prox::Quadratic { .. } => "∇(1/2<Qx,x> - <b,x>)".into(),
            Prox::AffineSubspace { a, .. } => format!("N_{{Ax=b}} ({} constraints)", a.rows()),
            Prox::SubdifferentialAbs { weight, .. } => format!("{weight}*∂|. - c|"),
            Prox::GroupL21 { weight, group_len } => format!("{weight}*∂|.|_(2,1) (groups of {group_len})"),
        }
    }

    fn is_zero(&self) -> bool {
        matches!(self, Prox::Zero)
    }
}
