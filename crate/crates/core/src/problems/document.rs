use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::methods::{CompositeForm, Formulation, PrimalDualProblem};
use crate::operators::{
    prox_catalog, AffineOp, Gradient2d, IdentityOp, LinearRef, MatrixDoc, MatrixOp, ProxParams,
    ScaledShift, SetValuedRef, SingleValuedRef, ZeroOp,
};
use crate::scalar::{lit, Scalar};
use crate::space::Vector;

/// A cataloged set-valued operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetValuedDoc {
    pub op: String,
    #[serde(default)]
    pub params: ProxParams,
}

impl SetValuedDoc {
    pub fn new(op: &str, params: ProxParams) -> Self {
        Self {
            op: op.to_string(),
            params,
        }
    }

    pub fn zero() -> Self {
        Self::new("zero", ProxParams::default())
    }

    pub fn build<T: Scalar>(&self) -> Result<SetValuedRef<T>> {
        Ok(Arc::new(prox_catalog::<T>(&self.op, &self.params)?))
    }
}

/// A single-valued operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SingleValuedDoc {
    Zero,
    /// `x -> a (x - b)`
    ScaledShift { a: f64, b: Vec<f64> },
    /// `x -> Q x + shift`. Without declared constants, symmetric PSD
    /// matrices get `L = l = lambda_max` and others `L = |Q|`.
    Affine {
        matrix: MatrixDoc,
        shift: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lipschitz: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cocoercivity: Option<f64>,
    },
}

impl SingleValuedDoc {
    pub fn build<T: Scalar>(&self) -> Result<SingleValuedRef<T>> {
        let vec = |v: &[f64]| Vector::<T>::new(v.iter().map(|&c| lit(c)).collect());
        Ok(match self {
            Self::Zero => Arc::new(ZeroOp),
            Self::ScaledShift { a, b } => Arc::new(ScaledShift::new(lit(*a), vec(b)?)?),
            Self::Affine {
                matrix,
                shift,
                lipschitz,
                cocoercivity,
            } => {
                let q = matrix.to_matrix::<T>()?;
                let c = vec(shift)?;
                match lipschitz {
                    Some(l) => Arc::new(AffineOp::with_constants(q, c, lit(*l), cocoercivity.map(lit))?),
                    None if cocoercivity.is_some() => {
                        return Err(Error::Document(
                            "affine operator declares cocoercivity without lipschitz".into(),
                        ))
                    }
                    None => match AffineOp::symmetric_psd(q.clone(), c.clone()) {
                        Ok(op) => Arc::new(op),
                        Err(_) => Arc::new(AffineOp::general(q, c)?),
                    },
                }
            }
        })
    }
}

/// A bounded linear map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LinearDoc {
    Identity {
        dim: usize,
    },
    Matrix {
        matrix: MatrixDoc,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        norm_bound: Option<f64>,
    },
    Gradient2d {
        width: usize,
        height: usize,
    },
}

impl LinearDoc {
    pub fn build<T: Scalar>(&self) -> Result<LinearRef<T>> {
        Ok(match self {
            Self::Identity { dim } => Arc::new(IdentityOp { dim: *dim }),
            Self::Matrix { matrix, norm_bound } => {
                let op = MatrixOp::new(matrix.to_matrix::<T>()?);
                match norm_bound {
                    Some(b) => Arc::new(op.with_norm_bound(lit(*b))),
                    None => Arc::new(op),
                }
            }
            Self::Gradient2d { width, height } => Arc::new(Gradient2d {
                width: *width,
                height: *height,
            }),
        })
    }
}

/// A problem formulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[allow(clippy::large_enum_variant)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum FormulationDoc {
    /// `0 in B x + D x + C x`
    Composite {
        dim: usize,
        b: SetValuedDoc,
        d: SingleValuedDoc,
        c: SingleValuedDoc,
    },
    /// `0 in B y + V* z + E y + F y`, `0 in D^{-1} z - V y`
    PrimalDual {
        b: SetValuedDoc,
        d: SetValuedDoc,
        e: SingleValuedDoc,
        f: SingleValuedDoc,
        v: LinearDoc,
    },
}

impl FormulationDoc {
    pub fn build<T: Scalar>(&self) -> Result<Formulation<T>> {
        Ok(match self {
            Self::Composite { dim, b, d, c } => {
                Formulation::Composite(CompositeForm::new(b.build()?, d.build()?, c.build()?, *dim)?)
            }
            Self::PrimalDual { b, d, e, f, v } => Formulation::PrimalDual(PrimalDualProblem::new(
                b.build()?,
                d.build()?,
                e.build()?,
                f.build()?,
                v.build()?,
            )?),
        })
    }
}

/// One formulation of a problem together with a known solution
/// (`x*`, or `(y*, z*)` flattened).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewDoc {
    pub formulation: FormulationDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution: Option<Vec<f64>>,
}

/// A self-contained, serializable test problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDocument {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub views: BTreeMap<String, ViewDoc>,
}

impl ProblemDocument {
    pub fn view(&self, name: &str) -> Result<&ViewDoc> {
        self.views.get(name).ok_or_else(|| {
            Error::Document(format!(
                "problem `{}` has no view `{name}` (available: {})",
                self.name,
                self.views.keys().cloned().collect::<Vec<_>>().join(", ")
            ))
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem documents serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))
    }
}

impl ViewDoc {
    pub fn build<T: Scalar>(&self) -> Result<Formulation<T>> {
        self.formulation.build()
    }

    pub fn solution<T: Scalar>(&self) -> Option<Vector<T>> {
        self.solution
            .as_ref()
            .map(|s| s.iter().map(|&c| lit(c)).collect())
    }
}
