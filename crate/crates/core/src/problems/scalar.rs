use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::document::{FormulationDoc, LinearDoc, ProblemDocument, SetValuedDoc, SingleValuedDoc, ViewDoc};
use crate::error::{Error, Result};
use crate::operators::{prox_catalog, ProxParams, SetValuedOp};
use crate::space::Vector;

/// Grid spacing of the scalar root search.
pub const GRID_STEP: f64 = 1e-6;

/// `0 in B x + d x + c (x - center)` on the real line with `B` cataloged,
/// `d >= 0`, `c >= 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarSpec {
    pub b: SetValuedDoc,
    #[serde(default)]
    pub d_slope: f64,
    pub c_slope: f64,
    #[serde(default)]
    pub c_center: f64,
    /// Half-width of the search interval.
    #[serde(default = "default_radius")]
    pub radius: f64,
}

fn default_radius() -> f64 {
    10.0
}

impl ScalarSpec {
    /// `B = ∂|.|`, `D x = 0.5 x`, `C x = x - 2`: solution `2/3`.
    pub fn example() -> Self {
        Self {
            b: SetValuedDoc::new("l1", ProxParams::weight(1.0)),
            d_slope: 0.5,
            c_slope: 1.0,
            c_center: 2.0,
            radius: default_radius(),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !(ok(self.d_slope) && ok(self.c_slope) && self.c_center.is_finite()) {
            return Err(Error::InvalidParameter("scalar slopes must be finite and nonnegative".into()));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::InvalidParameter("radius must be positive".into()));
        }
        Ok(())
    }

    fn smooth(&self, x: f64) -> f64 {
        self.d_slope * x + self.c_slope * (x - self.c_center)
    }
}

/// Locates a zero of `0 in B x + G x` for `G x = d x + c (x - center)`
/// through the nondecreasing map `h(x) = x - J_{tB}(x - t G x)`,
/// `t = 1 / (1 + d + c)`: the first point of a `GRID_STEP` grid on
/// `[-radius, radius]` with `h >= 0` is found by binary search over grid
/// indices, then refined by bisection within its cell.
pub fn scalar_zero(spec: &ScalarSpec) -> Result<f64> {
    spec.validate()?;
    let b = prox_catalog::<f64>(&spec.b.op, &spec.b.params)?;
    let t = 1.0 / (1.0 + spec.d_slope + spec.c_slope);
    let h = |x: f64| -> Result<f64> {
        let p = Vector::from_vec(vec![x - t * spec.smooth(x)]);
        Ok(x - b.resolvent(t, &p)?[0])
    };
    let r = spec.radius;
    let cells = (2.0 * r / GRID_STEP).ceil() as u64;
    let at = |i: u64| -r + (i as f64) * GRID_STEP;
    let not_found = Error::NoZeroFound { lo: -r, hi: r };
    if h(at(cells))? < 0.0 || h(at(0))? > 0.0 {
        return Err(not_found);
    }
    let (mut lo, mut hi) = (0u64, cells);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if h(at(mid))? >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (mut a, mut c) = (at(lo), at(hi));
    if h(a)? >= 0.0 {
        return Ok(a);
    }
    for _ in 0..200 {
        let m = 0.5 * (a + c);
        if m <= a || m >= c {
            break;
        }
        if h(m)? >= 0.0 {
            c = m;
        } else {
            a = m;
        }
    }
    Ok(if h(a)?.abs() <= h(c)?.abs() { a } else { c })
}

/// Scalar problem in three formulations: `composite`, `pd_smooth`
/// (`B' = 0`, `D' = B`, `E = d`, `F = C`, `V = Id`) and `pd_prox`
/// (`B' = ∇ c/2 (. - center)^2`, `D' = B`, `E = d`, `F = 0`, `V = Id`).
pub fn make_scalar_inclusion(spec: &ScalarSpec) -> Result<ProblemDocument> {
    let x = scalar_zero(spec)?;
    let d = if spec.d_slope == 0.0 {
        SingleValuedDoc::Zero
    } else {
        SingleValuedDoc::ScaledShift {
            a: spec.d_slope,
            b: vec![0.0],
        }
    };
    let c = SingleValuedDoc::ScaledShift {
        a: spec.c_slope,
        b: vec![spec.c_center],
    };
    // z* = -(d + C) y* lies in B y*
    let dual = -spec.smooth(x);
    let pd_solution = Some(vec![x, dual]);
    let mut views = BTreeMap::new();
    views.insert(
        "composite".to_string(),
        ViewDoc {
            formulation: FormulationDoc::Composite {
                dim: 1,
                b: spec.b.clone(),
                d: d.clone(),
                c: c.clone(),
            },
            solution: Some(vec![x]),
        },
    );
    views.insert(
        "pd_smooth".to_string(),
        ViewDoc {
            formulation: FormulationDoc::PrimalDual {
                b: SetValuedDoc::zero(),
                d: spec.b.clone(),
                e: d.clone(),
                f: c,
                v: LinearDoc::Identity { dim: 1 },
            },
            solution: pd_solution.clone(),
        },
    );
    let quadratic = ProxParams {
        q_diag: Some(vec![spec.c_slope]),
        b: Some(vec![spec.c_slope * spec.c_center]),
        ..ProxParams::default()
    };
    views.insert(
        "pd_prox".to_string(),
        ViewDoc {
            formulation: FormulationDoc::PrimalDual {
                b: SetValuedDoc::new("quadratic", quadratic),
                d: spec.b.clone(),
                e: d,
                f: SingleValuedDoc::Zero,
                v: LinearDoc::Identity { dim: 1 },
            },
            solution: pd_solution,
        },
    );
    Ok(ProblemDocument {
        name: "scalar".into(),
        description: format!(
            "0 in {}(x) + {} x + {} (x - {}) on the real line",
            spec.b.op, spec.d_slope, spec.c_slope, spec.c_center
        ),
        views,
    })
}
