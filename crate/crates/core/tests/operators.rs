mod common;

use std::sync::Arc;

use common::{dev, dmat_of, dvec, soft};
use nalgebra::{DMatrix, DVector};
use nofob::operators::{
    estimate_operator_norm, moreau_split, prox_catalog, resolvent_of_inverse, verify_adjoint,
    verify_operator_properties, verify_resolvent, AffineOp, DeclaredConstants, MatrixDoc, MatrixOp, Prox, ProxParams,
    ScaledShift, SetValuedOp, SingleValuedOp, SumOp,
};
use nofob::problems::skew_matrix;
use nofob::rng::{gaussian, seeded};
use nofob::space::{DiagonalMetric, IdentityMetric, Vector};
use nofob::{Error, Matrix64};

const DIM: usize = 6;

fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix64 {
    Matrix64::from_row_major(rows, cols, gaussian::<f64>(&mut seeded(seed), rows * cols).into_inner()).unwrap()
}

fn doc(m: &Matrix64) -> MatrixDoc {
    MatrixDoc::from_matrix(m)
}

type Oracle = Box<dyn Fn(f64, &DVector<f64>) -> DVector<f64>>;

/// Every cataloged operator on `DIM` coordinates with an independent
/// closed-form resolvent.
fn catalog() -> Vec<(&'static str, ProxParams, Oracle)> {
    let lo = vec![-0.5, -1.0, 0.0, -2.0, 0.3, -0.1];
    let hi = vec![0.5, 2.0, 0.0, 1.0, 0.4, 3.0];
    let g = dmat_of(&random_matrix(DIM, DIM, 1));
    let q = g.transpose() * &g;
    let b: Vec<f64> = gaussian::<f64>(&mut seeded(2), DIM).into_inner();
    let a = random_matrix(2, DIM, 3);
    let ab: Vec<f64> = vec![0.7, -1.2];
    let center: Vec<f64> = gaussian::<f64>(&mut seeded(4), DIM).into_inner();
    let qm = Matrix64::from_row_major(DIM, DIM, q.transpose().as_slice().to_vec()).unwrap();
    let (lo2, hi2) = (DVector::from_vec(lo.clone()), DVector::from_vec(hi.clone()));
    let (qd, bd) = (q.clone(), DVector::from_vec(b.clone()));
    let ad = dmat_of(&a);
    let abd = DVector::from_vec(ab.clone());
    let cd = DVector::from_vec(center.clone());
    let diag = vec![0.0, 1.0, 2.0, 0.5, 3.0, 0.1];
    let dd = DVector::from_vec(diag.clone());
    let bd2 = bd.clone();
    vec![
        ("zero", ProxParams::default(), Box::new(|_t, p: &DVector<f64>| p.clone())),
        ("l1", ProxParams::weight(0.7), Box::new(|t, p: &DVector<f64>| soft(p, 0.7 * t))),
        (
            "box_indicator",
            ProxParams {
                lo: Some(lo),
                hi: Some(hi),
                ..ProxParams::default()
            },
            Box::new(move |_t, p: &DVector<f64>| p.zip_zip_map(&lo2, &hi2, |x, l, h| x.clamp(l, h))),
        ),
        (
            "quadratic",
            ProxParams {
                q: Some(doc(&qm)),
                b: Some(b.clone()),
                ..ProxParams::default()
            },
            Box::new(move |t, p: &DVector<f64>| {
                let m = DMatrix::identity(DIM, DIM) + &qd * t;
                m.lu().solve(&(p + &bd * t)).unwrap()
            }),
        ),
        (
            "quadratic",
            ProxParams {
                q_diag: Some(diag),
                b: Some(b),
                ..ProxParams::default()
            },
            Box::new(move |t, p: &DVector<f64>| {
                DVector::from_fn(DIM, |i, _| (p[i] + t * bd2[i]) / (1.0 + t * dd[i]))
            }),
        ),
        (
            "affine_subspace",
            ProxParams {
                a: Some(doc(&a)),
                b: Some(ab),
                ..ProxParams::default()
            },
            Box::new(move |_t, p: &DVector<f64>| {
                let gram = &ad * ad.transpose();
                let lambda = gram.lu().solve(&(&ad * p - &abd)).unwrap();
                p - ad.transpose() * lambda
            }),
        ),
        (
            "subdifferential_abs",
            ProxParams {
                center: Some(center),
                weight: Some(1.3),
                ..ProxParams::default()
            },
            Box::new(move |t, p: &DVector<f64>| soft(&(p - &cd), 1.3 * t) + &cd),
        ),
        (
            "group_l21",
            ProxParams {
                weight: Some(0.4),
                group_len: Some(2),
                ..ProxParams::default()
            },
            Box::new(|t, p: &DVector<f64>| {
                let m = DIM / 2;
                let mut out = p.clone();
                for i in 0..m {
                    let n = p[i].hypot(p[i + m]);
                    let f = if n > 0.4 * t { 1.0 - 0.4 * t / n } else { 0.0 };
                    out[i] *= f;
                    out[i + m] *= f;
                }
                out
            }),
        ),
    ]
}

#[test]
fn catalog_resolvents_match_closed_forms() {
    let mut rng = seeded(5);
    for (name, params, oracle) in catalog() {
        let op = prox_catalog::<f64>(name, &params).unwrap();
        for _ in 0..1000 {
            let p: Vector<f64> = gaussian::<f64>(&mut rng, DIM).scale(3.0);
            let t = 0.05 + 2.0 * rng_unit(&mut rng);
            let ours = op.resolvent(t, &p).unwrap();
            assert!(dev(&ours, &oracle(t, &dvec(&p))) <= 1e-10, "{name}");
            // p - J p lies in t A (J p)
            let w = (&p - &ours).scale(1.0 / t);
            assert!(op.membership_residual(&ours, &w).unwrap() <= 1e-9, "{name}");
        }
    }
}

fn rng_unit(rng: &mut impl rand::Rng) -> f64 {
    rng.random_range(0.0..1.0)
}

#[test]
fn catalog_resolvents_are_firmly_nonexpansive() {
    for (name, params, _) in catalog() {
        let op = prox_catalog::<f64>(name, &params).unwrap();
        for step in [0.1, 1.0, 10.0] {
            let report = verify_resolvent(&op, DIM, step, 1000, 7);
            assert!(report.passed(), "{name}: {report:?}");
        }
    }
}

#[test]
fn catalog_resolvents_accept_huge_inputs() {
    let mut rng = seeded(8);
    for (name, params, _) in catalog() {
        let op = prox_catalog::<f64>(name, &params).unwrap();
        for scale in [1e100, 1e150] {
            let p = gaussian::<f64>(&mut rng, DIM).scale(scale);
            assert!(op.resolvent(1.0, &p).unwrap().is_finite(), "{name} at {scale:e}");
        }
    }
}

#[test]
fn catalog_rejects_bad_parameters() {
    assert!(matches!(prox_catalog::<f64>("nope", &ProxParams::default()), Err(Error::UnknownOperator(_))));
    assert!(prox_catalog::<f64>("l1", &ProxParams::weight(-1.0)).is_err());
    let swapped = ProxParams {
        lo: Some(vec![1.0]),
        hi: Some(vec![0.0]),
        ..ProxParams::default()
    };
    assert!(prox_catalog::<f64>("box_indicator", &swapped).is_err());
    let indefinite = ProxParams {
        q_diag: Some(vec![1.0, -1.0]),
        ..ProxParams::default()
    };
    assert!(prox_catalog::<f64>("quadratic", &indefinite).is_err());
    let l1 = prox_catalog::<f64>("l1", &ProxParams::weight(1.0)).unwrap();
    assert!(l1.resolvent(-1.0, &Vector::from_f64(&[1.0])).is_err());
}

/// Doubles its input: not a resolvent of anything monotone.
struct Expanding;

impl SetValuedOp<f64> for Expanding {
    fn dim(&self) -> Option<usize> {
        None
    }

    fn resolvent(&self, _step: f64, point: &Vector<f64>) -> nofob::Result<Vector<f64>> {
        Ok(point.scale(2.0))
    }

    fn describe(&self) -> String {
        "2 Id".into()
    }
}

/// Rotates by a quarter turn: nonexpansive but not firmly so.
struct Rotating;

impl SetValuedOp<f64> for Rotating {
    fn dim(&self) -> Option<usize> {
        Some(2)
    }

    fn resolvent(&self, _step: f64, p: &Vector<f64>) -> nofob::Result<Vector<f64>> {
        Ok(Vector::from_f64(&[-p[1], p[0]]))
    }

    fn describe(&self) -> String {
        "rotation".into()
    }
}

#[test]
fn fake_resolvents_are_caught() {
    assert!(!verify_resolvent(&Expanding, 4, 1.0, 100, 1).passed());
    assert!(!verify_resolvent(&Rotating, 2, 1.0, 100, 1).passed());
}

fn check(op: &dyn SingleValuedOp<f64>, declared: &DeclaredConstants<f64>, n: usize) -> nofob::operators::PropertyReport {
    verify_operator_properties(op, &IdentityMetric::new(n), declared, 1000, 3)
}

#[test]
fn honest_constants_pass() {
    let id = ScaledShift::new(1.0, Vector::zeros(4)).unwrap();
    let r = check(&id, &DeclaredConstants::of(&id), 4);
    assert!(r.passed(), "{:?}", r.violations);
    assert!((r.worst_lipschitz_ratio - 1.0).abs() <= 1e-12);

    // gradient of 1/2 |x - b|^2: 1-Lipschitz and 1-cocoercive
    let grad = ScaledShift::new(1.0, Vector::from_f64(&[1.0, -2.0, 3.0])).unwrap();
    let r = check(&grad, &DeclaredConstants::of(&grad), 3);
    assert!(r.passed());
    assert!(r.three_point_margin.unwrap() >= 0.0);

    let q = random_matrix(5, 5, 9).gram();
    let psd = AffineOp::symmetric_psd(q, Vector::from_f64(&[1.0; 5])).unwrap();
    let r = check(&psd, &DeclaredConstants::of(&psd), 5);
    assert!(r.passed(), "{:?}", r.violations);
    assert!(r.three_point_margin.unwrap() >= -1e-12);

    let skew = AffineOp::general(skew_matrix(6, 0.8, 2).unwrap(), Vector::zeros(6)).unwrap();
    assert!((skew.lipschitz() - 0.8).abs() <= 1e-9);
    assert!(check(&skew, &DeclaredConstants::of(&skew), 6).passed());
}

#[test]
fn false_constants_are_flagged() {
    let three = AffineOp::with_constants(Matrix64::identity(3).scale(3.0), Vector::zeros(3), 2.0, None).unwrap();
    let r = check(&three, &DeclaredConstants::of(&three), 3);
    assert!(!r.passed());
    assert!(r.violations.iter().any(|v| v.starts_with("Lipschitz")));

    let skew = AffineOp::with_constants(skew_matrix(4, 1.0, 1).unwrap(), Vector::zeros(4), 1.0, Some(1.0)).unwrap();
    let r = check(&skew, &DeclaredConstants::of(&skew), 4);
    assert!(r.violations.iter().any(|v| v.starts_with("cocoercivity")));
    assert!(r.violations.iter().any(|v| v.starts_with("three-point")));

    // Q singular: not strongly monotone
    let q = Matrix64::diagonal(&[1.0, 0.0]);
    let op = AffineOp::symmetric_psd(q, Vector::zeros(2)).unwrap();
    let declared = DeclaredConstants {
        strong_monotonicity: Some(0.5),
        ..DeclaredConstants::of(&op)
    };
    assert!(check(&op, &declared, 2).violations.iter().any(|v| v.starts_with("monotonicity")));
}

#[test]
fn properties_in_a_weighted_metric() {
    // 2 Id is 2-Lipschitz in the Euclidean metric and 1-Lipschitz
    // (|Cx|_{S^-1} / |x|_S) with S = 2 Id
    let op = ScaledShift::new(2.0, Vector::zeros(3)).unwrap();
    let s = DiagonalMetric::new(vec![2.0; 3]).unwrap();
    let declared = DeclaredConstants {
        lipschitz: Some(1.0),
        cocoercivity: None,
        strong_monotonicity: None,
    };
    let r = verify_operator_properties(&op, &s, &declared, 200, 1);
    assert!(r.passed());
    assert!((r.worst_lipschitz_ratio - 1.0).abs() <= 1e-12);
}

#[test]
fn sum_of_operators() {
    let a: Arc<dyn SingleValuedOp<f64>> = Arc::new(ScaledShift::new(1.0, Vector::from_f64(&[1.0, 1.0])).unwrap());
    let b: Arc<dyn SingleValuedOp<f64>> = Arc::new(ScaledShift::new(2.0, Vector::zeros(2)).unwrap());
    let sum = SumOp::new(vec![a, b]);
    let x = Vector::from_f64(&[3.0, -1.0]);
    assert_eq!(sum.eval(&x).as_slice(), &[2.0 + 6.0, -2.0 - 2.0]);
    assert!(check(&sum, &DeclaredConstants::of(&sum), 2).passed());
}

#[test]
fn matrix_norm_estimate_matches_svd() {
    let m = random_matrix(8, 5, 12);
    let top = dmat_of(&m).singular_values().max();
    let op = MatrixOp::new(m);
    let est = estimate_operator_norm::<f64>(&op, 1000, 13).unwrap();
    assert!((est.raw - top).abs() <= 1e-6 * top);
    assert!(est.bound >= top);
    assert!(verify_adjoint::<f64>(&op, 100, 1) <= 1e-14);
    assert!(estimate_operator_norm::<f64>(&op, 0, 1).is_err());
}

#[test]
fn moreau_decomposition() {
    let mut rng = seeded(14);
    for (name, params, _) in catalog() {
        let op = prox_catalog::<f64>(name, &params).unwrap();
        for sigma in [0.3, 1.0, 4.0] {
            let p = gaussian::<f64>(&mut rng, DIM).scale(2.0);
            let (outer, inner) = moreau_split(&op, sigma, &p).unwrap();
            assert!((&outer + &inner).dist_inf(&p) <= 1e-14 * (1.0 + p.norm_inf()), "{name}");
        }
    }
    // D = w ∂|.|_1: (Id + sigma D^{-1})^{-1} projects onto [-w, w]
    let l1 = Prox::L1 { weight: 0.6 };
    let p = Vector::from_f64(&[2.0, -0.1, -5.0, 0.59]);
    let out = resolvent_of_inverse(&l1, 0.5, &p).unwrap();
    assert!(out.dist_inf(&Vector::from_f64(&[0.6, -0.1, -0.6, 0.59])) <= 1e-15);
    // D = 0: D^{-1} is the normal cone of {0}
    assert!(resolvent_of_inverse(&Prox::<f64>::Zero, 2.0, &p).unwrap().is_zero());
    assert!(moreau_split(&l1, 0.0, &p).is_err());
}
