//! Direct transcriptions of the methods' update formulas, written against
//! dense nalgebra data only.

use nalgebra::{DMatrix, DVector};

pub type Map<'a> = &'a dyn Fn(&DVector<f64>) -> DVector<f64>;
/// `(step, point) -> (Id + step A)^{-1} point`
pub type Resolvent<'a> = &'a dyn Fn(f64, &DVector<f64>) -> DVector<f64>;

/// Forward-half-reflected-backward:
/// `x+ = J_{a_k B}(x + theta (x - x_-) - a_k C x - (a_k + a_{k-1}) D x + a_{k-1} D x_-)`,
/// started with `x_{-1} = x_0`.
pub fn fhrb(
    jb: Resolvent,
    d: Map,
    c: Map,
    alpha: &dyn Fn(usize) -> f64,
    theta: f64,
    x0: &DVector<f64>,
    n: usize,
) -> Vec<DVector<f64>> {
    let mut x = x0.clone();
    let mut x_prev = x0.clone();
    let mut out = vec![x.clone()];
    for k in 0..n {
        let a = alpha(k);
        let ap = alpha(k.saturating_sub(1));
        let p = &x + (&x - &x_prev) * theta - c(&x) * a - d(&x) * (a + ap) + d(&x_prev) * ap;
        let next = jb(a, &p);
        x_prev = std::mem::replace(&mut x, next);
        out.push(x.clone());
    }
    out
}

/// Vu-Condat:
/// `y+ = J_{tau B}(y - tau F y - tau V^T z)`,
/// `z+ = (Id + sigma D^{-1})^{-1}(z + sigma V (2 y+ - y))`.
/// Returns stacked `(y, z)` iterates.
#[allow(clippy::too_many_arguments)]
pub fn vu_condat(
    jb: Resolvent,
    jdinv: Resolvent,
    f: Map,
    v: &DMatrix<f64>,
    tau: f64,
    sigma: f64,
    y0: &DVector<f64>,
    z0: &DVector<f64>,
    n: usize,
) -> Vec<DVector<f64>> {
    let (mut y, mut z) = (y0.clone(), z0.clone());
    let mut out = vec![stack(&y, &z)];
    for _ in 0..n {
        let y_next = jb(tau, &(&y - f(&y) * tau - v.transpose() * &z * tau));
        let bar = &y_next * 2.0 - &y;
        z = jdinv(sigma, &(&z + v * bar * sigma));
        y = y_next;
        out.push(stack(&y, &z));
    }
    out
}

/// Half-reflected Douglas-Rachford (`V = Id`):
/// `y+ = J_{tau B}(y - tau (2 E y - E y_-) - tau F y - tau z)`,
/// `yhat = J_{varsigma D}(varsigma z + 2 y+ - y)`,
/// `z+ = z + (2 y+ - y - yhat) / varsigma`.
#[allow(clippy::too_many_arguments)]
pub fn fhrdr(
    jb: Resolvent,
    jd: Resolvent,
    e: Map,
    f: Map,
    tau: f64,
    varsigma: f64,
    y0: &DVector<f64>,
    z0: &DVector<f64>,
    n: usize,
) -> Vec<DVector<f64>> {
    let (mut y, mut z) = (y0.clone(), z0.clone());
    let mut y_prev = y0.clone();
    let mut out = vec![stack(&y, &z)];
    for _ in 0..n {
        let p = &y - (e(&y) * 2.0 - e(&y_prev)) * tau - f(&y) * tau - &z * tau;
        let y_next = jb(tau, &p);
        let point = &z * varsigma + &y_next * 2.0 - &y;
        let yhat = jd(varsigma, &point);
        z = &z + (&y_next * 2.0 - &y - &yhat) / varsigma;
        y_prev = std::mem::replace(&mut y, y_next);
        out.push(stack(&y, &z));
    }
    out
}

/// Resolvent-compensated primal-dual method with `J = (Id + sigma D^{-1})^{-1}`:
/// `nu+ = J(z + sigma V y)`,
/// `y+ = J_{tau B}(y - tau (2 E y - E y_-) - tau F y - tau V^T (nu+ + z - nu))`,
/// `z+ = J(z + sigma V y+)`, started with `nu_0 = z_0`, `y_{-1} = y_0`.
#[allow(clippy::too_many_arguments)]
pub fn resolvent_compensated(
    jb: Resolvent,
    jdinv: Resolvent,
    e: Map,
    f: Map,
    v: &DMatrix<f64>,
    tau: f64,
    sigma: f64,
    y0: &DVector<f64>,
    z0: &DVector<f64>,
    n: usize,
) -> Vec<DVector<f64>> {
    let (mut y, mut z) = (y0.clone(), z0.clone());
    let mut y_prev = y0.clone();
    let mut nu = z0.clone();
    let mut out = vec![stack(&y, &z)];
    for _ in 0..n {
        let nu_next = jdinv(sigma, &(&z + v * &y * sigma));
        let p = &y - (e(&y) * 2.0 - e(&y_prev)) * tau - f(&y) * tau - v.transpose() * (&nu_next + &z - &nu) * tau;
        let y_next = jb(tau, &p);
        z = jdinv(sigma, &(&z + v * &y_next * sigma));
        nu = nu_next;
        y_prev = std::mem::replace(&mut y, y_next);
        out.push(stack(&y, &z));
    }
    out
}

pub fn stack(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
}

/// Forward differences of a row-major `w x h` image, horizontal block
/// first, zero across the last column and row.
pub fn grad(img: &[f64], w: usize, h: usize) -> Vec<f64> {
    let n = w * h;
    let mut g = vec![0.0; 2 * n];
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if c + 1 < w {
                g[i] = img[i + 1] - img[i];
            }
            if r + 1 < h {
                g[n + i] = img[i + w] - img[i];
            }
        }
    }
    g
}

/// Adjoint of [`grad`] (negative divergence), from the explicit dense
/// matrix of `grad`.
pub fn grad_matrix(w: usize, h: usize) -> DMatrix<f64> {
    let n = w * h;
    let mut m = DMatrix::zeros(2 * n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        for (i, v) in grad(&e, w, h).into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    m
}

/// Projection of every pixel pair `(g_i, g_{i+n})` onto the disc of radius
/// `r`.
pub fn project_pairs(z: &DVector<f64>, r: f64) -> DVector<f64> {
    let n = z.len() / 2;
    let mut out = z.clone();
    for i in 0..n {
        let norm = (z[i] * z[i] + z[n + i] * z[n + i]).sqrt();
        if norm > r {
            out[i] *= r / norm;
            out[n + i] *= r / norm;
        }
    }
    out
}
