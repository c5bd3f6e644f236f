//! Reference implementations used as test oracles. Nothing here calls into
//! the algorithms under test.

#![allow(dead_code, clippy::excessive_precision)]

use nalgebra::{DMatrix, DVector};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// 15-point Kronrod estimate and its difference from the embedded 7-point
/// Gauss rule.
fn gk15(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, (kronrod - gauss).abs() * h)
}

/// Adaptive Gauss-Kronrod by bisection until each piece's error estimate is
/// within its share of `tol`.
pub fn integrate(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, tol: f64, whole: f64, depth: u32) -> f64 {
        let (v, err) = gk15(f, a, b);
        if err <= tol * (b - a) / whole || depth >= 40 {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, tol, whole, depth + 1) + rec(f, m, b, tol, whole, depth + 1)
    }
    rec(f, a, b, tol, b - a, 0)
}

/// Nested adaptive quadrature of `f` over `[0, 1]^p`.
pub fn integrate_unit_box(f: &dyn Fn(&[f64]) -> f64, p: usize, tol: f64) -> f64 {
    fn level(f: &dyn Fn(&[f64]) -> f64, point: &mut Vec<f64>, p: usize, tol: f64) -> f64 {
        if point.len() == p {
            return f(point);
        }
        let mut g = |u: f64| {
            point.push(u);
            let v = level(f, point, p, tol);
            point.pop();
            v
        };
        integrate(&mut g, 0.0, 1.0, tol)
    }
    level(f, &mut Vec::with_capacity(p), p, tol)
}

/// Solves `a x = b` by LU with partial pivoting.
pub fn lu_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    a.clone().lu().solve(b).expect("nonsingular")
}

/// `1/2 ||r - D b||^2 + lambda/2 * sum |b_j|` over penalized `j`.
pub fn lasso_objective(d: &DMatrix<f64>, r: &DVector<f64>, b: &[f64], lambda: f64, penalize_first: bool) -> f64 {
    let bv = DVector::from_column_slice(b);
    let res = r - d * bv;
    let pen: f64 = b
        .iter()
        .enumerate()
        .filter(|(j, _)| *j > 0 || penalize_first)
        .map(|(_, v)| v.abs())
        .sum();
    0.5 * res.norm_squared() + 0.5 * lambda * pen
}

/// Accelerated proximal gradient with function-value restarts, run until
/// the iterates stop moving.
pub fn fista(d: &DMatrix<f64>, r: &DVector<f64>, lambda: f64, penalize_first: bool) -> Vec<f64> {
    let m = d.ncols();
    let gram = d.transpose() * d;
    let dtr = d.transpose() * r;
    let lip = gram.clone().symmetric_eigen().eigenvalues.max();
    let step = 1.0 / lip;
    let thresh = 0.5 * lambda * step;
    let obj = |b: &DVector<f64>| lasso_objective(d, r, b.as_slice(), lambda, penalize_first);

    let mut x = DVector::zeros(m);
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut fx = obj(&x);
    for _ in 0..5_000_000 {
        let grad = &gram * &y - &dtr;
        let z = &y - grad * step;
        let mut next = z.clone();
        for j in 0..m {
            if j > 0 || penalize_first {
                let v = z[j];
                next[j] = if v > thresh {
                    v - thresh
                } else if v < -thresh {
                    v + thresh
                } else {
                    0.0
                };
            }
        }
        let fnext = obj(&next);
        let moved = (&next - &x).amax();
        if fnext > fx {
            // restart momentum from the current point
            t = 1.0;
            y = x.clone();
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = &next + (&next - &x) * ((t - 1.0) / t_next);
        t = t_next;
        x = next;
        fx = fnext;
        if moved <= 1e-15 * (1.0 + x.amax()) {
            break;
        }
    }
    x.as_slice().to_vec()
}

/// Squared-exponential correlation written out directly.
pub fn sqexp(a: &[f64], b: &[f64], theta: &[f64]) -> f64 {
    let s: f64 = a
        .iter()
        .zip(b)
        .zip(theta)
        .map(|((u, v), th)| th * (u - v) * (u - v))
        .sum();
    (-s).exp()
}

/// Lower-triangular matrix of ones.
pub fn ones_lower(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if j <= i { 1.0 } else { 0.0 })
}
