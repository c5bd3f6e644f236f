//! Box-constrained Nelder-Mead and a Halton start set.

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Stop when the simplex spread in `f` falls below this.
    pub f_tol: f64,
    /// ... and the simplex diameter below this.
    pub x_tol: f64,
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evals: 400,
            f_tol: 1e-7,
            x_tol: 1e-4,
            initial_step: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
}

fn project(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
        *v = v.clamp(lo, hi);
    }
}

/// Minimizes `f` over the box by Nelder-Mead with every trial point
/// projected onto the box. Non-finite values are treated as `+inf`.
pub fn nelder_mead<F>(mut f: F, start: &[f64], bounds: &[(f64, f64)], opts: &NelderMeadOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = start.len();
    assert_eq!(dim, bounds.len());
    let evals = std::cell::Cell::new(0usize);
    let mut eval = |x: &[f64]| {
        evals.set(evals.get() + 1);
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut x0 = start.to_vec();
    project(&mut x0, bounds);
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let f0 = eval(&x0);
    simplex.push((x0.clone(), f0));
    for k in 0..dim {
        let mut x = x0.clone();
        let (lo, hi) = bounds[k];
        let step = opts.initial_step.min(0.5 * (hi - lo));
        // step inward if the vertex would leave the box
        x[k] = if x[k] + step <= hi { x[k] + step } else { x[k] - step };
        project(&mut x, bounds);
        let v = eval(&x);
        simplex.push((x, v));
    }

    let cmp = |a: &(Vec<f64>, f64), b: &(Vec<f64>, f64)| a.1.total_cmp(&b.1);
    loop {
        simplex.sort_by(cmp);
        let best = simplex[0].1;
        let worst = simplex[dim].1;
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| {
                x.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        let spread = if worst.is_finite() { worst - best } else { f64::INFINITY };
        if (spread <= opts.f_tol * (1.0 + best.abs()) && diameter <= opts.x_tol)
            || evals.get() >= opts.max_evals
        {
            break;
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|k| simplex[..dim].iter().map(|(x, _)| x[k]).sum::<f64>() / dim as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            let mut x: Vec<f64> = centroid
                .iter()
                .zip(&simplex[dim].0)
                .map(|(c, w)| c + t * (c - w))
                .collect();
            project(&mut x, bounds);
            x
        };

        let xr = along(1.0);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = eval(&xe);
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[dim].1 {
                let x = along(0.5);
                let v = eval(&x);
                (x, v)
            } else {
                let x = along(-0.5);
                let v = eval(&x);
                (x, v)
            };
            if fc < simplex[dim].1.min(fr) {
                simplex[dim] = (xc, fc);
            } else {
                let x_best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let mut x: Vec<f64> = x_best
                        .iter()
                        .zip(&vertex.0)
                        .map(|(b, v)| b + 0.5 * (v - b))
                        .collect();
                    project(&mut x, bounds);
                    let v = eval(&x);
                    *vertex = (x, v);
                }
            }
        }
    }
    simplex.sort_by(cmp);
    let (x, value) = simplex.swap_remove(0);
    Minimum {
        x,
        value,
        evals: evals.get(),
    }
}

const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as f64;
    let mut inv = 1.0 / b;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base as u64) as f64 * inv;
        i /= base as u64;
        inv /= b;
    }
    out
}

/// `count` Halton points mapped into the box (index 0 skipped).
pub fn halton_points(count: usize, bounds: &[(f64, f64)]) -> Vec<Vec<f64>> {
    (1..=count as u64)
        .map(|i| {
            bounds
                .iter()
                .enumerate()
                .map(|(k, &(lo, hi))| lo + (hi - lo) * radical_inverse(i, PRIMES[k % PRIMES.len()]))
                .collect()
        })
        .collect()
}
