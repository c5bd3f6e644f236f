//! End-to-end properties of the fitting pipeline.

use lurk_core::effects::{gradual_effect, sudden_series, unit_grid};
use lurk_core::estimator::{fit, profile_objective, tau2_update, Dataset, FitConfig};
use lurk_core::optim::{nelder_mead, NelderMeadOptions};
use lurk_core::sparse::{apply_u, first_difference, lasso_solve, make_folds, select_lambda_cv, SelectionRule};
use lurk_core::{ChangeCoefficients, KernelSpec};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn step_data(seed: u64, n: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random::<f64>()]).collect();
    let t: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let y = (0..n)
        .map(|i| (3.0 * x[i][0]).cos() + if i >= n / 2 { 1.0 } else { 0.0 } + 0.02 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    Dataset::new(x, t, y).unwrap()
}

fn quick() -> FitConfig {
    FitConfig {
        max_outer: 6,
        ..FitConfig::default()
    }
}

#[test]
fn constant_response() {
    let n = 20;
    let x: Vec<Vec<f64>> = (0..n).map(|i| vec![((i * 7) % n) as f64 / n as f64]).collect();
    let t: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let data = Dataset::new(x, t, vec![3.25; n]).unwrap();
    let f = fit(&data, &FitConfig::default()).unwrap();
    assert!((f.hyper.mu - 3.25).abs() < 1e-6);
    assert!(f.delta.iter().all(|&d| d == 0.0));
    for u in unit_grid(9) {
        for t in [0.0, 0.5, 1.0] {
            assert!((f.predictor.predict_mean(&[u, t]).unwrap() - 3.25).abs() < 1e-6);
        }
    }
    let g = gradual_effect(&f, &unit_grid(11)).unwrap();
    assert!(g.iter().all(|v| (v - 3.25).abs() < 1e-6));
}

#[test]
fn fit_is_bitwise_deterministic() {
    let data = step_data(1, 30);
    let a = fit(&data, &quick()).unwrap();
    let b = fit(&data, &quick()).unwrap();
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.trace), bits(&b.trace));
    assert_eq!(bits(&a.coeffs.to_vector()), bits(&b.coeffs.to_vector()));
    assert_eq!(a.hyper, b.hyper);
    let grid = unit_grid(17);
    assert_eq!(
        bits(&gradual_effect(&a, &grid).unwrap()),
        bits(&gradual_effect(&b, &grid).unwrap())
    );
}

#[test]
fn row_order_does_not_matter() {
    let data = step_data(2, 30);
    let n = data.n();
    let perm: Vec<usize> = (0..n).rev().collect();
    let shuffled = Dataset::new(
        perm.iter().map(|&i| data.raw_x(i)).collect(),
        perm.iter().map(|&i| data.raw_t(i)).collect(),
        perm.iter().map(|&i| data.y()[i]).collect(),
    )
    .unwrap();
    let a = fit(&data, &quick()).unwrap();
    let b = fit(&shuffled, &quick()).unwrap();
    let grid = unit_grid(13);
    assert_eq!(gradual_effect(&a, &grid).unwrap(), gradual_effect(&b, &grid).unwrap());
    assert_eq!(a.delta, b.delta);
}

#[test]
fn hyperparameters_are_self_consistent() {
    let data = step_data(3, 30);
    let f = fit(&data, &quick()).unwrap();
    let h = &f.hyper;
    assert!((h.sigma2 - h.eta * h.tau2).abs() <= 1e-12 * h.sigma2.abs().max(1.0));
    if h.lambda > 0.0 {
        assert!((h.nu - 2.0 * 2f64.sqrt() * h.tau2 / h.lambda).abs() <= 1e-9 * h.nu);
    }
    // tau2 is the closed-form update at the reported shocks and penalty
    let res: Vec<f64> = {
        let fitted = apply_u(&f.coeffs, f.working.time_order()).unwrap();
        f.working.y().iter().zip(&fitted).map(|(y, d)| y - h.mu - d).collect()
    };
    let quad = f.predictor.factorization().quad_form(&DVector::from_vec(res));
    let want = tau2_update(quad, h.lambda, f.coeffs.l1(), f.working.n());
    assert!((h.tau2 - want).abs() <= 1e-10 * want);
    // the sudden series is the cumulative sum of the jumps
    let jumps = first_difference(&f.delta);
    assert_eq!(jumps.len(), f.coeffs.e_tail.len());
    assert!(jumps.iter().zip(&f.coeffs.e_tail).all(|(a, b)| (a - b).abs() < 1e-12));
}

#[test]
fn profile_search_matches_grid_search() {
    let data = step_data(4, 25);
    let n = data.n();
    let mut tail = vec![0.0; n - 1];
    tail[n / 2 - 1] = 1.0;
    let coeffs = ChangeCoefficients::new(1.0, tail);
    let lambda = 0.5;
    let eta = 0.01;
    let objective = |lt: &[f64]| {
        let spec = KernelSpec::new(vec![lt[0].exp()], lt[1].exp()).unwrap();
        profile_objective(&spec, eta, &data, &coeffs, lambda).unwrap()
    };
    let bounds = [(1e-2f64.ln(), 1e4f64.ln()); 2];
    let mut best = f64::INFINITY;
    let steps = 120;
    for i in 0..=steps {
        for j in 0..=steps {
            let at = |k: usize, b: (f64, f64)| b.0 + (b.1 - b.0) * k as f64 / steps as f64;
            best = best.min(objective(&[at(i, bounds[0]), at(j, bounds[1])]));
        }
    }
    let starts = [[0.0, 0.0], [3.0, -2.0], [6.0, 2.0]];
    let found = starts
        .iter()
        .map(|s| nelder_mead(|z| objective(z), s, &bounds, &NelderMeadOptions::default()).value)
        .fold(f64::INFINITY, f64::min);
    assert!(found <= best + 0.005 * best.abs(), "search {found} vs grid {best}");
}

#[test]
fn cv_on_pure_noise_keeps_few_jumps() {
    let n = 60;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let d = DMatrix::from_fn(n, n, |i, j| if j <= i { 1.0 } else { 0.0 });
    let r = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let folds = make_folds(n, 10, 8).unwrap();
    let sel = select_lambda_cv(&d, &r, &folds, 50, SelectionRule::MinError).unwrap();
    let fit = lasso_solve(&d, &r, sel.lambda, false).unwrap();
    let nonzero = fit.coef.iter().skip(1).filter(|v| **v != 0.0).count();
    assert!(nonzero <= 6, "{nonzero} spurious jumps");
}

#[test]
fn cv_finds_a_clean_step() {
    let n = 60;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let d = DMatrix::from_fn(n, n, |i, j| if j <= i { 1.0 } else { 0.0 });
    let r = DVector::from_fn(n, |i, _| if i >= 25 { 2.0 } else { 0.0 } + 0.1 * rng.sample::<f64, _>(StandardNormal));
    let folds = make_folds(n, 10, 9).unwrap();
    let sel = select_lambda_cv(&d, &r, &folds, 50, SelectionRule::MinError).unwrap();
    let fit = lasso_solve(&d, &r, sel.lambda, false).unwrap();
    let (k, v) = fit
        .coef
        .iter()
        .enumerate()
        .skip(1)
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .unwrap();
    assert_eq!(k, 25);
    assert!((v - 2.0).abs() < 0.3, "{v}");
}

#[test]
fn fit_finds_injected_step() {
    let data = step_data(5, 40);
    let f = fit(&data, &FitConfig::default()).unwrap();
    let (_, points) = sudden_series(&f);
    let top = points
        .iter()
        .max_by(|a, b| a.jump.abs().total_cmp(&b.jump.abs()))
        .expect("at least one jump");
    assert!(top.index.abs_diff(21) <= 1, "largest jump at {}", top.index);
    assert!(top.jump > 0.5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lasso_kkt_holds(seed in 0u64..10_000, n in 3usize..15, frac in 0.01f64..1.2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = 1 + (seed as usize) % n;
        let d = DMatrix::from_fn(n, m, |_, _| rng.sample::<f64, _>(StandardNormal));
        let r = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let lam = frac * lurk_core::sparse::lambda_max(&d, &r, false).unwrap();
        let fit = lasso_solve(&d, &r, lam, false).unwrap();
        prop_assert!(fit.kkt_residual <= 1e-6);
        if frac >= 1.0 {
            prop_assert!(fit.coef.iter().skip(1).all(|v| *v == 0.0));
        }
    }

    #[test]
    fn shocks_and_differences_invert(tail in proptest::collection::vec(-2.0f64..2.0, 1..40), mu in -5.0f64..5.0, rot in 0usize..40) {
        let c = ChangeCoefficients::new(mu, tail.clone());
        let series = c.shock_series();
        let back = first_difference(&series);
        prop_assert_eq!(series[0], 0.0);
        prop_assert_eq!(back.len(), tail.len());
        for (a, b) in back.iter().zip(&tail) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + series.iter().fold(0.0f64, |m, v| m.max(v.abs()))));
        }
        // time order given as a rotation of the dataset indices
        let n = tail.len() + 1;
        let order: Vec<usize> = (0..n).map(|k| (k + rot) % n).collect();
        let full = apply_u(&c, &order).unwrap();
        for (f, s) in order.iter().map(|&i| full[i]).zip(&series) {
            prop_assert_eq!(f, *s);
        }
    }
}
