mod common;

use awayfw::objective::{
    check_gradient, line_search, smoothness_upper_bound, LeastSquaresObjective, LineSearchSpec, LinearObjective,
    ShiftedSquaredNormObjective, SmoothObjective, SmoothnessBound, SquaredNormObjective, TiltedObjective,
};
use awayfw::DenseMatrix;
use proptest::prelude::*;

fn objectives(seed: u64, d: usize) -> Vec<Box<dyn SmoothObjective>> {
    let mut rng = common::rng(seed);
    let ls = common::random_least_squares(&mut rng, d + 2, d);
    let center = common::random_simplex_point(&mut rng, d, 1.0);
    let lin: Vec<f64> = (0..d).map(|_| common::gaussian(&mut rng)).collect();
    vec![
        Box::new(ls.clone()),
        Box::new(SquaredNormObjective::new(d)),
        Box::new(ShiftedSquaredNormObjective::new(center)),
        Box::new(LinearObjective::new(lin.clone())),
        Box::new(TiltedObjective::new(ls, lin).unwrap()),
    ]
}

fn point(seed: u64, d: usize) -> Vec<f64> {
    common::random_simplex_point(&mut common::rng(seed), d, 1.0)
}

fn lin_model(obj: &dyn SmoothObjective, x: &[f64], y: &[f64]) -> f64 {
    let g = obj.gradient(x);
    obj.value(x)
        + y.iter()
            .zip(x)
            .zip(&g)
            .map(|((yi, xi), gi)| (yi - xi) * gi)
            .sum::<f64>()
}

fn dist_sq(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

proptest! {
    #[test]
    fn smoothness_and_convexity_inequalities(seed in any::<u64>(), d in 2usize..8) {
        let x = point(seed ^ 1, d);
        let y = point(seed ^ 2, d);
        for obj in objectives(seed, d) {
            let fy = obj.value(&y);
            let model = lin_model(obj.as_ref(), &x, &y);
            let slack = 1e-12 * (1.0 + fy.abs() + model.abs());
            prop_assert!(fy >= model - slack, "convexity: {fy} < {model}");
            prop_assert!(fy <= model + 0.5 * obj.smoothness() * dist_sq(&x, &y) + slack);
        }
    }

    #[test]
    fn gradients_match_finite_differences(seed in any::<u64>(), d in 1usize..8) {
        let x = point(seed ^ 3, d.max(2));
        for obj in objectives(seed, d.max(2)) {
            prop_assert!(check_gradient(obj.as_ref(), &x, 1e-5) < 1e-5);
        }
    }

    #[test]
    fn segment_values_are_exact_quadratics(seed in any::<u64>(), d in 2usize..6) {
        let x = point(seed ^ 4, d);
        let y = point(seed ^ 5, d);
        let at = |obj: &dyn SmoothObjective, eta: f64| {
            let z: Vec<f64> = x.iter().zip(&y).map(|(a, b)| (1.0 - eta) * a + eta * b).collect();
            obj.value(&z)
        };
        for obj in objectives(seed, d) {
            // Third finite difference of a quadratic vanishes.
            let f: Vec<f64> = (0..4).map(|k| at(obj.as_ref(), k as f64 / 3.0)).collect();
            let third = f[3] - 3.0 * f[2] + 3.0 * f[1] - f[0];
            prop_assert!(third.abs() <= 1e-10 * (1.0 + f.iter().map(|v| v.abs()).sum::<f64>()));
        }
    }

    #[test]
    fn exact_line_search_beats_every_probe(seed in any::<u64>(), d in 2usize..8, eta_max in 0.05f64..3.0) {
        let x = point(seed ^ 6, d);
        let target = point(seed ^ 7, d);
        for obj in objectives(seed, d) {
            let mut w: Vec<f64> = target.iter().zip(&x).map(|(a, b)| a - b).collect();
            let g = obj.gradient(&x);
            if w.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>() > 0.0 {
                w.iter_mut().for_each(|v| *v = -*v);
            }
            let out = line_search(obj.as_ref(), &x, &w, eta_max, LineSearchSpec::ExactQuadratic).unwrap();
            prop_assert!(out.eta >= 0.0 && out.eta <= eta_max);
            let f0 = obj.value(&x);
            let slack = 4.0 * f64::EPSILON * (1.0 + f0.abs());
            prop_assert!(out.f_new <= f0 + slack);
            for k in 0..=100 {
                let eta = eta_max * k as f64 / 100.0;
                let z: Vec<f64> = x.iter().zip(&w).map(|(a, b)| a + eta * b).collect();
                prop_assert!(out.f_new <= obj.value(&z) + slack);
            }
        }
    }

    #[test]
    fn bisection_agrees_with_closed_form(seed in any::<u64>(), d in 2usize..6) {
        let x = point(seed ^ 8, d);
        let y = point(seed ^ 9, d);
        let w: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
        let mut rng = common::rng(seed);
        let obj = common::random_least_squares(&mut rng, d + 1, d);
        let g = obj.gradient(&x);
        let w: Vec<f64> = if w.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>() > 0.0 {
            w.iter().map(|v| -v).collect()
        } else {
            w
        };
        let tol = 1e-10;
        let exact = line_search(&obj, &x, &w, 1.0, LineSearchSpec::ExactQuadratic).unwrap();
        let bis = line_search(&obj, &x, &w, 1.0, LineSearchSpec::DerivativeBisection { tol_eta: tol }).unwrap();
        prop_assert!((exact.eta - bis.eta).abs() <= tol, "{} vs {}", exact.eta, bis.eta);
    }

    #[test]
    fn power_iteration_bounds_spectral_norm(seed in any::<u64>(), m in 1usize..8, d in 1usize..8) {
        let mut rng = common::rng(seed);
        let data: Vec<f64> = (0..m * d).map(|_| common::gaussian(&mut rng)).collect();
        let a = DenseMatrix::from_row_major(m, d, data).unwrap();
        let est = smoothness_upper_bound(&a, SmoothnessBound::PowerIteration);
        let frob = smoothness_upper_bound(&a, SmoothnessBound::Frobenius);
        let am = a.to_nalgebra();
        let exact = (am.transpose() * &am).symmetric_eigenvalues().max();
        prop_assert!(est <= frob + 1e-12);
        prop_assert!(frob >= exact * (1.0 - 1e-12));
        // 50 power iterations are not exact for clustered spectra; stay within 5%.
        prop_assert!(est >= 0.95 * exact, "{est} vs {exact}");
    }
}

#[test]
fn least_squares_from_text_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("A.txt");
    let b = dir.path().join("b.txt");
    std::fs::write(&a, "1 0\n0 2\n").unwrap();
    std::fs::write(&b, "1\n1\n").unwrap();
    let obj = LeastSquaresObjective::from_files(&a, &b).unwrap();
    assert_eq!(obj.value(&[0.0, 0.0]), 1.0);
    assert_eq!(obj.gradient(&[1.0, 0.5]), vec![0.0, 0.0]);
    assert!((4.0..=4.04).contains(&obj.smoothness()));

    std::fs::write(&b, "1\n").unwrap();
    assert!(LeastSquaresObjective::from_files(&a, &b).is_err());
}
