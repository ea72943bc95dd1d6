use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use symrc::readout::{feature_map, predict, train_ridge};

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

/// Ridge solution from QR least squares on the stacked system
/// `[G; sqrt(alpha) I] W^T = [Y; 0]`.
fn stacked_least_squares(g: &DMatrix<f64>, y: &DMatrix<f64>, alpha: f64) -> DMatrix<f64> {
    let (s, n) = g.shape();
    let m = y.ncols();
    let mut a = DMatrix::zeros(s + n, n);
    a.view_mut((0, 0), (s, n)).copy_from(g);
    for i in 0..n {
        a[(s + i, i)] = alpha.sqrt();
    }
    let mut b = DMatrix::zeros(s + n, m);
    b.view_mut((0, 0), (s, m)).copy_from(y);
    let qr = a.qr();
    let qtb = qr.q().transpose() * b;
    let w = qr.r().solve_upper_triangular(&qtb).expect("full rank");
    w.transpose()
}

fn objective(g: &DMatrix<f64>, y: &DMatrix<f64>, w: &DMatrix<f64>, alpha: f64) -> f64 {
    (y - g * w.transpose()).norm_squared() + alpha * w.norm_squared()
}

#[test]
fn ridge_matches_least_squares_oracle_40x10() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let g = random_matrix(&mut rng, 40, 10);
    let y = random_matrix(&mut rng, 40, 2);
    let w = train_ridge(&g, &y, 0.1).unwrap();
    let oracle = stacked_least_squares(&g, &y, 0.1);
    assert!((&w.w_out - &oracle).norm() < 1e-8 * oracle.norm());
    assert_eq!(w.training_sample_count, 40);
    assert_eq!(w.alpha_used, 0.1);
}

#[test]
fn ridge_is_stationary_under_perturbation() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..5 {
        let g = random_matrix(&mut rng, 30, 6);
        let y = random_matrix(&mut rng, 30, 2);
        let alpha = 0.05;
        let w = train_ridge(&g, &y, alpha).unwrap().w_out;
        let base = objective(&g, &y, &w, alpha);
        for i in 0..w.nrows() {
            for j in 0..w.ncols() {
                for h in [1e-4, -1e-4] {
                    let mut p = w.clone();
                    p[(i, j)] += h;
                    assert!(objective(&g, &y, &p, alpha) >= base);
                }
            }
        }
    }
}

#[test]
fn ridge_residual_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = random_matrix(&mut rng, 60, 12);
    let y = random_matrix(&mut rng, 60, 2);
    let alpha = 1e-3;
    let wt = train_ridge(&g, &y, alpha).unwrap().w_out.transpose();
    let gty = g.transpose() * &y;
    let grad = g.transpose() * &g * &wt + &wt * alpha - &gty;
    assert!(grad.norm() < 1e-8 * gty.norm());
}

#[test]
fn heavy_regularization_shrinks_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let g = random_matrix(&mut rng, 50, 8);
    let y = random_matrix(&mut rng, 50, 1);
    let small = train_ridge(&g, &y, 0.01).unwrap().w_out.norm();
    let huge = train_ridge(&g, &y, 1e9).unwrap().w_out.norm();
    assert!(huge < 1e-6 * small);
}

#[test]
fn square_invertible_features_interpolate() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = random_matrix(&mut rng, 6, 6) + DMatrix::identity(6, 6) * 3.0;
    let y = random_matrix(&mut rng, 6, 2);
    let w = train_ridge(&g, &y, 0.0).unwrap();
    let v = predict(&w, &g).unwrap();
    assert!((&v - &y).norm() < 1e-12 * y.norm().max(1.0));
}

proptest! {
    #[test]
    fn squared_readout_is_even(r in proptest::collection::vec(-10.0f64..10.0, 1..40)) {
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        prop_assert_eq!(feature_map(&neg, 1.0), feature_map(&r, 1.0));
    }

    #[test]
    fn linear_readout_is_odd(r in proptest::collection::vec(-10.0f64..10.0, 1..40)) {
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let g: Vec<f64> = feature_map(&r, 0.0).iter().map(|v| -v).collect();
        prop_assert_eq!(feature_map(&neg, 0.0), g);
    }
}
