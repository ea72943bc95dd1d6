use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use symrc::hyperopt::*;

fn bowl<'a>(space: &'a SearchSpace, center: &[f64]) -> impl Fn(&[f64]) -> f64 + 'a {
    let c = center.to_vec();
    move |p: &[f64]| {
        let u = space.to_unit(p);
        u.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum()
    }
}

fn wavy(p: &[f64]) -> f64 {
    p.iter().enumerate().map(|(i, v)| (v * (i + 2) as f64).sin() + 0.1 * v * v).sum()
}

#[test]
fn best_so_far_is_monotone_and_points_are_feasible() {
    let space = SearchSpace::serial_parity();
    let res = optimize(wavy, &space, &OptimizerSettings { budget: 30, seed: 4, ..Default::default() }).unwrap();
    let t = &res.trace;
    assert_eq!(t.points.len(), 30);
    assert!(t.best_so_far.windows(2).all(|w| w[1] <= w[0]));
    for p in &t.points {
        assert!(space.contains(p), "{p:?}");
        // t0 + delta_t within the bit period
        assert!(p[0] + p[1] <= 1.0 + 1e-12);
    }
    let min = t.values.iter().cloned().fold(f64::INFINITY, f64::min);
    assert_eq!(res.best_value, min);
    assert_eq!(t.values[t.best_index], min);
    assert_eq!(res.best_point, t.points[t.best_index]);
}

#[test]
fn parallel_space_respects_window_constraint() {
    let space = SearchSpace::parallel_parity();
    let res = optimize(wavy, &space, &OptimizerSettings { budget: 25, seed: 9, ..Default::default() }).unwrap();
    for p in &res.trace.points {
        assert!(space.contains(p));
        assert!(p[0] + p[1] <= 1.0 + 1e-12);
    }
}

#[test]
fn identical_settings_give_identical_traces() {
    let space = SearchSpace::inference();
    let s = OptimizerSettings { budget: 25, seed: 17, ..Default::default() };
    let a = optimize(wavy, &space, &s).unwrap();
    let b = optimize(wavy, &space, &s).unwrap();
    assert_eq!(a, b);
    let c = optimize(wavy, &space, &OptimizerSettings { seed: 18, ..s }).unwrap();
    assert_ne!(a.trace.points, c.trace.points);
}

#[test]
fn convex_bowl_is_located() {
    let space = SearchSpace::inference();
    for seed in 0..3u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c: Vec<f64> = (0..space.dim()).map(|_| rng.random_range(0.2..0.8)).collect();
        let res = optimize(bowl(&space, &c), &space, &OptimizerSettings { seed, ..Default::default() }).unwrap();
        let d = res.best_value.sqrt();
        assert!(d < 0.05, "seed {seed}: distance {d}");
    }
}

#[test]
fn gp_interpolates_observations() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x: Vec<Vec<f64>> = (0..25).map(|_| vec![rng.random(), rng.random(), rng.random()]).collect();
    let y: Vec<f64> = x.iter().map(|p| (3.0 * p[0]).sin() + p[1] * p[2] * 4.0).collect();
    let range = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - y.iter().cloned().fold(f64::INFINITY, f64::min);
    let gp = GaussianProcess::with_hyperparameters(&x, &y, &[0.05, 0.05, 0.05], 1.0).unwrap();
    for (p, v) in x.iter().zip(&y) {
        let (m, s) = gp.predict(p);
        assert!((m - v).abs() <= 1e-6 * range, "{m} vs {v}");
        assert!(s <= 1e-2 * range);
    }
}

#[test]
fn fitted_gp_tracks_smooth_function() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let f = |p: &[f64]| (2.0 * p[0]).sin() + p[1] * p[1];
    let x: Vec<Vec<f64>> = (0..40).map(|_| vec![rng.random(), rng.random()]).collect();
    let y: Vec<f64> = x.iter().map(|p| f(p)).collect();
    let gp = GaussianProcess::fit(&x, &y, None, &mut rng).unwrap();
    for p in &x {
        assert!((gp.predict(p).0 - f(p)).abs() < 1e-3);
    }
    let probe = [0.5, 0.5];
    assert!((gp.predict(&probe).0 - f(&probe)).abs() < 0.05);
}
