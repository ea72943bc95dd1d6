use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, Discrete};
use symrc::reservoir::{spectral_radius, HyperParams, ReservoirMachine};

fn params(k: usize, rho_r: f64) -> HyperParams {
    HyperParams {
        k,
        rho_r,
        gamma: 2.0,
        rho_in: 0.4,
        sigma: 0.7,
        ..Default::default()
    }
}

/// Gelfand's formula by repeated normalized squaring.
fn gelfand_radius(m: &DMatrix<f64>) -> f64 {
    let norm = |a: &DMatrix<f64>| a.norm();
    let mut log_scale = norm(m).ln();
    let mut b = m / norm(m);
    for k in 0..60 {
        let sq = &b * &b;
        let s = norm(&sq);
        log_scale += s.ln() / 2f64.powi(k + 1);
        b = sq / s;
    }
    log_scale.exp()
}

#[test]
fn spectral_radius_matches_gelfand_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let m = DMatrix::from_fn(20, 20, |_, _| rng.random_range(-1.0..1.0));
        let ours = spectral_radius(&m).unwrap();
        let oracle = gelfand_radius(&m);
        assert!((ours - oracle).abs() < 1e-9 * oracle, "{ours} vs {oracle}");
    }
}

#[test]
fn spectral_radius_contract_over_200_instances() {
    let mut count = 0;
    for &n in &[10usize, 50, 100] {
        for seed in 0..67u64 {
            if count == 200 {
                break;
            }
            let rho = 0.1 + (seed as f64) * 0.07;
            let m = ReservoirMachine::instantiate(n, 2, &params(5.min(n - 1), rho), seed).unwrap();
            let got = spectral_radius(&m.w_r().to_dense()).unwrap();
            assert!((got - rho).abs() / rho < 1e-6, "N={n} seed={seed}: {got} vs {rho}");
            count += 1;
        }
    }
    assert_eq!(count, 200);
}

#[test]
fn instantiate_example_rho_087() {
    let m = ReservoirMachine::instantiate(50, 1, &params(10, 0.87), 3).unwrap();
    let oracle = gelfand_radius(&m.w_r().to_dense());
    assert!((oracle - 0.87).abs() < 1e-6);
}

#[test]
fn input_sparsity_follows_binomial() {
    let (n, d, sigma) = (5usize, 2usize, 0.3);
    let trials = 10_000u64;
    let entries = (n * d) as u64;
    let p = HyperParams { sigma, ..params(2, 0.9) };
    let mut hist = vec![0u64; entries as usize + 1];
    for seed in 0..trials {
        let m = ReservoirMachine::instantiate(n, d, &p, seed).unwrap();
        hist[m.w_in().iter().filter(|w| **w != 0.0).count()] += 1;
    }
    let binom = Binomial::new(sigma, entries).unwrap();
    // merge sparse tail bins so every expected count is at least 5
    let mut observed = Vec::new();
    let mut expected = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (k, h) in hist.iter().enumerate() {
        o += *h as f64;
        e += binom.pmf(k as u64) * trials as f64;
        if e >= 5.0 && (k as u64) < entries {
            let rest: f64 = (k as u64 + 1..=entries).map(|j| binom.pmf(j)).sum::<f64>() * trials as f64;
            if rest >= 5.0 {
                observed.push(o);
                expected.push(e);
                o = 0.0;
                e = 0.0;
            }
        }
    }
    observed.push(o);
    expected.push(e);
    let chi2: f64 = observed.iter().zip(&expected).map(|(o, e)| (o - e).powi(2) / e).sum();
    let dist = ChiSquared::new((observed.len() - 1) as f64).unwrap();
    let p_value = 1.0 - dist.cdf(chi2);
    assert!(p_value > 0.01, "chi2 = {chi2}, p = {p_value}");
}

#[test]
fn determinism_of_trajectories() {
    let p = params(3, 1.1);
    let inputs: Vec<[f64; 2]> = (0..500).map(|i| [(i as f64 * 0.1).sin(), (i as f64 * 0.07).cos()]).collect();
    let mut a = ReservoirMachine::instantiate(30, 2, &p, 99).unwrap();
    let mut b = ReservoirMachine::instantiate(30, 2, &p, 99).unwrap();
    let ta = a.run(&inputs, 0.01, 3).unwrap();
    let tb = b.run(&inputs, 0.01, 3).unwrap();
    assert_eq!(ta, tb);
    let mut c = ReservoirMachine::instantiate(30, 2, &p, 100).unwrap();
    assert_ne!(c.run(&inputs, 0.01, 3).unwrap().states, ta.states);
}

#[test]
fn fixed_point_is_preserved() {
    // A single node with no recurrence: r* = tanh(w u + b) is a fixed point.
    let p = HyperParams { bias: 0.2, ..params(1, 0.9) };
    let mut m = ReservoirMachine::instantiate(1, 1, &p, 5).unwrap();
    let u = 0.8;
    let r_star = (m.w_in()[(0, 0)] * u + 0.2f64).tanh();
    for dt in [0.001, 0.1, 0.7] {
        m.set_state(&[r_star]).unwrap();
        let r = m.euler_step(&[u], dt).unwrap()[0];
        assert!((r - r_star).abs() <= 1e-15);
    }
}

#[test]
fn zero_input_decays_monotonically() {
    let p = HyperParams { rho_r: 0.5, gamma: 1.0, ..params(4, 0.5) };
    let mut m = ReservoirMachine::instantiate(40, 1, &p, 8).unwrap();
    let start: Vec<f64> = (0..40).map(|i| ((i * 7 % 11) as f64 - 5.0) / 5.0).collect();
    m.set_state(&start).unwrap();
    let mut last = f64::INFINITY;
    for _ in 0..1000 {
        let r = m.euler_step(&[0.0], 0.05).unwrap();
        let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm <= last);
        last = norm;
    }
    assert!(last < 1e-3);
}

#[test]
fn reset_then_zero_input_stays_zero() {
    let mut m = ReservoirMachine::instantiate(20, 1, &params(3, 1.3), 2).unwrap();
    m.run(vec![[0.7]; 50], 0.01, 1).unwrap();
    m.reset();
    m.reset();
    let t = m.run(vec![[0.0]; 100], 0.01, 10).unwrap();
    assert!(t.states.iter().all(|v| *v == 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn odd_map_commutes_with_negation(
        seed in 0u64..1000,
        state in proptest::collection::vec(-2.0f64..2.0, 12),
        u in proptest::collection::vec(-3.0f64..3.0, 2),
        dt in 0.001f64..0.5,
    ) {
        let p = params(3, 1.2);
        let mut a = ReservoirMachine::instantiate(12, 2, &p, seed).unwrap();
        let mut b = a.clone();
        a.set_state(&state).unwrap();
        let neg: Vec<f64> = state.iter().map(|v| -v).collect();
        b.set_state(&neg).unwrap();
        let nu: Vec<f64> = u.iter().map(|v| -v).collect();
        for _ in 0..20 {
            let ra = a.euler_step(&u, dt).unwrap().to_vec();
            let rb = b.euler_step(&nu, dt).unwrap();
            for (x, y) in ra.iter().zip(rb) {
                prop_assert_eq!(*x, -*y);
            }
        }
    }
}
