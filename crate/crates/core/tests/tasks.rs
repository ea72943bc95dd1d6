use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use symrc::tasks::*;

fn word(n: usize, pattern: usize) -> Vec<i8> {
    (0..n).map(|j| if pattern >> j & 1 == 1 { 1 } else { -1 }).collect()
}

#[test]
fn parity_agrees_with_class_for_all_words_up_to_12() {
    for n in 1..=12usize {
        for p in 0..1usize << n {
            let w = word(n, p);
            let l = equivalence_class(&w);
            let expect = if (n - l) % 2 == 0 { 1 } else { -1 };
            assert_eq!(parity(&w).unwrap(), expect);
        }
    }
}

#[test]
fn class_members_share_parity_up_to_10() {
    for n in 1..=10usize {
        let mut by_class: Vec<Option<i8>> = vec![None; n + 1];
        for p in 0..1usize << n {
            let w = word(n, p);
            let l = equivalence_class(&w);
            let pw = parity(&w).unwrap();
            match by_class[l] {
                None => by_class[l] = Some(pw),
                Some(q) => assert_eq!(q, pw),
            }
        }
    }
}

#[test]
fn parity_rejects_non_binary_entries() {
    assert!(parity(&[1, 0, -1]).is_err());
}

proptest! {
    #[test]
    fn parity_permutation_and_inversion(n in 1usize..30, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w: Vec<i8> = (0..n).map(|_| if rng.random() { 1 } else { -1 }).collect();
        let p = parity(&w).unwrap();
        let inverted: Vec<i8> = w.iter().map(|b| -b).collect();
        let sign = if n % 2 == 0 { 1 } else { -1 };
        prop_assert_eq!(parity(&inverted).unwrap(), sign * p);
        w.shuffle(&mut rng);
        prop_assert_eq!(parity(&w).unwrap(), p);
    }
}

#[test]
fn minimal_training_covers_each_class_once_up_to_100() {
    for n in 1..=100usize {
        let s = minimal_training_bits(n);
        assert_eq!(s.len(), n + s_max(n));
        let mut seen = vec![0usize; n + 1];
        for t in n - 1..s.len() {
            seen[equivalence_class(s.window(n, t).unwrap())] += 1;
        }
        for (l, c) in seen.iter().enumerate() {
            assert_eq!(*c, usize::from(l <= s_max(n)), "n={n} l={l}");
        }
    }
}

#[test]
fn coupon_expectation_three_bits() {
    let e = coupon_expectation(3);
    assert!((e - 21.742857142857).abs() < 1e-9);
    assert_eq!(e.ceil(), 22.0);
}

#[test]
fn coupon_expectation_matches_monte_carlo() {
    let n = 8u32;
    let m = 1usize << n;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let trials = 100_000;
    let mut total = 0u64;
    let mut seen = vec![false; m];
    for _ in 0..trials {
        seen.fill(false);
        let mut distinct = 0;
        let mut draws = 0u64;
        while distinct < m {
            let c = rng.random_range(0..m);
            draws += 1;
            if !seen[c] {
                seen[c] = true;
                distinct += 1;
            }
        }
        total += draws;
    }
    let mc = total as f64 / trials as f64;
    let e = coupon_expectation(n);
    assert!((mc - e).abs() < 0.01 * e, "{mc} vs {e}");
}

#[test]
fn coverage_counts_match_window_scan() {
    for seed in 0..5 {
        let s = random_bits(1000, seed);
        let c = coverage_check(&s, 6).unwrap();
        let mut counts = vec![0usize; 64];
        for start in 0..=s.len() - 6 {
            let mut p = 0usize;
            for j in 0..6 {
                if s.bits[start + j] == 1 {
                    p += 1 << j;
                }
            }
            counts[p] += 1;
        }
        assert_eq!(c.counts, counts);
        assert_eq!(c.complete, counts.iter().all(|c| *c > 0));
    }
    assert!(coverage_check(&random_bits(3, 0), 4).is_err());
}

#[test]
fn tapped_delay_windows_overlap() {
    let s = random_bits(40, 9);
    for t in 5..39 {
        let a = tapped_delay(&s, 6, t).unwrap();
        let b = tapped_delay(&s, 6, t + 1).unwrap();
        assert_eq!(&a[..5], &b[1..]);
        assert_eq!(b[0], s.bits[t + 1] as f64);
    }
    assert!(tapped_delay(&s, 6, 4).is_err());
}

#[test]
fn lorenz_trajectory_mirror_is_bit_exact() {
    let x0 = [1.3, -7.2, 20.5];
    let a = integrate_lorenz(x0, 1e-4, 20_000).unwrap();
    let b = integrate_lorenz([-x0[0], -x0[1], x0[2]], 1e-4, 20_000).unwrap();
    for (p, q) in a.iter().zip(&b) {
        assert_eq!([-p[0], -p[1], p[2]], *q);
    }
}

#[test]
fn lorenz_stays_at_equilibria() {
    let c = 72f64.sqrt();
    for x0 in [[0.0, 0.0, 0.0], [c, c, 27.0], [-c, -c, 27.0]] {
        let d = lorenz_derivative(x0);
        assert!(d.iter().all(|v| v.abs() < 1e-12));
    }
    let t = integrate_lorenz([0.0; 3], 1e-4, 1000).unwrap();
    assert!(t.iter().all(|p| *p == [0.0; 3]));
}

#[test]
fn lorenz_datasets_stay_on_the_attractor() {
    for seed in 0..20 {
        let d = make_inference_dataset(50.0, SAMPLE_DT, false, seed).unwrap();
        for p in &d.xyz {
            assert!(p[0].abs() < 30.0 && p[1].abs() < 30.0);
            assert!(p[2] > 0.0 && p[2] < 50.0);
        }
        for w in d.times.windows(2) {
            assert!((w[1] - w[0] - SAMPLE_DT).abs() < 1e-12);
        }
    }
    let a = make_inference_dataset(5.0, SAMPLE_DT, false, 1).unwrap();
    let b = make_inference_dataset(5.0, SAMPLE_DT, false, 2).unwrap();
    assert_ne!(a.xyz, b.xyz);
}

#[test]
fn squared_inputs_are_squares() {
    let d = make_inference_dataset(2.0, SAMPLE_DT, true, 3).unwrap();
    for (u, p) in d.input.iter().zip(&d.xyz) {
        assert_eq!(*u, [p[0] * p[0], p[1] * p[1]]);
    }
    let m = d.mirrored();
    assert_eq!(m.input, d.input);
}
