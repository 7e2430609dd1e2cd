//! Exact Wilcoxon p-values against literal enumeration of all 2^m sign flips.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spice_analytics::wilcoxon::{exact_p, normal_approx_p, SignedRanks};
use spice_analytics::{wilcoxon_signed_rank, PMethod};

/// Average ranks of |d| computed by counting, independent of the library's sort.
fn oracle_ranks(d: &[f64]) -> Vec<f64> {
    d.iter()
        .map(|x| {
            let less = d.iter().filter(|y| y.abs() < x.abs()).count() as f64;
            let equal = d.iter().filter(|y| y.abs() == x.abs()).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

fn brute_force_p(d: &[f64]) -> f64 {
    let nz: Vec<f64> = d.iter().copied().filter(|x| *x != 0.0).collect();
    let ranks = oracle_ranks(&nz);
    let observed: f64 = nz.iter().zip(&ranks).filter(|(x, _)| **x > 0.0).map(|(_, r)| r).sum();
    let m = nz.len();
    let (mut le, mut ge) = (0u64, 0u64);
    for mask in 0u64..(1 << m) {
        let w: f64 = (0..m).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if w <= observed + 1e-9 {
            le += 1;
        }
        if w >= observed - 1e-9 {
            ge += 1;
        }
    }
    let total = (1u64 << m) as f64;
    (2.0 * le.min(ge) as f64 / total).min(1.0)
}

fn random_differences(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    // small integer magnitudes so ties and zeros show up
    (0..m)
        .map(|_| {
            let mag = rng.random_range(0..=6) as f64 * 0.5;
            if rng.random_bool(0.5) { mag } else { -mag }
        })
        .collect()
}

#[test]
fn exact_matches_enumeration_small_m() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 200 {
        let m = rng.random_range(1..=12);
        let d = random_differences(&mut rng, m);
        let Ok(r) = wilcoxon_signed_rank(&d) else { continue };
        assert_eq!(r.method, PMethod::Exact);
        let oracle = brute_force_p(&d);
        assert!((r.p_value - oracle).abs() <= 1e-12, "{d:?}: {} vs {oracle}", r.p_value);
        checked += 1;
    }
}

#[test]
fn hand_enumerated_cases() {
    assert_eq!(brute_force_p(&[1.0, 2.0, 3.0, 4.0, 5.0]), 2.0 / 32.0);
    assert_eq!(brute_force_p(&[3.0]), 1.0);
}

#[test]
fn approximation_close_to_exact_mid_sizes() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..60 {
        let m = rng.random_range(15..=20);
        let d: Vec<f64> = (0..m)
            .map(|_| rng.random_range(-3.0..5.0f64))
            .filter(|x| *x != 0.0)
            .collect();
        let ranks = SignedRanks::from_differences(&d).unwrap();
        let exact = exact_p(&ranks);
        let approx = normal_approx_p(&ranks);
        assert!((exact - approx).abs() < 0.01, "m={m}: exact {exact} approx {approx}");
    }
}

proptest! {
    #[test]
    fn p_in_unit_interval_and_sign_symmetric(d in prop::collection::vec(-20i32..20, 1..16)) {
        let d: Vec<f64> = d.into_iter().map(f64::from).collect();
        prop_assume!(d.iter().any(|x| *x != 0.0));
        let r = wilcoxon_signed_rank(&d).unwrap();
        prop_assert!(r.p_value > 0.0 && r.p_value <= 1.0);
        let flipped: Vec<f64> = d.iter().map(|x| -x).collect();
        let f = wilcoxon_signed_rank(&flipped).unwrap();
        prop_assert_eq!(r.p_value, f.p_value);
        prop_assert_eq!(r.statistic, f.statistic);
    }
}
