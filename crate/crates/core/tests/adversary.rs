mod common;

use advscc::adversary::{
    best_response, brute_force_best_response, property_abc_transfer_check, unrestricted_response,
};
use advscc::divergence::evaluate;
use advscc::model::{AdversaryConstraint, RejectionFunction};
use advscc::Error;
use common::{kind_for, point_mass_range, random_pmf};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RESOLUTION: u32 = 200;

fn random_case(seed: u64, kind_index: usize, max_n: usize) -> (AdversaryConstraint, RejectionFunction) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kind = kind_for(kind_index);
    let p = random_pmf(rng.random_range(2..=max_n), 0.3, &mut rng);
    let (_, hi) = point_mass_range(&kind, &p);
    let lambda = rng.random_range(0.05..0.95) * hi;
    let rates: Vec<f64> = (0..p.len()).map(|_| rng.random()).collect();
    (
        AdversaryConstraint::new(p, lambda, kind).unwrap(),
        RejectionFunction::soft(rates).unwrap(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn structured_matches_lattice_search(seed in any::<u64>(), k in 0usize..2) {
        let (c, r) = random_case(seed, k, 4);
        let n = c.p.len() as f64;
        let exact = best_response(&r, &c).unwrap();
        let brute = brute_force_best_response(&r, &c, RESOLUTION).unwrap();
        prop_assert!(exact.value <= brute.value + 1e-12);
        prop_assert!(brute.value <= exact.value + 2.0 * n / RESOLUTION as f64);
        prop_assert!(exact.divergence >= c.lambda - 1e-9);
        prop_assert!(exact.q.len() <= 2);
    }

    #[test]
    fn response_is_a_distribution(seed in any::<u64>(), k in 0usize..2) {
        let (c, r) = random_case(seed, k, 9);
        let br = best_response(&r, &c).unwrap();
        let mut q = vec![0.0; c.p.len()];
        for &(i, m) in &br.q {
            q[i] = m;
        }
        prop_assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let d = evaluate(&c.divergence, &q, &c.p).unwrap();
        prop_assert!((d - br.divergence).abs() < 1e-9);
        let rho: f64 = q.iter().zip(r.rates()).map(|(a, b)| a * b).sum();
        prop_assert!((rho - br.value).abs() < 1e-12);
    }
}

#[test]
fn unrestricted_adversary_takes_the_minimum_rate() {
    let (c, r) = random_case(4, 0, 6);
    let u = unrestricted_response(&r, &c).unwrap();
    assert_eq!(u.value, r.min_rate());
    assert!(best_response(&r, &c).unwrap().value >= u.value);
}

#[test]
fn brute_force_limits() {
    let (c, r) = random_case(5, 1, 3);
    assert!(matches!(brute_force_best_response(&r, &c, 50), Err(Error::InvalidParameter(_))));
    let big = AdversaryConstraint::new(
        advscc::Pmf::new(&[0.1, 0.1, 0.2, 0.2, 0.2, 0.2]).unwrap(),
        0.5,
        advscc::DivergenceKind::Kl2,
    )
    .unwrap();
    let r6 = RejectionFunction::soft(vec![0.5; 6]).unwrap();
    assert_eq!(brute_force_best_response(&r6, &big, 100), Err(Error::TooLarge(6)));
}

#[test]
fn transfer_properties_hold_on_random_constraints() {
    for i in 0..12 {
        let (c, _) = random_case(100 + i as u64, i, 6);
        let rep = property_abc_transfer_check(&c, 100, i as u64).unwrap();
        assert!(rep.all_passed(), "{rep:?}");
    }
}
