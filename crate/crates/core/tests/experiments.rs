use advscc::experiments::{
    discretized_gaussian, gaussian_sigma_range, gen_arbitrary_pmf, gen_discretized_gaussian,
    instance_rng, run_sweep, Family, SweepConfig,
};
use advscc::game::{solve_soft, GameStatus};
use advscc::{DivergenceKind, GameSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

#[test]
fn arbitrary_family_respects_lambda() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for i in 0..1000 {
        let lambda = 0.5 + (i % 25) as f64 * 0.5;
        let p = gen_arbitrary_pmf(50, lambda, &mut rng).unwrap();
        let sum: f64 = p.probs().iter().sum();
        assert!((sum - 1.0).abs() <= 1e-12);
        assert!(p.min_prob() <= 2f64.powf(-lambda));
    }
    let p = gen_arbitrary_pmf(50, 12.5, &mut rng).unwrap();
    assert!(p.min_prob() <= 1.727e-4);
    let spec = GameSpec::new(p, 0.05, 12.5, DivergenceKind::Kl2).unwrap();
    assert_ne!(solve_soft(&spec).unwrap().status, GameStatus::AdversaryInfeasible);
}

#[test]
fn gaussian_family_shape() {
    for n in [9usize, 50] {
        let p = discretized_gaussian(n, 2.0).unwrap();
        let v = p.probs();
        for i in 0..n {
            assert!((v[i] - v[n - 1 - i]).abs() <= 1e-12);
        }
    }
    let peaks: Vec<f64> = [0.5, 2.0, 6.0]
        .iter()
        .map(|&s| {
            discretized_gaussian(50, s)
                .unwrap()
                .probs()
                .iter()
                .cloned()
                .fold(0.0, f64::max)
        })
        .collect();
    assert!(peaks[0] > peaks[1] && peaks[1] > peaks[2], "{peaks:?}");

    // With N = 50 the share of the first bin never reaches 2^-5 > 1/N, so the
    // fallback applies; N = 20 exercises the bisection branch.
    let (lo50, hi50) = gaussian_sigma_range(50, 5.0).unwrap();
    assert_eq!(hi50, 10.0 * lo50);
    let (lo, hi) = gaussian_sigma_range(20, 5.0).unwrap();
    assert!(lo < hi && hi != 10.0 * lo, "bisection branch expected");
    // Normalized first-bin mass at sigma_max, evaluated independently.
    let g = Normal::new(0.0, hi).unwrap();
    let share = (g.cdf(-9.0) - g.cdf(-10.0)) / (g.cdf(10.0) - g.cdf(-10.0));
    let target = 2f64.powi(-5);
    assert!((share - target).abs() <= 1e-9 * target, "{share}");
    assert!(lo > 0.0);
    let at_min = Normal::new(0.0, lo).unwrap();
    assert!(at_min.cdf(-9.0) - at_min.cdf(-10.0) > 0.0);

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (p, sigma) = gen_discretized_gaussian(20, 5.0, &mut rng).unwrap();
    assert!((lo..=hi).contains(&sigma));
    assert_eq!(p.original_len(), 20);
}

#[test]
fn instance_streams_are_distinct() {
    use rand::Rng;
    let a: u64 = instance_rng(0, 0, 1).random();
    let b: u64 = instance_rng(0, 1, 0).random();
    let c: u64 = instance_rng(0, 0, 1).random();
    assert_ne!(a, b);
    assert_eq!(a, c);
}

fn small(family: Family, seed: u64) -> SweepConfig {
    SweepConfig {
        family,
        n_events: 20,
        lambda_grid: vec![1.0, 4.0, 8.0],
        reps: 6,
        seed,
        ..SweepConfig::default()
    }
}

#[test]
fn sweeps_are_deterministic() {
    for family in [Family::Arbitrary, Family::Gaussian] {
        let a = run_sweep(&small(family, 9), Some(1)).unwrap();
        let b = run_sweep(&small(family, 9), Some(3)).unwrap();
        assert_eq!(a.raw_csv(), b.raw_csv());
        assert_eq!(a.summary_csv(), b.summary_csv());
        assert!(a.failures.is_empty());
        assert_eq!(a.rows.len(), 18);
        let c = run_sweep(&small(family, 10), None).unwrap();
        assert_ne!(a.raw_csv(), c.raw_csv());
    }
}

#[test]
fn soft_error_never_exceeds_hard_error() {
    let report = run_sweep(&small(Family::Arbitrary, 4), None).unwrap();
    for row in &report.rows {
        assert!(row.soft_err <= row.hard_err + 1e-8, "{row:?}");
    }
    let header = report.raw_csv().lines().next().unwrap().to_string();
    assert_eq!(header, "lambda,family,rep,hard_err,soft_err");
    let header = report.summary_csv().lines().next().unwrap().to_string();
    assert_eq!(header, "lambda,mean_hard,sem_hard,mean_soft,sem_soft");
}

#[test]
fn curves_meet_at_large_lambda() {
    let config = SweepConfig {
        lambda_grid: vec![12.5],
        ..SweepConfig::default()
    };
    let report = run_sweep(&config, None).unwrap();
    let s = &report.summary[0];
    assert_eq!(s.count, 50);
    assert!(s.mean_hard - s.mean_soft <= 0.05, "{s:?}");
}

#[test]
fn invalid_configs() {
    let bad = [
        SweepConfig { n_events: 1, ..SweepConfig::default() },
        SweepConfig { delta: 1.0, ..SweepConfig::default() },
        SweepConfig { reps: 0, ..SweepConfig::default() },
        SweepConfig { lambda_grid: vec![], ..SweepConfig::default() },
        SweepConfig { lambda_grid: vec![2.0, 1.0], ..SweepConfig::default() },
    ];
    for c in bad {
        assert!(run_sweep(&c, None).is_err(), "{c:?}");
    }
}
