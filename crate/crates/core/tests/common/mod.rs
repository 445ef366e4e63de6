#![allow(dead_code)]

use advscc::divergence::{point_mass_divergence, DivergenceKind};
use advscc::model::{GameSpec, Pmf};
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

/// Random pmf on `n` events; with probability `tie` one entry is copied
/// onto another so level sets of size two appear.
pub fn random_pmf(n: usize, tie: f64, rng: &mut impl Rng) -> Pmf {
    let mut w: Vec<f64> = (0..n).map(|_| 1e-3 + <Exp1 as Distribution<f64>>::sample(&Exp1, rng)).collect();
    if n >= 2 && rng.random_bool(tie) {
        let a = rng.random_range(0..n);
        let b = (a + 1 + rng.random_range(0..n - 1)) % n;
        w[b] = w[a];
    }
    let s: f64 = w.iter().sum();
    Pmf::new(&w.iter().map(|x| x / s).collect::<Vec<_>>()).unwrap()
}

pub fn kind_for(i: usize) -> DivergenceKind {
    if i.is_multiple_of(2) {
        DivergenceKind::Kl2
    } else {
        DivergenceKind::SquaredEuclidean
    }
}

/// Largest and smallest point-mass divergences.
pub fn point_mass_range(kind: &DivergenceKind, p: &Pmf) -> (f64, f64) {
    (0..p.len())
        .map(|j| point_mass_divergence(kind, j, p).unwrap())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)))
}

/// Random spec whose constraint admits at least one distribution.
pub fn random_feasible_spec(n: usize, kind: DivergenceKind, rng: &mut impl Rng) -> GameSpec {
    let p = random_pmf(n, 0.3, rng);
    let (_, hi) = point_mass_range(&kind, &p);
    let lambda = rng.random_range(0.05..0.95) * hi;
    let delta = rng.random_range(0.05..0.5);
    GameSpec::new(p, delta, lambda, kind).unwrap()
}

/// Analytic density used to score the continuous learner.
pub enum ReferenceDensity {
    Gaussian { mean: f64, sd: f64 },
    /// Equal-weight mixture of Gaussians.
    Mixture(Vec<(f64, f64)>),
}

impl ReferenceDensity {
    pub fn standard() -> Self {
        ReferenceDensity::Gaussian { mean: 0.0, sd: 1.0 }
    }

    fn parts(&self) -> Vec<Normal> {
        match self {
            ReferenceDensity::Gaussian { mean, sd } => vec![Normal::new(*mean, *sd).unwrap()],
            ReferenceDensity::Mixture(c) => {
                c.iter().map(|&(m, s)| Normal::new(m, s).unwrap()).collect()
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let parts = self.parts();
        parts.iter().map(|n| n.pdf(x)).sum::<f64>() / parts.len() as f64
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let parts = self.parts();
        parts.iter().map(|n| n.cdf(x)).sum::<f64>() / parts.len() as f64
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        let (m, s) = match self {
            ReferenceDensity::Gaussian { mean, sd } => (*mean, *sd),
            ReferenceDensity::Mixture(c) => c[rng.random_range(0..c.len())],
        };
        rand_distr::Normal::new(m, s).unwrap().sample(rng)
    }

    /// Density level `c` with `P(pdf(X) < c) = delta`, from a fine quadrature
    /// of the density over `[lo, hi]`.
    pub fn level_threshold(&self, delta: f64, lo: f64, hi: f64) -> f64 {
        const STEPS: usize = 200_000;
        let h = (hi - lo) / STEPS as f64;
        let mut cells: Vec<(f64, f64)> = (0..STEPS)
            .map(|i| {
                let x = lo + (i as f64 + 0.5) * h;
                let f = self.pdf(x);
                (f, f * h)
            })
            .collect();
        cells.sort_by(|a, b| a.0.total_cmp(&b.0));
        // Mass beyond the window sits below every interior density.
        let mut mass = self.cdf(lo) + 1.0 - self.cdf(hi);
        for (f, m) in cells {
            mass += m;
            if mass >= delta {
                return f;
            }
        }
        f64::INFINITY
    }
}
