//! Probability and strategy types shared by the game solvers.
//!
//! A [`Pmf`] only ever holds strictly positive masses. Events with zero mass
//! are stripped at construction and remembered, so that rejection functions
//! produced by the solvers can be lifted back to the caller's index space
//! with every null event rejected outright.

use serde::{Deserialize, Serialize};

use crate::divergence::DivergenceKind;
use crate::error::{Error, Result};

/// Input tolerance on `|sum - 1|` for user supplied masses.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Finite probability mass function with strictly positive entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pmf {
    probs: Vec<f64>,
    kept: Vec<usize>,
    original_len: usize,
}

impl Pmf {
    /// Validates `values`, strips zero entries and renormalizes.
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty);
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite { index });
            }
            if value < 0.0 {
                return Err(Error::NegativeMass { index, value });
            }
        }
        let sum = compensated_sum(values.iter().copied());
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::SumNotOne { sum });
        }
        let kept: Vec<usize> = (0..values.len()).filter(|&i| values[i] > 0.0).collect();
        let mut probs: Vec<f64> = kept.iter().map(|&i| values[i]).collect();
        if sum != 1.0 {
            for p in &mut probs {
                *p /= sum;
            }
        }
        Ok(Self {
            probs,
            kept,
            original_len: values.len(),
        })
    }

    /// Masses of the surviving (non-null) events.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Number of surviving events.
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Length of the index space the pmf was built from, null events included.
    pub fn original_len(&self) -> usize {
        self.original_len
    }

    /// Original index of each surviving event.
    pub fn kept_indices(&self) -> &[usize] {
        &self.kept
    }

    /// Original indices of the stripped null events.
    pub fn stripped_indices(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut next = self.kept.iter().peekable();
        for i in 0..self.original_len {
            if next.peek() == Some(&&i) {
                next.next();
            } else {
                out.push(i);
            }
        }
        out
    }

    pub fn min_prob(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Expands a function over surviving events to the original index space,
    /// rejecting every null event.
    pub fn lift(&self, r: &RejectionFunction) -> Result<RejectionFunction> {
        check_len(self.len(), r.len())?;
        let mut rates = vec![1.0; self.original_len];
        for (&orig, &rate) in self.kept.iter().zip(r.rates()) {
            rates[orig] = rate;
        }
        Ok(RejectionFunction {
            rates,
            kind: r.kind,
        })
    }

    /// Accepts a function over either the surviving events or the original
    /// index space and returns its restriction to the surviving events.
    pub fn restrict(&self, r: &RejectionFunction) -> Result<RejectionFunction> {
        if r.len() == self.len() {
            Ok(r.clone())
        } else if r.len() == self.original_len {
            Ok(RejectionFunction {
                rates: self.kept.iter().map(|&i| r.rates[i]).collect(),
                kind: r.kind,
            })
        } else {
            Err(Error::DimensionMismatch {
                expected: self.len(),
                got: r.len(),
            })
        }
    }

    /// Maps a distribution over surviving events back to the original space.
    pub fn lift_distribution(&self, q: &[f64]) -> Result<Vec<f64>> {
        check_len(self.len(), q.len())?;
        let mut out = vec![0.0; self.original_len];
        for (&orig, &x) in self.kept.iter().zip(q) {
            out[orig] = x;
        }
        Ok(out)
    }
}

/// Convenience constructor mirroring [`Pmf::new`].
pub fn make_pmf(values: &[f64]) -> Result<Pmf> {
    Pmf::new(values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RejectionKind {
    Soft,
    Hard,
}

/// Per-event rejection probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionFunction {
    rates: Vec<f64>,
    kind: RejectionKind,
}

impl RejectionFunction {
    pub fn soft(rates: Vec<f64>) -> Result<Self> {
        for (index, &r) in rates.iter().enumerate() {
            if !r.is_finite() {
                return Err(Error::NonFinite { index });
            }
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::InvalidParameter(format!(
                    "rejection rate {r} at index {index} outside [0, 1]"
                )));
            }
        }
        Ok(Self {
            rates,
            kind: RejectionKind::Soft,
        })
    }

    pub fn hard(rates: Vec<f64>) -> Result<Self> {
        for (index, &r) in rates.iter().enumerate() {
            if r != 0.0 && r != 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "hard rejection rate {r} at index {index} is not 0 or 1"
                )));
            }
        }
        Ok(Self {
            rates,
            kind: RejectionKind::Hard,
        })
    }

    pub fn from_rejected(n: usize, rejected: impl IntoIterator<Item = usize>) -> Self {
        let mut rates = vec![0.0; n];
        for i in rejected {
            rates[i] = 1.0;
        }
        Self {
            rates,
            kind: RejectionKind::Hard,
        }
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn kind(&self) -> RejectionKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn min_rate(&self) -> f64 {
        self.rates.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Events whose rate is within `tol` of the minimum.
    pub fn argmin_set(&self, tol: f64) -> Vec<usize> {
        let min = self.min_rate();
        (0..self.rates.len())
            .filter(|&i| self.rates[i] <= min + tol)
            .collect()
    }
}

/// Expected rejection `sum_i d_i r(i)` of `r` under the distribution `d`.
pub fn rejection_rate(r: &RejectionFunction, d: &[f64]) -> Result<f64> {
    check_len(r.len(), d.len())?;
    Ok(r.rates.iter().zip(d).map(|(r, d)| r * d).sum())
}

/// The coin-flip rejector: rate `delta` on every non-null event, 1 on null
/// events. Indexed over the pmf's original space.
pub fn uniform_soft_rejector(p: &Pmf, delta: f64) -> Result<RejectionFunction> {
    check_delta(delta)?;
    p.lift(&RejectionFunction {
        rates: vec![delta; p.len()],
        kind: RejectionKind::Soft,
    })
}

/// Parameters of the adversary's strategy space `{Q : D_P(Q) >= lambda}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdversaryConstraint {
    pub p: Pmf,
    pub lambda: f64,
    pub divergence: DivergenceKind,
}

impl AdversaryConstraint {
    pub fn new(p: Pmf, lambda: f64, divergence: DivergenceKind) -> Result<Self> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "lambda must be finite and >= 0, got {lambda}"
            )));
        }
        Ok(Self {
            p,
            lambda,
            divergence,
        })
    }
}

/// One constrained game instance: target pmf, type I budget, adversary constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    pub constraint: AdversaryConstraint,
    pub delta: f64,
}

impl GameSpec {
    pub fn new(p: Pmf, delta: f64, lambda: f64, divergence: DivergenceKind) -> Result<Self> {
        check_delta(delta)?;
        Ok(Self {
            constraint: AdversaryConstraint::new(p, lambda, divergence)?,
            delta,
        })
    }

    pub fn p(&self) -> &Pmf {
        &self.constraint.p
    }

    pub fn lambda(&self) -> f64 {
        self.constraint.lambda
    }

    pub fn divergence(&self) -> &DivergenceKind {
        &self.constraint.divergence
    }
}

/// Dual game: guarantee type II error `delta_q`, minimize type I error.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSpec {
    pub constraint: AdversaryConstraint,
    pub delta_q: f64,
}

impl DualSpec {
    pub fn new(p: Pmf, delta_q: f64, lambda: f64, divergence: DivergenceKind) -> Result<Self> {
        if !(delta_q > 0.0 && delta_q < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta_q must lie in (0, 1), got {delta_q}"
            )));
        }
        Ok(Self {
            constraint: AdversaryConstraint::new(p, lambda, divergence)?,
            delta_q,
        })
    }
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 1), got {delta}"
        )))
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// Neumaier-compensated summation.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pmf_keeps_valid_masses() {
        let p = make_pmf(&[0.06, 0.09, 0.85]).unwrap();
        assert_eq!(p.len(), 3);
        for (a, b) in p.probs().iter().zip([0.06, 0.09, 0.85]) {
            assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn pmf_strips_null_events() {
        let p = make_pmf(&[0.5, 0.5, 0.0]).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.original_len(), 3);
        assert_eq!(p.stripped_indices(), vec![2]);
        assert_eq!(p.kept_indices(), &[0, 1]);
    }

    #[test]
    fn pmf_rejects_bad_input() {
        assert!(matches!(
            make_pmf(&[0.3, 0.3]),
            Err(Error::SumNotOne { .. })
        ));
        assert!(matches!(make_pmf(&[]), Err(Error::Empty)));
        assert!(matches!(
            make_pmf(&[1.2, -0.2]),
            Err(Error::NegativeMass { index: 1, .. })
        ));
        assert!(matches!(
            make_pmf(&[0.0, 0.0]),
            Err(Error::SumNotOne { .. })
        ));
    }

    #[test]
    fn pmf_renormalizes_decimal_roundoff() {
        let p = make_pmf(&[0.3333333333, 0.3333333333, 0.3333333333]).unwrap();
        let s: f64 = p.probs().iter().sum();
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejection_rate_fixtures() {
        let r = RejectionFunction::hard(vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(rejection_rate(&r, &[0.01, 0.02, 0.97]).unwrap(), 0.02);

        let r = RejectionFunction::soft(vec![0.0, 0.125]).unwrap();
        assert!((rejection_rate(&r, &[0.1, 0.9]).unwrap() - 0.1125).abs() <= 1e-12);
        assert!((rejection_rate(&r, &[0.2, 0.8]).unwrap() - 0.1).abs() <= 1e-12);

        let zero = RejectionFunction::soft(vec![0.0; 3]).unwrap();
        assert_eq!(rejection_rate(&zero, &[0.2, 0.3, 0.5]).unwrap(), 0.0);

        assert!(matches!(
            rejection_rate(&zero, &[0.5, 0.5]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn uniform_rejector_rates() {
        let p = make_pmf(&[0.2, 0.8]).unwrap();
        let r = uniform_soft_rejector(&p, 0.1).unwrap();
        assert_eq!(r.rates(), &[0.1, 0.1]);

        let p = make_pmf(&[0.5, 0.0, 0.5]).unwrap();
        let r = uniform_soft_rejector(&p, 0.1).unwrap();
        assert_eq!(r.rates(), &[0.1, 1.0, 0.1]);
        let rho = rejection_rate(&r, &[0.5, 0.0, 0.5]).unwrap();
        assert_eq!(rho, 0.1);

        assert!(uniform_soft_rejector(&p, 0.0).is_err());
        assert!(uniform_soft_rejector(&p, 1.0).is_err());
    }

    fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..n)
            .map(|_| -rng.random::<f64>().max(1e-300).ln())
            .collect();
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / s).collect()
    }

    #[test]
    fn coin_flip_rate_is_delta_under_any_distribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = make_pmf(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let r = uniform_soft_rejector(&p, 0.05).unwrap();
        for _ in 0..100 {
            let d = random_simplex(&mut rng, 4);
            assert!((rejection_rate(&r, &d).unwrap() - 0.05).abs() <= 1e-12);
        }
    }

    #[test]
    fn hard_rate_equals_rejected_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let d = random_simplex(&mut rng, 6);
            let rejected: Vec<usize> = (0..6).filter(|_| rng.random::<bool>()).collect();
            let r = RejectionFunction::from_rejected(6, rejected.iter().copied());
            let brute: f64 = (0..6)
                .map(|i| if rejected.contains(&i) { d[i] } else { 0.0 })
                .sum();
            assert_eq!(rejection_rate(&r, &d).unwrap(), brute);
        }
    }

    proptest::proptest! {
        #[test]
        fn rejection_rate_is_linear(
            rates in proptest::collection::vec(0.0f64..=1.0, 5),
            a in proptest::collection::vec(0.01f64..1.0, 5),
            b in proptest::collection::vec(0.01f64..1.0, 5),
            alpha in 0.0f64..=1.0,
        ) {
            let sa: f64 = a.iter().sum();
            let sb: f64 = b.iter().sum();
            let d1: Vec<f64> = a.iter().map(|x| x / sa).collect();
            let d2: Vec<f64> = b.iter().map(|x| x / sb).collect();
            let mix: Vec<f64> = d1.iter().zip(&d2).map(|(x, y)| alpha * x + (1.0 - alpha) * y).collect();
            let r = RejectionFunction::soft(rates).unwrap();
            let lhs = rejection_rate(&r, &mix).unwrap();
            let rhs = alpha * rejection_rate(&r, &d1).unwrap() + (1.0 - alpha) * rejection_rate(&r, &d2).unwrap();
            proptest::prop_assert!((lhs - rhs).abs() <= 1e-12);
        }
    }
}
