//! Adversary best responses against a fixed rejection function.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::divergence::{evaluate_unchecked, SupportTerms};
use crate::error::{Error, Result};
use crate::game::{pair_root_terms, partition_level_sets, SparseDist, CLASS_TOL, LEVEL_TOL};
use crate::model::{AdversaryConstraint, DualSpec, GameSpec, RejectionFunction};

/// Largest sample space the lattice oracle accepts.
pub const BRUTE_MAX_EVENTS: usize = 5;
pub const BRUTE_MIN_RESOLUTION: u32 = 100;
/// Cap on rejection-sampling attempts per trial of the property check.
pub const SAMPLING_CAP: usize = 100_000;

impl AsRef<AdversaryConstraint> for AdversaryConstraint {
    fn as_ref(&self) -> &AdversaryConstraint {
        self
    }
}

impl AsRef<AdversaryConstraint> for GameSpec {
    fn as_ref(&self) -> &AdversaryConstraint {
        &self.constraint
    }
}

impl AsRef<AdversaryConstraint> for DualSpec {
    fn as_ref(&self) -> &AdversaryConstraint {
        &self.constraint
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResponseMode {
    Structured,
    Brute,
    Unrestricted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestResponse {
    /// Nonzero masses keyed by original event index.
    pub q: SparseDist,
    /// `rho(r, q)`.
    pub value: f64,
    /// `D_P(q)`.
    pub divergence: f64,
    pub mode: ResponseMode,
}

/// Exact minimizer of `rho(r, Q)` over `{Q : D_P(Q) >= lambda}`.
///
/// Candidates are point masses on events whose point mass meets the
/// constraint and two-point mixtures of an event above lambda with one
/// below, weighted at the pair root. The root depends only on the two level
/// sets, so within each pair of sets only the cheapest members matter.
/// `r` may be indexed by surviving events or by the original space.
pub fn best_response(
    r: &RejectionFunction,
    constraint: impl AsRef<AdversaryConstraint>,
) -> Result<BestResponse> {
    let c = constraint.as_ref();
    let p = &c.p;
    let r = p.restrict(r)?;
    let rates = r.rates();
    let part = partition_level_sets(p, LEVEL_TOL)?;
    let terms = SupportTerms::new(&c.divergence, p.probs());
    let div: Vec<f64> = part
        .sets
        .iter()
        .map(|s| terms.point_mass(s.representative()))
        .collect();
    if div[0] < c.lambda - CLASS_TOL {
        return Err(Error::AdversaryInfeasible);
    }
    // Cheapest member of each level set (lowest index on ties).
    let cheapest: Vec<usize> = part
        .sets
        .iter()
        .map(|s| {
            s.members.iter().copied().fold(s.members[0], |best, i| {
                if rates[i] < rates[best] {
                    i
                } else {
                    best
                }
            })
        })
        .collect();

    let orig = p.kept_indices();
    let mut best: Option<BestResponse> = None;
    let mut offer = |cand: BestResponse| {
        if best.as_ref().is_none_or(|b| cand.value < b.value) {
            best = Some(cand);
        }
    };
    let mut singles: Vec<usize> = (0..part.k())
        .filter(|&s| div[s] >= c.lambda - CLASS_TOL)
        .map(|s| cheapest[s])
        .collect();
    singles.sort_by(|&a, &b| rates[a].total_cmp(&rates[b]).then(a.cmp(&b)));
    if let Some(&j) = singles.first() {
        offer(BestResponse {
            q: vec![(orig[j], 1.0)],
            value: rates[j],
            divergence: terms.point_mass(j),
            mode: ResponseMode::Structured,
        });
    }
    for l in (0..part.k()).filter(|&s| div[s] > c.lambda + CLASS_TOL) {
        for h in (0..part.k()).filter(|&s| div[s] < c.lambda - CLASS_TOL) {
            let (j, k) = (cheapest[l], cheapest[h]);
            let q = pair_root_terms(
                &terms,
                c.lambda,
                part.sets[l].representative(),
                part.sets[h].representative(),
            )?;
            offer(BestResponse {
                q: vec![(orig[j], q), (orig[k], 1.0 - q)],
                value: q * rates[j] + (1.0 - q) * rates[k],
                divergence: terms.two_point(j, k, q),
                mode: ResponseMode::Structured,
            });
        }
    }
    best.ok_or(Error::AdversaryInfeasible)
}

/// Best response of an adversary free to pick any distribution.
pub fn unrestricted_response(
    r: &RejectionFunction,
    constraint: impl AsRef<AdversaryConstraint>,
) -> Result<BestResponse> {
    let c = constraint.as_ref();
    let p = &c.p;
    let r = p.restrict(r)?;
    let j = r.argmin_set(0.0)[0];
    Ok(BestResponse {
        q: vec![(p.kept_indices()[j], 1.0)],
        value: r.rates()[j],
        divergence: SupportTerms::new(&c.divergence, p.probs()).point_mass(j),
        mode: ResponseMode::Unrestricted,
    })
}

/// Minimizes `rho(r, Q)` over lattice distributions with denominator
/// `resolution` that meet the constraint. The lattice has
/// `C(resolution + N - 1, N - 1)` points.
pub fn brute_force_best_response(
    r: &RejectionFunction,
    constraint: impl AsRef<AdversaryConstraint>,
    resolution: u32,
) -> Result<BestResponse> {
    let c = constraint.as_ref();
    let p = &c.p;
    let n = p.len();
    if n > BRUTE_MAX_EVENTS {
        return Err(Error::TooLarge(n));
    }
    if resolution < BRUTE_MIN_RESOLUTION {
        return Err(Error::InvalidParameter(format!(
            "resolution must be at least {BRUTE_MIN_RESOLUTION}, got {resolution}"
        )));
    }
    let r = p.restrict(r)?;
    let res = resolution as usize;
    let scale = 1.0 / resolution as f64;
    let terms: Vec<Vec<f64>> = p
        .probs()
        .iter()
        .map(|&pi| {
            (0..=res)
                .map(|m| c.divergence.term(m as f64 * scale, pi))
                .collect()
        })
        .collect();
    let rates: Vec<Vec<f64>> = r
        .rates()
        .iter()
        .map(|&ri| (0..=res).map(|m| ri * m as f64 * scale).collect())
        .collect();

    struct Search<'a> {
        terms: &'a [Vec<f64>],
        rates: &'a [Vec<f64>],
        threshold: f64,
        counts: Vec<usize>,
        best: Option<(f64, f64, Vec<usize>)>,
    }
    impl Search<'_> {
        fn walk(&mut self, i: usize, left: usize, div: f64, rho: f64) {
            let n = self.terms.len();
            if i + 1 == n {
                let div = div + self.terms[i][left];
                let rho = rho + self.rates[i][left];
                if div >= self.threshold && self.best.as_ref().is_none_or(|b| rho < b.0) {
                    self.counts[i] = left;
                    self.best = Some((rho, div, self.counts.clone()));
                }
                return;
            }
            for m in 0..=left {
                self.counts[i] = m;
                self.walk(
                    i + 1,
                    left - m,
                    div + self.terms[i][m],
                    rho + self.rates[i][m],
                );
            }
        }
    }
    let mut search = Search {
        terms: &terms,
        rates: &rates,
        threshold: c.lambda - 1e-12,
        counts: vec![0; n],
        best: None,
    };
    search.walk(0, res, 0.0, 0.0);
    let (value, divergence, counts) = search.best.ok_or(Error::NoFeasiblePoint(resolution))?;
    let orig = p.kept_indices();
    Ok(BestResponse {
        q: counts
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 0)
            .map(|(i, &m)| (orig[i], m as f64 * scale))
            .collect(),
        value,
        divergence,
        mode: ResponseMode::Brute,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub trials: usize,
    /// Trials in which a constrained distribution was found.
    pub sampled: usize,
    pub property_a_pass: usize,
    pub property_b_pass: usize,
    pub property_c_pass: usize,
    /// Trials where no two events share a probability, so C holds vacuously.
    pub property_c_vacuous: usize,
    pub failures: Vec<String>,
}

impl PropertyReport {
    pub fn all_passed(&self) -> bool {
        self.sampled == self.trials
            && self.property_a_pass == self.trials
            && self.property_b_pass == self.trials
            && self.property_c_pass == self.trials
    }
}

const MAX_REPORTED_FAILURES: usize = 20;

/// Samples `Q` uniformly on the simplex until `D_P(Q) >= lambda`.
fn sample_constrained(c: &AdversaryConstraint, rng: &mut impl Rng) -> Option<Vec<f64>> {
    let n = c.p.len();
    for _ in 0..SAMPLING_CAP {
        let mut q: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
        let s: f64 = q.iter().sum();
        q.iter_mut().for_each(|x| *x /= s);
        if evaluate_unchecked(&c.divergence, &q, c.p.probs()) >= c.lambda {
            return Some(q);
        }
    }
    None
}

/// Randomized check of the transfer properties A, B and C of the
/// constrained strategy space, using the witnesses `t(Q, j, k)` for A and B
/// and the swap of two equal-probability events for C.
pub fn property_abc_transfer_check(
    constraint: impl AsRef<AdversaryConstraint>,
    trials: usize,
    seed: u64,
) -> Result<PropertyReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let c = constraint.as_ref();
    let p = c.p.probs();
    let n = p.len();
    let part = partition_level_sets(&c.p, LEVEL_TOL)?;
    let tied: Vec<&[usize]> = part
        .sets
        .iter()
        .filter(|s| s.size() >= 2)
        .map(|s| s.members.as_slice())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = PropertyReport {
        trials,
        ..Default::default()
    };
    let fail = |report: &mut PropertyReport, msg: String| {
        if report.failures.len() < MAX_REPORTED_FAILURES {
            report.failures.push(msg);
        }
    };
    let eval = |q: &[f64]| evaluate_unchecked(&c.divergence, q, p);
    let floor = c.lambda - 1e-10;
    for t in 0..trials {
        let Some(q) = sample_constrained(c, &mut rng) else {
            fail(
                &mut report,
                format!("trial {t}: no constrained sample in {SAMPLING_CAP} draws"),
            );
            continue;
        };
        report.sampled += 1;
        let dq = eval(&q);

        if n >= 2 {
            let a = rng.random_range(0..n);
            let mut b = rng.random_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            let (j, k) = if p[a] <= p[b] { (a, b) } else { (b, a) };
            let moved = crate::divergence::transfer(&q, j, k);
            let dm = eval(&moved);
            let inside = dm >= floor;
            let a_ok = !(p[j] < p[k] && q[j] < q[k]) || q[j] + moved[j] >= q[k] + moved[k];
            let b_ok = !(q[j] / p[j] < q[k] / p[k]) || moved[j] / p[j] >= moved[k] / p[k];
            if inside && a_ok {
                report.property_a_pass += 1;
            } else {
                fail(
                    &mut report,
                    format!("trial {t}: property A fails for ({j}, {k})"),
                );
            }
            if inside && b_ok {
                report.property_b_pass += 1;
            } else {
                fail(
                    &mut report,
                    format!("trial {t}: property B fails for ({j}, {k})"),
                );
            }
        } else {
            report.property_a_pass += 1;
            report.property_b_pass += 1;
        }

        if tied.is_empty() {
            report.property_c_vacuous += 1;
            report.property_c_pass += 1;
        } else {
            let set = tied[rng.random_range(0..tied.len())];
            let a = rng.random_range(0..set.len());
            let mut b = rng.random_range(0..set.len() - 1);
            if b >= a {
                b += 1;
            }
            let (j, k) = (set[a], set[b]);
            let mut swapped = q.clone();
            swapped.swap(j, k);
            let ds = eval(&swapped);
            if (ds - dq).abs() <= 1e-10 && ds >= floor {
                report.property_c_pass += 1;
            } else {
                fail(
                    &mut report,
                    format!("trial {t}: property C fails for ({j}, {k}): {dq} vs {ds}"),
                );
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::DivergenceKind;
    use crate::model::make_pmf;

    fn constraint(p: &[f64], lambda: f64) -> AdversaryConstraint {
        AdversaryConstraint::new(make_pmf(p).unwrap(), lambda, DivergenceKind::Kl2).unwrap()
    }

    #[test]
    fn vulnerable_singleton() {
        let c = constraint(&[0.2, 0.8], 1.0);
        let r = RejectionFunction::soft(vec![0.0, 0.2]).unwrap();
        let b = best_response(&r, &c).unwrap();
        assert_eq!(b.value, 0.0);
        assert_eq!(b.q, vec![(0, 1.0)]);
    }

    #[test]
    fn pair_response_uses_root() {
        let c = constraint(&[0.2, 0.8], 1.0);
        let r = RejectionFunction::soft(vec![0.5, 0.0]).unwrap();
        let b = best_response(&r, &c).unwrap();
        assert!((b.value - 0.5 * 0.747_019_759_452_295_6).abs() < 1e-12);
        assert!((b.divergence - 1.0).abs() < 1e-10);
    }

    #[test]
    fn vacuous_gives_min_rate() {
        let c = constraint(&[0.5, 0.5], 0.5);
        let r = RejectionFunction::soft(vec![0.3, 0.1]).unwrap();
        let b = best_response(&r, &c).unwrap();
        assert_eq!(b.value, 0.1);
        assert_eq!(b.q, vec![(1, 1.0)]);
    }

    #[test]
    fn infeasible_constraint() {
        let c = constraint(&[0.5, 0.5], 2.0);
        let r = RejectionFunction::soft(vec![0.1, 0.1]).unwrap();
        assert_eq!(best_response(&r, &c), Err(Error::AdversaryInfeasible));
    }

    #[test]
    fn brute_limits() {
        let c = constraint(&[0.2; 5], 0.5);
        let r = RejectionFunction::soft(vec![0.1; 5]).unwrap();
        assert!(brute_force_best_response(&r, &c, 100).is_ok());
        let c = constraint(&[1.0 / 6.0; 6], 0.5);
        let r = RejectionFunction::soft(vec![0.1; 6]).unwrap();
        assert_eq!(
            brute_force_best_response(&r, &c, 100),
            Err(Error::TooLarge(6))
        );
        let c = constraint(&[0.2, 0.8], 2.33);
        let r = RejectionFunction::soft(vec![0.1; 2]).unwrap();
        assert_eq!(
            brute_force_best_response(&r, &c, 100),
            Err(Error::NoFeasiblePoint(100))
        );
    }

    #[test]
    fn unrestricted_is_min_rate() {
        let c = constraint(&[0.2, 0.3, 0.5], 0.0);
        let r = RejectionFunction::soft(vec![0.4, 0.05, 0.05]).unwrap();
        let b = unrestricted_response(&r, &c).unwrap();
        assert_eq!(b.value, 0.05);
        assert_eq!(b.q, vec![(1, 1.0)]);
    }
}
