//! Randomized property batteries for constraint divergences.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::divergence::{
    check_transfer_feasibility, evaluate, transfer, DivergenceKind, TransferSpec,
};
use crate::error::{Error, Result};
use crate::model::Pmf;

/// Slack granted to every inequality in the battery.
pub const PROPERTY_TOL: f64 = 1e-10;
const MAX_EVENTS: usize = 8;
const MAX_REPORTED_FAILURES: usize = 20;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BatteryReport {
    pub divergence: String,
    pub trials: usize,
    pub receding_pass: usize,
    pub symmetric_pass: usize,
    pub convexity_pass: usize,
    /// `None` for kinds other than KL.
    pub kl_bound_pass: Option<usize>,
    pub transfer_pass: usize,
    pub failures: Vec<String>,
}

impl BatteryReport {
    pub fn all_passed(&self) -> bool {
        let t = self.trials;
        self.receding_pass == t
            && self.symmetric_pass == t
            && self.convexity_pass == t
            && self.kl_bound_pass.is_none_or(|k| k == t)
            && self.transfer_pass == t
    }

    fn fail(&mut self, msg: String) {
        if self.failures.len() < MAX_REPORTED_FAILURES {
            self.failures.push(msg);
        }
    }
}

fn simplex_point(n: usize, sparse: bool, rng: &mut impl Rng) -> Vec<f64> {
    let mut q: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    if sparse {
        let zero = rng.random_range(0..n);
        q[zero] = 0.0;
        if q.iter().all(|&x| x == 0.0) {
            q[(zero + 1) % n] = 1.0;
        }
    }
    let s: f64 = q.iter().sum();
    q.iter_mut().for_each(|x| *x /= s);
    q
}

/// Random target with at least one tied pair, returned with that pair.
fn tied_target(rng: &mut impl Rng) -> Result<(Pmf, usize, usize)> {
    let n = rng.random_range(3..=MAX_EVENTS);
    let mut w: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    w[1] = w[0];
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let w: Vec<f64> = order.iter().map(|&i| w[i]).collect();
    let s: f64 = w.iter().sum();
    let p = Pmf::new(&w.iter().map(|x| x / s).collect::<Vec<_>>())?;
    let j = order.iter().position(|&i| i == 0).expect("index 0 present");
    let k = order.iter().position(|&i| i == 1).expect("index 1 present");
    Ok((p, j, k))
}

/// Draws a pair of distinct events, ordered so the first is no more likely.
fn ordered_pair(p: &[f64], rng: &mut impl Rng) -> (usize, usize) {
    let n = p.len();
    let a = rng.random_range(0..n);
    let mut b = rng.random_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    if p[a] <= p[b] {
        (a, b)
    } else {
        (b, a)
    }
}

/// Checks, on random targets and distributions, that `kind` is receding,
/// 2-symmetric and convex, that KL stays below `log2(1 / min p)`, and that
/// transfers towards less likely events never lower the divergence.
pub fn divergence_battery(
    kind: &DivergenceKind,
    trials: usize,
    seed: u64,
) -> Result<BatteryReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let is_kl = matches!(kind, DivergenceKind::Kl2);
    let mut rep = BatteryReport {
        divergence: kind.to_string(),
        trials,
        kl_bound_pass: is_kl.then_some(0),
        ..Default::default()
    };
    for t in 0..trials {
        let (pmf, tj, tk) = tied_target(&mut rng)?;
        let p = pmf.probs();
        let n = p.len();
        let eval = |q: &[f64]| evaluate(kind, q, &pmf);

        // Receding: moving mass towards the less likely event.
        let mut x = simplex_point(n, rng.random_bool(0.3), &mut rng);
        let (j, k) = ordered_pair(p, &mut rng);
        if x[k] == 0.0 {
            x[k] = 0.5;
            let s: f64 = x.iter().sum();
            x.iter_mut().for_each(|v| *v /= s);
        }
        let (before, after) = (eval(&x)?, eval(&transfer(&x, j, k))?);
        if after > before - PROPERTY_TOL {
            rep.receding_pass += 1;
        } else {
            rep.fail(format!(
                "trial {t}: receding {after} < {before} for ({j}, {k})"
            ));
        }

        // 2-symmetric on the tied pair.
        let (a, b) = (eval(&transfer(&x, tj, tk))?, eval(&transfer(&x, tk, tj))?);
        if (a - b).abs() <= PROPERTY_TOL {
            rep.symmetric_pass += 1;
        } else {
            rep.fail(format!(
                "trial {t}: 2-symmetric gap {} on ({tj}, {tk})",
                (a - b).abs()
            ));
        }

        // Convexity along a random chord.
        let q1 = simplex_point(n, rng.random_bool(0.3), &mut rng);
        let q2 = simplex_point(n, rng.random_bool(0.3), &mut rng);
        let alpha: f64 = rng.random();
        let mix: Vec<f64> = q1
            .iter()
            .zip(&q2)
            .map(|(u, v)| alpha * u + (1.0 - alpha) * v)
            .collect();
        let chord = alpha * eval(&q1)? + (1.0 - alpha) * eval(&q2)?;
        let mid = eval(&mix)?;
        if mid <= chord + PROPERTY_TOL {
            rep.convexity_pass += 1;
        } else {
            rep.fail(format!("trial {t}: convexity {mid} > {chord}"));
        }

        if let Some(count) = rep.kl_bound_pass.as_mut() {
            let bound = (1.0 / pmf.min_prob()).log2();
            let d = eval(&q1)?;
            if d <= bound + PROPERTY_TOL {
                *count += 1;
            } else {
                rep.fail(format!("trial {t}: KL {d} above log2(1/min p) = {bound}"));
            }
        }

        // Transfer witness: t(Q, a, b) with p_a <= p_b keeps D_P from dropping.
        let q = simplex_point(n, rng.random_bool(0.3), &mut rng);
        let (to, from) = ordered_pair(p, &mut rng);
        let (_, moved) = check_transfer_feasibility(kind, &pmf, &q, TransferSpec::new(from, to)?)?;
        let base = eval(&q)?;
        if moved >= base - PROPERTY_TOL {
            rep.transfer_pass += 1;
        } else {
            rep.fail(format!(
                "trial {t}: transfer {from}->{to} lowers {base} to {moved}"
            ));
        }
    }
    Ok(rep)
}
