//! The constrained rejection game on a finite sample space.
//!
//! Events are grouped into level sets of equal probability. Because the
//! supported divergences are 2-symmetric and receding, the learner loses
//! nothing by rejecting all events of a level set at the same rate, and the
//! adversary's best response is a point mass or a two-point mixture whose
//! weight depends only on the pair of level sets involved.

use serde::{Deserialize, Serialize};

use crate::adversary::{best_response, BestResponse};
use crate::divergence::{DivergenceKind, SupportTerms};
use crate::error::{Error, Result};
use crate::lp::{solve_lp, LinearProgram, LpStatus, Sense};
use crate::model::{DualSpec, GameSpec, Pmf, RejectionFunction};

/// Events whose probabilities differ by at most this share a level set.
pub const LEVEL_TOL: f64 = 1e-12;
/// `|D - lambda|` at or below this puts a level set in class M.
pub const CLASS_TOL: f64 = 1e-10;
/// Slack used when comparing rates to decide vulnerability.
pub const RATE_TOL: f64 = 1e-9;
/// Greedy hard fill admits an event while the rejected mass stays within
/// `delta + HARD_FILL_TOL`.
pub const HARD_FILL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSet {
    /// Surviving-event indices, ascending.
    pub members: Vec<usize>,
    /// Mean member probability.
    pub prob: f64,
    /// Exact sum of member probabilities.
    pub mass: f64,
}

impl LevelSet {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn representative(&self) -> usize {
        self.members[0]
    }
}

/// Level sets `S_1..S_K`, strictly increasing in probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSetPartition {
    pub sets: Vec<LevelSet>,
    /// `set_of[i]` is the level set holding surviving event `i`.
    pub set_of: Vec<usize>,
}

impl LevelSetPartition {
    pub fn k(&self) -> usize {
        self.sets.len()
    }

    /// Expands per-set rates to per-event rates over surviving events.
    pub fn expand(&self, levels: &[f64]) -> Vec<f64> {
        self.set_of.iter().map(|&s| levels[s]).collect()
    }
}

/// Groups surviving events by probability. Events are scanned in ascending
/// order and a new set opens whenever an event exceeds the first member of
/// the current set by more than `tol`.
pub fn partition_level_sets(p: &Pmf, tol: f64) -> Result<LevelSetPartition> {
    if !(tol >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "grouping tolerance must be >= 0, got {tol}"
        )));
    }
    let probs = p.probs();
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[a].total_cmp(&probs[b]).then(a.cmp(&b)));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut anchor = f64::NAN;
    for i in order {
        if groups.is_empty() || probs[i] - anchor > tol {
            anchor = probs[i];
            groups.push(vec![i]);
        } else {
            groups.last_mut().unwrap().push(i);
        }
    }
    let mut set_of = vec![0; probs.len()];
    let sets = groups
        .into_iter()
        .enumerate()
        .map(|(s, mut members)| {
            members.sort_unstable();
            for &i in &members {
                set_of[i] = s;
            }
            let mass: f64 = members.iter().map(|&i| probs[i]).sum();
            LevelSet {
                prob: mass / members.len() as f64,
                mass,
                members,
            }
        })
        .collect();
    Ok(LevelSetPartition { sets, set_of })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LevelClass {
    /// Point mass divergence above lambda.
    L,
    /// Point mass divergence equal to lambda.
    M,
    /// Point mass divergence below lambda.
    H,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameStatus {
    Solved,
    /// Every distribution meets the constraint; the game is unconstrained.
    ConstraintVacuous,
    /// No distribution meets the constraint.
    AdversaryInfeasible,
}

impl GameStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            GameStatus::Solved => "solved",
            GameStatus::ConstraintVacuous => "constraint_vacuous",
            GameStatus::AdversaryInfeasible => "adversary_infeasible",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintClasses {
    /// Point mass divergence `D^S_P` per level set (non-increasing).
    pub divergences: Vec<f64>,
    pub classes: Vec<LevelClass>,
    /// Largest set index in L or M; `None` only when the adversary is infeasible.
    pub w: Option<usize>,
    pub status: GameStatus,
}

impl ConstraintClasses {
    pub fn indices(&self, class: LevelClass) -> impl Iterator<Item = usize> + '_ {
        self.classes
            .iter()
            .enumerate()
            .filter(move |(_, &c)| c == class)
            .map(|(i, _)| i)
    }
}

pub fn classify_level_sets(
    part: &LevelSetPartition,
    kind: &DivergenceKind,
    lambda: f64,
    p: &Pmf,
) -> Result<ConstraintClasses> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    let terms = SupportTerms::new(kind, p.probs());
    let divergences: Vec<f64> = part
        .sets
        .iter()
        .map(|s| terms.point_mass(s.representative()))
        .collect();
    let classes: Vec<LevelClass> = divergences
        .iter()
        .map(|&d| {
            if (d - lambda).abs() <= CLASS_TOL {
                LevelClass::M
            } else if d > lambda {
                LevelClass::L
            } else {
                LevelClass::H
            }
        })
        .collect();
    let w = classes.iter().rposition(|&c| c != LevelClass::H);
    let status = match (classes.first(), classes.last()) {
        (Some(LevelClass::H), _) => GameStatus::AdversaryInfeasible,
        (_, Some(LevelClass::L | LevelClass::M)) => GameStatus::ConstraintVacuous,
        _ => GameStatus::Solved,
    };
    Ok(ConstraintClasses {
        divergences,
        classes,
        w,
        status,
    })
}

/// Root in (0, 1) of `D_P(q X^(j) + (1 - q) X^(k)) = lambda` for surviving
/// events `j` (above lambda) and `k` (below lambda).
pub fn pair_root(kind: &DivergenceKind, lambda: f64, p: &Pmf, j: usize, k: usize) -> Result<f64> {
    for index in [j, k] {
        if index >= p.len() {
            return Err(Error::IndexOutOfRange { index, n: p.len() });
        }
    }
    pair_root_terms(&SupportTerms::new(kind, p.probs()), lambda, j, k)
}

/// [`pair_root`] for representatives of two level sets.
pub fn level_pair_root(
    part: &LevelSetPartition,
    l: usize,
    h: usize,
    kind: &DivergenceKind,
    lambda: f64,
    p: &Pmf,
) -> Result<f64> {
    pair_root(
        kind,
        lambda,
        p,
        part.sets[l].representative(),
        part.sets[h].representative(),
    )
}

pub(crate) fn pair_root_terms(
    terms: &SupportTerms<'_>,
    lambda: f64,
    j: usize,
    k: usize,
) -> Result<f64> {
    // g is convex with g(0) < lambda < g(1), so {g < lambda} is an interval
    // containing 0 and the crossing is unique.
    let g = |q: f64| terms.two_point(j, k, q) - lambda;
    let (low, high) = (g(0.0), g(1.0));
    if !(low < 0.0 && high > 0.0) {
        return Err(Error::NotBracketed { low, high });
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if -g(lo) < g(hi) { lo } else { hi })
}

/// Everything the LPs need about one instance.
struct Analysis {
    part: LevelSetPartition,
    classes: ConstraintClasses,
    /// `(l, h, q)` for every l in L and h in H.
    pairs: Vec<(usize, usize, f64)>,
}

fn analyze(p: &Pmf, kind: &DivergenceKind, lambda: f64) -> Result<Analysis> {
    let part = partition_level_sets(p, LEVEL_TOL)?;
    let classes = classify_level_sets(&part, kind, lambda, p)?;
    let mut pairs = Vec::new();
    if classes.status == GameStatus::Solved {
        let terms = SupportTerms::new(kind, p.probs());
        for l in classes.indices(LevelClass::L) {
            for h in classes.indices(LevelClass::H) {
                let q = pair_root_terms(
                    &terms,
                    lambda,
                    part.sets[l].representative(),
                    part.sets[h].representative(),
                )?;
                pairs.push((l, h, q));
            }
        }
    }
    Ok(Analysis {
        part,
        classes,
        pairs,
    })
}

/// Sparse distribution in the original index space.
pub type SparseDist = Vec<(usize, f64)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub status: GameStatus,
    /// Rate per level set, non-increasing.
    pub r_levels: Vec<f64>,
    /// Per-event rates over the original index space; null events get 1.
    pub r_events: RejectionFunction,
    /// Worst-case rejection rate; `None` when the adversary is infeasible.
    pub z: Option<f64>,
    pub type2: Option<f64>,
    /// Adversary best response against `r_events`.
    pub witness_q: Option<SparseDist>,
    pub vulnerable: bool,
    pub partition: LevelSetPartition,
    pub classes: ConstraintClasses,
}

/// Rates are vulnerable when some minimum-rate event can carry the whole
/// adversary mass on its own.
fn is_vulnerable(rates: &[f64], part: &LevelSetPartition, classes: &ConstraintClasses) -> bool {
    let min = rates.iter().copied().fold(f64::INFINITY, f64::min);
    rates
        .iter()
        .enumerate()
        .any(|(i, &r)| r <= min + RATE_TOL && classes.classes[part.set_of[i]] != LevelClass::H)
}

fn witness(resp: &BestResponse) -> SparseDist {
    resp.q.clone()
}

fn lift_soft(p: &Pmf, rates: Vec<f64>) -> Result<RejectionFunction> {
    p.lift(&RejectionFunction::soft(rates)?)
}

fn clamp_rates(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v.clamp(0.0, 1.0)).collect()
}

/// Adds `1 >= r_1 >= ... >= r_K >= 0` on variables `0..k`.
fn add_monotone(lp: &mut LinearProgram, k: usize) {
    let n = lp.num_vars();
    for i in 0..k {
        lp.set_bounds(i, 0.0, 1.0);
    }
    for i in 0..k.saturating_sub(1) {
        let mut row = vec![0.0; n];
        row[i + 1] = 1.0;
        row[i] = -1.0;
        lp.add_le(row, 0.0);
    }
}

/// Singleton guarantee terms: `r_w` and `r_m` for each M set.
fn singleton_terms(a: &Analysis) -> Vec<Vec<(usize, f64)>> {
    let mut rows = Vec::new();
    if let Some(w) = a.classes.w {
        rows.push(vec![(w, 1.0)]);
    }
    for m in a.classes.indices(LevelClass::M) {
        if Some(m) != a.classes.w {
            rows.push(vec![(m, 1.0)]);
        }
    }
    rows
}

fn pair_value(x: &[f64], (l, h, q): (usize, usize, f64)) -> f64 {
    q * x[l] + (1.0 - q) * x[h]
}

/// Pair rows violated by more than this are added on the next round.
const ROW_GEN_TOL: f64 = 1e-11;

/// Solves a game program whose guarantee rows are `bound(terms)`: the
/// singleton rows always, pair rows only once the current solution violates
/// them. `shortfall(x, pair)` is positive when `x` violates the pair row.
/// The final solution satisfies every pair row, so it is optimal for the
/// full program.
fn solve_with_lazy_pairs(
    a: &Analysis,
    build: impl Fn(&[Vec<(usize, f64)>]) -> LinearProgram,
    shortfall: impl Fn(&[f64], (usize, usize, f64)) -> f64,
) -> Result<Vec<f64>> {
    let mut active = vec![false; a.pairs.len()];
    for _ in 0..=a.pairs.len() {
        let mut terms = singleton_terms(a);
        for (i, &(l, h, q)) in a.pairs.iter().enumerate() {
            if active[i] {
                terms.push(vec![(l, q), (h, 1.0 - q)]);
            }
        }
        let sol = solve_lp(&build(&terms))?;
        if sol.status != LpStatus::Optimal {
            // The coin-flip rejector is always feasible, so this is a bug.
            return Err(Error::InvariantViolation(format!(
                "game program reported {:?}",
                sol.status
            )));
        }
        let mut added = false;
        for (i, &pair) in a.pairs.iter().enumerate() {
            if !active[i] && shortfall(&sol.x, pair) > ROW_GEN_TOL {
                active[i] = true;
                added = true;
            }
        }
        if !added {
            return Ok(sol.x);
        }
    }
    Err(Error::InvariantViolation(
        "row generation did not settle".into(),
    ))
}

/// Optimal soft rejection against the constrained adversary.
pub fn solve_soft(spec: &GameSpec) -> Result<SolveOutcome> {
    let p = spec.p();
    let delta = spec.delta;
    let a = analyze(p, spec.divergence(), spec.lambda())?;
    let k = a.part.k();
    match a.classes.status {
        GameStatus::AdversaryInfeasible => {
            return Ok(SolveOutcome {
                status: a.classes.status,
                r_levels: vec![delta; k],
                r_events: lift_soft(p, vec![delta; p.len()])?,
                z: None,
                type2: None,
                witness_q: None,
                vulnerable: false,
                partition: a.part,
                classes: a.classes,
            });
        }
        GameStatus::ConstraintVacuous => {
            let r = RejectionFunction::soft(vec![delta; p.len()])?;
            let resp = best_response(&r, &spec.constraint)?;
            return Ok(SolveOutcome {
                status: a.classes.status,
                r_levels: vec![delta; k],
                r_events: p.lift(&r)?,
                z: Some(delta),
                type2: Some(1.0 - delta),
                witness_q: Some(witness(&resp)),
                vulnerable: true,
                partition: a.part,
                classes: a.classes,
            });
        }
        GameStatus::Solved => {}
    }

    let zi = k;
    let build = |terms: &[Vec<(usize, f64)>]| {
        let mut objective = vec![0.0; k + 1];
        objective[zi] = 1.0;
        let mut lp = LinearProgram::new(Sense::Maximize, objective);
        add_monotone(&mut lp, k);
        lp.set_bounds(zi, 0.0, 1.0);
        let mut mass_row: Vec<f64> = a.part.sets.iter().map(|s| s.mass).collect();
        mass_row.push(0.0);
        lp.add_eq(mass_row, delta);
        for t in terms {
            let mut row = vec![0.0; k + 1];
            row[zi] = 1.0;
            for &(i, c) in t {
                row[i] -= c;
            }
            lp.add_le(row, 0.0);
        }
        lp
    };
    let x = solve_with_lazy_pairs(&a, build, |x, pair| x[zi] - pair_value(x, pair))?;
    let r_levels = clamp_rates(&x[..k]);
    let z = x[zi].clamp(0.0, 1.0);
    finish_primal(spec, a, r_levels, z)
}

fn finish_primal(spec: &GameSpec, a: Analysis, r_levels: Vec<f64>, z: f64) -> Result<SolveOutcome> {
    let p = spec.p();
    let delta = spec.delta;
    let rates = a.part.expand(&r_levels);
    let vulnerable = is_vulnerable(&rates, &a.part, &a.classes);
    if vulnerable && rates.iter().any(|&r| (r - delta).abs() > 1e-8) {
        return Err(Error::InvariantViolation(format!(
            "vulnerable optimum differs from the coin-flip rejector: {r_levels:?}"
        )));
    }
    let r = RejectionFunction::soft(rates)?;
    let resp = best_response(&r, &spec.constraint)?;
    if (resp.value - z).abs() > 1e-7 {
        return Err(Error::InvariantViolation(format!(
            "program value {z} disagrees with best response {}",
            resp.value
        )));
    }
    Ok(SolveOutcome {
        status: GameStatus::Solved,
        r_levels,
        r_events: p.lift(&r)?,
        z: Some(z),
        type2: Some(1.0 - z),
        witness_q: Some(witness(&resp)),
        vulnerable,
        partition: a.part,
        classes: a.classes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardOutcome {
    pub status: GameStatus,
    /// Hard rates over the original index space; null events are rejected.
    pub r: RejectionFunction,
    /// Rejected original indices, null events included.
    pub rejected: Vec<usize>,
    pub rejected_mass: f64,
    /// Worst-case rejection rate; `None` when the adversary is infeasible.
    pub value: Option<f64>,
    pub type2: Option<f64>,
    pub witness_q: Option<SparseDist>,
}

/// Surviving events rejected by the greedy low-density fill.
pub fn ldrs_rejected(p: &Pmf, delta: f64) -> Vec<usize> {
    let probs = p.probs();
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[a].total_cmp(&probs[b]).then(a.cmp(&b)));
    let mut mass = 0.0;
    let mut out = Vec::new();
    for i in order {
        if mass + probs[i] > delta + HARD_FILL_TOL {
            break;
        }
        mass += probs[i];
        out.push(i);
    }
    out.sort_unstable();
    out
}

/// Hard low-density rejection and its worst-case rejection rate.
pub fn solve_hard_ldrs(spec: &GameSpec) -> Result<HardOutcome> {
    let p = spec.p();
    let kept = ldrs_rejected(p, spec.delta);
    let rejected_mass = kept.iter().map(|&i| p.probs()[i]).sum();
    let local = RejectionFunction::from_rejected(p.len(), kept.iter().copied());
    let r = p.lift(&local)?;
    let rejected: Vec<usize> = (0..r.len()).filter(|&i| r.rates()[i] == 1.0).collect();
    let part = partition_level_sets(p, LEVEL_TOL)?;
    let classes = classify_level_sets(&part, spec.divergence(), spec.lambda(), p)?;
    let (value, witness_q) = match classes.status {
        GameStatus::AdversaryInfeasible => (None, None),
        _ => {
            let resp = best_response(&local, &spec.constraint)?;
            (Some(resp.value), Some(witness(&resp)))
        }
    };
    Ok(HardOutcome {
        status: classes.status,
        r,
        rejected,
        rejected_mass,
        type2: value.map(|v| 1.0 - v),
        value,
        witness_q,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualOutcome {
    pub status: GameStatus,
    pub r_levels: Vec<f64>,
    pub r_events: RejectionFunction,
    /// Minimal type I error; `None` when the adversary is infeasible.
    pub z_i: Option<f64>,
    pub witness_q: Option<SparseDist>,
    pub vulnerable: bool,
    pub partition: LevelSetPartition,
    pub classes: ConstraintClasses,
}

/// Minimal type I error that keeps every admissible adversary's acceptance
/// rate at most `delta_q`.
pub fn solve_dual(spec: &DualSpec) -> Result<DualOutcome> {
    let p = &spec.constraint.p;
    let floor = 1.0 - spec.delta_q;
    let a = analyze(p, &spec.constraint.divergence, spec.constraint.lambda)?;
    let k = a.part.k();
    match a.classes.status {
        GameStatus::AdversaryInfeasible => {
            return Ok(DualOutcome {
                status: a.classes.status,
                r_levels: vec![floor; k],
                r_events: lift_soft(p, vec![floor; p.len()])?,
                z_i: None,
                witness_q: None,
                vulnerable: false,
                partition: a.part,
                classes: a.classes,
            });
        }
        GameStatus::ConstraintVacuous => {
            let r = RejectionFunction::soft(vec![floor; p.len()])?;
            let resp = best_response(&r, &spec.constraint)?;
            return Ok(DualOutcome {
                status: a.classes.status,
                r_levels: vec![floor; k],
                r_events: p.lift(&r)?,
                z_i: Some(floor),
                witness_q: Some(witness(&resp)),
                vulnerable: true,
                partition: a.part,
                classes: a.classes,
            });
        }
        GameStatus::Solved => {}
    }

    let zi = k;
    let build = |terms: &[Vec<(usize, f64)>]| {
        let mut objective = vec![0.0; k + 1];
        objective[zi] = 1.0;
        let mut lp = LinearProgram::new(Sense::Minimize, objective);
        add_monotone(&mut lp, k);
        lp.set_bounds(zi, 0.0, 1.0);
        let mut mass_row: Vec<f64> = a.part.sets.iter().map(|s| s.mass).collect();
        mass_row.push(-1.0);
        lp.add_eq(mass_row, 0.0);
        for t in terms {
            let mut row = vec![0.0; k + 1];
            for &(i, c) in t {
                row[i] += c;
            }
            lp.add_ge(row, floor);
        }
        lp
    };
    let x = solve_with_lazy_pairs(&a, build, |x, pair| floor - pair_value(x, pair))?;
    let r_levels = clamp_rates(&x[..k]);
    let z_i = x[zi].clamp(0.0, 1.0);
    let rates = a.part.expand(&r_levels);
    let vulnerable = is_vulnerable(&rates, &a.part, &a.classes);
    if vulnerable && rates.iter().any(|&r| (r - floor).abs() > 1e-8) {
        return Err(Error::InvariantViolation(format!(
            "vulnerable dual optimum differs from the constant rejector: {r_levels:?}"
        )));
    }
    let r = RejectionFunction::soft(rates)?;
    let resp = best_response(&r, &spec.constraint)?;
    if resp.value < floor - 1e-7 {
        return Err(Error::InvariantViolation(format!(
            "dual solution admits rejection rate {} below {floor}",
            resp.value
        )));
    }
    Ok(DualOutcome {
        status: GameStatus::Solved,
        r_levels,
        r_events: p.lift(&r)?,
        z_i: Some(z_i),
        witness_q: Some(witness(&resp)),
        vulnerable,
        partition: a.part,
        classes: a.classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_pmf;

    fn example25() -> Pmf {
        let mut v = vec![0.05; 16];
        v.push(0.2);
        make_pmf(&v).unwrap()
    }

    #[test]
    fn partitions() {
        let part = partition_level_sets(&example25(), LEVEL_TOL).unwrap();
        assert_eq!(part.k(), 2);
        assert_eq!(part.sets[0].size(), 16);
        assert_eq!(part.sets[1].members, vec![16]);

        let p = make_pmf(&[0.02, 0.03, 0.05, 0.05, 0.85]).unwrap();
        let part = partition_level_sets(&p, LEVEL_TOL).unwrap();
        assert_eq!(part.k(), 4);
        assert_eq!(part.sets[2].members, vec![2, 3]);

        let p = make_pmf(&[0.25; 4]).unwrap();
        assert_eq!(partition_level_sets(&p, LEVEL_TOL).unwrap().k(), 1);
    }

    #[test]
    fn classification() {
        let p = make_pmf(&[0.2, 0.8]).unwrap();
        let part = partition_level_sets(&p, LEVEL_TOL).unwrap();
        let c = classify_level_sets(&part, &DivergenceKind::Kl2, 1.0, &p).unwrap();
        assert_eq!(c.classes, vec![LevelClass::L, LevelClass::H]);
        assert_eq!(c.w, Some(0));
        assert_eq!(c.status, GameStatus::Solved);

        let p = make_pmf(&[0.5, 0.5]).unwrap();
        let part = partition_level_sets(&p, LEVEL_TOL).unwrap();
        let c = classify_level_sets(&part, &DivergenceKind::Kl2, 0.5, &p).unwrap();
        assert_eq!(c.status, GameStatus::ConstraintVacuous);
        let c = classify_level_sets(&part, &DivergenceKind::Kl2, 2.0, &p).unwrap();
        assert_eq!(c.status, GameStatus::AdversaryInfeasible);
    }

    #[test]
    fn pair_root_fixture() {
        let p = make_pmf(&[0.2, 0.8]).unwrap();
        let q = pair_root(&DivergenceKind::Kl2, 1.0, &p, 0, 1).unwrap();
        assert!((q - 0.747_019_759_452_295_6).abs() < 1e-12, "{q}");
    }

    #[test]
    fn pair_root_requires_bracket() {
        let p = make_pmf(&[0.2, 0.8]).unwrap();
        assert!(matches!(
            pair_root(&DivergenceKind::Kl2, 5.0, &p, 0, 1),
            Err(Error::NotBracketed { .. })
        ));
    }

    #[test]
    fn vacuous_soft_is_coin_flip() {
        let p = make_pmf(&[0.5, 0.5]).unwrap();
        let spec = GameSpec::new(p, 0.1, 0.5, DivergenceKind::Kl2).unwrap();
        let out = solve_soft(&spec).unwrap();
        assert_eq!(out.status, GameStatus::ConstraintVacuous);
        assert_eq!(out.r_events.rates(), &[0.1, 0.1]);
        assert_eq!(out.z, Some(0.1));
    }

    #[test]
    fn greedy_fill() {
        let p = make_pmf(&[0.02, 0.03, 0.05, 0.05, 0.85]).unwrap();
        assert_eq!(ldrs_rejected(&p, 0.1), vec![0, 1, 2]);
        let p = make_pmf(&[0.06, 0.09, 0.85]).unwrap();
        assert_eq!(ldrs_rejected(&p, 0.1), vec![0]);
    }
}
