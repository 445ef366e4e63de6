//! Random target families and the hard-vs-soft error sweep over lambda.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erf, erfc};

use crate::divergence::DivergenceKind;
use crate::error::{Error, Result};
use crate::game::{solve_hard_ldrs, solve_soft, GameStatus};
use crate::model::{GameSpec, Pmf};

/// Smallest first-bin mass treated as nonzero when bounding sigma below.
pub const GAUSSIAN_MASS_FLOOR: f64 = 1e-300;
pub const GAUSSIAN_HALF_RANGE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Arbitrary,
    Gaussian,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Arbitrary => "arbitrary",
            Family::Gaussian => "gaussian",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "arbitrary" => Ok(Family::Arbitrary),
            "gaussian" => Ok(Family::Gaussian),
            other => Err(Error::InvalidParameter(format!("unknown family `{other}`"))),
        }
    }
}

fn check_events(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 events, got {n}"
        )));
    }
    Ok(())
}

/// `p_1` uniform in `(0, 2^-lambda]`; the other entries i.i.d. `U(0, 1]`
/// scaled to sum to `1 - p_1`.
pub fn gen_arbitrary_pmf(n_events: usize, lambda: f64, rng: &mut impl Rng) -> Result<Pmf> {
    check_events(n_events)?;
    let p1 = (1.0 - rng.random::<f64>()) * (-lambda).exp2();
    let rest: Vec<f64> = (1..n_events).map(|_| 1.0 - rng.random::<f64>()).collect();
    let total: f64 = rest.iter().sum();
    let mut probs = Vec::with_capacity(n_events);
    probs.push(p1);
    probs.extend(rest.iter().map(|x| x / total * (1.0 - p1)));
    Pmf::new(&probs)
}

/// `Phi(x)` for `x <= 0`, accurate deep into the tail.
fn lower_tail(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `Phi(b) - Phi(a)` for `a < b <= 0`. Tail form far from the mean, erf form
/// near it, so neither regime cancels catastrophically.
fn left_mass(a: f64, b: f64) -> f64 {
    if b < -1.0 {
        lower_tail(b) - lower_tail(a)
    } else {
        let s = std::f64::consts::SQRT_2;
        0.5 * (erf(-a / s) - erf(-b / s))
    }
}

/// Unnormalized bin masses of `N(0, sigma^2)` over `n` equal bins spanning
/// `[-10, 10]`, computed on the left half and mirrored.
fn gaussian_bins(n: usize, sigma: f64) -> Vec<f64> {
    let width = 2.0 * GAUSSIAN_HALF_RANGE / n as f64;
    let edge = |i: usize| -GAUSSIAN_HALF_RANGE + width * i as f64;
    let mut masses = vec![0.0; n];
    for i in 0..n / 2 {
        let m = left_mass(edge(i) / sigma, edge(i + 1) / sigma);
        masses[i] = m;
        masses[n - 1 - i] = m;
    }
    if n % 2 == 1 {
        let half = width / 2.0;
        masses[n / 2] = erf(half / sigma / std::f64::consts::SQRT_2);
    }
    masses
}

/// Normalized mass of the first bin.
fn first_bin_share(n: usize, sigma: f64) -> f64 {
    let bins = gaussian_bins(n, sigma);
    bins[0] / bins.iter().sum::<f64>()
}

fn bisect_sigma(mut lo: f64, mut hi: f64, above: impl Fn(f64) -> bool) -> f64 {
    // `above` is false at lo and true at hi; returns the smallest true point.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || (hi - lo) <= 1e-14 * hi {
            break;
        }
        if above(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Sigma range for the discretized Gaussian family at this lambda.
pub fn gaussian_sigma_range(n_events: usize, lambda: f64) -> Result<(f64, f64)> {
    check_events(n_events)?;
    let mass = |s: f64| gaussian_bins(n_events, s)[0];
    let (mut lo, mut hi) = (1e-3, 1.0);
    while mass(lo) > GAUSSIAN_MASS_FLOOR {
        lo /= 2.0;
    }
    while mass(hi) <= GAUSSIAN_MASS_FLOOR {
        hi *= 2.0;
    }
    let sigma_min = bisect_sigma(lo, hi, |s| mass(s) > GAUSSIAN_MASS_FLOOR);
    let target = (-lambda).exp2();
    // The first-bin share rises toward 1/N as sigma grows and never reaches it.
    let solvable = target < 1.0 / n_events as f64 && first_bin_share(n_events, sigma_min) < target;
    let mut top = sigma_min * 2.0;
    while solvable && first_bin_share(n_events, top) < target {
        top *= 2.0;
    }
    let sigma_max = if solvable {
        bisect_sigma(sigma_min, top, |s| first_bin_share(n_events, s) >= target)
    } else {
        10.0 * sigma_min
    };
    Ok((sigma_min, sigma_max))
}

/// Discretized `N(0, sigma^2)` with `sigma` uniform on the family's range.
/// Returns the pmf and the sigma drawn.
pub fn gen_discretized_gaussian(
    n_events: usize,
    lambda: f64,
    rng: &mut impl Rng,
) -> Result<(Pmf, f64)> {
    let (lo, hi) = gaussian_sigma_range(n_events, lambda)?;
    let sigma = lo + (hi - lo) * rng.random::<f64>();
    Ok((discretized_gaussian(n_events, sigma)?, sigma))
}

/// Discretized `N(0, sigma^2)` over `n_events` bins on `[-10, 10]`.
pub fn discretized_gaussian(n_events: usize, sigma: f64) -> Result<Pmf> {
    check_events(n_events)?;
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let bins = gaussian_bins(n_events, sigma);
    let total: f64 = bins.iter().sum();
    let probs: Vec<f64> = bins.iter().map(|b| b / total).collect();
    Pmf::new(&probs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub family: Family,
    pub n_events: usize,
    pub delta: f64,
    pub lambda_grid: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
}

/// `0.5, 1.0, ..., 12.5`.
pub fn default_lambda_grid() -> Vec<f64> {
    (1..=25).map(|i| 0.5 * i as f64).collect()
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            family: Family::Arbitrary,
            n_events: 50,
            delta: 0.05,
            lambda_grid: default_lambda_grid(),
            reps: 50,
            seed: 0,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        check_events(self.n_events)?;
        crate::model::check_delta(self.delta)?;
        if self.reps == 0 {
            return Err(Error::InvalidParameter("reps must be >= 1".into()));
        }
        if self.lambda_grid.is_empty()
            || self
                .lambda_grid
                .iter()
                .any(|l| !(*l > 0.0) || !l.is_finite())
            || self.lambda_grid.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::InvalidParameter(
                "lambda grid must be positive and strictly ascending".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub family: Family,
    pub rep: usize,
    pub hard_err: f64,
    pub soft_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub lambda: f64,
    pub mean_hard: f64,
    pub sem_hard: f64,
    pub mean_soft: f64,
    pub sem_soft: f64,
    /// Instances that contributed.
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub lambda: f64,
    pub rep: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub config: SweepConfig,
    pub notes: Vec<String>,
    pub rows: Vec<SweepRow>,
    pub summary: Vec<SweepSummary>,
    pub failures: Vec<SweepFailure>,
}

/// Generator for instance `(lambda index, rep)`: the sweep seed with a
/// stream id unique to the instance.
pub fn instance_rng(seed: u64, lambda_index: usize, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((lambda_index as u64) << 32) | rep as u64);
    rng
}

fn run_instance(
    config: &SweepConfig,
    li: usize,
    rep: usize,
) -> std::result::Result<SweepRow, SweepFailure> {
    let lambda = config.lambda_grid[li];
    let fail = |reason: String| SweepFailure {
        lambda,
        rep,
        reason,
    };
    let mut rng = instance_rng(config.seed, li, rep);
    let p = match config.family {
        Family::Arbitrary => gen_arbitrary_pmf(config.n_events, lambda, &mut rng),
        Family::Gaussian => {
            gen_discretized_gaussian(config.n_events, lambda, &mut rng).map(|(p, _)| p)
        }
    }
    .map_err(|e| fail(e.to_string()))?;
    let spec = GameSpec::new(p, config.delta, lambda, DivergenceKind::Kl2)
        .map_err(|e| fail(e.to_string()))?;
    let soft = solve_soft(&spec).map_err(|e| fail(e.to_string()))?;
    let hard = solve_hard_ldrs(&spec).map_err(|e| fail(e.to_string()))?;
    if soft.status == GameStatus::AdversaryInfeasible {
        return Err(fail(GameStatus::AdversaryInfeasible.as_str().into()));
    }
    match (soft.z, hard.value) {
        (Some(z), Some(v)) => Ok(SweepRow {
            lambda,
            family: config.family,
            rep,
            hard_err: 1.0 - v,
            soft_err: 1.0 - z,
        }),
        _ => Err(fail("missing game value".into())),
    }
}

fn mean_sem(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Solves every `(lambda, rep)` instance. With `jobs = Some(k)` the work runs
/// on a dedicated pool of `k` threads; output does not depend on `k`.
pub fn run_sweep(config: &SweepConfig, jobs: Option<usize>) -> Result<SweepReport> {
    config.validate()?;
    let tasks: Vec<(usize, usize)> = (0..config.lambda_grid.len())
        .flat_map(|li| (0..config.reps).map(move |rep| (li, rep)))
        .collect();
    let work = || -> Vec<_> {
        tasks
            .par_iter()
            .map(|&(li, rep)| run_instance(config, li, rep))
            .collect()
    };
    let results = match jobs {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(f) => failures.push(f),
        }
    }
    let summary = config
        .lambda_grid
        .iter()
        .map(|&lambda| {
            let (hard, soft): (Vec<f64>, Vec<f64>) = rows
                .iter()
                .filter(|r| r.lambda == lambda)
                .map(|r| (r.hard_err, r.soft_err))
                .unzip();
            let (mean_hard, sem_hard) = mean_sem(&hard);
            let (mean_soft, sem_soft) = mean_sem(&soft);
            SweepSummary {
                lambda,
                mean_hard,
                sem_hard,
                mean_soft,
                sem_soft,
                count: hard.len(),
            }
        })
        .collect();
    let mut notes = vec!["divergence: KL in bits".to_string()];
    if config.lambda_grid == default_lambda_grid() {
        notes.push("default lambda grid read as 0.5 to 12.5 in steps of 0.5".into());
    }
    notes.push("SEM = sample standard deviation / sqrt(count)".into());
    Ok(SweepReport {
        config: config.clone(),
        notes,
        rows,
        summary,
        failures,
    })
}

impl SweepReport {
    /// Raw rows as CSV with header `lambda,family,rep,hard_err,soft_err`.
    pub fn raw_csv(&self) -> String {
        let mut out = String::from("lambda,family,rep,hard_err,soft_err\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.lambda,
                r.family.as_str(),
                r.rep,
                r.hard_err,
                r.soft_err
            );
        }
        out
    }

    /// Per-lambda summary as CSV with header
    /// `lambda,mean_hard,sem_hard,mean_soft,sem_soft`.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("lambda,mean_hard,sem_hard,mean_soft,sem_soft\n");
        for s in &self.summary {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                s.lambda, s.mean_hard, s.sem_hard, s.mean_soft, s.sem_soft
            );
        }
        out
    }
}
