//! Single-class learner for continuous data.
//!
//! Pipeline: grid the sample, draw a synthetic background uniformly over
//! the covered cells, train a soft classifier target-vs-background, then
//! threshold its jittered scores at estimated quantiles. Points in uncovered
//! cells are always rejected.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::classifier::{
    fit_baseline_classifier, ClassifierConfig, KernelLogistic, SoftClassifier,
};
use super::grid::{
    cell_counts, check_points, default_pitch, grid_key, sample_synthetic, select_grid_pitch,
    CellKey, GridSpec,
};
use super::quantile::umvufb_quantile;
use crate::error::{Error, Result};
use crate::model::check_delta;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum PitchRule {
    /// `(diameter / 4) * n^(-1 / (d + 2))`.
    Default,
    Fixed {
        pitch: f64,
    },
    /// Smallest pitch with at most `t` singleton cells.
    Select {
        t: usize,
    },
}

/// How far below `delta` the lower quantile target sits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum MarginRule {
    /// `delta - missing - z * sqrt(delta (1 - delta) / (n + 1))`, where
    /// `missing` estimates the target mass outside the covered cells: the
    /// singleton-cell fraction plus the fraction of points in cells dropped
    /// by `min_count`.
    MissingMass { z: f64 },
    /// `delta - n^(-1/3)`.
    CubeRoot,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "source")]
pub enum QuantileSource {
    /// Quantiles of the training scores.
    Training,
    /// Hold out this fraction of the sample for quantile estimation only.
    Holdout { fraction: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SccConfig {
    pub pitch: PitchRule,
    /// Cells need at least this many sample points to count as covered.
    pub min_count: usize,
    /// Draw the background size from NB(n, 1/2) instead of using n.
    pub negbinom: bool,
    pub margin: MarginRule,
    pub quantile_source: QuantileSource,
    /// Jitter multiplier `m`.
    pub jitter_m: f64,
    pub classifier: ClassifierConfig,
    /// Overrides the seed of the jitter stream only.
    pub jitter_seed: Option<u64>,
}

impl Default for SccConfig {
    fn default() -> Self {
        Self {
            pitch: PitchRule::Default,
            min_count: 1,
            negbinom: false,
            margin: MarginRule::MissingMass { z: 0.0 },
            quantile_source: QuantileSource::Training,
            jitter_m: 8.0,
            classifier: ClassifierConfig::default(),
            jitter_seed: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    pub delta: f64,
    pub delta_minus: f64,
    pub delta_plus: f64,
    /// `n^(1/3)`.
    pub theta: f64,
    /// Estimated target mass outside the covered cells.
    pub missing_mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// `None` when the lower target is not positive: no point is rejected
    /// on score alone.
    pub t_minus: Option<f64>,
    /// `None` when the upper target reaches 1.
    pub t_plus: Option<f64>,
    pub m: f64,
    pub sigma: f64,
    pub mu_minus: f64,
    pub mu_plus: f64,
}

impl Thresholds {
    /// Cutoff comparisons are inclusive exactly when `t- < t+`.
    pub fn inclusive(&self) -> bool {
        match (self.t_minus, self.t_plus) {
            (Some(a), Some(b)) => a < b,
            _ => true,
        }
    }

    /// Whether a covered point with score `h` is rejected.
    pub fn rejects(&self, h: f64) -> bool {
        let Some(t) = self.t_minus else {
            return false;
        };
        let cut = t - self.m * self.sigma;
        if self.inclusive() {
            h <= cut
        } else {
            h < cut
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SccModel {
    pub grid: GridSpec,
    pub covered: BTreeSet<CellKey>,
    pub classifier: KernelLogistic,
    pub thresholds: Thresholds,
    pub margins: Margins,
    pub margin_rule: MarginRule,
    /// Training sample size.
    pub n: usize,
    pub n_synthetic: usize,
    pub singleton_cells: usize,
    pub seed: u64,
}

/// `(m, sigma)` jitter with `sigma = max(1e-12, 1e-9 * score range)`.
pub fn jitter_scale(scores: &[f64]) -> f64 {
    let (lo, hi) = scores
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &s| {
            (a.min(s), b.max(s))
        });
    let range = if scores.is_empty() { 0.0 } else { hi - lo };
    (1e-9 * range).max(1e-12)
}

/// Estimates `t-` and `t+` from `scores`: each score is jittered with
/// `N(0, sigma^2)` noise from `jitter_rng`, then the
/// `Phi(m) delta_pm + Phi(-m) / 2` quantiles are estimated with draws from
/// `estimator_rng`.
pub fn calibrate_thresholds(
    scores: &[f64],
    delta_minus: f64,
    delta_plus: f64,
    m: f64,
    jitter_rng: &mut impl Rng,
    estimator_rng: &mut impl Rng,
) -> Result<Thresholds> {
    if scores.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "jitter multiplier must be positive, got {m}"
        )));
    }
    let sigma = jitter_scale(scores);
    let z: Vec<f64> = scores
        .iter()
        .map(|s| {
            let e: f64 = StandardNormal.sample(jitter_rng);
            s + sigma * e
        })
        .collect();
    let phi = Normal::standard();
    let (hi_w, lo_w) = (phi.cdf(m), phi.cdf(-m));
    let target = |d: f64| hi_w * d + lo_w / 2.0;
    let mu_minus = target(delta_minus);
    let mu_plus = target(delta_plus);
    let t_minus = if delta_minus > 0.0 {
        Some(umvufb_quantile(&z, mu_minus, estimator_rng)?)
    } else {
        None
    };
    let t_plus = if delta_plus < 1.0 {
        Some(umvufb_quantile(&z, mu_plus, estimator_rng)?)
    } else {
        None
    };
    Ok(Thresholds {
        t_minus,
        t_plus,
        m,
        sigma,
        mu_minus,
        mu_plus,
    })
}

/// Stream ids of the seeded generators used during training.
mod stream {
    pub const ORIGIN: u64 = 0;
    pub const SYNTHETIC: u64 = 1;
    pub const CENTERS: u64 = 2;
    pub const JITTER: u64 = 3;
    pub const ESTIMATOR: u64 = 4;
    pub const SPLIT: u64 = 5;
}

fn rng_for(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Negative binomial NB(n, 1/2) draw, as a Poisson with Gamma(n, 1) rate.
fn negbinom_half(n: usize, rng: &mut impl Rng) -> Result<usize> {
    let gamma =
        Gamma::new(n as f64, 1.0).map_err(|e| Error::InvalidParameter(format!("gamma: {e}")))?;
    let rate: f64 = gamma.sample(rng);
    if rate <= 0.0 {
        return Ok(0);
    }
    let poisson =
        Poisson::new(rate).map_err(|e| Error::InvalidParameter(format!("poisson: {e}")))?;
    Ok(poisson.sample(rng) as usize)
}

/// Trains a rejector whose type I error targets `delta`.
pub fn train_scc(
    sample: &[Vec<f64>],
    delta: f64,
    config: &SccConfig,
    seed: u64,
) -> Result<SccModel> {
    check_delta(delta)?;
    let d = check_points(sample)?;
    if sample.len() < 2 {
        return Err(Error::InvalidParameter(
            "need at least 2 sample points".into(),
        ));
    }
    if config.min_count == 0 {
        return Err(Error::InvalidParameter("min_count must be >= 1".into()));
    }

    let (train, calib): (Vec<Vec<f64>>, Option<Vec<Vec<f64>>>) = match config.quantile_source {
        QuantileSource::Training => (sample.to_vec(), None),
        QuantileSource::Holdout { fraction } => {
            if !(fraction > 0.0 && fraction < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "holdout fraction must lie in (0, 1), got {fraction}"
                )));
            }
            let mut idx: Vec<usize> = (0..sample.len()).collect();
            idx.shuffle(&mut rng_for(seed, stream::SPLIT));
            let k = ((sample.len() as f64) * fraction).ceil() as usize;
            if k < 1 || sample.len() - k < 2 {
                return Err(Error::InvalidParameter(
                    "holdout split leaves too few points".into(),
                ));
            }
            let calib = idx[..k].iter().map(|&i| sample[i].clone()).collect();
            let train = idx[k..].iter().map(|&i| sample[i].clone()).collect();
            (train, Some(calib))
        }
    };
    let n = train.len();

    let pitch = match config.pitch {
        PitchRule::Default => default_pitch(&train)?,
        PitchRule::Fixed { pitch } => pitch,
        PitchRule::Select { t } => select_grid_pitch(&train, t)?,
    };
    let mut origin_rng = rng_for(seed, stream::ORIGIN);
    let origin: Vec<f64> = (0..d).map(|_| origin_rng.random::<f64>() * pitch).collect();
    let grid = GridSpec::new(origin, pitch)?;
    let counts = cell_counts(&train, &grid)?;
    let singleton_cells = counts.values().filter(|&&c| c == 1).count();
    let dropped: usize = counts.values().filter(|&&c| c < config.min_count).sum();
    let covered: BTreeSet<CellKey> = counts
        .iter()
        .filter(|&(_, &c)| c >= config.min_count)
        .map(|(k, _)| k.clone())
        .collect();
    if covered.is_empty() {
        return Err(Error::EmptyCells);
    }
    let cells: Vec<CellKey> = covered.iter().cloned().collect();

    let mut syn_rng = rng_for(seed, stream::SYNTHETIC);
    let n_synthetic = if config.negbinom {
        negbinom_half(n, &mut syn_rng)?.max(1)
    } else {
        n
    };
    let background = sample_synthetic(&cells, &grid, n_synthetic, &mut syn_rng)?;
    let classifier = fit_baseline_classifier(
        &train,
        &background,
        &config.classifier,
        &mut rng_for(seed, stream::CENTERS),
    )?;

    let calib_points = calib.as_ref().unwrap_or(&train);
    let scores: Vec<f64> = calib_points
        .par_iter()
        .map(|x| classifier.score(x))
        .collect();
    let nq = scores.len() as f64;
    let theta = nq.cbrt();
    // Singleton cells are already among the dropped ones once min_count > 1.
    let kept_singletons = if config.min_count == 1 { singleton_cells } else { 0 };
    let missing_mass = (kept_singletons + dropped) as f64 / n as f64;
    let delta_minus = match config.margin {
        MarginRule::MissingMass { z } => {
            delta - missing_mass - z * (delta * (1.0 - delta) / (nq + 1.0)).sqrt()
        }
        MarginRule::CubeRoot => delta - 1.0 / theta,
    };
    let delta_plus = delta + 1.0 / theta;
    let mut jitter_rng = rng_for(config.jitter_seed.unwrap_or(seed), stream::JITTER);
    let thresholds = calibrate_thresholds(
        &scores,
        delta_minus,
        delta_plus,
        config.jitter_m,
        &mut jitter_rng,
        &mut rng_for(seed, stream::ESTIMATOR),
    )?;
    Ok(SccModel {
        grid,
        covered,
        classifier,
        thresholds,
        margins: Margins {
            delta,
            delta_minus,
            delta_plus,
            theta,
            missing_mass,
        },
        margin_rule: config.margin,
        n,
        n_synthetic,
        singleton_cells,
        seed,
    })
}

impl SccModel {
    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        self.classifier.score(x)
    }

    pub fn is_covered(&self, x: &[f64]) -> Result<bool> {
        Ok(self.covered.contains(&grid_key(x, &self.grid)?))
    }

    pub fn reject(&self, x: &[f64]) -> Result<bool> {
        if !self.is_covered(x)? {
            return Ok(true);
        }
        Ok(self.thresholds.rejects(self.score(x)))
    }

    pub fn reject_batch(&self, points: &[Vec<f64>]) -> Result<Vec<bool>> {
        points.par_iter().map(|x| self.reject(x)).collect()
    }

    /// Fraction of `points` rejected.
    pub fn reject_fraction(&self, points: &[Vec<f64>]) -> Result<f64> {
        if points.is_empty() {
            return Err(Error::EmptySample);
        }
        let rejected = self
            .reject_batch(points)?
            .into_iter()
            .filter(|&r| r)
            .count();
        Ok(rejected as f64 / points.len() as f64)
    }
}
