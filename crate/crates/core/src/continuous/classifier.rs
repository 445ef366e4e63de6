//! Baseline soft classifier: Gaussian-kernel logistic regression.
//!
//! The score is `h(x) = sum_c alpha_c K(x, c) + b` over a set of centers
//! (every training point when there are few, otherwise a random subset).
//! Fitting minimizes the mean logistic loss plus `ridge / 2 * |alpha|^2`
//! with damped Newton steps; the bias is not penalized.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Anything that maps a point to a real-valued score, larger meaning more
/// target-like.
pub trait SoftClassifier {
    fn score(&self, x: &[f64]) -> f64;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub ridge: f64,
    pub max_centers: usize,
    /// Stop once the gradient's max-norm falls to this.
    pub grad_tol: f64,
    pub max_iterations: usize,
    /// Kernel bandwidth; `None` selects the median pairwise center distance.
    pub bandwidth: Option<f64>,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            ridge: 1e-3,
            max_centers: 150,
            grad_tol: 1e-8,
            max_iterations: 200,
            bandwidth: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub loss: String,
    pub iterations: usize,
    pub final_loss: f64,
    pub grad_norm: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelLogistic {
    pub centers: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub bandwidth: f64,
    pub meta: TrainingMeta,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl SoftClassifier for KernelLogistic {
    fn score(&self, x: &[f64]) -> f64 {
        let inv = -0.5 / (self.bandwidth * self.bandwidth);
        self.bias
            + self
                .centers
                .iter()
                .zip(&self.alpha)
                .map(|(c, a)| a * (inv * sq_dist(x, c)).exp())
                .sum::<f64>()
    }
}

/// `log(1 + exp(-t))` without overflow.
fn softplus_neg(t: f64) -> f64 {
    if t > 0.0 {
        (-t).exp().ln_1p()
    } else {
        -t + t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Fits a classifier separating `pos` (label +1) from `neg` (label -1).
/// `rng` is used only when center subsampling is needed.
pub fn fit_baseline_classifier(
    pos: &[Vec<f64>],
    neg: &[Vec<f64>],
    config: &ClassifierConfig,
    rng: &mut impl Rng,
) -> Result<KernelLogistic> {
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(config.ridge > 0.0) || config.max_centers == 0 {
        return Err(Error::InvalidParameter(
            "ridge must be positive and max_centers at least 1".into(),
        ));
    }
    let d = pos[0].len();
    let points: Vec<&Vec<f64>> = pos.iter().chain(neg).collect();
    if let Some(bad) = points.iter().find(|x| x.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: bad.len(),
        });
    }
    if points.iter().all(|x| *x == points[0]) {
        return Err(Error::Degenerate(
            "all training points are identical".into(),
        ));
    }
    let labels: Vec<f64> = std::iter::repeat_n(1.0, pos.len())
        .chain(std::iter::repeat_n(-1.0, neg.len()))
        .collect();
    let total = points.len();
    let centers: Vec<Vec<f64>> = if total <= config.max_centers {
        points.iter().map(|x| (*x).clone()).collect()
    } else {
        let mut idx = sample_indices(rng, total, config.max_centers).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| points[i].clone()).collect()
    };
    let bandwidth = match config.bandwidth {
        Some(b) if b > 0.0 && b.is_finite() => b,
        Some(b) => {
            return Err(Error::InvalidParameter(format!(
                "bandwidth {b} is not positive"
            )))
        }
        None => {
            let mut dists = Vec::with_capacity(centers.len() * centers.len() / 2);
            for i in 0..centers.len() {
                for j in i + 1..centers.len() {
                    dists.push(sq_dist(&centers[i], &centers[j]).sqrt());
                }
            }
            let b = if dists.is_empty() { 0.0 } else { median(dists) };
            if b > 0.0 {
                b
            } else {
                // More than half the center pairs coincide; fall back to the
                // mean distance so distinct points still separate.
                let mut sum = 0.0;
                let mut count = 0usize;
                for i in 0..centers.len() {
                    for j in i + 1..centers.len() {
                        sum += sq_dist(&centers[i], &centers[j]).sqrt();
                        count += 1;
                    }
                }
                if sum > 0.0 {
                    sum / count as f64
                } else {
                    1.0
                }
            }
        }
    };

    let c = centers.len();
    let p = c + 1;
    let inv = -0.5 / (bandwidth * bandwidth);
    let phi = DMatrix::from_fn(total, p, |i, j| {
        if j == c {
            1.0
        } else {
            (inv * sq_dist(points[i], &centers[j])).exp()
        }
    });
    let y = DVector::from_vec(labels);
    let nf = total as f64;
    let objective = |theta: &DVector<f64>| -> (f64, DVector<f64>) {
        let f = &phi * theta;
        let loss = f
            .iter()
            .zip(y.iter())
            .map(|(f, y)| softplus_neg(y * f))
            .sum::<f64>()
            / nf;
        let reg = 0.5 * config.ridge * theta.rows(0, c).norm_squared();
        (loss + reg, f)
    };

    let mut theta = DVector::zeros(p);
    let (mut value, mut f) = objective(&theta);
    let mut iterations = 0;
    let mut grad_norm = f64::INFINITY;
    let mut converged = false;
    while iterations < config.max_iterations {
        // dloss/df = -y * sigmoid(-y f); weight = s (1 - s) with s = sigmoid(f).
        let g_f = DVector::from_iterator(
            total,
            f.iter()
                .zip(y.iter())
                .map(|(f, y)| -y * sigmoid(-y * f) / nf),
        );
        let mut grad = phi.tr_mul(&g_f);
        for j in 0..c {
            grad[j] += config.ridge * theta[j];
        }
        grad_norm = grad.amax();
        if grad_norm <= config.grad_tol {
            converged = true;
            break;
        }
        let w: Vec<f64> = f
            .iter()
            .map(|&f| {
                let s = sigmoid(f);
                (s * (1.0 - s)).max(1e-12) / nf
            })
            .collect();
        let mut weighted = phi.clone();
        for (i, wi) in w.iter().enumerate() {
            weighted.row_mut(i).scale_mut(*wi);
        }
        let mut hess = phi.tr_mul(&weighted);
        for j in 0..c {
            hess[(j, j)] += config.ridge;
        }
        hess[(c, c)] += 1e-12;
        let step = match hess.clone().cholesky() {
            Some(ch) => ch.solve(&grad),
            None => {
                for j in 0..p {
                    hess[(j, j)] += 1e-8;
                }
                hess.cholesky()
                    .ok_or_else(|| Error::NumericalBreakdown("singular Newton system".into()))?
                    .solve(&grad)
            }
        };
        let slope = -grad.dot(&step);
        let mut t = 1.0;
        let mut moved = false;
        while t >= 1e-10 {
            let cand = &theta - t * &step;
            let (v, fc) = objective(&cand);
            if v <= value + 1e-4 * t * slope {
                moved = v < value;
                theta = cand;
                value = v;
                f = fc;
                break;
            }
            t *= 0.5;
        }
        iterations += 1;
        if !moved {
            // Rounding floor reached: no representable descent remains.
            converged = grad_norm <= 1e-6;
            break;
        }
    }
    Ok(KernelLogistic {
        alpha: theta.rows(0, c).iter().copied().collect(),
        bias: theta[c],
        centers,
        bandwidth,
        meta: TrainingMeta {
            loss: "logistic".into(),
            iterations,
            final_loss: value,
            grad_norm,
            converged,
        },
    })
}
