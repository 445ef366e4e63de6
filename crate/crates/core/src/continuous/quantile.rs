//! Randomized order-statistic quantile estimator (UMVUFB).
//!
//! For a continuous cdf `F` and `n >= max(mu / (1 - mu), (1 - mu) / mu)`, the
//! estimate `t` satisfies `E[F(t)] = mu`; smaller samples fall back to the
//! `ceil(n mu)`-th order statistic.

use rand::Rng;

use crate::error::{Error, Result};

/// Whether the unbiased branch applies to a sample of size `n`.
pub fn umvufb_unbiased(n: usize, mu: f64) -> bool {
    let n = n as f64;
    n >= (mu / (1.0 - mu)).max((1.0 - mu) / mu)
}

/// 1-based order-statistic index. Draws from `rng` only when the unbiased
/// branch has a fractional part.
pub fn umvufb_index(n: usize, mu: f64, rng: &mut impl Rng) -> Result<usize> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::MuOutOfRange(mu));
    }
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let index = if umvufb_unbiased(n, mu) {
        let x = (n as f64 + 1.0) * mu;
        let k = x.floor();
        let beta = x - k;
        let k = k as usize;
        if beta > 0.0 && rng.random::<f64>() < beta {
            k + 1
        } else {
            k
        }
    } else {
        (n as f64 * mu).ceil() as usize
    };
    Ok(index.clamp(1, n))
}

/// The `mu`-quantile estimate of `values`.
pub fn umvufb_quantile(values: &[f64], mu: f64, rng: &mut impl Rng) -> Result<f64> {
    if values.iter().any(|v| v.is_nan()) {
        let index = values.iter().position(|v| v.is_nan()).unwrap();
        return Err(Error::NonFinite { index });
    }
    let index = umvufb_index(values.len(), mu, rng)?;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[index - 1])
}
