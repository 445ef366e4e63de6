//! Axis-aligned grid over the sample space.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer coordinates of a cell's lower corner, in pitch units.
pub type CellKey = Vec<i64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: Vec<f64>,
    /// Cell side length, > 0.
    pub pitch: f64,
}

impl GridSpec {
    pub fn new(origin: Vec<f64>, pitch: f64) -> Result<Self> {
        if !(pitch > 0.0) || !pitch.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "grid pitch must be positive and finite, got {pitch}"
            )));
        }
        if let Some(index) = origin.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { origin, pitch })
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }
}

/// `floor((x - origin) / pitch)` componentwise.
pub fn grid_key(x: &[f64], grid: &GridSpec) -> Result<CellKey> {
    if x.len() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            got: x.len(),
        });
    }
    x.iter()
        .zip(&grid.origin)
        .enumerate()
        .map(|(index, (&v, &o))| {
            if !v.is_finite() {
                return Err(Error::NonFinite { index });
            }
            Ok(((v - o) / grid.pitch).floor() as i64)
        })
        .collect()
}

/// Number of sample points per occupied cell.
pub fn cell_counts(sample: &[Vec<f64>], grid: &GridSpec) -> Result<BTreeMap<CellKey, usize>> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut counts = BTreeMap::new();
    for x in sample {
        *counts.entry(grid_key(x, grid)?).or_insert(0) += 1;
    }
    Ok(counts)
}

/// Cells holding at least `min_count` sample points, in key order.
pub fn covered_cells(
    sample: &[Vec<f64>],
    grid: &GridSpec,
    min_count: usize,
) -> Result<Vec<CellKey>> {
    if min_count == 0 {
        return Err(Error::InvalidParameter("min_count must be >= 1".into()));
    }
    Ok(cell_counts(sample, grid)?
        .into_iter()
        .filter(|&(_, c)| c >= min_count)
        .map(|(k, _)| k)
        .collect())
}

/// Cells holding exactly one sample point.
pub fn singleton_cells(sample: &[Vec<f64>], grid: &GridSpec) -> Result<usize> {
    Ok(cell_counts(sample, grid)?
        .values()
        .filter(|&&c| c == 1)
        .count())
}

/// Points drawn uniformly from the union of `cells`: a uniform cell, then a
/// uniform offset inside it.
pub fn sample_synthetic(
    cells: &[CellKey],
    grid: &GridSpec,
    count: usize,
    rng: &mut impl Rng,
) -> Result<Vec<Vec<f64>>> {
    if cells.is_empty() {
        return Err(Error::EmptyCells);
    }
    Ok((0..count)
        .map(|_| {
            let cell = &cells[rng.random_range(0..cells.len())];
            cell.iter()
                .zip(&grid.origin)
                .map(|(&a, &o)| o + (a as f64 + rng.random::<f64>()) * grid.pitch)
                .collect()
        })
        .collect())
}

pub(crate) fn check_points(sample: &[Vec<f64>]) -> Result<usize> {
    let d = sample.first().ok_or(Error::EmptySample)?.len();
    if d == 0 {
        return Err(Error::InvalidParameter(
            "points must have at least one coordinate".into(),
        ));
    }
    for x in sample {
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x.len(),
            });
        }
        if let Some(index) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
    }
    Ok(d)
}

/// Componentwise minimum and the largest coordinate range.
pub(crate) fn bounding(sample: &[Vec<f64>]) -> (Vec<f64>, f64) {
    let d = sample[0].len();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for x in sample {
        for i in 0..d {
            lo[i] = lo[i].min(x[i]);
            hi[i] = hi[i].max(x[i]);
        }
    }
    let diam = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max);
    (lo, diam)
}

/// `(diameter / 4) * n^(-1 / (d + 2))`, or 1 for a single repeated point.
pub fn default_pitch(sample: &[Vec<f64>]) -> Result<f64> {
    let d = check_points(sample)?;
    let (_, diam) = bounding(sample);
    if diam == 0.0 {
        return Ok(1.0);
    }
    Ok(diam / 4.0 * (sample.len() as f64).powf(-1.0 / (d as f64 + 2.0)))
}

/// Smallest pitch in `[diameter / n, diameter]`, to 1% relative precision,
/// whose grid (anchored at the sample minimum) has at most `t` singleton
/// cells. Returns the upper end when no pitch in range qualifies.
pub fn select_grid_pitch(sample: &[Vec<f64>], t: usize) -> Result<f64> {
    check_points(sample)?;
    let n = sample.len() as f64;
    let (origin, diam) = bounding(sample);
    if diam == 0.0 {
        return Ok(1.0 / n);
    }
    let singles = |g: f64| {
        singleton_cells(
            sample,
            &GridSpec {
                origin: origin.clone(),
                pitch: g,
            },
        )
    };
    let (mut lo, mut hi) = (diam / n, diam);
    if singles(lo)? <= t {
        return Ok(lo);
    }
    if singles(hi)? > t {
        return Ok(hi);
    }
    while hi - lo > 0.01 * hi {
        let mid = 0.5 * (lo + hi);
        if singles(mid)? <= t {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_use_floor() {
        let g = GridSpec::new(vec![0.0, 0.0], 0.5).unwrap();
        assert_eq!(grid_key(&[1.2, -0.3], &g).unwrap(), vec![2, -1]);
        let g = GridSpec::new(vec![0.0], 0.5).unwrap();
        assert_eq!(grid_key(&[1.0], &g).unwrap(), vec![2]);
        let g = GridSpec::new(vec![0.3, -2.0], 0.7).unwrap();
        assert_eq!(grid_key(&[0.3, -2.0], &g).unwrap(), vec![0, 0]);
        assert!(matches!(
            grid_key(&[f64::NAN, 0.0], &g),
            Err(Error::NonFinite { index: 0 })
        ));
    }

    #[test]
    fn min_count_filter() {
        let g = GridSpec::new(vec![0.0], 1.0).unwrap();
        let pts = vec![vec![0.1], vec![0.2], vec![0.3]];
        assert_eq!(covered_cells(&pts, &g, 1).unwrap().len(), 1);
        assert!(covered_cells(&pts, &g, 4).unwrap().is_empty());
        assert_eq!(covered_cells(&[], &g, 1), Err(Error::EmptySample));
    }

    #[test]
    fn pitch_search_edges() {
        let same = vec![vec![2.0]; 5];
        assert_eq!(select_grid_pitch(&same, 0).unwrap(), 0.2);
        let pts: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        assert_eq!(select_grid_pitch(&pts, 10).unwrap(), 0.9);
    }
}
