//! Dense two-phase tableau simplex.
//!
//! Sized for the game programs (tens of variables, up to a few hundred
//! rows). Pivoting is Dantzig's rule with lowest-index tie breaking, and
//! switches to Bland's rule after `10 * (rows + cols)` iterations so that
//! degenerate programs cannot cycle. Identical inputs give identical outputs.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-11;
const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Maximize,
    Minimize,
}

/// `opt c.x  s.t.  A_eq x = b_eq,  A_le x <= b_le,  lo <= x <= hi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub eq_rows: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
    pub le_rows: Vec<Vec<f64>>,
    pub le_rhs: Vec<f64>,
    pub bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    /// A program over `objective.len()` variables, each bounded to `[0, inf)`.
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            sense,
            objective,
            eq_rows: Vec::new(),
            eq_rhs: Vec::new(),
            le_rows: Vec::new(),
            le_rhs: Vec::new(),
            bounds: vec![(0.0, f64::INFINITY); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.eq_rows.push(row);
        self.eq_rhs.push(rhs);
        self
    }

    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.le_rows.push(row);
        self.le_rhs.push(rhs);
        self
    }

    pub fn add_ge(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.add_le(row.into_iter().map(|a| -a).collect(), -rhs)
    }

    pub fn set_bounds(&mut self, var: usize, lo: f64, hi: f64) -> &mut Self {
        self.bounds[var] = (lo, hi);
        self
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.bounds.len() != n {
            return Err(Error::MalformedLp(format!(
                "{} bounds for {n} variables",
                self.bounds.len()
            )));
        }
        if self.eq_rows.len() != self.eq_rhs.len() || self.le_rows.len() != self.le_rhs.len() {
            return Err(Error::MalformedLp("row/rhs count mismatch".into()));
        }
        let finite = |v: &f64| v.is_finite();
        if !self.objective.iter().all(finite) {
            return Err(Error::MalformedLp("non-finite objective".into()));
        }
        for (rows, rhs) in [(&self.eq_rows, &self.eq_rhs), (&self.le_rows, &self.le_rhs)] {
            for (row, b) in rows.iter().zip(rhs.iter()) {
                if row.len() != n {
                    return Err(Error::MalformedLp(format!(
                        "row of length {} for {n} variables",
                        row.len()
                    )));
                }
                if !row.iter().all(finite) || !b.is_finite() {
                    return Err(Error::MalformedLp("non-finite coefficient".into()));
                }
            }
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_nan()
                || hi.is_nan()
                || lo > hi
                || lo == f64::INFINITY
                || hi == f64::NEG_INFINITY
            {
                return Err(Error::MalformedLp(format!("bad bounds on variable {j}")));
            }
        }
        Ok(())
    }

    /// Largest violation of any constraint or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let dot = |row: &[f64]| row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        let mut worst = 0.0_f64;
        for (row, b) in self.eq_rows.iter().zip(&self.eq_rhs) {
            worst = worst.max((dot(row) - b).abs());
        }
        for (row, b) in self.le_rows.iter().zip(&self.le_rhs) {
            worst = worst.max(dot(row) - b);
        }
        for (&xj, &(lo, hi)) in x.iter().zip(&self.bounds) {
            worst = worst.max(lo - xj).max(xj - hi);
        }
        worst
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Empty unless `status` is optimal.
    pub x: Vec<f64>,
    pub objective_value: f64,
    pub iterations: usize,
}

/// How an original variable is expressed through nonnegative columns.
#[derive(Debug, Clone)]
struct VarMap {
    offset: f64,
    cols: Vec<(usize, f64)>,
}

struct Tableau {
    width: usize,
    /// Row-major, `rows x (cols + 1)`; last entry of each row is the rhs.
    data: Vec<f64>,
    basis: Vec<usize>,
    /// Original row index of each tableau row.
    row_ids: Vec<usize>,
    cols: usize,
    iterations: usize,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    #[inline]
    fn rhs(&self, i: usize) -> f64 {
        self.data[i * self.width + self.cols]
    }

    fn rows(&self) -> usize {
        self.basis.len()
    }

    fn pivot(&mut self, r: usize, e: usize, cost: &mut [f64]) {
        let w = self.width;
        let inv = 1.0 / self.data[r * w + e];
        for v in &mut self.data[r * w..(r + 1) * w] {
            *v *= inv;
        }
        self.data[r * w + e] = 1.0;
        let pivot_row: Vec<f64> = self.data[r * w..(r + 1) * w].to_vec();
        for i in 0..self.rows() {
            if i == r {
                continue;
            }
            let f = self.data[i * w + e];
            if f != 0.0 {
                let row = &mut self.data[i * w..(i + 1) * w];
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
                row[e] = 0.0;
            }
        }
        let f = cost[e];
        if f != 0.0 {
            for (v, p) in cost.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
            cost[e] = 0.0;
        }
        self.basis[r] = e;
        self.iterations += 1;
    }

    fn remove_row(&mut self, r: usize) {
        let w = self.width;
        self.data.drain(r * w..(r + 1) * w);
        self.basis.remove(r);
        self.row_ids.remove(r);
    }

    /// Minimizes the cost row (last entry holds minus the objective value)
    /// over columns `< allowed`.
    fn optimize(&mut self, cost: &mut [f64], allowed: usize) -> Result<bool> {
        let m = self.rows();
        let bland_after = 10 * (m + self.cols);
        let limit = 50 * (m + self.cols) + 1000;
        let mut local = 0usize;
        loop {
            let bland = local >= bland_after;
            let mut entering = None;
            let mut best = -COST_TOL;
            for (j, &d) in cost.iter().enumerate().take(allowed) {
                if d < best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(e) = entering else {
                return Ok(true);
            };
            let mut min_ratio = f64::INFINITY;
            for i in 0..m {
                let a = self.at(i, e);
                if a > PIVOT_TOL {
                    min_ratio = min_ratio.min(self.rhs(i).max(0.0) / a);
                }
            }
            // Among near-minimal ratios prefer the largest pivot for
            // stability; under Bland's rule take the lowest basic index.
            let slack = 1e-12 * min_ratio.abs().max(1.0);
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let a = self.at(i, e);
                if a > PIVOT_TOL && self.rhs(i).max(0.0) / a <= min_ratio + slack {
                    let better = match leave {
                        None => true,
                        Some((li, _)) if bland => self.basis[i] < self.basis[li],
                        Some((li, la)) => a > la || (a == la && self.basis[i] < self.basis[li]),
                    };
                    if better {
                        leave = Some((i, a));
                    }
                }
            }
            let Some((r, _)) = leave else {
                return Ok(false);
            };
            self.pivot(r, e, cost);
            local += 1;
            if local > limit {
                return Err(Error::NumericalBreakdown(format!(
                    "no convergence after {local} pivots"
                )));
            }
        }
    }
}

/// Solves `lp`. Infeasible and unbounded programs are reported through
/// [`LpSolution::status`]; errors are reserved for malformed input and
/// numerical failure.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.num_vars();

    // Substitute bounded variables by nonnegative columns.
    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0usize;
    let mut upper_rows: Vec<(usize, f64)> = Vec::new();
    for &(lo, hi) in &lp.bounds {
        if lo.is_finite() {
            maps.push(VarMap {
                offset: lo,
                cols: vec![(ncols, 1.0)],
            });
            if hi.is_finite() {
                upper_rows.push((ncols, hi - lo));
            }
            ncols += 1;
        } else if hi.is_finite() {
            maps.push(VarMap {
                offset: hi,
                cols: vec![(ncols, -1.0)],
            });
            ncols += 1;
        } else {
            maps.push(VarMap {
                offset: 0.0,
                cols: vec![(ncols, 1.0), (ncols + 1, -1.0)],
            });
            ncols += 2;
        }
    }
    let structural = ncols;

    let transform = |row: &[f64], rhs: f64| -> (Vec<f64>, f64) {
        let mut out = vec![0.0; structural];
        let mut b = rhs;
        for (a, map) in row.iter().zip(&maps) {
            if *a == 0.0 {
                continue;
            }
            b -= a * map.offset;
            for &(c, s) in &map.cols {
                out[c] += a * s;
            }
        }
        (out, b)
    };

    // (row, rhs, is_equality)
    let mut rows: Vec<(Vec<f64>, f64, bool)> = Vec::new();
    for (row, &b) in lp.eq_rows.iter().zip(&lp.eq_rhs) {
        let (r, b) = transform(row, b);
        rows.push((r, b, true));
    }
    for (row, &b) in lp.le_rows.iter().zip(&lp.le_rhs) {
        let (r, b) = transform(row, b);
        rows.push((r, b, false));
    }
    for &(c, ub) in &upper_rows {
        let mut r = vec![0.0; structural];
        r[c] = 1.0;
        rows.push((r, ub, false));
    }

    let m = rows.len();
    let n_slack = rows.iter().filter(|r| !r.2).count();
    let needs_art: Vec<bool> = rows.iter().map(|(_, b, eq)| *eq || *b < 0.0).collect();
    let n_art = needs_art.iter().filter(|&&a| a).count();
    let cols = structural + n_slack + n_art;
    let width = cols + 1;

    let mut tab = Tableau {
        width,
        data: vec![0.0; m * width],
        basis: vec![0; m],
        cols,
        row_ids: (0..m).collect(),
        iterations: 0,
    };
    let mut slack = structural;
    let mut art = structural + n_slack;
    for (i, (row, b, eq)) in rows.into_iter().enumerate() {
        let sign = if b < 0.0 { -1.0 } else { 1.0 };
        let base = i * width;
        for (j, a) in row.into_iter().enumerate() {
            tab.data[base + j] = sign * a;
        }
        tab.data[base + cols] = sign * b;
        if !eq {
            tab.data[base + slack] = sign;
            if !needs_art[i] {
                tab.basis[i] = slack;
            }
            slack += 1;
        }
        if needs_art[i] {
            tab.data[base + art] = 1.0;
            tab.basis[i] = art;
            art += 1;
        }
    }

    let original = tab.data.clone();

    // Phase 1: minimize the sum of artificials.
    let first_art = structural + n_slack;
    if n_art > 0 {
        let mut cost = vec![0.0; width];
        for i in 0..m {
            if tab.basis[i] >= first_art {
                for (j, c) in cost.iter_mut().enumerate() {
                    *c -= tab.at(i, j);
                }
            }
        }
        for c in cost.iter_mut().take(cols).skip(first_art) {
            *c = 0.0;
        }
        tab.optimize(&mut cost, cols)?;
        let infeas = -cost[cols];
        if infeas > FEAS_TOL {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: Vec::new(),
                objective_value: f64::NAN,
                iterations: tab.iterations,
            });
        }
        // Drive remaining artificials out of the basis or drop redundant rows.
        let mut i = 0;
        while i < tab.rows() {
            if tab.basis[i] >= first_art {
                let mut best: Option<(usize, f64)> = None;
                for j in 0..first_art {
                    let a = tab.at(i, j).abs();
                    if a > 1e-9 && best.is_none_or(|(_, b)| a > b) {
                        best = Some((j, a));
                    }
                }
                match best {
                    Some((j, _)) => {
                        // The artificial sits at zero up to FEAS_TOL; pin it so a
                        // small pivot cannot amplify the leftover.
                        let at = i * width + cols;
                        tab.data[at] = 0.0;
                        let mut dummy = vec![0.0; width];
                        tab.pivot(i, j, &mut dummy);
                        i += 1;
                    }
                    None => tab.remove_row(i),
                }
            } else {
                i += 1;
            }
        }
    }

    // Phase 2 over structural and slack columns.
    let sign = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut c = vec![0.0; width];
    for (map, &cj) in maps.iter().zip(&lp.objective) {
        for &(col, s) in &map.cols {
            c[col] += sign * cj * s;
        }
    }
    let mut cost = c.clone();
    for i in 0..tab.rows() {
        let cb = c[tab.basis[i]];
        if cb != 0.0 {
            for (j, v) in cost.iter_mut().enumerate() {
                *v -= cb * tab.at(i, j);
            }
        }
    }
    for i in 0..tab.rows() {
        cost[tab.basis[i]] = 0.0;
    }
    let bounded = tab.optimize(&mut cost, first_art)?;
    if !bounded {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: Vec::new(),
            objective_value: match lp.sense {
                Sense::Maximize => f64::INFINITY,
                Sense::Minimize => f64::NEG_INFINITY,
            },
            iterations: tab.iterations,
        });
    }

    let to_x = |y: &[f64]| -> Vec<f64> {
        maps.iter()
            .map(|map| map.offset + map.cols.iter().map(|&(c, s)| s * y[c]).sum::<f64>())
            .collect()
    };
    let mut y = vec![0.0; cols];
    for i in 0..tab.rows() {
        y[tab.basis[i]] = tab.rhs(i).max(0.0);
    }
    let mut x = to_x(&y);
    let mut violation = lp.max_violation(&x);
    // Re-solve the final basis against the untouched rows to shed the
    // rounding accumulated by the tableau updates.
    if let Some(refined) = resolve_basis(&original, width, &tab) {
        let mut y2 = vec![0.0; cols];
        for (i, v) in refined.into_iter().enumerate() {
            y2[tab.basis[i]] = v.max(0.0);
        }
        let x2 = to_x(&y2);
        let v2 = lp.max_violation(&x2);
        if v2 <= violation {
            x = x2;
            violation = v2;
        }
    }
    if violation > RESIDUAL_TOL {
        return Err(Error::NumericalBreakdown(format!(
            "residual {violation:e} exceeds {RESIDUAL_TOL:e}"
        )));
    }
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective_value: lp.objective_at(&x),
        x,
        iterations: tab.iterations,
    })
}

/// Solves `B x_B = b` for the final basis using the rows as first built.
fn resolve_basis(original: &[f64], width: usize, tab: &Tableau) -> Option<Vec<f64>> {
    let m = tab.rows();
    if m == 0 {
        return Some(Vec::new());
    }
    let rhs = width - 1;
    let b = DMatrix::from_fn(m, m, |i, k| original[tab.row_ids[i] * width + tab.basis[k]]);
    let v = DVector::from_fn(m, |i, _| original[tab.row_ids[i] * width + rhs]);
    let sol = b.lu().solve(&v)?;
    if sol.iter().all(|x| x.is_finite()) {
        Some(sol.iter().copied().collect())
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_bound() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0]);
        lp.add_le(vec![1.0], 1.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 1.0).abs() < 1e-12);
        assert!((s.objective_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn equality_saturated() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0, 1.0]);
        lp.add_eq(vec![1.0, 1.0], 1.0);
        lp.set_bounds(0, 0.0, 1.0).set_bounds(1, 0.0, 1.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_feasible_set() {
        let mut lp = LinearProgram::new(Sense::Minimize, vec![1.0]);
        lp.add_le(vec![1.0], -1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0, 1.0]);
        lp.add_le(vec![1.0, -1.0], 1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn free_and_upper_only_variables() {
        // min x - y  s.t. x + y = 2, x free, y <= 5
        let mut lp = LinearProgram::new(Sense::Minimize, vec![1.0, -1.0]);
        lp.add_eq(vec![1.0, 1.0], 2.0);
        lp.set_bounds(0, f64::NEG_INFINITY, f64::INFINITY);
        lp.set_bounds(1, f64::NEG_INFINITY, 5.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[1] - 5.0).abs() < 1e-12);
        assert!((s.x[0] + 3.0).abs() < 1e-12);
        assert!((s.objective_value + 8.0).abs() < 1e-12);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0, 2.0]);
        lp.add_eq(vec![1.0, 1.0], 1.0);
        lp.add_eq(vec![2.0, 2.0], 2.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ge_rows_and_shifted_bounds() {
        // min x + y  s.t. x + 2y >= 4, 1 <= x <= 3, y >= 0.5
        let mut lp = LinearProgram::new(Sense::Minimize, vec![1.0, 1.0]);
        lp.add_ge(vec![1.0, 2.0], 4.0);
        lp.set_bounds(0, 1.0, 3.0).set_bounds(1, 0.5, f64::INFINITY);
        let s = solve_lp(&lp).unwrap();
        assert!((s.objective_value - 2.5).abs() < 1e-12, "{s:?}");
    }

    #[test]
    fn malformed_rejected() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0]);
        lp.add_le(vec![1.0, 2.0], 1.0);
        assert!(matches!(solve_lp(&lp), Err(Error::MalformedLp(_))));
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0]);
        lp.set_bounds(0, 2.0, 1.0);
        assert!(matches!(solve_lp(&lp), Err(Error::MalformedLp(_))));
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's classic cycling instance under naive Dantzig pivoting.
        let mut lp = LinearProgram::new(Sense::Minimize, vec![-0.75, 150.0, -0.02, 6.0]);
        lp.add_le(vec![0.25, -60.0, -0.04, 9.0], 0.0);
        lp.add_le(vec![0.5, -90.0, -0.02, 3.0], 0.0);
        lp.add_le(vec![0.0, 0.0, 1.0, 0.0], 1.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value + 0.05).abs() < 1e-10, "{s:?}");
    }
}
