//! Brute-force complexity checks on small instances: shattering by
//! exhaustive labeling, VC-dimension search, and greedy covering numbers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest point set `shatter_check` will enumerate labelings for.
pub const MAX_SHATTER_POINTS: usize = 20;
/// Largest configuration size `vc_dim_search` will try.
pub const MAX_SEARCH_POINTS: usize = 12;
/// Phase-I objective below which the separability LP counts as feasible.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "param", rename_all = "lowercase")]
pub enum ClassKind {
    /// Affine threshold functions `1{wᵀx + b > 0}` on `R^p`.
    Hyperplane(usize),
    /// Indicators of unions of cells of some partition into at most `R` cells.
    Partition(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledConfig {
    pub points: Vec<Vec<f64>>,
    pub labeling: Vec<bool>,
}

impl LabeledConfig {
    pub fn new(points: Vec<Vec<f64>>, labeling: Vec<bool>) -> Result<Self> {
        if points.len() != labeling.len() {
            return invalid("points and labels differ in length");
        }
        Ok(LabeledConfig { points, labeling })
    }

    pub fn realizable(&self, class: ClassKind) -> bool {
        match class {
            ClassKind::Hyperplane(_) => linearly_separable(&self.points, &self.labeling),
            ClassKind::Partition(r) => self.points.len() <= r && all_distinct(&self.points),
        }
    }
}

/// Whether some affine functional is positive on the `true` points and
/// negative on the rest, decided by Phase-I simplex on
/// `y_i (wᵀx_i + b) >= 1`.
pub fn linearly_separable(points: &[Vec<f64>], labels: &[bool]) -> bool {
    if points.is_empty() {
        return true;
    }
    let p = points[0].len();
    let free = p + 1;
    let n = points.len();
    // Columns: u⁺ (free), u⁻ (free), surplus (n), artificial (n), rhs.
    let cols = 2 * free + 2 * n;
    let mut t = vec![vec![0.0; cols + 1]; n];
    for (i, (x, &lab)) in points.iter().zip(labels).enumerate() {
        let y = if lab { 1.0 } else { -1.0 };
        for (k, v) in x.iter().chain(std::iter::once(&1.0)).enumerate() {
            t[i][k] = y * v;
            t[i][free + k] = -y * v;
        }
        t[i][2 * free + i] = -1.0;
        t[i][2 * free + n + i] = 1.0;
        t[i][cols] = 1.0;
    }
    let mut basis: Vec<usize> = (0..n).map(|i| 2 * free + n + i).collect();
    let is_artificial = |c: usize| c >= 2 * free + n && c < cols;

    // Reduced costs of the Phase-I objective Σ artificials.
    let mut cost = vec![0.0; cols + 1];
    for row in &t {
        for c in 0..=cols {
            if !is_artificial(c) {
                cost[c] -= row[c];
            }
        }
    }
    const EPS: f64 = 1e-12;
    loop {
        // Bland's rule: lowest-index column with negative reduced cost.
        let Some(enter) = (0..cols).find(|&c| !is_artificial(c) && cost[c] < -EPS) else {
            break;
        };
        let mut leave: Option<(usize, f64)> = None;
        for (r, row) in t.iter().enumerate() {
            if row[enter] > EPS {
                let ratio = row[cols] / row[enter];
                match leave {
                    Some((lr, best)) if ratio > best + EPS || (ratio >= best - EPS && basis[r] > basis[lr]) => {}
                    _ => leave = Some((r, ratio)),
                }
            }
        }
        let Some((r, _)) = leave else {
            // Unbounded direction cannot occur for a Phase-I problem bounded below by 0.
            break;
        };
        let piv = t[r][enter];
        for v in t[r].iter_mut() {
            *v /= piv;
        }
        let pivot_row = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != r && row[enter].abs() > 0.0 {
                let f = row[enter];
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        let f = cost[enter];
        for (v, pv) in cost.iter_mut().zip(&pivot_row) {
            *v -= f * pv;
        }
        basis[r] = enter;
    }
    let infeasibility: f64 = basis
        .iter()
        .zip(&t)
        .filter(|(&b, _)| is_artificial(b))
        .map(|(_, row)| row[cols])
        .sum();
    infeasibility <= FEASIBILITY_TOLERANCE
}

fn all_distinct(points: &[Vec<f64>]) -> bool {
    points.iter().enumerate().all(|(i, a)| points[..i].iter().all(|b| a != b))
}

/// True iff every binary labeling of `points` is realized by the class.
pub fn shatter_check(class: ClassKind, points: &[Vec<f64>]) -> Result<bool> {
    let n = points.len();
    if n > MAX_SHATTER_POINTS {
        return Err(Error::TooLarge(n));
    }
    match class {
        ClassKind::Hyperplane(p) => {
            if points.iter().any(|z| z.len() != p) {
                return invalid(format!("points must have dimension {p}"));
            }
            if n == 0 {
                return Ok(true);
            }
            // A labeling is separable iff its complement is (negate w and b),
            // so fixing the last label halves the enumeration.
            let half = 1u32 << (n - 1);
            Ok((0..half).into_par_iter().all(|mask| {
                let labels: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
                linearly_separable(points, &labels)
            }))
        }
        ClassKind::Partition(r) => Ok(n <= r && all_distinct(points)),
    }
}

/// Largest `n <= max_n` for which one of `trials` sampled configurations is
/// shattered. Stops at the first size where every sample fails.
pub fn vc_dim_search(
    class: ClassKind,
    sampler: &mut dyn FnMut(usize) -> Vec<Vec<f64>>,
    max_n: usize,
    trials: usize,
) -> Result<usize> {
    if trials == 0 {
        return invalid("trials must be >= 1");
    }
    if max_n > MAX_SEARCH_POINTS {
        return invalid(format!("max_n must be <= {MAX_SEARCH_POINTS}"));
    }
    let mut best = 0;
    for n in 1..=max_n {
        let mut shattered = false;
        for _ in 0..trials {
            if shatter_check(class, &sampler(n))? {
                shattered = true;
                break;
            }
        }
        if !shattered {
            break;
        }
        best = n;
    }
    Ok(best)
}

/// `L_r` distance under the empirical measure on the evaluation sample.
pub fn empirical_lr_distance(a: &[f64], b: &[f64], r: f64) -> f64 {
    let n = a.len() as f64;
    let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
    if r == 1.0 {
        diffs.sum::<f64>() / n
    } else if r == 2.0 {
        (diffs.map(|d| d * d).sum::<f64>() / n).sqrt()
    } else {
        (diffs.map(|d| d.powf(r)).sum::<f64>() / n).powf(1.0 / r)
    }
}

/// Greedy ε-cover size for functions given by their values on a sample.
/// Centers are members of the family; each step takes the function whose
/// ε-ball holds the most uncovered functions, lowest index on ties.
pub fn greedy_cover(values: &[Vec<f64>], eps: f64, r: f64) -> Result<usize> {
    if values.is_empty() {
        return invalid("need at least one function");
    }
    if !(eps > 0.0) {
        return invalid(format!("epsilon must be positive, got {eps}"));
    }
    if !(r >= 1.0 && r.is_finite()) {
        return invalid(format!("norm exponent must be finite and >= 1, got {r}"));
    }
    let n = values.len();
    let balls: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).filter(|&j| empirical_lr_distance(&values[i], &values[j], r) <= eps).collect())
        .collect();
    let mut covered = vec![false; n];
    let mut left = n;
    let mut centers = 0;
    while left > 0 {
        let mut best = (0, 0);
        for (i, ball) in balls.iter().enumerate() {
            let gain = ball.iter().filter(|&&j| !covered[j]).count();
            if gain > best.1 {
                best = (i, gain);
            }
        }
        for &j in &balls[best.0] {
            if !covered[j] {
                covered[j] = true;
                left -= 1;
            }
        }
        centers += 1;
    }
    Ok(centers)
}

/// Greedy upper bound on `N(ε, F, L_r(Q_n))` for a finite family `F` and
/// the empirical measure `Q_n` on `sample`.
pub fn covering_estimate<F: Fn(&[f64]) -> f64>(functions: &[F], sample: &[Vec<f64>], eps: f64, r: f64) -> Result<usize> {
    if sample.is_empty() {
        return invalid("need a non-empty evaluation sample");
    }
    let values: Vec<Vec<f64>> = functions.iter().map(|f| sample.iter().map(|z| f(z)).collect()).collect();
    greedy_cover(&values, eps, r)
}
