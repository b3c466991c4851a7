//! Linear-discriminant propensity scores and fixed-ratio nearest-neighbour
//! matching on the logit scale.
//!
//! Under `Z | T = ℓ ~ N(μ_ℓ, Σ)` the logit of the propensity score is affine
//! in `z` with slope `w = Σ⁻¹(μ1 - μ0)`. Every balance quantity depends only
//! on score differences, so [`logit_score`] returns `wᵀz` without the offset.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bounds::{bound, vc_to_covering_exponent};
use crate::data::Dataset;
use crate::error::{invalid, Error, Result};
use crate::matching::{MatchedSets, Matching};
use crate::numeric::{dot, mean, sum};

/// Relative pivot size below which the pooled covariance counts as singular.
const SINGULAR_PIVOT: f64 = 1e-12;
/// Score distances closer than this (relative to the score scale) are ties.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub mu0: Vec<f64>,
    pub mu1: Vec<f64>,
    /// Pooled covariance, row-major `p × p`.
    pub sigma: Vec<Vec<f64>>,
    pub w: Vec<f64>,
    pub ridge: f64,
    /// Treated share `n1 / n` of the fitting sample, used by [`LdaModel::full_logit`].
    pub treated_share: f64,
}

impl LdaModel {
    pub fn p(&self) -> usize {
        self.w.len()
    }

    /// The complete log-odds `log(p1 π1 / (p0 π0))` under the fitted Gaussians.
    pub fn full_logit(&self, z: &[f64]) -> f64 {
        let mid: Vec<f64> = self.mu0.iter().zip(&self.mu1).map(|(a, b)| 0.5 * (a + b)).collect();
        let prior = (self.treated_share / (1.0 - self.treated_share)).ln();
        dot(&self.w, z) - dot(&self.w, &mid) + prior
    }
}

fn group_moments(data: &Dataset, idx: &[usize]) -> (Vec<f64>, DMatrix<f64>) {
    let p = data.p();
    let mu: Vec<f64> = (0..p)
        .map(|j| mean(&idx.iter().map(|&i| data.unit(i).z[j]).collect::<Vec<_>>()))
        .collect();
    let mut scatter = DMatrix::zeros(p, p);
    for a in 0..p {
        for b in a..p {
            let s = sum(idx.iter().map(|&i| {
                let z = &data.unit(i).z;
                (z[a] - mu[a]) * (z[b] - mu[b])
            }));
            scatter[(a, b)] = s;
            scatter[(b, a)] = s;
        }
    }
    (mu, scatter)
}

/// Ridge used when the pooled covariance is numerically singular.
pub fn default_ridge(sigma_trace: f64, p: usize) -> f64 {
    let r = 1e-8 * sigma_trace / p as f64;
    if r > 0.0 {
        r
    } else {
        1e-8
    }
}

/// Fits group means, the pooled covariance and the discriminant direction
/// `w` solving `(Σ + ridge·I) w = μ1 - μ0`.
pub fn lda_fit(data: &Dataset, ridge: f64) -> Result<LdaModel> {
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return invalid(format!("ridge must be finite and >= 0, got {ridge}"));
    }
    let c_idx = data.control_indices();
    let t_idx = data.treated_indices();
    if c_idx.len() < 2 || t_idx.len() < 2 {
        return invalid(format!(
            "LDA needs at least two units per group (n0 = {}, n1 = {})",
            c_idx.len(),
            t_idx.len()
        ));
    }
    let p = data.p();
    let (mu0, s0) = group_moments(data, &c_idx);
    let (mu1, s1) = group_moments(data, &t_idx);
    let dof = (c_idx.len() + t_idx.len() - 2) as f64;
    let sigma = (s0 + s1) / dof;
    let trace = sigma.trace();

    let regularized = &sigma + DMatrix::identity(p, p) * ridge;
    let max_diag = (0..p).map(|i| regularized[(i, i)]).fold(0.0, f64::max);
    let chol = regularized.clone().cholesky().filter(|c| {
        let l = c.l_dirty();
        (0..p).all(|i| l[(i, i)] * l[(i, i)] > SINGULAR_PIVOT * max_diag)
    });
    let chol = match chol {
        Some(c) => c,
        None if ridge == 0.0 => return Err(Error::SingularCovariance { suggested_ridge: default_ridge(trace, p) }),
        None => return Err(Error::Numerical(format!("covariance + {ridge:e}·I is not positive definite"))),
    };
    let diff = DVector::from_iterator(p, mu1.iter().zip(&mu0).map(|(a, b)| a - b));
    let w = chol.solve(&diff);
    if w.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("discriminant direction is not finite".into()));
    }
    Ok(LdaModel {
        mu0,
        mu1,
        sigma: (0..p).map(|i| (0..p).map(|j| sigma[(i, j)]).collect()).collect(),
        w: w.iter().copied().collect(),
        ridge,
        treated_share: t_idx.len() as f64 / data.n() as f64,
    })
}

/// Fits without regularization, falling back to the default ridge when the
/// pooled covariance is singular.
pub fn lda_fit_auto(data: &Dataset) -> Result<LdaModel> {
    match lda_fit(data, 0.0) {
        Err(Error::SingularCovariance { suggested_ridge }) => lda_fit(data, suggested_ridge),
        other => other,
    }
}

/// `wᵀz`.
pub fn logit_score(model: &LdaModel, z: &[f64]) -> Result<f64> {
    if z.len() != model.p() {
        return invalid(format!("vector has dimension {}, model expects {}", z.len(), model.p()));
    }
    Ok(dot(&model.w, z))
}

/// Fixed-ratio matching: each treated unit receives exactly `k` controls,
/// none shared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioMatch {
    pub k: usize,
    /// `assignments[j]` lists the control positions matched to treated position `j`.
    pub assignments: Vec<Vec<usize>>,
    /// Dataset index of each control position.
    pub control_ids: Vec<usize>,
    /// Dataset index of each treated position.
    pub treated_ids: Vec<usize>,
}

impl RatioMatch {
    pub fn m1(&self) -> usize {
        self.assignments.len()
    }

    pub fn m0(&self) -> usize {
        self.k * self.assignments.len()
    }

    /// Matched control positions, ascending.
    pub fn matched_control_positions(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.assignments.iter().flatten().copied().collect();
        all.sort_unstable();
        all
    }
}

impl Matching for RatioMatch {
    fn matched_sets(&self) -> MatchedSets {
        let controls = self.matched_control_positions().into_iter().map(|i| self.control_ids[i]).collect();
        MatchedSets::unweighted(controls, self.treated_ids.clone())
    }
}

/// Available-element finder over sorted positions with path compression.
struct Finder {
    parent: Vec<usize>,
}

impl Finder {
    fn new(n: usize) -> Self {
        Finder { parent: (0..n).collect() }
    }

    fn find(&mut self, mut i: usize) -> usize {
        let mut root = i;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[i] != root {
            let next = self.parent[i];
            self.parent[i] = root;
            i = next;
        }
        root
    }
}

/// Available controls kept in sorted score order, supporting nearest
/// available lookups on either side of a position.
struct Available {
    // next[i]: smallest available sorted index >= i (n = none).
    next: Finder,
    // prev[i + 1]: one past the largest available sorted index <= i (0 = none).
    prev: Finder,
    n: usize,
}

impl Available {
    fn new(n: usize) -> Self {
        Available { next: Finder::new(n + 1), prev: Finder::new(n + 1), n }
    }

    fn at_or_after(&mut self, i: usize) -> Option<usize> {
        let r = self.next.find(i.min(self.n));
        (r < self.n).then_some(r)
    }

    fn at_or_before(&mut self, i: usize) -> Option<usize> {
        let r = self.prev.find(i + 1);
        (r > 0).then(|| r - 1)
    }

    fn before(&mut self, i: usize) -> Option<usize> {
        if i == 0 {
            None
        } else {
            self.at_or_before(i - 1)
        }
    }

    fn remove(&mut self, i: usize) {
        self.next.parent[i] = i + 1;
        self.prev.parent[i + 1] = i;
    }
}

fn is_tie(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= TIE_TOLERANCE * scale.max(1.0)
}

/// Greedy nearest-neighbour matching without replacement. Treated units are
/// processed by descending score; each takes its `k` nearest available
/// controls by absolute score difference, ties going to the lower position.
pub fn ratio_match(scores0: &[f64], scores1: &[f64], k: usize) -> Result<RatioMatch> {
    if k == 0 {
        return invalid("match ratio k must be >= 1");
    }
    if scores1.is_empty() {
        return invalid("no treated scores to match");
    }
    if scores0.iter().chain(scores1).any(|s| !s.is_finite()) {
        return invalid("scores must be finite");
    }
    let needed = k * scores1.len();
    if scores0.len() < needed {
        return Err(Error::InsufficientControls { needed, available: scores0.len() });
    }

    let mut order: Vec<usize> = (0..scores0.len()).collect();
    order.sort_by(|&a, &b| scores0[a].total_cmp(&scores0[b]).then(a.cmp(&b)));
    let sorted: Vec<f64> = order.iter().map(|&i| scores0[i]).collect();

    let mut treated: Vec<usize> = (0..scores1.len()).collect();
    treated.sort_by(|&a, &b| scores1[b].total_cmp(&scores1[a]).then(a.cmp(&b)));

    let mut avail = Available::new(sorted.len());
    let mut assignments = vec![Vec::with_capacity(k); scores1.len()];
    for &j in &treated {
        let s = scores1[j];
        let split = sorted.partition_point(|&c| c < s);
        for _ in 0..k {
            // Left frontier: lowest position among the nearest equal-score run.
            let left = avail.before(split).map(|mut cand| {
                while let Some(p) = avail.before(cand) {
                    if sorted[p] == sorted[cand] {
                        cand = p;
                    } else {
                        break;
                    }
                }
                cand
            });
            let right = avail.at_or_after(split);
            let pick = match (left, right) {
                (Some(l), Some(r)) => {
                    let (dl, dr) = (s - sorted[l], sorted[r] - s);
                    if is_tie(dl, dr, s.abs()) {
                        if order[l] < order[r] {
                            l
                        } else {
                            r
                        }
                    } else if dl < dr {
                        l
                    } else {
                        r
                    }
                }
                (Some(l), None) => l,
                (None, Some(r)) => r,
                (None, None) => unreachable!("enough controls were checked up front"),
            };
            avail.remove(pick);
            assignments[j].push(order[pick]);
        }
    }
    Ok(RatioMatch {
        k,
        assignments,
        control_ids: (0..scores0.len()).collect(),
        treated_ids: (0..scores1.len()).collect(),
    })
}

/// Scores every unit with `model` and ratio-matches controls to treated.
pub fn propensity_match(data: &Dataset, model: &LdaModel, k: usize) -> Result<RatioMatch> {
    let control_ids = data.control_indices();
    let treated_ids = data.treated_indices();
    let score = |i: &usize| logit_score(model, &data.unit(*i).z);
    let s0 = control_ids.iter().map(score).collect::<Result<Vec<_>>>()?;
    let s1 = treated_ids.iter().map(score).collect::<Result<Vec<_>>>()?;
    let rm = ratio_match(&s0, &s1, k)?;
    Ok(RatioMatch { control_ids, treated_ids, ..rm })
}

/// The balance statistic on the logit scale, computed three ways.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropensityDelta {
    /// `|mean of full logits over M0 - mean over M1|`.
    pub delta: f64,
    /// `|(1/m1) Σ f*(Z_j) - (1/m0) Σ f*(Z_i)|` with `f*(z) = wᵀz`.
    pub via_discriminant: f64,
    /// `|(1/m0) Σ_j Σ_{i ∈ M0^j} (L_j - L_i)|`.
    pub telescoped: f64,
}

pub fn propensity_delta(model: &LdaModel, data: &Dataset, matched: &RatioMatch) -> Result<PropensityDelta> {
    if matched.assignments.iter().any(|a| a.len() != matched.k) {
        return invalid("every treated unit must have exactly k controls");
    }
    if matched.control_ids.iter().chain(&matched.treated_ids).any(|&i| i >= data.n()) {
        return invalid("match refers to units outside the dataset");
    }
    let z = |i: usize| -> &[f64] { &data.unit(i).z };
    let controls: Vec<usize> = matched.matched_control_positions().iter().map(|&i| matched.control_ids[i]).collect();
    let (m0, m1) = (matched.m0() as f64, matched.m1() as f64);

    let logits0 = sum(controls.iter().map(|&i| model.full_logit(z(i)))) / m0;
    let logits1 = sum(matched.treated_ids.iter().map(|&j| model.full_logit(z(j)))) / m1;

    let f0 = sum(controls.iter().map(|&i| dot(&model.w, z(i)))) / m0;
    let f1 = sum(matched.treated_ids.iter().map(|&j| dot(&model.w, z(j)))) / m1;

    let pairs = matched.assignments.iter().enumerate().flat_map(|(j, cs)| {
        let lj = model.full_logit(z(matched.treated_ids[j]));
        cs.iter().map(move |&i| (lj, i))
    });
    let telescoped = sum(pairs.map(|(lj, i)| lj - model.full_logit(z(matched.control_ids[i])))) / m0;

    Ok(PropensityDelta {
        delta: (logits0 - logits1).abs(),
        via_discriminant: (f1 - f0).abs(),
        telescoped: telescoped.abs(),
    })
}

/// `B(δ, D, 2p)`: hyperplanes in `p` dimensions have VC dimension `p + 1`.
pub fn propensity_bound(p: usize, delta: f64, d: f64, n0: usize, n1: usize) -> Result<f64> {
    if p == 0 {
        return invalid("covariate dimension must be >= 1");
    }
    let v = u32::try_from(p + 1).map_err(|_| Error::InvalidInput("dimension too large".into()))?;
    bound(delta, d, vc_to_covering_exponent(v)?, n0, n1)
}
