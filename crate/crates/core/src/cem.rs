//! Coarsened exact matching.
//!
//! Each covariate is coarsened into intervals by a list of cutpoints, units
//! are stratified on the resulting signature, and strata lacking either
//! treatment group are discarded. Retained controls are reweighted so that
//! each stratum carries the treated group's share of the matched sample.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bounds::vc_to_covering_exponent;
use crate::data::Dataset;
use crate::error::{invalid, Error, Result};
use crate::ipm::{gamma_partition_from_contributions, partition_contributions};
use crate::matching::{MatchedSets, Matching};

/// Per-covariate strictly increasing cutpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoarseningSpec {
    cuts: Vec<Vec<f64>>,
}

impl CoarseningSpec {
    pub fn new(cuts: Vec<Vec<f64>>) -> Result<Self> {
        if cuts.is_empty() {
            return invalid("coarsening needs one cutpoint list per covariate");
        }
        for (j, c) in cuts.iter().enumerate() {
            if c.iter().any(|x| !x.is_finite()) {
                return invalid(format!("cutpoints for covariate {j} must be finite"));
            }
            if c.windows(2).any(|w| !(w[0] < w[1])) {
                return invalid(format!("cutpoints for covariate {j} must be strictly increasing"));
            }
        }
        Ok(CoarseningSpec { cuts })
    }

    /// `k` equal-width cells on `[0, 1]` for each of `p` covariates.
    pub fn uniform(p: usize, cells_per_covariate: usize) -> Result<Self> {
        if cells_per_covariate == 0 {
            return invalid("need at least one cell per covariate");
        }
        let k = cells_per_covariate;
        let cuts: Vec<f64> = (1..k).map(|i| i as f64 / k as f64).collect();
        Self::new(vec![cuts; p])
    }

    pub fn cuts(&self) -> &[Vec<f64>] {
        &self.cuts
    }

    pub fn dim(&self) -> usize {
        self.cuts.len()
    }

    /// Nominal cell count `Π_j (|cuts_j| + 1)`.
    pub fn nominal_cells(&self) -> usize {
        self.cuts.iter().map(|c| c.len() + 1).product()
    }

    /// Adds one cutpoint to covariate `j`, keeping the list sorted.
    pub fn refined(&self, j: usize, cut: f64) -> Result<Self> {
        let mut cuts = self.cuts.clone();
        if j >= cuts.len() {
            return invalid(format!("covariate {j} out of range"));
        }
        if !cuts[j].contains(&cut) {
            cuts[j].push(cut);
            cuts[j].sort_by(f64::total_cmp);
        }
        Self::new(cuts)
    }
}

/// Interval index of each coordinate: the number of cutpoints `<= z_j`.
/// Intervals are left-closed and right-open; the last one is unbounded above.
pub fn coarsen(z: &[f64], spec: &CoarseningSpec) -> Result<Vec<usize>> {
    if z.len() != spec.dim() {
        return invalid(format!("covariate vector has dimension {}, coarsening expects {}", z.len(), spec.dim()));
    }
    Ok(z.iter()
        .zip(&spec.cuts)
        .map(|(&v, cuts)| cuts.partition_point(|&c| c <= v))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiscardReason {
    NoTreated,
    NoControls,
}

impl DiscardReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            DiscardReason::NoTreated => "no-treated",
            DiscardReason::NoControls => "no-controls",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    pub signature: Vec<usize>,
    pub controls: Vec<usize>,
    pub treated: Vec<usize>,
}

impl Stratum {
    pub fn retained(&self) -> bool {
        !self.controls.is_empty() && !self.treated.is_empty()
    }
}

/// Outcome of coarsened exact matching on a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    /// Every non-empty cell, ordered by signature.
    pub strata: Vec<Stratum>,
    /// Stratum index (into `strata`) of every unit.
    pub stratum_of: Vec<usize>,
    pub m0: usize,
    pub m1: usize,
    pub n0: usize,
    pub n1: usize,
    /// Per-unit weight; zero for discarded units.
    pub weights: Vec<f64>,
    pub discarded: Vec<(usize, DiscardReason)>,
    pub nominal_cells: usize,
}

impl MatchResult {
    /// Control indices retained, ascending.
    pub fn matched_controls(&self) -> Vec<usize> {
        self.retained_units(|s| &s.controls)
    }

    pub fn matched_treated(&self) -> Vec<usize> {
        self.retained_units(|s| &s.treated)
    }

    fn retained_units(&self, side: impl Fn(&Stratum) -> &Vec<usize>) -> Vec<usize> {
        let mut ix: Vec<usize> = self.strata.iter().filter(|s| s.retained()).flat_map(|s| side(s).iter().copied()).collect();
        ix.sort_unstable();
        ix
    }

    /// Number of non-empty cells observed.
    pub fn effective_cells(&self) -> usize {
        self.strata.len()
    }

    pub fn retained_strata(&self) -> impl Iterator<Item = &Stratum> {
        self.strata.iter().filter(|s| s.retained())
    }

    /// Stratum label of each control and each treated unit, in dataset order.
    pub fn stratum_labels(&self, data: &Dataset) -> (Vec<Option<usize>>, Vec<Option<usize>>) {
        let pick = |ix: Vec<usize>| ix.into_iter().map(|i| Some(self.stratum_of[i])).collect();
        (pick(data.control_indices()), pick(data.treated_indices()))
    }
}

impl Matching for MatchResult {
    fn matched_sets(&self) -> MatchedSets {
        let controls = self.matched_controls();
        let treated = self.matched_treated();
        MatchedSets {
            control_weights: controls.iter().map(|&i| self.weights[i]).collect(),
            treated_weights: treated.iter().map(|&j| self.weights[j]).collect(),
            controls,
            treated,
        }
    }
}

/// Stratifies on coarsened signatures, discards strata missing a group and
/// assigns weights: 1 for treated, `(m1ˢ/m1) / (m0ˢ/m0)` for controls.
pub fn cem_match(data: &Dataset, spec: &CoarseningSpec) -> Result<MatchResult> {
    data.require_both_groups()?;
    let mut cells: BTreeMap<Vec<usize>, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (i, u) in data.units().iter().enumerate() {
        let sig = coarsen(&u.z, spec)?;
        let cell = cells.entry(sig).or_default();
        if u.treated {
            cell.1.push(i);
        } else {
            cell.0.push(i);
        }
    }
    let strata: Vec<Stratum> = cells
        .into_iter()
        .map(|(signature, (controls, treated))| Stratum { signature, controls, treated })
        .collect();

    let mut stratum_of = vec![0; data.n()];
    let mut discarded = Vec::new();
    let (mut m0, mut m1) = (0, 0);
    for (s, st) in strata.iter().enumerate() {
        for &i in st.controls.iter().chain(&st.treated) {
            stratum_of[i] = s;
        }
        if st.retained() {
            m0 += st.controls.len();
            m1 += st.treated.len();
        } else if st.treated.is_empty() {
            discarded.extend(st.controls.iter().map(|&i| (i, DiscardReason::NoTreated)));
        } else {
            discarded.extend(st.treated.iter().map(|&j| (j, DiscardReason::NoControls)));
        }
    }
    if m0 == 0 {
        return Err(Error::NoMatches);
    }
    discarded.sort_unstable_by_key(|d| d.0);

    let mut weights = vec![0.0; data.n()];
    for st in strata.iter().filter(|s| s.retained()) {
        let treated_share = st.treated.len() as f64 / m1 as f64;
        let control_share = st.controls.len() as f64 / m0 as f64;
        let w = treated_share / control_share;
        for &i in &st.controls {
            weights[i] = w;
        }
        for &j in &st.treated {
            weights[j] = 1.0;
        }
    }
    Ok(MatchResult {
        strata,
        stratum_of,
        m0,
        m1,
        n0: data.n0(),
        n1: data.n1(),
        weights,
        discarded,
        nominal_cells: spec.nominal_cells(),
    })
}

/// `Δ = (1/m0) Σ w_i⁰ Z_i⁰ - (1/m1) Σ w_j¹ Z_j¹` over the matched units.
pub fn cem_delta(data: &Dataset, matched: &MatchResult) -> Result<Vec<f64>> {
    if matched.weights.len() != data.n() {
        return invalid("match result does not belong to this dataset");
    }
    matched.matched_sets().weighted_mean_difference(data)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CemBoundParams {
    pub c_star: f64,
    pub kappa_ok: bool,
}

/// Largest ratio `n_ℓ / m_ℓˢ` over retained strata and both groups.
fn max_sample_to_stratum_ratio(matched: &MatchResult) -> f64 {
    matched
        .retained_strata()
        .flat_map(|s| {
            [
                matched.n0 as f64 / s.controls.len() as f64,
                matched.n1 as f64 / s.treated.len() as f64,
            ]
        })
        .fold(0.0, f64::max)
}

/// `C* = 2(R - 1)` and whether `n_ℓ / m_ℓˢ <= √κ` holds for every retained stratum.
pub fn cem_bound_params(matched: &MatchResult, r: usize, kappa: f64) -> Result<CemBoundParams> {
    if r < 2 {
        return invalid(format!("cell count R must be >= 2, got {r}"));
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return invalid(format!("kappa must be positive, got {kappa}"));
    }
    let v = u32::try_from(r).map_err(|_| Error::InvalidInput("cell count too large".into()))?;
    Ok(CemBoundParams {
        c_star: vc_to_covering_exponent(v)?,
        kappa_ok: max_sample_to_stratum_ratio(matched) <= kappa.sqrt(),
    })
}

/// Smallest power of 4 for which the κ condition holds on this match.
pub fn default_kappa(matched: &MatchResult) -> f64 {
    let ratio = max_sample_to_stratum_ratio(matched);
    let mut kappa = 1.0_f64;
    while kappa.sqrt() < ratio {
        kappa *= 4.0;
    }
    kappa
}

/// The partition-class IPM between the full unmatched samples with α fixed
/// to this match's retained strata, for covariate `component`.
pub fn retained_partition_gamma(data: &Dataset, matched: &MatchResult, kappa: f64, component: usize) -> Result<f64> {
    let pair = data.pair()?;
    let (s0, s1) = matched.stratum_labels(data);
    let contributions = partition_contributions(&pair, &s0, &s1, component)?;
    let retained: Vec<f64> = contributions
        .into_iter()
        .zip(&matched.strata)
        .filter(|(_, s)| s.retained())
        .map(|(d, _)| d)
        .collect();
    gamma_partition_from_contributions(&retained, kappa)
}
