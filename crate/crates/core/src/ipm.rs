//! Integral probability metrics `γ_F(P, Q) = sup_{f ∈ F} |∫f dP - ∫f dQ|`
//! between two empirical distributions, for the three function classes that
//! admit closed forms: norm-bounded linear functionals, scaled partition
//! indicators and the RKHS unit ball.

use serde::{Deserialize, Serialize};

use crate::bounds::vc_to_covering_exponent;
use crate::data::EmpiricalPair;
use crate::error::{invalid, Result};
use crate::kernel::{sobolev_covering_exponent, weighted_block_sum, sqrt_radicand, KernelSpec, SobolevSpec};
use crate::numeric::{mean_vector, norm2, sub, sum};

/// `sup_{‖w‖₂ ≤ W} |mean₀ wᵀz - mean₁ wᵀz| = W · ‖mean₀ - mean₁‖₂`.
pub fn gamma_hyperplane(pair: &EmpiricalPair, w_bound: f64) -> Result<f64> {
    if !(w_bound > 0.0 && w_bound.is_finite()) {
        return invalid(format!("norm bound W must be positive, got {w_bound}"));
    }
    let p = pair.dim();
    let diff = sub(&mean_vector(&pair.group0, p), &mean_vector(&pair.group1, p));
    Ok(w_bound * norm2(&diff))
}

/// Per-stratum contributions `d_s = (1/n0) Σ_{i∈s} z⁰_{iℓ} - (1/n1) Σ_{j∈s} z¹_{jℓ}`.
///
/// Strata are numbered `0..R` with `R` one past the largest label seen.
pub fn partition_contributions(
    pair: &EmpiricalPair,
    strata0: &[Option<usize>],
    strata1: &[Option<usize>],
    component: usize,
) -> Result<Vec<f64>> {
    if strata0.len() != pair.n0() || strata1.len() != pair.n1() {
        return invalid("every point needs a stratum assignment");
    }
    if component >= pair.dim() {
        return invalid(format!("component {component} out of range for dimension {}", pair.dim()));
    }
    let labels = |s: &[Option<usize>]| -> Result<Vec<usize>> {
        s.iter()
            .enumerate()
            .map(|(i, l)| l.ok_or_else(|| crate::Error::InvalidInput(format!("point {i} has no stratum"))))
            .collect()
    };
    let (s0, s1) = (labels(strata0)?, labels(strata1)?);
    let r = s0.iter().chain(&s1).max().map_or(0, |m| m + 1);
    let mut pos: Vec<Vec<f64>> = vec![Vec::new(); r];
    let mut neg: Vec<Vec<f64>> = vec![Vec::new(); r];
    let (n0, n1) = (pair.n0() as f64, pair.n1() as f64);
    for (z, &s) in pair.group0.iter().zip(&s0) {
        pos[s].push(z[component] / n0);
    }
    for (z, &s) in pair.group1.iter().zip(&s1) {
        neg[s].push(z[component] / n1);
    }
    Ok((0..r)
        .map(|s| sum(pos[s].iter().copied()) - sum(neg[s].iter().copied()))
        .collect())
}

/// `sup_{α ∈ {0,1}^R, k_s ∈ [0, κ]} |Σ_s α_s k_s d_s| = κ · max(Σ d_s⁺, Σ d_s⁻)`.
pub fn gamma_partition_from_contributions(contributions: &[f64], kappa: f64) -> Result<f64> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return invalid(format!("kappa must be positive, got {kappa}"));
    }
    let positive = sum(contributions.iter().filter(|d| **d > 0.0).copied());
    let negative = sum(contributions.iter().filter(|d| **d < 0.0).map(|d| -d));
    Ok(kappa * positive.max(negative))
}

/// IPM over the class of scaled partition indicators on a fixed partition,
/// for covariate `component`.
pub fn gamma_partition(
    pair: &EmpiricalPair,
    strata0: &[Option<usize>],
    strata1: &[Option<usize>],
    kappa: f64,
    component: usize,
) -> Result<f64> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return invalid(format!("kappa must be positive, got {kappa}"));
    }
    let d = partition_contributions(pair, strata0, strata1, component)?;
    gamma_partition_from_contributions(&d, kappa)
}

/// MMD between the two empirical distributions (biased V-statistic).
pub fn gamma_mmd(pair: &EmpiricalPair, kernel: &KernelSpec) -> Result<f64> {
    let x0: Vec<&[f64]> = pair.group0.iter().map(|z| z.as_slice()).collect();
    let x1: Vec<&[f64]> = pair.group1.iter().map(|z| z.as_slice()).collect();
    let (n0, n1) = (x0.len() as f64, x1.len() as f64);
    let ones0 = vec![1.0; x0.len()];
    let ones1 = vec![1.0; x1.len()];
    let k00 = weighted_block_sum(kernel, &x0, &ones0, &x0, &ones0) / (n0 * n0);
    let k11 = weighted_block_sum(kernel, &x1, &ones1, &x1, &ones1) / (n1 * n1);
    let k01 = weighted_block_sum(kernel, &x0, &ones0, &x1, &ones1) / (n0 * n1);
    sqrt_radicand(sum([k00, k11, -2.0 * k01]))
}

/// `√n · ((1/n) Σ f(z_i) - E f)`.
pub fn empirical_process_eval<V: AsRef<[f64]>>(
    sample: &[V],
    population_mean: f64,
    f: impl Fn(&[f64]) -> f64,
) -> Result<f64> {
    if sample.is_empty() {
        return invalid("empirical process needs a non-empty sample");
    }
    let n = sample.len() as f64;
    let mean = sum(sample.iter().map(|z| f(z.as_ref()))) / n;
    Ok(n.sqrt() * (mean - population_mean))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionClassKind {
    BoundedHyperplane { w: f64 },
    Partition { r: u32, kappa: f64 },
    RkhsBall { kernel: KernelSpec, radius: f64 },
}

/// A function class together with the constants its tail bound needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionClassSpec {
    pub kind: FunctionClassKind,
    pub vc_dim: Option<u32>,
    pub covering_exponent: f64,
    pub constant_d: f64,
}

impl FunctionClassSpec {
    pub fn new(kind: FunctionClassKind, vc_dim: Option<u32>, covering_exponent: f64, constant_d: f64) -> Result<Self> {
        if !(covering_exponent > 0.0) || !(constant_d > 0.0) {
            return invalid("covering exponent and D must be positive");
        }
        if let Some(v) = vc_dim {
            if vc_to_covering_exponent(v)? != covering_exponent {
                return invalid(format!("covering exponent {covering_exponent} != 2v - 2 for v = {v}"));
            }
        }
        Ok(FunctionClassSpec { kind, vc_dim, covering_exponent, constant_d })
    }

    /// Affine functionals in `p` dimensions: VC dimension `p + 1`.
    pub fn hyperplane(p: u32, w: f64, constant_d: f64) -> Result<Self> {
        let v = p + 1;
        Self::new(FunctionClassKind::BoundedHyperplane { w }, Some(v), vc_to_covering_exponent(v)?, constant_d)
    }

    /// Partitions with at most `r` cells: VC dimension `r`.
    pub fn partition(r: u32, kappa: f64, constant_d: f64) -> Result<Self> {
        Self::new(FunctionClassKind::Partition { r, kappa }, Some(r), vc_to_covering_exponent(r)?, constant_d)
    }

    pub fn rkhs_ball(kernel: KernelSpec, radius: f64, sobolev: &SobolevSpec, constant_d: f64) -> Result<Self> {
        let c = sobolev_covering_exponent(sobolev)?;
        Self::new(FunctionClassKind::RkhsBall { kernel, radius }, None, c, constant_d)
    }
}
