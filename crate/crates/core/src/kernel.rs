//! Kernels, the kernelized balance metric over matched samples, and
//! Sobolev covering exponents for its tail bound.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{bound_b, BoundParams};
use crate::data::Dataset;
use crate::error::{invalid, Error, Result};
use crate::matching::MatchedSets;
use crate::numeric::{sum, CompensatedSum};

/// Radicands above this (negative) value are treated as rounding noise.
pub const RADICAND_TOLERANCE: f64 = 1e-12;

/// Rows per rayon task when summing Gram blocks.
const ROW_CHUNK: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    Gaussian { sigma: f64 },
    #[serde(alias = "poly")]
    Polynomial { degree: u32, offset: f64 },
    Laplacian { sigma: f64 },
}

impl KernelSpec {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        KernelSpec::Gaussian { sigma }.validated()
    }

    pub fn polynomial(degree: u32, offset: f64) -> Result<Self> {
        KernelSpec::Polynomial { degree, offset }.validated()
    }

    pub fn laplacian(sigma: f64) -> Result<Self> {
        KernelSpec::Laplacian { sigma }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        match self {
            KernelSpec::Gaussian { sigma } | KernelSpec::Laplacian { sigma } => {
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return invalid(format!("kernel bandwidth must be positive, got {sigma}"));
                }
            }
            KernelSpec::Polynomial { degree, offset } => {
                if degree < 1 {
                    return invalid("polynomial kernel degree must be >= 1");
                }
                if !(offset >= 0.0 && offset.is_finite()) {
                    return invalid(format!("polynomial kernel offset must be >= 0, got {offset}"));
                }
            }
        }
        Ok(self)
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Gaussian { .. } => "gaussian",
            KernelSpec::Polynomial { .. } => "poly",
            KernelSpec::Laplacian { .. } => "laplacian",
        }
    }

    /// Unchecked evaluation; callers guarantee equal dimensions.
    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            KernelSpec::Gaussian { sigma } => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 / (2.0 * sigma * sigma)).exp()
            }
            KernelSpec::Polynomial { degree, offset } => {
                let ip: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
                (offset + ip).powi(degree as i32)
            }
            KernelSpec::Laplacian { sigma } => {
                let d1: f64 = x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum();
                (-d1 / sigma).exp()
            }
        }
    }
}

pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return invalid(format!("kernel arguments differ in dimension ({} vs {})", x.len(), y.len()));
    }
    Ok(spec.eval_unchecked(x, y))
}

/// Full Gram matrix `K[i][j] = k(a_i, b_j)`.
pub fn gram_matrix(spec: &KernelSpec, a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    a.par_iter()
        .map(|x| b.iter().map(|y| spec.eval_unchecked(x, y)).collect())
        .collect()
}

/// `Σ_i Σ_j wa_i wb_j k(a_i, b_j)`.
///
/// Rows are summed independently (possibly in parallel), then reduced in
/// row order, so the result does not depend on the thread count.
pub(crate) fn weighted_block_sum(
    spec: &KernelSpec,
    a: &[&[f64]],
    wa: &[f64],
    b: &[&[f64]],
    wb: &[f64],
) -> f64 {
    let row = |i: usize| -> f64 {
        let mut acc = CompensatedSum::new();
        for (j, y) in b.iter().enumerate() {
            acc.add(wb[j] * spec.eval_unchecked(a[i], y));
        }
        wa[i] * acc.value()
    };
    let rows: Vec<f64> = if a.len() >= 2 * ROW_CHUNK {
        (0..a.len()).into_par_iter().with_min_len(ROW_CHUNK).map(row).collect()
    } else {
        (0..a.len()).map(row).collect()
    };
    sum(rows)
}

/// Weighted V-statistic MMD between `(1/m0) Σ w_i δ_{x_i}` and `(1/m1) Σ v_j δ_{y_j}`,
/// where `m0`, `m1` are the point counts.
pub fn weighted_mmd(
    spec: &KernelSpec,
    x0: &[&[f64]],
    w0: &[f64],
    x1: &[&[f64]],
    w1: &[f64],
) -> Result<f64> {
    if x0.is_empty() || x1.is_empty() {
        return invalid("both matched sets must be non-empty");
    }
    if w0.len() != x0.len() || w1.len() != x1.len() {
        return invalid("weight vectors must match point counts");
    }
    let dim = x0[0].len();
    if x0.iter().chain(x1).any(|z| z.len() != dim) {
        return invalid("all points must share one dimension");
    }
    let m0 = x0.len() as f64;
    let m1 = x1.len() as f64;
    let k00 = weighted_block_sum(spec, x0, w0, x0, w0) / (m0 * m0);
    let k11 = weighted_block_sum(spec, x1, w1, x1, w1) / (m1 * m1);
    let k01 = weighted_block_sum(spec, x0, w0, x1, w1) / (m0 * m1);
    let radicand = sum([k00, k11, -2.0 * k01]);
    sqrt_radicand(radicand)
}

pub(crate) fn sqrt_radicand(radicand: f64) -> Result<f64> {
    if radicand < -RADICAND_TOLERANCE {
        return Err(Error::Numerical(format!(
            "squared MMD is {radicand:e} < 0; kernel is not positive semidefinite on these points"
        )));
    }
    Ok(radicand.max(0.0).sqrt())
}

/// Δ_H with the canonical feature map: the (weighted) MMD between the matched
/// control and treated samples.
pub fn kernel_delta(data: &Dataset, matched: &MatchedSets, spec: &KernelSpec) -> Result<f64> {
    matched.check_against(data)?;
    let pts = |ix: &[usize]| -> Vec<&[f64]> { ix.iter().map(|&i| data.unit(i).z.as_slice()).collect() };
    let x0 = pts(&matched.controls);
    let x1 = pts(&matched.treated);
    weighted_mmd(spec, &x0, &matched.control_weights, &x1, &matched.treated_weights)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevSpec {
    /// Smoothness order.
    pub m: u32,
    /// Integrability exponent.
    pub q: f64,
    /// Ambient dimension.
    pub dim: u32,
}

impl SobolevSpec {
    pub fn new(m: u32, q: f64, dim: u32) -> Result<Self> {
        if m < 1 || dim < 1 || !(q >= 1.0 && q.is_finite()) {
            return invalid(format!("Sobolev spec needs m >= 1, q >= 1, dim >= 1 (got m={m}, q={q}, dim={dim})"));
        }
        Ok(SobolevSpec { m, q, dim })
    }
}

/// Covering exponent of the Sobolev ball: `q` when `m > q/dim`, `dim/m` when `m < q/dim`.
pub fn sobolev_covering_exponent(spec: &SobolevSpec) -> Result<f64> {
    let spec = SobolevSpec::new(spec.m, spec.q, spec.dim)?;
    let lhs = f64::from(spec.m) * f64::from(spec.dim);
    if lhs > spec.q {
        Ok(spec.q)
    } else if lhs < spec.q {
        Ok(f64::from(spec.dim) / f64::from(spec.m))
    } else {
        Err(Error::Unsupported(format!(
            "m - q/dim = 0 (m={}, q={}, dim={}) is not covered by the Sobolev covering bound",
            spec.m, spec.q, spec.dim
        )))
    }
}

pub fn kernel_bound(delta: f64, d: f64, spec: &SobolevSpec, n0: usize, n1: usize) -> Result<f64> {
    let c = sobolev_covering_exponent(spec)?;
    Ok(bound_b(&BoundParams::new(delta, d, c, n0, n1)?))
}

/// Bound for a kernel balance statistic. Gaussian kernels have no Sobolev
/// covering exponent and yield `Unsupported`.
pub fn kernel_bound_for(
    kernel: &KernelSpec,
    delta: f64,
    d: f64,
    spec: &SobolevSpec,
    n0: usize,
    n1: usize,
) -> Result<f64> {
    if let KernelSpec::Gaussian { .. } = kernel {
        return Err(Error::Unsupported(
            "the Sobolev covering bound does not apply to the Gaussian kernel".into(),
        ));
    }
    kernel_bound(delta, d, spec, n0, n1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::bound;

    #[test]
    fn kernel_values() {
        let g = KernelSpec::gaussian(1.0).unwrap();
        assert_eq!(kernel_eval(&g, &[0.3, 0.2], &[0.3, 0.2]).unwrap(), 1.0);
        let v = kernel_eval(&g, &[0.0], &[1.0]).unwrap();
        assert!((v - 0.606_530_659_712_633_4).abs() < 1e-15);
        let p = KernelSpec::polynomial(2, 1.0).unwrap();
        assert_eq!(kernel_eval(&p, &[1.0, 0.0], &[1.0, 1.0]).unwrap(), 4.0);
        let l = KernelSpec::laplacian(2.0).unwrap();
        assert!((kernel_eval(&l, &[0.0, 0.0], &[1.0, -1.0]).unwrap() - (-1.0_f64).exp()).abs() < 1e-15);
        assert!(kernel_eval(&g, &[0.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn kernel_params_validated() {
        assert!(KernelSpec::gaussian(0.0).is_err());
        assert!(KernelSpec::laplacian(-1.0).is_err());
        assert!(KernelSpec::polynomial(0, 1.0).is_err());
        assert!(KernelSpec::polynomial(2, -0.5).is_err());
    }

    #[test]
    fn sobolev_exponents() {
        let c = |m, q, dim| sobolev_covering_exponent(&SobolevSpec { m, q, dim });
        assert_eq!(c(3, 2.0, 1).unwrap(), 2.0);
        assert_eq!(c(1, 4.0, 2).unwrap(), 2.0);
        assert_eq!(c(1, 2.0, 4).unwrap(), 2.0);
        assert!(matches!(c(1, 2.0, 2), Err(Error::Unsupported(_))));
        assert!(c(0, 2.0, 2).is_err());
    }

    #[test]
    fn kernel_bound_cases() {
        let s = SobolevSpec::new(3, 2.0, 1).unwrap();
        assert_eq!(kernel_bound(0.0, 1.0, &s, 100, 100).unwrap(), 0.0);
        let b = kernel_bound(0.5, 1.0, &s, 100, 100).unwrap();
        assert_eq!(b, bound(0.5, 1.0, 2.0, 100, 100).unwrap());
        // m < q/dim regime: C = dim/m.
        let m1 = SobolevSpec::new(1, 10.0, 4).unwrap();
        let m2 = SobolevSpec::new(2, 10.0, 4).unwrap();
        assert_eq!(sobolev_covering_exponent(&m1).unwrap(), 4.0);
        assert_eq!(sobolev_covering_exponent(&m2).unwrap(), 2.0);
        assert_eq!(kernel_bound(0.5, 1.0, &m1, 100, 100).unwrap(), bound(0.5, 1.0, 4.0, 100, 100).unwrap());
        assert_eq!(kernel_bound(0.5, 1.0, &m2, 100, 100).unwrap(), bound(0.5, 1.0, 2.0, 100, 100).unwrap());
        let g = KernelSpec::gaussian(1.0).unwrap();
        assert!(matches!(kernel_bound_for(&g, 0.5, 1.0, &s, 100, 100), Err(Error::Unsupported(_))));
    }

    #[test]
    fn mmd_of_single_points() {
        let g = KernelSpec::gaussian(1.0).unwrap();
        let a = [0.0];
        let b = [1.0];
        let v = weighted_mmd(&g, &[&a], &[1.0], &[&b], &[1.0]).unwrap();
        let expected = (2.0 - 2.0 * (-0.5_f64).exp()).sqrt();
        assert!((v - expected).abs() < 1e-15);
        assert!((v - 0.887_096).abs() < 1e-6);
    }

    #[test]
    fn block_sum_is_thread_count_independent() {
        let pts: Vec<Vec<f64>> = (0..200).map(|i| vec![(i as f64 * 0.37).sin(), (i as f64).cos()]).collect();
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let w = vec![1.0; refs.len()];
        let g = KernelSpec::gaussian(0.7).unwrap();
        let par = weighted_block_sum(&g, &refs, &w, &refs, &w);
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| weighted_block_sum(&g, &refs, &w, &refs, &w));
        assert_eq!(par.to_bits(), single.to_bits());
    }
}
