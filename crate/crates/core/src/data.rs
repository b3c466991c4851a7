//! Observational datasets of (outcome, treatment, covariates) triples.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unit {
    pub y: f64,
    pub treated: bool,
    pub z: Vec<f64>,
}

impl Unit {
    pub fn new(y: f64, treated: bool, z: Vec<f64>) -> Self {
        Unit { y, treated, z }
    }
}

/// A sample of units sharing one covariate dimension `p >= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    units: Vec<Unit>,
    p: usize,
    normalized: bool,
}

impl Dataset {
    pub fn new(units: Vec<Unit>) -> Result<Self> {
        let p = match units.first() {
            Some(u) => u.z.len(),
            None => return invalid("dataset has no units"),
        };
        if p == 0 {
            return invalid("covariate dimension must be at least 1");
        }
        for (i, u) in units.iter().enumerate() {
            if u.z.len() != p {
                return invalid(format!("unit {i} has {} covariates, expected {p}", u.z.len()));
            }
            if !u.y.is_finite() || u.z.iter().any(|v| !v.is_finite()) {
                return invalid(format!("unit {i} has a non-finite value"));
            }
        }
        let normalized = units.iter().all(|u| u.z.iter().all(|v| (0.0..=1.0).contains(v)));
        Ok(Dataset { units, p, normalized })
    }

    /// Builds a dataset from separate control and treated covariate samples with zero outcomes.
    pub fn from_groups(group0: &[Vec<f64>], group1: &[Vec<f64>]) -> Result<Self> {
        let units = group0
            .iter()
            .map(|z| Unit::new(0.0, false, z.clone()))
            .chain(group1.iter().map(|z| Unit::new(0.0, true, z.clone())))
            .collect();
        Dataset::new(units)
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn unit(&self, i: usize) -> &Unit {
        &self.units[i]
    }

    pub fn n(&self) -> usize {
        self.units.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n0(&self) -> usize {
        self.units.iter().filter(|u| !u.treated).count()
    }

    pub fn n1(&self) -> usize {
        self.units.iter().filter(|u| u.treated).count()
    }

    /// True when every covariate lies in `[0, 1]`.
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn control_indices(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| !self.units[i].treated).collect()
    }

    pub fn treated_indices(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.units[i].treated).collect()
    }

    pub fn require_both_groups(&self) -> Result<()> {
        if self.n0() == 0 || self.n1() == 0 {
            return invalid(format!(
                "both treatment groups must be non-empty (n0 = {}, n1 = {})",
                self.n0(),
                self.n1()
            ));
        }
        Ok(())
    }

    /// Covariates of the full control and treated samples.
    pub fn pair(&self) -> Result<EmpiricalPair> {
        self.pair_of(&self.control_indices(), &self.treated_indices())
    }

    pub fn pair_of(&self, controls: &[usize], treated: &[usize]) -> Result<EmpiricalPair> {
        let pick = |ix: &[usize]| ix.iter().map(|&i| self.units[i].z.clone()).collect();
        EmpiricalPair::new(pick(controls), pick(treated))
    }

    /// Min-max scales every coordinate to `[0, 1]` using the sample range.
    pub fn normalize(&self) -> (Dataset, MinMaxScaler) {
        let scaler = MinMaxScaler::fit(self.units.iter().map(|u| u.z.as_slice()), self.p);
        let (ds, _) = self.normalize_with(&scaler);
        (ds, scaler)
    }

    /// Scales with fixed bounds, clipping out-of-range values; returns the clip count.
    pub fn normalize_with(&self, scaler: &MinMaxScaler) -> (Dataset, usize) {
        let mut clipped = 0;
        let units = self
            .units
            .iter()
            .map(|u| {
                let (z, c) = scaler.transform(&u.z);
                clipped += c;
                Unit::new(u.y, u.treated, z)
            })
            .collect();
        (Dataset { units, p: self.p, normalized: true }, clipped)
    }
}

/// Per-coordinate affine map onto `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl MinMaxScaler {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return invalid("scaler bounds must be non-empty and of equal length");
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite()) {
            return invalid("scaler bounds must be finite with lo <= hi");
        }
        Ok(MinMaxScaler { lo, hi })
    }

    pub fn fit<'a>(points: impl Iterator<Item = &'a [f64]>, p: usize) -> Self {
        let mut lo = vec![f64::INFINITY; p];
        let mut hi = vec![f64::NEG_INFINITY; p];
        for z in points {
            for j in 0..p {
                lo[j] = lo[j].min(z[j]);
                hi[j] = hi[j].max(z[j]);
            }
        }
        MinMaxScaler { lo, hi }
    }

    /// Constant coordinates (hi == lo) map to 0.
    pub fn transform(&self, z: &[f64]) -> (Vec<f64>, usize) {
        let mut clipped = 0;
        let out = z
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                let width = self.hi[j] - self.lo[j];
                if width <= 0.0 {
                    return 0.0;
                }
                let s = (v - self.lo[j]) / width;
                if !(0.0..=1.0).contains(&s) {
                    clipped += 1;
                }
                s.clamp(0.0, 1.0)
            })
            .collect();
        (out, clipped)
    }
}

/// Two empirical samples with implied uniform weights `1/n0` and `1/n1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalPair {
    pub group0: Vec<Vec<f64>>,
    pub group1: Vec<Vec<f64>>,
    dim: usize,
}

impl EmpiricalPair {
    pub fn new(group0: Vec<Vec<f64>>, group1: Vec<Vec<f64>>) -> Result<Self> {
        if group0.is_empty() || group1.is_empty() {
            return invalid("both groups of an empirical pair must be non-empty");
        }
        let dim = group0[0].len();
        if dim == 0 {
            return invalid("points must have dimension >= 1");
        }
        if group0.iter().chain(&group1).any(|z| z.len() != dim) {
            return invalid("all points of an empirical pair must share one dimension");
        }
        Ok(EmpiricalPair { group0, group1, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n0(&self) -> usize {
        self.group0.len()
    }

    pub fn n1(&self) -> usize {
        self.group1.len()
    }

    pub fn swapped(&self) -> EmpiricalPair {
        EmpiricalPair { group0: self.group1.clone(), group1: self.group0.clone(), dim: self.dim }
    }
}
