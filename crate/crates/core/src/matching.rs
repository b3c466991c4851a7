//! Method-independent view of a matching and the matched effect estimate.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{invalid, Result};
use crate::numeric::sum;

/// Matched control and treated units (indices into the dataset) with weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedSets {
    pub controls: Vec<usize>,
    pub control_weights: Vec<f64>,
    pub treated: Vec<usize>,
    pub treated_weights: Vec<f64>,
}

impl MatchedSets {
    /// All units of both groups with unit weights.
    pub fn full(data: &Dataset) -> Self {
        let controls = data.control_indices();
        let treated = data.treated_indices();
        MatchedSets {
            control_weights: vec![1.0; controls.len()],
            treated_weights: vec![1.0; treated.len()],
            controls,
            treated,
        }
    }

    pub fn unweighted(controls: Vec<usize>, treated: Vec<usize>) -> Self {
        MatchedSets {
            control_weights: vec![1.0; controls.len()],
            treated_weights: vec![1.0; treated.len()],
            controls,
            treated,
        }
    }

    pub fn m0(&self) -> usize {
        self.controls.len()
    }

    pub fn m1(&self) -> usize {
        self.treated.len()
    }

    pub(crate) fn check_against(&self, data: &Dataset) -> Result<()> {
        if self.controls.is_empty() || self.treated.is_empty() {
            return invalid("matched sets must be non-empty on both sides");
        }
        if self.controls.len() != self.control_weights.len() || self.treated.len() != self.treated_weights.len() {
            return invalid("matched sets and weights differ in length");
        }
        for &i in &self.controls {
            if i >= data.n() || data.unit(i).treated {
                return invalid(format!("unit {i} is not a control unit of the dataset"));
            }
        }
        for &j in &self.treated {
            if j >= data.n() || !data.unit(j).treated {
                return invalid(format!("unit {j} is not a treated unit of the dataset"));
            }
        }
        Ok(())
    }

    /// `(1/m0) Σ w_i Z_i⁰ - (1/m1) Σ w_j Z_j¹`, control minus treated.
    pub fn weighted_mean_difference(&self, data: &Dataset) -> Result<Vec<f64>> {
        self.check_against(data)?;
        let (m0, m1) = (self.m0() as f64, self.m1() as f64);
        Ok((0..data.p())
            .map(|l| {
                let c = sum(self.controls.iter().zip(&self.control_weights).map(|(&i, w)| w * data.unit(i).z[l]));
                let t = sum(self.treated.iter().zip(&self.treated_weights).map(|(&j, w)| w * data.unit(j).z[l]));
                c / m0 - t / m1
            })
            .collect())
    }
}

/// Anything that produces matched sets.
pub trait Matching {
    fn matched_sets(&self) -> MatchedSets;
}

impl Matching for MatchedSets {
    fn matched_sets(&self) -> MatchedSets {
        self.clone()
    }
}

/// Weighted mean outcome of the matched treated minus that of the matched controls.
pub fn effect_estimate(data: &Dataset, matching: &impl Matching) -> Result<f64> {
    let sets = matching.matched_sets();
    sets.check_against(data)?;
    let weighted_mean = |ix: &[usize], w: &[f64]| {
        let total = sum(w.iter().copied());
        sum(ix.iter().zip(w).map(|(&i, wi)| wi * data.unit(i).y)) / total
    };
    let c = weighted_mean(&sets.controls, &sets.control_weights);
    let t = weighted_mean(&sets.treated, &sets.treated_weights);
    Ok(t - c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Unit;

    fn data() -> Dataset {
        Dataset::new(vec![
            Unit::new(2.0, true, vec![0.1]),
            Unit::new(4.0, true, vec![0.2]),
            Unit::new(1.0, false, vec![0.3]),
            Unit::new(1.0, false, vec![0.4]),
        ])
        .unwrap()
    }

    #[test]
    fn effect_of_unit_weighted_sets() {
        let d = data();
        assert_eq!(effect_estimate(&d, &MatchedSets::full(&d)).unwrap(), 2.0);
    }

    #[test]
    fn equal_outcomes_give_zero_effect() {
        let d = Dataset::new(vec![
            Unit::new(3.0, true, vec![0.0]),
            Unit::new(3.0, false, vec![1.0]),
            Unit::new(3.0, false, vec![0.5]),
        ])
        .unwrap();
        assert_eq!(effect_estimate(&d, &MatchedSets::full(&d)).unwrap(), 0.0);
    }

    #[test]
    fn empty_side_rejected() {
        let d = data();
        let sets = MatchedSets::unweighted(vec![], vec![0, 1]);
        assert!(effect_estimate(&d, &sets).is_err());
        let wrong_group = MatchedSets::unweighted(vec![0], vec![1]);
        assert!(effect_estimate(&d, &wrong_group).is_err());
    }
}
