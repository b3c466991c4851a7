//! Compensated summation and small vector helpers shared by every module.

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

pub fn mean(xs: &[f64]) -> f64 {
    sum(xs.iter().copied()) / xs.len() as f64
}

/// Coordinate-wise mean of equal-length vectors.
pub fn mean_vector<V: AsRef<[f64]>>(points: &[V], dim: usize) -> Vec<f64> {
    let n = points.len() as f64;
    (0..dim)
        .map(|j| sum(points.iter().map(|z| z.as_ref()[j])) / n)
        .collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    sum(a.iter().zip(b).map(|(x, y)| x * y))
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// ℓp norm; `p = f64::INFINITY` gives the max norm.
pub fn lp_norm(a: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    } else {
        sum(a.iter().map(|x| x.abs().powf(p))).powf(1.0 / p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(sum(xs.iter().copied()), 2.0);
        let naive: f64 = xs.iter().sum();
        assert_ne!(naive, 2.0);
    }

    #[test]
    fn norms() {
        assert_eq!(lp_norm(&[3.0, -4.0], 2.0), 5.0);
        assert_eq!(lp_norm(&[3.0, -4.0], f64::INFINITY), 4.0);
        assert_eq!(lp_norm(&[3.0, -4.0], 1.0), 7.0);
    }
}
