//! Finite-sample tail bound on the IPM between two empirical distributions
//! under ideal balance, its union-bound combinations, and VC-dimension to
//! covering-exponent conversion.
//!
//! The bound is
//!
//! ```text
//! B(δ, D, C) = min(1, (Dδ / 2√C)^C · (n0^{C/2} e^{-n0 δ²/2} + n1^{C/2} e^{-n1 δ²/2}))
//! ```
//!
//! It is unimodal in δ with its mode at or below `√(C / min(n0, n1))`; past
//! that point every term decreases.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Upper end of the search interval used by [`invert_bound`].
pub const INVERT_MAX_DELTA: f64 = 10.0;
/// Bisection stops once the bracket is narrower than this.
pub const INVERT_TOLERANCE: f64 = 5e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub delta: f64,
    pub d: f64,
    pub c: f64,
    pub n0: usize,
    pub n1: usize,
}

impl BoundParams {
    pub fn new(delta: f64, d: f64, c: f64, n0: usize, n1: usize) -> Result<Self> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return invalid(format!("delta must be finite and >= 0, got {delta}"));
        }
        if !(d > 0.0 && d.is_finite()) {
            return invalid(format!("D must be finite and > 0, got {d}"));
        }
        if !(c > 0.0 && c.is_finite()) {
            return invalid(format!("C must be finite and > 0, got {c}"));
        }
        if n0 == 0 || n1 == 0 {
            return invalid(format!("sample sizes must be >= 1 (n0 = {n0}, n1 = {n1})"));
        }
        Ok(BoundParams { delta, d, c, n0, n1 })
    }

    pub fn with_delta(self, delta: f64) -> Result<Self> {
        BoundParams::new(delta, self.d, self.c, self.n0, self.n1)
    }

    /// Point beyond which the bound is strictly decreasing in δ.
    pub fn decreasing_from(&self) -> f64 {
        (self.c / self.n0.min(self.n1) as f64).sqrt()
    }
}

/// Natural log of the unclamped bound; `-inf` at δ = 0.
pub fn ln_bound_unclamped(p: &BoundParams) -> f64 {
    if p.delta == 0.0 {
        return f64::NEG_INFINITY;
    }
    let prefactor = p.c * (p.d * p.delta / (2.0 * p.c.sqrt())).ln();
    let term = |n: usize| {
        let n = n as f64;
        0.5 * p.c * n.ln() - 0.5 * n * p.delta * p.delta
    };
    let (a, b) = (term(p.n0), term(p.n1));
    let hi = a.max(b);
    prefactor + hi + ((a - hi).exp() + (b - hi).exp()).ln()
}

/// The tail bound, evaluated in log space and clamped to `[0, 1]`.
pub fn bound_b(p: &BoundParams) -> f64 {
    ln_bound_unclamped(p).exp().min(1.0)
}

/// Direct (non-log) evaluation of the same closed form, clamped at 1.
/// Overflows or underflows for large `n δ²`; kept as a cross-check.
pub fn bound_b_direct(p: &BoundParams) -> f64 {
    let pre = (p.d * p.delta / (2.0 * p.c.sqrt())).powf(p.c);
    let term = |n: usize| {
        let n = n as f64;
        n.powf(p.c / 2.0) * (-n * p.delta * p.delta / 2.0).exp()
    };
    (pre * (term(p.n0) + term(p.n1))).min(1.0)
}

/// Convenience wrapper validating its arguments.
pub fn bound(delta: f64, d: f64, c: f64, n0: usize, n1: usize) -> Result<f64> {
    Ok(bound_b(&BoundParams::new(delta, d, c, n0, n1)?))
}

/// Covering exponent `2v - 2` of a class with VC dimension `v`.
pub fn vc_to_covering_exponent(v: u32) -> Result<f64> {
    if v < 2 {
        return invalid(format!("VC dimension must be >= 2 for a positive covering exponent, got {v}"));
    }
    Ok(2.0 * f64::from(v) - 2.0)
}

/// Union bound for a sum of `d` IPMs: `min(1, Σ_i B(δ/d, D_i, C_i))`.
pub fn bound_sum(delta: f64, specs: &[(f64, f64)], n0: usize, n1: usize) -> Result<f64> {
    if specs.is_empty() {
        return invalid("bound_sum needs at least one (D, C) pair");
    }
    let share = delta / specs.len() as f64;
    let mut total = 0.0;
    for &(d, c) in specs {
        total += bound(share, d, c, n0, n1)?;
    }
    Ok(total.min(1.0))
}

/// Bound on `Pr(‖Δ‖_p > δ)` for a `d`-vector whose components share one class.
/// `p_norm = f64::INFINITY` selects the max norm.
pub fn bound_lp(delta: f64, p_norm: f64, d: usize, d_const: f64, c: f64, n0: usize, n1: usize) -> Result<f64> {
    if !(p_norm >= 1.0) {
        return invalid(format!("p must be >= 1 or infinite, got {p_norm}"));
    }
    if d == 0 {
        return invalid("dimension d must be >= 1");
    }
    let arg = lp_component_delta(delta, p_norm, d);
    Ok((d as f64 * bound(arg, d_const, c, n0, n1)?).min(1.0))
}

/// The per-component threshold `δ / d^{1/p}` (or `δ` for the max norm).
pub fn lp_component_delta(delta: f64, p_norm: f64, d: usize) -> f64 {
    if p_norm.is_infinite() {
        delta
    } else {
        delta / (d as f64).powf(1.0 / p_norm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Inversion {
    pub delta: f64,
    /// The bound at the start of the decreasing branch already met the target.
    pub at_mode: bool,
}

/// Smallest δ on the decreasing branch with `B(δ) <= target`.
pub fn invert_bound(target: f64, d: f64, c: f64, n0: usize, n1: usize) -> Result<Inversion> {
    if !(target > 0.0 && target <= 1.0) {
        return invalid(format!("target must lie in (0, 1], got {target}"));
    }
    let base = BoundParams::new(0.0, d, c, n0, n1)?;
    let mode = base.decreasing_from();
    let at = |delta: f64| bound_b(&BoundParams { delta, ..base });
    if at(mode) <= target {
        return Ok(Inversion { delta: mode, at_mode: true });
    }
    if mode >= INVERT_MAX_DELTA || at(INVERT_MAX_DELTA) > target {
        return Err(Error::Unreachable { target, max_delta: INVERT_MAX_DELTA });
    }
    let (mut lo, mut hi) = (mode, INVERT_MAX_DELTA);
    while hi - lo > INVERT_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if at(mid) <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Inversion { delta: hi, at_mode: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn b(delta: f64, d: f64, c: f64, n0: usize, n1: usize) -> f64 {
        bound(delta, d, c, n0, n1).unwrap()
    }

    #[test]
    fn zero_delta_gives_zero() {
        for c in [0.5, 2.0, 10.0] {
            assert_eq!(b(0.0, 1.0, c, 100, 100), 0.0);
        }
    }

    #[test]
    fn reference_value() {
        // (0.5 / (2√2))² · 2 · 100 · e^{-12.5}
        let expected = 0.03125 * 200.0 * (-12.5_f64).exp();
        let got = b(0.5, 1.0, 2.0, 100, 100);
        assert!((got - expected).abs() / expected < 1e-13);
        assert!((got - 2.329e-5).abs() < 1e-8);
        assert!(b(0.5, 1.0, 2.0, 200, 200) < got);
    }

    #[test]
    fn clamps_at_one() {
        assert_eq!(b(0.2, 50.0, 2.0, 100, 100), 1.0);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(bound(-0.1, 1.0, 2.0, 10, 10).is_err());
        assert!(bound(0.1, 0.0, 2.0, 10, 10).is_err());
        assert!(bound(0.1, 1.0, 0.0, 10, 10).is_err());
        assert!(bound(0.1, 1.0, 2.0, 0, 10).is_err());
        assert!(bound(f64::NAN, 1.0, 2.0, 10, 10).is_err());
    }

    #[test]
    fn vc_exponents() {
        assert_eq!(vc_to_covering_exponent(2).unwrap(), 2.0);
        assert_eq!(vc_to_covering_exponent(3 + 1).unwrap(), 6.0);
        assert_eq!(vc_to_covering_exponent(5).unwrap(), 8.0);
        assert!(vc_to_covering_exponent(1).is_err());
        assert!(vc_to_covering_exponent(0).is_err());
    }

    #[test]
    fn sum_cases() {
        let single = bound_sum(0.7, &[(1.3, 3.0)], 50, 80).unwrap();
        assert_eq!(single, b(0.7, 1.3, 3.0, 50, 80));
        assert_eq!(bound_sum(0.0, &[(1.0, 2.0); 3], 100, 100).unwrap(), 0.0);
        let three = bound_sum(1.5, &[(1.0, 2.0); 3], 100, 100).unwrap();
        assert_eq!(three, 3.0 * b(0.5, 1.0, 2.0, 100, 100));
        assert!((three - 6.988e-5).abs() < 1e-8);
        assert!(bound_sum(1.0, &[], 10, 10).is_err());
    }

    #[test]
    fn lp_cases() {
        for p in [1.0, 2.0, 3.5] {
            assert_eq!(bound_lp(0.4, p, 1, 1.0, 2.0, 100, 100).unwrap(), b(0.4, 1.0, 2.0, 100, 100));
        }
        let inf = bound_lp(0.5, f64::INFINITY, 4, 1.0, 2.0, 100, 100).unwrap();
        assert_eq!(inf, 4.0 * b(0.5, 1.0, 2.0, 100, 100));
        assert!((inf - 9.317e-5).abs() < 1e-8);
        let l2 = bound_lp(1.0, 2.0, 4, 1.0, 2.0, 100, 100).unwrap();
        assert_eq!(l2, 4.0 * b(0.5, 1.0, 2.0, 100, 100));
        assert!(bound_lp(1.0, 0.5, 4, 1.0, 2.0, 100, 100).is_err());
        assert!(bound_lp(1.0, f64::NAN, 4, 1.0, 2.0, 100, 100).is_err());
    }

    #[test]
    fn inversion_self_consistent() {
        let inv = invert_bound(1e-4, 1.0, 2.0, 100, 100).unwrap();
        assert!(!inv.at_mode);
        assert!(b(inv.delta, 1.0, 2.0, 100, 100) <= 1e-4);
        assert!(b(inv.delta - 1e-6, 1.0, 2.0, 100, 100) > 1e-4);
        assert!(b(inv.delta - 2e-9, 1.0, 2.0, 100, 100) > 1e-4);
        let bigger = invert_bound(1e-4, 1.0, 2.0, 200, 200).unwrap();
        assert!(bigger.delta < inv.delta);
    }

    #[test]
    fn inversion_mode_and_unreachable() {
        let inv = invert_bound(1.0, 1.0, 2.0, 100, 100).unwrap();
        assert!(inv.at_mode);
        assert_eq!(inv.delta, (0.02_f64).sqrt());
        // Huge D keeps the bound at 1 well past δ = 10.
        assert!(matches!(invert_bound(0.5, 1e15, 2.0, 1, 1), Err(Error::Unreachable { .. })));
        assert!(invert_bound(0.0, 1.0, 2.0, 10, 10).is_err());
        assert!(invert_bound(1.5, 1.0, 2.0, 10, 10).is_err());
    }

    proptest! {
        #[test]
        fn log_and_direct_agree(delta in 0.01f64..1.5, d in 0.1f64..5.0, c in 0.5f64..12.0,
                                n0 in 1usize..400, n1 in 1usize..400) {
            let p = BoundParams::new(delta, d, c, n0, n1).unwrap();
            let direct = bound_b_direct(&p);
            let logspace = bound_b(&p);
            if direct.is_finite() && direct > 1e-300 {
                prop_assert!((direct - logspace).abs() <= 1e-12 * direct.max(logspace));
            }
        }

        #[test]
        fn decreasing_past_mode(d in 0.1f64..5.0, c in 0.5f64..12.0, n in 2usize..500, step in 0.001f64..0.2) {
            let p = BoundParams::new(0.0, d, c, n, n + 7).unwrap();
            let start = p.decreasing_from() * 1.0001;
            let lo = ln_bound_unclamped(&p.with_delta(start).unwrap());
            let hi = ln_bound_unclamped(&p.with_delta(start + step).unwrap());
            prop_assert!(hi < lo);
        }

        #[test]
        fn decreasing_in_n(delta in 0.05f64..1.0, c in 0.5f64..8.0, extra in 1usize..200) {
            // n > C/δ² in both configurations.
            let n = (c / (delta * delta)).ceil() as usize + 1;
            let small = ln_bound_unclamped(&BoundParams::new(delta, 1.0, c, n, n).unwrap());
            let large = ln_bound_unclamped(&BoundParams::new(delta, 1.0, c, n + extra, n).unwrap());
            prop_assert!(large < small);
        }

        #[test]
        fn identical_specs_sum(delta in 0.0f64..3.0, k in 1usize..6, d in 0.5f64..3.0, c in 1.0f64..6.0) {
            let specs = vec![(d, c); k];
            let got = bound_sum(delta, &specs, 120, 90).unwrap();
            let expected = (k as f64 * b(delta / k as f64, d, c, 120, 90)).min(1.0);
            prop_assert!((got - expected).abs() <= 1e-15 * expected.max(1e-300));
        }
    }
}
