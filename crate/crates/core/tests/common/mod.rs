//! Independent reference computations shared by the integration tests.
//! Everything here is written from the defining formulas, without calling
//! the library routine it checks.

#![allow(dead_code)]

use ipmbalance::data::{Dataset, EmpiricalPair, Unit};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn uniform_points(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..p).map(|_| rng.random::<f64>()).collect()).collect()
}

pub fn normal_points(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..p).map(|_| rng.sample(StandardNormal)).collect()).collect()
}

pub fn random_pair(rng: &mut ChaCha8Rng, p: usize) -> EmpiricalPair {
    let n0 = rng.random_range(1..30);
    let n1 = rng.random_range(1..30);
    let shift: f64 = rng.random_range(-0.3..0.3);
    let g0 = uniform_points(rng, n0, p);
    let g1 = uniform_points(rng, n1, p).into_iter().map(|z| z.into_iter().map(|v| v + shift).collect()).collect();
    EmpiricalPair::new(g0, g1).unwrap()
}

pub fn mean_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<f64> {
    let p = a[0].len();
    (0..p)
        .map(|l| a.iter().map(|z| z[l]).sum::<f64>() / a.len() as f64 - b.iter().map(|z| z[l]).sum::<f64>() / b.len() as f64)
        .collect()
}

/// Largest `W·|wᵀ(mean₀ - mean₁)|` over `dirs` random unit vectors `w`.
pub fn hyperplane_search(pair: &EmpiricalPair, w_bound: f64, dirs: usize, rng: &mut ChaCha8Rng) -> f64 {
    let diff = mean_diff(&pair.group0, &pair.group1);
    let mut best = 0.0f64;
    for _ in 0..dirs {
        let w: Vec<f64> = (0..diff.len()).map(|_| rng.sample(StandardNormal)).collect();
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        let value = w_bound * w.iter().zip(&diff).map(|(a, b)| a * b).sum::<f64>().abs() / norm;
        best = best.max(value);
    }
    best
}

/// `sup |Σ_s α_s k_s d_s|` over every `α ∈ {0,1}^R` and `k ∈ {0, κ}^R`.
pub fn partition_enumeration(d: &[f64], kappa: f64) -> f64 {
    let r = d.len();
    assert!(r <= 12);
    let mut best = 0.0f64;
    for alpha in 0u32..(1 << r) {
        for k in 0u32..(1 << r) {
            let mut total = 0.0;
            for s in 0..r {
                if alpha >> s & 1 == 1 {
                    let ks = if k >> s & 1 == 1 { kappa } else { 0.0 };
                    total += ks * d[s];
                }
            }
            best = best.max(total.abs());
        }
    }
    best
}

/// Per-stratum contributions written out directly.
pub fn flat_contributions(pair: &EmpiricalPair, s0: &[usize], s1: &[usize], r: usize, l: usize) -> Vec<f64> {
    (0..r)
        .map(|s| {
            let a: f64 = pair.group0.iter().zip(s0).filter(|(_, &t)| t == s).map(|(z, _)| z[l]).sum();
            let b: f64 = pair.group1.iter().zip(s1).filter(|(_, &t)| t == s).map(|(z, _)| z[l]).sum();
            a / pair.n0() as f64 - b / pair.n1() as f64
        })
        .collect()
}

fn multi_indices(p: usize, max_total: u32) -> Vec<Vec<u32>> {
    if p == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 0..=max_total {
        for mut rest in multi_indices(p - 1, max_total - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Feature map of `(xᵀy + c)^degree` from the multinomial expansion.
pub fn poly_features(x: &[f64], degree: u32, offset: f64) -> Vec<f64> {
    multi_indices(x.len(), degree)
        .into_iter()
        .map(|alpha| {
            let total: u32 = alpha.iter().sum();
            let j = degree - total;
            let coef = factorial(degree) / (alpha.iter().map(|&a| factorial(a)).product::<f64>() * factorial(j)) * offset.powi(j as i32);
            let mono: f64 = x.iter().zip(&alpha).map(|(v, &a)| v.powi(a as i32)).product();
            coef.sqrt() * mono
        })
        .collect()
}

/// `‖mean φ(group0) - mean φ(group1)‖₂` with the explicit polynomial feature map.
pub fn explicit_poly_mmd(g0: &[Vec<f64>], g1: &[Vec<f64>], degree: u32, offset: f64) -> f64 {
    let f0: Vec<Vec<f64>> = g0.iter().map(|x| poly_features(x, degree, offset)).collect();
    let f1: Vec<Vec<f64>> = g1.iter().map(|x| poly_features(x, degree, offset)).collect();
    mean_diff(&f0, &f1).iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Coarsened-exact-matching mean difference from a flat loop: signatures are
/// recomputed per unit and stratum counts by scanning every unit.
pub fn flat_cem_delta(units: &[Unit], cuts: &[Vec<f64>]) -> Option<Vec<f64>> {
    let sig = |z: &[f64]| -> Vec<usize> { z.iter().zip(cuts).map(|(v, c)| c.iter().filter(|&&t| t <= *v).count()).collect() };
    let sigs: Vec<Vec<usize>> = units.iter().map(|u| sig(&u.z)).collect();
    let count = |s: &Vec<usize>, treated: bool| sigs.iter().zip(units).filter(|(t, u)| *t == s && u.treated == treated).count();
    let keep: Vec<bool> = sigs.iter().map(|s| count(s, true) > 0 && count(s, false) > 0).collect();
    let m0 = units.iter().zip(&keep).filter(|(u, &k)| k && !u.treated).count() as f64;
    let m1 = units.iter().zip(&keep).filter(|(u, &k)| k && u.treated).count() as f64;
    if m0 == 0.0 {
        return None;
    }
    let p = units[0].z.len();
    let mut c = vec![0.0; p];
    let mut t = vec![0.0; p];
    for (i, u) in units.iter().enumerate() {
        if !keep[i] {
            continue;
        }
        if u.treated {
            for l in 0..p {
                t[l] += u.z[l] / m1;
            }
        } else {
            let w = (count(&sigs[i], true) as f64 / m1) / (count(&sigs[i], false) as f64 / m0);
            for l in 0..p {
                c[l] += w * u.z[l] / m0;
            }
        }
    }
    Some(c.iter().zip(&t).map(|(a, b)| a - b).collect())
}

/// Greedy ratio matching by exhaustive scan: treated by descending score
/// (lower index first on ties), each taking its nearest free control with
/// the lower index winning exact distance ties.
pub fn brute_ratio_match(s0: &[f64], s1: &[f64], k: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..s1.len()).collect();
    order.sort_by(|&a, &b| s1[b].partial_cmp(&s1[a]).unwrap().then(a.cmp(&b)));
    let mut used = vec![false; s0.len()];
    let mut out = vec![Vec::new(); s1.len()];
    for j in order {
        for _ in 0..k {
            let mut pick: Option<usize> = None;
            for i in 0..s0.len() {
                if used[i] {
                    continue;
                }
                let better = match pick {
                    None => true,
                    Some(b) => (s0[i] - s1[j]).abs() < (s0[b] - s1[j]).abs(),
                };
                if better {
                    pick = Some(i);
                }
            }
            let i = pick.unwrap();
            used[i] = true;
            out[j].push(i);
        }
    }
    out
}

pub fn dataset(g0: &[Vec<f64>], g1: &[Vec<f64>]) -> Dataset {
    Dataset::from_groups(g0, g1).unwrap()
}

/// Smallest number of family members whose ε-balls cover the family, by
/// exhaustive subset search.
pub fn exact_cover(values: &[Vec<f64>], eps: f64, r: f64) -> usize {
    let n = values.len();
    assert!(n <= 16);
    let dist = |a: &[f64], b: &[f64]| (a.iter().zip(b).map(|(x, y)| (x - y).abs().powf(r)).sum::<f64>() / a.len() as f64).powf(1.0 / r);
    let ball: Vec<u32> = (0..n)
        .map(|i| (0..n).filter(|&j| dist(&values[i], &values[j]) <= eps).fold(0u32, |m, j| m | 1 << j))
        .collect();
    let full = (1u32 << n) - 1;
    (0u32..=full)
        .filter(|set| (0..n).filter(|&i| set >> i & 1 == 1).fold(0u32, |m, i| m | ball[i]) == full)
        .map(|set| set.count_ones() as usize)
        .min()
        .unwrap()
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}
