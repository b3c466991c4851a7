mod common;

use ipmbalance::cem::CoarseningSpec;
use ipmbalance::data::{Dataset, MinMaxScaler};
use ipmbalance::sim::{run_experiment, trial_rng, CompiledGenerator, Generator, GaussianLaw, Method, ScenarioSpec, Statistic};

fn cov(p: usize, rho: f64) -> Vec<Vec<f64>> {
    (0..p).map(|i| (0..p).map(|j| if i == j { 1.0 } else { rho }).collect()).collect()
}

fn cem_scenario(n: usize, trials: usize, seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        name: format!("cem-n{n}"),
        generator: Generator::ideal_clone(Generator::GaussianShared { mu0: vec![0.0; 2], mu1: vec![0.0; 2], cov: cov(2, 0.5) }),
        n0: n,
        n1: n,
        method: Method::Cem { cuts: CoarseningSpec::uniform(2, 2).unwrap(), kappa: None },
        statistic: None,
        d: 1.0,
        trials,
        seed,
        delta_grid: vec![0.0, 0.005, 0.01, 0.02, 0.04, 0.08],
    }
}

#[test]
fn tail_rows_are_consistent() {
    let curve = run_experiment(&cem_scenario(60, 400, 5)).unwrap();
    assert_eq!(curve.failed_trials, 0);
    let ok = (curve.trials - curve.failed_trials) as f64;
    for row in &curve.rows {
        assert!((0.0..=1.0).contains(&row.emp_freq));
        assert_eq!(row.se, (row.emp_freq * (1.0 - row.emp_freq) / ok).sqrt());
        assert_eq!(row.vacuous, row.bound >= 1.0);
        assert_eq!(row.c, 2.0 * 4.0 - 2.0);
    }
    assert!(curve.rows.windows(2).all(|w| w[1].emp_freq <= w[0].emp_freq));
    assert!(curve.rows[0].emp_freq > 0.9);
}

#[test]
fn larger_samples_concentrate_more() {
    let small = run_experiment(&cem_scenario(100, 1000, 17)).unwrap();
    let large = run_experiment(&cem_scenario(200, 1000, 17)).unwrap();
    let mut strictly_lower = 0;
    for (a, b) in small.rows.iter().zip(&large.rows) {
        let se = (a.se * a.se + b.se * b.se).sqrt();
        assert!(b.emp_freq <= a.emp_freq + 2.0 * se, "δ={}: n=200 {} vs n=100 {}", a.delta, b.emp_freq, a.emp_freq);
        strictly_lower += usize::from(b.emp_freq < a.emp_freq);
    }
    assert!(strictly_lower >= 2);
}

fn logit_scenario(statistic: Statistic) -> ScenarioSpec {
    ScenarioSpec {
        name: "logit".into(),
        generator: Generator::ideal_clone(Generator::GaussianShared { mu0: vec![0.0; 5], mu1: vec![0.0; 5], cov: cov(5, 0.0) }),
        n0: 100,
        n1: 100,
        method: Method::Propensity { k: 1, ridge: None },
        statistic: Some(statistic),
        d: 1.0,
        trials: 2000,
        seed: 20_240_611,
        delta_grid: vec![0.1f64.sqrt()],
    }
}

/// The unscaled logit difference grows with ‖w‖ and escapes the bound for a
/// unit-range class; dividing by ‖w‖₁ restores dominance.
#[test]
fn raw_logit_statistic_escapes_the_bound_but_range_normalized_does_not() {
    let raw = run_experiment(&logit_scenario(Statistic::Scalar)).unwrap();
    let row = &raw.rows[0];
    println!("raw logit: emp {} se {} bound {}", row.emp_freq, row.se, row.bound);
    assert!(!raw.dominance_holds());
    let scaled = run_experiment(&logit_scenario(Statistic::RangeNormalized)).unwrap();
    println!("range-normalized: emp {} bound {}", scaled.rows[0].emp_freq, scaled.rows[0].bound);
    assert!(scaled.dominance_holds());
}

fn ks_critical(n: usize, m: usize) -> f64 {
    // α = 0.001
    1.95 * ((n + m) as f64 / (n * m) as f64).sqrt()
}

fn column(points: &[Vec<f64>], l: usize) -> Vec<f64> {
    points.iter().map(|z| z[l]).collect()
}

#[test]
fn clone_groups_share_one_law() {
    let g = CompiledGenerator::new(&Generator::ideal_clone(Generator::GaussianShared {
        mu0: vec![1.0, -2.0],
        mu1: vec![5.0, 5.0],
        cov: cov(2, 0.3),
    }))
    .unwrap();
    let mut rng = trial_rng(3, 0);
    let z0 = g.sample_group(0, 3000, &mut rng);
    let z1 = g.sample_group(1, 3000, &mut rng);
    for l in 0..2 {
        let d = common::ks_statistic(&column(&z0, l), &column(&z1, l));
        assert!(d < ks_critical(3000, 3000), "coordinate {l}: KS {d}");
    }
    let mean = |z: &[Vec<f64>], l| z.iter().map(|v| v[l]).sum::<f64>() / z.len() as f64;
    for (l, mu) in [1.0, -2.0].into_iter().enumerate() {
        assert!((mean(&z0, l) - mu).abs() < 4.0 / 3000f64.sqrt());
        assert!((mean(&z1, l) - mu).abs() < 4.0 / 3000f64.sqrt());
    }
    let mut a = trial_rng(3, 0);
    let mut b = trial_rng(3, 0);
    assert_eq!(g.sample_group(0, 50, &mut a), g.sample_group(0, 50, &mut b));
}

#[test]
fn single_component_mixture_matches_shared_gaussian() {
    let mean = vec![0.5, -1.0, 2.0];
    let c = cov(3, 0.4);
    let mixture = CompiledGenerator::new(&Generator::GaussianMixture {
        components: vec![GaussianLaw { mean: mean.clone(), cov: c.clone() }],
        weights: vec![1.0],
    })
    .unwrap();
    let shared = CompiledGenerator::new(&Generator::GaussianShared { mu0: mean.clone(), mu1: mean.clone(), cov: c }).unwrap();
    let a = mixture.sample_group(0, 3000, &mut trial_rng(8, 1));
    let b = shared.sample_group(0, 3000, &mut trial_rng(9, 1));
    for l in 0..3 {
        let d = common::ks_statistic(&column(&a, l), &column(&b, l));
        assert!(d < ks_critical(3000, 3000), "coordinate {l}: KS {d}");
        let m = a.iter().map(|z| z[l]).sum::<f64>() / 3000.0;
        assert!((m - mean[l]).abs() < 4.0 / 3000f64.sqrt());
    }
}

#[test]
fn clipping_counts_out_of_range_values() {
    let mut rng = common::rng(31);
    let g0 = common::normal_points(&mut rng, 200, 3);
    let g1 = common::normal_points(&mut rng, 150, 3);
    let scaler = MinMaxScaler::new(vec![-1.5; 3], vec![1.5; 3]).unwrap();
    let (scaled, clipped) = Dataset::from_groups(&g0, &g1).unwrap().normalize_with(&scaler);
    let expected = g0.iter().chain(&g1).flatten().filter(|v| v.abs() > 1.5).count();
    assert_eq!(clipped, expected);
    assert!(expected > 0);
    assert!(scaled.is_normalized());
    for (u, z) in scaled.units().iter().zip(g0.iter().chain(&g1)) {
        for (s, v) in u.z.iter().zip(z) {
            assert!((s - ((v.clamp(-1.5, 1.5) + 1.5) / 3.0)).abs() <= 1e-15);
        }
    }
}
