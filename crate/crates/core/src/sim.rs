//! Seeded Monte Carlo tail-probability experiments under ideal balance.
//!
//! Each trial draws both groups, min-max scales them with bounds fixed from
//! the generator's 6σ envelope, runs the configured matching method and
//! records the balance statistic. Exceedance frequencies on the δ grid are
//! then compared with the tail bound for the method's covering exponent.
//!
//! Trial `t` uses a ChaCha8 stream selected by `t` under the master seed, so
//! results do not depend on how trials are scheduled across threads.

use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{bound, bound_lp, vc_to_covering_exponent};
use crate::cem::{cem_delta, cem_match, CoarseningSpec};
use crate::data::{Dataset, MinMaxScaler};
use crate::error::{invalid, Error, Result};
use crate::io::fmt_f64;
use crate::kernel::{kernel_delta, sobolev_covering_exponent, KernelSpec, SobolevSpec};
use crate::matching::{MatchedSets, Matching};
use crate::numeric::lp_norm;
use crate::propensity::{lda_fit, lda_fit_auto, propensity_delta, propensity_match, LdaModel};

/// Share of failed trials above which an experiment is rejected.
pub const MAX_FAILED_SHARE: f64 = 0.10;
/// Half-width of the normalization envelope in standard deviations.
pub const ENVELOPE_SIGMAS: f64 = 6.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianLaw {
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    /// `N(mu0, Σ)` for controls and `N(mu1, Σ)` for treated.
    GaussianShared { mu0: Vec<f64>, mu1: Vec<f64>, cov: Vec<Vec<f64>> },
    /// One Gaussian mixture for both groups.
    GaussianMixture { components: Vec<GaussianLaw>, weights: Vec<f64> },
    /// Both groups drawn from the control law of `base`.
    IdealBalanceClone { base: Box<Generator> },
}

impl Generator {
    pub fn standard_normal(p: usize) -> Generator {
        let cov = (0..p).map(|i| (0..p).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        Generator::GaussianShared { mu0: vec![0.0; p], mu1: vec![0.0; p], cov }
    }

    pub fn ideal_clone(base: Generator) -> Generator {
        Generator::IdealBalanceClone { base: Box::new(base) }
    }

    pub fn dim(&self) -> usize {
        match self {
            Generator::GaussianShared { mu0, .. } => mu0.len(),
            Generator::GaussianMixture { components, .. } => components.first().map_or(0, |c| c.mean.len()),
            Generator::IdealBalanceClone { base } => base.dim(),
        }
    }
}

/// A Gaussian law with its lower Cholesky factor.
#[derive(Debug, Clone)]
struct Factored {
    mean: Vec<f64>,
    chol: Vec<Vec<f64>>,
}

impl Factored {
    fn new(mean: &[f64], cov: &[Vec<f64>]) -> Result<Self> {
        let p = mean.len();
        if p == 0 {
            return invalid("Gaussian dimension must be >= 1");
        }
        if cov.len() != p || cov.iter().any(|r| r.len() != p) {
            return invalid(format!("covariance must be {p}x{p}"));
        }
        if mean.iter().chain(cov.iter().flatten()).any(|v| !v.is_finite()) {
            return invalid("Gaussian parameters must be finite");
        }
        if (0..p).any(|i| (0..i).any(|j| cov[i][j] != cov[j][i])) {
            return invalid("covariance must be symmetric");
        }
        let m = DMatrix::from_fn(p, p, |i, j| cov[i][j]);
        let chol = m
            .cholesky()
            .ok_or_else(|| Error::InvalidInput("covariance is not symmetric positive definite".into()))?;
        let l = chol.l();
        Ok(Factored { mean: mean.to_vec(), chol: (0..p).map(|i| (0..=i).map(|j| l[(i, j)]).collect()).collect() })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let e: Vec<f64> = (0..self.mean.len()).map(|_| rng.sample(StandardNormal)).collect();
        self.chol
            .iter()
            .zip(&self.mean)
            .map(|(row, mu)| mu + row.iter().zip(&e).map(|(a, b)| a * b).sum::<f64>())
            .collect()
    }

    /// Per-coordinate `mean ± k·sd`.
    fn envelope(&self, k: f64) -> (Vec<f64>, Vec<f64>) {
        let sd: Vec<f64> = self.chol.iter().map(|row| row.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
        (
            self.mean.iter().zip(&sd).map(|(m, s)| m - k * s).collect(),
            self.mean.iter().zip(&sd).map(|(m, s)| m + k * s).collect(),
        )
    }
}

/// A generator with its factorizations computed once.
#[derive(Debug, Clone)]
pub struct CompiledGenerator {
    laws: [Vec<Factored>; 2],
    weights: [Option<WeightedIndex<f64>>; 2],
}

impl CompiledGenerator {
    pub fn new(generator: &Generator) -> Result<Self> {
        match generator {
            Generator::GaussianShared { mu0, mu1, cov } => {
                if mu0.len() != mu1.len() {
                    return invalid("group means differ in dimension");
                }
                Ok(CompiledGenerator {
                    laws: [vec![Factored::new(mu0, cov)?], vec![Factored::new(mu1, cov)?]],
                    weights: [None, None],
                })
            }
            Generator::GaussianMixture { components, weights } => {
                if components.is_empty() || components.len() != weights.len() {
                    return invalid("mixture needs one weight per component and at least one component");
                }
                if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                    return invalid("mixture weights must be finite and nonnegative");
                }
                let laws = components.iter().map(|c| Factored::new(&c.mean, &c.cov)).collect::<Result<Vec<_>>>()?;
                if laws.iter().any(|l| l.mean.len() != laws[0].mean.len()) {
                    return invalid("mixture components differ in dimension");
                }
                let index = WeightedIndex::new(weights.clone())
                    .map_err(|e| Error::InvalidInput(format!("mixture weights: {e}")))?;
                Ok(CompiledGenerator { laws: [laws.clone(), laws], weights: [Some(index.clone()), Some(index)] })
            }
            Generator::IdealBalanceClone { base } => {
                let inner = CompiledGenerator::new(base)?;
                let [control, _] = inner.laws;
                let [w, _] = inner.weights;
                Ok(CompiledGenerator { laws: [control.clone(), control], weights: [w.clone(), w] })
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.laws[0][0].mean.len()
    }

    pub fn sample_group<R: Rng + ?Sized>(&self, group: usize, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
        let laws = &self.laws[group];
        (0..n)
            .map(|_| match &self.weights[group] {
                Some(index) => laws[index.sample(rng)].sample(rng),
                None => laws[0].sample(rng),
            })
            .collect()
    }

    /// Min-max bounds covering every component of both groups to ±6σ.
    pub fn envelope_scaler(&self) -> Result<MinMaxScaler> {
        let p = self.dim();
        let mut lo = vec![f64::INFINITY; p];
        let mut hi = vec![f64::NEG_INFINITY; p];
        for law in self.laws.iter().flatten() {
            let (l, h) = law.envelope(ENVELOPE_SIGMAS);
            for j in 0..p {
                lo[j] = lo[j].min(l[j]);
                hi[j] = hi[j].max(h[j]);
            }
        }
        MinMaxScaler::new(lo, hi)
    }
}

/// `n` i.i.d. draws from the control law of `generator`.
pub fn generate<R: Rng + ?Sized>(generator: &Generator, n: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    Ok(CompiledGenerator::new(generator)?.sample_group(0, n, rng))
}

/// RNG for trial `trial` under `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    /// Coarsened exact matching. The bound uses the nominal cell count.
    Cem {
        cuts: CoarseningSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kappa: Option<f64>,
    },
    /// Discriminant-score ratio matching with `k` controls per treated unit.
    Propensity {
        k: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ridge: Option<f64>,
    },
    /// Kernel balance statistic on the full samples, or on a ratio match
    /// when `ratio` is set. The bound uses the Sobolev exponent of `sobolev`.
    Kernel {
        kernel: KernelSpec,
        sobolev: SobolevSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ratio: Option<usize>,
    },
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Cem { .. } => "cem",
            Method::Propensity { .. } => "propensity",
            Method::Kernel { .. } => "kernel",
        }
    }

    pub fn default_statistic(&self) -> Statistic {
        match self {
            Method::Cem { .. } => Statistic::Component { index: 0 },
            Method::Propensity { .. } | Method::Kernel { .. } => Statistic::Scalar,
        }
    }

    /// Covering exponent `C` the bound is evaluated with.
    pub fn covering_exponent(&self, p: usize) -> Result<f64> {
        match self {
            Method::Cem { cuts, .. } => {
                let r = u32::try_from(cuts.nominal_cells()).map_err(|_| Error::TooLarge(cuts.nominal_cells()))?;
                vc_to_covering_exponent(r)
            }
            Method::Propensity { .. } => {
                let v = u32::try_from(p + 1).map_err(|_| Error::TooLarge(p))?;
                vc_to_covering_exponent(v)
            }
            Method::Kernel { sobolev, .. } => sobolev_covering_exponent(sobolev),
        }
    }
}

/// Which real summary of the balance quantity is thresholded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Statistic {
    /// The method's own scalar Δ (logit-scale for propensity, Δ_H for kernel).
    Scalar,
    /// `|Δ_index|` of the covariate mean difference.
    Component { index: usize },
    /// `‖Δ‖_p` of the covariate mean difference.
    Lp { p: f64 },
    /// `‖Δ‖_∞` of the covariate mean difference.
    Linf,
    /// Propensity only: the logit-scale Δ divided by `‖w‖₁`, which is Δ for
    /// the discriminant rescaled to map the unit cube onto `[0, 1]`.
    RangeNormalized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    #[serde(default)]
    pub name: String,
    pub generator: Generator,
    pub n0: usize,
    pub n1: usize,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub statistic: Option<Statistic>,
    #[serde(rename = "D", default = "default_d")]
    pub d: f64,
    pub trials: usize,
    pub seed: u64,
    pub delta_grid: Vec<f64>,
}

fn default_d() -> f64 {
    1.0
}

impl ScenarioSpec {
    pub fn statistic(&self) -> Statistic {
        self.statistic.unwrap_or_else(|| self.method.default_statistic())
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return invalid("trials must be >= 1");
        }
        if self.n0 == 0 || self.n1 == 0 {
            return invalid("both groups need at least one unit");
        }
        if !(self.d > 0.0 && self.d.is_finite()) {
            return invalid(format!("D must be positive, got {}", self.d));
        }
        if self.delta_grid.is_empty() {
            return invalid("delta grid is empty");
        }
        if self.delta_grid.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return invalid("delta grid values must be finite and >= 0");
        }
        if self.delta_grid.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("delta grid must be strictly increasing");
        }
        let p = self.generator.dim();
        match &self.method {
            Method::Cem { cuts, kappa } => {
                if cuts.dim() != p {
                    return invalid(format!("coarsening has {} covariates, generator has {p}", cuts.dim()));
                }
                if let Some(k) = kappa {
                    if !(*k > 0.0 && k.is_finite()) {
                        return invalid("kappa must be positive");
                    }
                }
            }
            Method::Propensity { k, ridge } => {
                if *k == 0 {
                    return invalid("match ratio k must be >= 1");
                }
                if self.n0 < k * self.n1 {
                    return Err(Error::InsufficientControls { needed: k * self.n1, available: self.n0 });
                }
                if let Some(r) = ridge {
                    if !(*r >= 0.0 && r.is_finite()) {
                        return invalid("ridge must be >= 0");
                    }
                }
            }
            Method::Kernel { kernel, ratio, .. } => {
                (*kernel).validated()?;
                if let Some(k) = ratio {
                    if *k == 0 || self.n0 < k * self.n1 {
                        return Err(Error::InsufficientControls { needed: k * self.n1, available: self.n0 });
                    }
                }
            }
        }
        match self.statistic() {
            Statistic::Scalar if matches!(self.method, Method::Cem { .. }) => {
                invalid("CEM has a vector balance quantity; choose component, lp or linf")
            }
            Statistic::RangeNormalized if !matches!(self.method, Method::Propensity { .. }) => {
                invalid("range_normalized applies to propensity matching only")
            }
            Statistic::Component { index } if index >= p => invalid(format!("component {index} out of range for p = {p}")),
            Statistic::Lp { p: q } if !(q >= 1.0 && q.is_finite()) => invalid(format!("lp norm needs finite p >= 1, got {q}")),
            Statistic::Component { .. } | Statistic::Lp { .. } | Statistic::Linf
                if matches!(self.method, Method::Kernel { .. }) =>
            {
                invalid("kernel balance is scalar; use the scalar statistic")
            }
            _ => self.method.covering_exponent(p).map(|_| ()),
        }
    }

    /// Tail bound at `delta` for this scenario's statistic.
    pub fn bound_at(&self, delta: f64) -> Result<f64> {
        let p = self.generator.dim();
        let c = self.method.covering_exponent(p)?;
        match self.statistic() {
            Statistic::Scalar | Statistic::RangeNormalized | Statistic::Component { .. } => bound(delta, self.d, c, self.n0, self.n1),
            Statistic::Lp { p: q } => bound_lp(delta, q, p, self.d, c, self.n0, self.n1),
            Statistic::Linf => bound_lp(delta, f64::INFINITY, p, self.d, c, self.n0, self.n1),
        }
    }
}

/// Outcome of one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub statistic: f64,
    pub clipped: usize,
}

fn fit_model(data: &Dataset, ridge: Option<f64>) -> Result<LdaModel> {
    match ridge {
        Some(r) => lda_fit(data, r),
        None => lda_fit_auto(data),
    }
}

fn summarize(delta: &[f64], statistic: Statistic) -> f64 {
    match statistic {
        Statistic::Component { index } => delta[index].abs(),
        Statistic::Lp { p } => lp_norm(delta, p),
        Statistic::Linf | Statistic::Scalar | Statistic::RangeNormalized => lp_norm(delta, f64::INFINITY),
    }
}

/// Draws and analyzes trial `trial` of `spec`.
pub fn run_trial(spec: &ScenarioSpec, generator: &CompiledGenerator, scaler: &MinMaxScaler, trial: u64) -> Result<TrialOutcome> {
    let mut rng = trial_rng(spec.seed, trial);
    let z0 = generator.sample_group(0, spec.n0, &mut rng);
    let z1 = generator.sample_group(1, spec.n1, &mut rng);
    let (data, clipped) = Dataset::from_groups(&z0, &z1)?.normalize_with(scaler);
    let statistic = spec.statistic();
    let value = match &spec.method {
        Method::Cem { cuts, .. } => {
            let m = cem_match(&data, cuts)?;
            summarize(&cem_delta(&data, &m)?, statistic)
        }
        Method::Propensity { k, ridge } => {
            let model = fit_model(&data, *ridge)?;
            let rm = propensity_match(&data, &model, *k)?;
            match statistic {
                Statistic::Scalar => propensity_delta(&model, &data, &rm)?.delta,
                Statistic::RangeNormalized => {
                    let scale = lp_norm(&model.w, 1.0);
                    let delta = propensity_delta(&model, &data, &rm)?.delta;
                    if scale > 0.0 { delta / scale } else { 0.0 }
                }
                s => summarize(&rm.matched_sets().weighted_mean_difference(&data)?, s),
            }
        }
        Method::Kernel { kernel, ratio, .. } => {
            let sets = match ratio {
                Some(k) => propensity_match(&data, &lda_fit_auto(&data)?, *k)?.matched_sets(),
                None => MatchedSets::full(&data),
            };
            kernel_delta(&data, &sets, kernel)?
        }
    };
    Ok(TrialOutcome { statistic: value, clipped })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub delta: f64,
    pub emp_freq: f64,
    pub se: f64,
    pub bound: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub n0: usize,
    pub n1: usize,
    pub method: String,
    /// The clamped bound equals 1.
    pub vacuous: bool,
}

impl TailRow {
    /// `emp_freq <= bound + 3·se`, or the row is vacuous.
    pub fn dominated(&self) -> bool {
        self.vacuous || self.emp_freq <= self.bound + 3.0 * self.se
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCurve {
    pub scenario: String,
    pub method: String,
    pub seed: u64,
    pub trials: usize,
    pub failed_trials: usize,
    pub clipped_values: usize,
    pub rows: Vec<TailRow>,
}

impl TailCurve {
    pub fn dominance_holds(&self) -> bool {
        self.rows.iter().all(TailRow::dominated)
    }

    pub fn violations(&self) -> Vec<&TailRow> {
        self.rows.iter().filter(|r| !r.dominated()).collect()
    }

    /// One row per grid point; floats with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("delta,emp_freq,se,bound,C,D,n0,n1,method,vacuous\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                fmt_f64(r.delta),
                fmt_f64(r.emp_freq),
                fmt_f64(r.se),
                fmt_f64(r.bound),
                fmt_f64(r.c),
                fmt_f64(r.d),
                r.n0,
                r.n1,
                r.method,
                r.vacuous
            ));
        }
        out
    }
}

/// Runs all trials in parallel and aggregates exceedance frequencies.
pub fn run_experiment(spec: &ScenarioSpec) -> Result<TailCurve> {
    spec.validate()?;
    let generator = CompiledGenerator::new(&spec.generator)?;
    let scaler = generator.envelope_scaler()?;
    let outcomes: Vec<Result<TrialOutcome>> = (0..spec.trials as u64)
        .into_par_iter()
        .map(|t| run_trial(spec, &generator, &scaler, t))
        .collect();
    let mut stats = Vec::with_capacity(outcomes.len());
    let mut failed = 0;
    let mut clipped = 0;
    for o in outcomes {
        match o {
            Ok(o) => {
                stats.push(o.statistic);
                clipped += o.clipped;
            }
            // Configuration errors would fail every trial; they surface through the share check.
            Err(_) => failed += 1,
        }
    }
    if failed as f64 > MAX_FAILED_SHARE * spec.trials as f64 || stats.is_empty() {
        return Err(Error::ExperimentDegenerate { failed, trials: spec.trials });
    }
    let c = spec.method.covering_exponent(spec.generator.dim())?;
    let ok = stats.len() as f64;
    let rows = spec
        .delta_grid
        .iter()
        .map(|&delta| {
            let exceed = stats.iter().filter(|&&s| s > delta).count() as f64;
            let freq = exceed / ok;
            let b = spec.bound_at(delta)?;
            Ok(TailRow {
                delta,
                emp_freq: freq,
                se: (freq * (1.0 - freq) / ok).sqrt(),
                bound: b,
                c,
                d: spec.d,
                n0: spec.n0,
                n1: spec.n1,
                method: spec.method.name().to_string(),
                vacuous: b >= 1.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TailCurve {
        scenario: spec.name.clone(),
        method: spec.method.name().to_string(),
        seed: spec.seed,
        trials: spec.trials,
        failed_trials: failed,
        clipped_values: clipped,
        rows,
    })
}

/// Multiples of the bound's mode at `n_min` used for the standard grids.
const GRID_MULTIPLES: [f64; 8] = [1.0, 1.25, 1.5, 2.0, 2.5, 3.0, 4.0, 6.0];

/// δ grid starting where the bound at sample size `n_min` turns decreasing.
pub fn standard_grid(c: f64, n_min: usize) -> Vec<f64> {
    let mode = (c / n_min as f64).sqrt();
    GRID_MULTIPLES.iter().map(|m| m * mode).collect()
}

fn identity(p: usize) -> Vec<Vec<f64>> {
    (0..p).map(|i| (0..p).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

/// Correlated covariance `0.5^|i-j|`, so matching has structure to work with.
fn ar1(p: usize) -> Vec<Vec<f64>> {
    (0..p).map(|i| (0..p).map(|j| 0.5f64.powi((i as i32 - j as i32).abs())).collect()).collect()
}

/// The ideal-balance scenarios for one sample size: CEM with 4 and 9 cells,
/// propensity matching for p ∈ {2, 5} and k ∈ {1, 2} (range-normalized
/// logit Δ), and a Gaussian-kernel statistic with the Sobolev (m=3, q=2)
/// proxy exponent. Treated groups have
/// `n` units and control groups `k·n`. Grids start at the bound's mode for
/// the smallest suite size `n_min`, so they are shared across sample sizes.
pub fn standard_suite(n: usize, n_min: usize, trials: usize, seed: u64) -> Result<Vec<ScenarioSpec>> {
    let clone = |p: usize| Generator::ideal_clone(Generator::GaussianShared { mu0: vec![0.0; p], mu1: vec![0.0; p], cov: ar1(p) });
    let mut out = Vec::new();
    for (name, cells) in [("cem-r4", 2usize), ("cem-r9", 3)] {
        let cuts = CoarseningSpec::uniform(2, cells)?;
        let method = Method::Cem { cuts, kappa: None };
        let c = method.covering_exponent(2)?;
        out.push(ScenarioSpec {
            name: format!("{name}-n{n}"),
            generator: clone(2),
            n0: n,
            n1: n,
            method,
            statistic: None,
            d: 1.0,
            trials,
            seed,
            delta_grid: standard_grid(c, n_min),
        });
    }
    for p in [2usize, 5] {
        for k in [1usize, 2] {
            let method = Method::Propensity { k, ridge: None };
            let c = method.covering_exponent(p)?;
            out.push(ScenarioSpec {
                name: format!("propensity-p{p}-k{k}-n{n}"),
                generator: clone(p),
                n0: k * n,
                n1: n,
                method,
                statistic: Some(Statistic::RangeNormalized),
                d: 1.0,
                trials,
                seed,
                delta_grid: standard_grid(c, n_min),
            });
        }
    }
    let method = Method::Kernel {
        kernel: KernelSpec::gaussian(1.0)?,
        sobolev: SobolevSpec::new(3, 2.0, 1)?,
        ratio: None,
    };
    let c = method.covering_exponent(1)?;
    out.push(ScenarioSpec {
        name: format!("kernel-gaussian-n{n}"),
        generator: Generator::ideal_clone(Generator::GaussianShared { mu0: vec![0.0], mu1: vec![0.0], cov: identity(1) }),
        n0: n,
        n1: n,
        method,
        statistic: None,
        d: 1.0,
        trials,
        seed,
        delta_grid: standard_grid(c, n_min),
    });
    Ok(out)
}
