//! Balance analysis of one dataset: configuration, method dispatch and the
//! resulting report.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::bounds::{bound, bound_lp};
use crate::cem::{cem_bound_params, cem_match, default_kappa, retained_partition_gamma, CoarseningSpec};
use crate::data::Dataset;
use crate::error::{invalid, Error, Result};
use crate::io::fmt_short;
use crate::ipm::{gamma_hyperplane, gamma_mmd};
use crate::kernel::{kernel_bound, kernel_delta, sobolev_covering_exponent, KernelSpec, SobolevSpec};
use crate::matching::{MatchedSets, Matching};
use crate::numeric::{lp_norm, norm2};
use crate::propensity::{lda_fit, lda_fit_auto, propensity_delta, propensity_match};
use crate::sim::standard_grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    Cem,
    Propensity,
    Kernel,
}

impl std::str::FromStr for MethodName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cem" => Ok(MethodName::Cem),
            "propensity" => Ok(MethodName::Propensity),
            "kernel" => Ok(MethodName::Kernel),
            _ => invalid(format!("unknown method {s:?}; expected cem, propensity or kernel")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelName {
    Gaussian,
    #[serde(alias = "polynomial")]
    Poly,
    Laplacian,
}

impl std::str::FromStr for KernelName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(KernelName::Gaussian),
            "poly" | "polynomial" => Ok(KernelName::Poly),
            "laplacian" => Ok(KernelName::Laplacian),
            _ => invalid(format!("unknown kernel {s:?}; expected gaussian, poly or laplacian")),
        }
    }
}

/// Coarsening given as explicit cutpoints, a cell count per covariate, or
/// the text form accepted by [`parse_cuts`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cuts {
    Cells(usize),
    Explicit(Vec<Vec<f64>>),
    Text(String),
}

impl Cuts {
    pub fn resolve(&self, p: usize) -> Result<CoarseningSpec> {
        match self {
            Cuts::Cells(k) => CoarseningSpec::uniform(p, *k),
            Cuts::Explicit(c) => CoarseningSpec::new(c.clone()),
            Cuts::Text(s) => parse_cuts(s, p),
        }
    }
}

/// `"3"` means three equal-width cells per covariate on `[0, 1]`;
/// `"0.5;0.25,0.75"` lists cutpoints per covariate, separated by `;`.
pub fn parse_cuts(text: &str, p: usize) -> Result<CoarseningSpec> {
    let text = text.trim();
    if let Ok(k) = text.parse::<usize>() {
        return CoarseningSpec::uniform(p, k);
    }
    let cuts = text
        .split(';')
        .map(|part| {
            part.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<f64>().map_err(|_| Error::InvalidInput(format!("bad cutpoint {s:?}"))))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    CoarseningSpec::new(cuts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeltaGrid {
    List(Vec<f64>),
    Range(String),
}

impl DeltaGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match self {
            DeltaGrid::List(v) => v.clone(),
            DeltaGrid::Range(s) => parse_delta_grid(s)?,
        };
        if v.is_empty() || v.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return invalid("delta grid values must be finite and >= 0");
        }
        if v.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("delta grid must be strictly increasing");
        }
        Ok(v)
    }
}

/// `a:b:step` → `a, a + step, ...` up to `b` inclusive.
pub fn parse_delta_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let [a, b, step] = parts.as_slice() else {
        return invalid(format!("delta grid {text:?} is not of the form a:b:step"));
    };
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::InvalidInput(format!("bad number {s:?} in delta grid")));
    let (a, b, step) = (num(a)?, num(b)?, num(step)?);
    if !(step > 0.0 && a >= 0.0 && b >= a && a.is_finite() && b.is_finite()) {
        return invalid(format!("delta grid {text:?} needs 0 <= a <= b and step > 0"));
    }
    let count = ((b - a) / step + 1e-9).floor() as usize + 1;
    if count > 100_000 {
        return invalid("delta grid has more than 100000 points");
    }
    Ok((0..count).map(|i| a + i as f64 * step).collect())
}

/// Everything `run_balance` needs besides the data. All fields are optional
/// so that file and flag sources can be merged.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<MethodName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cuts: Option<Cuts>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ridge: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sobolev: Option<SobolevSpec>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_grid: Option<DeltaGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalize: Option<bool>,
    /// Use the nominal cell count of the coarsening in the CEM exponent instead of the observed one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nominal_r: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl AnalysisConfig {
    /// Fields set in `other` replace those in `self`.
    pub fn merged(self, other: AnalysisConfig) -> AnalysisConfig {
        AnalysisConfig {
            input: other.input.or(self.input),
            method: other.method.or(self.method),
            cuts: other.cuts.or(self.cuts),
            ratio: other.ratio.or(self.ratio),
            ridge: other.ridge.or(self.ridge),
            kernel: other.kernel.or(self.kernel),
            sigma: other.sigma.or(self.sigma),
            degree: other.degree.or(self.degree),
            offset: other.offset.or(self.offset),
            sobolev: other.sobolev.or(self.sobolev),
            d: other.d.or(self.d),
            kappa: other.kappa.or(self.kappa),
            delta_grid: other.delta_grid.or(self.delta_grid),
            normalize: other.normalize.or(self.normalize),
            nominal_r: other.nominal_r.or(self.nominal_r),
            out: other.out.or(self.out),
        }
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        match self.kernel.unwrap_or(KernelName::Gaussian) {
            KernelName::Gaussian => KernelSpec::gaussian(self.sigma.unwrap_or(1.0)),
            KernelName::Laplacian => KernelSpec::laplacian(self.sigma.unwrap_or(1.0)),
            KernelName::Poly => KernelSpec::polynomial(self.degree.unwrap_or(2), self.offset.unwrap_or(1.0)),
        }
    }

    pub fn d_const(&self) -> Result<f64> {
        let d = self.d.unwrap_or(1.0);
        if !(d > 0.0 && d.is_finite()) {
            return invalid(format!("D must be positive, got {d}"));
        }
        Ok(d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub l2: f64,
    pub linf: f64,
}

/// The realized IPM for the method's function class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaReport {
    pub class: String,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_component: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundEntry {
    /// Which summary the bound is for: `component`, `l2`, `linf`, `logit` or `kernel`.
    pub statistic: String,
    pub delta: f64,
    pub value: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "D")]
    pub d: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "C", skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_ok: Option<bool>,
    #[serde(rename = "R", skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub effective_cells: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ridge: Option<f64>,
    #[serde(rename = "W", skip_serializing_if = "Option::is_none")]
    pub w_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sobolev: Option<SobolevSpec>,
    pub m0: usize,
    pub m1: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub method: String,
    pub n0: usize,
    pub n1: usize,
    pub p: usize,
    /// Weighted covariate mean difference, control minus treated.
    pub delta_k: Vec<f64>,
    pub norms: Norms,
    /// The method's scalar balance quantity (logit scale or Δ_H), if it has one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub gamma: GammaReport,
    pub bounds: Vec<BoundEntry>,
    pub constants: Constants,
    pub warnings: Vec<String>,
}

fn component_bounds(grid: &[f64], d: f64, c: f64, p: usize, n0: usize, n1: usize) -> Result<Vec<BoundEntry>> {
    let mut out = Vec::with_capacity(3 * grid.len());
    for &delta in grid {
        let entry = |statistic: &str, value: f64| BoundEntry { statistic: statistic.into(), delta, value, c, d };
        out.push(entry("component", bound(delta, d, c, n0, n1)?));
        out.push(entry("l2", bound_lp(delta, 2.0, p, d, c, n0, n1)?));
        out.push(entry("linf", bound_lp(delta, f64::INFINITY, p, d, c, n0, n1)?));
    }
    Ok(out)
}

fn grid_for(config: &AnalysisConfig, c: f64, n0: usize, n1: usize) -> Result<Vec<f64>> {
    match &config.delta_grid {
        Some(g) => g.values(),
        None => Ok(standard_grid(c, n0.min(n1))),
    }
}

/// Runs the configured matching method and collects balance quantities and bounds.
pub fn run_balance(data: &Dataset, config: &AnalysisConfig) -> Result<BalanceReport> {
    let method = config.method.ok_or_else(|| Error::InvalidInput("no method configured".into()))?;
    let d = config.d_const()?;
    let mut warnings = Vec::new();
    let data = if config.normalize.unwrap_or(false) {
        data.normalize().0
    } else {
        data.clone()
    };
    let normalized = data.is_normalized();
    data.require_both_groups()?;
    let (n0, n1, p) = (data.n0(), data.n1(), data.p());

    let (sets, delta, gamma, bounds, constants) = match method {
        MethodName::Cem => {
            let cuts = config.cuts.as_ref().ok_or_else(|| Error::InvalidInput("cem needs cuts".into()))?;
            let spec = cuts.resolve(p)?;
            let m = cem_match(&data, &spec)?;
            let kappa = match config.kappa {
                Some(k) => k,
                None => default_kappa(&m),
            };
            let r = if config.nominal_r.unwrap_or(false) {
                m.nominal_cells
            } else if m.effective_cells() >= 2 {
                m.effective_cells()
            } else {
                warnings.push(format!("only one non-empty cell; using the nominal cell count {}", m.nominal_cells));
                m.nominal_cells
            };
            let params = cem_bound_params(&m, r, kappa)?;
            if !params.kappa_ok {
                warnings.push(format!("kappa = {kappa} violates n/m_s <= sqrt(kappa) for some retained stratum"));
            }
            if m.discarded.iter().any(|(_, reason)| reason.as_str() == "no-controls") {
                let lost = m.discarded.iter().filter(|(_, reason)| reason.as_str() == "no-controls").count();
                warnings.push(format!("{lost} treated units discarded in strata without controls"));
            }
            let per_component = (0..p).map(|l| retained_partition_gamma(&data, &m, kappa, l)).collect::<Result<Vec<_>>>()?;
            let gamma = GammaReport {
                class: "partition".into(),
                value: per_component.iter().copied().fold(0.0, f64::max),
                per_component: Some(per_component),
            };
            let grid = grid_for(config, params.c_star, n0, n1)?;
            let bounds = component_bounds(&grid, d, params.c_star, p, n0, n1)?;
            let constants = Constants {
                d,
                c: Some(params.c_star),
                kappa: Some(kappa),
                kappa_ok: Some(params.kappa_ok),
                r: Some(r),
                effective_cells: Some(m.effective_cells()),
                m0: m.m0,
                m1: m.m1,
                ..Constants::default()
            };
            (m.matched_sets(), None, gamma, bounds, constants)
        }
        MethodName::Propensity => {
            let k = config.ratio.unwrap_or(1);
            let model = match config.ridge {
                Some(r) => lda_fit(&data, r)?,
                None => lda_fit_auto(&data)?,
            };
            if model.ridge > 0.0 && config.ridge.is_none() {
                warnings.push(format!("pooled covariance was singular; ridge {:e} applied", model.ridge));
            }
            let rm = propensity_match(&data, &model, k)?;
            let pd = propensity_delta(&model, &data, &rm)?;
            let sets = rm.matched_sets();
            let w_norm = norm2(&model.w);
            let gamma_value = if w_norm > 0.0 {
                gamma_hyperplane(&data.pair_of(&sets.controls, &sets.treated)?, w_norm)?
            } else {
                0.0
            };
            let c = 2.0 * p as f64;
            let grid = grid_for(config, c, n0, n1)?;
            let mut bounds: Vec<BoundEntry> = grid
                .iter()
                .map(|&delta| Ok(BoundEntry { statistic: "logit".into(), delta, value: bound(delta, d, c, n0, n1)?, c, d }))
                .collect::<Result<_>>()?;
            bounds.extend(component_bounds(&grid, d, c, p, n0, n1)?);
            warnings.push(format!(
                "the logit-scale bound assumes D absorbs the discriminant norm ||w||_1 = {}",
                fmt_short(lp_norm(&model.w, 1.0))
            ));
            let constants = Constants {
                d,
                c: Some(c),
                k: Some(k),
                ridge: Some(model.ridge),
                w_norm: Some(w_norm),
                m0: rm.m0(),
                m1: rm.m1(),
                ..Constants::default()
            };
            let gamma = GammaReport { class: "hyperplane".into(), value: gamma_value, per_component: None };
            (sets, Some(pd.delta), gamma, bounds, constants)
        }
        MethodName::Kernel => {
            let kernel = config.kernel_spec()?;
            let sets = match config.ratio {
                Some(k) => propensity_match(&data, &lda_fit_auto(&data)?, k)?.matched_sets(),
                None => MatchedSets::full(&data),
            };
            let dh = kernel_delta(&data, &sets, &kernel)?;
            let gamma_value = gamma_mmd(&data.pair_of(&sets.controls, &sets.treated)?, &kernel)?;
            let (c, bounds) = match &config.sobolev {
                Some(s) => {
                    let c = sobolev_covering_exponent(s)?;
                    if matches!(kernel, KernelSpec::Gaussian { .. }) {
                        warnings.push("Gaussian kernel: the Sobolev exponent is used as a proxy".to_string());
                    }
                    let grid = grid_for(config, c, n0, n1)?;
                    let b = grid
                        .iter()
                        .map(|&delta| Ok(BoundEntry { statistic: "kernel".into(), delta, value: kernel_bound(delta, d, s, n0, n1)?, c, d }))
                        .collect::<Result<Vec<_>>>()?;
                    (Some(c), b)
                }
                None => {
                    warnings.push("bound unavailable: no Sobolev spec given for the kernel class".to_string());
                    (None, Vec::new())
                }
            };
            let constants = Constants {
                d,
                c,
                k: config.ratio,
                kernel: Some(kernel),
                sobolev: config.sobolev,
                m0: sets.m0(),
                m1: sets.m1(),
                ..Constants::default()
            };
            let gamma = GammaReport { class: "rkhs_ball".into(), value: gamma_value, per_component: None };
            (sets, Some(dh), gamma, bounds, constants)
        }
    };
    let delta_k = sets.weighted_mean_difference(&data)?;
    let bounds = if normalized {
        bounds
    } else {
        warnings.push("bounds not evaluated: covariates lie outside [0, 1]; rerun with normalization".to_string());
        Vec::new()
    };
    Ok(BalanceReport {
        method: match method {
            MethodName::Cem => "cem",
            MethodName::Propensity => "propensity",
            MethodName::Kernel => "kernel",
        }
        .to_string(),
        n0,
        n1,
        p,
        norms: Norms { l2: lp_norm(&delta_k, 2.0), linf: lp_norm(&delta_k, f64::INFINITY) },
        delta_k,
        delta,
        gamma,
        bounds,
        constants,
        warnings,
    })
}

impl BalanceReport {
    /// Human-readable summary with 4 significant digits.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "method {}  n0={} n1={} p={}  m0={} m1={}", self.method, self.n0, self.n1, self.p, self.constants.m0, self.constants.m1);
        let _ = writeln!(s, "{:>10}  {:>12}", "component", "delta_k");
        for (k, v) in self.delta_k.iter().enumerate() {
            let _ = writeln!(s, "{:>10}  {:>12}", k + 1, fmt_short(*v));
        }
        let _ = writeln!(s, "l2 {}  linf {}", fmt_short(self.norms.l2), fmt_short(self.norms.linf));
        if let Some(d) = self.delta {
            let _ = writeln!(s, "delta {}", fmt_short(d));
        }
        let _ = writeln!(s, "gamma ({}) {}", self.gamma.class, fmt_short(self.gamma.value));
        if !self.bounds.is_empty() {
            let _ = writeln!(s, "{:>10}  {:>12}  {:>12}  {:>6}  {:>6}", "statistic", "delta", "bound", "C", "D");
            for b in &self.bounds {
                let _ = writeln!(
                    s,
                    "{:>10}  {:>12}  {:>12}  {:>6}  {:>6}",
                    b.statistic,
                    fmt_short(b.delta),
                    fmt_short(b.value),
                    fmt_short(b.c),
                    fmt_short(b.d)
                );
            }
        }
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        s
    }
}

/// JSON schema for [`BalanceReport`].
pub const REPORT_SCHEMA: &str = include_str!("../schema/balance_report.schema.json");

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_delta_grid("0:0.3:0.1").unwrap().len(), 4);
        assert_eq!(parse_delta_grid("0.5:0.5:0.1").unwrap(), vec![0.5]);
        assert!(parse_delta_grid("0:1").is_err());
        assert!(parse_delta_grid("1:0:0.1").is_err());
        assert!(parse_delta_grid("0:1:0").is_err());
        assert!(DeltaGrid::List(vec![0.2, 0.1]).values().is_err());
    }

    #[test]
    fn cut_parsing() {
        assert_eq!(parse_cuts("2", 3).unwrap().nominal_cells(), 8);
        let s = parse_cuts("0.5;0.25,0.75", 2).unwrap();
        assert_eq!(s.cuts(), &[vec![0.5], vec![0.25, 0.75]]);
        assert_eq!(parse_cuts("0.5;", 2).unwrap().cuts()[1], Vec::<f64>::new());
        assert!(parse_cuts("a", 1).is_err());
    }

    #[test]
    fn config_merge_prefers_overrides() {
        let base = AnalysisConfig { method: Some(MethodName::Cem), d: Some(2.0), ..Default::default() };
        let over = AnalysisConfig { d: Some(3.0), ..Default::default() };
        let m = base.merged(over);
        assert_eq!(m.method, Some(MethodName::Cem));
        assert_eq!(m.d, Some(3.0));
        assert!(serde_json::from_str::<AnalysisConfig>(r#"{"bogus": 1}"#).is_err());
        let c: AnalysisConfig = serde_json::from_str(r#"{"method":"cem","cuts":"0.5","D":1.5,"delta_grid":"0.1:0.5:0.1"}"#).unwrap();
        assert_eq!(c.cuts, Some(Cuts::Text("0.5".into())));
    }

    #[test]
    fn duplicated_groups_have_zero_imbalance() {
        let z = vec![vec![0.1, 0.2], vec![0.6, 0.7], vec![0.8, 0.3]];
        let data = Dataset::from_groups(&z, &z).unwrap();
        let cfg = AnalysisConfig { method: Some(MethodName::Cem), cuts: Some(Cuts::Cells(2)), ..Default::default() };
        let r = run_balance(&data, &cfg).unwrap();
        assert!(r.delta_k.iter().all(|v| *v == 0.0));
        assert_eq!(r.norms.l2, 0.0);
        assert!(!r.bounds.is_empty());
        assert!(r.warnings.is_empty(), "{:?}", r.warnings);
    }
}
