//! `ipmbalance` command-line tool.
//!
//! Exit codes: 0 success (and bound dominance for `simulate`), 1 usage
//! error, 2 data error, 3 numerical error or failed verification, 4 bound
//! dominance violated.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ipmbalance::bounds::{bound, bound_lp, invert_bound, vc_to_covering_exponent};
use ipmbalance::io::{fmt_f64, fmt_short, ingest_csv, to_json, write_atomic};
use ipmbalance::kernel::SobolevSpec;
use ipmbalance::oracle::{covering_estimate, greedy_cover, shatter_check, vc_dim_search, ClassKind};
use ipmbalance::report::{run_balance, AnalysisConfig, Cuts, DeltaGrid, KernelName, MethodName};
use ipmbalance::sim::{run_experiment, trial_rng, ScenarioSpec};
use ipmbalance::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_DOMINANCE: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "ipmbalance", version, about = "Covariate balance diagnostics with finite-sample tail bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Match a dataset and report balance quantities with their tail bounds.
    Balance(BalanceArgs),
    /// Run a seeded Monte Carlo scenario and compare tail frequencies with the bound.
    Simulate(SimulateArgs),
    /// Evaluate the tail bound B(δ, D, C) directly.
    Bound(BoundArgs),
    /// Run the brute-force shattering, VC-dimension and covering checks.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct BalanceArgs {
    /// JSON analysis config; flags override its fields.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// CSV with header y,t,z1,...,zp.
    #[arg(long, value_name = "PATH")]
    input: Option<PathBuf>,
    #[arg(long, value_parser = ["cem", "propensity", "kernel"])]
    method: Option<String>,
    /// Cells per covariate ("3") or cutpoints per covariate ("0.5;0.25,0.75").
    #[arg(long, value_name = "SPEC")]
    cuts: Option<String>,
    /// Controls matched to each treated unit.
    #[arg(long, value_name = "K")]
    ratio: Option<usize>,
    /// Ridge added to the pooled covariance (default: only if singular).
    #[arg(long, value_name = "X")]
    ridge: Option<f64>,
    #[arg(long, value_parser = ["gaussian", "poly", "laplacian"])]
    kernel: Option<String>,
    #[arg(long, value_name = "X")]
    sigma: Option<f64>,
    #[arg(long, value_name = "N")]
    degree: Option<u32>,
    /// Polynomial kernel offset.
    #[arg(long, value_name = "X")]
    offset: Option<f64>,
    /// Sobolev class for the kernel bound, as "m,q,dim".
    #[arg(long, value_name = "M,Q,DIM")]
    sobolev: Option<String>,
    /// Bound constant D.
    #[arg(long = "D", value_name = "X")]
    d: Option<f64>,
    #[arg(long, value_name = "X")]
    kappa: Option<f64>,
    /// δ grid as a:b:step.
    #[arg(long, value_name = "A:B:STEP")]
    delta_grid: Option<String>,
    /// Min-max scale covariates to [0, 1] before matching.
    #[arg(long)]
    normalize: bool,
    /// CEM: use the nominal cell count of the coarsening instead of the observed one.
    #[arg(long)]
    nominal_r: bool,
    /// Where to write the JSON report.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Scenario JSON.
    #[arg(long, value_name = "PATH", alias = "config")]
    scenario: PathBuf,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    #[arg(long, value_name = "N")]
    trials: Option<usize>,
    /// Writes PREFIX.csv and PREFIX.json.
    #[arg(long, value_name = "PATH", default_value = "tail")]
    out_prefix: PathBuf,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct BoundArgs {
    #[arg(long, value_name = "X")]
    delta: Option<f64>,
    #[arg(long = "D", value_name = "X", default_value_t = 1.0)]
    d: f64,
    /// Covering exponent C.
    #[arg(long = "C", value_name = "X", conflicts_with = "vc")]
    c: Option<f64>,
    /// VC dimension; C = 2v - 2.
    #[arg(long, value_name = "V")]
    vc: Option<u32>,
    #[arg(long, value_name = "N")]
    n0: usize,
    #[arg(long, value_name = "N")]
    n1: usize,
    /// Norm of a d-vector summary ("inf" for the max norm); needs --dim.
    #[arg(long, value_name = "P", requires = "dim")]
    p_norm: Option<String>,
    #[arg(long, value_name = "D")]
    dim: Option<usize>,
    /// Print the smallest δ on the decreasing branch with bound <= TARGET instead.
    #[arg(long, value_name = "TARGET", conflicts_with = "delta")]
    invert: Option<f64>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Random configurations tried per size in the VC search.
    #[arg(long, value_name = "N", default_value_t = 20)]
    trials: usize,
    #[arg(long, value_name = "N", default_value_t = 1)]
    seed: u64,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Numerical(_)
            | Error::SingularCovariance { .. }
            | Error::Unreachable { .. }
            | Error::ExperimentDegenerate { .. } => EXIT_NUMERICAL,
            _ => EXIT_DATA,
        };
        Failure { code, message: e.to_string() }
    }
}

fn context(what: &str) -> impl Fn(Error) -> Failure + '_ {
    move |e| {
        let mut f = Failure::from(e);
        f.message = format!("{what}: {}", f.message);
        f
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{what} {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{what} {}: {e}", path.display())))
}

fn parse_sobolev(text: &str) -> Result<SobolevSpec, Failure> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let bad = || Failure::usage(format!("--sobolev expects m,q,dim, got {text:?}"));
    let [m, q, dim] = parts.as_slice() else { return Err(bad()) };
    let spec = SobolevSpec::new(m.parse().map_err(|_| bad())?, q.parse().map_err(|_| bad())?, dim.parse().map_err(|_| bad())?);
    spec.map_err(|e| Failure::usage(e.to_string()))
}

fn balance(args: BalanceArgs) -> Result<(), Failure> {
    let base: AnalysisConfig = match &args.config {
        Some(p) => read_json(p, "config")?,
        None => AnalysisConfig::default(),
    };
    let flags = AnalysisConfig {
        input: args.input,
        method: args.method.as_deref().map(str::parse::<MethodName>).transpose().map_err(|e| Failure::usage(e.to_string()))?,
        cuts: args.cuts.map(Cuts::Text),
        ratio: args.ratio,
        ridge: args.ridge,
        kernel: args.kernel.as_deref().map(str::parse::<KernelName>).transpose().map_err(|e| Failure::usage(e.to_string()))?,
        sigma: args.sigma,
        degree: args.degree,
        offset: args.offset,
        sobolev: args.sobolev.as_deref().map(parse_sobolev).transpose()?,
        d: args.d,
        kappa: args.kappa,
        delta_grid: args.delta_grid.map(DeltaGrid::Range),
        normalize: args.normalize.then_some(true),
        nominal_r: args.nominal_r.then_some(true),
        out: args.out,
    };
    let config = base.merged(flags);
    let input = config.input.clone().ok_or_else(|| Failure::usage("no input file; pass --input or set \"input\" in the config"))?;
    if config.method.is_none() {
        return Err(Failure::usage("no method; pass --method or set \"method\" in the config"));
    }
    let data = ingest_csv(&input).map_err(context(&input.display().to_string()))?;
    let report = run_balance(&data, &config).map_err(context("balance"))?;
    print!("{}", report.to_table());
    if let Some(out) = &config.out {
        write_atomic(out, to_json(&report)?.as_bytes()).map_err(context(&out.display().to_string()))?;
    }
    Ok(())
}

fn with_suffix(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(ext);
    PathBuf::from(s)
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    let mut spec: ScenarioSpec = read_json(&args.scenario, "scenario")?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(trials) = args.trials {
        spec.trials = trials;
    }
    let curve = match args.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Failure::usage(format!("--threads: {e}")))?;
            pool.install(|| run_experiment(&spec))
        }
        None => run_experiment(&spec),
    }
    .map_err(context("simulate"))?;
    let csv_path = with_suffix(&args.out_prefix, ".csv");
    let json_path = with_suffix(&args.out_prefix, ".json");
    write_atomic(&csv_path, curve.to_csv().as_bytes()).map_err(context(&csv_path.display().to_string()))?;
    write_atomic(&json_path, to_json(&curve)?.as_bytes()).map_err(context(&json_path.display().to_string()))?;
    println!(
        "{} ({}): {} trials, {} failed, {} clipped values",
        if curve.scenario.is_empty() { "scenario" } else { &curve.scenario },
        curve.method,
        curve.trials,
        curve.failed_trials,
        curve.clipped_values
    );
    println!("{:>12}  {:>10}  {:>10}  {:>12}  ", "delta", "emp_freq", "se", "bound");
    for r in &curve.rows {
        let flag = if r.vacuous {
            "vacuous"
        } else if r.dominated() {
            "ok"
        } else {
            "VIOLATED"
        };
        println!("{:>12}  {:>10}  {:>10}  {:>12}  {flag}", fmt_short(r.delta), fmt_short(r.emp_freq), fmt_short(r.se), fmt_short(r.bound));
    }
    if curve.dominance_holds() {
        Ok(())
    } else {
        Err(Failure { code: EXIT_DOMINANCE, message: format!("bound dominance violated at {} grid points", curve.violations().len()) })
    }
}

fn bound_cmd(args: BoundArgs) -> Result<(), Failure> {
    let c = match (args.c, args.vc) {
        (Some(c), None) => c,
        (None, Some(v)) => vc_to_covering_exponent(v)?,
        _ => return Err(Failure::usage("pass exactly one of --C and --vc")),
    };
    if let Some(target) = args.invert {
        let inv = invert_bound(target, args.d, c, args.n0, args.n1)?;
        println!("{}{}", fmt_f64(inv.delta), if inv.at_mode { " (at mode)" } else { "" });
        return Ok(());
    }
    let delta = args.delta.ok_or_else(|| Failure::usage("pass --delta or --invert"))?;
    let value = match (args.p_norm.as_deref(), args.dim) {
        (None, None) => bound(delta, args.d, c, args.n0, args.n1)?,
        (Some(p), Some(dim)) => {
            let p = if p == "inf" { f64::INFINITY } else { p.parse().map_err(|_| Failure::usage(format!("bad --p-norm {p:?}")))? };
            bound_lp(delta, p, dim, args.d, c, args.n0, args.n1)?
        }
        (None, Some(dim)) => bound_lp(delta, f64::INFINITY, dim, args.d, c, args.n0, args.n1)?,
        (Some(_), None) => return Err(Failure::usage("--p-norm needs --dim")),
    };
    println!("{}", fmt_f64(value));
    Ok(())
}

fn verify(args: VerifyArgs) -> Result<(), Failure> {
    use rand::Rng;
    if args.trials == 0 {
        return Err(Failure::usage("--trials must be >= 1"));
    }
    let mut rng = trial_rng(args.seed, 0);
    let mut all_ok = true;
    let mut report = |name: String, ok: bool| {
        println!("{} {name}", if ok { "PASS" } else { "FAIL" });
        all_ok &= ok;
    };
    for p in 1..=3usize {
        let mut sampler = |n: usize| -> Vec<Vec<f64>> { (0..n).map(|_| (0..p).map(|_| rng.random::<f64>()).collect()).collect() };
        let found = vc_dim_search(ClassKind::Hyperplane(p), &mut sampler, (p + 3).min(12), args.trials)?;
        report(format!("hyperplane p={p}: VC search found {found}, expected {}", p + 1), found == p + 1);
    }
    for r in 2..=4usize {
        let mut sampler = |n: usize| -> Vec<Vec<f64>> { (0..n).map(|_| vec![rng.random::<f64>()]).collect() };
        let found = vc_dim_search(ClassKind::Partition(r), &mut sampler, r + 2, args.trials)?;
        report(format!("partition R={r}: VC search found {found}, expected {r}"), found == r);
    }
    let square = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]];
    report("4 points in convex position are not shattered by 2-d hyperplanes".into(), !shatter_check(ClassKind::Hyperplane(2), &square)?);
    let pair = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
    report("two functions 3ε apart need two balls".into(), greedy_cover(&pair, 1.0 / 3.0 - 1e-12, 2.0)? == 2);
    let sample: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 / 9.0]).collect();
    let grid: Vec<f64> = (0..=40).map(|i| -1.0 + i as f64 * 0.05).collect();
    let family: Vec<Box<dyn Fn(&[f64]) -> f64>> = grid.iter().map(|&w| Box::new(move |z: &[f64]| w * z[0]) as Box<dyn Fn(&[f64]) -> f64>).collect();
    let counts: Vec<usize> = [0.2, 0.1, 0.05].iter().map(|&e| covering_estimate(&family, &sample, e, 2.0)).collect::<Result<_, _>>()?;
    report(format!("greedy covering counts nondecreasing as ε shrinks: {counts:?}"), counts.windows(2).all(|w| w[0] <= w[1]));
    if all_ok {
        Ok(())
    } else {
        Err(Failure { code: EXIT_NUMERICAL, message: "verification failed".into() })
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Balance(a) => balance(a),
        Command::Simulate(a) => simulate(a),
        Command::Bound(a) => bound_cmd(a),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
