//! Command-line surface: spec generation, equilibrium solving, simulation,
//! paired comparison, and invariant-distribution analysis.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use carealloc::adp::{self, CandidateSet, MAX_ROUNDS};
use carealloc::dynamics;
use carealloc::measures::AtomicMeasure;
use carealloc::model::{self, ModelSpec};
use carealloc::sim::{paired_compare, run_episode, Policy, SimConfig};

#[derive(Parser)]
#[command(name = "carealloc", version, about = "Capacity-constrained treatment allocation: solver and cohort simulator")]
struct Cli {
    /// Cap on worker threads for parallel replications.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Suppress progress logs on standard error.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic model spec file.
    Gen(GenArgs),
    /// Solve for bias weights and the mortality threshold.
    Solve(SolveArgs),
    /// Simulate one policy and report cohort outcomes per horizon.
    Simulate(SimulateArgs),
    /// Run a paired policy comparison per horizon (CSV, one row per horizon).
    Compare(CompareArgs),
    /// Compute the invariant distribution of the uncontrolled chain.
    Invariant(InvariantArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    seed: u64,
    /// Covariate dimension (>= 1).
    #[arg(long)]
    p: usize,
    /// Number of basis functions (>= 1).
    #[arg(long)]
    k: usize,
    /// Output spec path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    capacity_ratio: f64,
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    /// Write the weights document here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, value_enum, default_value_t = PolicyKind::Myopic)]
    policy: PolicyKind,
    /// Comma-separated horizons in 90-day periods.
    #[arg(long, value_delimiter = ',', required = true)]
    horizons: Vec<usize>,
    #[arg(long, default_value_t = 500)]
    replications: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    m: usize,
    #[arg(long, default_value_t = 1)]
    resolve_every: usize,
    #[arg(long, default_value_t = 0.5)]
    cohort_mix: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, value_enum, default_value_t = PolicyKind::Adp)]
    policy_a: PolicyKind,
    #[arg(long, value_enum, default_value_t = PolicyKind::Myopic)]
    policy_b: PolicyKind,
    #[arg(long, value_delimiter = ',', required = true)]
    horizons: Vec<usize>,
    #[arg(long, default_value_t = 500)]
    replications: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    m: usize,
    #[arg(long, default_value_t = 1)]
    resolve_every: usize,
    #[arg(long, default_value_t = 0.5)]
    cohort_mix: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InvariantArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyKind {
    None,
    Myopic,
    Adp,
}

impl From<PolicyKind> for Policy {
    fn from(k: PolicyKind) -> Policy {
        match k {
            PolicyKind::None => Policy::None,
            PolicyKind::Myopic => Policy::Myopic,
            PolicyKind::Adp => Policy::Adp,
        }
    }
}

impl PolicyKind {
    fn name(self) -> &'static str {
        match self {
            PolicyKind::None => "none",
            PolicyKind::Myopic => "myopic",
            PolicyKind::Adp => "adp",
        }
    }
}

/// Provenance record written next to every output file.
#[derive(Serialize)]
struct RunManifest {
    command: String,
    spec: Option<String>,
    config_hash: String,
    seed: Option<u64>,
    version: String,
    unix_time: u64,
    elapsed_seconds: f64,
    outputs: Vec<String>,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn write_manifest(
    command: &str,
    spec: Option<&Path>,
    config: &str,
    seed: Option<u64>,
    started: Instant,
    out: &Path,
) -> std::io::Result<()> {
    let manifest = RunManifest {
        command: command.to_string(),
        spec: spec.map(|p| p.display().to_string()),
        config_hash: format!("{:016x}", fnv1a(config.as_bytes())),
        seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        unix_time: SystemTime::now().duration_since(UNIX_EPOCH).unwrap().as_secs(),
        elapsed_seconds: started.elapsed().as_secs_f64(),
        outputs: vec![out.display().to_string()],
    };
    let path = out.with_extension(match out.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{ext}.manifest.json"),
        None => "manifest.json".to_string(),
    });
    std::fs::write(path, serde_json::to_string_pretty(&manifest).expect("manifest serializes"))
}

/// Exit codes: 0 success, 1 numerical or convergence failure, 2 usage or
/// validation error (including unreadable inputs).
enum CliError {
    Numerical(String),
    Usage(String),
}

impl From<model::ModelError> for CliError {
    fn from(e: model::ModelError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<adp::AdpError> for CliError {
    fn from(e: adp::AdpError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<carealloc::sim::SimError> for CliError {
    fn from(e: carealloc::sim::SimError) -> Self {
        match e {
            carealloc::sim::SimError::Config(msg) => CliError::Usage(msg),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if rayon::ThreadPoolBuilder::new().num_threads(t).build_global().is_err() {
            eprintln!("carealloc: thread pool already initialized");
        }
    }
    let quiet = cli.quiet;
    let result = match cli.command {
        Command::Gen(args) => cmd_gen(args, quiet),
        Command::Solve(args) => cmd_solve(args, quiet),
        Command::Simulate(args) => cmd_simulate(args, quiet),
        Command::Compare(args) => cmd_compare(args, quiet),
        Command::Invariant(args) => cmd_invariant(args, quiet),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Numerical(msg)) => {
            eprintln!("carealloc: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("carealloc: {msg}");
            ExitCode::from(2)
        }
    }
}

fn cmd_gen(args: GenArgs, quiet: bool) -> Result<(), CliError> {
    let started = Instant::now();
    if args.p == 0 || args.k == 0 {
        return Err(CliError::Usage("--p and --k must be at least 1".into()));
    }
    let spec = model::gen_synthetic(args.seed, args.p, args.k);
    std::fs::write(&args.out, spec.to_json())?;
    let config = format!("gen seed={} p={} k={}", args.seed, args.p, args.k);
    write_manifest("gen", None, &config, Some(args.seed), started, &args.out)?;
    if !quiet {
        eprintln!("wrote {} (p = {}, K = {})", args.out.display(), args.p, args.k);
    }
    Ok(())
}

#[derive(Serialize)]
struct WeightsDoc {
    delta_star: f64,
    lambda: f64,
    w: Vec<f64>,
    zeta0: f64,
    zeta1: f64,
    objective: f64,
    rounds: usize,
    generated_rows: usize,
    duality_gap: Option<f64>,
}

fn cmd_solve(args: SolveArgs, quiet: bool) -> Result<(), CliError> {
    let started = Instant::now();
    let spec = ModelSpec::load(&args.spec)?;
    if !(0.0..=1.0).contains(&args.capacity_ratio) {
        return Err(CliError::Usage(format!(
            "--capacity-ratio {} outside [0, 1]",
            args.capacity_ratio
        )));
    }
    let cand = CandidateSet::default_for(&spec, &[]);
    if !quiet {
        eprintln!("solving over {} candidates", cand.points().len());
    }
    let delta_star = adp::mortality_threshold(&spec, &cand, args.capacity_ratio)?;
    let bw = adp::row_generation(&spec, &cand, delta_star, args.capacity_ratio, args.tol, MAX_ROUNDS)?;
    let duality_gap = match adp::duality_gap_check(&spec, &cand, &bw, delta_star, args.capacity_ratio) {
        Ok(gap) => Some(gap),
        Err(adp::AdpError::PrimalInfeasible) => {
            if !quiet {
                eprintln!("finite primal infeasible over this candidate set; gap not available");
            }
            None
        }
        Err(e) => return Err(e.into()),
    };
    let doc = WeightsDoc {
        delta_star,
        lambda: bw.lambda,
        w: bw.w.clone(),
        zeta0: bw.zeta0,
        zeta1: bw.zeta1,
        objective: bw.objective,
        rounds: bw.rounds,
        generated_rows: bw.generated_rows.len(),
        duality_gap,
    };
    let text = serde_json::to_string_pretty(&doc).expect("weights document serializes");
    match &args.out {
        Some(path) => {
            std::fs::write(path, &text)?;
            let config = format!(
                "solve spec={} capacity_ratio={} tol={}",
                args.spec.display(),
                args.capacity_ratio,
                args.tol
            );
            write_manifest("solve", Some(&args.spec), &config, None, started, path)?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn sim_config(
    n: usize,
    m: usize,
    horizon: usize,
    replications: usize,
    seed: u64,
    resolve_every: usize,
    cohort_mix: f64,
) -> SimConfig {
    SimConfig {
        n,
        m,
        horizon,
        replications,
        base_seed: seed,
        resolve_every,
        cohort_mix,
        ..SimConfig::default()
    }
}

fn cmd_simulate(args: SimulateArgs, quiet: bool) -> Result<(), CliError> {
    let started = Instant::now();
    let spec = ModelSpec::load(&args.spec)?;
    let policy: Policy = args.policy.into();
    let mut csv = String::from("horizon,policy,home_days_per_patient_period,deaths,treated_patient_periods\n");
    for &horizon in &args.horizons {
        let cfg = sim_config(args.n, args.m, horizon, args.replications, args.seed, args.resolve_every, args.cohort_mix);
        cfg.validate()?;
        let mut home = 0.0;
        let mut deaths = 0.0;
        let mut tpp = 0.0;
        for r in 0..args.replications as u64 {
            let ep = run_episode(&spec, &cfg, &policy, r)?;
            home += ep.home_days_per_patient_period;
            deaths += ep.deaths as f64;
            tpp += ep.treated_patient_periods as f64;
        }
        let r = args.replications as f64;
        csv.push_str(&format!(
            "{},{},{:.6},{:.6},{:.6}\n",
            horizon,
            args.policy.name(),
            home / r,
            deaths / r,
            tpp / r
        ));
        if !quiet {
            eprintln!("horizon {horizon}: done");
        }
    }
    emit_csv(&csv, args.out.as_deref(), "simulate", &args.spec, args.seed, started)
}

fn cmd_compare(args: CompareArgs, quiet: bool) -> Result<(), CliError> {
    let started = Instant::now();
    let spec = ModelSpec::load(&args.spec)?;
    if args.replications < 2 {
        return Err(CliError::Usage("--replications must be at least 2 for a paired t-test".into()));
    }
    let a: Policy = args.policy_a.into();
    let b: Policy = args.policy_b.into();
    let mut csv = String::from("horizon,mean_a,mean_b,mean_diff,annual_gain_per_1000,t_statistic,p_value\n");
    for &horizon in &args.horizons {
        let cfg = sim_config(args.n, args.m, horizon, args.replications, args.seed, args.resolve_every, args.cohort_mix);
        cfg.validate()?;
        let cmp = paired_compare(&spec, &cfg, &a, &b)?;
        csv.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            horizon,
            cmp.mean_a,
            cmp.mean_b,
            cmp.mean_diff,
            cmp.annual_gain_per_1000,
            cmp.t_statistic,
            cmp.p_value
        ));
        if !quiet {
            eprintln!(
                "horizon {horizon}: diff {:.6} (t = {:.3}, p = {:.4})",
                cmp.mean_diff, cmp.t_statistic, cmp.p_value
            );
        }
    }
    emit_csv(&csv, args.out.as_deref(), "compare", &args.spec, args.seed, started)
}

fn emit_csv(
    csv: &str,
    out: Option<&Path>,
    command: &str,
    spec: &Path,
    seed: u64,
    started: Instant,
) -> Result<(), CliError> {
    match out {
        Some(path) => {
            std::fs::write(path, csv)?;
            let config = format!("{command} spec={} seed={seed}", spec.display());
            write_manifest(command, Some(spec), &config, Some(seed), started, path)?;
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_invariant(args: InvariantArgs, quiet: bool) -> Result<(), CliError> {
    let spec = ModelSpec::load(&args.spec)?;
    let mu0: AtomicMeasure = spec.inflow.clone();
    let (mu, iterations) = dynamics::find_invariant(&spec, &mu0, args.tol, args.max_iter)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let step = dynamics::uncontrolled_step(&spec, &mu);
    let tv = carealloc::measures::total_variation(&step, &mu);
    if !quiet {
        eprintln!("converged in {iterations} iterations, final total variation {tv:.3e}");
    }
    println!("iterations,{iterations}");
    println!("total_variation,{tv:.17e}");
    print!("{}", mu.to_table());
    Ok(())
}
