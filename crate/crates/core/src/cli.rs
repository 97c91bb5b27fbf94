//! The `edgecache` command line.
//!
//! ```text
//! edgecache trace poisson   --config scenario.json --out DIR [--seed N] [--horizon S]
//! edgecache trace community --config community.json --out DIR [--seed N]
//! edgecache analyze  --config scenario.json --out DIR [--ttl-grid ...] [--lambda-d X --arrivals T:D,...]
//! edgecache simulate --config scenario.json --out DIR [--trace FILE | --community-config FILE] [--reps N] [--validate]
//! edgecache optimize --config scenario.json --out DIR [--mode sc-only|mn-only|joint] [--sweep-ttl ...] [--sweep-pc ...]
//! edgecache report   --input FILE... --out DIR
//! ```
//!
//! Every command writes `manifest.json` into its output directory. Replaying
//! the recorded `argv` (see [`rerun_manifest`]) reproduces the CSV outputs
//! byte for byte.
//!
//! Exit status: 0 success, 2 input error, 3 infeasible scenario, 4 numerical
//! non-convergence (outputs are still written).

mod report;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analytics::{
    content_cost, delivery_probability, expected_delay, holders_requesters_at, integrate_generalized, no_offload_cost,
    relative_cost_decrease, sc_delivery_fraction, uniform_grid, ArrivalSchedule, Trajectory,
};
use crate::mctrace::{
    generate_community_trace, generate_poisson_trace, sample_rate_matrix, trace_stats, CommunityParams, ContactTrace, GeneratorSpec,
    PoissonSpec, TraceSidecar,
};
use crate::model::{ContentClass, EffectiveState, Placement, ScenarioConfig, ScenarioFile};
use crate::optimizer::{
    optimal_mn_allocation, optimal_sc_allocation, round_placement, save_allocation_csv, solve_problem1_numeric, total_cost, SolveMode,
    SolverOptions, SolverReport,
};
use crate::rng::derive_seed;
use crate::sim::{run_replications, TraceSource};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_NONCONVERGENCE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "edgecache", version, about = "Content offloading through small cells and D2D relays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic contact trace.
    Trace {
        #[command(subcommand)]
        kind: TraceKind,
    },
    /// Evaluate the mean-field predictions of a scenario.
    Analyze(AnalyzeArgs),
    /// Monte Carlo dissemination of one content.
    Simulate(SimulateArgs),
    /// Cost-minimizing initial placement.
    Optimize(OptimizeArgs),
    /// Render CSV outputs as SVG line charts.
    Report(ReportArgs),
}

#[derive(Debug, Subcommand)]
enum TraceKind {
    /// Poisson meetings with gamma-distributed pair rates from a scenario file.
    Poisson(TracePoissonArgs),
    /// Community random-waypoint mobility.
    Community(TraceCommunityArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Input JSON document.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct TracePoissonArgs {
    #[command(flatten)]
    common: Common,
    /// Trace length in seconds; defaults to the latest content expiry.
    #[arg(long)]
    horizon: Option<f64>,
}

#[derive(Debug, Args)]
struct TraceCommunityArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    common: Common,
    /// Content index for the trajectory and probability tables.
    #[arg(long, default_value_t = 0)]
    content: usize,
    /// Points of the time grid on [0, TTL].
    #[arg(long, default_value_t = 101)]
    points: usize,
    /// TTL values of the delay and cost tables (comma separated).
    #[arg(long, value_delimiter = ',')]
    ttl_grid: Vec<f64>,
    /// Content drop rate of MN holders; enables the generalized integrator.
    #[arg(long)]
    lambda_d: Option<f64>,
    /// Bulk requester arrivals `tau:delta,...`; enables the generalized integrator.
    #[arg(long)]
    arrivals: Option<String>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 0)]
    content: usize,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, default_value_t = 51)]
    points: usize,
    /// Fixed contact trace (CSV with its `.json` sidecar).
    #[arg(long, conflicts_with = "community_config")]
    trace: Option<PathBuf>,
    /// Draw a community-mobility trace per replication from this config.
    #[arg(long)]
    community_config: Option<PathBuf>,
    /// Add a `p_theory` column with the mean-field prediction.
    #[arg(long)]
    validate: bool,
    /// Use the meeting rate measured on the trace for the theory column.
    #[arg(long, requires = "validate")]
    estimate_mu: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Method {
    /// Closed form where one exists, numeric otherwise.
    Auto,
    Closed,
    Numeric,
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value_t = SolveMode::Joint)]
    mode: SolveMode,
    #[arg(long, value_enum, default_value_t = Method::Auto)]
    method: Method,
    #[arg(long, default_value_t = 8)]
    starts: usize,
    #[arg(long, default_value_t = 1000)]
    max_sweeps: usize,
    /// TTL values of an RCD sweep (comma separated); writes sweep.csv.
    #[arg(long, value_delimiter = ',')]
    sweep_ttl: Vec<f64>,
    /// Cooperation probabilities of an RCD sweep (comma separated).
    #[arg(long, value_delimiter = ',')]
    sweep_pc: Vec<f64>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// CSV files to plot; the first column is the x axis.
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Plot style.
    #[arg(long, value_enum, default_value_t = report::PlotKind::Line)]
    plot: report::PlotKind,
}

/// What a command did, recorded in `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Arguments after the program name, replayable as-is.
    pub argv: Vec<String>,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub version: String,
    pub runtime_s: f64,
}

struct Outcome {
    command: &'static str,
    config: serde_json::Value,
    seeds: Vec<u64>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    out_dir: PathBuf,
    exit: i32,
}

/// Entry point of the binary: parses the process arguments and returns the
/// exit status.
pub fn main() -> i32 {
    let args: Vec<String> = std::env::args().skip(1).collect();
    run(&args)
}

/// Run the command line on `args` (without the program name).
pub fn run<S: AsRef<str>>(args: &[S]) -> i32 {
    let argv: Vec<String> = args.iter().map(|s| s.as_ref().to_string()).collect();
    let cli = match Cli::try_parse_from(std::iter::once("edgecache".to_string()).chain(argv.iter().cloned())) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let started = Instant::now();
    let result = match cli.command {
        Command::Trace { kind: TraceKind::Poisson(a) } => cmd_trace_poisson(a),
        Command::Trace { kind: TraceKind::Community(a) } => cmd_trace_community(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Optimize(a) => cmd_optimize(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(outcome) => {
            let manifest = RunManifest {
                command: outcome.command.to_string(),
                argv,
                config: outcome.config,
                seeds: outcome.seeds,
                inputs: outcome.inputs.iter().map(|p| p.display().to_string()).collect(),
                outputs: outcome.outputs.iter().map(|p| p.display().to_string()).collect(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                runtime_s: started.elapsed().as_secs_f64(),
            };
            let path = outcome.out_dir.join("manifest.json");
            let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
            if let Err(e) = std::fs::write(&path, text) {
                eprintln!("error: {}: {e}", path.display());
                return EXIT_INPUT;
            }
            outcome.exit
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Infeasible(_) | Error::NotCostMeaningful { .. } => EXIT_INFEASIBLE,
        _ => EXIT_INPUT,
    }
}

/// Replay the command recorded in a manifest, optionally redirecting its
/// output directory.
pub fn rerun_manifest(path: impl AsRef<Path>, out: Option<&Path>) -> Result<i32> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let m: RunManifest = serde_json::from_str(&text).map_err(|source| Error::Json { context: path.display().to_string(), source })?;
    let mut argv = m.argv.clone();
    if let Some(out) = out {
        let pos = argv.iter().position(|a| a == "--out").ok_or_else(|| Error::invalid("manifest argv has no --out flag"))?;
        argv[pos + 1] = out.display().to_string();
    }
    Ok(run(&argv))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn to_value<T: Serialize>(x: &T) -> serde_json::Value {
    serde_json::to_value(x).expect("config serializes")
}

fn load_scenario(path: &Path) -> Result<ScenarioFile> {
    let file = ScenarioFile::load(path)?;
    for w in file.costs.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(file)
}

fn load_community(path: &Path) -> Result<CommunityParams> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json { context: path.display().to_string(), source })
}

fn pick_content(file: &ScenarioFile, idx: usize) -> Result<&ContentClass> {
    file.contents.get(idx).ok_or_else(|| Error::invalid(format!("content index {idx} out of range ({} contents)", file.contents.len())))
}

fn cmd_trace_poisson(a: TracePoissonArgs) -> Result<Outcome> {
    let file = load_scenario(&a.common.config)?;
    let cfg = file.scenario;
    let horizon = match a.horizon {
        Some(h) => h,
        None => file.contents.iter().map(|c| c.creation_time + c.ttl).fold(0.0, f64::max),
    };
    let spec =
        PoissonSpec { n_mn: cfg.n_mn as usize, n_sc: cfg.n_sc as usize, mu_lambda: cfg.mu_lambda, cv_lambda: cfg.cv_lambda, horizon };
    let rates = sample_rate_matrix(spec.n_mn, spec.n_sc, spec.mu_lambda, spec.cv_lambda, derive_seed(a.common.seed, 0))?;
    let trace = generate_poisson_trace(&rates, horizon, derive_seed(a.common.seed, 1))?;
    let sidecar = TraceSidecar { n_mn: spec.n_mn, n_sc: spec.n_sc, horizon, seed: a.common.seed, generator: GeneratorSpec::Poisson(spec) };
    trace.save(&a.common.out, &sidecar)?;
    Ok(Outcome {
        command: "trace poisson",
        config: to_value(&sidecar),
        seeds: vec![a.common.seed],
        inputs: vec![a.common.config],
        outputs: vec![a.common.out.join("trace.csv"), a.common.out.join("trace.json")],
        out_dir: a.common.out,
        exit: EXIT_OK,
    })
}

fn cmd_trace_community(a: TraceCommunityArgs) -> Result<Outcome> {
    let params = load_community(&a.common.config)?;
    let trace = generate_community_trace(&params, a.common.seed)?;
    let sidecar = TraceSidecar {
        n_mn: trace.n_mn,
        n_sc: trace.n_sc,
        horizon: trace.horizon,
        seed: a.common.seed,
        generator: GeneratorSpec::Community(params),
    };
    trace.save(&a.common.out, &sidecar)?;
    Ok(Outcome {
        command: "trace community",
        config: to_value(&sidecar),
        seeds: vec![a.common.seed],
        inputs: vec![a.common.config],
        outputs: vec![a.common.out.join("trace.csv"), a.common.out.join("trace.json")],
        out_dir: a.common.out,
        exit: EXIT_OK,
    })
}

/// Placement used for cost tables: the file's own, or the cost-minimizing one.
fn placement_for(contents: &[ContentClass], file: &ScenarioFile, cfg: &ScenarioConfig, warm: Option<&Placement>) -> Result<Placement> {
    if let Some(p) = &file.placement {
        return Ok(p.clone());
    }
    if cfg.p_c == 0.0 {
        return Ok(optimal_sc_allocation(contents, &file.costs, cfg)?.0);
    }
    let opts = SolverOptions { warm_starts: warm.into_iter().cloned().collect(), ..SolverOptions::default() };
    Ok(solve_problem1_numeric(contents, &file.costs, cfg, SolveMode::Joint, &opts)?.placement)
}

fn cmd_analyze(a: AnalyzeArgs) -> Result<Outcome> {
    let file = load_scenario(&a.common.config)?;
    let violations = file.violations();
    if !violations.is_empty() {
        return Err(Error::Infeasible(violations));
    }
    let cfg = file.scenario;
    let content = pick_content(&file, a.content)?.clone();
    let placement = file.placement_or_zero().get(a.content);
    let es = EffectiveState::derive(cfg.p_c, &content, placement);
    let mu = cfg.mu_lambda;
    let out = &a.common.out;
    create_dir(out)?;
    let mut outputs = Vec::new();

    let grid = uniform_grid(content.ttl, a.points.max(2));
    let traj = Trajectory::closed_form(es, cfg.p_c, mu, &grid);
    let path = out.join("trajectory.csv");
    traj.save_csv(&path)?;
    outputs.push(path);

    let mut prob = String::from("t,p\n");
    for &t in &grid {
        writeln!(prob, "{t},{}", delivery_probability(t, es, cfg.p_c, mu)).unwrap();
    }
    let path = out.join("probability.csv");
    write_text(&path, &prob)?;
    outputs.push(path);

    let max_ttl = file.contents.iter().map(|c| c.ttl).fold(0.0, f64::max);
    let ttl_grid = if a.ttl_grid.is_empty() { uniform_grid(2.0 * max_ttl, 11) } else { a.ttl_grid.clone() };
    if ttl_grid.iter().any(|&t| !(t >= 0.0)) {
        return Err(Error::invalid("ttl grid values must be nonnegative"));
    }

    let mut delay = String::from("ttl,expected_delay,p_ttl,sc_fraction\n");
    for &ttl in &ttl_grid {
        let q = if ttl > 0.0 && es.h0 > 0.0 { sc_delivery_fraction(ttl, placement.h_sc0, es, cfg.p_c, mu) } else { 0.0 };
        writeln!(delay, "{ttl},{},{},{q}", expected_delay(ttl, es, cfg.p_c, mu), delivery_probability(ttl, es, cfg.p_c, mu)).unwrap();
    }
    let path = out.join("delay.csv");
    write_text(&path, &delay)?;
    outputs.push(path);

    let mut cost = String::from("ttl,cost_with,cost_without,rcd\n");
    let mut warm: Option<Placement> = None;
    for &ttl in &ttl_grid {
        let contents: Vec<ContentClass> = file.contents.iter().map(|c| ContentClass { ttl, ..c.clone() }).collect();
        let p = placement_for(&contents, &file, &cfg, warm.as_ref())?;
        let with = total_cost(&contents, &p, &cfg, &file.costs);
        let without = no_offload_cost(&contents, &file.costs);
        let rcd = relative_cost_decrease(without, with)?;
        writeln!(cost, "{ttl},{with},{without},{rcd}").unwrap();
        warm = Some(p);
    }
    let path = out.join("cost.csv");
    write_text(&path, &cost)?;
    outputs.push(path);

    if a.lambda_d.is_some() || a.arrivals.is_some() {
        let sched = match &a.arrivals {
            Some(s) => ArrivalSchedule::parse(s)?,
            None => ArrivalSchedule::default(),
        };
        let lambda_d = a.lambda_d.unwrap_or(cfg.lambda_d);
        let tr = integrate_generalized(es, cfg.p_c, mu, lambda_d, placement.h_sc0, &sched, &grid)?;
        let path = out.join("trajectory_generalized.csv");
        tr.save_csv(&path)?;
        outputs.push(path);
    }

    let config = serde_json::json!({
        "scenario": to_value(&file),
        "content": a.content,
        "points": a.points,
        "ttl_grid": ttl_grid,
        "lambda_d": a.lambda_d,
        "arrivals": a.arrivals,
    });
    Ok(Outcome {
        command: "analyze",
        config,
        seeds: vec![a.common.seed],
        inputs: vec![a.common.config],
        outputs,
        out_dir: a.common.out,
        exit: EXIT_OK,
    })
}

fn cmd_simulate(a: SimulateArgs) -> Result<Outcome> {
    let file = load_scenario(&a.common.config)?;
    let violations = file.violations();
    if !violations.is_empty() {
        return Err(Error::Infeasible(violations));
    }
    let cfg = file.scenario;
    let content = pick_content(&file, a.content)?.clone();
    let real = file.placement_or_zero();
    let placement = if real.is_integral() { real } else { round_placement(&file.contents, &real, &cfg, &file.costs) };
    let cp = placement.get(a.content);
    let grid = uniform_grid(content.ttl, a.points.max(2));
    let seed = a.common.seed;
    let mut inputs = vec![a.common.config.clone()];

    let fixed: Option<ContactTrace> = match &a.trace {
        Some(p) => {
            inputs.push(p.clone());
            Some(ContactTrace::load(p)?.0)
        }
        None => None,
    };
    let community = match &a.community_config {
        Some(p) => {
            inputs.push(p.clone());
            Some(load_community(p)?)
        }
        None => None,
    };
    let spec = PoissonSpec {
        n_mn: cfg.n_mn as usize,
        n_sc: cfg.n_sc as usize,
        mu_lambda: cfg.mu_lambda,
        cv_lambda: cfg.cv_lambda,
        horizon: content.creation_time + content.ttl,
    };
    let poisson_gen = move |s: u64| spec.generate(s);
    let community_gen = |s: u64| generate_community_trace(community.as_ref().expect("community config"), s);
    let source = match (&fixed, &community) {
        (Some(tr), _) => TraceSource::Fixed(tr),
        (None, Some(_)) => TraceSource::Generator(&community_gen),
        (None, None) => TraceSource::Generator(&poisson_gen),
    };
    let curves = run_replications(&source, &cfg, &content, cp, &file.costs, a.reps, seed, &grid)?;

    let out = &a.common.out;
    create_dir(out)?;
    let es = EffectiveState::derive(cfg.p_c, &content, cp);
    let mu = if a.estimate_mu {
        let tr = match &source {
            TraceSource::Fixed(tr) => (*tr).clone(),
            TraceSource::Generator(g) => g(derive_seed(derive_seed(seed, 0), 0))?,
            TraceSource::Pool(p) => p[0].clone(),
        };
        trace_stats(&tr).mu_hat
    } else {
        cfg.mu_lambda
    };
    let theory: Option<Vec<f64>> = a.validate.then(|| grid.iter().map(|&t| delivery_probability(t, es, cfg.p_c, mu)).collect());
    let path = out.join("curves.csv");
    curves.save_csv(&path, theory.as_deref())?;

    let mut summary = serde_json::json!({
        "content_id": content.id,
        "curves": to_value(&curves),
        "notes": ["seeded MNs are served at t=0 and excluded from R0; delays average over R0"],
    });
    if a.validate {
        let (h_ttl, r_ttl) = holders_requesters_at(content.ttl, es, cfg.p_c, mu);
        summary["theory"] = serde_json::json!({
            "mu_lambda": mu,
            "p_ttl": delivery_probability(content.ttl, es, cfg.p_c, mu),
            "expected_delay": expected_delay(content.ttl, es, cfg.p_c, mu),
            "h_ttl": h_ttl,
            "r_ttl": r_ttl,
            "cost": content_cost(&content, cp, &cfg, &file.costs),
            "max_p_deviation": curves.max_p_deviation(theory.as_deref().unwrap()),
        });
    }
    let spath = out.join("summary.json");
    write_text(&spath, &(serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n"))?;

    let config = serde_json::json!({
        "scenario": to_value(&file),
        "content": a.content,
        "reps": a.reps,
        "points": a.points,
        "source": match (&a.trace, &community) {
            (Some(p), _) => serde_json::json!({"fixed": p.display().to_string()}),
            (None, Some(c)) => serde_json::json!({"community": to_value(c)}),
            (None, None) => serde_json::json!({"poisson": to_value(&spec)}),
        },
        "validate": a.validate,
        "estimate_mu": a.estimate_mu,
    });
    Ok(Outcome { command: "simulate", config, seeds: vec![seed], inputs, outputs: vec![path, spath], out_dir: a.common.out, exit: EXIT_OK })
}

struct Solved {
    placement: Placement,
    lambda0: Option<f64>,
    sweeps: usize,
    starts: usize,
    converged: bool,
}

fn solve(
    contents: &[ContentClass],
    file: &ScenarioFile,
    cfg: &ScenarioConfig,
    a: &OptimizeArgs,
    warm: Option<&Placement>,
) -> Result<Solved> {
    let closed_ok = match a.mode {
        SolveMode::ScOnly => cfg.p_c == 0.0,
        SolveMode::MnOnly => true,
        SolveMode::Joint => false,
    };
    let use_closed = match a.method {
        Method::Closed if !closed_ok && a.mode == SolveMode::Joint => {
            return Err(Error::invalid("joint mode has no closed form; use --method numeric"));
        }
        Method::Closed => true,
        Method::Auto => closed_ok,
        Method::Numeric => false,
    };
    if use_closed {
        return Ok(match a.mode {
            SolveMode::ScOnly => {
                let (placement, l0) = optimal_sc_allocation(contents, &file.costs, cfg)?;
                Solved { placement, lambda0: Some(l0), sweeps: 0, starts: 1, converged: true }
            }
            _ => Solved {
                placement: optimal_mn_allocation(contents, &file.costs, cfg)?,
                lambda0: None,
                sweeps: 0,
                starts: 1,
                converged: true,
            },
        });
    }
    let opts = SolverOptions {
        starts: a.starts,
        max_sweeps: a.max_sweeps,
        seed: a.common.seed,
        warm_starts: warm.into_iter().cloned().collect(),
        ..SolverOptions::default()
    };
    let sol = solve_problem1_numeric(contents, &file.costs, cfg, a.mode, &opts)?;
    Ok(Solved { placement: sol.placement, lambda0: None, sweeps: sol.sweeps, starts: sol.starts, converged: sol.converged })
}

fn cmd_optimize(a: OptimizeArgs) -> Result<Outcome> {
    let file = load_scenario(&a.common.config)?;
    let violations = file.violations();
    if !violations.is_empty() {
        return Err(Error::Infeasible(violations));
    }
    let cfg = file.scenario;
    let out = a.common.out.clone();
    create_dir(&out)?;
    let mut outputs = Vec::new();

    let solved = solve(&file.contents, &file, &cfg, &a, None)?;
    let int = round_placement(&file.contents, &solved.placement, &cfg, &file.costs);
    let path = out.join("allocation.csv");
    save_allocation_csv(&path, &file.contents, &solved.placement, &int, &cfg, &file.costs)?;
    outputs.push(path);

    let real_cost = total_cost(&file.contents, &solved.placement, &cfg, &file.costs);
    let int_cost = total_cost(&file.contents, &int, &cfg, &file.costs);
    let base = no_offload_cost(&file.contents, &file.costs);
    let mut warnings = file.costs.warnings();
    if !solved.converged {
        warnings.push(format!("solver hit the sweep cap ({}) before converging; best-so-far returned", a.max_sweeps));
    }
    let report = SolverReport {
        mode: format!("{:?}", a.mode),
        lambda0: solved.lambda0,
        sweeps: solved.sweeps,
        starts: solved.starts,
        converged: solved.converged,
        total_cost_real: real_cost,
        total_cost_int: int_cost,
        no_offload_cost: base,
        rcd_real: relative_cost_decrease(base, real_cost)?,
        rcd_int: relative_cost_decrease(base, int_cost)?,
        warnings: warnings.clone(),
    };
    let jpath = out.join("solver.json");
    write_text(&jpath, &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"))?;
    outputs.push(jpath);
    let mut converged = solved.converged;

    if !a.sweep_ttl.is_empty() || !a.sweep_pc.is_empty() {
        let ttls: Vec<Option<f64>> = if a.sweep_ttl.is_empty() { vec![None] } else { a.sweep_ttl.iter().copied().map(Some).collect() };
        let pcs: Vec<f64> = if a.sweep_pc.is_empty() { vec![cfg.p_c] } else { a.sweep_pc.clone() };
        let mut csv = String::from("ttl,p_c,cost,no_offload_cost,rcd\n");
        for &p_c in &pcs {
            let mut warm: Option<Placement> = None;
            for &ttl in &ttls {
                let contents: Vec<ContentClass> =
                    file.contents.iter().map(|c| ContentClass { ttl: ttl.unwrap_or(c.ttl), ..c.clone() }).collect();
                let cfg_pc = ScenarioConfig { p_c, ..cfg };
                let s = solve(&contents, &file, &cfg_pc, &a, warm.as_ref())?;
                converged &= s.converged;
                let ttl_label = ttl.map(|t| t.to_string()).unwrap_or_else(|| "file".into());
                if !s.converged {
                    warnings.push(format!("sweep point ttl={ttl_label}, p_c={p_c} hit the sweep cap"));
                }
                let c = total_cost(&contents, &s.placement, &cfg_pc, &file.costs);
                let b = no_offload_cost(&contents, &file.costs);
                writeln!(csv, "{ttl_label},{p_c},{c},{b},{}", relative_cost_decrease(b, c)?).unwrap();
                warm = Some(s.placement);
            }
        }
        let path = out.join("sweep.csv");
        write_text(&path, &csv)?;
        outputs.push(path);
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }

    let config = serde_json::json!({
        "scenario": to_value(&file),
        "mode": a.mode,
        "method": a.method,
        "starts": a.starts,
        "max_sweeps": a.max_sweeps,
        "sweep_ttl": a.sweep_ttl,
        "sweep_pc": a.sweep_pc,
    });
    Ok(Outcome {
        command: "optimize",
        config,
        seeds: vec![a.common.seed],
        inputs: vec![a.common.config],
        outputs,
        out_dir: out,
        exit: if converged { EXIT_OK } else { EXIT_NONCONVERGENCE },
    })
}

fn cmd_report(a: ReportArgs) -> Result<Outcome> {
    let mut tables = Vec::new();
    for p in &a.input {
        tables.push(report::Table::load(p)?);
    }
    create_dir(&a.out)?;
    let mut outputs = Vec::new();
    for t in &tables {
        for (name, svg) in report::render(t, a.plot) {
            let path = a.out.join(format!("{}_{}.svg", t.stem, name));
            write_text(&path, &svg)?;
            outputs.push(path);
        }
    }
    let path = a.out.join("merged.csv");
    write_text(&path, &report::merge(&tables))?;
    outputs.push(path);
    Ok(Outcome {
        command: "report",
        config: serde_json::json!({ "plot": a.plot }),
        seeds: vec![],
        inputs: a.input,
        outputs,
        out_dir: a.out,
        exit: EXIT_OK,
    })
}
