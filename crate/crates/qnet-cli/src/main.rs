//! Command-line front end: run strategy comparisons, verify long-run
//! behavior against the exact optimum, and replay the 4-node worked example.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use qnet_core::scenarios;
use qnet_core::{
    load_config, run_batch, solve_utility_optimum, trace_csv_string, update_average,
    ChannelProcess, ChannelProcessSpec, Error as CoreError, NetworkConfig, Pair, RunParams,
    SolveOptions, StepSchedule, Strategy, XbarInit,
};

#[derive(Parser)]
#[command(name = "qnet", version, about = "Entangled-photon pumping schedules for QKD networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one or more (strategy, seed) runs and write trace CSVs.
    Run(RunArgs),
    /// Check that the proportional-fair scheduler converges to the exact
    /// rate-region optimum.
    Verify(VerifyArgs),
    /// Replay the built-in 4-node example and check its step values.
    ExampleN4,
}

#[derive(Args)]
struct RunArgs {
    /// Config file path, or a built-in scenario name
    /// (paper-n4 | paper-n5-fixed | paper-n5-varying).
    #[arg(long)]
    config: String,
    /// Strategy to run: pf | greedy | rr | alpha:<a>. Repeatable.
    #[arg(long = "strategy", default_values_t = [String::from("pf")])]
    strategies: Vec<String>,
    /// Step-size schedule: harmonic | fixed:<g>.
    #[arg(long, default_value = "harmonic")]
    schedule: String,
    /// Channel process: fixed | iid | walk. Defaults to the config's
    /// channel_process block (or a constant channel).
    #[arg(long, value_enum)]
    process: Option<ProcessKind>,
    /// Number of steps to simulate.
    #[arg(long, default_value_t = 1000)]
    horizon: u64,
    /// RNG seed. Repeatable; comma lists work too.
    #[arg(long = "seed", value_delimiter = ',', default_values_t = [1u64])]
    seeds: Vec<u64>,
    /// Output directory for trace and summary CSVs.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Uniform initial average rate; defaults to 1e-6 x the best achievable
    /// rate.
    #[arg(long)]
    xbar_init: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Config file path or built-in scenario name. The channel must be
    /// fixed or finite-state i.i.d.
    #[arg(long)]
    config: String,
    /// Maximum per-pair relative error accepted between the trajectory and
    /// the optimum.
    #[arg(long, default_value_t = 0.02)]
    tol: f64,
    /// Trajectory length.
    #[arg(long, default_value_t = 100_000)]
    horizon: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Uniform initial average rate for the trajectory.
    #[arg(long, default_value_t = 10.0)]
    xbar_init: f64,
    /// Write the solver's solution document (JSON) here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProcessKind {
    Fixed,
    Iid,
    Walk,
}

enum CliError {
    Validation(String),
    Runtime(String),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Config(_) | CoreError::Domain(_) | CoreError::Infeasible(_) | CoreError::EnumerationGuard { .. } => {
                CliError::Validation(e.to_string())
            }
            CoreError::Io(_) | CoreError::Json(_) => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Verify(args) => cmd_verify(args),
        Command::ExampleN4 => cmd_example_n4(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

/// A network plus the channel-process information that came with it.
struct ResolvedConfig {
    name: String,
    network: NetworkConfig,
    default_process: ChannelProcess,
    doc_spec: Option<ChannelProcessSpec>,
}

fn resolve_config(arg: &str) -> Result<ResolvedConfig, CliError> {
    if let Some(sc) = scenarios::by_name(arg) {
        return Ok(ResolvedConfig {
            name: sc.name.to_string(),
            network: sc.config,
            default_process: sc.process,
            doc_spec: None,
        });
    }
    if !std::path::Path::new(arg).exists() {
        return Err(CliError::Validation(format!(
            "config {arg:?} is neither a file nor a built-in scenario ({})",
            scenarios::SCENARIO_NAMES.join(", ")
        )));
    }
    let doc = load_config(arg)?;
    let default_process = ChannelProcess::fixed(doc.network.base_state());
    Ok(ResolvedConfig {
        name: arg.to_string(),
        network: doc.network,
        default_process,
        doc_spec: doc.channel_process,
    })
}

fn resolve_process(
    kind: Option<ProcessKind>,
    resolved: &ResolvedConfig,
) -> Result<ChannelProcess, CliError> {
    let network = &resolved.network;
    let spec = resolved.doc_spec.as_ref();
    let process = match kind {
        None => match spec {
            Some(s) => s.build(network)?,
            None => resolved.default_process.clone(),
        },
        Some(ProcessKind::Fixed) => match spec {
            Some(s @ ChannelProcessSpec::Fixed { .. }) => s.build(network)?,
            _ => ChannelProcess::fixed(network.base_state()),
        },
        Some(ProcessKind::Walk) => match spec {
            Some(s @ ChannelProcessSpec::PerturbationWalk { .. }) => s.build(network)?,
            _ => ChannelProcess::perturbation_walk(network.base_state(), 0.005, 100)?,
        },
        Some(ProcessKind::Iid) => match spec {
            Some(s @ ChannelProcessSpec::FiniteIid { .. }) => s.build(network)?,
            _ => {
                return Err(CliError::Validation(
                    "--process iid needs a finite_iid channel_process block in the config".into(),
                ))
            }
        },
    };
    Ok(process)
}

fn timestamp() -> Option<String> {
    if std::env::var("QNET_NO_TIMESTAMP").map(|v| v == "1").unwrap_or(false) {
        return None;
    }
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    Some(secs.to_string())
}

fn file_label(strategy: &Strategy) -> String {
    strategy.label().replace(':', "-")
}

/// A validated experiment: the network, the strategy entries to run, the
/// channel process, and where the traces go.
struct ExperimentSpec {
    name: String,
    network: NetworkConfig,
    entries: Vec<(Strategy, StepSchedule, XbarInit)>,
    process: ChannelProcess,
    horizon: u64,
    seeds: Vec<u64>,
    out_dir: PathBuf,
}

impl ExperimentSpec {
    fn from_args(args: &RunArgs) -> Result<Self, CliError> {
        if args.horizon < 1 {
            return Err(CliError::Validation("horizon must be at least 1".into()));
        }
        if args.strategies.is_empty() {
            return Err(CliError::Validation("at least one --strategy is required".into()));
        }
        if args.seeds.is_empty() {
            return Err(CliError::Validation("at least one --seed is required".into()));
        }
        let schedule: StepSchedule = args.schedule.parse()?;
        let xbar_init = match args.xbar_init {
            Some(v) if v > 0.0 => XbarInit::Uniform(v),
            Some(v) => return Err(CliError::Validation(format!("xbar-init must be positive, got {v}"))),
            None => XbarInit::Default,
        };
        let entries = args
            .strategies
            .iter()
            .map(|s| Ok((s.parse::<Strategy>()?, schedule, xbar_init.clone())))
            .collect::<Result<Vec<_>, qnet_core::Error>>()?;
        let resolved = resolve_config(&args.config)?;
        let process = resolve_process(args.process, &resolved)?;
        Ok(ExperimentSpec {
            name: resolved.name,
            network: resolved.network,
            entries,
            process,
            horizon: args.horizon,
            seeds: args.seeds.clone(),
            out_dir: args.out.clone(),
        })
    }

    /// One run per (strategy entry, seed), strategies outermost.
    fn run_params(&self) -> Vec<RunParams> {
        self.entries
            .iter()
            .flat_map(|(strategy, schedule, xbar_init)| {
                self.seeds.iter().map(move |&seed| RunParams {
                    strategy: *strategy,
                    schedule: *schedule,
                    process: self.process.clone(),
                    horizon: self.horizon,
                    seed,
                    xbar_init: xbar_init.clone(),
                })
            })
            .collect()
    }
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let spec = ExperimentSpec::from_args(&args)?;
    let params = spec.run_params();
    let traces = run_batch(&spec.network, &params).map_err(CliError::from)?;

    fs::create_dir_all(&spec.out_dir)?;
    let ts = timestamp();
    let mut summary = String::new();
    writeln!(summary, "# rng={}", qnet_core::RNG_ALGORITHM).unwrap();
    if let Some(ts) = &ts {
        writeln!(summary, "# generated={ts}").unwrap();
    }
    writeln!(summary, "strategy,seed,horizon,final_log_sum,final_geo_mean,final_total,final_jain").unwrap();

    println!("network {} (n={}, capacity={}), horizon {}", spec.name, spec.network.n(), spec.network.capacity(), spec.horizon);
    for (p, trace) in params.iter().zip(&traces) {
        let label = p.strategy.label();
        let path = spec.out_dir.join(format!("trace_{}_{}.csv", file_label(&p.strategy), p.seed));
        fs::write(&path, trace_csv_string(trace, &label, p.seed, ts.as_deref()))?;
        let last = trace.last().expect("horizon >= 1 gives at least two records");
        writeln!(
            summary,
            "{},{},{},{},{},{},{}",
            label, p.seed, spec.horizon, last.metrics.log_sum, last.metrics.geo_mean, last.metrics.total, last.metrics.jain
        )
        .unwrap();
        println!(
            "  {label} seed {}: final log_sum {:.4}, geo_mean {:.4}, total {:.4}, jain {:.4} -> {}",
            p.seed,
            last.metrics.log_sum,
            last.metrics.geo_mean,
            last.metrics.total,
            last.metrics.jain,
            path.display()
        );
    }
    let summary_path = spec.out_dir.join("summary.csv");
    fs::write(&summary_path, summary)?;
    println!("  summary -> {}", summary_path.display());
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<(), CliError> {
    if args.horizon < 1 {
        return Err(CliError::Validation("horizon must be at least 1".into()));
    }
    // rejects NaN too
    if !(args.tol > 0.0) {

        return Err(CliError::Validation(format!("tol must be positive, got {}", args.tol)));
    }
    let resolved = resolve_config(&args.config)?;
    let process = resolve_process(None, &resolved)?;
    let (states, pi) = match &process {
        ChannelProcess::Fixed(state) => (vec![state.clone()], vec![1.0]),
        ChannelProcess::FiniteIid { states, pi } => (states.clone(), pi.clone()),
        ChannelProcess::PerturbationWalk { .. } => {
            return Err(CliError::Validation(
                "verify needs a fixed or finite_iid channel; the perturbation walk has no stationary optimum to compare against".into(),
            ))
        }
    };
    let network = &resolved.network;

    println!("network {} (n={}, capacity={})", resolved.name, network.n(), network.capacity());
    println!(
        "trajectory: pf, harmonic steps, horizon {}, seed {}, xbar_init {}",
        args.horizon, args.seed, args.xbar_init
    );

    let solution = solve_utility_optimum(network, &states, &pi, 1.0, SolveOptions::default())
        .map_err(CliError::from)?;
    println!(
        "solver: {} after {} iterations, gap {:.3e} (tol {:.3e})",
        if solution.converged { "converged" } else { "did not converge" },
        solution.iterations,
        solution.duality_gap,
        solution.tolerance
    );
    if let Some(path) = &args.out {
        fs::write(path, serde_json::to_string_pretty(&solution.to_json()).expect("solution serializes"))?;
        println!("solution -> {}", path.display());
    }
    if !solution.converged {
        return Err(CliError::Runtime(format!(
            "rate-region solver did not reach its gap tolerance (gap {:.3e} > {:.3e})",
            solution.duality_gap, solution.tolerance
        )));
    }

    let params = RunParams {
        strategy: Strategy::ProportionalFair,
        schedule: StepSchedule::Harmonic,
        process,
        horizon: args.horizon,
        seed: args.seed,
        xbar_init: XbarInit::Uniform(args.xbar_init),
    };
    let trace = qnet_core::run(network, &params).map_err(CliError::from)?;
    let last = trace.last().expect("horizon >= 1");

    println!("{:<8}{:>16}{:>16}{:>12}", "pair", "xbar(T)", "x_star", "rel_err");
    let mut worst: f64 = 0.0;
    for ((pair, xbar), (x_star, excluded)) in last.xbar.entries().zip(
        solution
            .x_star
            .iter()
            .zip(network.pairs().map(|p| solution.excluded_pairs.contains(&p))),
    ) {
        if excluded {
            println!("{:<8}{:>16.4}{:>16}{:>12}", pair.to_string(), xbar, "excluded", "-");
            continue;
        }
        let rel = (xbar - x_star).abs() / x_star;
        worst = worst.max(rel);
        println!("{:<8}{:>16.4}{:>16.4}{:>12.6}", pair.to_string(), xbar, x_star, rel);
    }
    println!("max relative error {worst:.6} vs tolerance {}", args.tol);
    if worst <= args.tol {
        println!("PASS");
        Ok(())
    } else {
        Err(CliError::Runtime(format!(
            "trajectory is {worst:.6} away from the optimum, above tolerance {}",
            args.tol
        )))
    }
}

struct Check {
    failures: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Check { failures: Vec::new() }
    }

    fn assert_close(&mut self, what: &str, got: f64, want: f64) {
        if (got - want).abs() <= 1e-9 {
            println!("  check: {what} = {want} .. ok");
        } else {
            println!("  check: {what} = {got}, expected {want} .. FAIL");
            self.failures.push(format!("{what}: got {got}, expected {want}"));
        }
    }

    fn assert_edges(&mut self, what: &str, got: &[Pair], want: &[(usize, usize)]) {
        let want: Vec<Pair> = want.iter().map(|&(a, b)| Pair::new(a, b).unwrap()).collect();
        if got == want {
            println!("  check: {what} pumps {} .. ok", fmt_edges(got));
        } else {
            println!("  check: {what} pumps {}, expected {} .. FAIL", fmt_edges(got), fmt_edges(&want));
            self.failures.push(format!("{what}: got {}, expected {}", fmt_edges(got), fmt_edges(&want)));
        }
    }
}

fn fmt_edges(edges: &[Pair]) -> String {
    if edges.is_empty() {
        return "(nothing)".into();
    }
    edges.iter().map(Pair::to_string).collect::<Vec<_>>().join(",")
}

fn cmd_example_n4() -> Result<(), CliError> {
    let sc = scenarios::paper_n4();
    println!("{}", sc.description);
    println!("rates: 0-1=100 0-2=200 0-3=300 1-2=400 1-3=500 2-3=600");
    println!("initial averages 10 on every pair, fixed step size 0.5\n");

    let mut check = Check::new();
    let run_two = |strategy: Strategy| -> Result<Vec<qnet_core::TraceRecord>, CliError> {
        let params = RunParams {
            strategy,
            schedule: StepSchedule::fixed(0.5).expect("0.5 is in (0, 1]"),
            process: sc.process.clone(),
            horizon: 2,
            seed: 1,
            xbar_init: XbarInit::Uniform(10.0),
        };
        qnet_core::run(&sc.config, &params).map_err(CliError::from)
    };
    let print_steps = |trace: &[qnet_core::TraceRecord]| {
        for rec in &trace[1..] {
            let mut line = format!("  t={}: pump {:<10} xbar:", rec.t, fmt_edges(&rec.edges));
            for (p, v) in rec.xbar.entries() {
                let _ = write!(line, " {p}={v}");
            }
            println!("{line}");
        }
    };

    println!("proportional fair");
    let pf = run_two(Strategy::ProportionalFair)?;
    print_steps(&pf);
    check.assert_edges("t=1", &pf[1].edges, &[(1, 3), (2, 3)]);
    check.assert_close("xbar_2-3(1)", pf[1].xbar.get(2, 3), 305.0);
    check.assert_close("xbar_1-3(1)", pf[1].xbar.get(1, 3), 255.0);
    check.assert_edges("t=2", &pf[2].edges, &[(0, 3), (1, 2)]);

    println!("\ngreedy");
    let greedy = run_two(Strategy::Greedy)?;
    print_steps(&greedy);
    check.assert_edges("t=1", &greedy[1].edges, &[(1, 3), (2, 3)]);
    check.assert_edges("t=2", &greedy[2].edges, &[(1, 3), (2, 3)]);
    check.assert_close("xbar_2-3(2)", greedy[2].xbar.get(2, 3), 452.5);
    check.assert_close("xbar_1-3(2)", greedy[2].xbar.get(1, 3), 377.5);
    println!("  note: 452.5 follows from the update rule, 305 + 0.5*(600-305); the value 455 does not satisfy it");

    println!("\nround robin");
    let rr = run_two(Strategy::RoundRobin)?;
    print_steps(&rr);
    println!("  rotation order is unspecified when averages tie; equal computed scores break in canonical pair order");
    println!("  update arithmetic for a forced rotation serving 0-3,0-2 then 0-1,1-2:");
    check.assert_close("update(10, 300, 0.5)", update_average(10.0, 300.0, 0.5, 0.0), 155.0);
    check.assert_close("update(10, 200, 0.5)", update_average(10.0, 200.0, 0.5, 0.0), 105.0);
    check.assert_close("update(10, 100, 0.5)", update_average(10.0, 100.0, 0.5, 0.0), 55.0);
    check.assert_close("update(10, 400, 0.5)", update_average(10.0, 400.0, 0.5, 0.0), 205.0);

    if check.failures.is_empty() {
        println!("\nall checks passed");
        Ok(())
    } else {
        Err(CliError::Runtime(format!("{} example check(s) failed: {}", check.failures.len(), check.failures.join("; "))))
    }
}
