use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use modae::assess::{hitting_cdf, unary_hv_diff};
use modae::dae::EvoParams;
use modae::experiment::{
    emit_report, load_repetitions, read_json, run_experiment, EngineMode, ExperimentConfig, Instance, Manifest,
};
use modae::model::{compress, GroundedTask, ObjectiveMode, ObjectiveVector};
use modae::moea::{AggregationConfig, Budget, EngineConfig, ObjectiveBounds};
use modae::par::{with_workers, Execution};
use modae::planner::{Planner, SearchBudget, Strategy};
use modae::tuner::{tune, ParamSpace};
use modae::zeno::{build_task, default_config, exact_front, generate, ParetoFront, Variant, ZenoConfig};

#[derive(Parser)]
#[command(name = "modae", version, about = "Multi-objective Divide-and-Evolve planning experiments")]
struct Cli {
    /// Worker threads for repetitions and tuning runs (0 = all cores).
    #[arg(long, env = "MODAE_WORKERS", default_value_t = 0, global = true)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the PDDL domain and problem of a MultiZeno instance.
    Generate(GenerateArgs),
    /// Compute the exact Pareto front of a MultiZeno instance.
    Oracle(OracleArgs),
    /// Benchmark commands under their own namespace.
    Zeno {
        #[command(subcommand)]
        command: ZenoCommand,
    },
    /// Run the embedded planner once.
    Solve(SolveArgs),
    /// Planner commands under their own namespace.
    Plan {
        #[command(subcommand)]
        command: PlanCommand,
    },
    /// Repeated Pareto (or single-objective with --alpha) evolution.
    Evolve(ExperimentArgs),
    /// Repeated weighted-sum campaigns.
    Aggregate(AggregateArgs),
    /// Tune evolution parameters by iterated local search.
    Tune(TuneArgs),
    /// Quality of a point set or of run traces against a front.
    Assess {
        #[command(subcommand)]
        command: AssessCommand,
    },
    /// Report tables for one or more experiment directories.
    Report(ReportArgs),
}

#[derive(Subcommand)]
enum ZenoCommand {
    Generate(GenerateArgs),
    Oracle(OracleArgs),
}

#[derive(Subcommand)]
enum PlanCommand {
    Solve(SolveArgs),
}

#[derive(Subcommand)]
enum AssessCommand {
    /// Hypervolume gap of a JSON list of [makespan, secondary] points.
    Hv {
        #[arg(long)]
        front: PathBuf,
        #[arg(long)]
        points: PathBuf,
    },
    /// Discovery CDFs of the runs in experiment directories.
    Hitting {
        #[arg(long)]
        front: PathBuf,
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Cost,
    Risk,
}

impl From<ModeArg> for ObjectiveMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Cost => ObjectiveMode::CostSum,
            ModeArg::Risk => ObjectiveMode::RiskMax,
        }
    }
}

#[derive(Args, Clone)]
struct ZenoArgs {
    #[arg(long, default_value = "lin")]
    variant: Variant,
    #[arg(long, default_value_t = 3)]
    passengers: usize,
    #[arg(long, value_enum, default_value = "cost")]
    mode: ModeArg,
}

impl ZenoArgs {
    fn config(&self) -> ZenoConfig {
        default_config(self.variant, self.passengers, self.mode.into())
    }
}

#[derive(Args, Clone)]
struct InstanceArgs {
    #[command(flatten)]
    zeno: ZenoArgs,
    /// PDDL domain; overrides the MultiZeno flags together with --problem.
    #[arg(long, requires = "problem")]
    domain: Option<PathBuf>,
    #[arg(long, requires = "domain")]
    problem: Option<PathBuf>,
}

impl InstanceArgs {
    fn instance(&self) -> Instance {
        match (&self.domain, &self.problem) {
            (Some(d), Some(p)) => Instance::Pddl {
                domain: d.clone(),
                problem: p.clone(),
            },
            _ => Instance::Zeno(self.zeno.config()),
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    zeno: ZenoArgs,
    /// Directory receiving domain.pddl and problem.pddl.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    zeno: ZenoArgs,
    /// Largest makespan explored.
    #[arg(long, default_value_t = 200)]
    bound: i64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Makespan,
    Cost,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, value_enum, default_value = "makespan")]
    strategy: StrategyArg,
    #[arg(long, default_value_t = 100_000)]
    budget: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print the grounded task instead of solving.
    #[arg(long)]
    dump_ground: bool,
}

#[derive(Args, Clone)]
struct RunArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Total planner-node budget per repetition.
    #[arg(long, default_value_t = 2_000_000)]
    budget: u64,
    /// Wall-clock budget per repetition instead of nodes (not reproducible).
    #[arg(long)]
    wall_clock_secs: Option<u64>,
    /// Planner-node budget of one evaluation.
    #[arg(long)]
    per_call: Option<u64>,
    /// EvoParams as JSON, e.g. the `params` of a tuning result.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long, default_value_t = 11)]
    repetitions: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Re-run the experiment recorded in a manifest; instance, budget and
    /// seed flags are ignored.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Optimise α·makespan + (1−α)·secondary with a single-objective engine.
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args)]
struct AggregateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated weights of the makespan objective.
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    instance: ZenoArgs,
    /// Configurations to score.
    #[arg(long, default_value_t = 100)]
    budget: usize,
    #[arg(long, default_value_t = 3)]
    runs_per_eval: usize,
    /// Planner-node budget of each scoring run.
    #[arg(long, default_value_t = 200_000)]
    run_budget: u64,
    #[arg(long, default_value_t = 200)]
    bound: i64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "best.json")]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    front: PathBuf,
    #[arg(long, default_value = "report")]
    out: PathBuf,
    #[arg(required = true)]
    dirs: Vec<PathBuf>,
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_front(path: &Path) -> Result<ParetoFront> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let points: Vec<ObjectiveVector> =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(ParetoFront::from_points(points))
}

fn cmd_generate(a: &GenerateArgs) -> Result<()> {
    let (domain, problem) = generate(&a.zeno.config())?;
    fs::create_dir_all(&a.out_dir)?;
    write_text(&a.out_dir.join("domain.pddl"), &domain)?;
    write_text(&a.out_dir.join("problem.pddl"), &problem)?;
    Ok(())
}

fn cmd_oracle(a: &OracleArgs) -> Result<()> {
    let front = exact_front(&a.zeno.config(), a.bound)?;
    let text = serde_json::to_string(&front)?;
    match &a.out {
        Some(p) => write_text(p, &(text + "\n")),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn load_task(inst: &InstanceArgs) -> Result<GroundedTask> {
    Ok(inst.instance().load()?)
}

fn cmd_solve(a: &SolveArgs) -> Result<()> {
    let task = load_task(&a.instance)?;
    if a.dump_ground {
        print!("{}", modae::pddl::dump_ground(&task));
        return Ok(());
    }
    if a.budget == 0 {
        bail!("budget must be positive");
    }
    let strategy = match a.strategy {
        StrategyArg::Makespan => Strategy::Makespan,
        StrategyArg::Cost => Strategy::Cost,
    };
    let r = Planner::new(&task).solve(task.init(), task.goal(), strategy, SearchBudget::nodes(a.budget), a.seed);
    let stats = json!({"expanded": r.stats.expanded, "evaluated": r.stats.evaluated});
    match r.plan {
        Ok(seq) => {
            let plan = compress(&task, &seq)?;
            let steps: Vec<_> = plan
                .steps
                .iter()
                .map(|s| {
                    let act = task.action(s.action);
                    json!({
                        "start": task.format_time(s.start),
                        "action": act.name,
                        "duration": task.format_time(act.duration),
                    })
                })
                .collect();
            print_json(&json!({
                "task": task.name,
                "strategy": strategy,
                "solved": true,
                "makespan": task.format_time(plan.objectives.makespan),
                "secondary": task.format_cost(plan.objectives.secondary),
                "plan": steps,
                "stats": stats,
            }))
        }
        Err(f) => print_json(&json!({"task": task.name, "strategy": strategy, "solved": false, "failure": f, "stats": stats})),
    }
}

fn engine_config(run: &RunArgs) -> Result<EngineConfig> {
    let mut cfg = EngineConfig::default();
    if let Some(p) = &run.params {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        let v: serde_json::Value = serde_json::from_str(&text)?;
        // accept a bare EvoParams or a tuning result holding one
        let params = v.get("params").cloned().unwrap_or(v);
        cfg.params = serde_json::from_value::<EvoParams>(params)?;
    }
    cfg.budget = match run.wall_clock_secs {
        Some(s) => Budget::WallClockMs(s * 1000),
        None => Budget::Nodes(run.budget),
    };
    if let Some(pc) = run.per_call {
        cfg.per_call = pc;
    }
    Ok(cfg)
}

fn run(run: &RunArgs, build: impl FnOnce(u64, EngineConfig, Instance) -> ExperimentConfig, workers: usize) -> Result<()> {
    let cfg = match &run.manifest {
        Some(m) => read_json::<Manifest>(m)?.config,
        None => {
            let Some(seed) = run.seed else { bail!("--seed is required (or --manifest)") };
            build(seed, engine_config(run)?, run.instance.instance())
        }
    };
    let manifest = run_experiment(&cfg, &run.out, workers)?;
    let fronts: modae::experiment::FrontSummary = read_json(&run.out.join(modae::experiment::FRONT_FILE))?;
    print_json(&json!({
        "out": run.out,
        "config_digest": manifest.config_digest,
        "repetitions": manifest.seeds.len(),
        "merged_front": fronts.merged,
    }))
}

fn cmd_tune(a: &TuneArgs, workers: usize) -> Result<()> {
    let Some(seed) = a.seed else { bail!("--seed is required") };
    let zcfg = a.instance.config();
    let task = build_task(&zcfg)?;
    let front = exact_front(&zcfg, a.bound)?;
    let engine = EngineConfig {
        budget: Budget::Nodes(a.run_budget),
        ..EngineConfig::default()
    };
    let space = ParamSpace::default();
    let result = with_workers(workers, || {
        tune(&task, &front, &engine, &space, a.runs_per_eval, a.budget, seed, Execution::Parallel)
    })?;
    let described: serde_json::Map<String, serde_json::Value> = space
        .describe(&result.best)
        .into_iter()
        .map(|(p, v)| (serde_json::to_value(p).unwrap().as_str().unwrap().to_string(), json!(v)))
        .collect();
    let out = json!({
        "task": task.name,
        "seed": seed,
        "best_score": result.best_score,
        "values": described,
        "params": result.params,
        "evaluated": result.history.len(),
    });
    write_text(&a.out, &(serde_json::to_string_pretty(&out)? + "\n"))?;
    print_json(&out)
}

fn cmd_assess(c: &AssessCommand) -> Result<()> {
    match c {
        AssessCommand::Hv { front, points } => {
            let front = load_front(front)?;
            let text = fs::read_to_string(points)?;
            let pts: Vec<ObjectiveVector> = serde_json::from_str(&text)?;
            print_json(&json!({"hv_gap": unary_hv_diff(&pts, &front)?}))
        }
        AssessCommand::Hitting { front, dirs } => {
            let front = load_front(front)?;
            let mut out = Vec::new();
            for d in dirs {
                let (_, views) = load_repetitions(d)?;
                let traces: Vec<_> = views.into_iter().map(|v| v.trace).collect();
                out.push(json!({"dir": d, "hitting": hitting_cdf(&traces, &front)?}));
            }
            print_json(&json!(out))
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let workers = cli.workers;
    match &cli.command {
        Command::Generate(a) | Command::Zeno { command: ZenoCommand::Generate(a) } => cmd_generate(a),
        Command::Oracle(a) | Command::Zeno { command: ZenoCommand::Oracle(a) } => cmd_oracle(a),
        Command::Solve(a) | Command::Plan { command: PlanCommand::Solve(a) } => cmd_solve(a),
        Command::Evolve(a) => {
            let alpha = a.alpha;
            run(
                &a.run,
                |seed, engine_config, instance| ExperimentConfig {
                    instance,
                    engine: if alpha.is_some() { EngineMode::Single } else { EngineMode::Pareto },
                    engine_config,
                    alpha,
                    aggregation: AggregationConfig::default(),
                    repetitions: a.run.repetitions,
                    seed,
                },
                workers,
            )
        }
        Command::Aggregate(a) => run(
            &a.run,
            |seed, engine_config, instance| ExperimentConfig {
                instance,
                engine: EngineMode::Aggregate,
                engine_config,
                alpha: None,
                aggregation: AggregationConfig {
                    alphas: a.alphas.clone().unwrap_or_else(|| AggregationConfig::default().alphas),
                    bounds: None::<ObjectiveBounds>,
                },
                repetitions: a.run.repetitions,
                seed,
            },
            workers,
        ),
        Command::Tune(a) => cmd_tune(a, workers),
        Command::Assess { command } => cmd_assess(command),
        Command::Report(a) => {
            let front = load_front(&a.front)?;
            let report = emit_report(&a.dirs, &front, &a.out)?;
            print_json(&serde_json::to_value(report)?)
        }
    }
}
