//! Command-line front end: generate instances, compile them to QUBO form,
//! run the multilevel solver or the classical baselines, evaluate
//! schedules, and sweep benchmark sizes.
//!
//! Exit codes: 0 on success, 1 on usage/validation errors, 2 on capacity
//! or configuration errors.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ucqaoa_core::pipeline::{run_baselines, solve_pipeline, PipelineConfig, RunReport};
use ucqaoa_core::qubo::{compile, export_coo, sparsity_report};
use ucqaoa_core::ucp::{
    evaluate_schedule, generate_synthetic, instance_to_json, parse_instance, CostReport,
    DemandSquareMode, MinDownMode, Schedule, UcpInstance,
};
use ucqaoa_core::Error as CoreError;

#[derive(Parser)]
#[command(
    name = "ucqaoa",
    about = "Multilevel QUBO/Ising solver for unit commitment with simulated-QAOA refinement",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct CommonArgs {
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Configuration file (JSON mirroring the solver config); replaces the
    /// preset, with built-in defaults for missing fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Write the primary output document here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output rendering.
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    format: Format,

    /// Parameter preset: `desk` sizes subproblems for the local simulator,
    /// `reference` uses the reference configuration (subproblem size 100).
    #[arg(long, global = true, value_enum, default_value_t = Preset::Desk)]
    preset: Preset,

    #[arg(long, global = true, help = "Demand balance penalty weight A")]
    penalty_a: Option<f64>,
    #[arg(long, global = true, help = "Startup logic penalty weight B")]
    penalty_b: Option<f64>,
    #[arg(long, global = true, help = "Minimum-up penalty weight C")]
    penalty_c: Option<f64>,
    #[arg(long, global = true, help = "Minimum-down penalty weight D")]
    penalty_d: Option<f64>,
    #[arg(long, global = true, help = "Subproblem size H")]
    subproblem_size: Option<usize>,
    #[arg(long, global = true, help = "Coarsest graph size m")]
    coarsest_size: Option<usize>,
    #[arg(long, global = true, help = "Consecutive rejections ending a level")]
    c_max: Option<usize>,
    #[arg(long, global = true, help = "Iteration cap per level")]
    iter_max: Option<usize>,
    #[arg(long, global = true, help = "Largest subproblem simulated as a state vector")]
    n_max: Option<usize>,
    #[arg(long, global = true, help = "Recursion stops at this size and solves exactly")]
    min_size: Option<usize>,
    #[arg(long, global = true, help = "Measurement shots per correlation estimate")]
    shots: Option<u64>,
    #[arg(long, global = true, help = "Expectation evaluations for the angle optimizer")]
    optimizer_budget: Option<usize>,
    #[arg(long, global = true, help = "Use exact amplitudes instead of sampled shots")]
    exact_expectations: bool,
    #[arg(long, global = true, value_enum, help = "Demand penalty squaring")]
    demand_square_mode: Option<DemandMode>,
    #[arg(long, global = true, value_enum, help = "Minimum-down window direction")]
    min_down_mode: Option<DownMode>,
    #[arg(long, global = true, help = "Local search restarts")]
    local_restarts: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Structured,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Preset {
    Desk,
    Reference,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DemandMode {
    PerPeriod,
    Verbatim,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DownMode {
    Verbatim,
    Forward,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic instance document.
    Gen {
        #[arg(long)]
        units: usize,
        #[arg(long)]
        horizon: usize,
    },
    /// Compile an instance and report matrix sparsity; `--out` also writes
    /// the sparse coordinate export.
    Compile {
        /// Instance document.
        instance: PathBuf,
    },
    /// Run the full multilevel solver.
    Solve {
        instance: PathBuf,
        /// Also run the classical baselines and embed them in the report.
        #[arg(long)]
        with_baselines: bool,
    },
    /// Run only the classical baselines (annealing, exhaustive search).
    Baseline { instance: PathBuf },
    /// Evaluate a schedule document against an instance.
    Eval {
        instance: PathBuf,
        #[arg(long)]
        schedule: PathBuf,
    },
    /// Sweep instance sizes and tabulate solver comparisons.
    Bench {
        /// Comma-separated unit counts.
        #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
        units: Vec<usize>,
        /// Comma-separated horizons.
        #[arg(long, value_delimiter = ',', default_value = "3")]
        horizons: Vec<usize>,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(exit_code(&err));
    }
}

fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<CoreError>() {
        Some(CoreError::Capacity(_)) | Some(CoreError::Config(_)) => 2,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<()> {
    let config = build_config(&cli.common)?;
    match &cli.command {
        Command::Gen { units, horizon } => cmd_gen(&cli.common, &config, *units, *horizon),
        Command::Compile { instance } => cmd_compile(&cli.common, &config, instance),
        Command::Solve {
            instance,
            with_baselines,
        } => cmd_solve(&cli.common, &config, instance, *with_baselines),
        Command::Baseline { instance } => cmd_baseline(&cli.common, &config, instance),
        Command::Eval { instance, schedule } => cmd_eval(&cli.common, &config, instance, schedule),
        Command::Bench { units, horizons } => cmd_bench(&cli.common, &config, units, horizons),
    }
}

fn build_config(common: &CommonArgs) -> Result<PipelineConfig> {
    let mut config = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            serde_json::from_str(&text)
                .map_err(|e| CoreError::Config(format!("config file: {e}")))?
        }
        None => match common.preset {
            Preset::Desk => PipelineConfig::desk(),
            Preset::Reference => PipelineConfig::default(),
        },
    };

    if let Some(v) = common.seed {
        config.seed = v;
    }
    if let Some(v) = common.penalty_a {
        config.penalties.a = v;
    }
    if let Some(v) = common.penalty_b {
        config.penalties.b = v;
    }
    if let Some(v) = common.penalty_c {
        config.penalties.c = v;
    }
    if let Some(v) = common.penalty_d {
        config.penalties.d = v;
    }
    if let Some(v) = common.subproblem_size {
        config.subproblem_size = v;
    }
    if let Some(v) = common.coarsest_size {
        config.coarsest_size = v;
    }
    if let Some(v) = common.c_max {
        config.c_max = v;
    }
    if let Some(v) = common.iter_max {
        config.iter_max = v;
    }
    if let Some(v) = common.n_max {
        config.qiro.n_max = v;
    }
    if let Some(v) = common.min_size {
        config.qiro.min_size = v;
    }
    if let Some(v) = common.shots {
        config.qiro.shots = v;
    }
    if let Some(v) = common.optimizer_budget {
        config.qiro.optimizer_budget = v;
    }
    if common.exact_expectations {
        config.qiro.exact_expectations = true;
    }
    if let Some(v) = common.demand_square_mode {
        config.demand_square_mode = match v {
            DemandMode::PerPeriod => DemandSquareMode::PerPeriod,
            DemandMode::Verbatim => DemandSquareMode::Verbatim,
        };
    }
    if let Some(v) = common.min_down_mode {
        config.min_down_mode = match v {
            DownMode::Verbatim => MinDownMode::Verbatim,
            DownMode::Forward => MinDownMode::Forward,
        };
    }
    if let Some(v) = common.local_restarts {
        config.local_restarts = v;
    }
    config.validate()?;
    Ok(config)
}

fn load_instance(path: &PathBuf) -> Result<UcpInstance> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading instance {}", path.display()))?;
    Ok(parse_instance(&text)?)
}

/// Write to `--out` or stdout.
fn emit(common: &CommonArgs, content: &str) -> Result<()> {
    match &common.out {
        Some(path) => {
            std::fs::write(path, content)
                .with_context(|| format!("writing {}", path.display()))?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(content.as_bytes())?;
            if !content.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

fn cmd_gen(common: &CommonArgs, config: &PipelineConfig, units: usize, horizon: usize) -> Result<()> {
    if units < 1 || horizon < 1 {
        return Err(CoreError::Validation("units and horizon must be >= 1".into()).into());
    }
    let instance = generate_synthetic(units, horizon, config.seed);
    emit(common, &instance_to_json(&instance))?;
    if common.format == Format::Human && common.out.is_some() {
        let peak = instance.demand.iter().cloned().fold(0.0, f64::max);
        eprintln!(
            "generated {} units x {} periods (capacity {:.0} MW, peak demand {:.0} MW)",
            units,
            horizon,
            instance.total_capacity(),
            peak
        );
    }
    Ok(())
}

fn cmd_compile(common: &CommonArgs, config: &PipelineConfig, path: &PathBuf) -> Result<()> {
    let instance = load_instance(path)?;
    let qubo = compile(
        &instance,
        &config.penalties,
        config.demand_square_mode,
        config.min_down_mode,
    )?;
    let report = sparsity_report(&qubo);
    if let Some(out) = &common.out {
        std::fs::write(out, export_coo(&qubo))
            .with_context(|| format!("writing {}", out.display()))?;
    }
    match common.format {
        Format::Human => {
            println!("variables: {}", report.n);
            println!("dense elements: {}", report.n * report.n);
            println!("nonzero entries: {}", report.nnz);
            println!("density: {:.4}%", report.density * 100.0);
            if let Some(out) = &common.out {
                println!("export written to {}", out.display());
            }
        }
        Format::Structured => {
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
    }
    Ok(())
}

fn render_report(common: &CommonArgs, report: &RunReport) -> Result<()> {
    match common.format {
        Format::Human => {
            if let Some(out) = &common.out {
                std::fs::write(out, report.to_json())
                    .with_context(|| format!("writing {}", out.display()))?;
            }
            println!("variables: {}", report.n_variables);
            if !report.hierarchy_level_sizes.is_empty() && report.coarse.is_some() {
                println!("hierarchy: {:?}", report.hierarchy_level_sizes);
            }
            if let Some(coarse) = &report.coarse {
                println!(
                    "coarse solve: level {} ({} nodes, {}) energy {:.6}",
                    coarse.level, coarse.nodes, coarse.solver, coarse.energy
                );
            }
            for level in &report.levels {
                println!(
                    "level {:>2}: {:>5} nodes, energy {:.6} -> {:.6} ({} accepted, {} rejected)",
                    level.level,
                    level.nodes,
                    level.energy_in,
                    level.energy_out,
                    level.accepted,
                    level.rejected
                );
            }
            for b in &report.baselines {
                match b.energy {
                    Some(e) => println!("baseline {:<20} energy {e:.6}", b.solver),
                    None => println!(
                        "baseline {:<20} {} ({})",
                        b.solver,
                        b.status,
                        b.note.as_deref().unwrap_or("")
                    ),
                }
            }
            println!("final energy: {:.6}", report.final_energy);
            println!("generation cost: {:.6}", report.costs.generation_cost);
            println!(
                "violations: startup {}, min-up {}, min-down {}",
                report.costs.startup_inconsistency_count,
                report.costs.min_up_violations,
                report.costs.min_down_violations
            );
            println!("penalized objective: {:.6}", report.costs.penalized_objective);
            if let Some(out) = &common.out {
                println!("report written to {}", out.display());
            }
        }
        Format::Structured => emit(common, &report.to_json())?,
    }
    Ok(())
}

fn cmd_solve(
    common: &CommonArgs,
    config: &PipelineConfig,
    path: &PathBuf,
    with_baselines: bool,
) -> Result<()> {
    let instance = load_instance(path)?;
    let mut report = solve_pipeline(&instance, config)?;
    if with_baselines {
        report.baselines = run_baselines(&instance, config)?.baselines;
    }
    render_report(common, &report)
}

fn cmd_baseline(common: &CommonArgs, config: &PipelineConfig, path: &PathBuf) -> Result<()> {
    let instance = load_instance(path)?;
    let report = run_baselines(&instance, config)?;
    render_report(common, &report)
}

fn cmd_eval(
    common: &CommonArgs,
    config: &PipelineConfig,
    instance_path: &PathBuf,
    schedule_path: &PathBuf,
) -> Result<()> {
    let instance = load_instance(instance_path)?;
    let text = std::fs::read_to_string(schedule_path)
        .with_context(|| format!("reading schedule {}", schedule_path.display()))?;
    let schedule: Schedule =
        serde_json::from_str(&text).map_err(|e| CoreError::Parse(format!("schedule: {e}")))?;
    let costs = evaluate_schedule(
        &instance,
        &schedule,
        &config.penalties,
        config.demand_square_mode,
        config.min_down_mode,
    )?;
    let document = schedule_document(&schedule, &costs);
    match common.format {
        Format::Human => {
            println!("generation cost: {:.6}", costs.generation_cost);
            println!(
                "violations: startup {}, min-up {}, min-down {}",
                costs.startup_inconsistency_count,
                costs.min_up_violations,
                costs.min_down_violations
            );
            println!("penalized objective: {:.6}", costs.penalized_objective);
            if let Some(out) = &common.out {
                std::fs::write(out, &document)?;
                println!("evaluation written to {}", out.display());
            }
        }
        Format::Structured => emit(common, &document)?,
    }
    Ok(())
}

/// Schedule output document: the on/start matrices plus the cost fields.
fn schedule_document(schedule: &Schedule, costs: &CostReport) -> String {
    let mut value = serde_json::to_value(costs).expect("cost report serializes");
    let object = value.as_object_mut().expect("cost report is an object");
    object.insert(
        "on".into(),
        serde_json::to_value(&schedule.on).expect("matrix serializes"),
    );
    object.insert(
        "start".into(),
        serde_json::to_value(&schedule.start).expect("matrix serializes"),
    );
    serde_json::to_string_pretty(&value).expect("document serializes")
}

fn cmd_bench(
    common: &CommonArgs,
    config: &PipelineConfig,
    units: &[usize],
    horizons: &[usize],
) -> Result<()> {
    struct Row {
        units: usize,
        horizon: usize,
        solver: String,
        energy: f64,
        generation_cost: f64,
        violations: usize,
        seconds: f64,
    }

    let mut rows: Vec<Row> = Vec::new();
    for &u in units {
        for &t in horizons {
            let instance = generate_synthetic(u, t, config.seed);
            let started = std::time::Instant::now();
            let report = solve_pipeline(&instance, config)?;
            rows.push(Row {
                units: u,
                horizon: t,
                solver: "pipeline".into(),
                energy: report.final_energy,
                generation_cost: report.costs.generation_cost,
                violations: report.costs.startup_inconsistency_count
                    + report.costs.min_up_violations
                    + report.costs.min_down_violations,
                seconds: started.elapsed().as_secs_f64(),
            });
            let baselines = run_baselines(&instance, config)?;
            for b in &baselines.baselines {
                let (Some(energy), Some(costs)) = (b.energy, b.costs.as_ref()) else {
                    continue;
                };
                rows.push(Row {
                    units: u,
                    horizon: t,
                    solver: b.solver.clone(),
                    energy,
                    generation_cost: costs.generation_cost,
                    violations: costs.startup_inconsistency_count
                        + costs.min_up_violations
                        + costs.min_down_violations,
                    seconds: b.seconds,
                });
            }
        }
    }

    match common.format {
        Format::Human => {
            let mut table = format!(
                "{:>6} {:>8} {:<20} {:>16} {:>16} {:>10} {:>9}\n",
                "units", "horizon", "solver", "energy", "gen_cost", "violations", "seconds"
            );
            for r in &rows {
                table.push_str(&format!(
                    "{:>6} {:>8} {:<20} {:>16.4} {:>16.4} {:>10} {:>9.3}\n",
                    r.units, r.horizon, r.solver, r.energy, r.generation_cost, r.violations,
                    r.seconds
                ));
            }
            emit(common, &table)?;
        }
        Format::Structured => {
            let values: Vec<serde_json::Value> = rows
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "units": r.units,
                        "horizon": r.horizon,
                        "solver": r.solver,
                        "energy": r.energy,
                        "generation_cost": r.generation_cost,
                        "violations": r.violations,
                        "seconds": r.seconds,
                    })
                })
                .collect();
            emit(common, &serde_json::to_string_pretty(&values)?)?;
        }
    }
    Ok(())
}
