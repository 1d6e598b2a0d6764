//! `chipstack`: run, evaluate, route and compare chiplet placements.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use chipstack_core::annealer::{AnnealFailure, AnnealOptions};
use chipstack_core::eval::FullEvaluation;
use chipstack_core::export::write_planes;
use chipstack_core::metrics::RunSummary;
use chipstack_core::router::{build_routing_graph, route_csv, route_nets};
use chipstack_core::thermal::PlaneSelector;
use chipstack_core::{
    bundled, compare_runs, load_architecture, run_optimization, validate_placement, AnnealSchedule,
    ArchitectureSpec, ConfigError, EvalOptions, Fidelity, LayerRole, Objective, OptimizationReport, Placement,
    SurrogateEvaluator,
};

#[derive(Parser)]
#[command(name = "chipstack", version, about = "Thermal, stress and wirelength aware chiplet placement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Anneal a placement and write the report, field exports and route dump.
    Run(RunArgs),
    /// Evaluate one placement and print its metrics.
    Eval(EvalArgs),
    /// Route one placement and dump the segments as CSV.
    Route(RouteArgs),
    /// Tabulate median metrics of several reports of one architecture.
    Compare(CompareArgs),
}

#[derive(Args)]
struct SolverArgs {
    /// Lateral thermal cells per mm.
    #[arg(long)]
    resolution: Option<f64>,
    /// Routing site pitch, mm.
    #[arg(long)]
    pitch: Option<f64>,
    /// Wires per routing edge.
    #[arg(long)]
    capacity: Option<u32>,
}

impl SolverArgs {
    fn apply(&self, mut o: EvalOptions) -> EvalOptions {
        if let Some(r) = self.resolution {
            o.resolution = r;
        }
        if let Some(p) = self.pitch {
            o.pitch = p;
        }
        if let Some(c) = self.capacity {
            o.capacity = c;
        }
        o
    }
}

#[derive(Args)]
struct RunArgs {
    /// Architecture TOML file, or the name of a bundled architecture.
    #[arg(long)]
    config: String,
    #[arg(long, value_parser = clap::value_parser!(Objective))]
    objective: Objective,
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Inclusive range `a..b` or comma-separated list; one chain per seed.
    #[arg(long, value_parser = parse_seeds)]
    seeds: Option<Seeds>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value = "full-route", value_parser = clap::value_parser!(Fidelity))]
    fidelity: Fidelity,
    #[arg(long)]
    iters_per_level: Option<usize>,
    #[arg(long)]
    initial_temp: Option<f64>,
    #[arg(long)]
    cooling_rate: Option<f64>,
    #[arg(long)]
    stop_temp: Option<f64>,
    /// Random placements used to set the normalization ranges.
    #[arg(long)]
    warmup: Option<usize>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    config: String,
    /// Placement JSON, or a report JSON whose best placement is used.
    #[arg(long)]
    placement: PathBuf,
    /// Spread each chiplet's power uniformly, ignoring power maps.
    #[arg(long)]
    uniform_power: bool,
    /// Directory for field exports and the route dump.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the metrics as JSON.
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct RouteArgs {
    #[arg(long)]
    config: String,
    #[arg(long)]
    placement: PathBuf,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    pitch: Option<f64>,
    #[arg(long)]
    capacity: Option<u32>,
}

#[derive(Args)]
struct CompareArgs {
    /// Report JSON files (at least two).
    #[arg(required = true)]
    reports: Vec<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(Objective))]
    baseline: Option<Objective>,
    /// CSV destination for the comparison table.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Debug)]
struct Seeds(Vec<u64>);

fn parse_seeds(s: &str) -> Result<Seeds, String> {
    let bad = || format!("invalid seed list `{s}` (expected a..b or a,b,c)");
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if b < a {
            return Err(bad());
        }
        return Ok(Seeds((a..=b).collect()));
    }
    let list: Result<Vec<u64>, _> = s.split(',').map(|t| t.trim().parse()).collect();
    list.map(Seeds).map_err(|_| bad())
}

/// Process exit status classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Usage = 1,
    Validation = 2,
    Solver = 3,
}

struct Failure {
    status: Status,
    error: anyhow::Error,
}

impl Failure {
    fn new(status: Status, error: impl Into<anyhow::Error>) -> Self {
        Self { status, error: error.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

fn validation(e: impl Into<anyhow::Error>) -> Failure {
    Failure::new(Status::Validation, e)
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(Status::Usage as u8) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Route(a) => cmd_route(a),
        Command::Compare(a) => cmd_compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.status as u8)
        }
    }
}

fn load_config(arg: &str) -> CliResult<ArchitectureSpec> {
    let path = Path::new(arg);
    if !path.exists() {
        let name = arg.trim_end_matches(".toml");
        if let Some((_, text)) = bundled::ALL.iter().find(|(f, _)| f.trim_end_matches(".toml") == name) {
            return chipstack_core::parse_architecture(text).map_err(validation);
        }
    }
    load_architecture(path).map_err(|e| match e {
        ConfigError::Io { .. } => Failure::new(Status::Usage, e),
        other => validation(other),
    })
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(|e| Failure::new(Status::Usage, e))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CliResult {
    fs::write(path, contents)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(validation)
}

/// A placement file, possibly extracted from a report.
struct PlacementInput {
    placement: Placement,
    report: Option<OptimizationReport>,
}

fn load_placement(path: &Path) -> CliResult<PlacementInput> {
    let text = read_text(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .with_context(|| format!("{} is not JSON", path.display()))
        .map_err(validation)?;
    if value.get("best").is_some() && value.get("objective").is_some() {
        let report = OptimizationReport::from_json(&text)
            .with_context(|| format!("{} is not a valid report", path.display()))
            .map_err(validation)?;
        return Ok(PlacementInput { placement: report.best.placement.clone(), report: Some(report) });
    }
    let placement = Placement::from_json(&text)
        .with_context(|| format!("{} is not a valid placement", path.display()))
        .map_err(validation)?;
    Ok(PlacementInput { placement, report: None })
}

fn check_placement(p: &Placement, spec: &ArchitectureSpec) -> CliResult {
    let verdict = validate_placement(p, spec).map_err(validation)?;
    if verdict.is_ok() {
        return Ok(());
    }
    let list: Vec<String> = verdict.violations.iter().map(|v| format!("  {v}")).collect();
    Err(validation(anyhow!("infeasible placement:\n{}", list.join("\n"))))
}

const FIELD_PLANES: [(&str, PlaneSelector); 2] = [
    ("interposer_top", PlaneSelector::Top(LayerRole::Interposer)),
    ("chiplet_top", PlaneSelector::Top(LayerRole::Chiplet)),
];

fn write_artifacts(dir: &Path, full: &FullEvaluation) -> CliResult {
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create {}", dir.display()))
        .map_err(validation)?;
    write_planes(dir, "temperature", &full.temperature, &FIELD_PLANES).map_err(validation)?;
    write_planes(dir, "stress_vm", &full.stress.von_mises, &FIELD_PLANES).map_err(validation)?;
    write_file(&dir.join("routes.csv"), route_csv(&full.graph, &full.route))
}

fn cmd_run(a: RunArgs) -> CliResult {
    let spec = load_config(&a.config)?;
    let seeds = match (&a.seeds, a.seed) {
        (Some(Seeds(s)), _) => s.clone(),
        (None, Some(s)) => vec![s],
        (None, None) => vec![0],
    };
    let per_seed_dirs = a.seeds.is_some();
    let eval_options = a.solver.apply(EvalOptions::default());
    let options = AnnealOptions {
        fidelity: a.fidelity,
        warmup_samples: a.warmup.unwrap_or(AnnealOptions::default().warmup_samples),
        ..AnnealOptions::default()
    };
    let schedule_for = |seed| {
        let mut s = AnnealSchedule::for_architecture(&spec, seed);
        if let Some(v) = a.iters_per_level {
            s.iters_per_level = v;
        }
        if let Some(v) = a.initial_temp {
            s.initial_temp = v;
        }
        if let Some(v) = a.cooling_rate {
            s.cooling_rate = v;
        }
        if let Some(v) = a.stop_temp {
            s.stop_temp = v;
        }
        s
    };
    schedule_for(0).validate().map_err(|e| Failure::new(Status::Usage, e))?;

    let outcomes: Vec<(u64, Result<(OptimizationReport, FullEvaluation), AnnealFailure>)> = seeds
        .par_iter()
        .map(|&seed| (seed, run_optimization(&spec, a.objective, &schedule_for(seed), &options, &eval_options)))
        .collect();

    let mut worst: Option<Failure> = None;
    for (seed, outcome) in outcomes {
        let dir = if per_seed_dirs { a.out.join(format!("seed-{seed}")) } else { a.out.clone() };
        fs::create_dir_all(&dir)
            .with_context(|| format!("cannot create {}", dir.display()))
            .map_err(validation)?;
        match outcome {
            Ok((report, full)) => {
                write_file(&dir.join("report.json"), report.to_json())?;
                write_file(&dir.join("placement.json"), report.best.placement.to_json())?;
                write_artifacts(&dir, &full)?;
                let m = full.summary();
                println!(
                    "{} {} seed {seed}: T {:.2} C, sigma_vm {:.2} MPa, wirelength {:.1} mm -> {}",
                    report.architecture,
                    report.objective,
                    m.peak_temp,
                    m.peak_stress,
                    m.wirelength,
                    dir.display()
                );
            }
            Err(f) => {
                if let Some(partial) = &f.partial {
                    write_file(&dir.join("report.partial.json"), partial.to_json())?;
                }
                let status = if f.error.is_solver_failure() { Status::Solver } else { Status::Validation };
                eprintln!("seed {seed}: {}", f.error);
                if worst.as_ref().is_none_or(|w| (status as u8) > (w.status as u8)) {
                    worst = Some(Failure::new(status, anyhow!("seed {seed}: {}", f.error)));
                }
            }
        }
    }
    worst.map_or(Ok(()), Err)
}

fn print_metrics(m: &chipstack_core::FinalMetrics) {
    let corr = |v: Option<f64>| v.map_or("undefined".to_string(), |r| format!("{r:.4}"));
    println!("peak temperature      {:.4} C", m.peak_temp);
    println!("peak von Mises stress {:.4} MPa", m.peak_stress);
    println!("wirelength            {:.4} mm (hpwl {:.4} mm, routed {})", m.wirelength, m.hpwl,
        if m.routing_feasible { "completely" } else { "partially" });
    println!(
        "gradient              mean {:.4} std {:.4} max {:.4} C/mm",
        m.gradient.mean, m.gradient.std, m.gradient.max
    );
    println!("T-S correlation       {}", corr(m.correlations.ts));
    println!("G-S correlation       {}", corr(m.correlations.gs));
}

fn cmd_eval(a: EvalArgs) -> CliResult {
    let mut spec = load_config(&a.config)?;
    if a.uniform_power {
        spec = spec.with_uniform_power();
    }
    let input = load_placement(&a.placement)?;
    check_placement(&input.placement, &spec)?;
    let base = input
        .report
        .as_ref()
        .and_then(|r| r.eval_options.clone())
        .unwrap_or_default();
    let evaluator = SurrogateEvaluator::new(&spec, a.solver.apply(base));
    let full = evaluator.evaluate_full(&input.placement).map_err(|e| {
        let status = if e.is_solver_failure() { Status::Solver } else { Status::Validation };
        Failure::new(status, e)
    })?;
    let m = full.summary();
    if a.json {
        println!("{}", serde_json::to_string_pretty(&m).expect("metrics serialize"));
    } else {
        print_metrics(&m);
    }
    if let Some(dir) = &a.out {
        write_artifacts(dir, &full)?;
    }
    Ok(())
}

fn cmd_route(a: RouteArgs) -> CliResult {
    let spec = load_config(&a.config)?;
    let input = load_placement(&a.placement)?;
    check_placement(&input.placement, &spec)?;
    let o = EvalOptions::default();
    let g = build_routing_graph(&spec, &input.placement, a.pitch.unwrap_or(o.pitch), a.capacity.unwrap_or(o.capacity))
        .map_err(validation)?;
    let r = route_nets(&g, &spec.nets).map_err(validation)?;
    let csv = route_csv(&g, &r);
    match &a.out {
        Some(path) => {
            write_file(path, csv)?;
            println!(
                "total wirelength {:.4} mm, {}",
                r.total_wirelength,
                if r.feasible { "all wires routed" } else { "capacity exhausted" }
            );
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_compare(a: CompareArgs) -> CliResult {
    if a.reports.len() < 2 {
        return Err(Failure::new(Status::Usage, anyhow!("compare needs at least two reports")));
    }
    let mut runs = Vec::new();
    for path in &a.reports {
        let text = read_text(path)?;
        let report = OptimizationReport::from_json(&text)
            .with_context(|| format!("{} is not a valid report", path.display()))
            .map_err(validation)?;
        let summary = RunSummary::from_report(&report)
            .ok_or_else(|| validation(anyhow!("{} has no final metrics", path.display())))?;
        runs.push(summary);
    }
    let table = compare_runs(&runs, a.baseline).map_err(validation)?;
    print!("{}", table.to_text());
    if let Some(path) = &a.out {
        write_file(path, table.to_csv().map_err(validation)?)?;
    }
    Ok(())
}
