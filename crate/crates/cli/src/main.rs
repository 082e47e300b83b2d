//! Command-line front end: model ingestion, pipeline orchestration,
//! reporting. Exit codes: 0 success, 1 model error, 2 analysis error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rcreach_core::automaton::{unroll, Rac, Severity};
use rcreach_core::model::{
    dump_forest, parse_fm_mode, parse_model, AnalysisSettings, ParsedModel,
};
use rcreach_core::pipeline::{
    adapted_bounds, build_forest, estimate_pipeline, forest_goal_indices, AnalysisConfig,
    PipelineError, RunReport,
};
use rcreach_core::reach::GoalSpec;

#[derive(Parser)]
#[command(
    name = "rcreach",
    version,
    about = "Maximum reachability probabilities for rectangular automata with random clocks"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the forward analysis and report p_max with its errors
    Analyze(RunArgs),
    /// Print unadapted and adapted integration bounds per clock copy
    Bounds(RunArgs),
    /// Dump the reach tree (exact constraints) as JSON
    Tree(RunArgs),
    /// Check the model against the structural rules
    Validate(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Model document (JSON)
    model: PathBuf,
    /// Time bound (rational, e.g. 10 or 21/2)
    #[arg(long)]
    tmax: Option<String>,
    /// Jump bound
    #[arg(long)]
    jumps: Option<u32>,
    /// Integration bound (rational, >= tmax)
    #[arg(long)]
    tint: Option<String>,
    /// Total Monte Carlo samples
    #[arg(long)]
    samples: Option<u64>,
    /// RNG seed
    #[arg(long)]
    seed: Option<u64>,
    /// Elimination mode: fm or fm+
    #[arg(long)]
    fm: Option<String>,
    /// Integrate over the full [0, tint] interval in every dimension
    #[arg(long)]
    no_adapt_bounds: bool,
    /// Write the full-precision report to a file
    #[arg(long)]
    json: Option<PathBuf>,
}

enum CliError {
    Model(String),
    Analysis(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Model(_) => 1,
            CliError::Analysis(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Model(m) | CliError::Analysis(m) => m,
        }
    }
}

fn from_pipeline(e: PipelineError) -> CliError {
    match e {
        PipelineError::InvalidModel(_) => CliError::Model(e.to_string()),
        other => CliError::Analysis(other.to_string()),
    }
}

/// Six significant digits, printf-%g style.
fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0.00000".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if exp < -4 || exp >= 6 {
        format!("{x:.5e}")
    } else {
        format!("{x:.*}", (5 - exp).max(0) as usize)
    }
}

fn load(path: &Path) -> Result<ParsedModel, CliError> {
    parse_model(path).map_err(|e| CliError::Model(e.to_string()))
}

fn resolve_config(parsed: &ParsedModel, args: &RunArgs) -> Result<AnalysisConfig, CliError> {
    let mut s: AnalysisSettings = parsed.settings.clone();
    let num = |text: &str, what: &str| {
        rcreach_core::model::parse_number(text)
            .map_err(|e| CliError::Analysis(format!("--{what}: {e}")))?
            .finite(what)
            .map_err(|e| CliError::Analysis(e.to_string()))
    };
    if let Some(t) = &args.tmax {
        s.tmax = Some(num(t, "tmax")?);
    }
    if let Some(j) = args.jumps {
        s.jumps = Some(j);
    }
    if let Some(t) = &args.tint {
        s.tint = Some(num(t, "tint")?);
    }
    if let Some(n) = args.samples {
        s.samples = Some(n);
    }
    if let Some(seed) = args.seed {
        s.seed = Some(seed);
    }
    if let Some(fm) = &args.fm {
        s.fm_mode = Some(parse_fm_mode(fm).map_err(|e| CliError::Analysis(e.to_string()))?);
    }
    if args.no_adapt_bounds {
        s.adapt_bounds = Some(false);
    }
    AnalysisConfig::from_settings(&s).map_err(from_pipeline)
}

fn check_model(rac: &Rac) -> Result<Vec<String>, CliError> {
    let violations = rac.validate();
    if Rac::has_errors(&violations) {
        let rendered: Vec<String> = violations.iter().map(|v| format!("  {v}")).collect();
        return Err(CliError::Model(format!(
            "model validation failed:\n{}",
            rendered.join("\n")
        )));
    }
    Ok(violations.iter().map(|v| v.to_string()).collect())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Analysis(format!("cannot serialize report: {e}")))?;
    std::fs::write(path, text)
        .map_err(|e| CliError::Analysis(format!("cannot write `{}`: {e}", path.display())))
}

fn print_report(report: &RunReport) {
    println!("p_max      {}", sig6(report.p_max));
    println!("e_stat     {}", sig6(report.e_stat));
    println!("e_inf      {}", sig6(report.e_inf));
    println!(
        "nodes      {} ({} goal node(s): {:?})",
        report.nodes,
        report.goal_nodes.len(),
        report.goal_nodes
    );
    println!(
        "region     {} member(s), hit fraction {}",
        report.region_members,
        sig6(report.in_region_fraction)
    );
    println!(
        "fm         max {} intermediate constraint(s) over {} elimination(s)",
        report.elimination.max_intermediate_constraints, report.elimination.eliminations_performed
    );
    println!("samples    {}", report.samples_used);
    let t = &report.times;
    println!(
        "time [s]   reach {} | project {} | bounds {} | integrate {} | total {}",
        sig6(t.reach_s),
        sig6(t.project_s),
        sig6(t.bounds_s),
        sig6(t.integrate_s),
        sig6(t.total_s)
    );
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
}

fn cmd_analyze(args: &RunArgs) -> Result<(), CliError> {
    let parsed = load(&args.model)?;
    check_model(&parsed.rac)?;
    let cfg = resolve_config(&parsed, args)?;
    let report = estimate_pipeline(&parsed.rac, &parsed.goal, &cfg).map_err(from_pipeline)?;
    print_report(&report);
    if let Some(path) = &args.json {
        write_json(path, &report)?;
    }
    Ok(())
}

fn cmd_bounds(args: &RunArgs) -> Result<(), CliError> {
    let parsed = load(&args.model)?;
    check_model(&parsed.rac)?;
    let cfg = resolve_config(&parsed, args)?;
    let unrolled = unroll(&parsed.rac, cfg.jumps);
    let rows = adapted_bounds(&unrolled, &cfg);
    println!(
        "{:<12} {:<34} {:<24} {:<24}",
        "dimension", "distribution", "unadapted", "adapted"
    );
    for row in &rows {
        let fmt = |b: &rcreach_core::stochastics::BoundPair| {
            format!("[{}, {}]", sig6(b.lo), sig6(b.hi))
        };
        println!(
            "{:<12} {:<34} {:<24} {:<24}{}",
            row.dim,
            row.distribution,
            fmt(&row.unadapted),
            fmt(&row.adapted),
            row.note.as_deref().map(|n| format!("  ({n})")).unwrap_or_default()
        );
    }
    if let Some(path) = &args.json {
        write_json(path, &rows)?;
    }
    Ok(())
}

fn cmd_tree(args: &RunArgs) -> Result<(), CliError> {
    let parsed = load(&args.model)?;
    check_model(&parsed.rac)?;
    let cfg = resolve_config(&parsed, args)?;
    let forest = build_forest(&parsed.rac, &cfg).map_err(from_pipeline)?;
    let goals = forest_goal_indices(&forest, &goal_of(&parsed));
    let dump = dump_forest(&forest.unrolled, &forest.trees, &goals, &cfg.tmax);
    match &args.json {
        Some(path) => write_json(path, &dump)?,
        None => {
            let text = serde_json::to_string_pretty(&dump)
                .map_err(|e| CliError::Analysis(format!("cannot serialize dump: {e}")))?;
            println!("{text}");
        }
    }
    Ok(())
}

fn goal_of(parsed: &ParsedModel) -> GoalSpec {
    parsed.goal.clone()
}

fn cmd_validate(args: &RunArgs) -> Result<(), CliError> {
    let parsed = load(&args.model)?;
    let violations = parsed.rac.validate();
    for v in &violations {
        println!("{v}");
    }
    if Rac::has_errors(&violations) {
        return Err(CliError::Model(format!(
            "{} error(s)",
            violations.iter().filter(|v| v.severity == Severity::Error).count()
        )));
    }
    if violations.is_empty() {
        println!("ok");
    } else {
        println!("ok ({} warning(s))", violations.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Analyze(args) => cmd_analyze(args),
        Cmd::Bounds(args) => cmd_bounds(args),
        Cmd::Tree(args) => cmd_tree(args),
        Cmd::Validate(args) => cmd_validate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
