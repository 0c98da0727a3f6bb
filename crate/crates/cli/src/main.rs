//! `patchnet` command-line interface.
//!
//! Exit codes: 0 success, 2 usage or validation error, 3 runtime error.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use patchnet::formats::{emit_andl, emit_sbml, sanitize_name, write_trace_csv, NetDocument};
use patchnet::layers::{
    bind_layers, bind_layers_to_ids, derive_rates, parse_layers_csv, Aggregate, RateRule,
};
use patchnet::percolation::{estimate_threshold, probability_grid, Engine, PercolationError};
use patchnet::sim::{simulate_ssa, SimConfig};
use patchnet::spatial::{
    grid_from_region, load_adjacency_csv, load_region, neighbors, write_adjacency_csv, Neighborhood,
};
use patchnet::sweep::{
    auto_dir_name, expand_sweep, load_document, parse_sweep_file, run_sweep, write_merge, RunStatus,
};
use patchnet::templates::{apply_init, assemble_fire, assemble_sir, parse_init_csv, SirParams};

#[derive(Parser)]
#[command(
    name = "patchnet",
    version,
    about = "Assemble, serialize and simulate spatial Petri Nets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

// Parsed once per process; boxing the larger variants buys nothing.
#[allow(clippy::large_enum_variant)]
#[derive(Subcommand)]
enum Command {
    /// Rasterize a GeoJSON region into patches and write their adjacency.
    Grid(GridArgs),
    /// Build a templated net over an adjacency and write ANDL and/or SBML.
    Assemble(AssembleArgs),
    /// Run the stochastic simulator on a model file.
    Simulate(SimulateArgs),
    /// Expand a sweep file and run every configuration.
    Sweep(SweepArgs),
    /// Merge the traces of a sweep directory into merged.csv and summary.csv.
    Merge(MergeArgs),
    /// Estimate the site percolation threshold on an n x n lattice.
    Percolation(PercolationArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Moore,
    Vonneumann,
}

impl From<Mode> for Neighborhood {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Moore => Neighborhood::Moore,
            Mode::Vonneumann => Neighborhood::VonNeumann,
        }
    }
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct GridArgs {
    #[arg(long)]
    region: PathBuf,
    #[arg(long)]
    cell_size: f64,
    #[arg(long, value_enum, default_value = "moore")]
    mode: Mode,
    /// Adjacency matrix CSV.
    #[arg(long)]
    out: PathBuf,
    /// Optional patch table `patch_id,row,col,cx,cy`.
    #[arg(long)]
    grid_out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Template {
    Sir,
    Fire,
}

#[derive(Clone, Copy, ValueEnum)]
enum AggregateArg {
    Mean,
    Sum,
    Max,
}

impl From<AggregateArg> for Aggregate {
    fn from(a: AggregateArg) -> Self {
        match a {
            AggregateArg::Mean => Aggregate::Mean,
            AggregateArg::Sum => Aggregate::Sum,
            AggregateArg::Max => Aggregate::Max,
        }
    }
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
#[command(group = clap::ArgGroup::new("output").required(true).multiple(true).args(["andl", "sbml"]))]
struct AssembleArgs {
    #[arg(long, value_enum)]
    template: Template,
    /// Adjacency CSV (matrix or edge list).
    #[arg(long)]
    adjacency: PathBuf,
    /// Information layer CSV.
    #[arg(long)]
    layers: Option<PathBuf>,
    /// `rate:layer:slope:intercept:min:max`; repeatable.
    #[arg(long = "rate-rule")]
    rate_rules: Vec<String>,
    #[arg(long, value_enum, default_value = "mean")]
    aggregate: AggregateArg,
    /// Region the patches were generated from; needed for point-keyed layers.
    #[arg(long, requires = "cell_size")]
    region: Option<PathBuf>,
    #[arg(long, requires = "region")]
    cell_size: Option<f64>,
    /// Init CSV with marking and arc weight overrides.
    #[arg(long)]
    init: Option<PathBuf>,
    #[arg(long)]
    andl: Option<PathBuf>,
    #[arg(long)]
    sbml: Option<PathBuf>,
    /// Model name; defaults to the output file stem.
    #[arg(long)]
    name: Option<String>,
    #[arg(long, default_value_t = 0.3)]
    infect: f64,
    #[arg(long, default_value_t = 0.1)]
    recover: f64,
    #[arg(long, default_value_t = 0.05)]
    cross_infect: f64,
    /// Rate given to every spread transition of the fire template.
    #[arg(long, default_value_t = 1.0)]
    spread_rate: f64,
    /// Comma-separated occupied patch ids (fire); default all.
    #[arg(long, value_delimiter = ',')]
    occupied: Option<Vec<String>>,
    /// Comma-separated burning patch ids (fire).
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<String>>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct SimulateArgs {
    /// `.andl`, `.xml` or `.sbml` model.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    t_end: f64,
    #[arg(long, default_value_t = 1.0)]
    record_dt: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = SimConfig::DEFAULT_MAX_EVENTS)]
    max_events: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep file (TOML).
    #[arg(long)]
    spec: PathBuf,
    /// Defaults to `<name>_<UTC timestamp>` in the current directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    parallelism: u16,
}

#[derive(Args)]
struct MergeArgs {
    #[arg(long)]
    dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Oracle,
    Net,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct PercolationArgs {
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 0.35)]
    p_min: f64,
    #[arg(long, default_value_t = 0.47)]
    p_max: f64,
    #[arg(long, default_value_t = 0.01)]
    step: f64,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "oracle")]
    engine: EngineArg,
    #[arg(long, value_enum, default_value = "moore")]
    mode: Mode,
    /// `p,spanning_prob,mean_cluster_size` CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum CliError {
    /// Bad flags or invalid input data.
    Usage(String),
    /// The inputs were fine but the work failed.
    Runtime(String),
}

type CliResult<T = ()> = Result<T, CliError>;

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> CliResult {
    fs::write(path, contents).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn grid(args: GridArgs) -> CliResult {
    let poly = load_region(&read(&args.region)?).map_err(usage)?;
    let grid = grid_from_region(&poly, args.cell_size).map_err(usage)?;
    let adj = neighbors(&grid, args.mode.into());
    write(&args.out, &write_adjacency_csv(&adj))?;
    if let Some(path) = &args.grid_out {
        write(path, &grid.to_csv())?;
    }
    println!("{} patches, {} edges", adj.len(), adj.edge_count());
    Ok(())
}

fn assemble(args: AssembleArgs) -> CliResult {
    let adj = load_adjacency_csv(&read(&args.adjacency)?).map_err(usage)?;
    let init = match &args.init {
        Some(path) => Some(parse_init_csv(&read(path)?).map_err(usage)?),
        None => None,
    };
    let (net, marking, rates) = match args.template {
        Template::Sir => {
            let mut params = SirParams::new(args.infect, args.recover, args.cross_infect);
            if let Some(path) = &args.layers {
                let layers = parse_layers_csv(&read(path)?).map_err(usage)?;
                let bound = match (&args.region, args.cell_size) {
                    (Some(region), Some(cell)) => {
                        let poly = load_region(&read(region)?).map_err(usage)?;
                        let grid = grid_from_region(&poly, cell).map_err(usage)?;
                        bind_layers(&grid, &layers, args.aggregate.into())
                    }
                    _ => bind_layers_to_ids(adj.nodes(), &layers, args.aggregate.into()),
                }
                .map_err(usage)?;
                for w in &bound.warnings {
                    eprintln!("warning: {w}");
                }
                let rules = args
                    .rate_rules
                    .iter()
                    .map(|r| r.parse::<RateRule>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(usage)?;
                params =
                    params.with_overrides(derive_rates(&bound.attributes, &rules).map_err(usage)?);
            } else if !args.rate_rules.is_empty() {
                return Err(usage("--rate-rule needs --layers"));
            }
            let (net, rates) = assemble_sir(&adj, &params).map_err(usage)?;
            let (net, marking) = apply_init(&net, init.as_ref()).map_err(usage)?;
            (net, marking, rates)
        }
        Template::Fire => {
            let occupied: BTreeSet<String> = match &args.occupied {
                Some(ids) => ids.iter().cloned().collect(),
                None => adj.nodes().iter().cloned().collect(),
            };
            let seeds: BTreeSet<String> = args.seeds.iter().flatten().cloned().collect();
            let (net, seeded) = assemble_fire(&adj, &occupied, &seeds).map_err(usage)?;
            // --init wins, then --seeds, then the 100-token default
            let (net, marking) = if init.is_none() && args.seeds.is_some() {
                (net, seeded)
            } else {
                apply_init(&net, init.as_ref()).map_err(usage)?
            };
            let rates = net
                .transitions()
                .iter()
                .map(|t| (t.clone(), args.spread_rate))
                .collect();
            (net, marking, rates)
        }
    };
    let name = match &args.name {
        Some(name) => name.clone(),
        None => {
            let path = args
                .andl
                .as_ref()
                .or(args.sbml.as_ref())
                .expect("an output is required");
            sanitize_name(&path.file_stem().unwrap_or_default().to_string_lossy())
        }
    };
    let doc = NetDocument::new(name, net, marking, &rates).map_err(usage)?;
    if let Some(path) = &args.andl {
        write(path, &emit_andl(&doc))?;
    }
    if let Some(path) = &args.sbml {
        write(path, &emit_sbml(&doc))?;
    }
    println!(
        "{}: {} places, {} transitions",
        doc.name(),
        doc.net().place_count(),
        doc.net().transition_count()
    );
    Ok(())
}

fn simulate(args: SimulateArgs) -> CliResult {
    let cfg =
        SimConfig::new(args.t_end, args.record_dt, args.seed).with_max_events(args.max_events);
    cfg.validate().map_err(usage)?;
    let doc = load_document(&args.model).map_err(usage)?;
    let result = simulate_ssa(&doc, &cfg).map_err(runtime)?;
    write(&args.out, &write_trace_csv(&result.trace))?;
    if result.truncated {
        eprintln!(
            "warning: stopped after {} events before t_end; trace ends at t = {}",
            result.events,
            result.trace.times.last().copied().unwrap_or(0.0)
        );
    }
    println!("{} events, {} rows", result.events, result.trace.len());
    Ok(())
}

fn sweep(args: SweepArgs) -> CliResult {
    let text = read(&args.spec)?;
    let base_dir = args.spec.parent().unwrap_or(Path::new("."));
    let file = parse_sweep_file(&text, base_dir).map_err(usage)?;
    let records = expand_sweep(&file.spec).map_err(usage)?;
    let out_dir = args
        .out_dir
        .unwrap_or_else(|| PathBuf::from(auto_dir_name(&file.spec.name, chrono::Utc::now())));
    let done = run_sweep(
        &file.spec,
        &records,
        &file.sim,
        &out_dir,
        args.parallelism.into(),
    )
    .map_err(runtime)?;
    let count = |s: &str| done.iter().filter(|r| r.status.as_str() == s).count();
    println!(
        "{}: {} runs ({} ok, {} truncated, {} failed)",
        out_dir.display(),
        done.len(),
        count("ok"),
        count("truncated"),
        count("failed")
    );
    let failed: Vec<&str> = done
        .iter()
        .filter_map(|r| match &r.status {
            RunStatus::Failed(msg) => Some(msg.as_str()),
            _ => None,
        })
        .collect();
    if let Some(first) = failed.first() {
        return Err(runtime(format!(
            "{} run(s) failed; first: {first}",
            failed.len()
        )));
    }
    Ok(())
}

fn merge(args: MergeArgs) -> CliResult {
    let (merged, summary) = write_merge(&args.dir).map_err(runtime)?;
    println!("wrote {} and {}", merged.display(), summary.display());
    Ok(())
}

fn percolation(args: PercolationArgs) -> CliResult {
    let grid = probability_grid(args.p_min, args.p_max, args.step).map_err(usage)?;
    let engine = match args.engine {
        EngineArg::Oracle => Engine::Oracle,
        EngineArg::Net => Engine::Net,
    };
    let est = estimate_threshold(
        args.n,
        &grid,
        args.trials,
        args.seed,
        args.mode.into(),
        engine,
    )
    .map_err(|e| match e {
        PercolationError::NoCrossing { .. } => runtime(format!("{e}; try a wider p range")),
        PercolationError::Net(_) | PercolationError::Template(_) => runtime(e),
        _ => usage(e),
    })?;
    if let Some(path) = &args.out {
        write(path, &est.to_csv())?;
    }
    println!("p_c_estimate = {}", est.p_c_estimate);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Grid(a) => grid(a),
        Command::Assemble(a) => assemble(a),
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a),
        Command::Merge(a) => merge(a),
        Command::Percolation(a) => percolation(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
