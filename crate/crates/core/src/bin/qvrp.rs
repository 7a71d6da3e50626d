use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qvrp::encoding::{
    build_clustering_qubo, build_cvrp_qubo, build_tsp_qubo, ising_to_text, qubo_to_text, QuboProblem,
};
use qvrp::harness::{
    cmd_landscape, cmd_solve, cmd_sweep, oracle_report, read_all, render_table, summarize, write_summary_csv,
    ExperimentConfig, RunOptions, AUTO_PENALTY_FACTOR,
};
use qvrp::instance::{
    fig1_blue, fig1_instance, fleet_plan, generate_euclidean_tsp, generate_random_tsp, load_instance, load_tsp,
    InstanceFile,
};
use qvrp::oracle::{p_min, pmin_statistics_range};
use qvrp::{Error, Result};

#[derive(Parser)]
#[command(name = "qvrp", version, about = "Vehicle-routing QUBOs on an exact statevector simulator")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write an instance file.
    Generate(GenerateArgs),
    /// Print the QUBO or Ising model of an instance.
    Encode(EncodeArgs),
    /// Brute-force ground truth for an instance, or a P_min study.
    Oracle(OracleArgs),
    /// Run the single cell of a config.
    Solve(RunArgs),
    /// Run every cell of a config and summarize.
    Sweep(RunArgs),
    /// Scan the cost on a random plane through the initial parameters.
    Landscape(LandscapeArgs),
    /// Summarize run CSVs.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Random TSP with integer distances in [low, high].
    #[arg(long, group = "kind")]
    tsp: bool,
    /// Euclidean TSP on rounded distances between points in a square.
    #[arg(long, group = "kind")]
    euclidean: bool,
    /// Completed TSP subinstance of the reference CVRP (n = 3..=6).
    #[arg(long, group = "kind")]
    fig1_blue: bool,
    /// The full reference CVRP instance.
    #[arg(long, group = "kind")]
    fig1: bool,
    #[arg(short, long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10.0)]
    low: f64,
    #[arg(long, default_value_t = 50.0)]
    high: f64,
    #[arg(long, default_value_t = 100.0)]
    side: f64,
    /// Output file (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Problem {
    Tsp,
    Cvrp,
    Clustering,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Qubo,
    Ising,
}

#[derive(Args)]
struct EncodeArgs {
    instance: PathBuf,
    #[arg(long, value_enum, default_value = "tsp")]
    problem: Problem,
    /// Penalty weight, or `auto` for 1.2 * P_min (TSP only).
    #[arg(long, default_value = "auto")]
    penalty: String,
    /// Multiplicative energy scaling.
    #[arg(long, default_value_t = 1.0)]
    scaling: f64,
    #[arg(long, value_enum, default_value = "qubo")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    /// TSP instance file (omit with --pmin-study).
    instance: Option<PathBuf>,
    #[arg(long)]
    penalty: Option<f64>,
    /// Mean and spread of P_min over random instances.
    #[arg(long)]
    pmin_study: bool,
    #[arg(long, value_delimiter = ',', default_value = "4,5,6")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    /// Replaces the optimizer seed list by `seed, seed+1, ...` of the same length.
    #[arg(long)]
    seed: Option<u64>,
    /// Runs CSV (overrides the config's output path).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write 0 for wall time so outputs are byte-reproducible.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct LandscapeArgs {
    config: PathBuf,
    #[arg(long, default_value_t = std::f64::consts::PI)]
    extent: f64,
    #[arg(long, default_value_t = 101)]
    resolution: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "landscape.csv")]
    out: PathBuf,
    /// Also render an SVG heatmap.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(required = true)]
    csv: Vec<PathBuf>,
    /// Summary CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn generate(a: GenerateArgs) -> Result<()> {
    let file = if a.fig1 {
        InstanceFile::from_cvrp(&fig1_instance())
    } else if a.fig1_blue {
        InstanceFile::from_tsp(&fig1_blue(a.n)?)
    } else if a.euclidean {
        InstanceFile::from_tsp(&generate_euclidean_tsp(a.n, a.seed, a.side)?)
    } else {
        InstanceFile::from_tsp(&generate_random_tsp(a.n, a.seed, a.low, a.high)?)
    };
    emit(&file.to_canonical_json(), a.out.as_deref())
}

fn parse_penalty(text: &str) -> Result<Option<f64>> {
    if text == "auto" {
        return Ok(None);
    }
    text.parse()
        .map(Some)
        .map_err(|_| Error::InvalidArgument(format!("penalty {text:?} is neither a number nor \"auto\"")))
}

fn encode(a: EncodeArgs) -> Result<()> {
    let penalty = parse_penalty(&a.penalty)?;
    let qubo: QuboProblem = match a.problem {
        Problem::Tsp => {
            let inst = load_tsp(&a.instance)?;
            let p = match penalty {
                Some(p) => p,
                None => AUTO_PENALTY_FACTOR * p_min(&inst)?,
            };
            build_tsp_qubo(&inst, a.scaling, p)?
        }
        Problem::Cvrp | Problem::Clustering => {
            let inst = load_instance(&a.instance)?;
            let p = penalty.ok_or_else(|| {
                Error::InvalidArgument("CVRP and clustering encodings need an explicit --penalty".into())
            })?;
            let q = match a.problem {
                Problem::Cvrp => build_cvrp_qubo(&inst, fleet_plan(&inst), p, p, p)?,
                _ => build_clustering_qubo(&inst, p, p, p)?,
            };
            q.scaled(a.scaling)
        }
    };
    let text = match a.format {
        Format::Qubo => qubo_to_text(&qubo),
        Format::Ising => ising_to_text(&qubo.to_ising()),
    };
    emit(&text, a.out.as_deref())
}

fn oracle(a: OracleArgs) -> Result<()> {
    let json = if a.pmin_study {
        serde_json::to_string_pretty(&pmin_statistics_range(&a.sizes, a.count, a.seed, 10.0, 50.0)?)
    } else {
        let path = a
            .instance
            .ok_or_else(|| Error::InvalidArgument("oracle needs an instance file or --pmin-study".into()))?;
        serde_json::to_string_pretty(&oracle_report(&load_tsp(path)?, a.penalty)?)
    };
    let json = json.map_err(|e| Error::InvalidArgument(e.to_string()))?;
    emit(&format!("{json}\n"), a.out.as_deref())
}

fn load_config(a: &RunArgs) -> Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = ExperimentConfig::read(&a.config)?;
    if let Some(s) = a.seed {
        cfg.reseed(s);
    }
    let out = a
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .ok_or_else(|| Error::InvalidArgument("no output path: pass --out or set \"output\"".into()))?;
    Ok((cfg, out))
}

fn run(cli: Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Encode(a) => encode(a),
        Command::Oracle(a) => oracle(a),
        Command::Solve(a) => {
            let (cfg, out) = load_config(&a)?;
            let recs = cmd_solve(&cfg, &out, RunOptions { record_time: !a.no_timing })?;
            print!("{}", render_table(&summarize(&recs)));
            Ok(())
        }
        Command::Sweep(a) => {
            let (cfg, out) = load_config(&a)?;
            let rows = cmd_sweep(&cfg, &out, RunOptions { record_time: !a.no_timing })?;
            print!("{}", render_table(&rows));
            Ok(())
        }
        Command::Landscape(a) => {
            let cfg = ExperimentConfig::read(&a.config)?;
            let scan = cmd_landscape(&cfg, a.extent, a.resolution, a.seed)?;
            scan.write_csv(&a.out)?;
            if let Some(svg) = &a.svg {
                std::fs::write(svg, scan.to_svg(4))?;
            }
            Ok(())
        }
        Command::Report(a) => {
            let rows = summarize(&read_all(&a.csv)?);
            if let Some(out) = &a.out {
                write_summary_csv(out, &rows)?;
            }
            print!("{}", render_table(&rows));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
