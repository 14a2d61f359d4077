//! Command-line front end: `dadal solve`, `dadal export` and `dadal bench`.
//!
//! Exit codes: 0 converged, 1 usage or input error, 2 iteration or time
//! limit, 3 numeric failure.

pub mod bench;
pub mod instance;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dadal_core::engine::Sigma0Rule;
use dadal_core::io::{format_edge_list, write_history, write_sdpa, write_solution, RunRecord};
use dadal_core::subsolver::{StepStrategy, DEFAULT_GRID_UPPER};
use dadal_core::{solve, Method, SdpError, SolveStatus, SolverConfig};

use instance::{GraphSource, InstanceSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_LIMIT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

pub fn exit_code(status: SolveStatus) -> i32 {
    match status {
        SolveStatus::Converged => EXIT_OK,
        SolveStatus::IterationLimit | SolveStatus::TimeLimit => EXIT_LIMIT,
        SolveStatus::NumericFailure => EXIT_NUMERIC,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "dadal",
    version,
    about = "Alternating-direction augmented Lagrangian SDP solver"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one instance and print a run record.
    Solve(SolveArgs),
    /// Write a generated instance to an SDPA or edge-list file.
    Export(ExportArgs),
    /// Run every instance of a manifest with each listed method.
    Bench(bench::BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Theta,
    Lop,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    Sdpa,
    Edges,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StepArg {
    Analytic,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Sigma0RuleArg {
    Product,
    Ratio,
}

#[derive(Debug, Clone, Args)]
pub struct InstanceArgs {
    /// SDPA sparse file, or an edge list (theta instance) when the extension
    /// is .edges/.el or --format edges is given.
    #[arg(long, conflicts_with = "gen")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, requires = "input")]
    pub format: Option<InputFormat>,
    /// Generate an instance instead of reading one.
    #[arg(long, value_enum)]
    pub gen: Option<Family>,
    /// Edge-list file for --gen theta.
    #[arg(long, conflicts_with = "family")]
    pub graph: Option<PathBuf>,
    /// Graph family for --gen theta: cycle:N, complete:N, empty:N, petersen, gnp:N:P.
    #[arg(long)]
    pub family: Option<String>,
    /// Number of objects for --gen lop.
    #[arg(long)]
    pub objects: Option<usize>,
    /// Matrix order for --gen random.
    #[arg(long)]
    pub n: Option<usize>,
    /// Constraint count for --gen random.
    #[arg(long)]
    pub m: Option<usize>,
    /// Fraction of nonzero upper-triangle entries per constraint for --gen random.
    #[arg(long, default_value_t = 0.05)]
    pub density: f64,
    /// Generator seed; defaults to --seed.
    #[arg(long)]
    pub gen_seed: Option<u64>,
}

impl InstanceArgs {
    pub fn spec(&self) -> anyhow::Result<InstanceSpec> {
        if let Some(path) = &self.input {
            let format = self.format.unwrap_or_else(|| guess_format(path));
            return Ok(match format {
                InputFormat::Sdpa => InstanceSpec::Sdpa(path.clone()),
                InputFormat::Edges => InstanceSpec::Theta(GraphSource::File(path.clone())),
            });
        }
        match self.gen {
            None => bail!("one of --input or --gen is required"),
            Some(Family::Theta) => match (&self.graph, &self.family) {
                (Some(p), _) => Ok(InstanceSpec::Theta(GraphSource::File(p.clone()))),
                (None, Some(f)) => Ok(InstanceSpec::Theta(GraphSource::parse_family(f)?)),
                (None, None) => bail!("--gen theta needs --graph <edge list> or --family <spec>"),
            },
            Some(Family::Lop) => {
                let objects = self.objects.context("--gen lop needs --objects")?;
                Ok(InstanceSpec::Lop { objects })
            }
            Some(Family::Random) => {
                let n = self.n.context("--gen random needs --n")?;
                let m = self.m.context("--gen random needs --m")?;
                Ok(InstanceSpec::Random {
                    n,
                    m,
                    density: self.density,
                })
            }
        }
    }
}

fn guess_format(path: &Path) -> InputFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some("edges" | "el" | "edgelist") => InputFormat::Edges,
        _ => InputFormat::Sdpa,
    }
}

/// Solver settings shared by `solve` and `bench`.
#[derive(Debug, Clone, Args)]
pub struct TuningArgs {
    #[arg(long, default_value_t = 1e-5)]
    pub eps: f64,
    #[arg(long, default_value_t = 20_000)]
    pub max_iter: usize,
    /// Wall-clock limit in seconds.
    #[arg(long, default_value_t = 3600.0)]
    pub time_limit: f64,
    /// Inner ascent steps per DADAL iteration.
    #[arg(long, default_value_t = 2)]
    pub inner_iters: usize,
    /// Inner gradient tolerance; defaults to 1e-10 (1 + ||C||).
    #[arg(long)]
    pub eps_inner: Option<f64>,
    /// Starting penalty; computed from the starting residuals when absent.
    #[arg(long)]
    pub sigma0: Option<f64>,
    #[arg(long, value_enum, default_value_t = Sigma0RuleArg::Product)]
    pub sigma0_rule: Sigma0RuleArg,
    /// Keep the penalty at its starting value.
    #[arg(long)]
    pub sigma_fixed: bool,
    #[arg(long, default_value_t = 10)]
    pub sigma_patience: usize,
    #[arg(long, value_enum, default_value_t = StepArg::Analytic)]
    pub step: StepArg,
    /// Grid size for --step grid.
    #[arg(long, default_value_t = 4000)]
    pub grid_points: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl TuningArgs {
    pub fn config(&self, method: Method) -> SolverConfig {
        SolverConfig {
            method,
            eps: self.eps,
            max_outer_iters: self.max_iter,
            time_limit_s: self.time_limit,
            inner_iters: self.inner_iters,
            eps_inner: self.eps_inner,
            sigma0: self.sigma0,
            sigma0_rule: match self.sigma0_rule {
                Sigma0RuleArg::Product => Sigma0Rule::ResidualProduct,
                Sigma0RuleArg::Ratio => Sigma0Rule::ResidualRatio,
            },
            sigma_fixed: self.sigma_fixed,
            sigma_patience: self.sigma_patience,
            step_strategy: match self.step {
                StepArg::Analytic => StepStrategy::Analytic,
                StepArg::Grid => StepStrategy::Grid {
                    points: self.grid_points,
                    upper: DEFAULT_GRID_UPPER,
                },
            },
            seed: self.seed,
            ..SolverConfig::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[command(flatten)]
    pub tuning: TuningArgs,
    #[arg(long, default_value = "dadal")]
    pub solver: Method,
    /// Iteration-history CSV.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Dense solution file with X, y and Z.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Instance name for the run record.
    #[arg(long)]
    pub name: Option<String>,
    /// Print the run-record header line first.
    #[arg(long)]
    pub header: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output path; theta instances built from a family can also be written
    /// as an edge list with --format-out edges.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = InputFormat::Sdpa)]
    pub format_out: InputFormat,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    EXIT_OK
                }
                _ => EXIT_USAGE,
            };
        }
    };
    let result = match cli.command {
        Command::Solve(args) => run_solve(&args),
        Command::Export(args) => run_export(&args).map(|_| EXIT_OK),
        Command::Bench(args) => bench::run_bench(&args),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        match e.downcast_ref::<SdpError>() {
            Some(SdpError::Numeric { .. }) => EXIT_NUMERIC,
            _ => EXIT_USAGE,
        }
    })
}

pub fn run_solve(args: &SolveArgs) -> anyhow::Result<i32> {
    let spec = args.instance.spec()?;
    let gen_seed = args.instance.gen_seed.unwrap_or(args.tuning.seed);
    let problem = spec.build(gen_seed)?;
    let cfg = args.tuning.config(args.solver);
    let report = solve(&problem, &cfg)?;

    if let Some(path) = &args.log {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        write_history(&report, &mut w)?;
        w.flush()?;
    }
    if let Some(path) = &args.out {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        write_solution(&report.final_x, &report.final_y, &report.final_z, &mut w)?;
        w.flush()?;
    }
    let name = args.name.clone().unwrap_or_else(|| spec.label(gen_seed));
    let record = RunRecord::from_report(&name, &problem, &report);
    if args.header {
        println!("{}", RunRecord::HEADER);
    }
    println!("{}", record.csv_row());
    if let Some(msg) = &report.failure {
        eprintln!("numeric failure: {msg}");
    }
    Ok(exit_code(report.status))
}

pub fn run_export(args: &ExportArgs) -> anyhow::Result<()> {
    let spec = args.instance.spec()?;
    let seed = args.instance.gen_seed.unwrap_or(args.seed);
    match args.format_out {
        InputFormat::Sdpa => write_sdpa(&spec.build(seed)?, &args.output)?,
        InputFormat::Edges => {
            let InstanceSpec::Theta(source) = &spec else {
                bail!("--format-out edges needs a theta instance");
            };
            std::fs::write(&args.output, format_edge_list(&source.build(seed)?))?;
        }
    }
    Ok(())
}
