//! `hoag`: runs hyperparameter optimization experiments and writes
//! machine-readable traces.

mod commands;
mod spec;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{ArgGroup, Args, Parser, Subcommand};
use hoag_core::ScheduleKind;

use crate::commands::{cmd_compare, cmd_run, create_output, gradcheck};
use crate::spec::{build_instance, DataSource, Method, ProblemKind, RunSpec, SyntheticSpec};

#[derive(Parser)]
#[command(name = "hoag", version, about = "Hyperparameter optimization with approximate gradients")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one method and write its trace as JSON lines plus a summary line.
    Run(RunArgs),
    /// Run several methods on one instance and write a suboptimality CSV.
    Compare(CompareArgs),
    /// Compare approximate hypergradients against finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").args(["data", "synthetic"])))]
struct InstanceArgs {
    #[arg(long, value_enum)]
    problem: Option<ProblemKind>,
    /// libsvm file, or CSV when the name ends in `.csv`.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Synthetic data `n,p[,K]` (the toy problem uses `p` as its dimension).
    #[arg(long)]
    synthetic: Option<SyntheticSpec>,
    /// CSV column holding the target.
    #[arg(long, default_value_t = 0)]
    target_column: usize,
    /// Seeds data generation, the split and random search.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl InstanceArgs {
    fn source(&self) -> anyhow::Result<(ProblemKind, DataSource)> {
        let problem = self.problem.context("--problem is required")?;
        let data = match (&self.data, self.synthetic) {
            (Some(path), _) => DataSource::File {
                path: path.clone(),
                target_column: self.target_column,
            },
            (None, Some(s)) => DataSource::Synthetic(s),
            (None, None) => bail!("one of --data or --synthetic is required"),
        };
        Ok((problem, data))
    }

    fn spec(&self, method: Method, schedule: Option<ScheduleKind>, max_iters: usize, grid_points: usize) -> anyhow::Result<RunSpec> {
        let (problem, data) = self.source()?;
        Ok(RunSpec {
            problem,
            data,
            method,
            schedule,
            seed: self.seed,
            max_iters,
            grid_points,
            out: None,
        })
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, value_enum, default_value = "hoag")]
    method: Method,
    /// Tolerance schedule (hoag only, default exponential).
    #[arg(long)]
    schedule: Option<ScheduleKind>,
    /// Outer iterations (hoag, iterdiff) or samples (random).
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    #[arg(long, default_value_t = 10)]
    grid_points: usize,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Runs to compare, each `hoag[:schedule]`, `iterdiff`, `grid` or `random`.
    #[arg(long, value_delimiter = ',', default_value = "hoag:exponential,hoag:exact")]
    method: Vec<String>,
    /// Run specs as JSON files; replaces the instance and method flags.
    #[arg(long = "spec", conflicts_with_all = ["problem", "source"])]
    specs: Vec<PathBuf>,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    #[arg(long, default_value_t = 10)]
    grid_points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GradcheckArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Hyperparameters to check at; the problem's default start when absent.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    lambda: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-3,1e-4,1e-5,1e-6,1e-7,1e-8")]
    eps_list: Vec<f64>,
    /// Central-difference step.
    #[arg(long, default_value_t = 1e-5)]
    fd_step: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_method(label: &str) -> anyhow::Result<(Method, Option<ScheduleKind>)> {
    let (name, schedule) = match label.split_once(':') {
        Some((n, s)) => (n, Some(s.parse::<ScheduleKind>()?)),
        None => (label, None),
    };
    let method = <Method as clap::ValueEnum>::from_str(name.trim(), false)
        .map_err(|_| anyhow::anyhow!("unknown method {name:?}"))?;
    Ok((method, schedule))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run(args) => {
            let mut spec = args.instance.spec(args.method, args.schedule, args.max_iters, args.grid_points)?;
            spec.out = args.out;
            cmd_run(&spec)
        }
        Command::Compare(args) => {
            let specs = if args.specs.is_empty() {
                args.method
                    .iter()
                    .map(|label| {
                        let (method, schedule) = parse_method(label)?;
                        args.instance.spec(method, schedule, args.max_iters, args.grid_points)
                    })
                    .collect::<anyhow::Result<Vec<_>>>()?
            } else {
                args.specs
                    .iter()
                    .map(|path| {
                        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
                    })
                    .collect::<anyhow::Result<Vec<RunSpec>>>()?
            };
            cmd_compare(&specs, args.out.as_deref())
        }
        Command::Gradcheck(args) => {
            let spec = args.instance.spec(Method::Hoag, None, 1, 2)?;
            spec.validate()?;
            let instance = build_instance(&spec)?;
            let report = gradcheck(instance.problem.as_ref(), args.lambda, &args.eps_list, args.fd_step)?;
            let mut out = create_output(args.out.as_deref())?;
            serde_json::to_writer_pretty(&mut out, &report)?;
            writeln!(out)?;
            out.flush()?;
            Ok(())
        }
    }
}

/// 2 when a solver gave up, 1 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    use hoag_core::Error;
    let solver = err.chain().any(|cause| {
        matches!(
            cause.downcast_ref::<Error>(),
            Some(Error::InnerNotConverged(_) | Error::CgNotConverged(_) | Error::NonFinite(_) | Error::Diverged(_))
        )
    });
    if solver {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
