//! `phlab`: run a configured experiment or render an artifact to SVG.
//!
//! Exit codes: 0 success, 2 validation error, 3 I/O error, 1 anything else.
//! Failures print a single `error: <kind>: <reason>` line on stderr.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use phlab_core::experiment::{self, ExperimentConfig, RunOptions};
use phlab_core::{render, Error};

#[derive(Parser)]
#[command(
    name = "phlab",
    version,
    about = "Partially hyperbolic dynamics laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the splitting and its constants on a grid
    Splitting(RunArgs),
    /// Grow a strong leaf (and optionally refine it dynamically)
    Leaf(RunArgs),
    /// Accessibility in relation to open sets
    Access(RunArgs),
    /// Property SH survey
    Sh(RunArgs),
    /// Property SH survey of the inverse
    ShInverse(RunArgs),
    /// Property SH under a family of shear perturbations
    ShScan(RunArgs),
    Mixing(RunArgs),
    Transitivity(RunArgs),
    Nonwandering(RunArgs),
    Periodic(RunArgs),
    Minimality(RunArgs),
    /// Hypotheses and conclusions side by side over shear amplitudes
    RobustSuite(RunArgs),
    /// Render a vertex or matrix CSV to SVG
    Render(RenderArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed (overrides the config)
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; output bytes do not depend on it
    #[arg(long)]
    threads: Option<usize>,
    /// Also render polyline and matrix CSVs, e.g. `0,1`
    #[arg(long, value_name = "I,J", value_parser = parse_projection)]
    render: Option<(usize, usize)>,
}

#[derive(Args)]
struct RenderArgs {
    input: PathBuf,
    #[arg(long, value_name = "I,J", value_parser = parse_projection, default_value = "0,1")]
    projection: (usize, usize),
    /// Defaults to the input path with an `.svg` extension
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_projection(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected I,J, got {s:?}"))?;
    let parse = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| format!("bad axis {t:?}"))
    };
    Ok((parse(a)?, parse(b)?))
}

fn run(name: &str, args: RunArgs) -> Result<(), Error> {
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(Error::InvalidInput("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    }
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Error::Io(format!("{}: {e}", args.config.display())))?;
    let mut config = ExperimentConfig::from_json(&text)?;
    if config.experiment.name() != name {
        return Err(Error::InvalidInput(format!(
            "config describes a {} experiment, not {name}",
            config.experiment.name()
        )));
    }
    if let Some(out) = args.out {
        config.output_dir = out;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let manifest = experiment::run_experiment_with(
        &config,
        RunOptions {
            render: args.render,
        },
    )?;
    println!(
        "{} artifacts written to {} in {:.3} s",
        manifest.artifacts.len() + 1,
        config.output_dir.display(),
        manifest.wall_clock_seconds
    );
    Ok(())
}

fn render_command(args: RenderArgs) -> Result<(), Error> {
    let out = args.out.unwrap_or_else(|| args.input.with_extension("svg"));
    render::render_file(&args.input, args.projection, &out)?;
    println!("{}", out.display());
    Ok(())
}

fn exit_code(e: &Error) -> (u8, &'static str) {
    match e {
        Error::InvalidInput(_) | Error::InvalidSpec(_) => (2, "validation"),
        Error::Io(_) => (3, "io"),
        _ => (1, "numerical"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Render(args) => render_command(args),
        Command::Splitting(a) => run("splitting", a),
        Command::Leaf(a) => run("leaf", a),
        Command::Access(a) => run("access", a),
        Command::Sh(a) => run("sh", a),
        Command::ShInverse(a) => run("sh-inverse", a),
        Command::ShScan(a) => run("sh-scan", a),
        Command::Mixing(a) => run("mixing", a),
        Command::Transitivity(a) => run("transitivity", a),
        Command::Nonwandering(a) => run("nonwandering", a),
        Command::Periodic(a) => run("periodic", a),
        Command::Minimality(a) => run("minimality", a),
        Command::RobustSuite(a) => run("robust-suite", a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, kind) = exit_code(&e);
            let reason = e.to_string().replace(['\n', '\r'], " ");
            eprintln!("error: {kind}: {reason}");
            ExitCode::from(code)
        }
    }
}
