use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use esn_rmt::experiment::{cmd_compare, cmd_design, cmd_memory_curve, cmd_sweep, ExperimentConfig};
use esn_rmt::Error;
use log::info;

#[derive(Parser)]
#[command(name = "esn-rmt", version, about = "Noisy linear echo-state network experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo and theory NMSE over the η² grid.
    Sweep(Common),
    /// MC(τ) from the generic solver and the closed form.
    MemoryCurve(Common),
    /// Rank Haar σ candidates for the task's delay profile.
    Design(Common),
    /// Test NMSE columns of several configs side by side.
    Compare(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; repeat for `compare`.
    #[arg(long, required = true)]
    config: Vec<PathBuf>,
    /// Output CSV; falls back to the config's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Omit the leading `# generated` line.
    #[arg(long)]
    no_timestamp: bool,
    /// Worker threads (`ESN_RMT_THREADS` takes precedence).
    #[arg(long)]
    threads: Option<usize>,
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, Error> {
    match std::env::var("ESN_RMT_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| Error::Config(format!("ESN_RMT_THREADS must be a positive integer, got `{v}`"))),
        Err(_) => Ok(flag),
    }
}

fn output_path(args: &Common, cfg: &ExperimentConfig) -> Result<PathBuf, Error> {
    args.out
        .clone()
        .or_else(|| cfg.output.clone())
        .ok_or_else(|| Error::Config("no output path: pass --out or set `output`".into()))
}

fn single(args: &Common) -> Result<ExperimentConfig, Error> {
    match args.config.as_slice() {
        [one] => ExperimentConfig::load(one),
        _ => Err(Error::Config("this command takes exactly one --config".into())),
    }
}

fn run(cmd: Command) -> Result<(PathBuf, usize), Error> {
    let (args, name) = match &cmd {
        Command::Sweep(a) => (a, "sweep"),
        Command::MemoryCurve(a) => (a, "memory-curve"),
        Command::Design(a) => (a, "design"),
        Command::Compare(a) => (a, "compare"),
    };
    if let Some(n) = thread_count(args.threads)? {
        if n == 0 {
            return Err(Error::Config("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let stamp = !args.no_timestamp;
    info!("{name}: {} config(s)", args.config.len());
    let (out, rows) = match &cmd {
        Command::Sweep(a) => {
            let cfg = single(a)?;
            let out = output_path(a, &cfg)?;
            let n = cmd_sweep(&cfg, &out, stamp)?.len();
            (out, n)
        }
        Command::MemoryCurve(a) => {
            let cfg = single(a)?;
            let out = output_path(a, &cfg)?;
            let n = cmd_memory_curve(&cfg, &out, stamp)?.len();
            (out, n)
        }
        Command::Design(a) => {
            let cfg = single(a)?;
            let out = output_path(a, &cfg)?;
            let rows = cmd_design(&cfg, &out, stamp)?;
            if let Some(best) = rows.first() {
                println!("best sigma {} (score {:.6e})", best.sigma, best.score);
            }
            (out, rows.len())
        }
        Command::Compare(a) => {
            let cfgs = a.config.iter().map(|p| ExperimentConfig::load(p)).collect::<Result<Vec<_>, _>>()?;
            let out = output_path(a, &cfgs[0])?;
            let n = cmd_compare(&cfgs, &out, stamp)?.rows.len();
            (out, n)
        }
    };
    Ok((out, rows))
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidArgument { .. } => 2,
        e if e.is_non_convergence() => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok((out, rows)) => {
            info!("wrote {rows} rows to {}", out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
