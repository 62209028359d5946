use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use reflectx::check::run_all;
use reflectx::diagnostics::{DiagnosticsOptions, PathStatistics};
use reflectx::harness::experiment::dump_path;
use reflectx::{emit_report, parse_config, run_experiment, simulate_path, ExperimentOptions, ExperimentSpec};

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_CHECK: u8 = 3;

#[derive(Parser)]
#[command(name = "reflectx", version, about = "Penalized reflected stochastic Navier-Stokes simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the ensemble sweep described by a configuration file.
    Run {
        config: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        emit_fields: bool,
    },
    /// Print the canonical form of a configuration file.
    PrintConfig { config: PathBuf },
    /// Simulate one path at a given penalty level and seed.
    SinglePath {
        config: PathBuf,
        #[arg(long)]
        n: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        emit_fields: bool,
    },
    /// Run the built-in self-checks.
    Check {
        /// Smaller sample sizes.
        #[arg(long)]
        quick: bool,
    },
}

fn load(path: &PathBuf) -> Result<ExperimentSpec, ExitCode> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        ExitCode::from(EXIT_CONFIG)
    })?;
    parse_config(&text)
        .and_then(|s| s.with_env_overrides())
        .map_err(|e| {
            eprintln!("error: {}: {e}", path.display());
            ExitCode::from(EXIT_CONFIG)
        })
}

fn runtime_error(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_RUNTIME)
}

fn run(cli: Cli) -> Result<(), ExitCode> {
    match cli.command {
        Command::Run {
            config,
            workers,
            out_dir,
            emit_fields,
        } => {
            let mut spec = load(&config)?;
            if let Some(w) = workers {
                spec.workers = w;
            }
            spec.emit_fields |= emit_fields;
            let dir = out_dir.unwrap_or_else(|| spec.outputs.clone());
            let mut opts = ExperimentOptions::from_spec(&spec);
            opts.path_dir = Some(dir.join("paths"));
            let start = Instant::now();
            let report = run_experiment(&spec, &opts).map_err(runtime_error)?;
            let emitted = emit_report(&spec, &report, &dir, start.elapsed()).map_err(runtime_error)?;
            for level in &report.levels {
                println!(
                    "n = {:>10}: {} paths, E sup|u|^4 = {:.6}, E Var(L) = {:.6}, leak = {:.3e}",
                    level.n_penalty, level.n_paths, level.e_sup_u4.mean, level.var_l.mean, level.support_leak.mean
                );
            }
            println!("wrote {} files to {} (hash {})", emitted.files.len(), dir.display(), emitted.content_hash);
        }
        Command::PrintConfig { config } => {
            print!("{}", load(&config)?.to_config_string());
        }
        Command::SinglePath {
            config,
            n,
            seed,
            out_dir,
            emit_fields,
        } => {
            let spec = load(&config)?;
            let mut cfg = spec.base.clone();
            cfg.n_penalty = n;
            cfg.seed = seed;
            cfg.validate().map_err(|e| {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_CONFIG)
            })?;
            let path = simulate_path(&cfg).map_err(runtime_error)?;
            let stats = PathStatistics::from_path(&path, &DiagnosticsOptions::default()).map_err(runtime_error)?;
            let dir = out_dir.unwrap_or_else(|| spec.outputs.clone());
            dump_path(&dir, &path, emit_fields || spec.emit_fields).map_err(runtime_error)?;
            println!("steps            {}", path.steps());
            println!("sup |u|^2        {:.9}", stats.sup_h2);
            println!("sup (|u|-1)+^4   {:.3e}", stats.sup_penetration4);
            println!("Var(L)           {:.9}", stats.var_l);
            println!("int ||u||^2 dt   {:.9}", stats.v_norm_integral);
            println!("support leak     {:.3e}", stats.support_leak);
            println!("vi_min           {:.3e} ({} violations)", stats.vi.vi_min, stats.vi.violations);
            println!("noise digest     {}", path.noise_digest);
        }
        Command::Check { quick } => {
            let outcomes = run_all(quick);
            let mut ok = true;
            for c in &outcomes {
                println!("[{}] {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
                ok &= c.passed;
            }
            if !ok {
                return Err(ExitCode::from(EXIT_CHECK));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
