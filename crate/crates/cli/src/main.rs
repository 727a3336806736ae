use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nmqsd_cli::output::read_file;
use nmqsd_cli::{replay, run_to_dir, threads_from_env, CliError, Completed, Experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "nmqsd", version, about = "Non-Markovian quantum state diffusion experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named experiment with optional overrides.
    Run {
        experiment: Experiment,
        /// Override a parameter, e.g. `--set gamma=2` or `--set T=4`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Output directory (default: the config's output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        paths: Option<u64>,
        /// Print the resolved configuration and exit.
        #[arg(long)]
        dry_run: bool,
    },
    /// Check a configuration file without running it.
    Validate { config: PathBuf },
    /// Re-run the configuration recorded in a manifest.
    Replay {
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn report(done: &Completed) {
    if let Some(s) = &done.summary {
        for c in &s.checks {
            let status = if c.passed { "PASS" } else { "FAIL" };
            println!("{status} {}: {} (threshold {}) {}", c.name, c.value, c.threshold, c.detail);
        }
        for w in &s.warnings {
            eprintln!("warning: {w}");
        }
    } else {
        eprintln!("warning: empty result set; only the manifest was written");
    }
    for f in &done.files {
        println!("wrote {}", f.display());
    }
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    let threads = threads_from_env()?;
    let done = match cli.command {
        Command::Run { experiment, set, out, seed, paths, dry_run } => {
            let mut cfg = ExperimentConfig::preset(experiment);
            for s in &set {
                cfg.set(s)?;
            }
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(n) = paths {
                cfg.n_paths = n;
            }
            if let Some(dir) = &out {
                cfg.output_dir = dir.display().to_string();
            }
            cfg.validate()?;
            if dry_run {
                println!("{}", cfg.to_json());
                return Ok(0);
            }
            run_to_dir(&cfg, &PathBuf::from(&cfg.output_dir), threads)?
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::from_json(&read_file(&config)?)?;
            println!("{} is a valid {} configuration", config.display(), cfg.experiment);
            return Ok(0);
        }
        Command::Replay { manifest, out } => replay(&manifest, out.as_deref(), threads)?,
    };
    report(&done);
    Ok(done.exit_code())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Numerical(inner) = &e {
                let mut src = std::error::Error::source(inner);
                while let Some(s) = src {
                    eprintln!("  caused by: {s}");
                    src = s.source();
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
