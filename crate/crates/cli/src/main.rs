use clap::{Parser, Subcommand};
use loopda_cli::config::Overrides;
use loopda_cli::{commands, exit_code_for, exit_codes};
use std::path::PathBuf;
use std::process::ExitCode;

/// Data-assimilation testbed: twin experiments with chaotic loop models.
#[derive(Parser)]
#[command(name = "loopda", version, about)]
struct Cli {
    /// Worker threads for sweep cells (default: number of processors).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one twin experiment from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Master seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Paper-scale settings (100 seeds, 1000 windows, 500 spin-up).
        #[arg(long)]
        full_scale: bool,
    },
    /// Run the configured sweep (windows, inflation, or density).
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        full_scale: bool,
    },
    /// Long-run model climatology.
    Climatology {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        full_scale: bool,
    },
    /// Self-check suites: tlm, filters, localization.
    Verify {
        /// Which suite to run.
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    if let Some(workers) = cli.workers {
        // Per-invocation worker pool; sweeps fan out inside it.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
    }

    let outcome = match &cli.command {
        Command::Run { config, seed, out, full_scale } => {
            let overrides = Overrides { seed: *seed, full_scale: *full_scale };
            commands::cmd_run(config, &overrides, out).map(|paths| {
                for p in paths {
                    println!("wrote {}", p.display());
                }
            })
        }
        Command::Sweep { config, seed, out, full_scale } => {
            let overrides = Overrides { seed: *seed, full_scale: *full_scale };
            commands::cmd_sweep(config, &overrides, out).map(|paths| {
                for p in paths {
                    println!("wrote {}", p.display());
                }
            })
        }
        Command::Climatology { config, seed, out, full_scale } => {
            let overrides = Overrides { seed: *seed, full_scale: *full_scale };
            commands::cmd_climatology(config, &overrides, out).map(|paths| {
                for p in paths {
                    println!("wrote {}", p.display());
                }
            })
        }
        Command::Verify { suite, seed } => match commands::cmd_verify(suite, *seed) {
            Ok((passed, lines)) => {
                for line in lines {
                    println!("{line}");
                }
                if passed {
                    Ok(())
                } else {
                    eprintln!("verify: suite '{suite}' failed");
                    return ExitCode::from(exit_codes::FAILURE as u8);
                }
            }
            Err(e) => Err(e),
        },
    };

    match outcome {
        Ok(()) => ExitCode::from(exit_codes::OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e) as u8)
        }
    }
}
