use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use classmem::harness::{self, load_config};
use classmem::memory::load_bank;
use classmem::Result;

#[derive(Parser)]
#[command(name = "classmem", version, about = "Class-aware key-values memory experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train encoders and memory, then evaluate on held-out scenes.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the config's `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate saved artifacts on fresh scenes.
    Eval {
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        encoders: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 100)]
        scenes: usize,
    },
    /// Print a summary of a bank file.
    Inspect {
        #[arg(long)]
        bank: PathBuf,
    },
    /// Train the four memory/loss variants of a config.
    Ablate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { config, out } => {
            let cfg = load_config(&config)?;
            let out = out.unwrap_or_else(|| cfg.output_dir.clone());
            let o = harness::run_training(&cfg, Some(&out))?;
            println!("{}", harness::METRICS_HEADER);
            println!("{}", o.eval.csv_line());
        }
        Command::Eval {
            bank,
            encoders,
            config,
            scenes,
        } => {
            let cfg = load_config(&config)?;
            let row = harness::evaluate_artifacts(&bank, &encoders, &cfg, scenes)?;
            println!("{}", harness::METRICS_HEADER);
            println!("{}", row.csv_line());
        }
        Command::Inspect { bank } => {
            print!("{}", harness::inspect_bank(&load_bank(&bank)?));
        }
        Command::Ablate { config, out } => {
            let cfg = load_config(&config)?;
            let out = out.unwrap_or_else(|| cfg.output_dir.clone());
            println!("variant,{}", harness::METRICS_HEADER);
            for (name, row) in harness::run_ablation(&cfg, Some(&out))? {
                println!("{name},{}", row.csv_line());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
