use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cid_core::config::load_config;
use cid_core::imputation::MnarMechanism;
use cid_core::pipeline::run;

#[derive(Parser)]
#[command(name = "cid", version, about = "Confidence-in-decision sensitivity analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the analysis described by a JSON config and write CSV and SVG outputs.
    Run {
        config: PathBuf,
        /// Override the config's random seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory that relative output paths are resolved against.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Override the knob grid step.
        #[arg(long)]
        grid_step: Option<f64>,
    },
    /// List built-in missingness mechanisms and their weights.
    Mechanisms,
}

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Mechanisms => {
            for name in MnarMechanism::builtin_names() {
                let m = MnarMechanism::builtin(name).expect("builtin");
                let w: Vec<String> = m.weights.iter().map(|w| w.to_string()).collect();
                println!("{name}\t{}", w.join(","));
            }
            ExitCode::SUCCESS
        }
        Command::Run {
            config,
            seed,
            out_dir,
            grid_step,
        } => {
            let mut cfg = match load_config(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("cid: config error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            if let Some(seed) = seed {
                cfg.set_seed(seed);
            }
            if let Some(step) = grid_step {
                if let Err(e) = cfg.set_grid_step(step) {
                    eprintln!("cid: config error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            }
            match run(&cfg, &out_dir) {
                Ok((analysis, csv, svg)) => {
                    println!("{}", analysis.verdict);
                    eprintln!("wrote {} and {}", csv.display(), svg.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("cid: {e}");
                    ExitCode::from(EXIT_RUNTIME)
                }
            }
        }
    }
}
