use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hybridplan_cli::docs::Mode;
use hybridplan_cli::{cmd_bill, cmd_design, cmd_report, cmd_simulate};

/// Design toolkit and simulator for hybrid ISP service plans in shared
/// access networks.
#[derive(Parser)]
#[command(name = "hybridplan", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Derive hybrid plan parameters (N, slope, base price) from the
    /// configured flat-rate tier pair.
    Design {
        #[arg(long)]
        config: PathBuf,
        /// Where to write the plan document (JSON).
        #[arg(long)]
        out: PathBuf,
    },
    /// Run demand scenarios through the hybrid and/or legacy architecture.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Plan document from `design` (or hand-written).
        #[arg(long)]
        plan: PathBuf,
        /// Where to write the results document (JSON); granted-rate CSVs are
        /// written next to it.
        #[arg(long)]
        out: PathBuf,
        /// Simulation step in seconds (default from the config).
        #[arg(long)]
        step: Option<f64>,
        #[arg(long, value_enum, default_value = "hybrid")]
        mode: Mode,
        /// Run a built-in extreme case instead of the configured scenarios:
        /// 1 = one saturating subscriber, 2 = all subscribers saturating.
        #[arg(long = "builtin-case")]
        builtin_case: Option<u8>,
    },
    /// Compute bills and revenue from simulated usage and check the
    /// requirement inequalities.
    Bill {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        /// Results document from `simulate`.
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// design + simulate + bill in one pass over the built-in extreme cases
    /// and any configured scenarios, producing a single summary document.
    Report {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        step: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Design { config, out } => cmd_design(&config, &out).map(|_| ()),
        Command::Simulate {
            config,
            plan,
            out,
            step,
            mode,
            builtin_case,
        } => cmd_simulate(&config, &plan, &out, step, mode, builtin_case).map(|_| ()),
        Command::Bill {
            config,
            plan,
            results,
            out,
        } => cmd_bill(&config, &plan, &results, &out).map(|_| ()),
        Command::Report { config, out, step } => cmd_report(&config, &out, step).map(|_| ()),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
