use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use tfqkd::cli::{self, LoopKind, SimMethod};
use tfqkd::Mode;

#[derive(Parser)]
#[command(name = "tfqkd", version, about = "Twin-field QKD key rates, simulation and phase tools")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Asymptotic,
    Finite,
}

#[derive(Clone, Copy, ValueEnum)]
enum LoopArg {
    Delay,
    Polarization,
    Intensity,
}

#[derive(Subcommand)]
enum Command {
    /// Key rate and every intermediate quantity of a record file.
    Keyrate {
        record: PathBuf,
        #[arg(long, value_enum, default_value = "finite")]
        mode: ModeArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Record file from the channel simulator.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, conflicts_with = "analytic")]
        mc: bool,
        #[arg(long)]
        analytic: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Key rate against distance as CSV.
    Scan {
        #[arg(long, value_delimiter = ',', required = true)]
        distances: Vec<f64>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthetic dual-band phase compensation run.
    PhaseDemo {
        #[arg(long)]
        drift_config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write every n-th window to the trace.
        #[arg(long, default_value_t = 25)]
        stride: usize,
    },
    /// Feedback loop against its synthetic plant.
    Stabilize {
        #[arg(value_enum)]
        kind: LoopArg,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let outcome = match Args::parse().command {
        Command::Keyrate { record, mode, out } => {
            let mode = match mode {
                ModeArg::Asymptotic => Mode::Asymptotic,
                ModeArg::Finite => Mode::Finite,
            };
            cli::cmd_keyrate(&record, mode, out.as_deref())
        }
        Command::Simulate { config, seed, mc, analytic: _, out } => {
            let method = if mc { SimMethod::MonteCarlo } else { SimMethod::Analytic };
            cli::cmd_simulate(&config, seed, method, out.as_deref())
        }
        Command::Scan { distances, config, out } => cli::cmd_scan(&distances, config.as_deref(), out.as_deref()),
        Command::PhaseDemo { drift_config, out, stride } => {
            cli::cmd_phase_demo(drift_config.as_deref(), out.as_deref(), stride)
        }
        Command::Stabilize { kind, config, out } => {
            let kind = match kind {
                LoopArg::Delay => LoopKind::Delay,
                LoopArg::Polarization => LoopKind::Polarization,
                LoopArg::Intensity => LoopKind::Intensity,
            };
            cli::cmd_stabilize(kind, config.as_deref(), out.as_deref())
        }
    };
    if outcome.exit_code == 0 {
        // A closed pipe (`| head`) is not an error worth a panic.
        let _ = writeln!(std::io::stdout(), "{}", outcome.summary);
    } else {
        eprintln!("{}", outcome.summary);
    }
    ExitCode::from(outcome.exit_code as u8)
}
