//! `lockspring`: model, simulate, analyze, and optimize lockable
//! compression springs built around a capstan clutch.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lockspring_cli::commands;
use lockspring_cli::config::{parse_config, ToolkitConfig};

#[derive(Parser)]
#[command(
    name = "lockspring",
    version,
    about = "Capstan-clutch lockable compression spring toolkit",
    after_help = "All commands fall back to the built-in prototype constants \
                  when --config is omitted. File-writing commands log to stderr \
                  and keep stdout empty."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print clutch metrics: wrap angle, locking-force ratio, holding
    /// force, unlock energy
    Clutch {
        /// Toolkit config file (INI-style)
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run the configured work-loop protocol and write the trace CSV
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output trace file
        #[arg(long)]
        out: PathBuf,
    },
    /// Segment a trace, compute efficiency, write a JSON report and an
    /// optional SVG plot
    Analyze {
        /// Input trace CSV
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output JSON report
        #[arg(long)]
        report: PathBuf,
        /// Optional output SVG
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Explore the clutch design space; write a JSON report and the
    /// Pareto-front CSV
    Optimize {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output JSON report
        #[arg(long)]
        report: PathBuf,
        /// Output Pareto front CSV
        #[arg(long)]
        front: PathBuf,
    },
    /// Print a combined human-readable summary
    Report {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Optional trace CSV to include efficiency results
        #[arg(long)]
        trace: Option<PathBuf>,
    },
}

fn load_config(path: &Option<PathBuf>) -> anyhow::Result<ToolkitConfig> {
    match path {
        Some(p) => Ok(parse_config(p)?),
        None => Ok(ToolkitConfig::default()),
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let stdout = std::io::stdout();
    match cli.command {
        Command::Clutch { config } => {
            let config = load_config(&config)?;
            commands::cmd_clutch(&config, &mut stdout.lock())
        }
        Command::Simulate { config, out } => {
            let config = load_config(&config)?;
            commands::cmd_simulate(&config, &out)
        }
        Command::Analyze {
            trace,
            config,
            report,
            plot,
        } => {
            let config = match config {
                Some(p) => Some(parse_config(&p)?),
                None => None,
            };
            commands::cmd_analyze(&trace, config.as_ref(), &report, plot.as_deref())
        }
        Command::Optimize {
            config,
            report,
            front,
        } => {
            let config = load_config(&config)?;
            commands::cmd_optimize(&config, &report, &front)
        }
        Command::Report { config, trace } => {
            let config = load_config(&config)?;
            commands::cmd_report(&config, trace.as_deref(), &mut stdout.lock())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            // Single machine-parsable line on stderr.
            let message = err.to_string().replace('\n', "; ");
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
