use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use hevopt_cli::{
    analyze, compare, obd, simulate, CliResult, Outputs, Overrides, Scenario, Strategy,
};

#[derive(Parser)]
#[command(
    name = "hevopt",
    version,
    about = "Series PHEV energy-management toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory; defaults to the scenario's `out`, then `./out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// DP grid spacing override, %.
    #[arg(long)]
    grid_step: Option<f64>,
    /// Synthetic cycle seed override.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Rule,
    Dp,
}

#[derive(Subcommand)]
enum Command {
    /// Wheel-level cycle metrics and calibration.
    Analyze(Common),
    /// Run one strategy over the scenario.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "rule")]
        strategy: StrategyArg,
        /// Also write the full DP policy table.
        #[arg(long)]
        export_policy: bool,
    },
    /// Utility-factor weighted comparison of both strategies.
    Compare(Common),
    /// Consumption with and without diagnostic events.
    Obd(Common),
}

fn run(cli: Cli) -> CliResult<()> {
    let common = match &cli.command {
        Command::Analyze(c) | Command::Compare(c) | Command::Obd(c) => c,
        Command::Simulate { common, .. } => common,
    };
    let overrides = Overrides {
        grid_step: common.grid_step,
        seed: common.seed,
    };
    let start = Instant::now();
    let scenario = Scenario::load(&common.scenario, overrides)?;
    let outputs: Outputs = match &cli.command {
        Command::Analyze(_) => analyze(&scenario)?,
        Command::Simulate {
            strategy,
            export_policy,
            ..
        } => {
            let s = match strategy {
                StrategyArg::Rule => Strategy::Rule,
                StrategyArg::Dp => Strategy::Dp,
            };
            simulate(&scenario, s, *export_policy)?
        }
        Command::Compare(_) => compare(&scenario)?,
        Command::Obd(_) => obd(&scenario)?,
    };
    let dir = common
        .out
        .clone()
        .or_else(|| scenario.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    outputs.write_to(&dir)?;
    for (name, _) in &outputs.files {
        eprintln!("wrote {}", dir.join(name).display());
    }
    eprintln!("elapsed {:.2} s", start.elapsed().as_secs_f64());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
