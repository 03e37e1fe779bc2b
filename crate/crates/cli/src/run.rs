//! Argument definitions and dispatch.

use crate::commands::{self, Figure};
use crate::config::{parse_config, RunConfig};
use crate::error::{CliError, CliResult};
use crate::table::write_atomic;
use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "availsearch",
    version,
    about = "Equilibrium search and pricing when the number of sellers is random"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// CSV destination; standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = 200_000)]
    pub trials: u64,
    /// Grid points for sweeps and figure curves.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stable equilibria with active search at the configured cost.
    Solve,
    /// All equilibria, stable or not.
    Enumerate,
    /// Cost intervals supporting pure and mixed search.
    Cutoffs,
    /// Move availability mass between two market sizes.
    SweepTheta {
        #[arg(long)]
        from: usize,
        #[arg(long)]
        to: usize,
        /// Largest amount moved; defaults to all of `theta[from]`.
        #[arg(long)]
        max_shift: Option<f64>,
    },
    /// Vary the search cost.
    SweepCost {
        #[arg(long, default_value_t = 0.005)]
        cost_min: f64,
        #[arg(long, default_value_t = 0.15)]
        cost_max: f64,
    },
    /// Noisy search technologies (needs a `delta:` block).
    Noisy,
    /// Costless and costly buyers (needs `lambda`).
    Hetero,
    /// Monte Carlo check of the stable equilibria.
    Validate,
    /// Data behind a figure or the worked example.
    Figure { id: FigureId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigureId {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    #[value(name = "3")]
    Three,
    #[value(name = "4")]
    Four,
    #[value(name = "example51")]
    Example51,
}

impl From<FigureId> for Figure {
    fn from(id: FigureId) -> Self {
        match id {
            FigureId::One => Figure::BenefitCurve,
            FigureId::Two => Figure::SinglePriceShare,
            FigureId::Three => Figure::AvailabilityPrice,
            FigureId::Four => Figure::AvailabilitySurplus,
            FigureId::Example51 => Figure::WorkedExample,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub csv: String,
    /// Extra lines for the terminal, if any.
    pub summary: String,
}

fn load(cli: &Cli) -> CliResult<RunConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Validation("config-missing".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("config-unreadable: {}: {e}", path.display())))?;
    parse_config(&text)
}

/// Runs the command and returns its CSV without touching the filesystem
/// beyond reading the config.
pub fn execute(cli: &Cli) -> CliResult<Output> {
    let plain = |t: crate::table::Table| Output {
        csv: t.to_csv(),
        summary: String::new(),
    };
    Ok(match &cli.command {
        Command::Figure { id } => plain(commands::figure_table(
            (*id).into(),
            cli.grid.unwrap_or(50),
        )?),
        Command::Solve => plain(commands::solve_table(&load(cli)?.market)?),
        Command::Enumerate => plain(commands::enumerate_table(&load(cli)?.market)?),
        Command::Cutoffs => plain(commands::cutoffs_table(&load(cli)?.market)?),
        Command::SweepTheta {
            from,
            to,
            max_shift,
        } => {
            let market = load(cli)?.market;
            if *from > market.firms() || *to > market.firms() {
                return Err(CliError::Validation("shift-index".into()));
            }
            let max = max_shift.unwrap_or(market.theta().get(*from));
            plain(commands::sweep_theta_table(
                &market,
                *from,
                *to,
                max,
                cli.grid.unwrap_or(21),
            )?)
        }
        Command::SweepCost { cost_min, cost_max } => plain(commands::sweep_cost_table(
            &load(cli)?.market,
            *cost_min,
            *cost_max,
            cli.grid.unwrap_or(30),
        )?),
        Command::Noisy => {
            let cfg = load(cli)?;
            plain(commands::noisy_table(&cfg.market, cfg.noisy_tech()?)?)
        }
        Command::Hetero => plain(commands::hetero_table(&load(cli)?.heterogeneity()?)?),
        Command::Validate => {
            let (table, summary) =
                commands::validate_table(&load(cli)?.market, cli.trials, cli.seed)?;
            Output {
                csv: table.to_csv(),
                summary,
            }
        }
    })
}

/// Executes and writes the CSV to `--out`, or returns it for printing.
pub fn run(cli: &Cli) -> CliResult<Output> {
    let output = execute(cli)?;
    if let Some(path) = &cli.out {
        write_atomic(path, &output.csv)?;
    }
    Ok(output)
}
