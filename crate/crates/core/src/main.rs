//! Command-line front end: `generate`, `embed`, `route`, and `analyze`
//! pipelines driven by a TOML config and a single seed.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use basegraph::experiment::{cmd_analyze, cmd_embed, cmd_generate, cmd_route, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "basegraph",
    about = "Embed leveled entangled overlay networks in a lattice and route over them",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; created if missing.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct NetworkInput {
    /// Overlay network file; defaults to `<out>/network.txt`.
    #[arg(long)]
    network: Option<PathBuf>,
}

#[derive(Args)]
struct PlacementInput {
    /// Placement file; defaults to `<out>/placement.txt`.
    #[arg(long)]
    placement: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an overlay network and write `network.txt`.
    Generate {
        #[command(flatten)]
        common: Common,
    },
    /// Run the position-swap chain; write `placement.txt` and
    /// `chain_diagnostics.csv`.
    Embed {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        network: NetworkInput,
    },
    /// Route an ensemble over a placement; write `routes.csv`.
    Route {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        network: NetworkInput,
        #[command(flatten)]
        placement: PlacementInput,
    },
    /// Measure diameters, tessellation bounds, and hop scaling; write
    /// `scaling.csv`, `tessellation.csv`, and `summary.txt`.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        network: NetworkInput,
        #[command(flatten)]
        placement: PlacementInput,
    },
}

fn run(cli: Cli) -> Result<(), basegraph::experiment::CliError> {
    match cli.command {
        Command::Generate { common } => {
            let config = ExperimentConfig::load(&common.config)?;
            let seed = common.seed.unwrap_or(config.seed);
            cmd_generate(&config, seed, &common.out)?;
        }
        Command::Embed { common, network } => {
            let config = ExperimentConfig::load(&common.config)?;
            let seed = common.seed.unwrap_or(config.seed);
            let network = network
                .network
                .unwrap_or_else(|| common.out.join("network.txt"));
            cmd_embed(&config, seed, &common.out, &network)?;
        }
        Command::Route {
            common,
            network,
            placement,
        } => {
            let config = ExperimentConfig::load(&common.config)?;
            let seed = common.seed.unwrap_or(config.seed);
            let network = network
                .network
                .unwrap_or_else(|| common.out.join("network.txt"));
            let placement = placement
                .placement
                .unwrap_or_else(|| common.out.join("placement.txt"));
            cmd_route(&config, seed, &common.out, &network, &placement)?;
        }
        Command::Analyze {
            common,
            network,
            placement,
        } => {
            let config = ExperimentConfig::load(&common.config)?;
            let seed = common.seed.unwrap_or(config.seed);
            let network = network
                .network
                .unwrap_or_else(|| common.out.join("network.txt"));
            let placement = placement
                .placement
                .unwrap_or_else(|| common.out.join("placement.txt"));
            cmd_analyze(&config, seed, &common.out, &network, &placement)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
