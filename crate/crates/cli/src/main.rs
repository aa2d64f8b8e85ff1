mod commands;
mod config;
mod format;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Multipartite quantum discord: optimization, sweeps, entropy-flux
/// ledgers and the verification suite.
#[derive(Parser, Debug)]
#[command(name = "mdiscord", version)]
pub struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Minimize the discord objective and print the result as JSON.
    Discord {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        opt: OptArgs,
        /// Bipartite discord via the form that measures both parties.
        #[arg(long)]
        two_measurement: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tripartite discord and its decomposition over a mu grid, as CSV.
    Sweep {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        opt: OptArgs,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        mu_start: Option<f64>,
        #[arg(long)]
        mu_stop: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Entropy and mutual-information ledger before and after each
    /// measurement, as one CSV row.
    Flux {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        opt: OptArgs,
        /// Measurement angles as JSON; overrides --tree.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = TreeChoice::Optimal)]
        tree: TreeChoice,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the identity and property checks; exits 1 if any fails.
    Verify {
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Corrupts one identity so the failure path can be exercised.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

#[derive(Args, Debug, Default)]
pub struct StateArgs {
    /// Named state family.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub mu: Option<f64>,
    /// Qubit count for ghz, w_state and product.
    #[arg(long)]
    pub qubits: Option<usize>,
    /// JSON file with a density matrix or a state spec.
    #[arg(long)]
    pub state: Option<PathBuf>,
    /// Measurement order, e.g. "0,1,2".
    #[arg(long, value_delimiter = ',')]
    pub order: Option<Vec<usize>>,
    /// Number of parties; subsystems past the last are grouped.
    #[arg(long)]
    pub level: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct OptArgs {
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long)]
    pub refine_starts: Option<usize>,
    #[arg(long)]
    pub simplex_iters: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TreeChoice {
    /// The tree minimizing the discord objective.
    Optimal,
    /// Computational basis at every node.
    Z,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = commands::init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
