use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod source;

/// Workbench for local priority mechanisms on small constrained allocation
/// problems.
#[derive(Parser)]
#[command(name = "lp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the local priority algorithm at one profile.
    Run {
        #[command(flatten)]
        alpha: AlphaArgs,
        #[arg(long)]
        profile: PathBuf,
        /// Print every allocation visited and who compromised there.
        #[arg(long)]
        trace: bool,
    },
    /// Check properties of an assignment or of a mechanism.
    Check {
        #[command(flatten)]
        source: SourceArgs,
        /// Comma-separated: forward, backward, implementable, sp, gsp,
        /// nonbossy, maskin, pe, unanimity, fixed-compromiser, invariance,
        /// local-priority.
        #[arg(long, value_delimiter = ',', required = true)]
        props: Vec<String>,
        #[arg(long, default_value = "strict")]
        reading: String,
        /// Coalitions tried by gsp.
        #[arg(long, value_enum, default_value_t = GspArg::Exhaustive)]
        gsp_mode: GspArg,
    },
    /// Build the assignment of a named mechanism, or derive one from a table.
    Derive {
        #[command(flatten)]
        source: SourceArgs,
    },
    /// List every consistent implementable assignment for a constraint.
    Enumerate {
        #[arg(long)]
        constraint: PathBuf,
        /// Require forward consistency (default: both, when neither flag is given).
        #[arg(long)]
        forward: bool,
        /// Require backward consistency (default: both, when neither flag is given).
        #[arg(long)]
        backward: bool,
        #[arg(long, default_value = "strict")]
        reading: String,
        /// Emit one representative per relabeling orbit.
        #[arg(long)]
        quotient: bool,
        /// Emit one assignment per distinct mechanism.
        #[arg(long)]
        dedupe: bool,
        /// Maximum search nodes.
        #[arg(long, default_value_t = 200_000_000)]
        budget: u64,
    },
    /// Compare the mechanisms of two assignments profile by profile.
    Compare {
        #[arg(long)]
        alpha: PathBuf,
        #[arg(long)]
        alpha2: PathBuf,
        /// Constraint for the first assignment; its cells imply one otherwise.
        #[arg(long)]
        constraint: Option<PathBuf>,
        /// Constraint for the second assignment.
        #[arg(long)]
        constraint2: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = CompareMode::Pointwise)]
        mode: CompareMode,
        /// Agent name, for agent mode.
        #[arg(long)]
        agent: Option<String>,
        #[arg(long, default_value = "strict")]
        reading: String,
    },
    /// Draw an assignment or a constraint as grids.
    Render {
        #[arg(long, required_unless_present = "constraint")]
        alpha: Option<PathBuf>,
        #[arg(long)]
        constraint: Option<PathBuf>,
        #[arg(long, default_value = "ascii")]
        format: String,
    },
    /// Run a named mechanism directly.
    Mechanisms {
        #[arg(long, value_enum)]
        name: MechanismName,
        #[arg(long)]
        constraint: PathBuf,
        /// Parameters: school spec, endowment, dictator order or sides.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, required_unless_present = "table")]
        profile: Option<PathBuf>,
        /// Print the whole table instead of one outcome.
        #[arg(long)]
        table: bool,
    },
}

#[derive(Args)]
struct AlphaArgs {
    #[arg(long)]
    alpha: PathBuf,
    #[arg(long)]
    constraint: Option<PathBuf>,
}

/// Where a mechanism comes from: an assignment, a dense table, or a named
/// mechanism with its parameters.
#[derive(Args)]
struct SourceArgs {
    #[arg(long, conflicts_with_all = ["table", "mechanism"])]
    alpha: Option<PathBuf>,
    #[arg(long, conflicts_with = "mechanism")]
    table: Option<PathBuf>,
    #[arg(long, value_enum)]
    mechanism: Option<MechanismName>,
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    constraint: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MechanismName {
    Sd,
    Da,
    Ia,
    Ttc,
    Marriage,
}

#[derive(Clone, Copy, ValueEnum)]
enum CompareMode {
    Pointwise,
    Agent,
}

#[derive(Clone, Copy, ValueEnum)]
enum GspArg {
    Pairs,
    Exhaustive,
}

/// Outcome of a successful command.
enum Status {
    Holds,
    Violated,
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("LP_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| anyhow::anyhow!("LP_THREADS must be a positive integer, got `{v}`"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(2),
            };
        }
    };
    let result = configure_threads().and_then(|()| commands::dispatch(cli.command));
    match result {
        Ok(Status::Holds) => ExitCode::SUCCESS,
        Ok(Status::Violated) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
