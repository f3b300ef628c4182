//! `cavity`: batch front end for the cavity solver.
//!
//! Exit status: 0 success, 2 usage, 3 input mismatch, 4 numeric-domain
//! failure, 5 solver non-convergence, 1 anything else (I/O).

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use cavity_core::CavityError;
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "cavity", version, about = "Elliptic dielectric cavity: resonances, level sweeps and entropy diagnostics")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Eigenvalues (closed) or resonances (open) in a window at one deformation.
    Solve(SolveArgs),
    /// Track two levels over a deformation grid and write all artifacts.
    Sweep(SweepArgs),
    /// Relative and Shannon entropies between two field dumps.
    Entropy(EntropyArgs),
    /// Eigenvalues and regime of the two-level effective Hamiltonian.
    Model(ModelArgs),
}

#[derive(Args, Debug, Default)]
pub struct SolverFlags {
    /// Refractive index inside the cavity.
    #[arg(short = 'n', long)]
    refractive_index: Option<f64>,
    /// Boundary elements.
    #[arg(long)]
    elements: Option<usize>,
    /// Symmetry class: none, ee, eo, oe, oo.
    #[arg(long)]
    parity: Option<String>,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    /// Dirichlet eigenvalues instead of open resonances.
    #[arg(long)]
    closed: bool,
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    /// Real-k window `min:max`.
    #[arg(long)]
    window: Option<String>,
    /// Imaginary-k window `min:max` (open only).
    #[arg(long, allow_hyphen_values = true)]
    im_window: Option<String>,
    /// Also write the listing as JSON to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Skip the resonance cache.
    #[arg(long)]
    no_cache: bool,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `default`, `start:stop:step` or `e1,e2,...`.
    #[arg(long)]
    epsilons: Option<String>,
    /// Evaluation grid cells per axis.
    #[arg(long)]
    grid: Option<usize>,
    /// Floor fraction for the closed pattern when the divergence is infinite.
    #[arg(long)]
    floor: Option<f64>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args, Debug)]
pub struct EntropyArgs {
    /// Open-system field dump (P).
    open: PathBuf,
    /// Closed-system field dump (Q).
    closed: PathBuf,
    /// Mix this fraction of the uniform distribution into Q first.
    #[arg(long)]
    floor: Option<f64>,
    #[arg(long, default_value_t = 1)]
    level: usize,
    /// Closed eigenvalue for the Lamb shift.
    #[arg(long)]
    lambda: Option<f64>,
    /// Open resonance `re,im` for the Lamb shift.
    #[arg(long, allow_hyphen_values = true)]
    zeta: Option<String>,
}

#[derive(Args, Debug)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 0.0)]
    eta11: f64,
    #[arg(long, default_value_t = 0.0)]
    eta22: f64,
    /// Self-energy `re,im`.
    #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
    delta11: String,
    #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
    delta22: String,
    #[arg(long, default_value_t = 0.0)]
    delta_prime: f64,
    /// Half-width of the boundary band of the regime classification.
    #[arg(long)]
    tol: Option<f64>,
    /// Instead of one Hamiltonian, check this many random ones against the
    /// trace and determinant identities (seeded by `--seed` or the config).
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(CavityError),
    Io(std::io::Error),
}

impl From<CavityError> for CliError {
    fn from(e: CavityError) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 1,
            CliError::Core(e) => match e {
                CavityError::Config(_) | CavityError::Parse(_) => 2,
                CavityError::MeshMismatch(_) => 3,
                CavityError::Domain(_)
                | CavityError::DegenerateField
                | CavityError::InfiniteDivergence { .. }
                | CavityError::IndeterminateRegime(_) => 4,
                CavityError::NoConvergence(_) | CavityError::LevelLost { .. } | CavityError::AmbiguousTracking { .. } => 5,
                CavityError::Io(_) => 1,
            },
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = config::RunConfig::load(cli.config.as_deref()).and_then(|run| match cli.command {
        Command::Solve(a) => commands::solve(run, a),
        Command::Sweep(a) => commands::sweep(run, a),
        Command::Entropy(a) => commands::entropy(a),
        Command::Model(a) => commands::model(run, a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cavity: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
