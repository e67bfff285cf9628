//! Command-line driver: temperature maps, operator evolution, backflow and
//! OWE sweeps, each written as CSV.

mod backflow;
mod config;
mod evolve;
mod output;
mod sweep;
mod tempmap;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;

use config::{ConfigError, FileConfig, Overrides, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "opweight", version, about = "Pauli-weight analysis of Heisenberg-evolved operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parallel commands.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Chain length.
    #[arg(long, global = true)]
    length: Option<usize>,
    /// Initial state polar angle, degrees.
    #[arg(long, global = true)]
    theta: Option<f64>,
    /// Initial state azimuth, degrees.
    #[arg(long, global = true)]
    phi: Option<f64>,
    /// Local operator: x, y or z.
    #[arg(long, global = true)]
    operator: Option<String>,
    /// Operator site, 0-based (default L/2).
    #[arg(long, global = true)]
    site: Option<usize>,
    /// Maximum bond dimension.
    #[arg(long, global = true)]
    chi: Option<usize>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    #[arg(long, global = true)]
    tmax: Option<f64>,
    #[arg(long = "omega-max", global = true)]
    omega_max: Option<usize>,
    /// Weight cutoff for the OWE; repeatable.
    #[arg(long = "omega-star", global = true)]
    omega_star: Vec<usize>,
    /// Orthogonal weight for backflow; repeatable.
    #[arg(long = "omega-perp", global = true)]
    omega_perp: Vec<usize>,
    /// Temperature map step in θ, degrees.
    #[arg(long, global = true)]
    dtheta: Option<f64>,
    /// Temperature map step in φ, degrees.
    #[arg(long, global = true)]
    dphi: Option<f64>,
    /// Steps between CSV records.
    #[arg(long, global = true)]
    stride: Option<usize>,
    /// Steps between checkpoints (0 disables).
    #[arg(long = "checkpoint-every", global = true)]
    checkpoint_every: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Equilibration temperature over the Bloch sphere.
    Tempmap,
    /// Evolve a local operator and record densities, contributions and OWE.
    Evolve {
        /// Continue from the checkpoint in the output directory.
        #[arg(long)]
        resume: bool,
        /// Stop after this many steps, leaving a checkpoint.
        #[arg(long = "stop-after")]
        stop_after: Option<u64>,
    },
    /// Backflow from orthogonal sectors.
    Backflow,
    /// Maximum OWE over a grid of initial states.
    Sweep,
    /// Compare the tensor-network pipeline with the dense reference.
    Verify,
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            out: self.out.clone(),
            length: self.length,
            theta: self.theta,
            phi: self.phi,
            operator: self.operator.clone(),
            site: self.site,
            chi: self.chi,
            dt: self.dt,
            tmax: self.tmax,
            omega_max: self.omega_max,
            omega_star: self.omega_star.clone(),
            omega_perp: self.omega_perp.clone(),
            dtheta: self.dtheta,
            dphi: self.dphi,
            stride: self.stride,
            checkpoint_every: self.checkpoint_every,
        }
    }

    fn run_config(&self) -> Result<RunConfig, ConfigError> {
        let file = match &self.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        RunConfig::resolve(file, &self.overrides())
    }
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(ConfigError("--jobs must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    if let Command::Verify = cli.command {
        return verify::run();
    }
    let cfg = cli.run_config()?;
    match cli.command {
        Command::Tempmap => tempmap::run(&cfg),
        Command::Evolve { resume, stop_after } => evolve::run(&cfg, evolve::EvolveOptions { resume, stop_after }),
        Command::Backflow => backflow::run(&cfg),
        Command::Sweep => sweep::run(&cfg),
        Command::Verify => unreachable!(),
    }
}

/// 2 config, 3 numerical failure, 4 resource limit, 1 anything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<opweight::Error>() {
            return match e {
                opweight::Error::InvalidInput(_) => 2,
                opweight::Error::ResourceLimit(_) => 4,
                opweight::Error::Io(_) | opweight::Error::Format(_) => 1,
                _ => 3,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
