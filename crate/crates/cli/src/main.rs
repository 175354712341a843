//! `polymorph` command-line driver.
//!
//! Exit status: 0 on success, 1 on invalid input, 2 when a numerical check
//! fails (the report is still written).

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "polymorph", version, about = "Finite-scale polymorphisms of measure spaces")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Write the result here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
    /// Absolute tolerance for float-mode comparisons.
    #[arg(long, default_value_t = 1e-9, global = true)]
    pub tolerance: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Product of polymorphisms; `-i a -i b` gives `a·b` (`b` acts first).
    Compose {
        #[arg(long, short, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
    },
    /// Conjugate (transpose) of a polymorphism.
    Involute {
        #[arg(long, short)]
        input: PathBuf,
    },
    /// Convex combination `sum w_k p_k`.
    Convex {
        #[arg(long, short, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        /// Comma-separated weights such as `1/3,2/3`.
        #[arg(long)]
        weights: String,
    },
    /// Ergodicity, mixing, primality, contraction class and spectrum.
    Classify {
        #[arg(long, short)]
        input: PathBuf,
        /// Maximum number of candidate partitions in the primality search.
        #[arg(long, default_value_t = 1024)]
        budget: usize,
    },
    /// Factor by a partition, given as blocks such as `0,1|2,3`.
    Factor {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long)]
        partition: String,
    },
    /// Discretize a map or correspondence on `2^k` cells.
    Discretize {
        /// `doubling`, `identity`, `tent`, `rotation p/q`, `corr n m`, `cat`,
        /// `shear` or `torus a b c d`.
        #[arg(long)]
        map: String,
        #[arg(long, short = 'k', alias = "resolution")]
        k: u32,
        /// Sample count for toral maps.
        #[arg(long, default_value_t = 40_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Check that level `k` factors onto level `k - 1`, for every level in `2..=k`.
    RefineCheck {
        #[arg(long)]
        map: String,
        #[arg(long, short = 'k', alias = "resolution")]
        k: u32,
    },
    /// Truncated intertwiners of a perturbed Bernoulli shift, for `N = 1..=N`.
    Intertwine {
        /// JSON file `{"alphabet", "p", "q"}`.
        #[arg(long)]
        system: PathBuf,
        #[arg(long = "N", short = 'N')]
        n: usize,
        /// Window `lo:hi`; defaults to `-1:N+2`.
        #[arg(long, allow_hyphen_values = true)]
        window: Option<String>,
    },
    /// Sample the stationary chain and check the dilation identity.
    Simulate {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        paths: usize,
        #[arg(long, default_value_t = 100)]
        length: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Lags for the dilation check and the tail probe.
        #[arg(long, default_value = "0,1,5", value_delimiter = ',')]
        lags: Vec<usize>,
        /// Observable `f`, one value per atom; defaults to the indicator of atom 0.
        #[arg(long, allow_hyphen_values = true)]
        f: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        g: Option<String>,
        /// Target atoms of the tail probe.
        #[arg(long, default_value = "0", value_delimiter = ',')]
        target: Vec<usize>,
    },
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("POLYMORPH_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| anyhow::anyhow!("POLYMORPH_THREADS must be a positive integer, got {v:?}"))?;
        anyhow::ensure!(n > 0, "POLYMORPH_THREADS must be positive");
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = configure_threads().and_then(|_| commands::run(&cli));
    match run {
        Ok(commands::Outcome::Passed) => ExitCode::SUCCESS,
        Ok(commands::Outcome::Failed(why)) => {
            eprintln!("check failed: {why}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
