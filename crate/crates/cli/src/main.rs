//! `etfp`: construct fingerprint designs, analyze their collusion
//! resistance, forge and detect single attacks, and run seeded Monte Carlo
//! experiments with CSV/SVG output.

mod commands;
mod manifest;
mod plot;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "etfp", version, about = "Fingerprint design and collusion analysis toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum DesignKindArg {
    Etf,
    Simplex,
    Orthogonal,
}

#[derive(Subcommand)]
enum Command {
    /// Construct a design matrix file and print its figures of merit.
    Design {
        /// Design family to construct.
        #[arg(long, value_enum)]
        kind: DesignKindArg,
        /// Point count v of the all-pairs Steiner system (etf kind; v must be
        /// a power of two so the matching Sylvester Hadamard exists).
        #[arg(long)]
        steiner_pairs: Option<usize>,
        /// Incidence file for the etf kind (alternative to --steiner-pairs).
        #[arg(long)]
        incidence: Option<PathBuf>,
        /// Dimension N (simplex and orthogonal kinds).
        #[arg(long)]
        n: Option<usize>,
        /// Output design file.
        #[arg(long, default_value = "design.txt")]
        out: PathBuf,
    },
    /// Evaluate coherence, isometry, distance, and error bounds for a design.
    Analyze {
        /// Design file to analyze.
        #[arg(long)]
        design: PathBuf,
        /// Coalition size bound K.
        #[arg(long)]
        k: usize,
        /// Per-dimension fingerprint energy D_f.
        #[arg(long, default_value_t = 1.0)]
        d_f: f64,
        /// Per-dimension attack noise power.
        #[arg(long, default_value_t = 1.0)]
        sigma2: f64,
        /// Report file; the report always goes to stdout as well.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Forge a single marked copy from an attack spec file.
    Attack {
        /// Design file.
        #[arg(long)]
        design: PathBuf,
        /// Attack spec file (coalition, weights, noise_sigma2, seed).
        #[arg(long)]
        attack: PathBuf,
        /// Host signal file; zero host when omitted.
        #[arg(long)]
        host: Option<PathBuf>,
        /// Per-dimension fingerprint energy D_f.
        #[arg(long, default_value_t = 1.0)]
        d_f: f64,
        /// Noise seed; overrides the spec file, defaults to entropy.
        #[arg(long)]
        seed: Option<u64>,
        /// Output forgery vector file.
        #[arg(long, default_value = "forgery.txt")]
        out: PathBuf,
    },
    /// Compute test statistics for a forgery and accuse users at a threshold.
    Detect {
        /// Design file.
        #[arg(long)]
        design: PathBuf,
        /// Forgery vector file.
        #[arg(long)]
        forgery: PathBuf,
        /// Host signal file; zero host when omitted.
        #[arg(long)]
        host: Option<PathBuf>,
        /// Detection threshold tau.
        #[arg(long)]
        tau: f64,
        /// Per-dimension fingerprint energy D_f.
        #[arg(long, default_value_t = 1.0)]
        d_f: f64,
        /// Report file; the report always goes to stdout as well.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the Monte Carlo detection-vs-coalition-size experiment.
    Experiment {
        /// Experiment config file.
        #[arg(long)]
        config: PathBuf,
        /// Master seed; overrides the config file, defaults to entropy.
        #[arg(long)]
        seed: Option<u64>,
        /// Output results CSV.
        #[arg(long, default_value = "results.csv")]
        out: PathBuf,
        /// Also render the curves to this SVG file.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Render a results CSV to a static SVG plot.
    Plot {
        /// Results CSV produced by the experiment command.
        #[arg(long)]
        csv: PathBuf,
        /// Output SVG file.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = commands::run(cli.command) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
