use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use xtrace_cli::{run_experiment, write_results, ExperimentConfig, ExperimentKind, GraphFunction, OutputFormat};
use xtrace_core::linop::SpectrumKind;
use xtrace_core::{Distribution, EstimatorKind};

/// Benchmarks for randomized trace and diagonal estimators.
#[derive(Parser, Debug)]
#[command(name = "xtrace", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthetic psd matrices with flat, polynomial, exponential or step spectra.
    Synth {
        #[command(flatten)]
        common: Common,
        /// Matrix dimension.
        #[arg(long, default_value_t = 1000)]
        dim: usize,
        /// Spectra to sweep.
        #[arg(long, value_delimiter = ',', default_value = "flat,poly,exp,step")]
        spectra: Vec<SpectrumKind>,
    },
    /// Partition function of the transverse-field Ising chain.
    Tfim {
        #[command(flatten)]
        common: Common,
        /// Number of spins.
        #[arg(long, default_value_t = 10)]
        n: usize,
        /// Inverse temperatures.
        #[arg(long, value_delimiter = ',', default_value = "0.6")]
        beta: Vec<f64>,
        /// Transverse field strengths.
        #[arg(long, value_delimiter = ',', default_value = "10")]
        field: Vec<f64>,
        /// Also run the adaptive energy sweep with this tolerance.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Subgraph centralities and triangle counts of a graph.
    Graph {
        #[command(flatten)]
        common: Common,
        /// MatrixMarket adjacency matrix; a random graph is used when absent.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Diagonals to estimate.
        #[arg(long, value_delimiter = ',', default_value = "exp,triangles")]
        functions: Vec<GraphFunction>,
        /// Node count of the random graph.
        #[arg(long, default_value_t = 500)]
        dim: usize,
        /// Edge probability of the random graph.
        #[arg(long, default_value_t = 0.02)]
        density: f64,
    },
    /// Empirical RMSE against the a-priori variance bounds.
    Bounds {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1000)]
        dim: usize,
        #[arg(long, value_delimiter = ',', default_value = "poly,exp,step")]
        spectra: Vec<SpectrumKind>,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Comma-separated estimators (defaults depend on the experiment).
    #[arg(long, value_delimiter = ',')]
    estimators: Option<Vec<EstimatorKind>>,
    /// Comma-separated matvec budgets.
    #[arg(long, value_delimiter = ',', default_value = "12,24,48")]
    m: Vec<usize>,
    /// Trials per cell (defaults: 1000 for bounds, 100 otherwise).
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Test vector distribution: signs, gaussian or sphere.
    #[arg(long, default_value = "gaussian")]
    dist: Distribution,
    /// Normalize the residual test vectors of xtrace and xnystrace.
    #[arg(long)]
    normalize: bool,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: csv or json.
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
}

impl Common {
    fn apply(self, cfg: &mut ExperimentConfig) {
        if let Some(e) = self.estimators {
            cfg.estimators = e;
        }
        cfg.m = self.m;
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        cfg.seed = self.seed;
        cfg.distribution = self.dist;
        cfg.normalize = self.normalize;
        cfg.out = self.out;
        cfg.format = self.format;
    }
}

fn config(command: Command) -> ExperimentConfig {
    match command {
        Command::Synth { common, dim, spectra } => {
            let mut cfg = ExperimentConfig::new(ExperimentKind::Synth);
            common.apply(&mut cfg);
            cfg.dim = dim;
            cfg.spectra = spectra;
            cfg
        }
        Command::Tfim { common, n, beta, field, eps } => {
            let mut cfg = ExperimentConfig::new(ExperimentKind::Tfim);
            common.apply(&mut cfg);
            cfg.sites = n;
            cfg.beta = beta;
            cfg.field = field;
            cfg.eps = eps;
            cfg
        }
        Command::Graph { common, input, functions, dim, density } => {
            let mut cfg = ExperimentConfig::new(ExperimentKind::Graph);
            common.apply(&mut cfg);
            cfg.input = input;
            cfg.graph_functions = functions;
            cfg.dim = dim;
            cfg.density = density;
            cfg
        }
        Command::Bounds { common, dim, spectra } => {
            let mut cfg = ExperimentConfig::new(ExperimentKind::Bounds);
            common.apply(&mut cfg);
            cfg.dim = dim;
            cfg.spectra = spectra;
            cfg
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = config(cli.command);
    match run_experiment(&cfg).and_then(|table| write_results(&table)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
