use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, ensure, Context, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use xtrace_core::estimators::{bks_diag, hutch, hutchpp, lra_trace, nystrompp, xdiag, xnystrace, xtrace};
use xtrace_core::linop::{
    densify, make_function_operator, make_synthetic_operator, make_tfim, read_matrix_market,
    DenseOperator, DenseSpectralOperator, SpectrumKind, SpectrumSpec, TFIM_MAX_SITES, TFIM_MIN_SITES,
};
use xtrace_core::montecarlo::{run_trials, summarize, trial_seed};
use xtrace_core::{
    exact_diag, exact_trace, run_adaptive, variance_bound, AdaptiveConfig, AdaptiveEstimator, Distribution,
    EstimatorKind, LinearOperator, TraceReport,
};

use crate::output::OutputFormat;

/// Largest TFIM chain the harness diagonalizes densely.
pub const TFIM_CLI_MAX_SITES: usize = 12;
/// Largest graph the dense function oracle accepts.
pub const GRAPH_MAX_NODES: usize = 4000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Synth,
    Tfim,
    Graph,
    Bounds,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Synth => "synth",
            Self::Tfim => "tfim",
            Self::Graph => "graph",
            Self::Bounds => "bounds",
        }
    }
}

/// Matrix function whose diagonal the graph experiment estimates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphFunction {
    /// Subgraph centrality, diag exp(M).
    Exp,
    /// Triangle counts, diag M³/2.
    Triangles,
}

impl GraphFunction {
    pub fn name(self) -> &'static str {
        match self {
            Self::Exp => "exp",
            Self::Triangles => "triangles",
        }
    }
}

impl fmt::Display for GraphFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GraphFunction {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exp" | "subgraph" => Ok(Self::Exp),
            "triangles" | "cube" => Ok(Self::Triangles),
            other => bail!("unknown graph function `{other}` (use exp or triangles)"),
        }
    }
}

/// Parameters of one benchmark sweep. Fields that an experiment does not use
/// are ignored by it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub estimators: Vec<EstimatorKind>,
    /// Requested budgets; each estimator rounds them down to an admissible value.
    pub m: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub distribution: Distribution,
    pub normalize: bool,
    /// Matrix dimension for synth/bounds, node count for random graphs.
    pub dim: usize,
    pub spectra: Vec<SpectrumKind>,
    /// TFIM chain length.
    pub sites: usize,
    pub beta: Vec<f64>,
    pub field: Vec<f64>,
    /// Tolerance of the adaptive TFIM energy sweep; no sweep when absent.
    pub eps: Option<f64>,
    pub input: Option<PathBuf>,
    pub graph_functions: Vec<GraphFunction>,
    /// Edge probability of the random graph used when no input is given.
    pub density: f64,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl ExperimentConfig {
    /// Defaults for `kind`, matching the subcommand defaults of the CLI.
    pub fn new(kind: ExperimentKind) -> Self {
        use EstimatorKind::*;
        let (estimators, spectra, dim) = match kind {
            ExperimentKind::Synth => (
                vec![Hutch, Lra, HutchPP, NystromPP, XTrace, XNysTrace],
                SpectrumKind::ALL.to_vec(),
                1000,
            ),
            ExperimentKind::Tfim => (vec![Hutch, HutchPP, XTrace, XNysTrace], vec![], 0),
            ExperimentKind::Graph => (vec![Bks, XDiag], vec![], 500),
            ExperimentKind::Bounds => (
                vec![HutchPP, XTrace, XNysTrace],
                vec![SpectrumKind::Poly, SpectrumKind::Exp, SpectrumKind::Step],
                1000,
            ),
        };
        Self {
            kind,
            estimators,
            m: vec![12, 24, 48],
            trials: if kind == ExperimentKind::Bounds { 1000 } else { 100 },
            seed: 0,
            distribution: Distribution::Gaussian,
            normalize: kind != ExperimentKind::Bounds,
            dim,
            spectra,
            sites: 10,
            beta: vec![0.6],
            field: vec![10.0],
            eps: None,
            input: None,
            graph_functions: vec![GraphFunction::Exp, GraphFunction::Triangles],
            density: 0.02,
            out: None,
            format: OutputFormat::Csv,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.trials >= 1, "trial count must be at least 1");
        ensure!(!self.m.is_empty(), "at least one budget is required");
        ensure!(!self.estimators.is_empty(), "at least one estimator is required");
        for &e in &self.estimators {
            for &m in &self.m {
                ensure!(
                    e.round_budget(m).is_some(),
                    "budget {m} has no admissible value for {e}"
                );
            }
        }
        let diagonal = self.kind == ExperimentKind::Graph;
        if let Some(e) = self.estimators.iter().find(|e| e.is_diagonal() != diagonal) {
            bail!(
                "estimator {e} does not apply to the {} experiment",
                self.kind.name()
            );
        }
        match self.kind {
            ExperimentKind::Synth | ExperimentKind::Bounds => {
                ensure!(self.dim >= 1, "dimension must be positive");
                ensure!(!self.spectra.is_empty(), "at least one spectrum is required");
            }
            ExperimentKind::Tfim => {
                ensure!(
                    (TFIM_MIN_SITES..=TFIM_CLI_MAX_SITES.min(TFIM_MAX_SITES)).contains(&self.sites),
                    "TFIM chain length must lie in {TFIM_MIN_SITES}..={TFIM_CLI_MAX_SITES}, got {}",
                    self.sites
                );
                ensure!(!self.beta.is_empty() && !self.field.is_empty(), "beta and field lists must be nonempty");
                ensure!(self.beta.iter().all(|b| *b > 0.0), "beta must be positive");
                if let Some(eps) = self.eps {
                    ensure!(eps > 0.0 && eps < 1.0, "eps must lie in (0, 1)");
                }
            }
            ExperimentKind::Graph => {
                ensure!(!self.graph_functions.is_empty(), "at least one graph function is required");
                if self.input.is_none() {
                    ensure!(
                        (0.0..=1.0).contains(&self.density),
                        "edge density must lie in [0, 1]"
                    );
                }
            }
        }
        Ok(())
    }
}

/// One (instance, estimator, budget) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub estimator: String,
    pub m: usize,
    pub trials: usize,
    pub mean_rel_err: f64,
    pub rmse: f64,
    pub mean_err_est: Option<f64>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultsTable {
    pub config: ExperimentConfig,
    pub rows: Vec<ResultRow>,
    /// Per-row extras (bounds, exact values, energies) keyed by row index.
    pub extras: BTreeMap<usize, Value>,
    pub notes: Vec<String>,
}

impl ResultsTable {
    fn new(config: &ExperimentConfig) -> Self {
        Self {
            config: config.clone(),
            rows: Vec::new(),
            extras: BTreeMap::new(),
            notes: vec![
                "mean_rel_err is the mean over trials of the per-trial relative error".into(),
                "m is the budget actually used after rounding to an admissible value".into(),
            ],
        }
    }

    fn push(&mut self, row: ResultRow, extra: Option<Value>) {
        if let Some(v) = extra {
            self.extras.insert(self.rows.len(), v);
        }
        self.rows.push(row);
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultsTable> {
    match config.kind {
        ExperimentKind::Synth => run_synth(config),
        ExperimentKind::Tfim => run_tfim(config),
        ExperimentKind::Graph => run_graph(config),
        ExperimentKind::Bounds => run_bounds(config),
    }
}

fn run_trace(
    kind: EstimatorKind,
    op: &dyn LinearOperator,
    m: usize,
    dist: Distribution,
    normalize: bool,
    seed: u64,
) -> xtrace_core::Result<TraceReport> {
    match kind {
        EstimatorKind::Hutch => hutch(op, m, dist, seed),
        EstimatorKind::Lra => lra_trace(op, m, dist, seed),
        EstimatorKind::HutchPP => hutchpp(op, m, dist, seed),
        EstimatorKind::NystromPP => nystrompp(op, m, dist, seed),
        EstimatorKind::XTrace => xtrace(op, m, dist, normalize, seed),
        EstimatorKind::XNysTrace => xnystrace(op, m, dist, normalize, seed),
        EstimatorKind::Bks | EstimatorKind::XDiag => unreachable!("diagonal estimators are rejected by validation"),
    }
}

/// Seed of one (instance, estimator, budget) cell; trials then split it.
fn cell_seed(base: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(base, |s, &p| trial_seed(s, p))
}

/// Runs `trials` trace estimates of `truth`, scaling each by `scale`.
fn trace_cell(
    cfg: &ExperimentConfig,
    op: &dyn LinearOperator,
    kind: EstimatorKind,
    m: usize,
    seed: u64,
    truth: f64,
    scale: f64,
) -> Result<(xtrace_core::montecarlo::ErrorSummary, Vec<f64>)> {
    let reports = run_trials(cfg.trials, seed, |s| {
        run_trace(kind, op, m, cfg.distribution, cfg.normalize, s)
    });
    let mut estimates = Vec::with_capacity(reports.len());
    let mut err_ests = Vec::new();
    for r in reports {
        let r = r.with_context(|| format!("{kind} at m = {m}"))?;
        estimates.push(r.estimate * scale);
        if let Some(e) = r.err_est {
            err_ests.push(e * scale);
        }
    }
    Ok((summarize(&estimates, &err_ests, truth), estimates))
}

fn row(experiment: String, kind: EstimatorKind, m: usize, seed: u64, s: &xtrace_core::montecarlo::ErrorSummary) -> ResultRow {
    ResultRow {
        experiment,
        estimator: kind.name().to_string(),
        m,
        trials: s.trials,
        mean_rel_err: s.mean_rel_err,
        rmse: s.rmse,
        mean_err_est: s.mean_err_est,
        seed,
    }
}

/// Synthetic psd instances with the configured spectra.
pub fn run_synth(cfg: &ExperimentConfig) -> Result<ResultsTable> {
    cfg.validate()?;
    let mut table = ResultsTable::new(cfg);
    for (si, &spectrum) in cfg.spectra.iter().enumerate() {
        let spec = SpectrumSpec::new(spectrum, cfg.dim);
        let op = make_synthetic_operator(&spec, cell_seed(cfg.seed, &[si as u64]))?;
        let truth = exact_trace(&op)?;
        for (ei, &kind) in cfg.estimators.iter().enumerate() {
            for &requested in &cfg.m {
                let m = kind.round_budget(requested).expect("validated");
                let seed = cell_seed(cfg.seed, &[si as u64, ei as u64 + 1, m as u64]);
                let (summary, _) = trace_cell(cfg, &op, kind, m, seed, truth, 1.0)?;
                table.push(
                    row(format!("synth/{}", spectrum.name()), kind, m, seed, &summary),
                    Some(json!({ "exact_trace": truth, "requested_m": requested })),
                );
            }
        }
    }
    Ok(table)
}

struct TfimInstance {
    base: DenseSpectralOperator,
    shift: f64,
}

impl TfimInstance {
    fn new(sites: usize, field: f64) -> Result<Self> {
        let ham = make_tfim(sites, field)?;
        let base = DenseSpectralOperator::from_symmetric(&densify(&ham)?)?;
        Ok(Self {
            base,
            shift: ham.psd_shift(),
        })
    }

    /// exp(−β(H + bI)), psd.
    fn boltzmann(&self, beta: f64) -> Result<DenseSpectralOperator> {
        let b = self.shift;
        Ok(make_function_operator(&self.base, |l| (-beta * (l + b)).exp())?)
    }

    /// (H + bI) exp(−β(H + bI)), psd.
    fn weighted(&self, beta: f64) -> Result<DenseSpectralOperator> {
        let b = self.shift;
        Ok(make_function_operator(&self.base, |l| (l + b) * (-beta * (l + b)).exp())?)
    }

    /// Exact Z(β) and E(β) from the eigenvalues.
    fn exact(&self, beta: f64) -> (f64, f64) {
        let ev = self.base.eigenvalues();
        let lmin = ev.min();
        let w: Vec<f64> = ev.iter().map(|l| (-beta * (l - lmin)).exp()).collect();
        let zs: f64 = w.iter().sum();
        let e = ev.iter().zip(&w).map(|(l, w)| l * w).sum::<f64>() / zs;
        ((-beta * lmin).exp() * zs, e)
    }
}

/// Partition-function estimates for the transverse-field Ising chain, plus an
/// optional adaptive energy sweep over the (β, h) grid.
pub fn run_tfim(cfg: &ExperimentConfig) -> Result<ResultsTable> {
    cfg.validate()?;
    let mut table = ResultsTable::new(cfg);
    table.notes.push(
        "Z is estimated as exp(beta*b) times the estimate of tr exp(-beta(H + bI)), b = (1 + |h|) n".into(),
    );
    let n = cfg.sites;
    for (hi, &h) in cfg.field.iter().enumerate() {
        let inst = TfimInstance::new(n, h)?;
        for (bi, &beta) in cfg.beta.iter().enumerate() {
            let (z, energy) = inst.exact(beta);
            let op = inst.boltzmann(beta)?;
            let scale = (beta * inst.shift).exp();
            let label = format!("tfim/n={n},h={h},beta={beta}");
            for (ei, &kind) in cfg.estimators.iter().enumerate() {
                for &requested in &cfg.m {
                    let m = kind.round_budget(requested).expect("validated");
                    let seed = cell_seed(cfg.seed, &[hi as u64, bi as u64, ei as u64 + 1, m as u64]);
                    let (summary, _) = trace_cell(cfg, &op, kind, m, seed, z, scale)?;
                    table.push(
                        row(label.clone(), kind, m, seed, &summary),
                        Some(json!({ "exact_z": z, "exact_energy_per_site": energy / n as f64, "shift": inst.shift })),
                    );
                }
            }
            if let Some(eps) = cfg.eps {
                let (r, extra) = tfim_energy_cell(cfg, &inst, beta, h, eps, energy, hi, bi)?;
                table.push(r, Some(extra));
            }
        }
    }
    Ok(table)
}

/// Adaptive XNysTrace estimates of E(β)/n = tr[(H+b)e^{−β(H+b)}]/tr[e^{−β(H+b)}] − b.
#[allow(clippy::too_many_arguments)]
fn tfim_energy_cell(
    cfg: &ExperimentConfig,
    inst: &TfimInstance,
    beta: f64,
    h: f64,
    eps: f64,
    energy: f64,
    hi: usize,
    bi: usize,
) -> Result<(ResultRow, Value)> {
    let n = cfg.sites as f64;
    let dim = 1usize << cfg.sites;
    let z_op = inst.boltzmann(beta)?;
    let w_op = inst.weighted(beta)?;
    let seed = cell_seed(cfg.seed, &[hi as u64, bi as u64, 0]);
    let adaptive = |op: &DenseSpectralOperator, s: u64| {
        let mut a = AdaptiveConfig::new(AdaptiveEstimator::XNysTrace, eps, dim, s);
        a.distribution = cfg.distribution;
        a.normalize = cfg.normalize;
        run_adaptive(op, &a)
    };
    let runs = run_trials(cfg.trials, seed, |s| -> xtrace_core::Result<(f64, usize, bool)> {
        let z = adaptive(&z_op, s)?;
        let w = adaptive(&w_op, trial_seed(s, 1))?;
        let e = w.report.estimate / z.report.estimate - inst.shift;
        Ok((
            e / n,
            z.report.matvecs_used + w.report.matvecs_used,
            z.converged && w.converged,
        ))
    });
    let mut per_site = Vec::with_capacity(runs.len());
    let mut matvecs = 0usize;
    let mut converged = 0usize;
    for r in runs {
        let (e, mv, c) = r?;
        per_site.push(e);
        matvecs = matvecs.max(mv);
        converged += c as usize;
    }
    let truth = energy / n;
    let summary = summarize(&per_site, &[], truth);
    let row = ResultRow {
        experiment: format!("tfim-energy/n={},h={h},beta={beta}", cfg.sites),
        estimator: "xnystrace-adaptive".into(),
        m: matvecs,
        trials: cfg.trials,
        mean_rel_err: summary.mean_rel_err,
        rmse: summary.rmse,
        mean_err_est: None,
        seed,
    };
    let extra = json!({
        "exact_energy_per_site": truth,
        "mean_energy_per_site": summary.mean_estimate,
        "eps": eps,
        "converged_runs": converged,
        "m_is_max_total_matvecs_over_trials": true,
    });
    Ok((row, extra))
}

/// Erdős–Rényi adjacency matrix with edge probability `p`.
pub fn random_graph(nodes: usize, p: f64, seed: u64) -> DMatrix<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut m = DMatrix::zeros(nodes, nodes);
    for i in 0..nodes {
        for j in i + 1..nodes {
            if rng.random::<f64>() < p {
                m[(i, j)] = 1.0;
                m[(j, i)] = 1.0;
            }
        }
    }
    m
}

/// diag(M³)/2 computed as row sums of (M² ⊙ M)/2.
fn triangle_counts(adj: &DMatrix<f64>) -> DVector<f64> {
    let sq = adj * adj;
    DVector::from_fn(adj.nrows(), |i, _| sq.row(i).dot(&adj.row(i)) / 2.0)
}

/// Relative ℓ∞ error max|aᵢᵢ − d̂ᵢ| / max|aᵢᵢ|.
pub fn relative_linf(estimate: &[f64], exact: &DVector<f64>) -> f64 {
    let scale = exact.amax();
    let num = estimate
        .iter()
        .zip(exact.iter())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if scale == 0.0 {
        num
    } else {
        num / scale
    }
}

/// Diagonal estimation of graph centralities.
pub fn run_graph(cfg: &ExperimentConfig) -> Result<ResultsTable> {
    cfg.validate()?;
    let (adj, source) = match &cfg.input {
        Some(path) => (
            read_matrix_market(path).with_context(|| format!("reading {}", path.display()))?,
            path.display().to_string(),
        ),
        None => (
            random_graph(cfg.dim, cfg.density, cfg.seed),
            format!("random(n={},p={})", cfg.dim, cfg.density),
        ),
    };
    ensure!(adj.is_square(), "adjacency matrix must be square");
    ensure!(
        adj.nrows() <= GRAPH_MAX_NODES,
        "graph has {} nodes; the dense oracle supports at most {GRAPH_MAX_NODES}",
        adj.nrows()
    );
    let mut table = ResultsTable::new(cfg);
    table
        .notes
        .push("errors are relative l-infinity errors of the estimated diagonal".into());
    for (fi, &func) in cfg.graph_functions.iter().enumerate() {
        let (op, exact): (Box<dyn LinearOperator>, DVector<f64>) = match func {
            GraphFunction::Exp => {
                let base = DenseSpectralOperator::from_symmetric(&adj)
                    .context("subgraph centrality needs a symmetric adjacency matrix")?;
                let f = make_function_operator(&base, f64::exp)?;
                let d = exact_diag(&f)?;
                (Box::new(f), d)
            }
            GraphFunction::Triangles => {
                let cube = &adj * &adj * &adj / 2.0;
                (Box::new(DenseOperator::new(cube)?), triangle_counts(&adj))
            }
        };
        for (ei, &kind) in cfg.estimators.iter().enumerate() {
            for &requested in &cfg.m {
                let m = kind.round_budget(requested).expect("validated");
                let seed = cell_seed(cfg.seed, &[fi as u64, ei as u64 + 1, m as u64]);
                let errors = run_trials(cfg.trials, seed, |s| -> xtrace_core::Result<f64> {
                    let rep = match kind {
                        EstimatorKind::Bks => bks_diag(op.as_ref(), m, cfg.distribution, s)?,
                        _ => xdiag(op.as_ref(), m, s)?,
                    };
                    Ok(relative_linf(&rep.estimate, &exact))
                })
                .into_iter()
                .collect::<xtrace_core::Result<Vec<f64>>>()
                .with_context(|| format!("{kind} at m = {m}"))?;
                let summary = summarize(&errors, &[], 0.0);
                table.push(
                    ResultRow {
                        experiment: format!("graph/{}", func.name()),
                        estimator: kind.name().into(),
                        m,
                        trials: cfg.trials,
                        mean_rel_err: summary.mean_estimate,
                        rmse: summary.rmse,
                        mean_err_est: None,
                        seed,
                    },
                    Some(json!({ "graph": source, "nodes": adj.nrows(), "exact_max": exact.amax() })),
                );
            }
        }
    }
    Ok(table)
}

/// Empirical RMSE against the a-priori variance bounds.
pub fn run_bounds(cfg: &ExperimentConfig) -> Result<ResultsTable> {
    cfg.validate()?;
    if let Some(e) = cfg
        .estimators
        .iter()
        .find(|e| !matches!(e, EstimatorKind::HutchPP | EstimatorKind::XTrace | EstimatorKind::XNysTrace))
    {
        bail!("no variance bound is available for {e}");
    }
    let mut cfg = cfg.clone();
    cfg.distribution = Distribution::Gaussian;
    cfg.normalize = false;
    let mut table = ResultsTable::new(&cfg);
    table
        .notes
        .push("bounds assume standard normal test vectors without normalization".into());
    for (si, &spectrum) in cfg.spectra.iter().enumerate() {
        let op = make_synthetic_operator(&SpectrumSpec::new(spectrum, cfg.dim), cell_seed(cfg.seed, &[si as u64]))?;
        let truth = exact_trace(&op)?;
        let sv = op.singular_values();
        for (ei, &kind) in cfg.estimators.iter().enumerate() {
            for &requested in &cfg.m {
                let m = kind.round_budget(requested).expect("validated");
                let seed = cell_seed(cfg.seed, &[si as u64, ei as u64 + 1, m as u64]);
                let (summary, _) = trace_cell(&cfg, &op, kind, m, seed, truth, 1.0)?;
                let bound = variance_bound(kind, &sv, m);
                let violation = bound.map(|b| summary.rmse > b.value);
                if violation == Some(true) {
                    eprintln!(
                        "warning: {} {kind} m={m}: RMSE {:.3e} exceeds bound {:.3e}",
                        spectrum.name(),
                        summary.rmse,
                        bound.unwrap().value
                    );
                }
                table.push(
                    row(format!("bounds/{}", spectrum.name()), kind, m, seed, &summary),
                    Some(json!({
                        "bound": bound.map(|b| b.value),
                        "bound_rank": bound.map(|b| b.rank),
                        "violation": violation,
                        "exact_trace": truth,
                    })),
                );
            }
        }
    }
    Ok(table)
}
