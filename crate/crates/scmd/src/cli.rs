//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 invalid data or graph, 3 numerical
//! failure. Results go to standard output or `--out`; diagnostics go to
//! standard error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use scmd_core::distance::{pair_jobs, InterventionPolicy, PairwiseMatrix, PairwiseMetric, DEFAULT_LEVELS};
use scmd_core::embedding::DEFAULT_CACHE_BYTES;
use scmd_core::graph::sid;
use scmd_core::kernel::median_heuristic;
use scmd_core::synth::{sample_scm, LinearGaussianScm};
use scmd_core::{
    Dag, Dataset, DistanceReport, Environment, Estimator, EstimatorConfig, InterventionOrigin, InterventionSpec,
    KernelConfig, RidgeScaling,
};

use crate::io::{self, Format, IoError, Output};

pub const THREADS_ENV: &str = "SCMD_THREADS";

#[derive(Debug, Parser)]
#[command(name = "scmd", version, about = "Kernel-embedding distances between structural causal models")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sum of interventional distances over all ordered variable pairs.
    Scmd(ScmdArgs),
    /// SCMD restricted to one target variable.
    Pscmd(PscmdArgs),
    /// SCMD averaged over per-variable quantile interventions.
    Escmd(EscmdArgs),
    /// Biased V-statistic MMD between the joint laws of two datasets.
    Mmd(MmdArgs),
    /// Structural intervention distance between two graphs.
    Sid(SidArgs),
    /// Distance matrix over two or more environments sharing one graph.
    Pairwise(PairwiseArgs),
    /// Sample a linear-Gaussian model to CSV.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct Inputs {
    /// First dataset (CSV with a header row).
    data1: PathBuf,
    /// Second dataset.
    data2: PathBuf,
    /// Graph used for both datasets.
    #[arg(short, long, conflicts_with_all = ["graph1", "graph2"])]
    graph: Option<PathBuf>,
    /// Graph of the first dataset.
    #[arg(long)]
    graph1: Option<PathBuf>,
    /// Graph of the second dataset.
    #[arg(long)]
    graph2: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EstimatorArgs {
    /// Kernel bandwidth sigma^2; the median heuristic when omitted.
    #[arg(long = "sigma2")]
    sigma_sq: Option<f64>,
    /// Ridge parameter lambda.
    #[arg(long, default_value_t = EstimatorConfig::DEFAULT_LAMBDA)]
    lambda: f64,
    /// Whether lambda is multiplied by the sample size.
    #[arg(long, value_enum, default_value_t = Scaling::Unscaled)]
    ridge_scaling: Scaling,
    /// Initial diagonal jitter for the Cholesky factorization.
    #[arg(long, default_value_t = EstimatorConfig::DEFAULT_JITTER)]
    jitter: f64,
    /// Tolerated negative squared distance per sample before erroring.
    #[arg(long, default_value_t = EstimatorConfig::DEFAULT_CLAMP_TOL)]
    clamp_tol: f64,
    /// Warn when the estimated operation count exceeds this.
    #[arg(long, default_value_t = 1e14)]
    cost_budget: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Scaling {
    Unscaled,
    SampleSize,
}

#[derive(Debug, Args)]
struct InterventionArgs {
    /// Intervention value for both datasets, as NAME=VALUE (repeatable).
    /// Variables without a value are set to each dataset's own mean.
    #[arg(long = "set", value_name = "NAME=VALUE", value_parser = parse_assignment)]
    both: Vec<(String, f64)>,
    /// Intervention value for the first dataset only.
    #[arg(long = "set1", value_name = "NAME=VALUE", value_parser = parse_assignment)]
    first: Vec<(String, f64)>,
    /// Intervention value for the second dataset only.
    #[arg(long = "set2", value_name = "NAME=VALUE", value_parser = parse_assignment)]
    second: Vec<(String, f64)>,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Write the result here instead of standard output.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct ScmdArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    interventions: InterventionArgs,
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct PscmdArgs {
    /// Target variable.
    #[arg(long)]
    target: String,
    #[command(flatten)]
    scmd: ScmdArgs,
}

#[derive(Debug, Args)]
struct EscmdArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Quantile levels in (0, 1), comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_LEVELS)]
    levels: Vec<f64>,
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct MmdArgs {
    data1: PathBuf,
    data2: PathBuf,
    /// Kernel bandwidth sigma^2; the median heuristic when omitted.
    #[arg(long = "sigma2")]
    sigma_sq: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct SidArgs {
    /// Graph being evaluated.
    guess: PathBuf,
    /// Reference graph.
    truth: PathBuf,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MetricArg {
    Scmd,
    Mmd,
}

#[derive(Debug, Args)]
struct PairwiseArgs {
    /// Environment datasets; ids are the file stems.
    #[arg(num_args = 2.., required = true)]
    datasets: Vec<PathBuf>,
    /// Graph shared by all environments.
    #[arg(short, long)]
    graph: PathBuf,
    #[arg(long, value_enum, default_value_t = MetricArg::Scmd)]
    metric: MetricArg,
    /// Intervention value for every environment, as NAME=VALUE (repeatable).
    /// Variables without a value are set to each environment's own mean.
    #[arg(long = "set", value_name = "NAME=VALUE", value_parser = parse_assignment)]
    set: Vec<(String, f64)>,
    /// Worker threads; results do not depend on this.
    #[arg(long, env = THREADS_ENV)]
    threads: Option<NonZeroUsize>,
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelArg {
    /// X -> Y with Y = a X + noise.
    M1,
    /// The reversal Y -> X with the same joint law.
    M2,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Built-in two-variable model.
    #[arg(long, value_enum, required_unless_present = "graph", conflicts_with = "graph")]
    model: Option<ModelArg>,
    /// Coefficient `a` of the built-in model.
    #[arg(short, long, default_value_t = 3.0, allow_negative_numbers = true)]
    a: f64,
    /// Edge list of a custom linear-Gaussian model.
    #[arg(short, long)]
    graph: Option<PathBuf>,
    /// Edge coefficient as PARENT->CHILD=VALUE (default 1).
    #[arg(long, value_name = "PARENT->CHILD=VALUE", value_parser = parse_coefficient)]
    coef: Vec<((String, String), f64)>,
    /// Noise variance as NAME=VALUE (default 1).
    #[arg(long, value_name = "NAME=VALUE", value_parser = parse_assignment)]
    noise: Vec<(String, f64)>,
    /// Intercept as NAME=VALUE (default 0).
    #[arg(long, value_name = "NAME=VALUE", value_parser = parse_assignment)]
    intercept: Vec<(String, f64)>,
    /// Number of samples.
    #[arg(short, long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the CSV here instead of standard output.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

fn parse_assignment(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    let name = name.trim();
    if name.is_empty() {
        return Err(format!("empty name in `{s}`"));
    }
    let v: f64 = value.trim().parse().map_err(|_| format!("`{value}` is not a number"))?;
    if !v.is_finite() {
        return Err(format!("`{value}` is not finite"));
    }
    Ok((name.to_string(), v))
}

fn parse_coefficient(s: &str) -> Result<((String, String), f64), String> {
    let (edge, v) = parse_assignment(s)?;
    let (p, c) = edge
        .split_once("->")
        .ok_or_else(|| format!("expected PARENT->CHILD=VALUE, got `{s}`"))?;
    Ok(((p.trim().to_string(), c.trim().to_string()), v))
}

/// A failure with its exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Invalid(String),
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Invalid(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Invalid(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<scmd_core::Error> for Failure {
    fn from(e: scmd_core::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Invalid(e.to_string())
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Invalid { ref source, .. } if source.is_numerical() => Failure::Numerical(e.to_string()),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(rendered.as_bytes())
            } else {
                stderr.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message());
            f.exit_code()
        }
    }
}

fn execute(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Failure> {
    match command {
        Command::Scmd(a) => {
            let job = Job::load(&a.inputs, &a.estimator, stderr)?;
            let (v1, v2) = job.interventions(&a.interventions)?;
            let mut est = Estimator::new(job.cfg)?;
            let r = est.scmd(job.env1(), job.env2(), &v1, &v2)?;
            emit_distance(&r, &a.output, stdout)
        }
        Command::Pscmd(a) => {
            let s = &a.scmd;
            let job = Job::load(&s.inputs, &s.estimator, stderr)?;
            let (v1, v2) = job.interventions(&s.interventions)?;
            let mut est = Estimator::new(job.cfg)?;
            let r = est.p_scmd(job.env1(), job.env2(), &a.target, &v1, &v2)?;
            emit_distance(&r, &s.output, stdout)
        }
        Command::Escmd(a) => {
            let job = Job::load(&a.inputs, &a.estimator, stderr)?;
            let mut est = Estimator::new(job.cfg)?;
            let r = est.e_scmd(job.env1(), job.env2(), &a.levels)?;
            emit_distance(&r, &a.output, stdout)
        }
        Command::Mmd(a) => {
            let d1 = io::load_dataset(&a.data1)?;
            let d2 = io::load_dataset(&a.data2)?;
            let kernel = kernel_config(a.sigma_sq, &[&d1, &d2], stderr)?;
            let est = Estimator::new(EstimatorConfig::new(kernel))?;
            emit_distance(&est.mmd(&d1, &d2)?, &a.output, stdout)
        }
        Command::Sid(a) => {
            let guess = io::load_graph(&a.guess, None)?;
            let truth = io::load_graph(&a.truth, None)?;
            let value = sid(&guess, &truth)?;
            let (gs, ts) = (a.guess.display().to_string(), a.truth.display().to_string());
            let out = Output::Sid {
                guess: &gs,
                truth: &ts,
                value,
            };
            match a.output.format {
                None => emit_text(&format!("{value}\n"), a.output.out.as_deref(), stdout),
                Some(f) => emit_text(&io::render(out, format_of(f))?, a.output.out.as_deref(), stdout),
            }
        }
        Command::Pairwise(a) => pairwise(a, stdout, stderr),
        Command::Synth(a) => synth(a, stdout),
    }
}

fn format_of(f: FormatArg) -> Format {
    match f {
        FormatArg::Json => Format::Json,
        FormatArg::Csv => Format::Csv,
    }
}

fn emit_text(text: &str, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Invalid(format!("standard output: {e}"))),
    }
}

fn emit_distance(r: &DistanceReport, o: &OutputArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let text = io::render(Output::Distance(r), o.format.map_or(Format::Json, format_of))?;
    emit_text(&text, o.out.as_deref(), stdout)
}

/// Bandwidth from the flag, or the median over all columns of the per-column
/// median heuristic.
fn kernel_config(sigma_sq: Option<f64>, data: &[&Dataset], stderr: &mut dyn Write) -> Result<KernelConfig, Failure> {
    if let Some(s) = sigma_sq {
        return Ok(KernelConfig::new(s)?);
    }
    let mut values = Vec::new();
    for d in data {
        for (_, col) in d.columns() {
            values.push(median_heuristic(col)?.bandwidth_sq());
        }
    }
    values.sort_by(f64::total_cmp);
    let m = values.len();
    let s = if m % 2 == 1 {
        values[m / 2]
    } else {
        (values[m / 2 - 1] + values[m / 2]) / 2.0
    };
    let _ = writeln!(stderr, "bandwidth_sq = {s} (median heuristic)");
    Ok(KernelConfig::new(s)?)
}

fn estimator_config(a: &EstimatorArgs, data: &[&Dataset], stderr: &mut dyn Write) -> Result<EstimatorConfig, Failure> {
    let cfg = EstimatorConfig::new(kernel_config(a.sigma_sq, data, stderr)?)
        .with_lambda(a.lambda)
        .with_ridge_scaling(match a.ridge_scaling {
            Scaling::Unscaled => RidgeScaling::Unscaled,
            Scaling::SampleSize => RidgeScaling::SampleSize,
        })
        .with_jitter(a.jitter)
        .with_clamp_tol(a.clamp_tol);
    cfg.validate()?;
    Ok(cfg)
}

/// Prints the `d^3 N^3` cost class of `comparisons` distance evaluations and
/// warns above the budget.
fn announce_cost(d: usize, n: usize, comparisons: usize, budget: f64, stderr: &mut dyn Write) {
    let ops = (d as f64).powi(3) * (n as f64).powi(3) * comparisons as f64;
    let _ = writeln!(stderr, "cost class O(d^3 N^3): d = {d}, N = {n}, about {ops:.1e} operations");
    if ops > budget {
        let _ = writeln!(
            stderr,
            "warning: estimated cost exceeds the budget of {budget:.1e} operations; this may take a long time"
        );
    }
}

struct Job {
    g1: Dag,
    d1: Dataset,
    g2: Dag,
    d2: Dataset,
    cfg: EstimatorConfig,
}

impl Job {
    fn load(inputs: &Inputs, est: &EstimatorArgs, stderr: &mut dyn Write) -> Result<Job, Failure> {
        let (p1, p2) = match (&inputs.graph, &inputs.graph1, &inputs.graph2) {
            (Some(g), None, None) => (g, g),
            (None, Some(a), Some(b)) => (a, b),
            _ => return Err(Failure::Usage("give either --graph or both --graph1 and --graph2".into())),
        };
        let d1 = io::load_dataset(&inputs.data1)?;
        let d2 = io::load_dataset(&inputs.data2)?;
        let g1 = io::load_graph(p1, Some(d1.names()))?;
        let g2 = io::load_graph(p2, Some(d2.names()))?;
        let cfg = estimator_config(est, &[&d1, &d2], stderr)?;
        announce_cost(g1.n_nodes(), d1.n_samples().max(d2.n_samples()), 1, est.cost_budget, stderr);
        Ok(Job { g1, d1, g2, d2, cfg })
    }

    fn env1(&self) -> Environment<'_> {
        Environment::new(&self.g1, &self.d1)
    }

    fn env2(&self) -> Environment<'_> {
        Environment::new(&self.g2, &self.d2)
    }

    fn interventions(&self, a: &InterventionArgs) -> Result<(InterventionSpec, InterventionSpec), Failure> {
        let first: Vec<_> = a.both.iter().chain(&a.first).cloned().collect();
        let second: Vec<_> = a.both.iter().chain(&a.second).cloned().collect();
        Ok((intervention(&self.d1, &first)?, intervention(&self.d2, &second)?))
    }
}

/// Per-variable means of `data`, overridden by `values`.
fn intervention(data: &Dataset, values: &[(String, f64)]) -> Result<InterventionSpec, Failure> {
    let mut spec = InterventionSpec::per_variable_mean(data);
    for (name, v) in values {
        if !data.has_variable(name) {
            return Err(Failure::Invalid(format!("intervention on unknown variable `{name}`")));
        }
        spec.values.insert(name.clone(), *v);
        spec.origin = InterventionOrigin::User;
    }
    Ok(spec)
}

fn pairwise(a: PairwiseArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Failure> {
    let envs = a
        .datasets
        .iter()
        .map(io::load_dataset)
        .collect::<Result<Vec<_>, _>>()?;
    let g = io::load_graph(&a.graph, Some(envs[0].names()))?;
    for d in &envs[1..] {
        io::check_nodes(&g, d.names()).map_err(|e| Failure::Invalid(format!("dataset `{}`: {e}", d.id())))?;
    }
    let refs: Vec<&Dataset> = envs.iter().collect();
    let cfg = estimator_config(&a.estimator, &refs, stderr)?;
    let metric = match a.metric {
        MetricArg::Scmd => PairwiseMetric::Scmd,
        MetricArg::Mmd => PairwiseMetric::Mmd,
    };
    let policy = if a.set.is_empty() {
        InterventionPolicy::PerVariableMean
    } else {
        InterventionPolicy::User(envs.iter().map(|d| intervention(d, &a.set)).collect::<Result<_, _>>()?)
    };
    let jobs = envs.len() * (envs.len() - 1) / 2;
    if metric == PairwiseMetric::Scmd {
        let n = envs.iter().map(Dataset::n_samples).max().unwrap_or(0);
        announce_cost(g.n_nodes(), n, jobs, a.estimator.cost_budget, stderr);
    }
    let threads = a
        .threads
        .or_else(|| std::thread::available_parallelism().ok())
        .map_or(1, NonZeroUsize::get);
    let matrix = pairwise_matrix(&envs, &g, metric, &policy, cfg, threads)?;
    let out = Output::Pairwise {
        matrix: &matrix,
        metric: match metric {
            PairwiseMetric::Scmd => "scmd",
            PairwiseMetric::Mmd => "mmd",
        },
        config: &cfg,
    };
    let text = io::render(out, a.output.format.map_or(Format::Json, format_of))?;
    emit_text(&text, a.output.out.as_deref(), stdout)
}

/// Pairwise matrix with environment pairs spread over `threads` workers,
/// each with its own estimator. Every pair is computed the same way whatever
/// the thread count, so the matrix is identical for any `threads`.
pub fn pairwise_matrix(
    envs: &[Dataset],
    g: &Dag,
    metric: PairwiseMetric,
    policy: &InterventionPolicy,
    cfg: EstimatorConfig,
    threads: usize,
) -> Result<PairwiseMatrix, scmd_core::Error> {
    if envs.len() < 2 {
        return Err(scmd_core::Error::InvalidConfig(
            "pairwise comparison needs at least two environments".into(),
        ));
    }
    let jobs = pair_jobs(envs.len());
    let threads = threads.clamp(1, jobs.len());
    let budget = DEFAULT_CACHE_BYTES / threads;
    let worker = |t: usize| -> Vec<((usize, usize), Result<DistanceReport, scmd_core::Error>)> {
        let mut est = match Estimator::new(cfg) {
            Ok(e) => e.with_cache_budget(budget),
            Err(e) => return vec![(jobs[t], Err(e))],
        };
        jobs.iter()
            .skip(t)
            .step_by(threads)
            .map(|&job| (job, est.pairwise_entry(envs, g, metric, policy, job)))
            .collect()
    };
    let mut results: Vec<_> = if threads == 1 {
        worker(0)
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..threads).map(|t| s.spawn(move || worker(t))).collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("pairwise worker panicked"))
                .collect()
        })
    };
    results.sort_by_key(|(job, _)| *job);
    let reports = results
        .into_iter()
        .map(|(job, r)| r.map(|r| (job, r)))
        .collect::<Result<Vec<_>, _>>()?;
    PairwiseMatrix::from_reports(envs.iter().map(|d| d.id().to_string()).collect(), reports)
}

fn synth(a: SynthArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let model = match (a.model, &a.graph) {
        (Some(ModelArg::M1), _) => LinearGaussianScm::m1(a.a)?,
        (Some(ModelArg::M2), _) => LinearGaussianScm::m2(a.a)?,
        (None, Some(path)) => {
            let dag = io::load_graph(path, None)?;
            let mut noise: BTreeMap<String, f64> = dag.nodes().iter().map(|n| (n.clone(), 1.0)).collect();
            for (k, v) in &a.noise {
                if !dag.contains(k) {
                    return Err(Failure::Invalid(format!("noise variance for unknown node `{k}`")));
                }
                noise.insert(k.clone(), *v);
            }
            LinearGaussianScm::new(
                dag,
                a.coef.iter().cloned().collect(),
                noise,
                a.intercept.iter().cloned().collect(),
            )?
        }
        (None, None) => return Err(Failure::Usage("give --model or --graph".into())),
    };
    let data = sample_scm(&model, a.n, a.seed)?;
    emit_text(&io::dataset_csv(&data), a.out.as_deref(), stdout)
}
