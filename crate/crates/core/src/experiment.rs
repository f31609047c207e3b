//! Experiment configuration and the runner behind the command-line tool.
//!
//! A run produces one output document: a JSON report envelope
//! `{tool, version, task, config_hash, seed, tolerances, config, result}`, or
//! a CSV table for the tasks that have one. Reports never depend on the
//! worker count, so repeated runs with the same configuration are
//! byte-identical.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::estimator::{
    fki_dirichlet, fki_kernel, fki_semigroup, fki_trace, EstimatorError, McConfig,
};
use crate::graph::{
    default_intrinsic_metric, generate, make_exhaustion, verify_intrinsic, BallMetric,
    GeneratorSpec, GraphError, MagneticPotential, Potential, VertexId, VertexSet, WeightedGraph,
};
use crate::inequalities::{
    check_exhaustion, check_form_sum, check_generator, check_golden_thompson, check_ground_state,
    check_identities, check_intrinsic, check_jump_tail, check_kato, check_sample_kato,
    CheckReport, ExhaustionTolerances, InequalityError,
};
use crate::io::{self, EstimateRecord, IoError, KernelRow, LoadedGraph};
use crate::operator::{assemble_finite, ess_sa_path_sum, OperatorError};
use crate::process::{sample_trajectory, ProcessError, RngSeed};
use crate::C64;

pub const TOOL_NAME: &str = "magnetic-fki";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Environment variable read by the CLI for the worker count.
pub const WORKERS_ENV: &str = "MAGNETIC_FKI_WORKERS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG_INVALID: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_COMPUTE: i32 = 4;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("computation failed: {0}")]
    Compute(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::ConfigInvalid(_) => EXIT_CONFIG_INVALID,
            RunError::Io(IoError::Parse { .. }) => EXIT_CONFIG_INVALID,
            RunError::Io(_) => EXIT_IO,
            RunError::Compute(_) => EXIT_COMPUTE,
        }
    }
}

fn invalid(e: impl fmt::Display) -> RunError {
    RunError::ConfigInvalid(e.to_string())
}

impl From<GraphError> for RunError {
    fn from(e: GraphError) -> Self {
        invalid(e)
    }
}

impl From<OperatorError> for RunError {
    fn from(e: OperatorError) -> Self {
        match e {
            OperatorError::EigensolverFailure => RunError::Compute(e.to_string()),
            other => invalid(other),
        }
    }
}

impl From<ProcessError> for RunError {
    fn from(e: ProcessError) -> Self {
        invalid(e)
    }
}

impl From<EstimatorError> for RunError {
    fn from(e: EstimatorError) -> Self {
        match e {
            EstimatorError::WorkerPool(_) => RunError::Compute(e.to_string()),
            other => invalid(other),
        }
    }
}

impl From<InequalityError> for RunError {
    fn from(e: InequalityError) -> Self {
        match e {
            InequalityError::Operator(op) => op.into(),
            InequalityError::Estimator(est) => est.into(),
            other => invalid(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, RunError>;

/// Where the graph comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum GraphSource {
    File {
        file: PathBuf,
    },
    Generator {
        generator: GeneratorSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        v: Option<Vec<f64>>,
    },
}

impl GraphSource {
    pub fn load(&self) -> Result<LoadedGraph> {
        match self {
            GraphSource::File { file } => Ok(io::load_graph(file)?),
            GraphSource::Generator { generator, v } => {
                let (g, theta, v0) = generate(generator)?;
                let v = match v {
                    Some(values) => Potential::new(&g, values.clone())?,
                    None => v0,
                };
                Ok((g, theta, v))
            }
        }
    }
}

/// A finite vertex set `U`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SubsetSpec {
    #[default]
    All,
    List {
        vertices: Vec<usize>,
    },
    Ball {
        center: usize,
        radius: f64,
        #[serde(default = "combinatorial")]
        metric: BallMetric,
    },
}

fn combinatorial() -> BallMetric {
    BallMetric::Combinatorial
}

impl SubsetSpec {
    pub fn resolve(&self, g: &WeightedGraph) -> Result<VertexSet> {
        match self {
            SubsetSpec::All => Ok(g.all_vertices()),
            SubsetSpec::List { vertices } => Ok(VertexSet::new(g, vertices.iter().copied())?),
            SubsetSpec::Ball {
                center,
                radius,
                metric,
            } => {
                let exh = make_exhaustion(g, VertexId(*center), &[*radius], *metric)?;
                Ok(exh.last().clone())
            }
        }
    }
}

/// `all`, `0,1,2`, or `ball:CENTER:RADIUS[:intrinsic]`.
impl FromStr for SubsetSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if s == "all" {
            return Ok(SubsetSpec::All);
        }
        if let Some(rest) = s.strip_prefix("ball:") {
            let parts: Vec<&str> = rest.split(':').collect();
            if !(2..=3).contains(&parts.len()) {
                return Err(format!("expected ball:CENTER:RADIUS[:METRIC], got `{s}`"));
            }
            let center = parts[0].parse().map_err(|_| format!("bad center `{}`", parts[0]))?;
            let radius = parts[1].parse().map_err(|_| format!("bad radius `{}`", parts[1]))?;
            let metric = match parts.get(2) {
                None | Some(&"combinatorial") => BallMetric::Combinatorial,
                Some(&"intrinsic") => BallMetric::Intrinsic,
                Some(other) => return Err(format!("unknown metric `{other}`")),
            };
            return Ok(SubsetSpec::Ball {
                center,
                radius,
                metric,
            });
        }
        let vertices = parse_list(s)?;
        Ok(SubsetSpec::List { vertices })
    }
}

fn parse_list<T: FromStr>(s: &str) -> std::result::Result<Vec<T>, String> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse().map_err(|_| format!("cannot parse `{p}`")))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparseEntry {
    pub vertex: usize,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// Initial data `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionSpec {
    Indicator {
        vertex: usize,
    },
    Constant {
        re: f64,
        #[serde(default)]
        im: f64,
    },
    Sparse {
        entries: Vec<SparseEntry>,
    },
    /// Lowest eigenfunction of `L^(U)_{v,θ}` for the task's `U`.
    GroundState,
}

impl Default for FunctionSpec {
    fn default() -> Self {
        FunctionSpec::Constant { re: 1.0, im: 0.0 }
    }
}

impl FunctionSpec {
    pub fn resolve(
        &self,
        g: &WeightedGraph,
        v: &Potential,
        theta: &MagneticPotential,
        subset: &VertexSet,
    ) -> Result<Vec<C64>> {
        let n = g.num_vertices();
        let zero = C64::new(0.0, 0.0);
        let check = |x: usize| g.check_vertex(VertexId(x)).map_err(RunError::from);
        match self {
            FunctionSpec::Indicator { vertex } => {
                check(*vertex)?;
                let mut f = vec![zero; n];
                f[*vertex] = C64::new(1.0, 0.0);
                Ok(f)
            }
            FunctionSpec::Constant { re, im } => Ok(vec![C64::new(*re, *im); n]),
            FunctionSpec::Sparse { entries } => {
                let mut f = vec![zero; n];
                for e in entries {
                    check(e.vertex)?;
                    f[e.vertex] = C64::new(e.re, e.im);
                }
                Ok(f)
            }
            FunctionSpec::GroundState => {
                let op = assemble_finite(g, v, theta, subset)?;
                let spectral = op.spectrum()?;
                Ok(op.eigenfunction(&spectral, 0)?)
            }
        }
    }
}

/// `indicator:X`, `constant:RE[,IM]`, `sparse:X=RE[,IM];X=RE[,IM]...`, `ground-state`.
impl FromStr for FunctionSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if s == "ground-state" || s == "ground_state" {
            return Ok(FunctionSpec::GroundState);
        }
        let (head, rest) = s
            .split_once(':')
            .ok_or_else(|| format!("expected KIND:VALUE, got `{s}`"))?;
        let complex = |t: &str| -> std::result::Result<(f64, f64), String> {
            let nums: Vec<f64> = parse_list(t)?;
            match nums.as_slice() {
                [re] => Ok((*re, 0.0)),
                [re, im] => Ok((*re, *im)),
                _ => Err(format!("expected RE[,IM], got `{t}`")),
            }
        };
        match head {
            "indicator" => Ok(FunctionSpec::Indicator {
                vertex: rest.trim().parse().map_err(|_| format!("bad vertex `{rest}`"))?,
            }),
            "constant" => {
                let (re, im) = complex(rest)?;
                Ok(FunctionSpec::Constant { re, im })
            }
            "sparse" => {
                let mut entries = Vec::new();
                for item in rest.split(';').filter(|p| !p.trim().is_empty()) {
                    let (x, val) = item
                        .split_once('=')
                        .ok_or_else(|| format!("expected X=VALUE, got `{item}`"))?;
                    let (re, im) = complex(val)?;
                    entries.push(SparseEntry {
                        vertex: x.trim().parse().map_err(|_| format!("bad vertex `{x}`"))?,
                        re,
                        im,
                    });
                }
                Ok(FunctionSpec::Sparse { entries })
            }
            other => Err(format!("unknown function kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FkiMode {
    Semigroup,
    Kernel,
    Trace,
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerifyKind {
    Kato,
    Gt,
    Exhaustion,
    Generator,
    Groundstate,
    Formsum,
    Intrinsic,
    Identities,
}

fn default_times() -> Vec<f64> {
    vec![1.0]
}
fn default_one() -> f64 {
    1.0
}
fn default_n_samples() -> u64 {
    10_000
}
fn default_max_jumps() -> usize {
    10_000
}
fn default_trials() -> usize {
    20
}
fn default_generator_times() -> Vec<f64> {
    vec![1e-2, 1e-3, 1e-4, 1e-5]
}
fn default_tail_times() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3]
}
fn default_cutoffs() -> Vec<f64> {
    vec![1.0, 10.0, 100.0]
}

/// Parameters of the `verify` checks; each check reads the fields it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyParams {
    /// Comparison potential; defaults to the graph's potential.
    #[serde(default)]
    pub v2: Option<Vec<f64>>,
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    /// Real resolvent shifts.
    #[serde(default)]
    pub shifts: Vec<f64>,
    #[serde(default)]
    pub subset: SubsetSpec,
    #[serde(default)]
    pub f: FunctionSpec,
    #[serde(default)]
    pub x: usize,
    #[serde(default = "default_one")]
    pub t: f64,
    /// Exhaustion radii around `x`.
    #[serde(default)]
    pub radii: Vec<f64>,
    #[serde(default = "combinatorial")]
    pub ball_metric: BallMetric,
    #[serde(default = "default_cutoffs")]
    pub cutoffs: Vec<f64>,
    #[serde(default = "default_generator_times")]
    pub generator_times: Vec<f64>,
    #[serde(default = "default_tail_times")]
    pub tail_times: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Eigenpair index; all when absent.
    #[serde(default)]
    pub eigenpair: Option<usize>,
    #[serde(default = "default_n_samples")]
    pub n_samples: u64,
    #[serde(default = "default_max_jumps")]
    pub max_jumps: usize,
}

impl Default for VerifyParams {
    fn default() -> Self {
        serde_json::from_value(json!({})).expect("all fields have defaults")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum Task {
    Expm {
        t: f64,
        #[serde(default)]
        subset: SubsetSpec,
    },
    Spectrum {
        #[serde(default)]
        subset: SubsetSpec,
    },
    Simulate {
        x: usize,
        t: f64,
        #[serde(default = "default_sim_samples")]
        n_samples: u64,
        #[serde(default = "default_max_jumps")]
        max_jumps: usize,
    },
    Fki {
        mode: FkiMode,
        t: f64,
        #[serde(default)]
        x: usize,
        #[serde(default)]
        y: usize,
        #[serde(default)]
        f: FunctionSpec,
        #[serde(default)]
        subset: SubsetSpec,
        #[serde(default = "default_n_samples")]
        n_samples: u64,
        #[serde(default = "default_max_jumps")]
        max_jumps: usize,
        /// Attach the exact value and the absolute error.
        #[serde(default = "yes")]
        oracle: bool,
    },
    Verify {
        check: VerifyKind,
        #[serde(flatten)]
        params: VerifyParams,
    },
    Metric,
    EssSaPathSum {
        alpha: f64,
        path: Vec<usize>,
        n_terms: usize,
    },
}

fn default_sim_samples() -> u64 {
    10
}
fn yes() -> bool {
    true
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Expm { .. } => "expm",
            Task::Spectrum { .. } => "spectrum",
            Task::Simulate { .. } => "simulate",
            Task::Fki { .. } => "fki",
            Task::Verify { .. } => "verify",
            Task::Metric => "metric",
            Task::EssSaPathSum { .. } => "esssa_path_sum",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub graph: GraphSource,
    #[serde(flatten)]
    pub task: Task,
    /// Output file; standard output when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; never part of the report.
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(graph: GraphSource, task: Task) -> Self {
        ExperimentConfig {
            graph,
            task,
            output: None,
            format: OutputFormat::Json,
            seed: 0,
            workers: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(invalid)
    }

    /// Canonical JSON of the configuration without output location.
    pub fn canonical_json(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        serde_json::to_string(&c).expect("config serializes")
    }

    /// SHA-256 of [`canonical_json`](Self::canonical_json), hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

/// Result of a successful run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub exit_code: i32,
    /// The output document.
    pub bytes: Vec<u8>,
}

struct Payload {
    result: Value,
    tolerances: BTreeMap<String, f64>,
    passed: Option<bool>,
    csv: Option<Vec<u8>>,
}

impl Payload {
    fn json(result: Value) -> Self {
        Payload {
            result,
            tolerances: BTreeMap::new(),
            passed: None,
            csv: None,
        }
    }
}

/// Runs one experiment and writes its output (to `config.output` or not at
/// all; the bytes are returned either way).
pub fn run(config: &ExperimentConfig) -> Result<RunOutcome> {
    let (g, theta, v) = config.graph.load()?;
    let payload = dispatch(config, &g, &theta, &v)?;
    let exit_code = match payload.passed {
        Some(false) => EXIT_CHECK_FAILED,
        _ => EXIT_OK,
    };
    let bytes = match config.format {
        OutputFormat::Csv => payload.csv.ok_or_else(|| {
            invalid(format!("task `{}` has no CSV output", config.task.name()))
        })?,
        OutputFormat::Json => {
            let mut doc = serde_json::Map::new();
            doc.insert("tool".into(), json!(TOOL_NAME));
            doc.insert("version".into(), json!(VERSION));
            doc.insert("task".into(), json!(config.task.name()));
            doc.insert("config_hash".into(), json!(config.hash()));
            doc.insert("seed".into(), json!(config.seed));
            doc.insert("tolerances".into(), json!(payload.tolerances));
            if let Some(p) = payload.passed {
                doc.insert("passed".into(), json!(p));
            }
            let mut cfg = config.clone();
            cfg.output = None;
            doc.insert("config".into(), serde_json::to_value(&cfg).map_err(IoError::from)?);
            doc.insert("result".into(), payload.result);
            let mut s = serde_json::to_string_pretty(&Value::Object(doc)).map_err(IoError::from)?;
            s.push('\n');
            s.into_bytes()
        }
    };
    if let Some(path) = &config.output {
        io::write_atomic(path, &bytes)?;
    }
    Ok(RunOutcome { exit_code, bytes })
}

fn vertex(g: &WeightedGraph, x: usize) -> Result<VertexId> {
    g.check_vertex(VertexId(x))?;
    Ok(VertexId(x))
}

fn dispatch(
    config: &ExperimentConfig,
    g: &WeightedGraph,
    theta: &MagneticPotential,
    v: &Potential,
) -> Result<Payload> {
    let seed = RngSeed(config.seed);
    match &config.task {
        Task::Expm { t, subset } => {
            let u = subset.resolve(g)?;
            let kernel = assemble_finite(g, v, theta, &u)?.semigroup(*t)?;
            let rows: Vec<KernelRow> = io::kernel_rows(&kernel);
            let trace = kernel.trace();
            let mut p = Payload::json(json!({
                "t": t,
                "subset": u.members(),
                "kernel": rows,
                "trace": {"re": trace.re, "im": trace.im},
            }));
            p.csv = Some(io::kernel_csv(&kernel)?);
            Ok(p)
        }
        Task::Spectrum { subset } => {
            let u = subset.resolve(g)?;
            let op = assemble_finite(g, v, theta, &u)?;
            let spectral = op.spectrum()?;
            let mut p = Payload::json(json!({
                "subset": u.members(),
                "eigenvalues": spectral.eigenvalues.as_slice(),
                "max_residual": spectral.max_residual(op.hermitian()),
            }));
            p.csv = Some(io::spectrum_csv(&spectral)?);
            Ok(p)
        }
        Task::Simulate {
            x,
            t,
            n_samples,
            max_jumps,
        } => {
            let x = vertex(g, *x)?;
            let samples = (0..*n_samples)
                .map(|i| Ok((i, sample_trajectory(g, x, *t, seed, i, *max_jumps)?)))
                .collect::<Result<Vec<_>>>()?;
            let censored = samples.iter().filter(|(_, tr)| tr.censored).count();
            let mut p = Payload::json(json!({
                "x": x,
                "t": t,
                "n_samples": n_samples,
                "censored": censored,
                "trajectories": samples.iter().map(|(_, tr)| tr).collect::<Vec<_>>(),
            }));
            p.csv = Some(io::trajectory_csv(&samples)?);
            Ok(p)
        }
        Task::Fki {
            mode,
            t,
            x,
            y,
            f,
            subset,
            n_samples,
            max_jumps,
            oracle,
        } => {
            let cfg = McConfig {
                n_samples: *n_samples,
                seed,
                max_jumps: *max_jumps,
                workers: config.workers,
            };
            let u = subset.resolve(g)?;
            let (estimate, exact) = match mode {
                FkiMode::Semigroup => {
                    let x = vertex(g, *x)?;
                    let fv = f.resolve(g, v, theta, &g.all_vertices())?;
                    let e = fki_semigroup(g, v, theta, &fv, x, *t, &cfg)?;
                    let exact = || -> Result<C64> {
                        let op = assemble_finite(g, v, theta, &g.all_vertices())?;
                        Ok(op.semigroup(*t)?.apply(&fv)[x.0])
                    };
                    (e, if *oracle { Some(exact()?) } else { None })
                }
                FkiMode::Dirichlet => {
                    let x = vertex(g, *x)?;
                    let fv = f.resolve(g, v, theta, &u)?;
                    let e = fki_dirichlet(g, v, theta, &fv, x, *t, &u, &cfg)?;
                    let exact = || -> Result<C64> {
                        let op = assemble_finite(g, v, theta, &u)?;
                        Ok(op.semigroup(*t)?.apply(&fv)[x.0])
                    };
                    (e, if *oracle { Some(exact()?) } else { None })
                }
                FkiMode::Kernel => {
                    let (x, y) = (vertex(g, *x)?, vertex(g, *y)?);
                    let e = fki_kernel(g, v, theta, x, y, *t, &cfg)?;
                    let exact = || -> Result<C64> {
                        let op = assemble_finite(g, v, theta, &g.all_vertices())?;
                        Ok(op.semigroup(*t)?.kernel(x, y))
                    };
                    (e, if *oracle { Some(exact()?) } else { None })
                }
                FkiMode::Trace => {
                    let e = fki_trace(g, v, theta, &u, *t, &cfg)?;
                    let exact = || -> Result<C64> {
                        let k = assemble_finite(g, v, theta, &g.all_vertices())?.semigroup(*t)?;
                        Ok(u.members()
                            .iter()
                            .map(|&x| k.kernel(VertexId(x), VertexId(x)) * g.m(x))
                            .sum())
                    };
                    (e, if *oracle { Some(exact()?) } else { None })
                }
            };
            let record = EstimateRecord::new(&estimate, exact);
            let mut p = Payload::json(serde_json::to_value(record).map_err(IoError::from)?);
            p.tolerances.insert("agreement_stderr_multiple".into(), 4.0);
            p.csv = Some(io::estimate_csv(&[record])?);
            Ok(p)
        }
        Task::Verify { check, params } => {
            let reports = run_check(*check, params, g, theta, v, seed, config.workers)?;
            let passed = reports.iter().all(|r| r.passed);
            let tolerances = reports
                .iter()
                .map(|r| (r.name.clone(), r.tolerance))
                .collect();
            Ok(Payload {
                result: json!({ "checks": reports }),
                tolerances,
                passed: Some(passed),
                csv: None,
            })
        }
        Task::Metric => {
            let d = default_intrinsic_metric(g);
            let slack = verify_intrinsic(g, &d);
            let mut p = Payload::json(json!({
                "edge_lengths": d.edge_lengths(),
                "slack": slack,
                "intrinsic": slack.iter().all(|&s| s >= 0.0),
            }));
            p.csv = Some(io::metric_csv(&d)?);
            Ok(p)
        }
        Task::EssSaPathSum {
            alpha,
            path,
            n_terms,
        } => {
            let path: Vec<VertexId> = path.iter().map(|&x| VertexId(x)).collect();
            let sums = ess_sa_path_sum(g, v, *alpha, &path, *n_terms)?;
            let mut p = Payload::json(json!({ "alpha": alpha, "partial_sums": sums }));
            p.csv = Some(io::path_sum_csv(&sums)?);
            Ok(p)
        }
    }
}

fn run_check(
    kind: VerifyKind,
    p: &VerifyParams,
    g: &WeightedGraph,
    theta: &MagneticPotential,
    v: &Potential,
    seed: RngSeed,
    workers: Option<usize>,
) -> Result<Vec<CheckReport>> {
    let mc = McConfig {
        n_samples: p.n_samples,
        seed,
        max_jumps: p.max_jumps,
        workers,
    };
    let u = p.subset.resolve(g)?;
    let v2 = match &p.v2 {
        Some(values) => Potential::new(g, values.clone())?,
        None => v.clone(),
    };
    let x = vertex(g, p.x)?;
    Ok(match kind {
        VerifyKind::Kato => {
            let f = p.f.resolve(g, v, theta, &u)?;
            vec![
                check_kato(g, v, &v2, theta, &u, &p.times, &p.shifts)?,
                check_sample_kato(g, v, &v2, theta, &f, x, p.t, &mc)?,
            ]
        }
        VerifyKind::Gt => vec![check_golden_thompson(g, v, &v2, theta, &u, &p.times)?],
        VerifyKind::Exhaustion => {
            if p.radii.is_empty() {
                return Err(invalid("exhaustion needs radii"));
            }
            let exh = make_exhaustion(g, x, &p.radii, p.ball_metric)?;
            let f = p.f.resolve(g, v, theta, exh.first())?;
            vec![check_exhaustion(
                g,
                v,
                theta,
                &f,
                x,
                p.t,
                &exh,
                None,
                ExhaustionTolerances::default(),
            )?]
        }
        VerifyKind::Generator => {
            let f = p.f.resolve(g, v, theta, &u)?;
            vec![
                check_generator(g, v, theta, &u, &f, x, &p.generator_times)?,
                check_jump_tail(g, x, &p.tail_times, &mc)?,
            ]
        }
        VerifyKind::Groundstate => {
            vec![check_ground_state(g, v, theta, &u, p.eigenpair, p.trials, seed)?]
        }
        VerifyKind::Formsum => {
            let f = p.f.resolve(g, v, theta, &g.all_vertices())?;
            vec![check_form_sum(g, v, theta, &f, x, p.t, &p.cutoffs)?]
        }
        VerifyKind::Intrinsic => vec![check_intrinsic(g, &default_intrinsic_metric(g))],
        VerifyKind::Identities => check_identities(g, v, theta, seed)?,
    })
}
