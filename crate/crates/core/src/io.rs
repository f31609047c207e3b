//! Graph files, CSV dumps and atomic file output.
//!
//! Graph JSON:
//!
//! ```json
//! {"vertices": [{"id": 0, "m": 1.0, "v": 0.0}, ...],
//!  "edges": [{"u": 0, "v": 1, "b": 1.0, "theta": 0.5}, ...]}
//! ```
//!
//! Ids must be `0..n` (any order); `v` and `theta` default to zero, `theta`
//! must lie in `[-π, π]` and is read in the `u -> v` orientation. A file may
//! instead name a fixture: `{"generator": {"family": "path", "n": 5}, "v": [...]}`.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use crate::estimator::McEstimate;
use crate::graph::{
    build_graph, generate, EdgeSpec, GeneratorSpec, GraphError, MagneticPotential, PathMetric,
    Potential, WeightedGraph,
};
use crate::operator::{KernelMatrix, SpectralData};
use crate::process::Trajectory;
use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    Syntax(String),
    MissingMeasure,
    ThetaOutOfRange(f64),
    DuplicateVertex(usize),
    /// Ids must be exactly `0..n`.
    SparseIds { missing: usize },
    Graph(GraphError),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Syntax(msg) => write!(f, "{msg}"),
            ParseErrorKind::MissingMeasure => write!(f, "missing measure `m`"),
            ParseErrorKind::ThetaOutOfRange(t) => write!(f, "theta {t} outside [-pi, pi]"),
            ParseErrorKind::DuplicateVertex(id) => write!(f, "vertex id {id} appears twice"),
            ParseErrorKind::SparseIds { missing } => {
                write!(f, "vertex ids must be 0..n; id {missing} is missing")
            }
            ParseErrorKind::Graph(e) => write!(f, "{e}"),
        }
    }
}

/// A graph-file error with its position when known.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ParseError {
    pub line: Option<usize>,
    pub column: Option<usize>,
    /// Path of the offending field, e.g. `edges[2].theta`.
    pub field: Option<String>,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let (Some(line), Some(col)) = (self.line, self.column) {
            write!(f, "line {line}, column {col}: ")?;
        }
        if let Some(field) = &self.field {
            write!(f, "field `{field}`: ")?;
        }
        write!(f, "{}", self.kind)
    }
}

impl ParseError {
    fn at_field(field: impl Into<String>, kind: ParseErrorKind) -> Self {
        ParseError {
            line: None,
            column: None,
            field: Some(field.into()),
            kind,
        }
    }
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {error}", path.display())]
    Parse { path: PathBuf, error: ParseError },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, IoError>;

const THETA_MARKER: &str = "theta out of range: ";

fn theta_in_range<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    let t = f64::deserialize(d)?;
    if !(t.abs() <= PI) {
        return Err(serde::de::Error::custom(format!("{THETA_MARKER}{t}")));
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexRecord {
    pub id: usize,
    pub m: f64,
    #[serde(default)]
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub u: usize,
    pub v: usize,
    pub b: f64,
    #[serde(default, deserialize_with = "theta_in_range")]
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub vertices: Vec<VertexRecord>,
    pub edges: Vec<EdgeRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorFile {
    pub generator: GeneratorSpec,
    #[serde(default)]
    pub v: Option<Vec<f64>>,
}

pub type LoadedGraph = (WeightedGraph, MagneticPotential, Potential);

fn from_json<'a, T: Deserialize<'a>>(text: &'a str) -> std::result::Result<T, ParseError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|err| {
        let field = err.path().to_string();
        classify(err.into_inner(), field)
    })?;
    de.end().map_err(|e| classify(e, ".".into()))?;
    Ok(value)
}

fn classify(inner: serde_json::Error, mut field: String) -> ParseError {
    let msg = inner.to_string();
    let kind = if msg.starts_with("missing field `m`") {
        field = if field == "." { "m".into() } else { format!("{field}.m") };
        ParseErrorKind::MissingMeasure
    } else if let Some(rest) = msg.strip_prefix(THETA_MARKER) {
        let value = rest.split_whitespace().next().unwrap_or("");
        ParseErrorKind::ThetaOutOfRange(value.parse().unwrap_or(f64::NAN))
    } else {
        // drop the trailing " at line L column C"; the position is kept separately
        let bare = msg.rsplit_once(" at line ").map_or(msg.as_str(), |(head, _)| head);
        ParseErrorKind::Syntax(bare.to_string())
    };
    ParseError {
        line: Some(inner.line()),
        column: Some(inner.column()),
        field: (field != ".").then_some(field),
        kind,
    }
}

fn graph_error_field(e: &GraphError) -> Option<String> {
    match e {
        GraphError::NonPositiveMeasure(x, _) => Some(format!("vertices[id={x}].m")),
        GraphError::NonFinitePotential(x, _) => Some(format!("vertices[id={x}].v")),
        GraphError::NonPositiveWeight(u, v, _) => Some(format!("edges[{u}-{v}].b")),
        GraphError::SelfLoop(x) => Some(format!("edges[{x}-{x}]")),
        GraphError::DuplicateEdge(u, v) => Some(format!("edges[{u}-{v}]")),
        GraphError::UnknownVertex(x) => Some(format!("edges[..{x}..]")),
        _ => None,
    }
}

fn semantic(e: GraphError) -> ParseError {
    ParseError {
        line: None,
        column: None,
        field: graph_error_field(&e),
        kind: ParseErrorKind::Graph(e),
    }
}

/// Parses a graph document (explicit or generator form).
pub fn parse_graph(text: &str) -> std::result::Result<LoadedGraph, ParseError> {
    let probe: serde_json::Value = from_json(text)?;
    if probe.get("generator").is_some() {
        let file: GeneratorFile = from_json(text)?;
        let (g, theta, v0) = generate(&file.generator).map_err(semantic)?;
        let v = match file.v {
            Some(values) => Potential::new(&g, values).map_err(semantic)?,
            None => v0,
        };
        return Ok((g, theta, v));
    }
    let file: GraphFile = from_json(text)?;
    graph_from_file(&file)
}

pub fn graph_from_file(file: &GraphFile) -> std::result::Result<LoadedGraph, ParseError> {
    let n = file.vertices.len();
    let mut measure = vec![f64::NAN; n];
    let mut potential = vec![0.0; n];
    let mut seen = vec![false; n];
    for (k, rec) in file.vertices.iter().enumerate() {
        if rec.id >= n {
            let missing = seen.iter().position(|s| !s).unwrap_or(0);
            return Err(ParseError::at_field(
                format!("vertices[{k}].id"),
                ParseErrorKind::SparseIds { missing },
            ));
        }
        if std::mem::replace(&mut seen[rec.id], true) {
            return Err(ParseError::at_field(
                format!("vertices[{k}].id"),
                ParseErrorKind::DuplicateVertex(rec.id),
            ));
        }
        measure[rec.id] = rec.m;
        potential[rec.id] = rec.v;
    }
    let edges: Vec<EdgeSpec> = file
        .edges
        .iter()
        .map(|e| EdgeSpec::new(e.u, e.v, e.b, e.theta))
        .collect();
    let (g, theta) = build_graph(&edges, &measure).map_err(semantic)?;
    let v = Potential::new(&g, potential).map_err(semantic)?;
    Ok((g, theta, v))
}

/// Canonical file form: vertices by id, edges in `lo -> hi` orientation and
/// canonical order.
pub fn graph_to_file(g: &WeightedGraph, theta: &MagneticPotential, v: &Potential) -> GraphFile {
    GraphFile {
        vertices: (0..g.num_vertices())
            .map(|x| VertexRecord {
                id: x,
                m: g.m(x),
                v: v.at(x),
            })
            .collect(),
        edges: g
            .edges()
            .iter()
            .zip(theta.edge_phases())
            .map(|(e, &t)| EdgeRecord {
                u: e.lo,
                v: e.hi,
                b: e.weight,
                theta: t,
            })
            .collect(),
    }
}

/// Floats use the shortest representation that reads back to the same double.
pub fn graph_to_json(g: &WeightedGraph, theta: &MagneticPotential, v: &Potential) -> String {
    let mut s = serde_json::to_string_pretty(&graph_to_file(g, theta, v))
        .expect("graph file serializes");
    s.push('\n');
    s
}

pub fn load_graph(path: &Path) -> Result<LoadedGraph> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_graph(&text).map_err(|error| IoError::Parse {
        path: path.to_path_buf(),
        error,
    })
}

pub fn save_graph(
    path: &Path,
    g: &WeightedGraph,
    theta: &MagneticPotential,
    v: &Potential,
) -> Result<()> {
    write_atomic(path, graph_to_json(g, theta, v).as_bytes())
}

/// Writes through a temporary file in the target directory, then renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io_err = |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

fn csv_bytes<R: Serialize>(rows: impl IntoIterator<Item = R>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelRow {
    pub x: usize,
    pub y: usize,
    pub re: f64,
    pub im: f64,
}

/// All kernel values `K(x, y)` with `x, y ∈ U`.
pub fn kernel_rows(kernel: &KernelMatrix) -> Vec<KernelRow> {
    let members = kernel.subset().members();
    let mut rows = Vec::with_capacity(members.len() * members.len());
    for (i, &x) in members.iter().enumerate() {
        for (j, &y) in members.iter().enumerate() {
            let k = kernel.kernel_local(i, j);
            rows.push(KernelRow {
                x,
                y,
                re: k.re,
                im: k.im,
            });
        }
    }
    rows
}

pub fn kernel_csv(kernel: &KernelMatrix) -> Result<Vec<u8>> {
    csv_bytes(kernel_rows(kernel))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub index: usize,
    pub eigenvalue: f64,
}

pub fn spectrum_csv(spectral: &SpectralData) -> Result<Vec<u8>> {
    csv_bytes(
        spectral
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(index, &eigenvalue)| SpectrumRow { index, eigenvalue }),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub sample_index: u64,
    pub step: usize,
    pub vertex: usize,
    pub jump_time: f64,
    pub censored: bool,
}

/// One row per visited state; step 0 is the start at time 0.
pub fn trajectory_rows(samples: &[(u64, Trajectory)]) -> Vec<TrajectoryRow> {
    let mut rows = Vec::new();
    for (i, tr) in samples {
        for (step, &vertex) in tr.states.iter().enumerate() {
            rows.push(TrajectoryRow {
                sample_index: *i,
                step,
                vertex,
                jump_time: if step == 0 { 0.0 } else { tr.jump_times[step - 1] },
                censored: tr.censored,
            });
        }
    }
    rows
}

pub fn trajectory_csv(samples: &[(u64, Trajectory)]) -> Result<Vec<u8>> {
    csv_bytes(trajectory_rows(samples))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceRow {
    pub x: usize,
    pub y: usize,
    pub distance: f64,
}

pub fn metric_csv(d: &PathMetric) -> Result<Vec<u8>> {
    let n = d.num_vertices();
    csv_bytes((0..n).flat_map(|x| {
        (0..n).map(move |y| DistanceRow {
            x,
            y,
            distance: d.distance(x, y),
        })
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSumRow {
    pub n: usize,
    pub partial_sum: f64,
}

pub fn path_sum_csv(sums: &[f64]) -> Result<Vec<u8>> {
    csv_bytes(
        sums.iter()
            .enumerate()
            .map(|(k, &partial_sum)| PathSumRow { n: k + 1, partial_sum }),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for ComplexValue {
    fn from(z: C64) -> Self {
        ComplexValue { re: z.re, im: z.im }
    }
}

/// Serialized form of an [`McEstimate`], optionally with its exact value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub mean_re: f64,
    pub mean_im: f64,
    pub stderr: f64,
    pub n: u64,
    pub censored_fraction: f64,
    pub bias_bound: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hits: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub low_hit_count: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<ComplexValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_error: Option<f64>,
}

impl EstimateRecord {
    pub fn new(e: &McEstimate, oracle: Option<C64>) -> Self {
        EstimateRecord {
            mean_re: e.mean.re,
            mean_im: e.mean.im,
            stderr: e.stderr,
            n: e.n_samples,
            censored_fraction: e.censored_fraction,
            bias_bound: e.bias_bound,
            hits: e.hits,
            low_hit_count: e.hits.map(|_| e.low_hit_count()),
            oracle: oracle.map(ComplexValue::from),
            abs_error: oracle.map(|o| (e.mean - o).norm()),
        }
    }
}

pub fn estimate_csv(records: &[EstimateRecord]) -> Result<Vec<u8>> {
    #[derive(Serialize)]
    struct Row {
        mean_re: f64,
        mean_im: f64,
        stderr: f64,
        n: u64,
        censored_fraction: f64,
        bias_bound: f64,
        oracle_re: Option<f64>,
        oracle_im: Option<f64>,
        abs_error: Option<f64>,
    }
    csv_bytes(records.iter().map(|r| Row {
        mean_re: r.mean_re,
        mean_im: r.mean_im,
        stderr: r.stderr,
        n: r.n,
        censored_fraction: r.censored_fraction,
        bias_bound: r.bias_bound,
        oracle_re: r.oracle.map(|o| o.re),
        oracle_im: r.oracle.map(|o| o.im),
        abs_error: r.abs_error,
    }))
}
