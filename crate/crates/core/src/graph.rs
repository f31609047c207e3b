//! Weighted graphs `(X, b, m)`, magnetic and scalar potentials, vertex sets,
//! exhaustions, path metrics and the built-in fixture generators.
//!
//! Graphs are immutable after construction. Vertices are dense indices and
//! every neighbor list is sorted by vertex id, so every iteration order in the
//! crate is fixed.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("graph has no vertices")]
    Empty,
    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(usize, usize),
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("edge {{{0}, {1}}} has non-positive or non-finite weight {2}")]
    NonPositiveWeight(usize, usize, f64),
    #[error("vertex {0} has non-positive or non-finite measure {1}")]
    NonPositiveMeasure(usize, f64),
    #[error("graph is disconnected: vertex {0} is unreachable from vertex 0")]
    Disconnected(usize),
    #[error("phase {2} on edge ({0}, {1}) is outside [-pi, pi]")]
    ThetaOutOfRange(usize, usize, f64),
    #[error("unknown vertex {0}")]
    UnknownVertex(usize),
    #[error("vertex function has length {got}, graph has {expected} vertices")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite potential value {1} at vertex {0}")]
    NonFinitePotential(usize, f64),
    #[error("exhaustion needs at least one radius")]
    EmptyRadii,
    #[error("radii must be strictly increasing")]
    NonIncreasingRadii,
    #[error("exhaustion sets must be nonempty and nested (set {0} is not contained in set {1})")]
    NotNested(usize, usize),
    #[error("bad generator parameters: {0}")]
    BadParams(String),
}

pub type Result<T> = std::result::Result<T, GraphError>;

/// Dense index of a vertex in its graph.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct VertexId(pub usize);

impl VertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for VertexId {
    fn from(i: usize) -> Self {
        VertexId(i)
    }
}

/// One entry of a sorted neighbor list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub vertex: usize,
    pub weight: f64,
    /// Index into [`WeightedGraph::edges`].
    pub edge: usize,
}

/// Undirected edge stored once in canonical orientation `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub lo: usize,
    pub hi: usize,
    pub weight: f64,
}

/// Input record for [`build_graph`]: `theta` is the phase of the directed edge `u -> v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub u: usize,
    pub v: usize,
    pub b: f64,
    pub theta: f64,
}

impl EdgeSpec {
    pub fn new(u: usize, v: usize, b: f64, theta: f64) -> Self {
        EdgeSpec { u, v, b, theta }
    }
}

/// A connected weighted graph `(X, b, m)` on the vertex set `{0, .., n-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    measure: Vec<f64>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<Neighbor>>,
    deg_1: Vec<f64>,
    deg_m: Vec<f64>,
}

impl WeightedGraph {
    pub fn num_vertices(&self) -> usize {
        self.measure.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.num_vertices()).map(VertexId)
    }

    pub fn contains(&self, x: VertexId) -> bool {
        x.0 < self.num_vertices()
    }

    pub fn check_vertex(&self, x: VertexId) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(GraphError::UnknownVertex(x.0))
        }
    }

    pub fn measure(&self) -> &[f64] {
        &self.measure
    }

    #[inline]
    pub fn m(&self, x: usize) -> f64 {
        self.measure[x]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Neighbors of `x`, sorted by vertex id.
    #[inline]
    pub fn neighbors(&self, x: usize) -> &[Neighbor] {
        &self.adjacency[x]
    }

    /// `b(x, y)`, zero when `x` and `y` are not adjacent.
    pub fn weight(&self, x: usize, y: usize) -> f64 {
        self.find_neighbor(x, y).map_or(0.0, |n| n.weight)
    }

    pub fn find_neighbor(&self, x: usize, y: usize) -> Option<&Neighbor> {
        let list = self.adjacency.get(x)?;
        list.binary_search_by(|n| n.vertex.cmp(&y))
            .ok()
            .map(|i| &list[i])
    }

    pub fn adjacent(&self, x: usize, y: usize) -> bool {
        self.find_neighbor(x, y).is_some()
    }

    /// `deg_1(x) = sum_y b(x, y)`.
    #[inline]
    pub fn deg_1(&self, x: usize) -> f64 {
        self.deg_1[x]
    }

    /// `deg_m(x) = deg_1(x) / m(x)`.
    #[inline]
    pub fn deg_m(&self, x: usize) -> f64 {
        self.deg_m[x]
    }

    /// Returns `(deg_m(x), deg_1(x))`.
    pub fn weighted_degree(&self, x: VertexId) -> Result<(f64, f64)> {
        self.check_vertex(x)?;
        Ok((self.deg_m[x.0], self.deg_1[x.0]))
    }

    pub fn total_measure(&self) -> f64 {
        self.measure.iter().sum()
    }

    pub fn max_deg_m(&self) -> f64 {
        self.deg_m.iter().copied().fold(0.0, f64::max)
    }

    /// Hop distances from `x0` (breadth-first search).
    pub fn hop_distances(&self, x0: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.num_vertices()];
        let mut queue = VecDeque::new();
        dist[x0] = Some(0);
        queue.push_back(x0);
        while let Some(x) = queue.pop_front() {
            let d = dist[x].unwrap_or(0);
            for n in &self.adjacency[x] {
                if dist[n.vertex].is_none() {
                    dist[n.vertex] = Some(d + 1);
                    queue.push_back(n.vertex);
                }
            }
        }
        dist
    }

    /// Every vertex as a [`VertexSet`].
    pub fn all_vertices(&self) -> VertexSet {
        VertexSet::full(self.num_vertices())
    }
}

/// Builds a weighted graph and its magnetic potential from an edge list and a
/// measure (`measure[x] = m(x)`; its length fixes the vertex count).
pub fn build_graph(
    edge_list: &[EdgeSpec],
    measure: &[f64],
) -> Result<(WeightedGraph, MagneticPotential)> {
    let n = measure.len();
    if n == 0 {
        return Err(GraphError::Empty);
    }
    for (x, &mx) in measure.iter().enumerate() {
        if !(mx.is_finite() && mx > 0.0) {
            return Err(GraphError::NonPositiveMeasure(x, mx));
        }
    }

    let mut canonical: Vec<(usize, usize, f64, f64)> = Vec::with_capacity(edge_list.len());
    for e in edge_list {
        if e.u >= n {
            return Err(GraphError::UnknownVertex(e.u));
        }
        if e.v >= n {
            return Err(GraphError::UnknownVertex(e.v));
        }
        if e.u == e.v {
            return Err(GraphError::SelfLoop(e.u));
        }
        if !(e.b.is_finite() && e.b > 0.0) {
            return Err(GraphError::NonPositiveWeight(e.u, e.v, e.b));
        }
        if !(e.theta.is_finite() && e.theta.abs() <= PI) {
            return Err(GraphError::ThetaOutOfRange(e.u, e.v, e.theta));
        }
        let (lo, hi, theta) = if e.u < e.v {
            (e.u, e.v, e.theta)
        } else {
            (e.v, e.u, -e.theta)
        };
        canonical.push((lo, hi, e.b, theta));
    }
    canonical.sort_by_key(|e| (e.0, e.1));
    for w in canonical.windows(2) {
        if (w[0].0, w[0].1) == (w[1].0, w[1].1) {
            return Err(GraphError::DuplicateEdge(w[0].0, w[0].1));
        }
    }

    let mut edges = Vec::with_capacity(canonical.len());
    let mut phases = Vec::with_capacity(canonical.len());
    let mut adjacency: Vec<Vec<Neighbor>> = vec![Vec::new(); n];
    for (idx, &(lo, hi, b, theta)) in canonical.iter().enumerate() {
        edges.push(Edge { lo, hi, weight: b });
        phases.push(theta);
        adjacency[lo].push(Neighbor {
            vertex: hi,
            weight: b,
            edge: idx,
        });
        adjacency[hi].push(Neighbor {
            vertex: lo,
            weight: b,
            edge: idx,
        });
    }
    for list in &mut adjacency {
        list.sort_by_key(|nb| nb.vertex);
    }
    let deg_1: Vec<f64> = adjacency
        .iter()
        .map(|list| list.iter().map(|nb| nb.weight).sum())
        .collect();
    let deg_m = deg_1.iter().zip(measure).map(|(d, m)| d / m).collect();

    let graph = WeightedGraph {
        measure: measure.to_vec(),
        edges,
        adjacency,
        deg_1,
        deg_m,
    };
    if let Some(unreached) = graph.hop_distances(0).iter().position(Option::is_none) {
        return Err(GraphError::Disconnected(unreached));
    }
    Ok((graph, MagneticPotential { phases }))
}

/// Reduces a phase to `(-pi, pi]`.
pub fn wrap_phase(theta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut r = theta.rem_euclid(two_pi);
    if r > PI {
        r -= two_pi;
    }
    r
}

/// Antisymmetric edge phase `theta(x, y) = -theta(y, x)`, stored once per
/// undirected edge in the `lo -> hi` orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct MagneticPotential {
    phases: Vec<f64>,
}

impl MagneticPotential {
    pub fn zero(g: &WeightedGraph) -> Self {
        MagneticPotential {
            phases: vec![0.0; g.num_edges()],
        }
    }

    /// The same phase `theta` on every edge in the `lo -> hi` orientation.
    pub fn uniform(g: &WeightedGraph, theta: f64) -> Result<Self> {
        if !(theta.is_finite() && theta.abs() <= PI) {
            return Err(GraphError::ThetaOutOfRange(0, 0, theta));
        }
        Ok(MagneticPotential {
            phases: vec![theta; g.num_edges()],
        })
    }

    /// Phases given per edge index in canonical orientation.
    pub fn from_edge_phases(g: &WeightedGraph, phases: Vec<f64>) -> Result<Self> {
        if phases.len() != g.num_edges() {
            return Err(GraphError::LengthMismatch {
                expected: g.num_edges(),
                got: phases.len(),
            });
        }
        for (e, &p) in g.edges().iter().zip(&phases) {
            if !(p.is_finite() && p.abs() <= PI) {
                return Err(GraphError::ThetaOutOfRange(e.lo, e.hi, p));
            }
        }
        Ok(MagneticPotential { phases })
    }

    /// Gauge transform `theta'(x, y) = theta(x, y) + phi(x) - phi(y)`, wrapped to `(-pi, pi]`.
    pub fn gauge_transform(&self, g: &WeightedGraph, phi: &[f64]) -> Result<Self> {
        if phi.len() != g.num_vertices() {
            return Err(GraphError::LengthMismatch {
                expected: g.num_vertices(),
                got: phi.len(),
            });
        }
        let phases = g
            .edges()
            .iter()
            .zip(&self.phases)
            .map(|(e, &p)| wrap_phase(p + phi[e.lo] - phi[e.hi]))
            .collect();
        Ok(MagneticPotential { phases })
    }

    pub fn edge_phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn is_zero(&self) -> bool {
        self.phases.iter().all(|&p| p == 0.0)
    }

    /// `theta(from, to)` for the edge behind a neighbor entry of `from`.
    #[inline]
    pub fn along(&self, from: usize, nb: &Neighbor) -> f64 {
        let p = self.phases[nb.edge];
        if from < nb.vertex {
            p
        } else {
            -p
        }
    }

    /// `theta(x, y)`; zero when `x` and `y` are not adjacent.
    pub fn get(&self, g: &WeightedGraph, x: usize, y: usize) -> f64 {
        g.find_neighbor(x, y).map_or(0.0, |nb| self.along(x, nb))
    }
}

/// Real vertex function `v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Potential(Vec<f64>);

impl Potential {
    pub fn new(g: &WeightedGraph, values: Vec<f64>) -> Result<Self> {
        if values.len() != g.num_vertices() {
            return Err(GraphError::LengthMismatch {
                expected: g.num_vertices(),
                got: values.len(),
            });
        }
        if let Some((x, &val)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(GraphError::NonFinitePotential(x, val));
        }
        Ok(Potential(values))
    }

    pub fn zero(g: &WeightedGraph) -> Self {
        Potential(vec![0.0; g.num_vertices()])
    }

    pub fn constant(g: &WeightedGraph, c: f64) -> Self {
        Potential(vec![c; g.num_vertices()])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    #[inline]
    pub fn at(&self, x: usize) -> f64 {
        self.0[x]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `v_+ = v ∨ 0`.
    pub fn positive_part(&self) -> Potential {
        Potential(self.0.iter().map(|&v| v.max(0.0)).collect())
    }

    /// `v_- = (-v) ∨ 0`.
    pub fn negative_part(&self) -> Potential {
        Potential(self.0.iter().map(|&v| (-v).max(0.0)).collect())
    }

    /// `v ∧ n`.
    pub fn truncated_above(&self, cutoff: f64) -> Potential {
        Potential(self.0.iter().map(|&v| v.min(cutoff)).collect())
    }

    pub fn shifted(&self, c: f64) -> Potential {
        Potential(self.0.iter().map(|&v| v + c).collect())
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// First vertex where `self < other`, if any.
    pub fn first_below(&self, other: &Potential) -> Option<usize> {
        self.0.iter().zip(&other.0).position(|(a, b)| a < b)
    }
}

/// A finite vertex set, kept sorted, with a membership mask over the host.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexSet {
    members: Vec<usize>,
    mask: Vec<bool>,
}

impl VertexSet {
    pub fn new(g: &WeightedGraph, vertices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let n = g.num_vertices();
        let mut mask = vec![false; n];
        for x in vertices {
            if x >= n {
                return Err(GraphError::UnknownVertex(x));
            }
            mask[x] = true;
        }
        let members = (0..n).filter(|&x| mask[x]).collect();
        Ok(VertexSet { members, mask })
    }

    pub fn full(n: usize) -> Self {
        VertexSet {
            members: (0..n).collect(),
            mask: vec![true; n],
        }
    }

    #[inline]
    pub fn contains(&self, x: usize) -> bool {
        self.mask.get(x).copied().unwrap_or(false)
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn host_size(&self) -> usize {
        self.mask.len()
    }

    pub fn is_subset(&self, other: &VertexSet) -> bool {
        self.members.iter().all(|&x| other.contains(x))
    }

    /// Position of `x` inside the sorted member list.
    pub fn position(&self, x: usize) -> Option<usize> {
        self.members.binary_search(&x).ok()
    }
}

/// Nested finite vertex sets `X_1 ⊆ X_2 ⊆ ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct Exhaustion {
    sets: Vec<VertexSet>,
}

impl Exhaustion {
    pub fn new(sets: Vec<VertexSet>) -> Result<Self> {
        if sets.is_empty() {
            return Err(GraphError::EmptyRadii);
        }
        if sets[0].is_empty() {
            return Err(GraphError::NotNested(0, 0));
        }
        for (i, w) in sets.windows(2).enumerate() {
            if !w[0].is_subset(&w[1]) {
                return Err(GraphError::NotNested(i, i + 1));
            }
        }
        Ok(Exhaustion { sets })
    }

    pub fn sets(&self) -> &[VertexSet] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn first(&self) -> &VertexSet {
        &self.sets[0]
    }

    pub fn last(&self) -> &VertexSet {
        &self.sets[self.sets.len() - 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BallMetric {
    /// Hop count.
    Combinatorial,
    /// The default intrinsic path metric.
    Intrinsic,
}

/// Balls `{x : d(x0, x) <= r}` for each radius.
pub fn make_exhaustion(
    g: &WeightedGraph,
    x0: VertexId,
    radii: &[f64],
    metric: BallMetric,
) -> Result<Exhaustion> {
    g.check_vertex(x0)?;
    if radii.is_empty() {
        return Err(GraphError::EmptyRadii);
    }
    if radii.windows(2).any(|w| w[0] >= w[1]) || radii.iter().any(|r| !(*r >= 0.0)) {
        return Err(GraphError::NonIncreasingRadii);
    }
    let dist: Vec<f64> = match metric {
        BallMetric::Combinatorial => g
            .hop_distances(x0.0)
            .into_iter()
            .map(|d| d.map_or(f64::INFINITY, |d| d as f64))
            .collect(),
        BallMetric::Intrinsic => default_intrinsic_metric(g).distances_from(x0.0).to_vec(),
    };
    let sets = radii
        .iter()
        .map(|&r| VertexSet::new(g, (0..g.num_vertices()).filter(|&x| dist[x] <= r)))
        .collect::<Result<Vec<_>>>()?;
    Exhaustion::new(sets)
}

/// Path metric `d(x, y) = inf sum sigma(x_{j-1}, x_j)` over graph paths.
#[derive(Debug, Clone, PartialEq)]
pub struct PathMetric {
    sigma: Vec<f64>,
    n: usize,
    dist: Vec<f64>,
}

impl PathMetric {
    /// Edge lengths indexed like [`WeightedGraph::edges`].
    pub fn from_edge_lengths(g: &WeightedGraph, sigma: Vec<f64>) -> Result<Self> {
        if sigma.len() != g.num_edges() {
            return Err(GraphError::LengthMismatch {
                expected: g.num_edges(),
                got: sigma.len(),
            });
        }
        let n = g.num_vertices();
        let mut dist = Vec::with_capacity(n * n);
        for x in 0..n {
            dist.extend(dijkstra(g, &sigma, x));
        }
        Ok(PathMetric { sigma, n, dist })
    }

    /// The zero pseudo-metric.
    pub fn zero(g: &WeightedGraph) -> Self {
        let n = g.num_vertices();
        PathMetric {
            sigma: vec![0.0; g.num_edges()],
            n,
            dist: vec![0.0; n * n],
        }
    }

    pub fn edge_length(&self, edge: usize) -> f64 {
        self.sigma[edge]
    }

    pub fn edge_lengths(&self) -> &[f64] {
        &self.sigma
    }

    #[inline]
    pub fn distance(&self, x: usize, y: usize) -> f64 {
        self.dist[x * self.n + y]
    }

    pub fn distances_from(&self, x: usize) -> &[f64] {
        &self.dist[x * self.n..(x + 1) * self.n]
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }
}

#[derive(PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(g: &WeightedGraph, sigma: &[f64], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; g.num_vertices()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapItem(0.0, source));
    while let Some(HeapItem(d, x)) = heap.pop() {
        if d > dist[x] {
            continue;
        }
        for nb in g.neighbors(x) {
            let cand = d + sigma[nb.edge];
            if cand < dist[nb.vertex] {
                dist[nb.vertex] = cand;
                heap.push(HeapItem(cand, nb.vertex));
            }
        }
    }
    dist
}

/// The path metric with `sigma(x, y) = max(deg_m(x), deg_m(y))^{-1/2}`.
pub fn default_intrinsic_metric(g: &WeightedGraph) -> PathMetric {
    let sigma = g
        .edges()
        .iter()
        .map(|e| g.deg_m(e.lo).max(g.deg_m(e.hi)).powf(-0.5))
        .collect();
    PathMetric::from_edge_lengths(g, sigma).expect("one length per edge")
}

/// `slack(x) = m(x) - sum_y b(x, y) d(x, y)^2`; the metric is intrinsic iff
/// every slack is nonnegative.
pub fn verify_intrinsic(g: &WeightedGraph, d: &PathMetric) -> Vec<f64> {
    (0..g.num_vertices())
        .map(|x| {
            let load: f64 = g
                .neighbors(x)
                .iter()
                .map(|nb| nb.weight * d.distance(x, nb.vertex).powi(2))
                .sum();
            g.m(x) - load
        })
        .collect()
}

/// Fixture families. Every family takes an optional uniform edge phase
/// `theta` (applied in the `lo -> hi` orientation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GeneratorSpec {
    Path {
        n: usize,
        #[serde(default = "one")]
        b: f64,
        #[serde(default = "one")]
        m: f64,
        #[serde(default)]
        theta: f64,
    },
    Cycle {
        n: usize,
        #[serde(default = "one")]
        b: f64,
        #[serde(default = "one")]
        m: f64,
        #[serde(default)]
        theta: f64,
    },
    /// Vertex 0 is the center; leaf `i + 1` is joined with weight `weights[i]`.
    Star {
        weights: Vec<f64>,
        #[serde(default = "one")]
        m_center: f64,
        #[serde(default = "one")]
        m_leaf: f64,
        #[serde(default)]
        theta: f64,
    },
    /// Row-major `rows x cols` lattice.
    Grid {
        rows: usize,
        cols: usize,
        #[serde(default = "one")]
        b: f64,
        #[serde(default = "one")]
        m: f64,
        #[serde(default)]
        theta: f64,
    },
    /// Chain `0 - 1 - ... - (n-1)` with `b(k, k+1) = scale * growth^k`.
    BirthDeath {
        n: usize,
        growth: f64,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default = "one")]
        m: f64,
        #[serde(default)]
        theta: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl GeneratorSpec {
    pub fn path(n: usize) -> Self {
        GeneratorSpec::Path {
            n,
            b: 1.0,
            m: 1.0,
            theta: 0.0,
        }
    }

    pub fn cycle(n: usize) -> Self {
        GeneratorSpec::Cycle {
            n,
            b: 1.0,
            m: 1.0,
            theta: 0.0,
        }
    }

    pub fn star(weights: Vec<f64>) -> Self {
        GeneratorSpec::Star {
            weights,
            m_center: 1.0,
            m_leaf: 1.0,
            theta: 0.0,
        }
    }

    pub fn grid(rows: usize, cols: usize) -> Self {
        GeneratorSpec::Grid {
            rows,
            cols,
            b: 1.0,
            m: 1.0,
            theta: 0.0,
        }
    }

    pub fn birth_death(n: usize, growth: f64) -> Self {
        GeneratorSpec::BirthDeath {
            n,
            growth,
            scale: 1.0,
            m: 1.0,
            theta: 0.0,
        }
    }

    /// Replaces the uniform edge phase.
    pub fn with_theta(mut self, phase: f64) -> Self {
        match &mut self {
            GeneratorSpec::Path { theta, .. }
            | GeneratorSpec::Cycle { theta, .. }
            | GeneratorSpec::Star { theta, .. }
            | GeneratorSpec::Grid { theta, .. }
            | GeneratorSpec::BirthDeath { theta, .. } => *theta = phase,
        }
        self
    }
}

fn bad(msg: impl Into<String>) -> GraphError {
    GraphError::BadParams(msg.into())
}

/// Builds a fixture graph; the potential is identically zero.
pub fn generate(spec: &GeneratorSpec) -> Result<(WeightedGraph, MagneticPotential, Potential)> {
    let (edges, measure): (Vec<EdgeSpec>, Vec<f64>) = match *spec {
        GeneratorSpec::Path { n, b, m, theta } => {
            if n == 0 {
                return Err(bad("path needs n >= 1"));
            }
            (
                (0..n - 1).map(|k| EdgeSpec::new(k, k + 1, b, theta)).collect(),
                vec![m; n],
            )
        }
        GeneratorSpec::Cycle { n, b, m, theta } => {
            if n < 3 {
                return Err(bad("cycle needs n >= 3"));
            }
            let mut edges: Vec<EdgeSpec> =
                (0..n - 1).map(|k| EdgeSpec::new(k, k + 1, b, theta)).collect();
            // closing edge in lo -> hi orientation, like every other edge
            edges.push(EdgeSpec::new(0, n - 1, b, theta));
            (edges, vec![m; n])
        }
        GeneratorSpec::Star {
            ref weights,
            m_center,
            m_leaf,
            theta,
        } => {
            if weights.is_empty() {
                return Err(bad("star needs at least one leaf"));
            }
            let edges = weights
                .iter()
                .enumerate()
                .map(|(i, &w)| EdgeSpec::new(0, i + 1, w, theta))
                .collect();
            let mut measure = vec![m_leaf; weights.len() + 1];
            measure[0] = m_center;
            (edges, measure)
        }
        GeneratorSpec::Grid {
            rows,
            cols,
            b,
            m,
            theta,
        } => {
            if rows == 0 || cols == 0 {
                return Err(bad("grid needs rows, cols >= 1"));
            }
            let mut edges = Vec::new();
            for r in 0..rows {
                for c in 0..cols {
                    let x = r * cols + c;
                    if c + 1 < cols {
                        edges.push(EdgeSpec::new(x, x + 1, b, theta));
                    }
                    if r + 1 < rows {
                        edges.push(EdgeSpec::new(x, x + cols, b, theta));
                    }
                }
            }
            (edges, vec![m; rows * cols])
        }
        GeneratorSpec::BirthDeath {
            n,
            growth,
            scale,
            m,
            theta,
        } => {
            if n == 0 {
                return Err(bad("birth_death needs n >= 1"));
            }
            if !(growth.is_finite() && growth > 0.0 && scale.is_finite() && scale > 0.0) {
                return Err(bad("birth_death needs positive finite growth and scale"));
            }
            (
                (0..n - 1)
                    .map(|k| EdgeSpec::new(k, k + 1, scale * growth.powi(k as i32), theta))
                    .collect(),
                vec![m; n],
            )
        }
    };
    let (g, theta) = build_graph(&edges, &measure)?;
    let v = Potential::zero(&g);
    Ok((g, theta, v))
}
