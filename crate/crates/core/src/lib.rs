//! Exact and Monte Carlo evaluation of magnetic Schrödinger semigroups on
//! weighted graphs. The sampled side averages path weights of the jump process
//!
//! `e^{-tL_{v,θ}} f(x) = E_x[1_{t<τ} e^{S_t(v,θ|X)} f(X_t)]`,
//!
//! where `S_t = i ∫θ(dX) − ∫v(X_s) ds` is the Euclidean action along the path.
//!
//! Module map:
//!
//! - [`graph`]: weighted graphs `(X, b, m)`, potentials, exhaustions, metrics, fixtures
//! - [`operator`]: formal operator, forms, finite restrictions, exact semigroups and spectra
//! - [`process`]: jump-process sampling and path functionals
//! - [`estimator`]: Monte Carlo semigroup, kernel and trace estimators
//! - [`inequalities`]: numerical checks of Kato, Golden-Thompson and related statements
//! - [`io`] and [`experiment`]: file formats, reports and the command-line runner

// NaN must fail validation, so negated comparisons are deliberate
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod estimator;
pub mod experiment;
pub mod graph;
pub mod inequalities;
pub mod io;
pub mod operator;
pub mod process;

/// Complex scalar used throughout.
pub type C64 = nalgebra::Complex<f64>;

pub use graph::{
    build_graph, generate, BallMetric, EdgeSpec, Exhaustion, GeneratorSpec, MagneticPotential,
    Potential, VertexId, VertexSet, WeightedGraph,
};
pub use operator::{assemble_finite, FiniteOperator, KernelMatrix, SpectralData};
pub use process::{sample_trajectory, RngSeed, Trajectory};
pub use estimator::{McConfig, McEstimate};
