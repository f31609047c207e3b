//! Numerical checks of the semigroup inequalities and identities on finite
//! vertex sets, with exact matrix functions as ground truth and Monte Carlo
//! only where the statement is probabilistic.
//!
//! Every check produces a [`CheckReport`]. A report collects comparisons
//! `lhs ≤ rhs`; the violation of one comparison is `lhs − rhs`, and the
//! report passes iff the largest violation is at most its tolerance.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimator::{jump_count_tail, EstimatorError, McConfig};
use crate::graph::{
    verify_intrinsic, Exhaustion, GraphError, MagneticPotential, PathMetric, Potential, VertexId,
    VertexSet, WeightedGraph,
};
use crate::operator::{
    apply_formal, assemble_finite, green_identity_residual, ground_state_transform, norm_sq,
    quadratic_form, FiniteOperator, KernelMatrix, OperatorError,
};
use crate::process::{action, sample_trajectory, ProcessError, RngSeed};
use crate::C64;

/// At most this many witnesses (the largest violations) are kept per report.
pub const MAX_WITNESSES: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InequalityError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Process(#[from] ProcessError),
    #[error("v1 < v2 at vertex {vertex} ({v1} < {v2})")]
    PotentialOrderViolated { vertex: usize, v1: f64, v2: f64 },
    #[error("potential is negative at vertex {vertex} ({value})")]
    NegativePotential { vertex: usize, value: f64 },
    #[error("bad exhaustion: {0}")]
    BadExhaustion(String),
    #[error("bad time sequence: {0}")]
    BadTimeSequence(String),
    #[error("bad cutoffs: {0}")]
    BadCutoffs(String),
    #[error("shift {lambda} is not admissible: need λ > {bound}")]
    InadmissibleShift { lambda: f64, bound: f64 },
    #[error("f is nonzero at vertex {0}, outside the subset")]
    FunctionOutsideSubset(usize),
    #[error("vertex {0} is not in the subset")]
    VertexOutsideSubset(usize),
}

pub type Result<T> = std::result::Result<T, InequalityError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub location: String,
    pub lhs: f64,
    pub rhs: f64,
}

/// A named numeric quantity recorded during a check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub max_violation: f64,
    pub tolerance: f64,
    pub comparisons: u64,
    pub witnesses: Vec<Witness>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub observations: Vec<Observation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn observation(&self, label: &str) -> Option<f64> {
        self.observations
            .iter()
            .find(|o| o.label == label)
            .map(|o| o.value)
    }
}

/// Accumulates comparisons into a [`CheckReport`].
#[derive(Debug, Clone)]
pub struct Checker {
    name: String,
    tolerance: f64,
    max_violation: f64,
    comparisons: u64,
    witnesses: Vec<(f64, Witness)>,
    observations: Vec<Observation>,
    notes: Vec<String>,
}

impl Checker {
    pub fn new(name: impl Into<String>, tolerance: f64) -> Self {
        Checker {
            name: name.into(),
            tolerance,
            max_violation: 0.0,
            comparisons: 0,
            witnesses: Vec::new(),
            observations: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Records `lhs ≤ rhs`. `location` is only evaluated for violations.
    pub fn compare(&mut self, lhs: f64, rhs: f64, location: impl FnOnce() -> String) {
        self.comparisons += 1;
        let mut violation = lhs - rhs;
        if violation.is_nan() {
            violation = f64::INFINITY;
        }
        self.max_violation = self.max_violation.max(violation);
        if violation > self.tolerance {
            self.witnesses.push((
                violation,
                Witness {
                    location: location(),
                    lhs,
                    rhs,
                },
            ));
            if self.witnesses.len() > 4 * MAX_WITNESSES {
                self.prune();
            }
        }
    }

    pub fn observe(&mut self, label: impl Into<String>, value: f64) {
        self.observations.push(Observation {
            label: label.into(),
            value,
        });
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    fn prune(&mut self) {
        self.witnesses
            .sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
        self.witnesses.truncate(MAX_WITNESSES);
    }

    pub fn finish(mut self) -> CheckReport {
        self.prune();
        CheckReport {
            passed: self.max_violation <= self.tolerance,
            name: self.name,
            max_violation: self.max_violation,
            tolerance: self.tolerance,
            comparisons: self.comparisons,
            witnesses: self.witnesses.into_iter().map(|(_, w)| w).collect(),
            observations: self.observations,
            notes: self.notes,
        }
    }
}

/// Entrywise `|lhs(x, y)| ≤ Re rhs(x, y)` over kernel values on the local
/// coordinates of `members`; witnesses read `"{label} K(x, y)"`.
pub fn compare_kernels(
    checker: &mut Checker,
    label: &str,
    lhs: &DMatrix<C64>,
    rhs: &DMatrix<C64>,
    members: &[usize],
) {
    for i in 0..lhs.nrows() {
        for j in 0..lhs.ncols() {
            checker.compare(lhs[(i, j)].norm(), rhs[(i, j)].re, || {
                format!("{label} K({}, {})", members[i], members[j])
            });
        }
    }
}

fn check_order(v1: &Potential, v2: &Potential) -> Result<()> {
    if v1.len() != v2.len() {
        return Err(GraphError::LengthMismatch {
            expected: v1.len(),
            got: v2.len(),
        }
        .into());
    }
    match v1.first_below(v2) {
        Some(vertex) => Err(InequalityError::PotentialOrderViolated {
            vertex,
            v1: v1.at(vertex),
            v2: v2.at(vertex),
        }),
        None => Ok(()),
    }
}

fn unit_scale(ops: &[&FiniteOperator]) -> f64 {
    ops.iter().map(|op| op.scale()).fold(1.0, f64::max)
}

/// Kato's inequality on `U` for `v1 ≥ v2`: kernel domination
/// `|e^{-tL_{v1,θ}}(x,y)| ≤ e^{-tL_{v2,0}}(x,y)`, trace and bottom-of-spectrum
/// ordering, and resolvent domination for real admissible shifts.
/// Tolerance `1e-10 · scale`.
#[allow(clippy::too_many_arguments)]
pub fn check_kato(
    g: &WeightedGraph,
    v1: &Potential,
    v2: &Potential,
    theta: &MagneticPotential,
    subset: &VertexSet,
    times: &[f64],
    shifts: &[f64],
) -> Result<CheckReport> {
    check_order(v1, v2)?;
    let op1 = assemble_finite(g, v1, theta, subset)?;
    let op2 = assemble_finite(g, v2, &MagneticPotential::zero(g), subset)?;
    let spec1 = op1.spectrum()?;
    let spec2 = op2.spectrum()?;
    let scale = unit_scale(&[&op1, &op2]);
    let mut ck = Checker::new("kato", 1e-10 * scale);
    let members = subset.members();

    for &t in times {
        let k1 = op1.semigroup_with(&spec1, t)?;
        let k2 = op2.semigroup_with(&spec2, t)?;
        compare_kernels(
            &mut ck,
            &format!("semigroup t={t}"),
            &k1.kernel_values(),
            &k2.kernel_values(),
            members,
        );
        let (tr1, tr2) = (k1.trace(), k2.trace());
        ck.observe(format!("trace_v1_theta t={t}"), tr1.re);
        ck.observe(format!("trace_v2 t={t}"), tr2.re);
        ck.compare(tr1.norm(), tr2.re, || format!("trace t={t}"));
    }

    let (min1, min2) = (spec1.min_eig(), spec2.min_eig());
    ck.observe("min_eig_v1_theta", min1);
    ck.observe("min_eig_v2", min2);
    ck.compare(min2, min1, || "min spectrum".to_string());

    for &lambda in shifts {
        if !(lambda > -min2) {
            return Err(InequalityError::InadmissibleShift {
                lambda,
                bound: -min2,
            });
        }
        let r1 = op1.resolvent_with(&spec1, C64::new(lambda, 0.0))?;
        let r2 = op2.resolvent_with(&spec2, C64::new(lambda, 0.0))?;
        compare_kernels(
            &mut ck,
            &format!("resolvent lambda={lambda}"),
            &r1.kernel_values(),
            &r2.kernel_values(),
            members,
        );
    }
    ck.note("form-domain domination and compactness of resolvents are infinite-dimensional statements; not checked");
    Ok(ck.finish())
}

/// The trace chain on `U` for `v1 ≥ v2`, per `t`:
///
/// `tr e^{-tL_{v1,θ}} ≤ tr e^{-t(A+B)} ≤ tr[e^{-tA/2} e^{-tB} e^{-tA/2}]
///  ≤ Σ_{x∈U} e^{-tL}(x,x) e^{-tv2(x)} m(x) ≤ C(t) Σ_{x∈U} e^{-tv2(x)}`
///
/// with `A = L^(U)_{0,0}`, `B = v2`, `L` the free operator on the whole host
/// and `C(t) = sup_x e^{-tL}(x,x) m(x) ≤ 1`. Tolerance `1e-10 · scale`, where
/// the scale also covers the magnitude of the traces.
pub fn check_golden_thompson(
    g: &WeightedGraph,
    v1: &Potential,
    v2: &Potential,
    theta: &MagneticPotential,
    subset: &VertexSet,
    times: &[f64],
) -> Result<CheckReport> {
    check_order(v1, v2)?;
    let zero_theta = MagneticPotential::zero(g);
    let zero_v = Potential::zero(g);
    let op1 = assemble_finite(g, v1, theta, subset)?;
    let op2 = assemble_finite(g, v2, &zero_theta, subset)?;
    let free_u = assemble_finite(g, &zero_v, &zero_theta, subset)?;
    let free_host = assemble_finite(g, &zero_v, &zero_theta, &g.all_vertices())?;
    let (s1, s2, sa, sh) = (
        op1.spectrum()?,
        op2.spectrum()?,
        free_u.spectrum()?,
        free_host.spectrum()?,
    );
    let members = subset.members();

    struct Row {
        t: f64,
        terms: [f64; 5],
        c_t: f64,
    }
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        let tr1 = op1.semigroup_with(&s1, t)?.trace().norm();
        let tr2 = op2.semigroup_with(&s2, t)?.trace().re;
        let half = free_u.semigroup_with(&sa, t / 2.0)?;
        let damp = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            members.len(),
            members.iter().map(|&x| C64::new((-t * v2.at(x)).exp(), 0.0)),
        ));
        let sandwich = (half.matrix() * damp * half.matrix()).trace().re;
        let host = free_host.semigroup_with(&sh, t)?;
        let diag = |x: usize| host.kernel(VertexId(x), VertexId(x)).re * g.m(x);
        let host_sum: f64 = members
            .iter()
            .map(|&x| diag(x) * (-t * v2.at(x)).exp())
            .sum();
        let c_t = (0..g.num_vertices()).map(diag).fold(0.0, f64::max);
        let bound = c_t * members.iter().map(|&x| (-t * v2.at(x)).exp()).sum::<f64>();
        rows.push(Row {
            t,
            terms: [tr1, tr2, sandwich, host_sum, bound],
            c_t,
        });
    }
    let magnitude = rows
        .iter()
        .flat_map(|r| r.terms.iter().copied())
        .fold(1.0, f64::max);
    let scale = unit_scale(&[&op1, &op2]) * magnitude;
    let mut ck = Checker::new("golden_thompson", 1e-10 * scale);
    const LINKS: [&str; 4] = ["kato trace", "matrix golden-thompson", "dirichlet vs host", "C(t) bound"];
    for row in &rows {
        let t = row.t;
        for (k, link) in LINKS.iter().enumerate() {
            ck.compare(row.terms[k], row.terms[k + 1], || format!("{link} t={t}"));
        }
        ck.compare(row.c_t, 1.0, || format!("C(t) <= 1 t={t}"));
        ck.observe(format!("trace t={t}"), row.terms[0]);
        ck.observe(format!("golden_thompson_rhs t={t}"), row.terms[2]);
        ck.observe(format!("C t={t}"), row.c_t);
    }
    Ok(ck.finish())
}

/// Tolerances used by [`check_exhaustion`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExhaustionTolerances {
    /// Slack for monotone sequences (traces, diagonals, errors).
    pub monotone: f64,
    /// The error at the last set must be at most `final_relative · ‖h‖`.
    pub final_relative: f64,
}

impl Default for ExhaustionTolerances {
    fn default() -> Self {
        ExhaustionTolerances {
            monotone: 1e-10,
            final_relative: 1e-3,
        }
    }
}

/// Convergence of `ι e^{-tL^(X_n)} π h → e^{-tL^(ref)} h` along an exhaustion,
/// tested on `f` and on the indicators of the vertices of `X_1`.
///
/// - the error at the last set is at most `final_relative · ‖h‖`
/// - when `θ ≡ 0`, the error is nonincreasing in `n` for every `h ≥ 0`
/// - `tr e^{-tL^(X_n)_{v,0}}` is nondecreasing in `n`
/// - `e^{-tL^(X_n)_{v,0}}(x, x)` is nondecreasing in `n`
///
/// `reference` defaults to the whole host.
#[allow(clippy::too_many_arguments)]
pub fn check_exhaustion(
    g: &WeightedGraph,
    v: &Potential,
    theta: &MagneticPotential,
    f: &[C64],
    x: VertexId,
    t: f64,
    exhaustion: &Exhaustion,
    reference: Option<&VertexSet>,
    tolerances: ExhaustionTolerances,
) -> Result<CheckReport> {
    g.check_vertex(x)?;
    if f.len() != g.num_vertices() {
        return Err(GraphError::LengthMismatch {
            expected: g.num_vertices(),
            got: f.len(),
        }
        .into());
    }
    let first = exhaustion.first();
    if !first.contains(x.0) {
        return Err(InequalityError::BadExhaustion(format!(
            "vertex {x} is not in the first set"
        )));
    }
    if let Some(y) = (0..f.len()).find(|&y| !first.contains(y) && f[y] != C64::new(0.0, 0.0)) {
        return Err(InequalityError::BadExhaustion(format!(
            "f is nonzero at vertex {y}, outside the first set"
        )));
    }
    let host = g.all_vertices();
    let reference = reference.unwrap_or(&host);
    if let Some(k) = exhaustion.sets().iter().position(|s| !s.is_subset(reference)) {
        return Err(InequalityError::BadExhaustion(format!(
            "set {k} is not contained in the reference set"
        )));
    }

    let zero_theta = MagneticPotential::zero(g);
    let mut vectors: Vec<(String, Vec<C64>)> = vec![("f".to_string(), f.to_vec())];
    for &y in first.members() {
        let mut e = vec![C64::new(0.0, 0.0); g.num_vertices()];
        e[y] = C64::new(1.0, 0.0);
        vectors.push((format!("1_{y}"), e));
    }
    let reference_sg = assemble_finite(g, v, theta, reference)?.semigroup(t)?;
    let targets: Vec<Vec<C64>> = vectors.iter().map(|(_, h)| reference_sg.apply(h)).collect();

    let mut ck = Checker::new("exhaustion", tolerances.monotone);
    let mut errors = vec![Vec::with_capacity(exhaustion.len()); vectors.len()];
    let mut traces = Vec::with_capacity(exhaustion.len());
    let mut diagonals = Vec::with_capacity(exhaustion.len());
    for set in exhaustion.sets() {
        let sg = assemble_finite(g, v, theta, set)?.semigroup(t)?;
        for (k, (_, h)) in vectors.iter().enumerate() {
            let approx = sg.apply(h);
            let diff: Vec<C64> = approx.iter().zip(&targets[k]).map(|(a, b)| a - b).collect();
            errors[k].push(norm_sq(g, &diff).sqrt());
        }
        let real_sg: KernelMatrix = assemble_finite(g, v, &zero_theta, set)?.semigroup(t)?;
        traces.push(real_sg.trace().re);
        diagonals.push(real_sg.kernel(x, x).re);
    }

    for (k, (name, h)) in vectors.iter().enumerate() {
        let norm = norm_sq(g, h).sqrt();
        let last = *errors[k].last().expect("nonempty exhaustion");
        ck.compare(last, tolerances.final_relative * norm, || {
            format!("final error for {name}")
        });
        let nonnegative = h.iter().all(|z| z.im == 0.0 && z.re >= 0.0);
        if theta.is_zero() && nonnegative {
            for n in 1..errors[k].len() {
                ck.compare(errors[k][n], errors[k][n - 1], || {
                    format!("error for {name} increases at set {n}")
                });
            }
        }
        if k == 0 {
            for (n, e) in errors[0].iter().enumerate() {
                ck.observe(format!("error_f set={n}"), *e);
            }
        }
    }
    for n in 1..traces.len() {
        ck.compare(traces[n - 1], traces[n], || format!("trace decreases at set {n}"));
        ck.compare(diagonals[n - 1], diagonals[n], || {
            format!("diagonal kernel at {x} decreases at set {n}")
        });
    }
    for (n, tr) in traces.iter().enumerate() {
        ck.observe(format!("trace set={n}"), *tr);
    }
    if !theta.is_zero() {
        ck.note("error monotonicity is only asserted for theta = 0");
    }
    Ok(ck.finish())
}

/// The difference quotient `(e^{-tL^(U)}f(x) − f(x))/t` against `−L̃f(x)`
/// along a decreasing time sequence.
///
/// - observed order `log(e_k/e_{k+1}) / log(t_k/t_{k+1})` in `[0.9, 1.1]` for
///   every consecutive pair whose errors are above the rounding floor
/// - Richardson value `2D(t/2) − D(t)` at the smallest `t` within relative
///   `1e-6` of the limit
#[allow(clippy::too_many_arguments)]
pub fn check_generator(
    g: &WeightedGraph,
    v: &Potential,
    theta: &MagneticPotential,
    subset: &VertexSet,
    f: &[C64],
    x: VertexId,
    times: &[f64],
) -> Result<CheckReport> {
    if times.len() < 2 {
        return Err(InequalityError::BadTimeSequence("need at least two times".into()));
    }
    if times.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(InequalityError::BadTimeSequence("times must be positive".into()));
    }
    if times.windows(2).any(|w| w[1] >= w[0]) {
        return Err(InequalityError::BadTimeSequence("times must decrease".into()));
    }
    g.check_vertex(x)?;
    if !subset.contains(x.0) {
        return Err(InequalityError::VertexOutsideSubset(x.0));
    }
    if f.len() != g.num_vertices() {
        return Err(GraphError::LengthMismatch {
            expected: g.num_vertices(),
            got: f.len(),
        }
        .into());
    }
    if let Some(y) = (0..f.len()).find(|&y| !subset.contains(y) && f[y] != C64::new(0.0, 0.0)) {
        return Err(InequalityError::FunctionOutsideSubset(y));
    }
    let op = assemble_finite(g, v, theta, subset)?;
    let spectral = op.spectrum()?;
    let target = -apply_formal(g, v, theta, f, x)?;
    let sup_f = f.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let floor = |t: f64| 256.0 * f64::EPSILON * op.scale().max(1.0) * sup_f.max(1.0) / t;
    let quotient = |t: f64| -> Result<C64> {
        let u = op.semigroup_with(&spectral, t)?.apply(f);
        Ok((u[x.0] - f[x.0]) / t)
    };

    let mut ck = Checker::new("generator", 0.0);
    ck.observe("target_re", target.re);
    ck.observe("target_im", target.im);
    let mut errors = Vec::with_capacity(times.len());
    for &t in times {
        let e = (quotient(t)? - target).norm();
        ck.observe(format!("error t={t}"), e);
        errors.push(e);
    }
    let mut orders = 0;
    for k in 0..times.len() - 1 {
        let (t0, t1) = (times[k], times[k + 1]);
        if errors[k] <= 8.0 * floor(t0) || errors[k + 1] <= 8.0 * floor(t1) {
            continue;
        }
        let p = (errors[k] / errors[k + 1]).ln() / (t0 / t1).ln();
        ck.observe(format!("order t={t0}..{t1}"), p);
        ck.compare(0.9, p, || format!("order below 0.9 between t={t0} and t={t1}"));
        ck.compare(p, 1.1, || format!("order above 1.1 between t={t0} and t={t1}"));
        orders += 1;
    }
    if orders == 0 {
        ck.note("errors at the rounding floor; order not measured");
    }
    let t_min = *times.last().expect("nonempty");
    let richardson = quotient(t_min / 2.0)? * 2.0 - quotient(t_min)?;
    let rich_err = (richardson - target).norm();
    ck.observe("richardson_error", rich_err);
    ck.compare(rich_err, 1e-6 * target.norm() + 3.0 * floor(t_min / 2.0), || {
        format!("richardson value at t={t_min}")
    });
    Ok(ck.finish())
}

/// Monte Carlo check that `P_x(N(t) ≥ 2)/t` decreases along a decreasing time
/// sequence, up to 4 combined standard errors.
pub fn check_jump_tail(
    g: &WeightedGraph,
    x: VertexId,
    times: &[f64],
    cfg: &McConfig,
) -> Result<CheckReport> {
    if times.windows(2).any(|w| w[1] >= w[0]) || times.iter().any(|&t| !(t > 0.0)) {
        return Err(InequalityError::BadTimeSequence(
            "times must be positive and decreasing".into(),
        ));
    }
    let mut ck = Checker::new("jump_tail", 0.0);
    let mut ratios = Vec::with_capacity(times.len());
    for &t in times {
        let e = jump_count_tail(g, x, t, 2, cfg)?;
        let r = e.mean.re / t;
        let se = (e.stderr + e.bias_bound) / t;
        ck.observe(format!("ratio t={t}"), r);
        ck.observe(format!("stderr t={t}"), se);
        ratios.push((r, se));
    }
    for k in 1..ratios.len() {
        let (prev, cur) = (ratios[k - 1], ratios[k]);
        let slack = 4.0 * prev.1.hypot(cur.1);
        ck.compare(cur.0, prev.0 + slack, || {
            format!("ratio increases from t={} to t={}", times[k - 1], times[k])
        });
    }
    Ok(ck.finish())
}

/// The ground-state identity `Q(fg, fg) = Q^(f)(g, g) + λ‖fg‖²` for
/// eigenpairs `(λ, f)` of `L^(U)_{v,θ}` and `trials` random real `g` with
/// entries in `[-1, 1]` on the host. `which = None` checks every eigenpair.
/// Tolerance `1e-9 · scale`.
#[allow(clippy::too_many_arguments)]
pub fn check_ground_state(
    g: &WeightedGraph,
    v: &Potential,
    theta: &MagneticPotential,
    subset: &VertexSet,
    which: Option<usize>,
    trials: usize,
    seed: RngSeed,
) -> Result<CheckReport> {
    let op = assemble_finite(g, v, theta, subset)?;
    let spectral = op.spectrum()?;
    let indices: Vec<usize> = match which {
        Some(k) => vec![k],
        None => (0..spectral.len()).collect(),
    };
    let mut ck = Checker::new("ground_state", 1e-9 * op.scale().max(1.0));
    for &k in &indices {
        let f = op.eigenfunction(&spectral, k)?;
        let lambda = spectral.eigenvalues[k];
        let transform = ground_state_transform(g, theta, &f)?;
        let mut rng = seed.stream(k as u64);
        for trial in 0..trials {
            let gv: Vec<C64> = (0..g.num_vertices())
                .map(|_| C64::new(rng.random_range(-1.0..=1.0), 0.0))
                .collect();
            let fg: Vec<C64> = f.iter().zip(&gv).map(|(a, b)| a * b).collect();
            let lhs = quadratic_form(g, v, theta, &fg, &fg)?;
            let rhs = transform.form(g, &gv, &gv)? + lambda * norm_sq(g, &fg);
            ck.compare((lhs - rhs).norm(), 0.0, || {
                format!("eigenpair {k} trial {trial}")
            });
        }
    }
    Ok(ck.finish())
}

/// Monotone truncation `v_n = min(v, n)` for `v ≥ 0`: the values
/// `e^{-tL_{v_n,θ}}f(x)` on the whole host converge to `e^{-tL_{v,θ}}f(x)`,
/// nonincreasingly when `θ ≡ 0` and `f ≥ 0`. The last value must match the
/// limit to `1e-10 · scale`.
#[allow(clippy::too_many_arguments)]
pub fn check_form_sum(
    g: &WeightedGraph,
    v: &Potential,
    theta: &MagneticPotential,
    f: &[C64],
    x: VertexId,
    t: f64,
    cutoffs: &[f64],
) -> Result<CheckReport> {
    if let Some(vertex) = v.values().iter().position(|&a| a < 0.0) {
        return Err(InequalityError::NegativePotential {
            vertex,
            value: v.at(vertex),
        });
    }
    if cutoffs.is_empty() || cutoffs.windows(2).any(|w| w[1] <= w[0]) || cutoffs[0] < 0.0 {
        return Err(InequalityError::BadCutoffs(
            "cutoffs must be nonempty, nonnegative and increasing".into(),
        ));
    }
    g.check_vertex(x)?;
    let host = g.all_vertices();
    let limit_op = assemble_finite(g, v, theta, &host)?;
    let limit = limit_op.semigroup(t)?.apply(f)[x.0];
    let sup_f = f.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut ck = Checker::new("form_sum", 1e-10 * limit_op.scale().max(1.0) * sup_f.max(1.0));
    let monotone = theta.is_zero() && f.iter().all(|z| z.im == 0.0 && z.re >= 0.0);
    let mut values = Vec::with_capacity(cutoffs.len());
    for &n in cutoffs {
        let vn = v.truncated_above(n);
        let value = assemble_finite(g, &vn, theta, &host)?.semigroup(t)?.apply(f)[x.0];
        ck.observe(format!("value_re cutoff={n}"), value.re);
        ck.observe(format!("gap cutoff={n}"), (value - limit).norm());
        values.push(value);
    }
    ck.observe("limit_re", limit.re);
    if monotone {
        for k in 1..values.len() {
            ck.compare(values[k].re, values[k - 1].re, || {
                format!("value increases at cutoff {}", cutoffs[k])
            });
        }
    } else {
        ck.note("monotonicity is only asserted for theta = 0 and f >= 0");
    }
    let last = *values.last().expect("nonempty cutoffs");
    ck.compare((last - limit).norm(), 0.0, || {
        format!("gap at cutoff {}", cutoffs[cutoffs.len() - 1])
    });
    Ok(ck.finish())
}

/// `Σ_y b(x, y) d(x, y)² ≤ m(x)` at every vertex.
pub fn check_intrinsic(g: &WeightedGraph, d: &PathMetric) -> CheckReport {
    let slack = verify_intrinsic(g, d);
    let scale = g.measure().iter().copied().fold(1.0, f64::max);
    let mut ck = Checker::new("intrinsic", 1e-12 * scale);
    for (x, s) in slack.iter().enumerate() {
        ck.compare(g.m(x) - s, g.m(x), || format!("vertex {x}"));
    }
    ck.observe("min_slack", slack.iter().copied().fold(f64::INFINITY, f64::min));
    ck.finish()
}

/// Path-wise Kato: `|e^{S_t(v1,θ)} f(X_t)| ≤ e^{S_t(v2,0)} |f(X_t)|` on every
/// uncensored sampled trajectory, with zero tolerance.
#[allow(clippy::too_many_arguments)]
pub fn check_sample_kato(
    g: &WeightedGraph,
    v1: &Potential,
    v2: &Potential,
    theta: &MagneticPotential,
    f: &[C64],
    x: VertexId,
    t: f64,
    cfg: &McConfig,
) -> Result<CheckReport> {
    check_order(v1, v2)?;
    let zero_theta = MagneticPotential::zero(g);
    let mut ck = Checker::new("sample_kato", 0.0);
    let mut censored = 0u64;
    for i in 0..cfg.n_samples {
        let traj = sample_trajectory(g, x, t, cfg.seed, i, cfg.max_jumps)?;
        if traj.censored {
            censored += 1;
            continue;
        }
        let a1 = action(g, &traj, v1, theta, t)?;
        let a2 = action(g, &traj, v2, &zero_theta, t)?;
        let fx = f[traj.final_state()].norm();
        ck.compare(a1.modulus() * fx, a2.modulus() * fx, || format!("sample {i}"));
    }
    ck.observe("censored", censored as f64);
    Ok(ck.finish())
}

fn random_function(rng: &mut impl Rng, n: usize) -> Vec<C64> {
    (0..n)
        .map(|_| C64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)))
        .collect()
}

/// Exact identities on the whole host, one report each:
///
/// - Green's formula `Q(f, h) = ⟨L̃f, h⟩` for random `f, h` (tolerance `1e-12`)
/// - Hermiticity `m(x) H(x,y) = conj(m(y) H(y,x))` (`1e-13`)
/// - semigroup property `e^{-sL}e^{-tL} = e^{-(s+t)L}` for `s, t ∈ {0.1, 0.5, 1}` (`1e-10`)
/// - gauge covariance: `θ` and `θ + dφ` give the same spectrum (`1e-10 · scale`)
/// - antisymmetry `θ(x, y) = −θ(y, x)` (exact)
pub fn check_identities(
    g: &WeightedGraph,
    v: &Potential,
    theta: &MagneticPotential,
    seed: RngSeed,
) -> Result<Vec<CheckReport>> {
    let host = g.all_vertices();
    let op = assemble_finite(g, v, theta, &host)?;
    let n = g.num_vertices();
    let mut rng = seed.stream(0);

    let mut green = Checker::new("green", 1e-12);
    for trial in 0..8 {
        let f = random_function(&mut rng, n);
        let h = random_function(&mut rng, n);
        let r = green_identity_residual(g, v, theta, &f, &h)?;
        green.compare(r, 0.0, || format!("trial {trial}"));
    }

    let mut herm = Checker::new("hermiticity", 1e-13);
    let a = op.matrix();
    for i in 0..n {
        for j in 0..n {
            let lhs = a[(i, j)] * g.m(i);
            let rhs = (a[(j, i)] * g.m(j)).conj();
            herm.compare((lhs - rhs).norm(), 0.0, || format!("entry ({i}, {j})"));
        }
    }
    herm.observe("hermitian_defect", op.hermiticity_defect());

    let spectral = op.spectrum()?;
    let mut semigroup = Checker::new("semigroup_property", 1e-10);
    let times = [0.1, 0.5, 1.0];
    for &s in &times {
        for &t in &times {
            let ps = op.semigroup_with(&spectral, s)?;
            let pt = op.semigroup_with(&spectral, t)?;
            let pst = op.semigroup_with(&spectral, s + t)?;
            let diff = ps.matrix() * pt.matrix() - pst.matrix();
            let worst = diff.iter().map(|z| z.norm()).fold(0.0, f64::max);
            semigroup.compare(worst, 0.0, || format!("s={s} t={t}"));
        }
    }

    let phi: Vec<f64> = (0..n)
        .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
        .collect();
    let gauged = theta.gauge_transform(g, &phi)?;
    let other = assemble_finite(g, v, &gauged, &host)?.spectrum()?;
    let mut gauge = Checker::new("gauge_covariance", 1e-10 * op.scale().max(1.0));
    for k in 0..n {
        gauge.compare(
            (spectral.eigenvalues[k] - other.eigenvalues[k]).abs(),
            0.0,
            || format!("eigenvalue {k}"),
        );
    }

    let mut anti = Checker::new("theta_antisymmetry", 0.0);
    for e in g.edges() {
        let fwd = theta.get(g, e.lo, e.hi);
        let back = theta.get(g, e.hi, e.lo);
        anti.compare((fwd + back).abs(), 0.0, || format!("edge ({}, {})", e.lo, e.hi));
    }

    Ok(vec![
        green.finish(),
        herm.finish(),
        semigroup.finish(),
        gauge.finish(),
        anti.finish(),
    ])
}
