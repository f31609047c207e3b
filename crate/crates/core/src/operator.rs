//! Magnetic Schrödinger operators `L_{v,θ}` on weighted graphs.
//!
//! The formal operator and the sesquilinear form are evaluated directly on
//! vertex functions over the (finite) host. Restrictions `L^(U)` to a finite
//! set `U` are assembled as dense matrices acting on `ℓ²(U, m)` with the
//! Dirichlet convention: the diagonal keeps the full host degree, edges
//! leaving `U` have no off-diagonal entry.
//!
//! Semigroups, resolvents and spectra all go through the eigendecomposition
//! of the Hermitianized matrix `M^{1/2} H M^{-1/2}`.
//!
//! Kernels follow `(A f)(x) = Σ_y A(x, y) f(y) m(y)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

use crate::graph::{
    Exhaustion, GraphError, MagneticPotential, Potential, VertexId, VertexSet, WeightedGraph,
};
use crate::C64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("vertex subset is empty")]
    EmptySubset,
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("Hermitian eigensolver did not converge")]
    EigensolverFailure,
    #[error("shift {0} makes L + λ singular")]
    SingularShift(C64),
    #[error("not a path: {0}")]
    NotAPath(String),
    #[error("epsilon {0} must lie in (0, 1]")]
    BadEpsilon(f64),
    #[error("eigenpair index {index} out of range for {dim} eigenpairs")]
    BadEigenIndex { index: usize, dim: usize },
}

pub type Result<T> = std::result::Result<T, OperatorError>;

fn check_len(g: &WeightedGraph, len: usize) -> Result<()> {
    if len == g.num_vertices() {
        Ok(())
    } else {
        Err(GraphError::LengthMismatch {
            expected: g.num_vertices(),
            got: len,
        }
        .into())
    }
}

#[inline]
fn phase(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

/// `ℓ²(X, m)` inner product `Σ f(x) conj(h(x)) m(x)`.
pub fn inner(g: &WeightedGraph, f: &[C64], h: &[C64]) -> C64 {
    f.iter()
        .zip(h)
        .zip(g.measure())
        .map(|((a, b), m)| a * b.conj() * *m)
        .sum()
}

pub fn norm_sq(g: &WeightedGraph, f: &[C64]) -> f64 {
    f.iter().zip(g.measure()).map(|(a, m)| a.norm_sqr() * m).sum()
}

/// `L̃_{v,θ} f(x) = (1/m(x)) Σ_y b(x,y) (f(x) − e^{iθ(x,y)} f(y)) + v(x) f(x)`.
pub fn apply_formal(
    g: &WeightedGraph,
    v: &Potential,
    theta: &MagneticPotential,
    f: &[C64],
    x: VertexId,
) -> Result<C64> {
    g.check_vertex(x)?;
    check_len(g, f.len())?;
    Ok(formal_at(g, v, theta, f, x.0))
}

fn formal_at(
    g: &WeightedGraph,
    v: &Potential,
    theta: &MagneticPotential,
    f: &[C64],
    x: usize,
) -> C64 {
    let fx = f[x];
    let sum: C64 = g
        .neighbors(x)
        .iter()
        .map(|nb| (fx - phase(theta.along(x, nb)) * f[nb.vertex]) * nb.weight)
        .sum();
    sum / g.m(x) + fx * v.at(x)
}

/// `L̃_{v,θ} f` at every vertex.
pub fn apply_formal_all(
    g: &WeightedGraph,
    v: &Potential,
    theta: &MagneticPotential,
    f: &[C64],
) -> Result<Vec<C64>> {
    check_len(g, f.len())?;
    Ok((0..g.num_vertices())
        .map(|x| formal_at(g, v, theta, f, x))
        .collect())
}

/// `Q^(c)_{v,θ}(f, h) = ½ Σ_{x,y} b(x,y)(f(x) − e^{iθ}f(y)) conj(h(x) − e^{iθ}h(y)) + Σ v f conj(h) m`.
pub fn quadratic_form(
    g: &WeightedGraph,
    v: &Potential,
    theta: &MagneticPotential,
    f: &[C64],
    h: &[C64],
) -> Result<C64> {
    check_len(g, f.len())?;
    check_len(g, h.len())?;
    let mut edge_part = C64::new(0.0, 0.0);
    let mut potential_part = C64::new(0.0, 0.0);
    for x in 0..g.num_vertices() {
        for nb in g.neighbors(x) {
            let p = phase(theta.along(x, nb));
            let df = f[x] - p * f[nb.vertex];
            let dh = h[x] - p * h[nb.vertex];
            edge_part += df * dh.conj() * nb.weight;
        }
        potential_part += f[x] * h[x].conj() * (v.at(x) * g.m(x));
    }
    Ok(edge_part * 0.5 + potential_part)
}

/// `|Q^(c)(f, h) − Σ_x L̃f(x) conj(h(x)) m(x)|`.
pub fn green_identity_residual(
    g: &WeightedGraph,
    v: &Potential,
    theta: &MagneticPotential,
    f: &[C64],
    h: &[C64],
) -> Result<f64> {
    let q = quadratic_form(g, v, theta, f, h)?;
    let lf = apply_formal_all(g, v, theta, f)?;
    Ok((q - inner(g, &lf, h)).norm())
}

/// Per-vertex `Σ_y b(x,y)² / m(y)`, the squared `ℓ²(X, m)` norm of
/// `y ↦ b(x, y)/m(y)`. Always finite on a finite host.
pub fn finiteness_report(g: &WeightedGraph) -> Vec<f64> {
    (0..g.num_vertices())
        .map(|x| {
            g.neighbors(x)
                .iter()
                .map(|nb| nb.weight * nb.weight / g.m(nb.vertex))
                .sum()
        })
        .collect()
}

/// Matrix of the Dirichlet restriction `L^(U)_{v,θ}` on `ℓ²(U, m)`.
#[derive(Debug, Clone)]
pub struct FiniteOperator {
    subset: VertexSet,
    measure: Vec<f64>,
    matrix: DMatrix<C64>,
    hermitian: DMatrix<C64>,
}

/// Assembles `L^(U)_{v,θ}`.
pub fn assemble_finite(
    g: &WeightedGraph,
    v: &Potential,
    theta: &MagneticPotential,
    subset: &VertexSet,
) -> Result<FiniteOperator> {
    check_len(g, v.len())?;
    if subset.host_size() != g.num_vertices() {
        return Err(GraphError::LengthMismatch {
            expected: g.num_vertices(),
            got: subset.host_size(),
        }
        .into());
    }
    if subset.is_empty() {
        return Err(OperatorError::EmptySubset);
    }
    let members = subset.members();
    let k = members.len();
    let measure: Vec<f64> = members.iter().map(|&x| g.m(x)).collect();
    let mut matrix = DMatrix::<C64>::zeros(k, k);
    let mut hermitian = DMatrix::<C64>::zeros(k, k);
    for (i, &x) in members.iter().enumerate() {
        let diag = C64::new(g.deg_m(x) + v.at(x), 0.0);
        matrix[(i, i)] = diag;
        hermitian[(i, i)] = diag;
        for nb in g.neighbors(x) {
            let Some(j) = subset.position(nb.vertex) else {
                continue;
            };
            let hop = phase(theta.along(x, nb)) * (-nb.weight);
            matrix[(i, j)] = hop / g.m(x);
            if i < j {
                let s = hop / (g.m(x) * g.m(nb.vertex)).sqrt();
                hermitian[(i, j)] = s;
                hermitian[(j, i)] = s.conj();
            }
        }
    }
    Ok(FiniteOperator {
        subset: subset.clone(),
        measure,
        matrix,
        hermitian,
    })
}

impl FiniteOperator {
    pub fn subset(&self) -> &VertexSet {
        &self.subset
    }

    pub fn dim(&self) -> usize {
        self.measure.len()
    }

    pub fn measure(&self) -> &[f64] {
        &self.measure
    }

    /// `H`, acting on coordinate vectors of `ℓ²(U, m)`.
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// `M^{1/2} H M^{-1/2}`.
    pub fn hermitian(&self) -> &DMatrix<C64> {
        &self.hermitian
    }

    /// `max |Hsym − Hsym^†|` entrywise.
    pub fn hermiticity_defect(&self) -> f64 {
        let a = &self.hermitian;
        let mut worst: f64 = 0.0;
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Max row sum of `|Hsym|`, a cheap bound on the operator norm.
    pub fn scale(&self) -> f64 {
        self.hermitian
            .row_iter()
            .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Restricts a host vector to coordinates on `U`.
    pub fn restrict(&self, f: &[C64]) -> DVector<C64> {
        DVector::from_iterator(self.dim(), self.subset.members().iter().map(|&x| f[x]))
    }

    /// Extends coordinates on `U` by zero to a host vector.
    pub fn extend(&self, local: &DVector<C64>) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.subset.host_size()];
        for (i, &x) in self.subset.members().iter().enumerate() {
            out[x] = local[i];
        }
        out
    }

    /// `Q^(U)(f, h) = ⟨Hf, h⟩_{ℓ²(U,m)}` on coordinate vectors.
    pub fn form(&self, f: &DVector<C64>, h: &DVector<C64>) -> C64 {
        let hf = &self.matrix * f;
        (0..self.dim())
            .map(|i| hf[i] * h[i].conj() * self.measure[i])
            .sum()
    }

    pub fn spectrum(&self) -> Result<SpectralData> {
        SpectralData::of_hermitian(&self.hermitian)
    }

    /// Eigenfunction `f = M^{-1/2} u_k` of `H`, extended by zero to the host.
    pub fn eigenfunction(&self, spectral: &SpectralData, k: usize) -> Result<Vec<C64>> {
        if k >= spectral.len() {
            return Err(OperatorError::BadEigenIndex {
                index: k,
                dim: spectral.len(),
            });
        }
        let col = spectral.eigenvectors.column(k);
        let local = DVector::from_iterator(
            self.dim(),
            col.iter()
                .zip(&self.measure)
                .map(|(u, m)| u / m.sqrt()),
        );
        Ok(self.extend(&local))
    }

    /// `φ(H)` in coordinates, from the spectral decomposition of `Hsym`.
    pub fn spectral_function(
        &self,
        spectral: &SpectralData,
        phi: impl Fn(f64) -> C64,
    ) -> DMatrix<C64> {
        let sym = spectral.apply_function(phi);
        self.unsymmetrize(sym)
    }

    fn unsymmetrize(&self, mut sym: DMatrix<C64>) -> DMatrix<C64> {
        let k = self.dim();
        for i in 0..k {
            for j in 0..k {
                sym[(i, j)] *= (self.measure[j] / self.measure[i]).sqrt();
            }
        }
        sym
    }

    /// `e^{-tL^(U)}`.
    pub fn semigroup(&self, t: f64) -> Result<KernelMatrix> {
        let spectral = self.spectrum()?;
        self.semigroup_with(&spectral, t)
    }

    /// `e^{-tL^(U)}` reusing a spectral decomposition.
    pub fn semigroup_with(&self, spectral: &SpectralData, t: f64) -> Result<KernelMatrix> {
        if !(t >= 0.0) {
            return Err(OperatorError::NegativeTime(t));
        }
        let matrix = if t == 0.0 {
            DMatrix::identity(self.dim(), self.dim())
        } else {
            self.spectral_function(spectral, |lambda| C64::new((-t * lambda).exp(), 0.0))
        };
        Ok(self.kernel_matrix(matrix))
    }

    /// `(L^(U) + λ)^{-1}`.
    pub fn resolvent(&self, lambda: C64) -> Result<KernelMatrix> {
        let spectral = self.spectrum()?;
        self.resolvent_with(&spectral, lambda)
    }

    pub fn resolvent_with(&self, spectral: &SpectralData, lambda: C64) -> Result<KernelMatrix> {
        let threshold = 1e-12 * self.scale().max(1.0);
        if spectral
            .eigenvalues
            .iter()
            .any(|&mu| (C64::new(mu, 0.0) + lambda).norm() <= threshold)
        {
            return Err(OperatorError::SingularShift(lambda));
        }
        let matrix = self.spectral_function(spectral, |mu| (C64::new(mu, 0.0) + lambda).inv());
        Ok(self.kernel_matrix(matrix))
    }

    /// Wraps a coordinate matrix built for this operator's subset.
    pub fn kernel_matrix(&self, matrix: DMatrix<C64>) -> KernelMatrix {
        KernelMatrix {
            subset: self.subset.clone(),
            measure: self.measure.clone(),
            matrix,
        }
    }
}

/// Spectral data of a Hermitian matrix: ascending eigenvalues and the
/// matching orthonormal eigenvectors (columns).
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<C64>,
}

impl SpectralData {
    pub fn of_hermitian(a: &DMatrix<C64>) -> Result<Self> {
        let n = a.nrows();
        let max_iter = 1000 + 100 * n * n;
        let eig = SymmetricEigen::try_new(a.clone(), f64::EPSILON, max_iter)
            .ok_or(OperatorError::EigensolverFailure)?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
        let mut eigenvectors = DMatrix::<C64>::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        if eigenvalues.iter().any(|l| !l.is_finite()) {
            return Err(OperatorError::EigensolverFailure);
        }
        Ok(SpectralData {
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn min_eig(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// `V diag(φ(λ)) V^*`.
    pub fn apply_function(&self, phi: impl Fn(f64) -> C64) -> DMatrix<C64> {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let w = phi(lambda);
            scaled.column_mut(k).iter_mut().for_each(|z| *z *= w);
        }
        scaled * v.adjoint()
    }

    /// Largest `‖A u − λ u‖` over eigenpairs.
    pub fn max_residual(&self, a: &DMatrix<C64>) -> f64 {
        (0..self.len())
            .map(|k| {
                let u = self.eigenvectors.column(k);
                (a * u - u * C64::new(self.eigenvalues[k], 0.0)).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// A bounded operator on `ℓ²(U, m)` given by its coordinate matrix `A`;
/// the kernel is `A(x, y) = A[x][y] / m(y)`.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    subset: VertexSet,
    measure: Vec<f64>,
    matrix: DMatrix<C64>,
}

impl KernelMatrix {
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn subset(&self) -> &VertexSet {
        &self.subset
    }

    /// Kernel at local coordinates.
    #[inline]
    pub fn kernel_local(&self, i: usize, j: usize) -> C64 {
        self.matrix[(i, j)] / self.measure[j]
    }

    /// Kernel at host vertices; zero when either lies outside `U`.
    pub fn kernel(&self, x: VertexId, y: VertexId) -> C64 {
        match (self.subset.position(x.0), self.subset.position(y.0)) {
            (Some(i), Some(j)) => self.kernel_local(i, j),
            _ => C64::new(0.0, 0.0),
        }
    }

    /// All kernel values as a matrix over local coordinates.
    pub fn kernel_values(&self) -> DMatrix<C64> {
        let k = self.measure.len();
        DMatrix::from_fn(k, k, |i, j| self.kernel_local(i, j))
    }

    /// `ι A π f` for a host vector `f`.
    pub fn apply(&self, f: &[C64]) -> Vec<C64> {
        let local = DVector::from_iterator(
            self.measure.len(),
            self.subset.members().iter().map(|&x| f[x]),
        );
        let out = &self.matrix * local;
        let mut host = vec![C64::new(0.0, 0.0); self.subset.host_size()];
        for (i, &x) in self.subset.members().iter().enumerate() {
            host[x] = out[i];
        }
        host
    }

    /// `tr A = Σ_x A(x, x) m(x)`.
    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }
}

/// Per-step output of [`class_diagnostic`].
#[derive(Debug, Clone, PartialEq)]
pub struct ClassDiagnostic {
    /// `min σ(L^(X_n)_{v,θ})` for each set of the exhaustion.
    pub lower_bounds: Vec<f64>,
    pub epsilon: Option<f64>,
    /// Smallest `C ≥ 0` with `q_{v−} ≤ (1−ε) Q^(X_n)_{v+,θ} + C‖·‖²`, per step.
    pub constants: Vec<f64>,
}

/// Finite-set witnesses for the potential classes `𝒜_θ` and `ℬ_θ`.
///
/// Membership quantifies over all finite sets and is never decided here; the
/// sequences are reported for inspection.
pub fn class_diagnostic(
    g: &WeightedGraph,
    v: &Potential,
    theta: &MagneticPotential,
    exhaustion: &Exhaustion,
    epsilon: Option<f64>,
) -> Result<ClassDiagnostic> {
    if let Some(eps) = epsilon {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(OperatorError::BadEpsilon(eps));
        }
    }
    let v_plus = v.positive_part();
    let v_minus = v.negative_part();
    let mut lower_bounds = Vec::with_capacity(exhaustion.len());
    let mut constants = Vec::new();
    for set in exhaustion.sets() {
        let op = assemble_finite(g, v, theta, set)?;
        lower_bounds.push(op.spectrum()?.min_eig());
        if let Some(eps) = epsilon {
            let plus = assemble_finite(g, &v_plus, theta, set)?;
            let mut a = plus.hermitian().map(|z| z * (1.0 - eps));
            for (i, &x) in set.members().iter().enumerate() {
                a[(i, i)] -= C64::new(v_minus.at(x), 0.0);
            }
            let lowest = SpectralData::of_hermitian(&a)?.min_eig();
            constants.push((-lowest).max(0.0));
        }
    }
    Ok(ClassDiagnostic {
        lower_bounds,
        epsilon,
        constants,
    })
}

/// Edge weights `b^(f)` of the ground-state transform and the form `Q^(f)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundStateTransform {
    weights: Vec<f64>,
}

/// `b^(f)(x,y) = b(x,y)(cos θ (f₁(x)f₁(y) + f₂(x)f₂(y)) + sin θ (f₁(y)f₂(x) − f₁(x)f₂(y)))`,
/// symmetric in `x, y`.
pub fn ground_state_transform(
    g: &WeightedGraph,
    theta: &MagneticPotential,
    f: &[C64],
) -> Result<GroundStateTransform> {
    check_len(g, f.len())?;
    let weights = g
        .edges()
        .iter()
        .zip(theta.edge_phases())
        .map(|(e, &th)| {
            let (fx, fy) = (f[e.lo], f[e.hi]);
            e.weight
                * (th.cos() * (fx.re * fy.re + fx.im * fy.im)
                    + th.sin() * (fy.re * fx.im - fx.re * fy.im))
        })
        .collect();
    Ok(GroundStateTransform { weights })
}

impl GroundStateTransform {
    /// Indexed like [`WeightedGraph::edges`].
    pub fn edge_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, g: &WeightedGraph, x: usize, y: usize) -> f64 {
        g.find_neighbor(x, y).map_or(0.0, |nb| self.weights[nb.edge])
    }

    /// `Q^(f)(u, w) = ½ Σ_{x,y} b^(f)(x,y) (u(x) − u(y)) conj(w(x) − w(y))`.
    pub fn form(&self, g: &WeightedGraph, u: &[C64], w: &[C64]) -> Result<C64> {
        check_len(g, u.len())?;
        check_len(g, w.len())?;
        // each undirected edge appears twice in the ordered double sum
        Ok(g.edges()
            .iter()
            .zip(&self.weights)
            .map(|(e, &bf)| (u[e.lo] - u[e.hi]) * (w[e.lo] - w[e.hi]).conj() * bf)
            .sum())
    }
}

/// Partial sums `S_N = Σ_{n=1}^{N} m(x_n) Π_{j<n} (1 + (v(x_j) − α)/deg_m(x_j))²`
/// along `path`, for `N = 1..=n_terms`.
pub fn ess_sa_path_sum(
    g: &WeightedGraph,
    v: &Potential,
    alpha: f64,
    path: &[VertexId],
    n_terms: usize,
) -> Result<Vec<f64>> {
    check_len(g, v.len())?;
    if path.len() < n_terms + 1 {
        return Err(OperatorError::NotAPath(format!(
            "{} terms need {} vertices, got {}",
            n_terms,
            n_terms + 1,
            path.len()
        )));
    }
    let mut seen = vec![false; g.num_vertices()];
    for (k, &x) in path.iter().enumerate() {
        g.check_vertex(x)?;
        if std::mem::replace(&mut seen[x.0], true) {
            return Err(OperatorError::NotAPath(format!("vertex {x} repeats")));
        }
        if k > 0 && !g.adjacent(path[k - 1].0, x.0) {
            return Err(OperatorError::NotAPath(format!(
                "{} and {x} are not adjacent",
                path[k - 1]
            )));
        }
    }
    let mut product = 1.0;
    let mut sum = 0.0;
    let mut out = Vec::with_capacity(n_terms);
    for n in 1..=n_terms {
        let xj = path[n - 1].0;
        let d = g.deg_m(xj);
        if d == 0.0 {
            return Err(OperatorError::NotAPath(format!("vertex {xj} has deg_m = 0")));
        }
        product *= (1.0 + (v.at(xj) - alpha) / d).powi(2);
        sum += g.m(path[n].0) * product;
        out.push(sum);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, generate, EdgeSpec, GeneratorSpec};
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn two_vertex(alpha: f64) -> (WeightedGraph, MagneticPotential, Potential) {
        let (g, th) = build_graph(&[EdgeSpec::new(0, 1, 1.0, alpha)], &[1.0, 1.0]).unwrap();
        let v = Potential::zero(&g);
        (g, th, v)
    }

    #[test]
    fn formal_operator_examples() {
        let alpha = 0.7;
        let (g, th, v) = two_vertex(alpha);
        let f = vec![c(0.0, 0.0), c(1.0, 0.0)];
        let val = apply_formal(&g, &v, &th, &f, VertexId(0)).unwrap();
        assert!((val + phase(alpha)).norm() < 1e-15);
        let zero = vec![c(0.0, 0.0); 2];
        assert_eq!(apply_formal(&g, &v, &th, &zero, VertexId(1)).unwrap(), c(0.0, 0.0));

        let (g1, th1) = build_graph(&[], &[1.0]).unwrap();
        let v1 = Potential::new(&g1, vec![2.5]).unwrap();
        let one = vec![c(1.0, 0.0)];
        assert_eq!(apply_formal(&g1, &v1, &th1, &one, VertexId(0)).unwrap(), c(2.5, 0.0));
        assert!(apply_formal(&g1, &v1, &th1, &one, VertexId(3)).is_err());
    }

    #[test]
    fn form_examples() {
        let (g, th, _) = two_vertex(1.1);
        let v = Potential::new(&g, vec![0.25, 0.0]).unwrap();
        let f = vec![c(1.0, 0.0), c(0.0, 0.0)];
        let q = quadratic_form(&g, &v, &th, &f, &f).unwrap();
        assert!((q - c(1.25, 0.0)).norm() < 1e-15);

        let (g, th, v) = two_vertex(0.0);
        let k = vec![c(0.3, -2.0); 2];
        assert!(quadratic_form(&g, &v, &th, &k, &k).unwrap().norm() < 1e-15);
    }

    #[test]
    fn assembled_matrices() {
        let alpha = 0.4;
        let (g, th, v) = two_vertex(alpha);
        let op = assemble_finite(&g, &v, &th, &g.all_vertices()).unwrap();
        let h = op.matrix();
        assert_eq!(h[(0, 0)], c(1.0, 0.0));
        assert!((h[(0, 1)] + phase(alpha)).norm() < 1e-15);
        assert!((h[(1, 0)] + phase(-alpha)).norm() < 1e-15);
        let u = VertexSet::new(&g, [0]).unwrap();
        let op = assemble_finite(&g, &v, &th, &u).unwrap();
        assert_eq!(op.matrix()[(0, 0)], c(1.0, 0.0));

        let (g, th, v) = generate(&GeneratorSpec::path(3)).unwrap();
        let op = assemble_finite(&g, &v, &th, &VertexSet::new(&g, [1]).unwrap()).unwrap();
        assert_eq!(op.matrix()[(0, 0)], c(2.0, 0.0));

        let empty = VertexSet::new(&g, []).unwrap();
        assert_eq!(
            assemble_finite(&g, &v, &th, &empty).unwrap_err(),
            OperatorError::EmptySubset
        );
    }

    #[test]
    fn two_vertex_semigroup_closed_form() {
        let alpha = PI / 3.0;
        let (g, th, v) = two_vertex(alpha);
        let op = assemble_finite(&g, &v, &th, &g.all_vertices()).unwrap();
        let k = op.semigroup(1.0).unwrap();
        let diag = (1.0 + (-2.0f64).exp()) / 2.0;
        let off = (1.0 - (-2.0f64).exp()) / 2.0;
        assert!((k.kernel(VertexId(0), VertexId(0)) - c(diag, 0.0)).norm() < 1e-13);
        assert!((k.kernel(VertexId(0), VertexId(1)) - phase(alpha) * off).norm() < 1e-13);
        assert!((diag - 0.5676676).abs() < 1e-7);
        assert!((off - 0.4323324).abs() < 1e-7);

        let id = op.semigroup(0.0).unwrap();
        assert_eq!(id.kernel(VertexId(0), VertexId(0)), c(1.0, 0.0));
        assert_eq!(id.kernel(VertexId(0), VertexId(1)), c(0.0, 0.0));
        assert!(matches!(op.semigroup(-1.0), Err(OperatorError::NegativeTime(_))));
    }

    #[test]
    fn spectrum_examples() {
        let (g, th, v) = two_vertex(2.0);
        let op = assemble_finite(&g, &v, &th, &g.all_vertices()).unwrap();
        let s = op.spectrum().unwrap();
        assert!(s.eigenvalues[0].abs() < 1e-14);
        assert!((s.eigenvalues[1] - 2.0).abs() < 1e-14);

        let (g1, th1) = build_graph(&[], &[3.0]).unwrap();
        let v1 = Potential::new(&g1, vec![-1.5]).unwrap();
        let op1 = assemble_finite(&g1, &v1, &th1, &g1.all_vertices()).unwrap();
        assert_eq!(op1.spectrum().unwrap().eigenvalues[0], -1.5);
        let r = op1.resolvent(c(2.0, 0.0)).unwrap();
        assert!((r.matrix()[(0, 0)] - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn resolvent_examples() {
        let (g, th, v) = two_vertex(0.9);
        let op = assemble_finite(&g, &v, &th, &g.all_vertices()).unwrap();
        let r = op.resolvent(c(1.0, 0.0)).unwrap();
        let s = SpectralData::of_hermitian(r.matrix()).unwrap();
        assert!((s.eigenvalues[0] - 1.0 / 3.0).abs() < 1e-13);
        assert!((s.eigenvalues[1] - 1.0).abs() < 1e-13);
        let spectral = op.spectrum().unwrap();
        let shift = c(-spectral.min_eig(), 0.0);
        assert!(matches!(
            op.resolvent_with(&spectral, shift),
            Err(OperatorError::SingularShift(_))
        ));
    }

    #[test]
    fn class_diagnostic_examples() {
        use crate::graph::{make_exhaustion, BallMetric};
        let (g, th, _) = generate(&GeneratorSpec::path(5)).unwrap();
        let ex = make_exhaustion(&g, VertexId(2), &[0.0, 1.0, 2.0], BallMetric::Combinatorial)
            .unwrap();
        let v = Potential::new(&g, vec![0.0, 0.0, -10.0, 0.0, 0.0]).unwrap();
        let d = class_diagnostic(&g, &v, &th, &ex, Some(0.5)).unwrap();
        for w in d.lower_bounds.windows(2) {
            assert!(w[1] < w[0]);
        }
        assert_eq!(d.constants.len(), 3);
        assert!(d.constants.iter().all(|&c| c >= 0.0));

        let shifted = Potential::constant(&g, -3.0);
        let base = class_diagnostic(&g, &Potential::zero(&g), &th, &ex, None).unwrap();
        let d = class_diagnostic(&g, &shifted, &th, &ex, None).unwrap();
        for (a, b) in d.lower_bounds.iter().zip(&base.lower_bounds) {
            assert!((a - (b - 3.0)).abs() < 1e-12);
            assert!(*a >= -3.0 - 1e-12);
        }
        assert!(class_diagnostic(&g, &v, &th, &ex, Some(0.0)).is_err());
    }

    #[test]
    fn ground_state_weights() {
        let (g, th, _) = generate(&GeneratorSpec::path(3)).unwrap();
        let f = vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)];
        let t = ground_state_transform(&g, &th, &f).unwrap();
        assert_eq!(t.weight(&g, 0, 1), 2.0);
        assert_eq!(t.weight(&g, 2, 1), 6.0);
        let ones = vec![c(1.0, 0.0); 3];
        let t = ground_state_transform(&g, &th, &ones).unwrap();
        assert_eq!(t.edge_weights(), &[1.0, 1.0]);
    }

    #[test]
    fn path_sums() {
        let (g, _, v) = generate(&GeneratorSpec::path(8)).unwrap();
        let ray: Vec<VertexId> = (1..8).map(VertexId).collect();
        let s = ess_sa_path_sum(&g, &v, 0.0, &ray, 5).unwrap();
        assert_eq!(s, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        let c3 = Potential::constant(&g, 3.0);
        let s = ess_sa_path_sum(&g, &c3, 3.0, &ray, 4).unwrap();
        assert_eq!(s, vec![1.0, 2.0, 3.0, 4.0]);
        let bad = [VertexId(0), VertexId(2)];
        assert!(matches!(
            ess_sa_path_sum(&g, &v, 0.0, &bad, 1),
            Err(OperatorError::NotAPath(_))
        ));
        let repeat = [VertexId(0), VertexId(1), VertexId(0)];
        assert!(ess_sa_path_sum(&g, &v, 0.0, &repeat, 2).is_err());
    }

    #[test]
    fn finiteness_report_values() {
        let (g, _, _) = generate(&GeneratorSpec::star(vec![1.0, 2.0])).unwrap();
        assert_eq!(finiteness_report(&g), vec![5.0, 1.0, 4.0]);
    }
}
