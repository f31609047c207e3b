//! Reference computations for integration tests, built directly from edge
//! data with a Taylor/scaling-and-squaring matrix exponential.

#![allow(dead_code)]

use magnetic_fki::graph::{generate, GeneratorSpec, MagneticPotential, Potential, WeightedGraph};
use magnetic_fki::C64;
use nalgebra::DMatrix;

pub const PI_3: f64 = std::f64::consts::FRAC_PI_3;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn inf_norm(a: &DMatrix<C64>) -> f64 {
    a.row_iter()
        .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `e^A` by scaling and squaring with a truncated Taylor series.
pub fn expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    let n = a.nrows();
    let norm = inf_norm(a);
    let squarings = if norm > 0.25 {
        (norm / 0.25).log2().ceil() as i32
    } else {
        0
    };
    let b = a / C64::new(2f64.powi(squarings), 0.0);
    let mut sum = DMatrix::<C64>::identity(n, n);
    let mut term = DMatrix::<C64>::identity(n, n);
    for k in 1..60 {
        term = &term * &b / C64::new(k as f64, 0.0);
        sum += &term;
        if inf_norm(&term) <= 1e-20 * inf_norm(&sum) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Coordinate matrix of the Dirichlet operator on `subset` (host order),
/// assembled from the edge list: full weighted degree on the diagonal.
pub fn generator_matrix(
    g: &WeightedGraph,
    v: &Potential,
    theta: &MagneticPotential,
    subset: &[usize],
) -> DMatrix<C64> {
    let k = subset.len();
    let pos = |x: usize| subset.iter().position(|&s| s == x);
    let mut h = DMatrix::<C64>::zeros(k, k);
    for (i, &x) in subset.iter().enumerate() {
        h[(i, i)] = c(v.values()[x], 0.0);
    }
    for (e, &phase) in g.edges().iter().zip(theta.edge_phases()) {
        for (x, y, th) in [(e.lo, e.hi, phase), (e.hi, e.lo, -phase)] {
            if let Some(i) = pos(x) {
                h[(i, i)] += c(e.weight / g.m(x), 0.0);
                if let Some(j) = pos(y) {
                    h[(i, j)] -= C64::from_polar(e.weight / g.m(x), th);
                }
            }
        }
    }
    h
}

/// `e^{-tL^(U)}` in coordinates.
pub fn semigroup(
    g: &WeightedGraph,
    v: &Potential,
    theta: &MagneticPotential,
    subset: &[usize],
    t: f64,
) -> DMatrix<C64> {
    expm(&(generator_matrix(g, v, theta, subset) * c(-t, 0.0)))
}

/// Kernel `K(x, y) = E[x][y] / m(y)` on local coordinates.
pub fn kernel(
    g: &WeightedGraph,
    v: &Potential,
    theta: &MagneticPotential,
    subset: &[usize],
    t: f64,
) -> DMatrix<C64> {
    let e = semigroup(g, v, theta, subset, t);
    DMatrix::from_fn(subset.len(), subset.len(), |i, j| e[(i, j)] / g.m(subset[j]))
}

/// `(e^{-tL^(U)} π f)(x)` for `x ∈ U`.
pub fn apply_at(
    g: &WeightedGraph,
    v: &Potential,
    theta: &MagneticPotential,
    subset: &[usize],
    t: f64,
    f: &[C64],
    x: usize,
) -> C64 {
    let e = semigroup(g, v, theta, subset, t);
    let i = subset.iter().position(|&s| s == x).expect("x in subset");
    subset
        .iter()
        .enumerate()
        .map(|(j, &y)| e[(i, j)] * f[y])
        .sum()
}

pub fn all(g: &WeightedGraph) -> Vec<usize> {
    (0..g.num_vertices()).collect()
}

/// The standard fixture families.
pub fn fixture_specs() -> Vec<(&'static str, GeneratorSpec)> {
    vec![
        ("path(5)", GeneratorSpec::path(5)),
        ("cycle(6)", GeneratorSpec::cycle(6)),
        ("star(4)", GeneratorSpec::star(vec![1.0, 2.0, 0.5, 1.5])),
        ("grid(3x3)", GeneratorSpec::grid(3, 3)),
    ]
}

pub fn fixture(spec: &GeneratorSpec, phase: f64) -> (WeightedGraph, MagneticPotential) {
    let (g, theta, _) = generate(&spec.clone().with_theta(phase)).expect("fixture builds");
    (g, theta)
}

/// A sign-changing potential.
pub fn mixed_potential(g: &WeightedGraph) -> Potential {
    let values = (0..g.num_vertices())
        .map(|x| 0.8 * (2.1 * x as f64 + 0.3).cos())
        .collect();
    Potential::new(g, values).expect("finite")
}

/// A bounded complex test function.
pub fn test_function(n: usize) -> Vec<C64> {
    (0..n)
        .map(|y| c(1.0 - 0.3 * y as f64 / n as f64, 0.5 * (1.3 * y as f64).sin()))
        .collect()
}

pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
