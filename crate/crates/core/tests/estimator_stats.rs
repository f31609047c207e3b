mod common;

use common::*;
use magnetic_fki::estimator::{
    fki_dirichlet, fki_kernel, fki_semigroup, fki_trace, McConfig, LOW_HIT_THRESHOLD,
};
use magnetic_fki::graph::{build_graph, EdgeSpec, MagneticPotential, Potential, VertexId, VertexSet, WeightedGraph};
use magnetic_fki::C64;
use std::f64::consts::E;

fn two_vertex(phase: f64) -> (WeightedGraph, MagneticPotential) {
    build_graph(&[EdgeSpec::new(0, 1, 1.0, phase)], &[1.0, 1.0]).unwrap()
}

fn indicator(n: usize, x: usize) -> Vec<C64> {
    let mut f = vec![c(0.0, 0.0); n];
    f[x] = c(1.0, 0.0);
    f
}

#[test]
fn two_vertex_semigroup_value() {
    let (g, theta) = two_vertex(PI_3);
    let v = Potential::zero(&g);
    let e = fki_semigroup(&g, &v, &theta, &indicator(2, 0), VertexId(0), 1.0, &McConfig::new(100_000, 1)).unwrap();
    let expected = (1.0 + (-2.0f64).exp()) / 2.0;
    assert!((expected - 0.5676676).abs() < 1e-7);
    assert!(e.agrees_with(c(expected, 0.0), 4.0), "{e:?}");
    assert_eq!(e.censored_fraction, 0.0);
}

#[test]
fn singleton_dirichlet_value() {
    let (g, theta) = two_vertex(PI_3);
    let v = Potential::zero(&g);
    let u = VertexSet::new(&g, [0]).unwrap();
    let e = fki_dirichlet(&g, &v, &theta, &indicator(2, 0), VertexId(0), 1.0, &u, &McConfig::new(100_000, 2)).unwrap();
    assert!((E.recip() - 0.3678794).abs() < 1e-7);
    assert!(e.agrees_with(c(E.recip(), 0.0), 4.0), "{e:?}");
}

#[test]
fn off_diagonal_kernel_modulus_and_phase() {
    let (g, theta) = two_vertex(PI_3);
    let v = Potential::zero(&g);
    let e = fki_kernel(&g, &v, &theta, VertexId(0), VertexId(1), 1.0, &McConfig::new(100_000, 3)).unwrap();
    let modulus = (1.0 - (-2.0f64).exp()) / 2.0;
    assert!((modulus - 0.4323324).abs() < 1e-7);
    assert!((e.mean.norm() - modulus).abs() <= 4.0 * e.stderr);
    // phase is exact: every path from 0 to 1 crosses the edge an odd number of times
    assert!((e.mean.arg() - PI_3).abs() <= 4.0 * e.stderr / e.mean.norm());
    assert!((e.mean.arg() - PI_3).abs() < 1e-12);
}

#[test]
fn kernel_diagonal_is_real_without_potential() {
    let (g, theta) = two_vertex(PI_3);
    let v = Potential::zero(&g);
    let e = fki_kernel(&g, &v, &theta, VertexId(0), VertexId(0), 1.0, &McConfig::new(20_000, 4)).unwrap();
    assert!(e.mean.im.abs() <= e.stderr);

    // with flux through a cycle the imaginary part only vanishes on average
    let (g, theta) = fixture(&fixture_specs()[1].1, PI_3);
    let v = Potential::zero(&g);
    let e = fki_kernel(&g, &v, &theta, VertexId(0), VertexId(0), 1.0, &McConfig::new(20_000, 4)).unwrap();
    assert!(e.mean.im.abs() <= 4.0 * e.stderr);
}

#[test]
fn kernel_equilibrates() {
    let (g, theta) = fixture(&fixture_specs()[0].1, 0.0);
    let v = Potential::zero(&g);
    let total: f64 = (0..g.num_vertices()).map(|x| g.m(x)).sum();
    let e = fki_kernel(&g, &v, &theta, VertexId(0), VertexId(4), 50.0, &McConfig::new(20_000, 5)).unwrap();
    assert!(e.agrees_with(c(1.0 / total, 0.0), 4.0), "{e:?}");
}

#[test]
fn trace_values() {
    let (g, theta) = two_vertex(PI_3);
    let v = Potential::zero(&g);
    let host = g.all_vertices();
    let e = fki_trace(&g, &v, &theta, &host, 1.0, &McConfig::new(50_000, 6)).unwrap();
    let expected = 1.0 + (-2.0f64).exp();
    assert!((expected - 1.1353353).abs() < 1e-7);
    assert!(e.agrees_with(c(expected, 0.0), 4.0), "{e:?}");
    assert!(e.mean.im.abs() <= 4.0 * e.stderr);

    // small-time regime on a larger host
    let (g, theta) = fixture(&fixture_specs()[3].1, PI_3);
    let v = mixed_potential(&g);
    let u = VertexSet::new(&g, [0, 1, 3, 4]).unwrap();
    let t = 1e-3;
    let e = fki_trace(&g, &v, &theta, &u, t, &McConfig::new(10_000, 7)).unwrap();
    let bound = u
        .members()
        .iter()
        .map(|&x| g.deg_m(x) + v.at(x).abs())
        .fold(0.0, f64::max);
    let size = u.len() as f64;
    assert!((e.mean.re - size).abs() <= 2.0 * size * t * bound);
    assert!(e.mean.im.abs() <= 4.0 * e.stderr + 1e-12);
}

#[test]
fn stderr_scales_with_inverse_root_n() {
    let (g, theta) = fixture(&fixture_specs()[1].1, PI_3);
    let v = mixed_potential(&g);
    let f = test_function(g.num_vertices());
    let a = fki_semigroup(&g, &v, &theta, &f, VertexId(0), 1.0, &McConfig::new(20_000, 9)).unwrap();
    let b = fki_semigroup(&g, &v, &theta, &f, VertexId(0), 1.0, &McConfig::new(80_000, 9)).unwrap();
    let ratio = b.stderr / a.stderr;
    assert!((0.4..=0.6).contains(&ratio), "ratio {ratio}");
}

#[test]
fn rare_targets_are_flagged() {
    let (g, theta) = fixture(&fixture_specs()[0].1, 0.0);
    let v = Potential::zero(&g);
    let e = fki_kernel(&g, &v, &theta, VertexId(0), VertexId(4), 0.1, &McConfig::new(1_000, 10)).unwrap();
    assert!(e.hits.unwrap() < LOW_HIT_THRESHOLD);
    assert!(e.low_hit_count());
    let e = fki_kernel(&g, &v, &theta, VertexId(0), VertexId(0), 0.1, &McConfig::new(1_000, 10)).unwrap();
    assert!(!e.low_hit_count());
}

#[test]
fn censoring_is_reported_with_bias_bound() {
    let (g, theta) = fixture(&fixture_specs()[1].1, 0.0);
    let v = Potential::constant(&g, -0.5);
    let f = indicator(g.num_vertices(), 0);
    let cfg = McConfig::new(2_000, 12).with_max_jumps(2);
    let e = fki_semigroup(&g, &v, &theta, &f, VertexId(0), 1.0, &cfg).unwrap();
    assert!(e.censored_fraction > 0.1);
    assert!((e.bias_bound - e.censored_fraction * 0.5f64.exp()).abs() < 1e-12);
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let (g, theta) = fixture(&fixture_specs()[3].1, PI_3);
    let v = mixed_potential(&g);
    let f = test_function(g.num_vertices());
    let base = McConfig::new(5_000, 13);
    let reference = fki_semigroup(&g, &v, &theta, &f, VertexId(4), 0.5, &base).unwrap();
    for workers in [1, 2, 3, 8] {
        let e = fki_semigroup(&g, &v, &theta, &f, VertexId(4), 0.5, &base.with_workers(Some(workers))).unwrap();
        assert_eq!(e.mean.re.to_bits(), reference.mean.re.to_bits());
        assert_eq!(e.mean.im.to_bits(), reference.mean.im.to_bits());
        assert_eq!(e.stderr.to_bits(), reference.stderr.to_bits());
    }
}

#[test]
fn constant_estimator_has_negligible_stderr() {
    let (g, theta) = fixture(&fixture_specs()[0].1, 0.0);
    let v = Potential::constant(&g, 0.7);
    let f = vec![c(1.0, 0.0); g.num_vertices()];
    let e = fki_semigroup(&g, &v, &theta, &f, VertexId(2), 1.0, &McConfig::new(1_000, 14)).unwrap();
    approx::assert_relative_eq!(e.mean.re, (-0.7f64).exp(), max_relative = 1e-12);
    assert!(e.stderr <= 1e-15);
}
