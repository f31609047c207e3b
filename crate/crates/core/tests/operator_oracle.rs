mod common;

use common::*;
use magnetic_fki::graph::{build_graph, EdgeSpec, MagneticPotential, Potential, VertexId, VertexSet};
use magnetic_fki::operator::{assemble_finite, class_diagnostic, ground_state_transform, quadratic_form};
use magnetic_fki::graph::{make_exhaustion, BallMetric};
use magnetic_fki::C64;
use nalgebra::DMatrix;
use proptest::prelude::*;

#[test]
fn taylor_oracle_matches_closed_forms() {
    let (g, theta) = build_graph(&[EdgeSpec::new(0, 1, 1.0, 0.9)], &[1.0, 1.0]).unwrap();
    let v = Potential::zero(&g);
    let k = kernel(&g, &v, &theta, &[0, 1], 1.0);
    let e2 = (-2.0f64).exp();
    assert!((k[(0, 0)].re - (1.0 + e2) / 2.0).abs() < 1e-14);
    assert!((k[(0, 1)] - C64::from_polar((1.0 - e2) / 2.0, 0.9)).norm() < 1e-14);
}

#[test]
fn semigroup_matches_oracle_on_fixtures() {
    for (name, spec) in fixture_specs() {
        for phase in [0.0, PI_3] {
            let (g, theta) = fixture(&spec, phase);
            for v in [Potential::zero(&g), mixed_potential(&g)] {
                let subsets = [all(&g), vec![0, 1]];
                for subset in subsets {
                    let u = VertexSet::new(&g, subset.iter().copied()).unwrap();
                    let op = assemble_finite(&g, &v, &theta, &u).unwrap();
                    for t in [0.0, 0.25, 1.0, 3.0] {
                        let ours = op.semigroup(t).unwrap().kernel_values();
                        let reference = kernel(&g, &v, &theta, &subset, t);
                        let err = max_abs_diff(&ours, &reference);
                        assert!(err <= 1e-12 * op.scale().max(1.0), "{name} θ={phase} t={t}: {err}");
                    }
                }
            }
        }
    }
}

#[test]
fn non_uniform_measure_kernel_is_symmetric_up_to_conjugation() {
    let edges = [
        EdgeSpec::new(0, 1, 2.0, 0.4),
        EdgeSpec::new(1, 2, 0.5, -1.2),
        EdgeSpec::new(2, 0, 1.5, 2.0),
        EdgeSpec::new(2, 3, 1.0, 0.0),
    ];
    let (g, theta) = build_graph(&edges, &[0.5, 2.0, 1.0, 3.0]).unwrap();
    let v = Potential::new(&g, vec![0.3, -0.2, 0.0, 1.0]).unwrap();
    let op = assemble_finite(&g, &v, &theta, &g.all_vertices()).unwrap();
    let k = op.semigroup(0.7).unwrap();
    let reference = kernel(&g, &v, &theta, &all(&g), 0.7);
    assert!(max_abs_diff(&k.kernel_values(), &reference) < 1e-12);
    for x in 0..4 {
        for y in 0..4 {
            let a = k.kernel(VertexId(x), VertexId(y));
            let b = k.kernel(VertexId(y), VertexId(x)).conj();
            assert!((a - b).norm() < 1e-13);
        }
    }
}

#[test]
fn resolvent_is_inverse() {
    let (g, theta) = fixture(&fixture_specs()[3].1, PI_3);
    let v = mixed_potential(&g);
    let op = assemble_finite(&g, &v, &theta, &g.all_vertices()).unwrap();
    let lambda = c(1.5, 0.7);
    let r = op.resolvent(lambda).unwrap();
    let h = generator_matrix(&g, &v, &theta, &all(&g));
    let n = g.num_vertices();
    let prod = (h + DMatrix::<C64>::identity(n, n) * lambda) * r.matrix();
    assert!(max_abs_diff(&prod, &DMatrix::identity(n, n)) < 1e-12);
}

#[test]
fn free_kernel_is_positive_and_stochastic() {
    for (_, spec) in fixture_specs() {
        let (g, theta) = fixture(&spec, 0.0);
        let v = Potential::zero(&g);
        let k = assemble_finite(&g, &v, &theta, &g.all_vertices())
            .unwrap()
            .semigroup(0.8)
            .unwrap();
        for x in 0..g.num_vertices() {
            let mut row = 0.0;
            for y in 0..g.num_vertices() {
                let kxy = k.kernel(VertexId(x), VertexId(y));
                assert!(kxy.re > 0.0 && kxy.im.abs() < 1e-15);
                row += kxy.re * g.m(y);
            }
            assert!((row - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn class_diagnostic_on_fixture_balls() {
    let (g, theta) = fixture(&fixture_specs()[3].1, PI_3);
    let v = mixed_potential(&g);
    let exh = make_exhaustion(&g, VertexId(4), &[0.0, 1.0, 2.0], BallMetric::Combinatorial).unwrap();
    let d = class_diagnostic(&g, &v, &theta, &exh, Some(0.5)).unwrap();
    assert_eq!(d.lower_bounds.len(), 3);
    assert!(d.lower_bounds.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    assert!(d.constants.iter().all(|&c| c >= 0.0 && c.is_finite()));
}

#[test]
fn real_ground_state_weights_reduce() {
    let (g, theta) = fixture(&fixture_specs()[0].1, 0.0);
    let v = mixed_potential(&g);
    let op = assemble_finite(&g, &v, &theta, &g.all_vertices()).unwrap();
    let spec = op.spectrum().unwrap();
    let f = op.eigenfunction(&spec, 0).unwrap();
    let gs = ground_state_transform(&g, &theta, &f).unwrap();
    for (e, &w) in g.edges().iter().zip(gs.edge_weights()) {
        let expected = e.weight * f[e.lo].re * f[e.hi].re + e.weight * f[e.lo].im * f[e.hi].im;
        assert!((w - expected).abs() < 1e-15);
    }
    let zero = vec![c(0.0, 0.0); g.num_vertices()];
    assert_eq!(gs.form(&g, &zero, &zero).unwrap(), c(0.0, 0.0));
}

/// Random connected graph: a random tree plus extra edges.
fn graph_strategy() -> impl Strategy<Value = (Vec<EdgeSpec>, Vec<f64>, Vec<f64>)> {
    (2usize..7).prop_flat_map(|n| {
        let parents = proptest::collection::vec(any::<prop::sample::Index>(), n - 1);
        let extra = proptest::collection::vec((0..n, 0..n), 0..4);
        let weights = proptest::collection::vec(0.2f64..3.0, 2 * n + 4);
        let phases = proptest::collection::vec(-3.1f64..3.1, 2 * n + 4);
        let measure = proptest::collection::vec(0.3f64..3.0, n);
        let v = proptest::collection::vec(-2.0f64..2.0, n);
        (parents, extra, weights, phases, measure, v).prop_map(
            move |(parents, extra, weights, phases, measure, v)| {
                let mut edges = Vec::new();
                let mut seen = std::collections::BTreeSet::new();
                for (k, p) in parents.iter().enumerate() {
                    let child = k + 1;
                    let parent = p.index(child);
                    seen.insert((parent, child));
                    edges.push(EdgeSpec::new(parent, child, weights[k], phases[k]));
                }
                for (k, &(a, b)) in extra.iter().enumerate() {
                    let key = (a.min(b), a.max(b));
                    if a != b && seen.insert(key) {
                        let i = n + k;
                        edges.push(EdgeSpec::new(a, b, weights[i], phases[i]));
                    }
                }
                (edges, measure, v)
            },
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn library_semigroup_matches_oracle((edges, measure, v) in graph_strategy(), t in 0.05f64..2.0) {
        let (g, theta) = build_graph(&edges, &measure).unwrap();
        let v = Potential::new(&g, v).unwrap();
        let op = assemble_finite(&g, &v, &theta, &g.all_vertices()).unwrap();
        let ours = op.semigroup(t).unwrap().kernel_values();
        let reference = kernel(&g, &v, &theta, &all(&g), t);
        let scale = op.scale().max(1.0) * (t * (-v.min()).max(0.0)).exp();
        prop_assert!(max_abs_diff(&ours, &reference) <= 1e-11 * scale);
    }

    #[test]
    fn weighted_hermiticity_and_semigroup((edges, measure, v) in graph_strategy(), s in 0.05f64..1.0, t in 0.05f64..1.0) {
        let (g, theta) = build_graph(&edges, &measure).unwrap();
        let v = Potential::new(&g, v).unwrap();
        let op = assemble_finite(&g, &v, &theta, &g.all_vertices()).unwrap();
        let n = g.num_vertices();
        let a = op.matrix();
        for i in 0..n {
            for j in 0..n {
                prop_assert!((a[(i, j)] * g.m(i) - (a[(j, i)] * g.m(j)).conj()).norm() <= 1e-13);
            }
        }
        let spec = op.spectrum().unwrap();
        let ps = op.semigroup_with(&spec, s).unwrap();
        let pt = op.semigroup_with(&spec, t).unwrap();
        let pst = op.semigroup_with(&spec, s + t).unwrap();
        let scale = ((s + t) * (-v.min()).max(0.0)).exp();
        prop_assert!(max_abs_diff(&(ps.matrix() * pt.matrix()), pst.matrix()) <= 1e-10 * scale);
    }

    #[test]
    fn green_identity_and_real_form((edges, measure, v) in graph_strategy(), seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let (g, theta) = build_graph(&edges, &measure).unwrap();
        let v = Potential::new(&g, v).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = g.num_vertices();
        let f: Vec<C64> = (0..n).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let h: Vec<C64> = (0..n).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let r = magnetic_fki::operator::green_identity_residual(&g, &v, &theta, &f, &h).unwrap();
        prop_assert!(r <= 1e-12);
        let q = quadratic_form(&g, &v, &theta, &f, &f).unwrap();
        prop_assert!(q.im.abs() <= 1e-13);
    }

    #[test]
    fn gauge_covariance((edges, measure, v) in graph_strategy(), phi in proptest::collection::vec(-3.0f64..3.0, 7)) {
        let (g, theta) = build_graph(&edges, &measure).unwrap();
        let v = Potential::new(&g, v).unwrap();
        let n = g.num_vertices();
        let gauged = theta.gauge_transform(&g, &phi[..n]).unwrap();
        let host = g.all_vertices();
        let a = assemble_finite(&g, &v, &theta, &host).unwrap().spectrum().unwrap();
        let b = assemble_finite(&g, &v, &gauged, &host).unwrap().spectrum().unwrap();
        for k in 0..n {
            prop_assert!((a.eigenvalues[k] - b.eigenvalues[k]).abs() <= 1e-10);
        }
        // unitary equivalence of kernels
        let ka = kernel(&g, &v, &theta, &all(&g), 0.6);
        let kb = kernel(&g, &v, &gauged, &all(&g), 0.6);
        let mut worst: f64 = 0.0;
        for x in 0..n {
            for y in 0..n {
                worst = worst.max((ka[(x, y)].norm() - kb[(x, y)].norm()).abs());
            }
        }
        prop_assert!(worst <= 1e-12);
    }

    #[test]
    fn kato_domination((edges, measure, v) in graph_strategy(), bump in proptest::collection::vec(0.0f64..2.0, 7), t in 0.1f64..2.0) {
        let (g, theta) = build_graph(&edges, &measure).unwrap();
        let n = g.num_vertices();
        let v2 = Potential::new(&g, v).unwrap();
        let v1 = Potential::new(&g, (0..n).map(|x| v2.at(x) + bump[x]).collect()).unwrap();
        let zero = MagneticPotential::zero(&g);
        let k1 = kernel(&g, &v1, &theta, &all(&g), t);
        let k2 = kernel(&g, &v2, &zero, &all(&g), t);
        for x in 0..n {
            for y in 0..n {
                prop_assert!(k1[(x, y)].norm() <= k2[(x, y)].re + 1e-12);
            }
        }
        let r = magnetic_fki::inequalities::check_kato(&g, &v1, &v2, &theta, &g.all_vertices(), &[t], &[1.0 - v2.min()]).unwrap();
        prop_assert!(r.passed, "{:?}", r.witnesses);
    }
}
