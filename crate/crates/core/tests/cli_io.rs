mod common;

use common::*;
use magnetic_fki::graph::{build_graph, EdgeSpec, Potential};
use magnetic_fki::io::{graph_to_json, parse_graph, ParseErrorKind};
use proptest::prelude::*;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_magnetic-fki");

fn cli(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("MAGNETIC_FKI_WORKERS")
        .output()
        .expect("binary runs")
}

fn write_two_vertex(dir: &std::path::Path) -> String {
    let path = dir.join("two.json");
    std::fs::write(
        &path,
        r#"{"vertices":[{"id":0,"m":1.0},{"id":1,"m":1.0}],
            "edges":[{"u":0,"v":1,"b":1.0,"theta":1.0471975511965976}]}"#,
    )
    .unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn expm_csv_diagonal() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write_two_vertex(dir.path());
    let out = cli(&["expm", "--graph", &graph, "--t", "1", "--format", "csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(&headers, vec!["x", "y", "re", "im"]);
    let row = rdr.records().next().unwrap().unwrap();
    assert_eq!((&row[0], &row[1]), ("0", "0"));
    let re: f64 = row[2].parse().unwrap();
    assert!((re - 0.5676676).abs() < 1e-7);
}

#[test]
fn kato_with_reversed_order_is_config_error() {
    let out = cli(&[
        "verify", "kato", "--generator", r#"{"family":"path","n":3}"#, "--v2", "0,1,0",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("vertex 1"), "{err}");
}

#[test]
fn verify_exit_status_tracks_outcome() {
    let ok = cli(&["verify", "identities", "--generator", r#"{"family":"cycle","n":6,"theta":0.5}"#]);
    assert_eq!(ok.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(report["passed"], true);

    // a single-vertex ball cannot reproduce the host semigroup
    let bad = cli(&[
        "verify", "exhaustion", "--generator", r#"{"family":"path","n":5}"#,
        "--radii", "0", "--x", "2", "--f", "indicator:2", "--t", "1",
    ]);
    assert_eq!(bad.status.code(), Some(1), "{}", String::from_utf8_lossy(&bad.stderr));
    let report: serde_json::Value = serde_json::from_slice(&bad.stdout).unwrap();
    assert_eq!(report["passed"], false);
}

#[test]
fn fki_json_is_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for workers in ["1", "3", "8"] {
        let path = dir.path().join(format!("k{workers}.json"));
        let status = Command::new(BIN)
            .args([
                "fki", "trace", "--generator", r#"{"family":"grid","rows":2,"cols":3,"theta":1.0}"#,
                "--t", "0.5", "--n-samples", "3000", "--seed", "77", "-o",
            ])
            .arg(&path)
            .env("MAGNETIC_FKI_WORKERS", workers)
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(std::fs::read(&path).unwrap());
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
    let report: serde_json::Value = serde_json::from_slice(&outputs[0]).unwrap();
    assert_eq!(report["seed"], 77);
    assert!(report["config_hash"].as_str().unwrap().len() == 64);
}

#[test]
fn bad_graph_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"vertices":[{"id":0,"m":1},{"id":1,"m":1}],"edges":[{"u":0,"v":1,"b":1,"theta":3.5}]}"#,
    )
    .unwrap();
    let out = cli(&["spectrum", "--graph", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("theta"));

    let missing = cli(&["spectrum", "--graph", dir.path().join("nope.json").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(3));
}

#[test]
fn parse_errors_are_classified() {
    let theta = parse_graph(
        r#"{"vertices":[{"id":0,"m":1},{"id":1,"m":1}],"edges":[{"u":0,"v":1,"b":1,"theta":3.5}]}"#,
    )
    .unwrap_err();
    assert_eq!(theta.kind, ParseErrorKind::ThetaOutOfRange(3.5));
    assert!(theta.field.as_deref().unwrap().contains("theta"));

    let measure = parse_graph(r#"{"vertices":[{"id":0},{"id":1,"m":1}],"edges":[]}"#).unwrap_err();
    assert_eq!(measure.kind, ParseErrorKind::MissingMeasure);
    assert!(measure.line.is_some());
}

fn json_graph() -> impl Strategy<Value = (Vec<EdgeSpec>, Vec<f64>, Vec<f64>)> {
    (2usize..8).prop_flat_map(|n| {
        (
            proptest::collection::vec((0.01f64..10.0, -std::f64::consts::PI..std::f64::consts::PI), n - 1),
            proptest::collection::vec(1e-3f64..1e3, n),
            proptest::collection::vec(-1e3f64..1e3, n),
        )
            .prop_map(|(edges, m, v)| {
                let edges = edges
                    .into_iter()
                    .enumerate()
                    .map(|(k, (b, th))| EdgeSpec::new(k, k + 1, b, th))
                    .collect();
                (edges, m, v)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn graph_json_round_trip_is_bit_exact((edges, m, v) in json_graph()) {
        let (g, theta) = build_graph(&edges, &m).unwrap();
        let v = Potential::new(&g, v).unwrap();
        let text = graph_to_json(&g, &theta, &v);
        let (g2, theta2, v2) = parse_graph(&text).unwrap();
        prop_assert_eq!(g2.num_vertices(), g.num_vertices());
        for x in 0..g.num_vertices() {
            prop_assert_eq!(g2.m(x).to_bits(), g.m(x).to_bits());
            prop_assert_eq!(v2.at(x).to_bits(), v.at(x).to_bits());
        }
        for ((a, b), (pa, pb)) in g.edges().iter().zip(g2.edges()).zip(theta.edge_phases().iter().zip(theta2.edge_phases())) {
            prop_assert_eq!((a.lo, a.hi), (b.lo, b.hi));
            prop_assert_eq!(a.weight.to_bits(), b.weight.to_bits());
            prop_assert_eq!(pa.to_bits(), pb.to_bits());
        }
        prop_assert_eq!(graph_to_json(&g2, &theta2, &v2), text);
    }
}

#[test]
fn fixture_kernels_from_cli_match_oracle() {
    let out = cli(&[
        "expm", "--generator", r#"{"family":"cycle","n":6,"theta":1.0471975511965976}"#,
        "--potential", "0.5,-0.2,0.1,0,0.3,-0.4", "--t", "0.75", "--format", "csv",
    ]);
    assert!(out.status.success());
    let (g, theta) = fixture(&fixture_specs()[1].1, PI_3);
    let v = Potential::new(&g, vec![0.5, -0.2, 0.1, 0.0, 0.3, -0.4]).unwrap();
    let k = kernel(&g, &v, &theta, &all(&g), 0.75);
    let mut rdr = csv::Reader::from_reader(&out.stdout[..]);
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let x: usize = rec[0].parse().unwrap();
        let y: usize = rec[1].parse().unwrap();
        let z = c(rec[2].parse().unwrap(), rec[3].parse().unwrap());
        assert!((z - k[(x, y)]).norm() < 1e-12);
        rows += 1;
    }
    assert_eq!(rows, 36);
}
