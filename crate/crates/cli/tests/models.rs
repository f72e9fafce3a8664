mod common;

use common::{f, model, ok, prob, run, run_with_env, write};

const CHAIN: &str = r#"{
  "version": 1,
  "kind": "cbn",
  "variables": [{"name": "A", "card": 2}, {"name": "B", "card": 2}],
  "edges": [EDGES],
  "cpts": [
    {"node": "A", "table": [0.5, 0.5]},
    {"node": "B", "parents": ["A"], "table": [0.9, 0.1, TABLE]}
  ]
}"#;

fn chain(edges: &str, table: &str) -> String {
    CHAIN.replace("EDGES", edges).replace("TABLE", table)
}

#[test]
fn shipped_models_validate() {
    for entry in std::fs::read_dir(common::models()).unwrap() {
        let path = entry.unwrap().path();
        let v = ok(["model", "validate", path.to_str().unwrap()]);
        assert_eq!(v["ok"], true, "{}", path.display());
    }
}

#[test]
fn validate_reports_order_and_regimes() {
    let v = ok(["model", "validate", &model("iv_observational.json")]);
    let order: Vec<&str> = v["topological_order"].as_array().unwrap().iter().map(|s| s.as_str().unwrap()).collect();
    let pos = |n| order.iter().position(|&o| o == n).unwrap();
    assert!(pos("Z") < pos("X") && pos("U") < pos("X") && pos("X") < pos("Y"));
    assert_eq!(v["regime_nodes"].as_array().unwrap().len(), 0);

    let v = ok(["model", "validate", &model("iv_intervention.json")]);
    assert_eq!(v["regime_nodes"], serde_json::json!(["X", "Z"]));
}

#[test]
fn validate_rejects_bad_models() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.json", &chain(r#"{"from": "A", "to": "B"}"#, "0.2, 0.8"));
    ok(["model", "validate", &good]);

    let cases = [
        ("cycle.json", chain(r#"{"from": "A", "to": "B"}, {"from": "B", "to": "A"}"#, "0.2, 0.8"), "cycle_detected"),
        ("sum.json", chain(r#"{"from": "A", "to": "B"}"#, "0.2, 0.81"), "invalid_model"),
        ("missing_edge.json", chain("", "0.2, 0.8"), "invalid_model"),
        ("bad_state.json", chain(r#"{"from": "A", "to": "C"}"#, "0.2, 0.8"), "unknown_variable"),
        (
            "version.json",
            chain(r#"{"from": "A", "to": "B"}"#, "0.2, 0.8").replace(r#""version": 1"#, r#""version": 2"#),
            "invalid_model",
        ),
        (
            "unknown_field.json",
            chain(r#"{"from": "A", "to": "B"}"#, "0.2, 0.8").replace(r#""kind""#, r#""colour": 1, "kind""#),
            "invalid_model",
        ),
    ];
    for (name, text, kind) in cases {
        let path = write(dir.path(), name, &text);
        let r = run(["model", "validate", &path]);
        assert_eq!(r.code, 2, "{name}: {}", r.json);
        assert_eq!(r.json["error"]["kind"], kind, "{name}");
        assert!(!r.stderr.is_empty());
    }
    let r = run(["model", "validate", "/nonexistent/model.json"]);
    assert_eq!(r.code, 2);
}

#[test]
fn query_conditions_and_intervenes() {
    let m = model("iv_intervention.json");
    let v = ok(["query", &m, "--target", "Y", "--do", "X=1"]);
    // U ~ (0.6, 0.4): 0.6 * 0.6 + 0.4 * 0.8
    assert!((prob(&v, "Y", "1") - 0.68).abs() < 1e-12);

    let v = ok(["query", &m, "--target", "X", "--evidence", "Z=1"]);
    assert!((prob(&v, "X", "1") - (0.6 * 0.7 + 0.4 * 0.9)).abs() < 1e-12);

    let v = ok(["query", &m, "--target", "X,Y"]);
    let total: f64 = v["distribution"].as_array().unwrap().iter().map(|e| f(&e["p"])).sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert_eq!(v["distribution"].as_array().unwrap().len(), 4);
}

#[test]
fn instrument_marginal_is_invariant_to_intervention() {
    let m = model("iv_intervention.json");
    let idle = prob(&ok(["query", &m, "--target", "Z"]), "Z", "1");
    for x in ["0", "1"] {
        let set = prob(&ok(["query", &m, "--target", "Z", "--do", &format!("X={x}")]), "Z", "1");
        assert!((set - idle).abs() < 1e-12);
    }
    // Conditioning on X, unlike setting it, moves Z.
    let seen = prob(&ok(["query", &m, "--target", "Z", "--evidence", "X=1"]), "Z", "1");
    assert!((seen - idle).abs() > 0.05);
}

#[test]
fn query_errors() {
    let m = model("iv_intervention.json");
    let r = run(["query", &m, "--target", "Y", "--do", "Y=1"]);
    assert_eq!((r.code, r.json["error"]["kind"].as_str()), (2, Some("invalid_query")));
    let r = run(["query", &m, "--target", "Y", "--evidence", "X=2"]);
    assert_eq!(r.code, 2);
    let r = run(["query", &m, "--target", "W"]);
    assert_eq!(r.code, 2);

    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "point.json", &chain(r#"{"from": "A", "to": "B"}"#, "0.2, 0.8").replace("[0.5, 0.5]", "[1.0, 0.0]"));
    let r = run(["query", &path, "--target", "B", "--evidence", "A=1"]);
    assert_eq!((r.code, r.json["error"]["kind"].as_str()), (3, Some("zero_mass")));
}

#[test]
fn idle_query_matches_sample_frequencies() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let m = model("iv_intervention.json");
    ok(["simulate", &m, "-n", "100000", "--seed", "11", "-o", out.to_str().unwrap()]);
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let (ix, iy) = (
        headers.iter().position(|h| h == "X").unwrap(),
        headers.iter().position(|h| h == "Y").unwrap(),
    );
    let mut n = [[0.0f64; 2]; 2];
    let mut rows = 0.0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        n[rec[ix].parse::<usize>().unwrap()][rec[iy].parse::<usize>().unwrap()] += 1.0;
        rows += 1.0;
    }
    assert_eq!(rows, 100000.0);
    let v = ok(["query", &m, "--target", "Y"]);
    assert!(((n[0][1] + n[1][1]) / rows - prob(&v, "Y", "1")).abs() < 0.01);
    let v = ok(["query", &m, "--target", "Y", "--evidence", "X=1"]);
    assert!((n[1][1] / (n[1][0] + n[1][1]) - prob(&v, "Y", "1")).abs() < 0.01);
}

#[test]
fn dsep_on_instrument_graph() {
    let m = model("iv_observational.json");
    let sep = |a: &str, b: &str, given: &str| {
        ok(["dsep", &m, "--a", a, "--b", b, "--given", given])["d_separated"].as_bool().unwrap()
    };
    assert!(sep("Z", "U", ""));
    assert!(sep("Y", "Z", "X,U"));
    assert!(!sep("Y", "Z", "X"));
    assert!(!sep("Z", "U", "X"));
    assert!(!sep("Z", "Y", ""));
    let r = run(["dsep", &m, "--a", "Z", "--b", "W"]);
    assert_eq!((r.code, r.json["error"]["kind"].as_str()), (2, Some("unknown_variable")));
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let path = |n: &str| dir.path().join(n).display().to_string();
    let m = model("confounded.json");
    ok(["simulate", &m, "-n", "500", "--seed", "4", "-o", &path("a.csv")]);
    ok(["simulate", &m, "-n", "500", "--seed", "4", "-o", &path("b.csv")]);
    ok(["simulate", &m, "-n", "500", "--seed", "5", "-o", &path("c.csv")]);
    let r = run_with_env(["simulate", &m, "-n", "500", "-o", &path("d.csv")], &[("COE_LAB_SEED", "4")]);
    assert_eq!(r.code, 0);
    assert_eq!(r.json["seed"], 4);
    let read = |n: &str| std::fs::read_to_string(path(n)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_eq!(read("a.csv"), read("d.csv"));
    assert_ne!(read("a.csv"), read("c.csv"));

    let v = ok(["simulate", &m, "-n", "1", "-o", &path("one.csv")]);
    assert_eq!(v["rows"], 1);
    assert_eq!(read("one.csv").lines().count(), 2);
}

#[test]
fn simulated_structural_model_follows_its_equations() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("iv.csv");
    ok(["simulate", &model("iv_scm.json"), "-n", "2000", "--seed", "1", "-o", out.to_str().unwrap()]);
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["U", "X", "Y", "Z"]);
    for rec in rdr.records() {
        let r: Vec<usize> = rec.unwrap().iter().map(|v| v.parse().unwrap()).collect();
        let (u, x, y, z) = (r[0], r[1], r[2], r[3]);
        let expect_x = match u / 2 {
            0 => z,
            1 => 1,
            _ => 0,
        };
        let expect_y = if u % 2 == 0 { x } else { 1 };
        assert_eq!((x, y), (expect_x, expect_y));
    }
}
