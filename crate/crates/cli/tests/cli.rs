use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sep2m_cli::format::{self, MatrixFile};
use sep2m_core::hierarchy::verify_certificate;
use sep2m_core::linalg::{hermitian_eig, DEFAULT_EIG_TOL};
use serde_json::Value;
use tempfile::TempDir;

fn sep2m(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sep2m"))
        .args(args)
        .env("SEP2M_LOG", "quiet")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_str(&stdout(o)).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

fn gen(dir: &TempDir, name: &str, args: &[&str]) -> PathBuf {
    let path = dir.path().join(name);
    let mut full = vec!["gen"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", path.to_str().unwrap()]);
    let o = sep2m(&full);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    path
}

fn write_witness(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn scalar_witness(p: f64, q: f64, r: f64) -> String {
    format!(r#"{{"M": 1, "kind": "witness", "P": [[[{p}, 0]]], "Q": [[[{q}, 0]]], "R": [[[{r}, 0]]]}}"#)
}

const IDENTITY_2: &str = r#"{"M": 2, "kind": "witness",
  "P": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]],
  "Q": [[[0, 0], [0, 0]], [[0, 0], [0, 0]]],
  "R": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]}"#;

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn check_max_mixed_certifies_at_level_one() {
    let dir = TempDir::new().unwrap();
    let f = gen(&dir, "mm.json", &["--kind", "max-mixed", "--m", "2"]);
    let o = sep2m(&["check", s(&f), "--levels", "1"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("certified at n=1"));
}

#[test]
fn check_bell_is_inconclusive_with_three_gaps() {
    let dir = TempDir::new().unwrap();
    let f = gen(&dir, "bell.json", &["--kind", "bell"]);
    let o = sep2m(&["check", s(&f), "--levels", "3", "--json"]);
    assert_eq!(code(&o), 1);
    let v = json(&o);
    let levels = v["levels"].as_array().unwrap();
    assert_eq!(levels.len(), 3);
    for l in levels {
        assert_eq!(l["status"], "undetermined");
        assert!(l["gap"].as_f64().unwrap() > 1e-3);
    }
    assert!(v["certificate"].is_null());
}

#[test]
fn input_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let f = gen(&dir, "bell.json", &["--kind", "bell"]);
    let text = std::fs::read_to_string(&f).unwrap();
    let cut = dir.path().join("cut.json");
    std::fs::write(&cut, &text[..text.len() / 2]).unwrap();
    let o = sep2m(&["check", s(&cut)]);
    assert_eq!(code(&o), 2);
    assert!(!o.stderr.is_empty());
    assert_eq!(code(&sep2m(&["ppt", s(&dir.path().join("missing.json"))])), 2);
    let w = write_witness(&dir, "w.json", IDENTITY_2);
    assert_eq!(code(&sep2m(&["check", s(&w)])), 2, "witness given where a state is expected");
    let rows = write_witness(&dir, "rows.json", r#"{"M": 1, "kind": "state", "rho": [[[1, 0], [0, 0]], [[0, 0]]]}"#);
    assert_eq!(code(&sep2m(&["ppt", s(&rows)])), 2);
    let nan = write_witness(&dir, "nan.json", r#"{"M": 1, "kind": "state", "rho": [[[1, 0], [0, 0]], [[0, 0], [1e999, 0]]]}"#);
    assert_eq!(code(&sep2m(&["ppt", s(&nan)])), 2);
}

#[test]
fn ppt_values() {
    let dir = TempDir::new().unwrap();
    let cases = [
        (gen(&dir, "bell.json", &["--kind", "bell"]), 1, -0.5),
        (gen(&dir, "werner.json", &["--kind", "werner", "--p", "0.2"]), 0, 0.1),
        (gen(&dir, "mm.json", &["--kind", "max-mixed", "--m", "3"]), 0, 1.0 / 6.0),
    ];
    for (f, expect_code, expect) in cases {
        let o = sep2m(&["ppt", s(&f), "--json"]);
        assert_eq!(code(&o), expect_code);
        let v = json(&o)["value"].as_f64().unwrap();
        assert!((v - expect).abs() < 1e-9, "{v} vs {expect}");
    }
}

#[test]
fn witness_examples() {
    let dir = TempDir::new().unwrap();
    let id = write_witness(&dir, "id.json", IDENTITY_2);
    assert_eq!(code(&sep2m(&["witness", s(&id)])), 0);

    let bad = write_witness(&dir, "q2.json", &scalar_witness(1.0, 2.0, 1.0));
    let o = sep2m(&["witness", s(&bad), "--json"]);
    assert_eq!(code(&o), 1);
    // min over z of |z|² + 2(z + z̄) + 1 = t² − 4t + 1 is −3 at z = −2.
    let min = json(&o)["grid"]["min_value"].as_f64().unwrap();
    assert!((min + 3.0).abs() < 1e-6, "{min}");

    let edge = write_witness(&dir, "q1.json", &scalar_witness(1.0, 1.0, 1.0));
    for n in ["1", "2", "4"] {
        assert_eq!(code(&sep2m(&["witness", s(&edge), "--levels", n])), 0, "levels {n}");
    }
    assert_eq!(code(&sep2m(&["witness", s(&edge), "--grid", "0,4"])), 2);
}

#[test]
fn gen_outputs() {
    let dir = TempDir::new().unwrap();
    let bell = gen(&dir, "bell.json", &["--kind", "bell"]);
    let MatrixFile::State(rho) = format::read(&bell).unwrap() else { panic!() };
    assert!((rho.trace() - 1.0).abs() < 1e-15);
    let eig = hermitian_eig(rho.rho(), DEFAULT_EIG_TOL).unwrap().eigenvalues;
    assert_eq!(eig.iter().filter(|&&e| e.abs() > 1e-12).count(), 1);

    let a = gen(&dir, "a.json", &["--kind", "random-separable", "--seed", "7", "--m", "3"]);
    let b = gen(&dir, "b.json", &["--kind", "random-separable", "--seed", "7", "--m", "3"]);
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    assert!(String::from_utf8(ta).unwrap().contains("\"seed\": 7"));
    let c = gen(&dir, "c.json", &["--kind", "random-separable", "--seed", "8", "--m", "3"]);
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());

    assert_eq!(code(&sep2m(&["gen", "--kind", "werner", "--p", "1.5"])), 2);
    assert_eq!(code(&sep2m(&["gen", "--kind", "werner"])), 2);
    assert_eq!(code(&sep2m(&["gen", "--kind", "bell", "--m", "3"])), 2);
    assert_eq!(code(&sep2m(&["gen", "--kind", "product", "--x", "1,0;0,0", "--y", "0,0"])), 2);
    assert_eq!(code(&sep2m(&["gen", "--kind", "bell", "--mix", "2"])), 2);
}

#[test]
fn gen_round_trip_is_bit_exact() {
    let dir = TempDir::new().unwrap();
    let a = gen(&dir, "a.json", &["--kind", "random-separable", "--seed", "3", "--m", "4", "--mix", "0.1"]);
    let file = format::read(&a).unwrap();
    let again = format::render(&file, &[("seed", "3".into())]);
    assert_eq!(std::fs::read_to_string(&a).unwrap(), again);
    assert_eq!(format::parse(&again).unwrap(), file);
}

#[test]
fn pair_examples() {
    let dir = TempDir::new().unwrap();
    let mm = gen(&dir, "mm.json", &["--kind", "max-mixed", "--m", "2"]);
    let id = write_witness(&dir, "id.json", IDENTITY_2);
    let o = sep2m(&["pair", s(&mm), s(&id), "--json"]);
    assert_eq!(code(&o), 0);
    assert!((json(&o)["value"].as_f64().unwrap() - 1.0).abs() < 1e-14);

    // ρ = E₁₁ ⊗ e₁e₁† picks out P₀₀.
    let e = gen(&dir, "e.json", &["--kind", "product", "--x", "1,0;0,0", "--y", "1,0;0,0"]);
    let w = write_witness(
        &dir,
        "w.json",
        r#"{"M": 2, "kind": "witness",
  "P": [[[0.7, 0], [0.2, 0.1]], [[0.2, -0.1], [3, 0]]],
  "Q": [[[5, 1], [2, 0]], [[0, 4], [1, 1]]],
  "R": [[[9, 0], [0, 0]], [[0, 0], [9, 0]]]}"#,
    );
    let v = json(&sep2m(&["pair", s(&e), s(&w), "--json"]))["value"].as_f64().unwrap();
    assert!((v - 0.7).abs() < 1e-14, "{v}");

    let q1 = write_witness(&dir, "q1.json", &scalar_witness(1.0, 1.0, 1.0));
    assert_eq!(code(&sep2m(&["pair", s(&mm), s(&q1)])), 2);
}

#[test]
fn bell_candidate_witness_pairs_negatively() {
    let dir = TempDir::new().unwrap();
    let bell = gen(&dir, "bell.json", &["--kind", "bell"]);
    let w = dir.path().join("cand.json");
    let o = sep2m(&["check", s(&bell), "--levels", "2", "--emit-witness", s(&w)]);
    assert_eq!(code(&o), 1);
    let o = sep2m(&["pair", s(&bell), s(&w), "--json"]);
    let v = json(&o)["value"].as_f64().unwrap();
    assert!(v < -1e-3, "{v}");

    // Independent trace: sum over entries of ρ_ij σ_ji.
    let MatrixFile::State(rho) = format::read(&bell).unwrap() else { panic!() };
    let MatrixFile::Witness(wt) = format::read(&w).unwrap() else { panic!() };
    let sigma = wt.sigma();
    let mut direct = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            direct += (rho.rho()[(i, j)] * sigma[(j, i)]).re;
        }
    }
    assert!((v - direct).abs() < 1e-12);
}

#[test]
fn emitted_certificate_reverifies() {
    let dir = TempDir::new().unwrap();
    let st = gen(&dir, "st.json", &["--kind", "random-separable", "--seed", "11", "--m", "2", "--mix", "0.3"]);
    let cert = dir.path().join("cert.json");
    let o = sep2m(&["check", s(&st), "--emit-certificate", s(&cert), "--json"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let v = json(&o);
    let MatrixFile::State(rho) = format::read(&st).unwrap() else { panic!() };
    let MatrixFile::Certificate(c) = format::read(&cert).unwrap() else { panic!() };
    assert_eq!(Some(c.level() as u64), v["level"].as_u64());
    let rep = verify_certificate(&rho, &c, 1e-7, 1e-9).unwrap();
    assert!(rep.passed, "{rep:?}");
    assert!(rep.a_error.max(rep.b_error).max(rep.d_error) <= 1e-7);
    let text = std::fs::read_to_string(&cert).unwrap();
    assert_eq!(v["certificate"]["sha256"], sep2m_cli::report::sha256_hex(&text));
}

#[test]
fn thread_count_does_not_change_the_report() {
    let dir = TempDir::new().unwrap();
    let st = gen(&dir, "st.json", &["--kind", "random-separable", "--seed", "5", "--m", "2", "--mix", "0.05"]);
    let one = json(&sep2m(&["check", s(&st), "--json", "--threads", "1"]));
    let three = json(&sep2m(&["check", s(&st), "--json", "--threads", "3"]));
    assert_eq!(one["verdict"], three["verdict"]);
    assert_eq!(one["levels"], three["levels"]);
    assert_eq!(one["certificate"]["sha256"], three["certificate"]["sha256"]);
}

fn keys(v: &Value) -> Vec<String> {
    let mut k: Vec<String> = v.as_object().unwrap().keys().cloned().collect();
    k.sort();
    k
}

fn golden(name: &str) -> Vec<String> {
    let text = include_str!("fixtures/report_schema.json");
    let v: Value = serde_json::from_str(text).unwrap();
    v[name].as_array().unwrap().iter().map(|s| s.as_str().unwrap().to_string()).collect()
}

#[test]
fn json_report_schema_matches_golden_file() {
    let dir = TempDir::new().unwrap();
    let mm = gen(&dir, "mm.json", &["--kind", "max-mixed", "--m", "2"]);
    let v = json(&sep2m(&["check", s(&mm), "--json"]));
    assert_eq!(keys(&v), golden("report"));
    assert_eq!(keys(&v["levels"][0]), golden("level"));
    assert_eq!(keys(&v["certificate"]), golden("certificate"));
    assert_eq!(keys(&v["config"]), golden("check_config"));
    assert_eq!(v["tool"], "sep2m");
    assert_eq!(v["verdict"], "certified at n=1");

    let id = write_witness(&dir, "id.json", IDENTITY_2);
    let w = json(&sep2m(&["witness", s(&id), "--json", "--levels", "1"]));
    assert_eq!(keys(&w), golden("report"));
    assert_eq!(keys(&w["grid"]), golden("grid"));

    let p = json(&sep2m(&["ppt", s(&mm), "--json"]));
    assert_eq!(keys(&p), golden("report"));
}

#[test]
fn unknown_subcommand_and_flags_are_rejected() {
    assert_eq!(code(&sep2m(&["solve"])), 2);
    assert_eq!(code(&sep2m(&["gen", "--kind", "ghz"])), 2);
}
