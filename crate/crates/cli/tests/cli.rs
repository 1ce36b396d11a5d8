use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

use projdyn::dynamics::{integrate_constrained, IntegratorOptions};
use projdyn::instances::{random_ellipsoid, random_tangent_state, rng};
use projdyn::problems::neumann_system;
use projdyn_cli::output::read_trajectory;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn projdyn(args: &[&str], out: &Path) -> (i32, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_projdyn"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("run projdyn");
    (
        o.status.code().expect("exit code"),
        String::from_utf8_lossy(&o.stdout).into_owned() + &String::from_utf8_lossy(&o.stderr),
    )
}

fn run_fixture(cmd: &str, name: &str, out: &Path) -> (i32, String) {
    projdyn(&[cmd, "--config", fixture(name).to_str().unwrap()], out)
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

fn columns(path: PathBuf) -> Vec<std::collections::HashMap<String, f64>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let head: Vec<String> = r.headers().unwrap().iter().map(str::to_string).collect();
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            head.iter()
                .zip(rec.iter())
                .filter(|(_, x)| !x.is_empty())
                .map(|(h, x)| (h.clone(), x.parse().unwrap()))
                .collect()
        })
        .collect()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn simulate_free_line_reproduces_the_line() {
    let out = tempfile::tempdir().unwrap();
    let (code, msg) = run_fixture("simulate", "free_line.toml", out.path());
    assert_eq!(code, 0, "{msg}");
    let rows = columns(out.path().join("free_line.csv"));
    assert_eq!(rows.last().unwrap()["t"], 10.0);
    for r in &rows {
        assert!((r["q_0"] - 1.0).abs() <= 1e-12);
        assert!((r["q_1"] - r["t"]).abs() <= 1e-12);
        assert!((r["tau"] - r["t"].atan()).abs() <= 1e-10);
    }
    let text = std::fs::read_to_string(out.path().join("free_line.csv")).unwrap();
    assert!(text.starts_with("t,tau,q_0,q_1,p_0,p_1,h,lambda,energy,eta\n"));
}

#[test]
fn simulate_neumann_conserves_energy() {
    let out = tempfile::tempdir().unwrap();
    assert_eq!(run_fixture("simulate", "neumann.toml", out.path()).0, 0);
    let s = json(out.path().join("neumann.json"));
    assert!(num(&s["drifts"]["energy"]) <= 1e-9, "{s}");
    assert!(num(&s["drifts"]["screen"]) <= 1e-10);
    assert_eq!(num(&s["final_state"]["t"]), 10.0);
    assert!(s["accepted_steps"].as_u64().unwrap() > 0);
}

#[test]
fn simulate_jacobi_conserves_eta() {
    let out = tempfile::tempdir().unwrap();
    assert_eq!(run_fixture("simulate", "jacobi.toml", out.path()).0, 0);
    let s = json(out.path().join("jacobi.json"));
    assert!(num(&s["drifts"]["eta"]) <= 1e-8, "{s}");
    let rows = columns(out.path().join("jacobi.csv"));
    assert!(rows.iter().all(|r| r.contains_key("eta") && r.contains_key("lambda") && !r.contains_key("tau")));
}

#[test]
fn project_line_onto_circle() {
    let out = tempfile::tempdir().unwrap();
    assert_eq!(run_fixture("simulate", "free_line.toml", out.path()).0, 0);
    let (code, msg) = run_fixture("project", "project_line.toml", out.path());
    assert_eq!(code, 0, "{msg}");
    let s = json(out.path().join("line_projected.json"));
    assert!(num(&s["deviation"]["position"]) <= 1e-8, "{s}");
    for r in columns(out.path().join("line_projected.csv")) {
        assert!((r["tau"] - r["t"].atan()).abs() <= 1e-8);
        assert!((r["q_0"] - r["tau"].cos()).abs() <= 1e-8);
        assert!((r["q_1"] - r["tau"].sin()).abs() <= 1e-8);
        // lambda = -h³ḧ for the free line
        assert!((r["lambda"] + 1.0).abs() <= 1e-12);
    }
}

#[test]
fn project_on_screen_source_keeps_time() {
    let out = tempfile::tempdir().unwrap();
    assert_eq!(run_fixture("simulate", "circle.toml", out.path()).0, 0);
    assert_eq!(run_fixture("project", "project_circle.toml", out.path()).0, 0);
    let rows = columns(out.path().join("circle_projected.csv"));
    assert!(rows.len() > 10);
    for r in rows {
        assert!((r["tau"] - r["t"]).abs() <= 1e-12);
        assert!((r["q_0"] - r["t"].cos()).abs() <= 1e-8);
    }
}

#[test]
fn project_braden_matches_neumann() {
    let out = tempfile::tempdir().unwrap();
    assert_eq!(run_fixture("simulate", "braden_free.toml", out.path()).0, 0);
    assert_eq!(run_fixture("project", "project_braden.toml", out.path()).0, 0);
    let s = json(out.path().join("braden_projected.json"));
    assert!(num(&s["deviation"]["position"]) <= 1e-6, "{s}");
    assert!(num(&s["tau_range"][1]) > 0.5);
    assert!(out.path().join("braden_projected_reference.csv").exists());
}

#[test]
fn project_without_source_is_a_config_error() {
    let out = tempfile::tempdir().unwrap();
    assert_eq!(run_fixture("project", "project_line.toml", out.path()).0, 2);
}

#[test]
fn verify_default_suite_passes() {
    let out = tempfile::tempdir().unwrap();
    let (code, msg) = projdyn(&["verify"], out.path());
    assert_eq!(code, 0, "{msg}");
    assert!(msg.contains("9 of 9 criteria passed"));
    let r = json(out.path().join("verify.json"));
    assert_eq!(r["passed"], Value::Bool(true));
    assert_eq!(r["criteria"].as_array().unwrap().len(), 9);
    for c in r["criteria"].as_array().unwrap() {
        for k in c["checks"].as_array().unwrap() {
            assert!(k["value"].is_number() && k["tolerance"].is_number(), "{k}");
        }
    }
}

#[test]
fn verify_with_degree_minus_two_reduction_fails() {
    let out = tempfile::tempdir().unwrap();
    let (code, msg) = run_fixture("verify", "verify_degree_minus_two.toml", out.path());
    assert_eq!(code, 1, "{msg}");
    let r = json(out.path().join("verify.json"));
    let c = &r["criteria"][0];
    assert_eq!(c["key"], "reduction");
    assert_eq!(c["passed"], Value::Bool(false));
    let failed: Vec<_> = c["checks"].as_array().unwrap().iter().filter(|k| k["passed"] == false).collect();
    assert!(failed.iter().any(|k| k["name"].as_str().unwrap().contains("position deviation")));
}

#[test]
fn verify_with_coarse_tolerance_fails_drift_checks() {
    let out = tempfile::tempdir().unwrap();
    let (code, msg) = projdyn(&["verify", "--rtol", "1e-3"], out.path());
    assert_eq!(code, 1, "{msg}");
    let r = json(out.path().join("verify.json"));
    let conservation = r["criteria"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["key"] == "multiplier-energy")
        .unwrap();
    assert_eq!(conservation["passed"], Value::Bool(false));
    assert!(msg.contains("FAIL") && msg.contains("energy drift"));
}

#[test]
fn correspond_chain_closes() {
    let out = tempfile::tempdir().unwrap();
    let (code, msg) = run_fixture("correspond", "correspond.toml", out.path());
    assert_eq!(code, 0, "{msg}");
    let r = json(out.path().join("correspond.json"));
    assert_eq!(num(&r["nu"]), 0.5);
    assert!(num(&r["multiplier_gap"]) <= 1e-7);
    assert!(num(&r["chain_deviation"]["position"]) <= 1e-6);
    assert!(num(&r["eta"]) != 0.0);
    for f in ["_jacobi", "_intermediate", "_projected", "_neumann"] {
        assert!(out.path().join(format!("correspond{f}.csv")).exists());
    }
}

#[test]
fn correspond_without_potential() {
    let out = tempfile::tempdir().unwrap();
    let cfg = write_config(out.path(), "c.toml", "dim = 3\nseed = 17\nnu = 0.0\nt_end = 5.0\n");
    let (code, msg) = projdyn(&["correspond", "--config", &cfg], out.path());
    assert_eq!(code, 0, "{msg}");
    assert!(num(&json(out.path().join("correspond.json"))["multiplier_gap"]) <= 1e-7);
}

#[test]
fn correspond_sphere_case_is_trivial() {
    let out = tempfile::tempdir().unwrap();
    let (code, msg) = run_fixture("correspond", "correspond_sphere.toml", out.path());
    assert_eq!(code, 0, "{msg}");
    let r = json(out.path().join("correspond.json"));
    assert!(num(&r["chain_deviation"]["position"]) <= 1e-8);
}

#[test]
fn identical_runs_write_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert_eq!(run_fixture("simulate", "neumann.toml", d.path()).0, 0);
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("neumann.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    // a different seed gives a different run
    let c = tempfile::tempdir().unwrap();
    let cfg = fixture("neumann.toml");
    assert_eq!(projdyn(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", "8"], c.path()).0, 0);
    assert_ne!(read(&a), read(&c));
}

#[test]
fn csv_reproduces_the_in_memory_run() {
    let out = tempfile::tempdir().unwrap();
    assert_eq!(run_fixture("simulate", "neumann.toml", out.path()).0, 0);
    let data = random_ellipsoid(7, 3).unwrap();
    let s0 = random_tangent_state(&mut rng(7), &data.g_screen(), 1.0).unwrap();
    let traj = integrate_constrained(&neumann_system(&data).unwrap(), &s0, 10.0, &IntegratorOptions::default()).unwrap();
    let back = read_trajectory(&out.path().join("neumann.csv")).unwrap();
    assert_eq!(back.samples, traj.samples());
}

#[test]
fn config_errors_exit_with_two() {
    let out = tempfile::tempdir().unwrap();
    let cases = [
        "problem = \"neumann\"\ndim = 3\nt_end = -1.0\n",
        "problem = \"neumann\"\ndim = 3\nt_end = 1.0\nbogus = 1\n",
        "problem = \"free\"\nt_end = 1.0\nq0 = [1.0, 0.0]\np0 = [0.0, 1.0, 0.0]\n[field]\nkind = \"zero\"\n",
        "problem = \"neumann\"\nt_end = 1.0\ng = [[1.0, 2.0], [0.0, 1.0]]\na = [[1.0, 0.0], [0.0, 1.0]]\n",
        "problem = \"neumann\"\nt_end = 1.0\ng = [[1.0, 0.0], [0.0, 1e-12]]\na = [[1.0, 0.0], [0.0, 1.0]]\n",
        "problem = \"constrained\"\nt_end = 1.0\nq0 = [2.0, 0.0]\np0 = [0.0, 1.0]\n[field]\nkind = \"zero\"\n[screen]\nkind = \"sphere\"\n",
    ];
    for (i, text) in cases.iter().enumerate() {
        let cfg = write_config(out.path(), &format!("bad{i}.toml"), text);
        let (code, msg) = projdyn(&["simulate", "--config", &cfg], out.path());
        assert_eq!(code, 2, "case {i}: {msg}");
        assert!(msg.contains("configuration error"), "case {i}: {msg}");
    }
    assert_eq!(projdyn(&["simulate"], out.path()).0, 2);
    assert_eq!(projdyn(&["simulate", "--config", "/nonexistent.toml"], out.path()).0, 2);
    let cfg = write_config(out.path(), "crit.toml", "[verify]\ncriteria = [\"nope\"]\n");
    assert_eq!(projdyn(&["verify", "--config", &cfg], out.path()).0, 2);
}

#[test]
fn domain_errors_exit_with_three() {
    let out = tempfile::tempdir().unwrap();
    // radial fall into the Kepler singularity
    let cfg = write_config(
        out.path(),
        "fall.toml",
        "problem = \"free\"\nt_end = 10.0\nq0 = [1.0, 0.0]\np0 = [0.0, 0.0]\n[field]\nkind = \"kepler\"\n",
    );
    let (code, msg) = projdyn(&["simulate", "--config", &cfg], out.path());
    assert_eq!(code, 3, "{msg}");
    assert!(msg.contains("t = "), "{msg}");
    // reaction tangent to the screen at the start
    let cfg = write_config(
        out.path(),
        "tangent.toml",
        "problem = \"custom\"\nt_end = 1.0\nq0 = [0.0, 1.0]\np0 = [1.0, 0.0]\n[field]\nkind = \"zero\"\n\
         [screen]\nkind = \"sphere\"\n[reaction]\nkind = \"linear\"\nmatrix = [[0.0, 1.0], [0.0, 0.0]]\n",
    );
    let (code, msg) = projdyn(&["simulate", "--config", &cfg], out.path());
    assert_eq!(code, 3, "{msg}");
    assert!(msg.contains("tangent"), "{msg}");
}

#[test]
fn energy_is_recorded_for_potential_fields() {
    let out = tempfile::tempdir().unwrap();
    let cfg = write_config(
        out.path(),
        "inv.toml",
        "problem = \"constrained\"\nt_end = 10.0\nq0 = [1.0, 0.0, 0.0]\np0 = [0.0, 1.0, 0.0]\n\
         [field]\nkind = \"inverse_quadratic\"\n[screen]\nkind = \"sphere\"\n",
    );
    assert_eq!(projdyn(&["simulate", "--config", &cfg], out.path()).0, 0);
    let rows = columns(out.path().join("run.csv"));
    for r in &rows {
        // multiplier equals −2E for a degree −2 potential
        assert!((r["lambda"] + 2.0 * r["energy"]).abs() <= 1e-8);
    }
    assert!(num(&json(out.path().join("run.json"))["drifts"]["energy"]) <= 1e-9);
}
