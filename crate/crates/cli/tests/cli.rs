use std::path::Path;
use std::process::{Command, Output};

use randcert::bell::{Behavior, Scenario};
use randcert::certificates::Certificate;
use randcert::digp::Solution;
use randcert::solver::import_sdpa;

fn randcert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_randcert"))
        .args(args)
        .env_remove("RANDCERT_SOLVER_SETTINGS")
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn solution(out: &Output) -> Solution {
    Solution::from_json(std::str::from_utf8(&out.stdout).unwrap()).unwrap()
}

#[test]
fn uniform_behavior_file_solves_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("uniform.json");
    std::fs::write(&file, Behavior::uniform(Scenario::chsh()).to_json().unwrap()).unwrap();
    let out = randcert(&["solve", "--behavior", path(&file), "--target", "local:1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!((solution(&out).value - 1.0).abs() < 1e-6);
}

#[test]
fn cglmp_maximal_violation_gives_one_trit() {
    let out = randcert(&[
        "solve", "--model", "cglmp", "--alpha", "0.6169", "--target", "local:1", "--level", "2",
    ]);
    assert!(out.status.success());
    assert!((solution(&out).value - 1.0 / 3.0).abs() < 1e-3);
}

#[test]
fn partially_entangled_instance_by_fraction_and_radians() {
    for theta in [["--theta-frac", "27/200pi"], ["--theta", "0.4241150082346221"]] {
        let mut args = vec!["solve", "--model", "partial", "--v", "0.99", "--target", "global:2,1", "--level", "3"];
        args.extend(theta);
        let out = randcert(&args);
        assert!(out.status.success());
        assert!((solution(&out).value - 0.609).abs() < 0.005);
    }
}

#[test]
fn supra_quantum_data_exits_nonzero() {
    let out = randcert(&["solve", "--model", "pr-box", "--level", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let ns = randcert(&["solve", "--model", "pr-box", "--ns"]);
    assert!(ns.status.success());
    assert!((solution(&ns).value - 0.5).abs() < 1e-8);
}

#[test]
fn malformed_input_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.json");
    std::fs::write(&file, "{\"scenario\": 3}").unwrap();
    assert_eq!(randcert(&["solve", "--behavior", path(&file)]).status.code(), Some(1));
    assert_eq!(randcert(&["solve", "--model", "nope"]).status.code(), Some(1));
    assert_eq!(
        randcert(&["solve", "--model", "uniform", "--target", "local:0"]).status.code(),
        Some(1)
    );
}

#[test]
fn bell_mode_reads_the_value_off_the_model() {
    let implicit = randcert(&["solve", "--model", "chsh-noise", "--v", "0.9", "--mode", "bell:chsh", "--target", "global:1,1"]);
    let value = format!("bell:chsh={}", 0.9 * 2.0 * 2f64.sqrt());
    let explicit = randcert(&["solve", "--mode", &value, "--target", "global:1,1"]);
    let (a, b) = (solution(&implicit).value, solution(&explicit).value);
    assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    let full = solution(&randcert(&["solve", "--model", "chsh-noise", "--v", "0.9", "--target", "global:1,1"])).value;
    assert!(full < a - 1e-4);
}

#[test]
fn sdpa_export_reimports() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("p.dat-s");
    let out = randcert(&["solve", "--model", "chsh-noise", "--v", "0.9", "--export-sdpa", path(&file)]);
    assert!(out.status.success());
    let program = import_sdpa(&std::fs::read_to_string(&file).unwrap()).unwrap();
    assert_eq!(program.num_psd_blocks(), 2);
}

#[test]
fn validate_and_convert() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("p.json");
    let csv = dir.path().join("p.csv");
    let corr = dir.path().join("c.json");
    let back = dir.path().join("back.json");
    let p = randcert::quantum::chsh_noise_behavior(0.8).unwrap();
    std::fs::write(&json, p.to_json().unwrap()).unwrap();
    assert!(randcert(&["validate", "--behavior", path(&json)]).status.success());
    assert!(randcert(&["convert", path(&json), path(&csv)]).status.success());
    assert!(randcert(&["convert", path(&csv), path(&corr), "--to", "correlators"]).status.success());
    assert!(randcert(&["convert", path(&corr), path(&back), "--from", "correlators"]).status.success());
    let q = Behavior::from_json(&std::fs::read_to_string(&back).unwrap()).unwrap();
    assert!(q.max_abs_diff(&p).unwrap() < 1e-15);

    let mut s = Behavior::uniform(Scenario::chsh());
    s.set(0, 0, 0, 0, 0.5);
    s.set(0, 1, 0, 0, 0.0);
    let bad = dir.path().join("signals.json");
    std::fs::write(&bad, serde_json::to_string(&s).unwrap()).unwrap();
    assert_eq!(randcert(&["validate", "--behavior", path(&bad)]).status.code(), Some(1));
}

#[test]
fn certificates_verify_and_reload() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("c.json");
    let out = randcert(&["certificate", "--model", "chsh-noise", "--v", "0.9", "--target", "global:1,1", "--out", path(&file)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut c = Certificate::from_json(&std::fs::read_to_string(&file).unwrap()).unwrap();
    assert!(c.verified);
    c.verify().unwrap();
    assert!(c.verified);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("f22 1.19"), "{stderr}");

    let uniform = randcert(&["certificate", "--model", "uniform", "--out", path(&file)]);
    assert!(uniform.status.success());
    let c = Certificate::from_json(&std::fs::read_to_string(&file).unwrap()).unwrap();
    assert!((c.bound - 1.0).abs() < 1e-6);
}

#[test]
fn unverifiable_certificate_exits_nonzero_unless_tightened() {
    let args = ["certificate", "--model", "chsh-noise", "--v", "1", "--target", "global:1,1"];
    assert_eq!(randcert(&args).status.code(), Some(3));
    let mut tightened = args.to_vec();
    tightened.push("--tighten");
    let out = randcert(&tightened);
    assert!(out.status.success());
    let c = Certificate::from_json(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    assert!(c.verified && (c.bound - 0.42678).abs() < 1e-3);
}

#[test]
fn sweep_csv_is_deterministic_and_ordered() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, svg) = (dir.path().join("a.csv"), dir.path().join("b.csv"), dir.path().join("a.svg"));
    let base = ["sweep", "--experiment", "chsh-noise", "--from", "0.8", "--to", "1", "--step", "0.1"];
    let mut args = base.to_vec();
    args.extend(["--csv", path(&a), "--plot", path(&svg)]);
    assert!(randcert(&args).status.success());
    let mut again = base.to_vec();
    again.extend(["--csv", path(&b)]);
    assert!(randcert(&again).status.success());
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));

    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(
        rdr.headers().unwrap().iter().collect::<Vec<_>>(),
        ["v", "mode", "status", "G", "certificate_bound", "gap"]
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    let keys: Vec<(&str, &str)> = rows.iter().map(|r| (&r[0], &r[1])).collect();
    assert_eq!(
        keys,
        [("0.8", "full"), ("0.8", "chsh-only"), ("0.9", "full"), ("0.9", "chsh-only"), ("1", "full"), ("1", "chsh-only")]
    );
    for pair in rows.chunks(2) {
        let (full, chsh): (f64, f64) = (pair[0][3].parse().unwrap(), pair[1][3].parse().unwrap());
        assert!(full <= chsh + 2e-6);
        let gap: f64 = pair[0][5].parse().unwrap();
        assert!(gap.abs() < 1e-5);
    }
}

#[test]
fn certificate_sweep_tabulates_template_coefficients() {
    let out = randcert(&["certificate", "--target", "global:1,1", "--sweep", "0.9:1:0.1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2);
    let f = |r: &csv::StringRecord, i: usize| r[i].parse::<f64>().unwrap();
    assert!((f(&rows[1], 1) - 1.0).abs() < 0.02 && (f(&rows[1], 2) - 1.0).abs() < 0.02);
    assert!((f(&rows[0], 2) - 1.0).abs() > 0.02);
}

#[test]
fn settings_file_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("s.toml");
    std::fs::write(&file, "[solver]\nmax_iter = 1\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_randcert"))
        .args(["solve", "--model", "chsh-noise", "--v", "0.9"])
        .env("RANDCERT_SOLVER_SETTINGS", &file)
        .output()
        .unwrap();
    assert!(!out.status.success());
    std::fs::write(&file, "[solver]\nbogus = 1\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_randcert"))
        .args(["solve", "--model", "uniform"])
        .env("RANDCERT_SOLVER_SETTINGS", &file)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
