use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pilotwave"))
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin().arg("run").arg(config).arg("--out").arg(out).args(extra).output().unwrap()
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL_TRAJECTORIES: &str = r#"
kind = "trajectories"
seed = 3

[grid]
x = [-10.0, 10.0, 201]

[[initial]]
center = 0.0
width = 1.0
momentum = 0.5

[time]
dt = 0.01
steps = 40
record_every = 10

[ensemble]
size = 200
"#;

#[test]
fn identical_inputs_give_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", SMALL_TRAJECTORIES);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&cfg, &a, &[]).status.success());
    assert!(run(&cfg, &b, &[]).status.success());
    let (mut ra, mut rb) = (report(&a), report(&b));
    for r in [&ra, &rb] {
        assert_eq!(r["status"], "ok");
        assert!(r["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    }
    ra["wall_time_seconds"] = Value::Null;
    rb["wall_time_seconds"] = Value::Null;
    assert_eq!(ra, rb);
    for entry in ra["outputs"].as_array().unwrap() {
        let name = entry["file"].as_str().unwrap();
        let bytes = std::fs::read(a.join(name)).unwrap();
        assert_eq!(bytes, std::fs::read(b.join(name)).unwrap(), "{name}");
        assert_eq!(entry["bytes"].as_u64().unwrap() as usize, bytes.len());
    }
    let c = dir.path().join("c");
    assert!(run(&cfg, &c, &["--seed", "4"]).status.success());
    let rc = report(&c);
    assert_ne!(rc["config_hash"], report(&a)["config_hash"]);
    assert_ne!(std::fs::read(c.join("trajectories.csv")).unwrap(), std::fs::read(a.join("trajectories.csv")).unwrap());
}

#[test]
fn outputs_carry_provenance_headers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", SMALL_TRAJECTORIES);
    let out = dir.path().join("o");
    assert!(run(&cfg, &out, &[]).status.success());
    let r = report(&out);
    let hash = r["config_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert_eq!(r["tool"], "pilotwave");
    assert_eq!(r["kind"], "trajectories");
    assert_eq!(r["seed"], 3);
    let text = std::fs::read_to_string(out.join("trajectories.csv")).unwrap();
    let mut lines = text.lines();
    let first = lines.next().unwrap();
    assert!(first.starts_with("# pilotwave ") && first.contains("kind=trajectories") && first.contains(hash), "{first}");
    assert!(lines.next().unwrap().starts_with("# types: "));
}

#[test]
fn missing_required_key_is_named_once() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", &SMALL_TRAJECTORIES.replace("size = 200", "substeps = 2"));
    let o = run(&cfg, &dir.path().join("o"), &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert_eq!(err.matches("ensemble.size").count(), 1, "{err}");
    assert_eq!(err.lines().filter(|l| l.contains(':') && !l.starts_with("error")).count(), 1, "{err}");
}

#[test]
fn every_problem_is_reported_together() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL_TRAJECTORIES.replace("size = 200", "sise = 200").replace("dt = 0.01", "dt = -0.01");
    let cfg = write(dir.path(), "s.toml", &text);
    let o = bin().arg("validate").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("ensemble.sise: unknown key; did you mean 'ensemble.size'?"), "{err}");
    assert!(err.contains("ensemble.size"), "{err}");
    assert!(err.contains("time.dt"), "{err}");
}

#[test]
fn both_unit_systems_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", &format!("{SMALL_TRAJECTORIES}\n[units.natural]\n\n[units.si]\nhbar = 1.0\n"));
    let o = bin().arg("validate").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("choose one unit system"), "{}", stderr(&o));
}

#[test]
fn dwell_reports_both_estimators() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
kind = "dwell"
seed = 2

[grid]
x = [-20.0, 40.0, 601]

[[initial]]
center = -5.0
width = 1.5
momentum = 4.0

[time]
dt = 0.02
steps = 300

[ensemble]
size = 500

[dwell]
region = [[2.0, 10.0]]
"#;
    let cfg = write(dir.path(), "s.toml", text);
    let out = dir.path().join("o");
    let o = run(&cfg, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = &report(&out)["summary"];
    let t = s["trajectory_estimate"]["value"].as_f64().unwrap();
    let d = s["density_estimate"].as_f64().unwrap();
    let rel = s["relative_difference"].as_f64().unwrap();
    assert!(t > 0.0 && d > 0.0);
    assert!((rel - (t - d).abs() / d).abs() < 1e-9, "{t} {d} {rel}");
    assert!(out.join("dwell.csv").exists() && out.join("occupancy.csv").exists());
}

#[test]
fn oracle_flag_adds_the_trace_distance_series() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
kind = "unravel"

[collision]
theta = 0.3
interval = 0.1

[unravel]
records = 200
horizon = 0.5
state = [0.0, 1.0]
"#;
    let cfg = write(dir.path(), "s.toml", text);
    let plain = dir.path().join("plain");
    assert!(run(&cfg, &plain, &[]).status.success());
    assert!(!plain.join("trace_distance.csv").exists());
    let with = dir.path().join("with");
    assert!(run(&cfg, &with, &["--oracle"]).status.success());
    let series = std::fs::read_to_string(with.join("trace_distance.csv")).unwrap();
    assert_eq!(series.lines().filter(|l| !l.starts_with('#')).count(), 1 + 6);
    assert_ne!(report(&plain)["config_hash"], report(&with)["config_hash"]);
    let capped = text.replace("state = [0.0, 1.0]", "state = [0.0, 1.0]\noracle_cap = 8");
    let cfg = write(dir.path(), "capped.toml", &capped);
    let out = dir.path().join("capped");
    let o = run(&cfg, &out, &["--oracle"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert_eq!(report(&out)["status"], "error");
}

#[test]
fn weak_pointer_in_a_strong_measurement_is_a_regime_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(root().join("scenarios/born_two_level.toml")).unwrap().replace("strength = 7.0", "strength = 1.0");
    let cfg = write(dir.path(), "s.toml", &text);
    let out = dir.path().join("o");
    let o = run(&cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let r = report(&out);
    assert_eq!(r["status"], "error");
    assert!(r["error"].as_str().unwrap().contains("strongmeasure"));
}

#[test]
fn unused_sections_warn() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", &format!("{SMALL_TRAJECTORIES}\n[dwell]\nregion = [[0.0, 1.0]]\n"));
    let o = bin().arg("validate").arg(&cfg).output().unwrap();
    assert!(o.status.success());
    assert!(stderr(&o).contains("warning"), "{}", stderr(&o));
}

#[test]
fn shipped_scenarios_validate() {
    let mut n = 0;
    for entry in std::fs::read_dir(root().join("scenarios")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let o = bin().arg("validate").arg(&path).output().unwrap();
            assert!(o.status.success(), "{}: {}", path.display(), stderr(&o));
            n += 1;
        }
    }
    assert!(n >= 12);
}

#[test]
fn schema_docs_are_current() {
    let o = bin().arg("schema").output().unwrap();
    assert!(o.status.success());
    let docs = std::fs::read_to_string(root().join("docs/scenario-schema.md")).unwrap();
    assert_eq!(String::from_utf8(o.stdout).unwrap(), docs);
}

#[test]
fn evolve_snapshot_round_trips_as_an_initial_state() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
kind = "evolve"

[grid]
x = [-10.0, 10.0, 201]

[[initial]]
center = 0.0
width = 1.0
momentum = 1.0

[time]
dt = 0.01
steps = 20
"#;
    let cfg = write(dir.path(), "a.toml", text);
    let first = dir.path().join("first");
    assert!(run(&cfg, &first, &[]).status.success());
    let resumed = text
        .replace("[[initial]]\ncenter = 0.0\nwidth = 1.0\nmomentum = 1.0\n", "")
        .replace("kind = \"evolve\"", "kind = \"evolve\"\nsnapshot = \"first/final_state.psi\"");
    let cfg = write(dir.path(), "b.toml", &resumed);
    let second = dir.path().join("second");
    let o = run(&cfg, &second, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(report(&second)["summary"]["norm_drift"].as_f64().unwrap() < 1e-10);
}
