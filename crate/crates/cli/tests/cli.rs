use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "\
[mesh]
kind = channel
length = 1.0
height = 0.5
divisions = 8,4

[physics]
alpha = 0.05
mu = 0.01

[time]
t_end = 0.2
dt = 0.01
sample = 0.02

[inflow]
profile = parabolic2d
height = 0.5
time = rise-decay
tau = 0.1

[pod]
ranks = 3,3,3,2
";

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_leray-rom"))
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .args(args)
        .output()
        .unwrap()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.cfg"), SMALL).unwrap();
    dir
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn full_run_then_everything_is_up_to_date() {
    let dir = setup();
    let o = run(dir.path(), &["--config", "small.cfg", "--workspace", "ws", "run"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let ws = dir.path().join("ws");
    for f in ["mesh/mesh.txt", "fom/snapshots/v.field", "pod/eigen_v.csv", "offline/operators.lrop", "online/trajectory.csv", "report/errors.csv", "report/summary.txt"] {
        assert!(ws.join(f).is_file(), "missing {f}");
    }
    let before = std::fs::read(ws.join("report/errors.csv")).unwrap();
    let o = run(dir.path(), &["--config", "small.cfg", "--workspace", "ws", "report"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("up to date"));
    assert!(String::from_utf8_lossy(&o.stdout).contains("E_v"), "summary printed");
    assert_eq!(std::fs::read(ws.join("report/errors.csv")).unwrap(), before);
}

#[test]
fn stages_need_their_inputs() {
    let dir = setup();
    let o = run(dir.path(), &["--config", "small.cfg", "--workspace", "ws", "pod"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("run `mesh` first"), "{}", stderr(&o));
    assert!(run(dir.path(), &["--config", "small.cfg", "--workspace", "ws", "mesh"]).status.success());
    let o = run(dir.path(), &["--config", "small.cfg", "--workspace", "ws", "pod"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("run `fom` first"), "{}", stderr(&o));
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = setup();
    let o = run(dir.path(), &["--config", "small.cfg", "--set", "physics.mu=-1", "config"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("physics.mu"));
    std::fs::write(dir.path().join("bad.cfg"), "[physics]\nalpha = 0.1\ncolour = red\n").unwrap();
    let o = run(dir.path(), &["--config", "bad.cfg", "config"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
    let o = run(dir.path(), &["--config", "small.cfg", "sweep", "--jobs", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_prints_resolved_values() {
    let dir = setup();
    let o = run(dir.path(), &["--config", "small.cfg", "--set", "physics.alpha=0.02", "config"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("alpha = 0.02"));
    assert!(text.contains("ranks = 3,3,3,2"));
    std::fs::write(dir.path().join("again.cfg"), &text).unwrap();
    let o = run(dir.path(), &["--config", "again.cfg", "config"]);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), text);
}

/// A sweep with one training radius equal to the held-out one reproduces
/// the plain pipeline.
#[test]
fn single_point_sweep_matches_the_plain_run() {
    let dir = setup();
    let args = ["--config", "small.cfg", "--workspace", "ws", "--set", "physics.alphas=0.05"];
    assert!(run(dir.path(), &[&args[..], &["run"]].concat()).status.success());
    let o = run(dir.path(), &[&args[..], &["sweep", "--jobs", "2"]].concat());
    assert!(o.status.success(), "{}", stderr(&o));
    let ws = dir.path().join("ws");
    for f in ["offline/operators.lrop", "online/trajectory.csv", "report/errors.csv"] {
        assert_eq!(std::fs::read(ws.join(f)).unwrap(), std::fs::read(ws.join("sweep").join(f)).unwrap(), "{f}");
    }
    let table = std::fs::read_to_string(ws.join("sweep/sweep.csv")).unwrap();
    assert!(table.starts_with("alpha,role,Ev,Eu,Eq,Eqbar\n"));
}
