use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dualplan"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn config_echo_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let forest = scenario("forest.toml");
    let out = run(&[
        "run",
        "--scenario",
        forest.to_str().unwrap(),
        "--seeds",
        "2,4",
        "--set",
        "sim.max_time=3",
        "--set",
        "planner.r=6.5",
        "--out",
        a.to_str().unwrap(),
    ]);
    // not reaching the goal in 3 s is an unsuccessful run
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    let echo = a.join("config.toml");
    assert!(read(&echo).contains("# seeds: 2,4"));
    let out = run(&["run", "--scenario", echo.to_str().unwrap(), "--seeds", "2,4", "--out", b.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(read(&a.join("metrics.csv")), read(&b.join("metrics.csv")));
    for k in [2, 4] {
        let f = format!("trajectories/seed_{k}.csv");
        assert_eq!(read(&a.join(&f)), read(&b.join(&f)));
    }
    let metrics = read(&a.join("metrics.csv"));
    assert_eq!(metrics.lines().count(), 3);
    let cycles = read(&a.join("cycles.jsonl"));
    assert!(cycles.lines().all(|l| l.starts_with('{') && l.contains("\"seed\":")));
}

#[test]
fn completed_episode_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["run", "--scenario", scenario("empty.toml").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(read(&dir.path().join("metrics.csv")).lines().nth(1).unwrap().contains(",true,"));
}

#[test]
fn scenario_errors_exit_two_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[world]\nkind = \"empty\"\nlength = 4.0\n[planner]\nfoo = 1\n").unwrap();
    let out = run(&["run", "--scenario", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 5, column 1"), "{err}");

    let out = run(&["run", "--scenario", scenario("empty.toml").to_str().unwrap(), "--set", "planner.alpha=0.2"]);
    assert_eq!(out.status.code(), Some(2));
}

const DUMP: &str = "%%miqp 1
matrix H 1 1 1
1 1 2.0
vector g 1
-2.0
matrix Aeq 0 1 0
vector beq 0
matrix Ain 0 1 0
vector bin 0
indicator 0 0
matrix A 1 1 1
1 1 1.0
vector c 1
0.5
vector M 1
100.0
indicator 0 1
matrix A 1 1 1
1 1 -1.0
vector c 1
-2.0
vector M 1
100.0
cover 0 1
end
";

#[test]
fn solve_file_reports_optimum_and_parse_errors() {
    let dir = tempfile::tempdir().unwrap();
    // min x² − 2x with x ≤ 0.5 or x ≥ 2: the first piece wins at x = 0.5
    let good = dir.path().join("p.miqp");
    std::fs::write(&good, DUMP).unwrap();
    let out = run(&["solve-file", good.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("status: Optimal"), "{text}");
    assert!(text.contains("assignment: [0]"), "{text}");
    assert!(text.contains("objective: -0.750000"), "{text}");

    let bad = dir.path().join("bad.miqp");
    std::fs::write(&bad, DUMP.replacen("-2.0\n", "abc\n", 1)).unwrap();
    let out = run(&["solve-file", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 5, column 1"));
}

#[test]
fn seed_ranges_are_validated() {
    let out = run(&["run", "--scenario", scenario("empty.toml").to_str().unwrap(), "--seeds", "5..1"]);
    assert_eq!(out.status.code(), Some(2));
}
