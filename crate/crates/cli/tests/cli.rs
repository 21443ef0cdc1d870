use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn planbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_planbench"))
        .args(args)
        .env("PLANBENCH_WORKERS", "2")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn plan_exit_codes() {
    let params = data().join("params/default.yaml");
    let solved = planbench(&[
        "plan",
        "--scenario",
        s(&data().join("scenarios/shelf_reach.scenario")),
        "--planner",
        "rrt-connect",
        "--params",
        s(&params),
        "--seed",
        "3",
    ]);
    assert_eq!(solved.status.code(), Some(0), "{}", stdout(&solved));
    let text = stdout(&solved);
    assert!(text.contains("status: solved (forward)"));
    assert!(text.contains("cost: "));
    assert!(text.contains("time_s: "));

    for planner in ["rrt-connect", "ara-star"] {
        let out = planbench(&[
            "plan",
            "--scenario",
            s(&data().join("scenarios/start_in_collision.scenario")),
            "--planner",
            planner,
        ]);
        assert_eq!(out.status.code(), Some(2));
        assert!(stdout(&out).contains("unsolvable"));
    }
}

#[test]
fn plan_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let robot = fs::canonicalize(data().join("robots/point3.yaml")).unwrap();
    // a wall across the whole workspace between start and goal
    let text = format!(
        "name: sealed
robot: {}
start: [-1.0, 0.0, 0.0]
goal: {{type: config, target: [1.0, 0.0, 0.0], tolerance: [0.0, 0.0, 0.0]}}
world:
  obstacles:
    - {{shape: box, center: [0.0, 0.0, 0.0], half_extents: [0.1, 2.5, 2.5]}}
time_budget_s: 0.2
",
        robot.display()
    );
    let scenario = dir.path().join("sealed.scenario");
    fs::write(&scenario, text).unwrap();

    for planner in ["rrt-connect", "ara-star"] {
        let out = planbench(&["plan", "--scenario", s(&scenario), "--planner", planner]);
        assert_eq!(out.status.code(), Some(1), "{}", stdout(&out));
        assert!(stdout(&out).contains("status: failure"));
    }
}

#[test]
fn plan_then_validate() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = data().join("scenarios/shelf_reach.scenario");
    let path = dir.path().join("path.csv");
    let out = planbench(&[
        "plan",
        "--scenario",
        s(&scenario),
        "--planner",
        "rrt-connect",
        "--path-out",
        s(&path),
    ]);
    assert_eq!(out.status.code(), Some(0));

    let ok = planbench(&["validate", "--scenario", s(&scenario), "--path", s(&path)]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    assert!(stdout(&ok).starts_with("valid"));

    // drop the first waypoint so the path no longer starts at the start
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.remove(if lines[0].chars().any(|c| c.is_alphabetic()) {
        1
    } else {
        0
    });
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    let bad = planbench(&["validate", "--scenario", s(&scenario), "--path", s(&path)]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).starts_with("invalid"));
}

#[test]
fn gen_then_bench_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("suite");
    let generated = suite.join("generated");
    let out = planbench(&[
        "gen",
        "--base",
        s(&data().join("suites/shelf_transfer/base.scenario")),
        "--family",
        "objects",
        "--count",
        "4",
        "--seed",
        "5",
        "--out",
        s(&generated),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let mut names: Vec<String> = fs::read_dir(&generated)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names.len(), 4);
    assert_eq!(names[0], "shelf_transfer_000.scenario");

    let params = data().join("params/fetch8_tuned.yaml");
    let run = |tag: &str| {
        let csv = dir.path().join(format!("{tag}.csv"));
        let paths = dir.path().join(format!("{tag}_paths"));
        let out = planbench(&[
            "bench",
            "--suite",
            s(&suite),
            "--planners",
            "rrt-connect,ara-star",
            "--params",
            s(&params),
            "--reps",
            "2",
            "--seed",
            "1",
            "--out",
            s(&csv),
            "--table",
            "--paths",
            s(&paths),
        ]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        (stdout(&out), fs::read_to_string(csv).unwrap(), paths)
    };
    let (table, first_csv, first_paths) = run("a");
    let (_, second_csv, second_paths) = run("b");

    assert!(table.contains("experiment, success_forward, success_backward, failure, unsolvable"));
    assert!(table.contains("# workers: 2"));

    let statuses = |csv: &str| -> Vec<String> {
        csv.lines()
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                format!("{},{},{},{}", f[0], f[1], f[2], f[3])
            })
            .collect()
    };
    assert_eq!(
        first_csv.lines().next().unwrap(),
        "scenario,planner,seed,status,planning_time_s,path_cost"
    );
    assert_eq!(first_csv.lines().count(), 1 + 2 * 4 * 2);
    assert_eq!(statuses(&first_csv), statuses(&second_csv));

    let mut files: Vec<PathBuf> = fs::read_dir(&first_paths)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    assert!(!files.is_empty());
    for f in files {
        let other = second_paths.join(f.file_name().unwrap());
        assert_eq!(fs::read(&f).unwrap(), fs::read(other).unwrap());
    }
}

#[test]
fn bench_records_robot_mismatch_as_error() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("suite");
    fs::create_dir_all(&suite).unwrap();
    let text = fs::read_to_string(data().join("scenarios/shelf_reach.scenario")).unwrap();
    let robot = fs::canonicalize(data().join("robots/point3.yaml")).unwrap();
    let text = text.replace(
        "robot: ../robots/fetch8.yaml",
        &format!("robot: {}", robot.display()),
    );
    fs::write(suite.join("base.scenario"), text).unwrap();

    let csv = dir.path().join("r.csv");
    let out = planbench(&[
        "bench",
        "--suite",
        s(&suite),
        "--planners",
        "ara-star",
        "--out",
        s(&csv),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(
        text.lines().nth(1).unwrap().split(',').nth(3),
        Some("error")
    );
}

#[test]
fn bad_arguments_are_rejected() {
    let out = planbench(&["plan", "--scenario", "x.scenario", "--planner", "dijkstra"]);
    assert_eq!(out.status.code(), Some(3));
    let out = planbench(&[
        "plan",
        "--scenario",
        "/nonexistent.scenario",
        "--planner",
        "ara-star",
    ]);
    assert_eq!(out.status.code(), Some(3));
}
