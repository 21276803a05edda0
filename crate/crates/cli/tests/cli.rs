use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn ntulp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ntulp")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn empty_core_example_is_blocked_by_third_player() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("game");
    let out = ntulp(&["gen", "--family", "empty-core", "--out-dir", path(&dir)]);
    assert!(out.status.success(), "{out:?}");
    let game = dir.join("game.json");
    let out = ntulp(&["oracle", "--game", path(&game), "--u", "2,2,-2"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("blocked by {3}"), "{}", stdout(&out));

    let out = ntulp(&["membership", "--game", path(&game), "--u", "2,2,-2"]);
    assert!(stdout(&out).starts_with("blocked by {3}"), "{}", stdout(&out));
}

#[test]
fn gen_writes_manifest_and_scenario_files() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("city");
    let out = ntulp(&[
        "gen", "--family", "grid-city", "--seed", "5", "--width", "6", "--height", "6", "--lines", "3", "--riders", "8",
        "--out-dir", path(&dir),
    ]);
    assert!(out.status.success(), "{out:?}");
    for f in ["game.json", "nodes.csv", "lines.csv", "riders.csv", "manifest.json"] {
        assert!(dir.join(f).exists(), "{f} missing");
    }
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "gen");
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["settings"]["riders"], 8);
}

#[test]
fn solve_report_and_rerun_round_trip() {
    let tmp = TempDir::new().unwrap();
    let game_dir = tmp.path().join("g");
    assert!(ntulp(&["gen", "--family", "random", "--seed", "9", "--players", "5", "--out-dir", path(&game_dir)]).status.success());
    let run = tmp.path().join("run");
    let out = ntulp(&["solve", "--game", path(&game_dir.join("game.json")), "--objective", "maximin", "--out-dir", path(&run)]);
    assert!(out.status.success(), "{out:?}");
    assert!(stdout(&out).starts_with("Converged"), "{}", stdout(&out));
    let solution: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.join("solution.json")).unwrap()).unwrap();
    assert_eq!(solution["status"], "Converged");
    assert_eq!(solution["utilities"].as_array().unwrap().len(), 5);

    let report = tmp.path().join("report");
    let out = ntulp(&[
        "report", "--trajectory", path(&run.join("trajectory.csv")), "--solution", path(&run.join("solution.json")),
        "--out-dir", path(&report),
    ]);
    assert!(out.status.success(), "{out:?}");
    for f in ["utilitarian.svg", "maximin.svg", "epsilon.svg", "utilities.svg"] {
        let svg = fs::read_to_string(report.join(f)).unwrap();
        assert!(svg.starts_with("<svg") && svg.contains("run"), "{f}");
    }

    let again = tmp.path().join("again");
    let out = ntulp(&["rerun", "--manifest", path(&run.join("manifest.json")), "--out-dir", path(&again)]);
    assert!(out.status.success(), "{out:?}");
    assert!(stdout(&out).contains("reproduced"));
    for f in ["trajectory.csv", "cuts.csv", "solution.json"] {
        assert_eq!(fs::read(run.join(f)).unwrap(), fs::read(again.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn rerun_detects_changed_outputs() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("g");
    assert!(ntulp(&["gen", "--family", "cyclic", "--players", "2", "--out-dir", path(&dir)]).status.success());
    fs::write(dir.join("game.json"), "{}").unwrap();
    let out = ntulp(&["rerun", "--manifest", path(&dir.join("manifest.json")), "--out-dir", path(&tmp.path().join("r"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("game.json"));
}

#[test]
fn flags_override_config_file() {
    let tmp = TempDir::new().unwrap();
    let config = tmp.path().join("config.json");
    fs::write(&config, r#"{"family": "random", "players": 3, "seed": 4}"#).unwrap();
    let dir = tmp.path().join("g");
    let out = ntulp(&["gen", "--config", path(&config), "--players", "6", "--out-dir", path(&dir)]);
    assert!(out.status.success(), "{out:?}");
    assert!(stdout(&out).starts_with("6 players"), "{}", stdout(&out));
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 4);
}

#[test]
fn usage_errors_exit_with_two() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("g");
    assert!(ntulp(&["gen", "--family", "empty-core", "--out-dir", path(&dir)]).status.success());
    let game = dir.join("game.json");
    let cases: Vec<Vec<&str>> = vec![
        vec!["oracle", "--game", path(&game), "--u", "1,2"],
        vec!["oracle", "--game", path(&game), "--u", "1,x,2"],
        vec!["solve", "--game", "missing.json", "--out-dir", path(tmp.path())],
        vec!["solve", "--game", path(&game)],
        vec!["gen", "--family", "cyclic", "--moments", "3,2", "--out-dir", path(tmp.path())],
        vec!["membership", "--game", path(&game), "--u", "1,1,0", "--mode", "multiplicative"],
        vec!["gen", "--family", "nonsense"],
    ];
    for args in cases {
        assert_eq!(ntulp(&args).status.code(), Some(2), "{args:?}");
    }
    let bad_config = tmp.path().join("bad.json");
    fs::write(&bad_config, r#"{"unknown_key": 1}"#).unwrap();
    assert_eq!(ntulp(&["oracle", "--config", path(&bad_config)]).status.code(), Some(2));
}

#[test]
fn thread_count_comes_from_the_environment() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("g");
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_ntulp"))
            .env("NTULP_THREADS", threads)
            .args(["gen", "--family", "empty-core", "--out-dir", path(&dir)])
            .output()
            .unwrap()
    };
    assert!(run("2").status.success());
    assert_eq!(run("0").status.code(), Some(2));
}

#[test]
fn inputs_stay_untouched_outside_out_dir() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("g");
    assert!(ntulp(&["gen", "--family", "transit-motivating", "--out-dir", path(&dir)]).status.success());
    let before: Vec<_> = fs::read_dir(&dir).unwrap().map(|e| e.unwrap().file_name()).collect();
    let run = tmp.path().join("run");
    assert!(ntulp(&["solve", "--game", path(&dir.join("game.json")), "--out-dir", path(&run)]).status.success());
    let after: Vec<_> = fs::read_dir(&dir).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(before, after);
    let mut top: Vec<_> = fs::read_dir(tmp.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    top.sort();
    assert_eq!(top, ["g", "run"]);
}
