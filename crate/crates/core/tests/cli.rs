use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn purekit(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_purekit"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn catalog_lists_builtin_games() {
    let dir = tempfile::tempdir().unwrap();
    let out = purekit(&["catalog"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "cournot",
        "zero-sum-signal",
        "quadratic-coordination",
        "dominant-action",
    ] {
        assert!(text.contains(name), "{text}");
    }
}

#[test]
fn purify_is_deterministic_and_verifiable() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        vec![
            "purify",
            "--game",
            "zero-sum-signal",
            "--player",
            "1",
            "--epsilon",
            "0.2",
            "--seed",
            "5",
            "--out",
            out,
        ]
    };
    let a = purekit(&args("a.json"), dir.path());
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let b = purekit(&args("b.json"), dir.path());
    assert_eq!(b.status.code(), Some(0));
    let (pa, pb) = (dir.path().join("a.json"), dir.path().join("b.json"));
    assert_eq!(std::fs::read(&pa).unwrap(), std::fs::read(&pb).unwrap());
    let report = read_json(&pa);
    assert_eq!(report["status"], "PASS");

    let v = purekit(&["verify", "--report", "a.json"], dir.path());
    assert_eq!(v.status.code(), Some(0), "{}", String::from_utf8_lossy(&v.stderr));

    let mut tampered = report.clone();
    tampered["report"]["seminorm"] = Value::from(0.5);
    std::fs::write(
        dir.path().join("t.json"),
        serde_json::to_string_pretty(&tampered).unwrap(),
    )
    .unwrap();
    let t = purekit(&["verify", "--report", "t.json"], dir.path());
    assert_eq!(t.status.code(), Some(1));
    assert!(
        String::from_utf8_lossy(&t.stderr).contains("seminorm")
            || String::from_utf8_lossy(&t.stdout).contains("seminorm")
    );
}

#[test]
fn find_eq_then_purify_eq() {
    let dir = tempfile::tempdir().unwrap();
    let f = purekit(
        &[
            "find-eq",
            "--game",
            "dominant-action",
            "--cells",
            "4",
            "--out",
            "eq.json",
        ],
        dir.path(),
    );
    assert_eq!(f.status.code(), Some(0), "{}", String::from_utf8_lossy(&f.stderr));
    let eq = read_json(&dir.path().join("eq.json"));
    for r in eq["report"]["check"]["regrets"].as_array().unwrap() {
        assert!(r.as_f64().unwrap().abs() < 1e-12);
    }
    let n = purekit(
        &["nash-check", "--game", "dominant-action", "--profile", "eq.json"],
        dir.path(),
    );
    assert_eq!(n.status.code(), Some(0));
    let p = purekit(
        &[
            "purify-eq",
            "--game",
            "zero-sum-signal",
            "--epsilon",
            "0.3",
            "--seed",
            "1",
            "--out",
            "pe.json",
        ],
        dir.path(),
    );
    assert_eq!(p.status.code(), Some(0), "{}", String::from_utf8_lossy(&p.stderr));
    let pe = read_json(&dir.path().join("pe.json"));
    assert_eq!(pe["report"]["telescoping"], true);
    assert_eq!(pe["report"]["profiles"].as_array().unwrap().len(), 4);
}

#[test]
fn errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = purekit(
        &[
            "purify",
            "--game",
            "no/such/game.txt",
            "--player",
            "1",
            "--epsilon",
            "0.1",
        ],
        dir.path(),
    );
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("no/such/game.txt"));

    let usage = purekit(&["purify", "--player", "1"], dir.path());
    assert_eq!(usage.status.code(), Some(2));

    let bad_eps = purekit(
        &["purify", "--game", "cournot", "--player", "1", "--epsilon", "-1"],
        dir.path(),
    );
    assert_eq!(bad_eps.status.code(), Some(2));

    let bad_player = purekit(
        &["purify", "--game", "cournot", "--player", "3", "--epsilon", "0.1"],
        dir.path(),
    );
    assert_eq!(bad_player.status.code(), Some(2));
}

#[test]
fn game_files_are_read_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[game]\nname=file-game\nplayers=2\nbound=1\n[action.1]\nkind=interval 0 1\n[action.2]\nkind=interval 0 1\n[prior]\nkind=uniform\n[payoff.1]\nexpr=k1*x1 - k1*k2\n[payoff.2]\nexpr=k2*x2 - k1*k2\n";
    std::fs::write(dir.path().join("g.txt"), text).unwrap();
    let out = purekit(
        &["find-eq", "--game", "g.txt", "--cells", "2", "--out", "eq.json"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let eq = read_json(&dir.path().join("eq.json"));
    assert_eq!(eq["config"]["game"], "g.txt");
}
