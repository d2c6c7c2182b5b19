use std::fs;
use std::path::Path;
use std::process::Command;

use lepspace::cli::run_with_output;
use lepspace::fixtures;
use lepspace::io::{read_field_csv, CSV_COLUMNS};

fn run(args: &[&str]) -> (i32, String, String) {
    let argv: Vec<String> = std::iter::once("lep").chain(args.iter().copied()).map(String::from).collect();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_with_output(&argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn fixture(dir: &Path, name: &str) -> String {
    let p = dir.join(format!("{name}.lep"));
    fs::write(&p, fixtures::by_name(name).unwrap()).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = run(&["validate", &fixture(dir.path(), "square")]);
    assert_eq!(code, 0, "{out}");
    let (code, out, _) = run(&["validate", &fixture(dir.path(), "cube_no_corner_exclusion")]);
    assert_eq!(code, 1);
    assert!(out.contains("corner in ramification set"), "{out}");
    let bad = dir.path().join("bad.lep");
    fs::write(&bad, "lep 1\ndim 3 2\n[vertices]\n1 = 0 0 0\n[branches]\n1 = 1 9 2\n").unwrap();
    let (code, _, err) = run(&["validate", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("vertex 9"), "{err}");
    assert_eq!(run(&["frobnicate"]).0, 2);
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn solve_then_check_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let sq = fixture(dir.path(), "square");
    let csv = dir.path().join("u.csv");
    let (code, _, err) = run(&["solve", "--g", "const:0", "--f", "const:1", "--h", "0.0625", &sq, "--out", csv.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("# lep "));
    assert!(text.contains("# input sha256=") && text.contains("seed=0"));
    assert!(text.lines().any(|l| l == CSV_COLUMNS));
    let parsed = read_field_csv(&text).unwrap();
    assert!(parsed.values.iter().all(|v| v.is_finite()));
    for mode in ["sub", "super", "lipschitz"] {
        let (code, out, err) = run(&["check", "--complex", &sq, "--u", csv.to_str().unwrap(), "--mode", mode]);
        assert_eq!(code, 0, "{mode}: {out}{err}");
    }

    let doubled = dir.path().join("u2.csv");
    let scaled: String = text
        .lines()
        .map(|l| match l.rsplit_once(',') {
            Some((head, v)) if !l.starts_with('#') && l != CSV_COLUMNS => format!("{head},{:?}\n", 2.0 * v.parse::<f64>().unwrap()),
            _ => format!("{l}\n"),
        })
        .collect();
    fs::write(&doubled, scaled).unwrap();
    let (code, out, _) = run(&["check", "--complex", &sq, "--u", doubled.to_str().unwrap(), "--mode", "sub"]);
    assert_eq!(code, 1, "{out}");
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let book = fixture(dir.path(), "book3");
    let once = || {
        let (code, out, _) = run(&["solve", &book, "--h", "0.125", "--seed", "7"]);
        assert_eq!(code, 0);
        out
    };
    let a = once();
    assert_eq!(a, once());
    assert!(a.contains("seed=7"));
    let prefix = dir.path().join("m");
    let (p1, p2) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    fs::write(&p1, &a).unwrap();
    for p in [&p1, &p2] {
        let (code, _, err) = run(&["export", "--complex", &book, "--u", p1.to_str().unwrap(), "--format", "csv", "--out", p.to_str().unwrap()]);
        assert_eq!(code, 0, "{err}");
    }
    assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
    let (code, _, _) = run(&["export", "--complex", &book, "--u", p1.to_str().unwrap(), "--out", prefix.to_str().unwrap()]);
    assert_eq!(code, 0);
    let obj = fs::read_to_string(dir.path().join("m.obj")).unwrap();
    let scalars = fs::read_to_string(dir.path().join("m.scalars")).unwrap();
    let nv = obj.lines().filter(|l| l.starts_with("v ")).count();
    assert_eq!(nv, scalars.lines().filter(|l| !l.starts_with('#')).count());
    for l in obj.lines().filter(|l| l.starts_with("f ")) {
        assert!(l.split_whitespace().skip(1).all(|i| (1..=nv).contains(&i.parse().unwrap())));
    }
}

#[test]
fn unreachable_nodes_are_flagged() {
    let dir = tempfile::tempdir().unwrap();
    // Two squares joined only through a ramification-free gap: the second has no boundary.
    let text = "lep 1\ndim 3 2\n[vertices]\n1 = 0 0 0\n2 = 1 0 0\n3 = 1 1 0\n4 = 0 1 0\n\
                5 = 3 0 0\n6 = 4 0 0\n7 = 4 1 0.5\n8 = 3 1 0.5\n[branches]\n1 = 1 2 3 4\n2 = 5 6 7 8\n\
                [boundary]\nfacets = 1:0 1:1 1:2 1:3 2:0 2:1 2:2 2:3\n";
    let path = dir.path().join("two.lep");
    fs::write(&path, text).unwrap();
    let csv = dir.path().join("u.csv");
    let (code, _, _) = run(&["solve", path.to_str().unwrap(), "--h", "0.25", "--g", "poly:1:0:0:0", "--out", csv.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(!fs::read_to_string(&csv).unwrap().contains(",inf"));

    let lonely = text.replace("1:0 1:1 1:2 1:3 2:0 2:1 2:2 2:3", "1:0 1:1 1:2 1:3");
    fs::write(&path, lonely).unwrap();
    let (code, _, err) = run(&["solve", path.to_str().unwrap(), "--h", "0.25", "--out", csv.to_str().unwrap(), "--mesh-out", dir.path().join("m").to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let out = fs::read_to_string(&csv).unwrap();
    assert!(out.lines().any(|l| l.ends_with(",inf")), "{out}");
    assert!(err.contains("skipped"), "{err}");
}

#[test]
fn steep_boundary_data_is_a_verdict_failure() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(&["solve", &fixture(dir.path(), "square_steep_g"), "--h", "0.125"]);
    assert_eq!(code, 1);
    assert!(err.contains("incompatible"), "{err}");
}

#[test]
fn distance_and_oracle_commands() {
    let dir = tempfile::tempdir().unwrap();
    let book = fixture(dir.path(), "book3");
    let (code, out, _) = run(&["distance", "--complex", &book, "--from", "1:0.3,0.4", "--to", "2:0.5,0.4"]);
    assert_eq!(code, 0);
    let d: f64 = out.split_whitespace().last().unwrap().parse().unwrap();
    assert!((d - 0.8).abs() < 0.04, "{out}");
    let (code, out, _) = run(&["oracle", "--complex", &fixture(dir.path(), "dihedral2"), "--from", "1:0.4,0.2", "--to", "2:0.3,0.7"]);
    assert_eq!(code, 0);
    assert!(out.contains("brute_force_action") && out.contains("unfolding_distance"), "{out}");
}

#[test]
fn config_file_and_environment() {
    let dir = tempfile::tempdir().unwrap();
    let sq = fixture(dir.path(), "square");
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "h = 0.125\nseed = 11\n").unwrap();
    let (code, out, _) = run(&["--config", cfg.to_str().unwrap(), "solve", &sq]);
    assert_eq!(code, 0);
    assert!(out.contains("h=0.125") && out.contains("seed=11"), "{out}");
    fs::write(&cfg, "h = 0.125\nbogus = 1\n").unwrap();
    assert_eq!(run(&["--config", cfg.to_str().unwrap(), "solve", &sq]).0, 2);

    fs::write(&cfg, "h = 0.25\n").unwrap();
    let bin = env!("CARGO_BIN_EXE_lep");
    let o = Command::new(bin).arg("solve").arg(&sq).env("LEP_CONFIG", &cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("h=0.25"));
    let o = Command::new(bin).arg("validate").arg(fixture(dir.path(), "disconnected")).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}
