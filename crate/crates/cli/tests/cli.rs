use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const MAZE: &str = "TTTTTTT\nT.....T\nT.TTT.T\nT..F..T\nTTTTTTT\n";

fn atn(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_atn"))
        .current_dir(dir)
        .env("ATN_WORKERS", "2")
        .env("RUST_BACKTRACE", "0")
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = atn(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn setup() -> TempDir {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("maze.txt"), MAZE).unwrap();
    fs::write(
        dir.path().join("small.cfg"),
        "population_size=20\ntruncation_size=6\ngenome_length=40\ngenerations=3\nseed=11\nmaze=maze.txt\n",
    )
    .unwrap();
    dir
}

#[test]
fn oracle_reports_bfs_mean() {
    let dir = setup();
    let out = ok(dir.path(), &["oracle", "maze.txt", "--cells"]);
    assert!(out.contains("start_cells=11"));
    let mean: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("mean_steps="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((mean - 26.0 / 11.0).abs() < 1e-12);
    assert_eq!(out.lines().filter(|l| l.matches(',').count() == 2).count(), 12);
}

#[test]
fn evolve_is_reproducible_and_feeds_other_commands() {
    let dir = setup();
    let d = dir.path();
    ok(d, &["evolve", "-c", "small.cfg", "-o", "a.txt", "--export", "out"]);
    ok(d, &["evolve", "-c", "small.cfg", "-o", "b.txt"]);
    let a = fs::read_to_string(d.join("a.txt")).unwrap();
    let b = fs::read_to_string(d.join("b.txt")).unwrap();
    let strip = |s: &str| s.lines().filter(|l| !l.starts_with("graph=")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&a), strip(&b));
    assert!(a.contains("[generations]") && a.contains("genome="));
    assert_eq!(a.lines().filter(|l| l.starts_with(|c: char| c.is_ascii_digit())).count(), 4);
    assert!(d.join("out/champion_11.dot").exists());
    let policy = fs::read_to_string(d.join("out/champion_11.policy.csv")).unwrap();
    assert_eq!(policy.lines().next(), Some("row,col,steps,oracle"));
    assert_eq!(policy.lines().count(), 12);

    let dot = ok(d, &["build", "a.txt"]);
    assert!(dot.starts_with("digraph"));
    assert_eq!(dot, fs::read_to_string(d.join("out/champion_11.dot")).unwrap());

    let eval = ok(d, &["eval", "a.txt", "-m", "maze.txt", "--evals", "3"]);
    let f: f64 = eval.lines().find_map(|l| l.strip_prefix("fitness=")).unwrap().parse().unwrap();
    assert!((26.0 / 11.0..=100.0).contains(&f));

    let exported = ok(d, &["export", "a.txt", "-m", "maze.txt", "-o", "exp"]);
    assert!(exported.contains("a.dot") && d.join("exp/a.policy.csv").exists());
}

#[test]
fn worker_count_does_not_change_results() {
    let dir = setup();
    let d = dir.path();
    let run = |workers: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_atn"))
            .current_dir(d)
            .env("ATN_WORKERS", workers)
            .args(["evolve", "-c", "small.cfg"])
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn hand_written_genome_builds_and_evaluates() {
    let dir = setup();
    let d = dir.path();
    // node, goE!, connect start, goE!, connect self
    fs::write(d.join("g.txt"), "16 35 27 35 24\n").unwrap();
    let dot = ok(d, &["build", "g.txt"]);
    assert!(dot.contains("0 -> 1") && dot.contains("1 -> 1"));
    let eval = ok(d, &["eval", "g.txt", "-m", "maze.txt", "--cells"]);
    // Walking east finds food from (3,1) and (3,2); every other cell runs to the cap.
    let f: f64 = eval.lines().find_map(|l| l.strip_prefix("fitness=")).unwrap().parse().unwrap();
    assert_eq!(f, (2 + 1 + 9 * 100) as f64 / 11.0);
    assert!(eval.contains("3,2,1\n") && eval.contains("1,1,100\n"));
}

#[test]
fn grid_and_stats() {
    let dir = setup();
    let d = dir.path();
    ok(d, &["grid", "-c", "small.cfg", "--runs", "2", "--generations", "1", "--fix", "Uniform", "-o", "g"]);
    let files = fs::read_dir(d.join("g")).unwrap().count();
    assert_eq!(files, 16);
    let stats = ok(d, &["stats", "g", "--target", "50", "--maze", "maze.txt"]);
    assert!(stats.starts_with("# 16 records"));
    assert!(stats.contains("factor,level_off"));
    assert!(stats.contains("cell,runs,min,q1,median,q3,max"));
    assert!(stats.contains("target,pr,ng,ne,nt"));
    assert!(!stats.contains("BitFlip/Uniform,"));
    let given = ok(d, &["stats", "g", "--given", "Random"]);
    assert!(given.starts_with("# 16 records"));
}

#[test]
fn bad_input_is_reported() {
    let dir = setup();
    let d = dir.path();
    fs::write(d.join("bad.cfg"), "population_size=10\ntruncation_size=20\n").unwrap();
    let out = atn(d, &["evolve", "-c", "bad.cfg", "-m", "maze.txt"]);
    assert!(!out.status.success());
    let out = atn(d, &["evolve"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("no map given"));
    let out = atn(d, &["stats", "maze.txt"]);
    assert!(!out.status.success());
    fs::write(d.join("ragged.txt"), "TTT\nT.F\nTT\n").unwrap();
    assert!(!atn(d, &["oracle", "ragged.txt"]).status.success());
    fs::write(d.join("code.txt"), "0 node\n").unwrap();
    fs::write(d.join("g.txt"), "1 2 3\n").unwrap();
    let out = atn(d, &["build", "g.txt", "--genetic-code", "code.txt"]);
    assert!(!out.status.success());
}
