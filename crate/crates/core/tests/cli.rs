use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL: &str = "symbols: x, y, z\nF = 6*y*z^2+3*y^3-3*x*z^2+6*x*y*z-3*x^2*z+6*x^2*y;\n";

fn polyopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyopt")).args(args).env_remove("POLYOPT_SEED").output().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn stats_report_both_counts() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "f.poly", SMALL);
    let o = polyopt(&[&input, "-O", "2", "--stats"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let err = stderr(&o);
    assert!(err.contains("*** STATS: original  1P 16M 5A : 23"), "{}", err);
    assert!(err.contains("*** STATS: optimized"), "{}", err);
    assert!(stdout(&o).lines().last().unwrap().starts_with("F = "));
}

#[test]
fn unoptimized_output_is_one_statement_per_operation() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "f.poly", SMALL);
    let o = polyopt(&[&input, "-O", "0", "--stats"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("*** STATS: optimized 1P 16M 5A : 23"), "{}", stderr(&o));
}

#[test]
fn output_file_and_dialects() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "f.poly", SMALL);
    let out = dir.path().join("f.c");
    let o = polyopt(&[&input, "-O", "3", "--dialect", "c", "-o", out.to_str().unwrap(), "--temp-name", "tmp"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.lines().all(|l| l.trim_end().ends_with(';')), "{}", text);
    assert!(text.contains("tmp["));

    let o = polyopt(&[&input, "--dialect", "fortran", "--line-width", "40"]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().all(|l| l.len() <= 40));
}

#[test]
fn scheme_is_fixed_and_printed() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "f.poly", SMALL);
    let o = polyopt(&[&input, "--scheme", "z,y,x", "--print-scheme"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().next(), Some("# Horner scheme: z,y,x"));

    let o = polyopt(&[&input, "--scheme", "z,y"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn brackets_name_each_key() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "h.poly", "symbols: x, y, z, u\nH = u*(x+y+z)^2 + u^2*(x+2*y+z)^2;\n");
    let o = polyopt(&[&input, "-O", "3", "--bracket", "u", "--stats"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("H_u = ") && text.contains("H_u2 = "), "{}", text);
    assert!(text.contains("# H = "), "{}", text);
}

#[test]
fn shifts_are_reported() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "s.poly", "symbols: x, y\nF = (x - y)^4 + 3*(x - y)^2 + 1;\n");
    let o = polyopt(&[&input, "--shift-groups", "x,y", "--stats"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("shift x -> x"), "{}", stdout(&o));
    assert!(stderr(&o).contains("*** STATS: shifts"));
}

#[test]
fn scatter_writes_csv() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "f.poly", SMALL);
    let o = polyopt(&[&input, "-O", "3", "--mcts-num-expand", "30", "--scatter", "0.01:10:log:3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("cp,final_ops,seed,elapsed_ms"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn seed_from_environment() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "f.poly", SMALL);
    let run = |seed: &str| {
        Command::new(env!("CARGO_BIN_EXE_polyopt"))
            .args([&input, "-O", "3", "--mcts-num-expand", "40"])
            .env("POLYOPT_SEED", seed)
            .output()
            .unwrap()
    };
    assert_eq!(run("5").stdout, run("5").stdout);
    assert_eq!(run("nope").status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.poly");
    assert!(!Path::new(&missing).exists());
    assert_eq!(polyopt(&[missing.to_str().unwrap()]).status.code(), Some(1));

    let bad = write(&dir, "bad.poly", "symbols: x\nF = x + q;\n");
    let o = polyopt(&[&bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    let headless = write(&dir, "headless.poly", "F = x;\n");
    assert_eq!(polyopt(&[&headless]).status.code(), Some(2));

    let good = write(&dir, "f.poly", SMALL);
    assert_eq!(polyopt(&[&good, "--scatter", "0:1:log:3"]).status.code(), Some(2));
    assert_eq!(polyopt(&[&good, "--line-width", "10", "--dialect", "fortran"]).status.code(), Some(2));
}
