use std::io::Write;
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_bridgegirth"));
    c.env_remove("BRIDGEGIRTH_SEED");
    c
}

fn run(args: &[&str], stdin: &str) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn quad_pipeline_is_two_bridge_free() {
    let sys = run(&["construct", "quad", "--q", "3"], "");
    assert!(sys.status.success());
    let girth = run(&["girth", "--max-k", "2"], &stdout(&sys));
    assert_eq!(girth.status.code(), Some(0));
    assert_eq!(stdout(&girth).trim(), ">2");
}

#[test]
fn two_bridge_exits_one_with_witness() {
    let o = run(&["girth"], "pathsys 1\nnodes 3\nordered 0\npath 0 1 2\npath 0 2\n");
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("bridge river"));
}

#[test]
fn malformed_input_and_unknown_verb_exit_two() {
    assert_eq!(run(&["stats"], "pathsys 1\nnodes 2\nordered 0\npath 0 0\n").status.code(), Some(2));
    assert_eq!(run(&["frobnicate"], "").status.code(), Some(2));
}

#[test]
fn seed_is_echoed_and_replayable() {
    let base = stdout(&run(&["construct", "rs", "--m", "8"], ""));
    let a = run(&["--seed", "11", "trim", "--nodes", "20", "--paths", "10"], &base);
    let b = bin()
        .args(["trim", "--nodes", "20", "--paths", "10"])
        .env("BRIDGEGIRTH_SEED", "11")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .and_then(|mut c| {
            c.stdin.take().unwrap().write_all(base.as_bytes())?;
            c.wait_with_output()
        })
        .unwrap();
    assert!(stdout(&a).starts_with("# seed 11\n"));
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn stats_csv_row() {
    let sys = stdout(&run(&["construct", "lattice", "--n", "8", "--ell", "2"], ""));
    let o = run(&["stats", "--csv", "-"], &sys);
    let text = stdout(&o);
    let csv: Vec<&str> = text.lines().skip_while(|l| !l.starts_with("n,")).collect();
    assert_eq!(csv, vec!["n,p,size,d,ell,l2", "8,2,4,1/2,2,8"]);
}

#[test]
fn search_and_table() {
    let o = run(&["search", "--n", "3", "--p", "3", "--k", "2"], "");
    assert!(stdout(&o).starts_with("beta(3, 3, 2) = 7"));
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    let o = run(
        &["search", "table", "--max-n", "3", "--max-p", "2", "--ks", "2,inf", "--csv", csv.to_str().unwrap()],
        "",
    );
    assert!(o.status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 2 * 2);
    assert!(text.contains("\n3,2,2,6,6,"));
}

#[test]
fn thread_count_does_not_change_output() {
    let args = ["search", "table", "--max-n", "3", "--max-p", "3", "--ks", "2,3,inf"];
    let one = run(&[&["--threads", "1"], &args[..]].concat(), "");
    let four = run(&[&["--threads", "4"], &args[..]].concat(), "");
    assert_eq!(stdout(&one), stdout(&four));
}

#[test]
fn dp_reduction_verifies() {
    let sys = stdout(&run(&["construct", "lattice", "--n", "128", "--ell", "4"], ""));
    let inst = run(&["reduce", "dp"], &sys);
    assert!(inst.status.success());
    let v = run(&["verify", "preserver-size", "--mode", "dp"], &stdout(&inst));
    assert_eq!(stdout(&v).trim(), "192");
    let u = run(&["verify", "unique-shortest"], &stdout(&inst));
    assert!(u.status.success());
}

#[test]
fn gap_product_checks() {
    let sys = stdout(&run(&["construct", "rs", "--m", "5"], ""));
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("rs.ps");
    std::fs::write(&f, sys).unwrap();
    let inst = run(&["gap", "multicut", "--system", f.to_str().unwrap(), "--d", "16"], "");
    assert!(inst.status.success());
    let o = run(&["gap", "check-long-paths"], &stdout(&inst));
    assert!(o.status.success());
    assert!(stdout(&o).contains("min nonterminals 2 (d' = 2)"));
}

#[test]
fn game_reports_final_count() {
    let sys = stdout(&run(&["construct", "lattice", "--n", "8", "--ell", "2"], ""));
    let o = run(&["game", "online", "--builder", "greedy-shortest"], &sys);
    assert!(stdout(&o).trim_end().ends_with("final 2"));
}
