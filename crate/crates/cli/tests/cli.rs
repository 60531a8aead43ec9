use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use difflog::datalog::{check_solution, parse_problem_with_rules};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn difflog(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_difflog"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// A scratch copy of a golden problem directory.
fn copy_problem(name: &str) -> tempfile::TempDir {
    let tmp = tempfile::tempdir().unwrap();
    for entry in fs::read_dir(data(name)).unwrap() {
        let entry = entry.unwrap();
        if entry.file_type().unwrap().is_file() {
            fs::copy(entry.path(), tmp.path().join(entry.file_name())).unwrap();
        }
    }
    tmp
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn eval_prints_weighted_values() {
    let tmp = tempfile::tempdir().unwrap();
    let weights = tmp.path().join("w.txt");
    fs::write(&weights, "# fig. 1\nr1 0.8\nr2\t0.6\n").unwrap();
    let o = difflog(&["eval", s(&data("family")), "--weights", s(&weights)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("tuple\tvalue\tprovenance\n"));
    assert!(out.lines().any(|l| l == "samegen\tWill\tAnn\t0.8\tr1:1"));
    assert!(out.lines().any(|l| l == "samegen\tAnn\tJim\t0.48\tr1:1,r2:1"));
}

#[test]
fn eval_defaults_to_unit_weights() {
    let o = difflog(&["eval", s(&data("family"))]);
    assert!(o.status.success());
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), 20);
    assert!(rows.iter().all(|r| r.split('\t').nth(3) == Some("1")));
}

#[test]
fn eval_rejects_unknown_rule() {
    let tmp = tempfile::tempdir().unwrap();
    let weights = tmp.path().join("w.txt");
    fs::write(&weights, "r99 0.5\n").unwrap();
    let o = difflog(&["eval", s(&data("family")), "--weights", s(&weights)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("r99"));
}

#[test]
fn synth_writes_checked_solution_and_report() {
    let dir = copy_problem("family");
    let o = difflog(&["synth", s(dir.path()), "--seeds", "4", "--timeout", "60", "--trace"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let solution = dir.path().join("solution.dl");
    let problem = parse_problem_with_rules(dir.path(), Some(&solution)).unwrap();
    assert!(check_solution(problem.rules.iter(), &problem.input, &problem.labels).is_accepted());

    let report = fs::read_to_string(dir.path().join("report.tsv")).unwrap();
    let mut lines = report.lines();
    assert_eq!(lines.next(), Some("seed\tstatus\titerations\tsamplings\twall_ms"));
    let seeds: Vec<&str> = lines.map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(seeds, ["0", "1", "2", "3"]);
    for seed in 0..4 {
        let trace = fs::read_to_string(dir.path().join(format!("trace-{seed}.tsv"))).unwrap();
        assert!(trace.starts_with("iter\tloss\tevent\ttemperature\n"));
    }
}

#[test]
fn synth_with_zero_timeout_exits_2() {
    let dir = copy_problem("family");
    fs::write(dir.path().join("solution.dl"), "stale").unwrap();
    let o = difflog(&["synth", s(dir.path()), "--seeds", "3", "--timeout", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("solution.dl").exists());
    let report = fs::read_to_string(dir.path().join("report.tsv")).unwrap();
    assert_eq!(report.lines().filter(|l| l.contains("\ttimeout\t")).count(), 3);
}

#[test]
fn synth_rejects_malformed_input() {
    let dir = copy_problem("family");
    fs::write(dir.path().join("parent.facts"), "Will\tNoah\tExtra\n").unwrap();
    let o = difflog(&["synth", s(dir.path()), "--seeds", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("parent.facts"));
}

#[test]
fn reproducible_reports_are_identical() {
    let dir = copy_problem("family");
    let run = |out: &Path| {
        let o = difflog(&["synth", s(dir.path()), "--seeds", "3", "--seed", "7", "--reproducible", "--out", s(out)]);
        assert_eq!(o.status.code(), Some(0));
        fs::read(out.join("report.tsv")).unwrap()
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(run(a.path()), run(b.path()));
}

#[test]
fn gen_rules_writes_chain_seeds() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("rules.dl");
    let o = difflog(&["gen-rules", "--problem", s(&data("family")), "--max-body-len", "2", "--k", "0", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let problem = parse_problem_with_rules(&data("family"), Some(&out)).unwrap();
    assert_eq!(problem.rules.len(), 6);
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# 6 generated candidate rules"));
}

#[test]
fn encode_then_synth_a_satisfiable_formula() {
    let tmp = tempfile::tempdir().unwrap();
    let o = difflog(&["encode-3cnf", s(&data("cnf/example.cnf")), "--out", s(tmp.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = difflog(&["synth", s(tmp.path()), "--seeds", "2", "--timeout", "60"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn bench_prints_one_row_per_problem() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = tmp.path().join("manifest");
    fs::write(&manifest, format!("{}\n# comment\nmissing\n", s(&data("family")))).unwrap();
    let o = difflog(&["bench", s(&manifest), "--seeds", "2", "--timeout", "60"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows[0], "Benchmark\tRel\tExp\tCnd\tIn\tOut\tIter\tSmpl\tTime");
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("family\t2\t2\t2\t6\t3\t"));
    assert!(rows[2].starts_with("missing\t-") && rows[2].ends_with("failed"));

    fs::write(&manifest, "").unwrap();
    let o = difflog(&["bench", s(&manifest)]);
    assert_eq!(stdout(&o).lines().count(), 1);
}
