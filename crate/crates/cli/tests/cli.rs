use std::io::Write;
use std::process::{Command, Output};

use diffcbv::corpus::{self, CORPUS_DIR};
use diffcbv::{d_type, load_program};

fn diffcbv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_diffcbv"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn file(name: &str) -> String {
    format!("{CORPUS_DIR}/{name}.dcbv")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn source(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::Builder::new().suffix(".dcbv").tempfile().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

#[test]
fn check_accepts_corpus_files() {
    let o = diffcbv(&["check", &file("relu")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "ok (x: real) -> real\n");
}

#[test]
fn run_prints_the_outcome() {
    let o = diffcbv(&["run", &file("relu"), "--args", "-2.0"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "Value 0.0\n");

    let o = diffcbv(&["run", &file("relu"), "--args", "0.0", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["outcome"], "domain_error");
    assert_eq!(v["op"], "sign");

    let o = diffcbv(&["run", &file("diverge_rec"), "--args", "1.0", "--budget", "500"]);
    assert_eq!(stdout(&o), "OutOfFuel after 500 steps\n");
}

#[test]
fn run_takes_constructor_arguments() {
    let list = "roll (inr (3.0, roll (inr (4.0, roll (inl ())))))";
    let o = diffcbv(&["run", &file("list_sum"), "--args", list]);
    assert_eq!(stdout(&o), "Value 7.0\n");
}

#[test]
fn trace_goes_to_stderr() {
    let o = diffcbv(&["run", &file("square"), "--args", "3.0", "--trace"]);
    assert_eq!(stdout(&o), "Value 9.0\n");
    let err = stderr(&o);
    let lines: Vec<&str> = err.lines().collect();
    assert!(!lines.is_empty());
    assert!(lines.iter().any(|l| l.ends_with(" prim")));
}

#[test]
fn grad_check_sigmoid_at_zero() {
    let o = diffcbv(&["grad-check", &file("sigmoid"), "--point", "0.0", "--dir", "1.0", "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    // σ'(0) = σ(0)(1 - σ(0)) with σ(0) = 1/2
    let s0 = 1.0 / (1.0 + 0.0_f64.exp());
    let ad = v["ad_tangent"][0].as_f64().unwrap();
    assert!((ad - s0 * (1.0 - s0)).abs() < 1e-12);
    assert_eq!(v["verdict"], "pass");
}

#[test]
fn grad_check_reports_skips_and_structured_points() {
    let o = diffcbv(&["grad-check", &file("relu"), "--point", "1e-4", "--dir", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("verdict      skipped(near-kink)"));

    let list = "roll (inr (3.0, roll (inl ())))";
    let o = diffcbv(&["grad-check", &file("list_map_square"), "--args", list, "--point", "-2.5", "--dir", "1"]);
    assert!(stdout(&o).contains("ad_tangent   [-5.0]"), "{}", stdout(&o));
}

#[test]
fn ad_output_reparses_at_the_transformed_signature() {
    for e in corpus::all() {
        for extra in [None, Some("--beta-simplify")] {
            let path = e.path();
            let mut args = vec!["ad", path.as_str()];
            args.extend(extra);
            let o = diffcbv(&args);
            assert_eq!(o.status.code(), Some(0), "{}", e.name);
            let dp = load_program(&stdout(&o)).unwrap_or_else(|err| panic!("{}: {err}", e.name));
            let p = e.program();
            assert!(dp.ret.alpha_eq(&d_type(&p.ret)));
            for ((_, a), (_, b)) in dp.params.iter().zip(&p.params) {
                assert!(a.alpha_eq(&d_type(b)), "{}", e.name);
            }
        }
    }
}

#[test]
fn output_is_deterministic() {
    for args in [
        vec!["corpus", "--json"],
        vec!["grad-check", "crates/core/corpus/polynomial.dcbv", "--point", "1.0,2.0"],
        vec!["ad", "crates/core/corpus/taylor_exp.dcbv"],
    ] {
        let args: Vec<String> = args
            .iter()
            .map(|a| a.replace("crates/core/corpus", CORPUS_DIR))
            .collect();
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let (a, b) = (diffcbv(&args), diffcbv(&args));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn seed_changes_sampled_directions() {
    let run = |seed: &str| stdout(&diffcbv(&["grad-check", &file("polynomial"), "--point", "1.0,2.0", "--seed", seed]));
    assert_ne!(run("0x1"), run("0x2"));
    assert_eq!(run("0xD1FFC0DE"), run("d1ffc0de"));
}

#[test]
fn corpus_summary() {
    let o = diffcbv(&["corpus"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.lines().count() > corpus::all().len());
    assert!(out.contains(" 0 fail"));
}

#[test]
fn exit_codes() {
    let o = diffcbv(&["check", "/nonexistent/file.dcbv"]);
    assert_eq!(o.status.code(), Some(2));

    let bad = source("params x: real;\nreturns real;\nbody\nmul(x, y)\n");
    let path = bad.path().to_str().unwrap();
    let o = diffcbv(&["check", path]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("UNBOUND_VAR"));

    let o = diffcbv(&["check", path, "--json"]);
    let v: serde_json::Value = serde_json::from_str(stderr(&o).trim()).unwrap();
    assert_eq!(v["diagnostic"]["code"], "UNBOUND_VAR");

    let unparsable = source("params x: real;\nreturns real;\nbody\nmul(x, )\n");
    let o = diffcbv(&["check", unparsable.path().to_str().unwrap(), "--json"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(stderr(&o).trim()).unwrap();
    assert_eq!(v["diagnostic"]["code"], "PARSE");
    assert_eq!(v["diagnostic"]["location"], "4:8");

    let o = diffcbv(&["run", &file("relu"), "--args", "1.0, 2.0"]);
    assert_eq!(o.status.code(), Some(1));

    let o = diffcbv(&["grad-check", &file("relu"), "--point", "1.0", "--tol-abs", "0"]);
    assert_eq!(o.status.code(), Some(1));

    let o = diffcbv(&["grad-check", &file("twice"), "--point", "1.0", "--budget", "0"]);
    assert_eq!(o.status.code(), Some(1));
}
