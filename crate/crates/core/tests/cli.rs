use std::process::{Command, Output};

fn lsc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lsc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn run_prints_a_jsonl_trace() {
    let o = lsc(&["run", "--machine", "kam", "--term", "(\\x.x)(\\y.y)", "--fuel", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4, "header and three steps");
    let labels: Vec<String> = lines[1..]
        .iter()
        .map(|l| {
            serde_json::from_str::<serde_json::Value>(l).unwrap()["label"]
                .as_str()
                .unwrap()
                .to_string()
        })
        .collect();
    assert_eq!(labels, ["c1", "m", "e"]);
}

#[test]
fn run_writes_text_to_a_file() {
    let dir = std::env::temp_dir().join(format!("lsc-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("trace.txt");
    let o = lsc(&[
        "run",
        "--machine",
        "lam",
        "--term",
        "(\\x.x)(\\y.y)",
        "--format",
        "text",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("e=1"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn equiv_finds_the_garbage_collection_step() {
    let o = lsc(&[
        "equiv",
        "--theory",
        "full",
        "--budget",
        "1000",
        "(\\y.y)[x<-\\z.z]",
        "\\y.y",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "Equivalent");
    assert_eq!(v["path"][0]["axiom"], "gc");
    assert_eq!(v["path"].as_array().unwrap().len(), 1);
}

#[test]
fn equiv_exits_one_on_refutation() {
    let o = lsc(&["equiv", "--theory", "full", "(x x)[x<-\\y.y]", "(\\y.y) y"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_passes_on_delta_delta() {
    let o = lsc(&[
        "verify",
        "--machine",
        "wam",
        "--term",
        "(\\x.x x)(\\x.x x)",
        "--fuel",
        "20",
        "--budget",
        "20000",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["steps"], 20);
    assert_eq!(v["passed"], 20);
}

#[test]
fn calc_counts_principal_steps() {
    let o = lsc(&[
        "calc",
        "--strategy",
        "value-lr",
        "--term",
        "(\\x.x x)(\\x.x x)",
        "--steps",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let labels: Vec<&str> = text.lines().skip(1).map(|l| l.split(' ').nth(1).unwrap()).collect();
    assert_eq!(labels, ["m", "e", "e"]);
}

#[test]
fn diff_and_gen() {
    let o = lsc(&["diff", "--group", "need", "--term", "(\\x.x x)(\\y.y)", "--fuel", "50"]);
    assert_eq!(o.status.code(), Some(0));
    let o = lsc(&["gen", "--seed", "1", "--max-size", "4", "--count", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().next(), Some("\\x0.x0 x0"));
}

#[test]
fn suite_traces_passes() {
    let o = lsc(&["suite", "--name", "traces"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("criterion 1 [PASS]"));
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["run", "--machine", "nope", "--term", "\\x.x"][..],
        &["run", "--machine", "kam", "--term", "x"],
        &["run", "--machine", "kam", "--term", "(\\x."],
        &["calc", "--strategy", "fast", "--term", "x"],
        &["suite", "--name", "unknown"],
        &["gen", "--seed", "1", "--max-size", "1"],
        &["frobnicate"],
    ] {
        let o = lsc(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}
