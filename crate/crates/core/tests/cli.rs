use std::path::{Path, PathBuf};

use diagent::cli::run_cli;

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str], input: &str) -> Run {
    let mut argv = vec!["diagent"];
    argv.extend_from_slice(args);
    let mut stdin = input.as_bytes();
    let mut stdout = Vec::new();
    let mut stderr = Vec::new();
    let code = run_cli(argv, &mut stdin, &mut stdout, &mut stderr);
    Run {
        code,
        stdout: String::from_utf8(stdout).unwrap(),
        stderr: String::from_utf8(stderr).unwrap(),
    }
}

fn ok(args: &[&str]) -> String {
    let r = run(args, "");
    assert_eq!(r.code, 0, "stderr: {}", r.stderr);
    r.stdout
}

#[test]
fn validate_golden() {
    insta::assert_snapshot!(ok(&["validate", &data("e5.json")]));
}

#[test]
fn entropy_golden() {
    let e5 = data("e5.json");
    let shannon = ok(&["entropy", &e5, "--measure", "shannon", "--base", "2"]);
    assert!(shannon.contains("0.947018995109"));
    insta::assert_snapshot!("entropy_shannon", shannon);
    let cb = ok(&["entropy", &e5, "--measure", "cb"]);
    assert!(cb.contains("H_B (cb): 4.00000000000"));
    insta::assert_snapshot!("entropy_cb", cb);
    insta::assert_snapshot!("entropy_after", ok(&["entropy", &e5, "--after", "d2,d3"]));
}

#[test]
fn info_golden() {
    let e5 = data("e5.json");
    insta::assert_snapshot!("info_root", ok(&["info", &e5, "--symptom", "d2"]));
    insta::assert_snapshot!(
        "info_after",
        ok(&["info", &e5, "--symptom", "d3", "--after", "d2"])
    );
}

#[test]
fn plan_golden() {
    let e5 = data("e5.json");
    let dir = tempfile::tempdir().unwrap();
    let tree = dir.path().join("tree.json");
    let dot = dir.path().join("tree.dot");
    let out = ok(&[
        "plan",
        &e5,
        "--criterion",
        "cb",
        "--out",
        tree.to_str().unwrap(),
        "--dot",
        dot.to_str().unwrap(),
    ]);
    insta::assert_snapshot!("plan_cb", out);
    insta::assert_snapshot!("plan_cb_tree", std::fs::read_to_string(&tree).unwrap());
    insta::assert_snapshot!("plan_cb_dot", std::fs::read_to_string(&dot).unwrap());
    insta::assert_snapshot!("plan_shannon", ok(&["plan", &e5, "--criterion", "shannon"]));
}

#[test]
fn verify_golden() {
    let e5 = data("e5.json");
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("report.json");
    let r = run(
        &[
            "verify",
            &e5,
            "--trials",
            "100",
            "--seed",
            "7",
            "--json",
            json.to_str().unwrap(),
        ],
        "",
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.ends_with("all 19 checks passed\n"));
    insta::assert_snapshot!("verify", r.stdout);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report["seed"], 7);
    assert_eq!(report["checks"].as_array().unwrap().len(), 19);
}

#[test]
fn compare_golden() {
    insta::assert_snapshot!(ok(&["compare", &data("e5.json")]));
}

#[test]
fn gen_golden_and_reloadable() {
    let out = ok(&[
        "gen", "--n", "4", "--t", "3", "--lambda", "3", "--seed", "11", "--prior", "uniform",
    ]);
    insta::assert_snapshot!(out);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gen.json");
    std::fs::write(&path, &out).unwrap();
    ok(&["validate", path.to_str().unwrap()]);
    assert_eq!(
        out,
        ok(
            &[
                "gen", "--n", "4", "--t", "3", "--lambda", "3", "--seed", "11", "--prior",
                "uniform"
            ]
        )
    );
    assert_eq!(
        run(&["gen", "--n", "4", "--t", "3", "--seed", "1"], "").code,
        1
    );
}

fn e5_tree(dir: &Path) -> PathBuf {
    let tree = dir.join("tree.json");
    ok(&["plan", &data("e5.json"), "--out", tree.to_str().unwrap()]);
    tree
}

#[test]
fn diagnose_walks_to_e3() {
    let dir = tempfile::tempdir().unwrap();
    let tree = e5_tree(dir.path());
    // e3's row is 0,1,0; the tree asks d2 then d3
    let r = run(
        &["diagnose", tree.to_str().unwrap(), &data("e5.json")],
        "1\n0\n",
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    insta::assert_snapshot!("diagnose_e3", r.stdout);
    assert!(r.stdout.contains("resolved:\n  e3  1.00000000000\n"));
}

#[test]
fn diagnose_reprompts_on_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let tree = e5_tree(dir.path());
    let r = run(
        &["diagnose", tree.to_str().unwrap(), &data("e5.json")],
        "yes\n2\n1\n1\n",
    );
    assert_eq!(r.code, 0);
    assert_eq!(r.stderr.lines().count(), 2, "{}", r.stderr);
    assert!(r.stdout.contains("  e4  1.00000000000"));
}

#[test]
fn diagnose_contradiction_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.json");
    // value 2 unused by the only symptom
    std::fs::write(
        &m,
        r#"{"lambda": 3, "conditions": [{"name": "a", "p": 0.5}, {"name": "b", "p": 0.5}],
            "symptoms": ["s"], "matrix": [[0], [1]]}"#,
    )
    .unwrap();
    let tree = dir.path().join("tree.json");
    ok(&["plan", m.to_str().unwrap(), "--out", tree.to_str().unwrap()]);
    let r = run(
        &["diagnose", tree.to_str().unwrap(), m.to_str().unwrap()],
        "2\n",
    );
    assert_eq!(r.code, 4);
    assert!(r.stderr.contains("contradicts"));
    let r = run(
        &["diagnose", tree.to_str().unwrap(), m.to_str().unwrap()],
        "",
    );
    assert_eq!(r.code, 2);
}

#[test]
fn csv_input_and_warning() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("m.csv");
    std::fs::write(
        &csv,
        "condition,p,d1,d2\na,0.5,0,2\nb,0.25,1,0\nc,0.25,2,1\n",
    )
    .unwrap();
    let r = run(&["validate", csv.to_str().unwrap()], "");
    assert_eq!(r.code, 0);
    assert_eq!(r.stdout, "ok: 3 conditions, 2 symptoms, lambda 3\n");
    assert!(r
        .stderr
        .starts_with("warning: lambda not given; inferred 3"));
    let r = run(&["validate", csv.to_str().unwrap(), "--lambda", "5"], "");
    assert_eq!(r.stdout, "ok: 3 conditions, 2 symptoms, lambda 5\n");
    assert!(r.stderr.is_empty());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad_sum = dir.path().join("bad.json");
    let text = std::fs::read_to_string(data("e5.json"))
        .unwrap()
        .replace("0.84", "0.74");
    std::fs::write(&bad_sum, text).unwrap();
    let r = run(&["validate", bad_sum.to_str().unwrap()], "");
    assert_eq!(r.code, 1);
    assert!(r.stderr.starts_with("error: "));
    assert_eq!(
        run(
            &["validate", bad_sum.to_str().unwrap(), "--renormalize"],
            ""
        )
        .code,
        0
    );

    let truncated = dir.path().join("trunc.json");
    std::fs::write(
        &truncated,
        r#"{"lambda": 2, "conditions": [{"name": "e1"}]}"#,
    )
    .unwrap();
    let r = run(&["validate", truncated.to_str().unwrap()], "");
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("conditions[0]"), "{}", r.stderr);

    assert_eq!(run(&["validate", "/nonexistent/model.json"], "").code, 2);
    assert_eq!(run(&["frobnicate"], "").code, 2);
    assert_eq!(run(&["--help"], "").code, 0);
    let r = run(&["info", &data("e5.json"), "--symptom", "d9"], "");
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("unknown symptom `d9`"));
    assert_eq!(
        run(&["entropy", &data("e5.json"), "--after", "d1,d1"], "").code,
        1
    );
    assert_eq!(
        run(&["entropy", &data("e5.json"), "--base", "1"], "").code,
        1
    );
}
