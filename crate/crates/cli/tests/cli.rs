use std::path::Path;
use std::process::Command;

use clap::Parser;
use countgauss_cli::io::{load_instance, read_libsvm, save_matrix, write_csv_matrix, write_libsvm, LibsvmData};
use countgauss_cli::record::{ResultRecord, Table};
use countgauss_cli::{run, Cli};
use countgauss_core::nmf::generate_separable;
use countgauss_core::{SeededRng, SparseMatrix};

fn bin(args: &[&str]) -> (String, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_countgauss")).args(args).output().unwrap();
    (String::from_utf8(out.stdout).unwrap(), out.status.code().unwrap())
}

fn cli(args: &[&str]) -> (String, i32) {
    let mut full = vec!["countgauss", "--no-timings"];
    full.extend_from_slice(args);
    let out = run(&Cli::try_parse_from(&full).unwrap()).unwrap();
    (out.text, out.code)
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn exit_codes() {
    let (_, ok) = bin(&["verify", "--trials", "200", "--samples", "0"]);
    assert_eq!(ok, 0);
    // the solver gives up after one pass: a numerical failure
    let (_, failed) = bin(&["svm-check", "--n", "40", "--d", "200", "--r", "64", "--max-passes", "1", "--tol", "1e-14"]);
    assert_eq!(failed, 1);
    let (_, usage) = bin(&["verify", "--B", "0"]);
    assert_eq!(usage, 2);
    let (_, missing) = bin(&["nmf-run", "--input", "/nonexistent/x.mtx", "--k", "3"]);
    assert_eq!(missing, 2);
    let (_, unknown) = bin(&["no-such-command"]);
    assert_eq!(unknown, 2);
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let (stdout, code) = bin(&["--no-timings", "--output", path(&out), "counterexample", "--d", "2,4", "--samples", "1000"]);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let rec: ResultRecord = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(rec.experiment, "counterexample");
    assert!(rec.all_pass());
}

#[test]
fn record_json_round_trip() {
    let (text, code) = cli(&["--seed", "3", "verify", "--trials", "300", "--samples", "1000"]);
    assert_eq!(code, 0);
    let rec: ResultRecord = serde_json::from_str(&text).unwrap();
    assert_eq!(rec.seed, 3);
    assert!(rec.timings.is_empty());
    assert!(rec.pass["bound1"] && rec.pass["bound5"]);
    assert_eq!(rec.to_json().unwrap().trim_end(), text.trim_end());
}

#[test]
fn table_csv_round_trip() {
    let (text, code) = cli(&["nmf-synthetic", "--k", "4", "--trials", "10", "--d", "50", "--n", "30"]);
    assert_eq!(code, 0);
    let table = Table::from_csv(&text).unwrap();
    assert_eq!(table.to_csv().unwrap(), text);
    assert!(table.column("mean_time").is_none());
    let algo = table.column("algo").unwrap();
    let mut algos: Vec<&str> = table.rows.iter().map(|r| r[algo].as_str()).collect();
    algos.dedup();
    assert_eq!(algos[..3], ["spa", "cg", "gp"]);

    let (json, _) = cli(&["--json", "nmf-synthetic", "--k", "4", "--trials", "10", "--d", "50", "--n", "30"]);
    assert_eq!(json, table.to_json().unwrap());
}

#[test]
fn record_as_csv() {
    let (text, code) = cli(&["--csv", "counterexample", "--d", "2", "--samples", "1000"]);
    assert_eq!(code, 0);
    let table = Table::from_csv(&text).unwrap();
    assert!(!table.rows.is_empty());
}

#[test]
fn csv_and_matrix_market_give_same_anchors() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate_separable(40, 25, 4, &mut SeededRng::new(7)).unwrap();
    let mtx = dir.path().join("x.mtx");
    let csv = dir.path().join("x.csv");
    save_matrix(&mtx, &SparseMatrix::from_dense(&inst.x)).unwrap();
    write_csv_matrix(std::fs::File::create(&csv).unwrap(), &inst.x).unwrap();
    for algo in ["cg", "gp", "spa", "xray"] {
        let run_on = |p: &Path| {
            let (text, code) = cli(&["--seed", "9", "nmf-run", "--input", path(p), "--k", "4", "--algo", algo, "--m", "40"]);
            assert_eq!(code, 0, "{algo}");
            let rec: ResultRecord = serde_json::from_str(&text).unwrap();
            rec.data["anchors"].clone()
        };
        let a = run_on(&mtx);
        assert_eq!(a, run_on(&csv), "{algo}");
        if algo == "spa" || algo == "xray" {
            let mut got: Vec<usize> = serde_json::from_value(a).unwrap();
            got.sort_unstable();
            assert_eq!(got, inst.anchors);
        }
    }
}

#[test]
fn generated_instance_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let (_, code) = cli(&["--seed", "4", "generate", "--dir", path(dir.path()), "--d", "30", "--n", "20", "--k", "3"]);
    assert_eq!(code, 0);
    let inst = load_instance(dir.path()).unwrap();
    let fresh = generate_separable(30, 20, 3, &mut SeededRng::new(4).child(0)).unwrap();
    assert_eq!(inst.x.shape(), (30, 20));
    assert_eq!(inst.anchors, fresh.anchors);
    let (text, code) = cli(&["nmf-run", "--input", path(dir.path()), "--k", "3", "--algo", "spa"]);
    assert_eq!(code, 0);
    let rec: ResultRecord = serde_json::from_str(&text).unwrap();
    assert!(rec.pass["anchors_match"]);
}

#[test]
fn malformed_inputs_report_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "1,2\n3,oops\n").unwrap();
    let err = run(&Cli::try_parse_from(["countgauss", "nmf-run", "--input", path(&bad), "--k", "1"]).unwrap()).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("line 2"), "{msg}");
    assert_eq!(err.exit_code(), 2);

    let err = read_libsvm("+1 1:1 x:2\n".as_bytes(), "inline", None).unwrap_err();
    assert!(err.to_string().contains("line 1"), "{err}");
}

#[test]
fn libsvm_input_with_test_split() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = SeededRng::new(12);
    let mut write = |name: &str, n: usize| {
        let mut triplets = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let label = if i % 2 == 0 { 1.0 } else { -1.0 };
            y.push(label);
            for j in 0..20 {
                if rng.uniform() < 0.3 {
                    triplets.push((i, j, 0.3 * rng.normal()));
                }
            }
            triplets.push((i, 20, 2.0 * label + 0.1 * rng.normal()));
        }
        let data = LibsvmData { x: SparseMatrix::from_triplets(n, 21, &triplets).unwrap(), y };
        let p = dir.path().join(name);
        write_libsvm(std::fs::File::create(&p).unwrap(), &data).unwrap();
        p
    };
    let train = write("train.svm", 40);
    let test = write("test.svm", 30);
    let (text, code) = cli(&["svm-check", "--input", path(&train), "--test", path(&test), "--r", "64", "--C", "10"]);
    assert_eq!(code, 0);
    let rec: ResultRecord = serde_json::from_str(&text).unwrap();
    assert_eq!(rec.metrics["samples"].value, 40.0);
    assert!(rec.metrics["seed0/test_error_original"].value <= 0.1);
    for row in rec.data["rows"].as_array().unwrap() {
        if row["status"] == "evaluated" {
            assert!(row["test_error"].as_f64().unwrap() <= 0.2, "{row}");
        }
    }
}

#[test]
fn svm_check_desk_scale_pass_rate() {
    let (text, _) = cli(&["--seed", "21", "svm-check", "--n", "200", "--d", "2000", "--r", "128", "--seeds", "20"]);
    let rec: ResultRecord = serde_json::from_str(&text).unwrap();
    for proj in ["countsketch", "countgauss", "gaussian"] {
        let rate = rec.metrics[&format!("r128/{proj}/pass_rate")].value;
        assert!(rate >= 0.9, "{proj}: {rate}");
    }
}

#[test]
fn verify_is_reproducible() {
    let args = ["--seed", "5", "verify", "--n", "64", "--d", "4", "--B", "256", "--trials", "2000"];
    let (a, code) = cli(&args);
    assert_eq!(code, 0);
    let (b, _) = cli(&args);
    assert_eq!(a, b);
    let rec: ResultRecord = serde_json::from_str(&a).unwrap();
    assert!(rec.metrics["est1_fro_sq"].value <= 0.125 * 1.2);
}
