use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::tempdir;

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

fn qvul(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qvul"))
        .current_dir(dir)
        .args(args)
        .env_remove("QVUL_THREADS")
        .output()
        .expect("run qvul")
}

fn ok(out: &Output) -> Value {
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn without_timestamp(mut v: Value) -> Value {
    v["manifest"]["timestamp"] = Value::Null;
    v
}

/// Compare against a checked-in file; `QVUL_BLESS=1` rewrites it.
fn golden(name: &str, actual: &str) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("QVUL_BLESS").is_some() {
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {name}"));
    assert_eq!(actual, expected, "golden file {name} differs");
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect()
}

#[test]
fn handed_over_qubit_is_dead_from_cycle_two() {
    let tmp = tempdir().unwrap();
    let csv_path = tmp.path().join("book.csv");
    let out = qvul(
        &data_dir(),
        &[
            "analyze",
            "--circuit",
            "first_level.qasm",
            "--csv",
            csv_path.to_str().unwrap(),
        ],
    );
    let report = ok(&out);
    assert_eq!(report["depth"], 4);
    let rows = csv_rows(&std::fs::read_to_string(&csv_path).unwrap());
    for row in rows.iter().filter(|r| r[0] == "1") {
        let cycle: usize = row[1].parse().unwrap();
        assert_eq!(row[6] == "1", cycle < 2, "qubit 1 cycle {cycle}: {row:?}");
    }
    assert!(rows.iter().filter(|r| r[0] == "0").all(|r| r[6] == "1"));
}

#[test]
fn unused_ancilla_row_is_entirely_unace() {
    let tmp = tempdir().unwrap();
    let csv_path = tmp.path().join("book.csv");
    let report = ok(&qvul(
        &data_dir(),
        &[
            "analyze",
            "--circuit",
            "unused_ancilla.qasm",
            "--csv",
            csv_path.to_str().unwrap(),
        ],
    ));
    assert_eq!(report["classes"]["unused_ancilla"], 1);
    let rows = csv_rows(&std::fs::read_to_string(&csv_path).unwrap());
    let ancilla: Vec<_> = rows.iter().filter(|r| r[0] == "2").collect();
    assert!(!ancilla.is_empty());
    assert!(
        ancilla.iter().all(|r| r[6] == "0" && r[7] == "unused_ancilla"),
        "{ancilla:?}"
    );
}

#[test]
fn malformed_qasm_is_an_input_error() {
    let out = qvul(&data_dir(), &["analyze", "--circuit", "malformed.qasm"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed.qasm"));
    let out = qvul(&data_dir(), &["analyze", "--circuit", "no_such_file.qasm"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_calibration_entry_is_an_estimation_failure() {
    let out = qvul(
        &data_dir(),
        &[
            "estimate",
            "--circuit",
            "ghz3.qasm",
            "--calib",
            "line3_missing_edge.json",
        ],
    );
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn empty_circuit_is_perfect() {
    let report = ok(&qvul(
        &data_dir(),
        &["estimate", "--circuit", "empty.qasm", "--calib", "full2.json"],
    ));
    let e = &report["estimates"][0];
    assert_eq!((e["esp"].as_f64(), e["one_minus_cqv"].as_f64()), (Some(1.0), Some(1.0)));
    assert_eq!((e["qvf"].as_f64(), e["uqvf"].as_f64()), (Some(0.0), Some(0.0)));
}

#[test]
fn weight_extremes_bracket_the_prediction() {
    let at = |w: &str| {
        let r = ok(&qvul(
            &data_dir(),
            &[
                "estimate",
                "--circuit",
                "ghz3.qasm",
                "--calib",
                "line3.json",
                "--weight",
                w,
            ],
        ));
        r["estimates"][0]["one_minus_cqv"].as_f64().unwrap()
    };
    let (lo, mid, hi) = (at("1"), at("0.3"), at("0"));
    assert!(lo <= mid && mid <= hi, "{lo} {mid} {hi}");
    assert!(lo < hi);
}

#[test]
fn estimate_batch_matches_golden_files() {
    let tmp = tempdir().unwrap();
    let plot = tmp.path().join("plot.csv");
    let out = qvul(
        &data_dir(),
        &[
            "estimate",
            "--circuit",
            "ghz3.qasm",
            "unused_ancilla.qasm",
            "--calib",
            "line3.json",
            "--weight",
            "0.25",
            "--real-sr",
            "0.9",
            "0.95",
            "--plot",
            plot.to_str().unwrap(),
        ],
    );
    ok(&out);
    let stdout: String = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| {
            if l.trim_start().starts_with("\"timestamp\"") {
                "    \"timestamp\": \"-\",\n".to_string()
            } else {
                format!("{l}\n")
            }
        })
        .collect();
    let plot_text = std::fs::read_to_string(&plot).unwrap();
    assert_eq!(csv_rows(&plot_text).len(), 2);
    golden("estimate_batch.csv", &plot_text);
    golden("estimate_batch.json", &stdout);
}

#[test]
fn reports_are_reproducible_apart_from_the_timestamp() {
    let run = |threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_qvul"))
            .current_dir(data_dir())
            .args(["compare", "--suite", "suite.json"])
            .env("QVUL_THREADS", threads)
            .output()
            .unwrap();
        without_timestamp(ok(&out))
    };
    let a = run("1");
    let b = run("3");
    assert_eq!(a, b);
    assert_eq!(a["rows"].as_array().unwrap().len(), 2);
    assert_eq!(a["rows"][0]["id"], "ghz");
    assert_eq!(a["rows"][1]["id"], "unused_ancilla");
    assert_eq!(a["manifest"]["inputs"][0]["path"], "suite.json");
    assert_eq!(a["manifest"]["seed"], 7);
}

#[test]
fn oracle_reads_expected_from_comment() {
    let args = [
        "oracle",
        "--circuit",
        "ghz3.qasm",
        "--calib",
        "line3.json",
        "--shots",
        "3000",
        "--seed",
        "4",
    ];
    let a = without_timestamp(ok(&qvul(&data_dir(), &args)));
    let b = without_timestamp(ok(&qvul(&data_dir(), &args)));
    assert_eq!(a, b);
    assert_eq!(a["expected"], "000");
    assert_eq!(a["trials"], 3000);
    let sr = a["sr"].as_f64().unwrap();
    assert!(sr > 0.5 && sr < 1.0, "{sr}");
    let noiseless = ok(&qvul(
        &data_dir(),
        &["oracle", "--circuit", "ghz3.qasm", "--shots", "100"],
    ));
    assert_eq!(noiseless["sr"].as_f64(), Some(1.0));
}

#[test]
fn bench_transpile_sweep_fit_compare() {
    let tmp = tempdir().unwrap();
    let dir = tmp.path();
    std::fs::copy(data_dir().join("line3.json"), dir.join("cal.json")).unwrap();
    ok_status(&qvul(
        dir,
        &["bench", "--name", "bv", "--size", "3", "--out", "bv.qasm"],
    ));
    let text = std::fs::read_to_string(dir.join("bv.qasm")).unwrap();
    assert!(text.contains("// expected: 10"), "{text}");
    ok_status(&qvul(
        dir,
        &[
            "transpile",
            "--circuit",
            "bv.qasm",
            "--device",
            "line-3",
            "--out",
            "bv_c.qasm",
        ],
    ));
    let sweep = ok(&qvul(
        dir,
        &[
            "weight",
            "sweep",
            "--circuit",
            "bv_c.qasm",
            "--calib",
            "cal.json",
            "--runs",
            "runs.json",
            "--csv",
            "sweep.csv",
        ],
    ));
    assert_eq!(sweep["real_sr_source"], "oracle");
    let sweep_rows = csv_rows(&std::fs::read_to_string(dir.join("sweep.csv")).unwrap());
    assert_eq!(sweep_rows.len(), 101);
    assert_eq!(sweep_rows[100][0], "1.00");
    let model = ok(&qvul(dir, &["weight", "fit", "--in", "runs.json", "--machine", "line"]));
    assert_eq!(model["machine"], "line");
    std::fs::write(dir.join("model.json"), model.to_string()).unwrap();
    std::fs::write(
        dir.join("suite.json"),
        r#"{"calibration": "cal.json", "shots": 500, "model": "model.json", "circuits": [{"path": "bv_c.qasm"}]}"#,
    )
    .unwrap();
    let cmp = ok(&qvul(dir, &["compare", "--suite", "suite.json"]));
    let row = &cmp["rows"][0];
    assert_eq!(row["weight"], model["bins"][0]["weight"]);
    assert_eq!(cmp["mean_esp_abs_error"], row["esp_abs_error"]);
}

fn ok_status(out: &Output) {
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn transpile_without_device_is_an_input_error() {
    let tmp = tempdir().unwrap();
    ok_status(&qvul(
        tmp.path(),
        &["bench", "--name", "qft", "--size", "3", "--out", "q.qasm"],
    ));
    assert_eq!(
        qvul(tmp.path(), &["transpile", "--circuit", "q.qasm"]).status.code(),
        Some(2)
    );
    assert_eq!(
        qvul(
            tmp.path(),
            &["transpile", "--circuit", "q.qasm", "--device", "grid-1x2"]
        )
        .status
        .code(),
        Some(1)
    );
}
