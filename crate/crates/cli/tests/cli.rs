use std::path::Path;
use std::process::{Command, Output};

fn qaoasym(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qaoasym"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(args: &[&str]) -> serde_json::Value {
    let mut full = vec!["--json"];
    full.extend_from_slice(args);
    let o = qaoasym(&full);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn write_k33(dir: &Path) -> String {
    let path = dir.join("k33.txt");
    let mut text = String::from("6\n");
    for u in 0..3 {
        for v in 3..6 {
            text.push_str(&format!("{u} {v}\n"));
        }
    }
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn verify_passes_on_k33() {
    let dir = tempfile::tempdir().unwrap();
    let k33 = write_k33(dir.path());
    let o = qaoasym(&["verify", &k33, "-p", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&["verify", &k33]);
    assert!(v["spread"]["probability"].as_f64().unwrap() < 1e-10);
    assert!(v["spread"]["amplitude"].as_f64().unwrap() < 1e-10);
}

#[test]
fn reduce_reports_hamming_dimensions() {
    let v = json(&["reduce", "complete:8"]);
    assert_eq!(v["dim_without_flip"]["dim"], 9);
    assert_eq!(v["dim_with_flip"]["dim"], 5);
}

#[test]
fn features_of_an_asymmetric_tree() {
    let v = &json(&["features", "trivial-aut:9,0@4"])["features"];
    assert_eq!(v["log_aut"].as_f64(), Some(0.0));
    assert_eq!(v["entropy"].as_f64(), Some(0.0));
    assert_eq!(v["n_orbits"], 9);
}

#[test]
fn pmin_of_a_complete_graph() {
    let v = json(&["--restarts", "4", "--seed", "1", "pmin", "complete:6"]);
    assert_eq!(v["p_min"], 2);
    assert!(v["ratio_achieved"].as_f64().unwrap() >= 0.95);
}

#[test]
fn simulate_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let o = qaoasym(&[
            "--seed",
            "5",
            "simulate",
            "cycle:5",
            "-p",
            "2",
            "--probs",
            path.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        (stdout(&o), std::fs::read_to_string(path).unwrap())
    };
    let (a, pa) = run("a.csv");
    let (b, pb) = run("b.csv");
    assert_eq!(a, b);
    assert_eq!(pa, pb);
    assert_eq!(pa.lines().filter(|l| !l.is_empty()).count(), 33);
}

#[test]
fn invalid_input_exits_2() {
    assert_eq!(qaoasym(&["features", "nonsense:3"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("loop.txt");
    std::fs::write(&bad, "2\n0 0\n").unwrap();
    assert_eq!(
        qaoasym(&["features", bad.to_str().unwrap()]).status.code(),
        Some(2)
    );
    assert_eq!(
        qaoasym(&["simulate", "cycle:4", "--schedule", "1,2,3"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn oversized_input_exits_3() {
    assert_eq!(qaoasym(&["pmin", "cycle:30"]).status.code(), Some(3));
    assert_eq!(
        qaoasym(&["simulate", "cycle:40", "-p", "1"]).status.code(),
        Some(3)
    );
}

#[test]
fn dataset_train_predict_report() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("smoke.jsonl");
    let data_s = data.to_str().unwrap();
    let o = qaoasym(&[
        "--restarts",
        "2",
        "gen-dataset",
        "--config",
        "smoke",
        "--out",
        data_s,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_to_string(&data).unwrap().lines().count(), 20);

    let report = qaoasym(&["report", "--dataset", data_s]);
    assert!(report.status.success());
    assert!(stdout(&report).contains("log_aut"));

    // Twenty records are below the training minimum.
    let model = dir.path().join("model.txt");
    let o = qaoasym(&[
        "train",
        "--dataset",
        data_s,
        "--model",
        model.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn train_then_predict() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("small.toml");
    std::fs::write(
        &config,
        r#"
name = "small"
seed = 3
restarts = 2

[[families]]
family = "complete"
n = [3, 14]

[[families]]
family = "star"
n = [4, 12]

[[families]]
family = "cycle"
n = [3, 9]

[[families]]
family = "wheel"
n = [5, 9]
"#,
    )
    .unwrap();
    let data = dir.path().join("small.jsonl");
    let model = dir.path().join("model.txt");
    let reports = dir.path().join("reports");
    let p = |x: &Path| x.to_str().unwrap().to_string();
    let o = qaoasym(&["gen-dataset", "--config", &p(&config), "--out", &p(&data)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = qaoasym(&[
        "train",
        "--dataset",
        &p(&data),
        "--model",
        &p(&model),
        "--report-dir",
        &p(&reports),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["report.md", "report.json", "scatter.csv", "split.json"] {
        assert!(reports.join(name).is_file(), "{name}");
    }
    let a = stdout(&qaoasym(&[
        "predict",
        "--model",
        &p(&model),
        "--dataset",
        &p(&data),
    ]));
    let b = stdout(&qaoasym(&[
        "predict",
        "--model",
        &p(&model),
        "--dataset",
        &p(&data),
    ]));
    assert_eq!(a, b);
    let v = json(&["predict", "--model", &p(&model), "hand-picked:petersen"]);
    assert!(v["regression"].as_f64().unwrap().is_finite());
    assert!(v["ordinal"].as_f64().unwrap().is_finite());
}
