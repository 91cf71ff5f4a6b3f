use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn qrel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrel"))
        .args(args)
        .env_remove("QREL_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn fx(name: &str) -> String {
    fixture(name).display().to_string()
}

/// Cells of the markdown row whose first cell is `first`.
fn row<'a>(text: &'a str, first: &str) -> Vec<&'a str> {
    text.lines()
        .map(|l| {
            l.trim_matches('|')
                .split('|')
                .map(str::trim)
                .collect::<Vec<_>>()
        })
        .find(|cells| cells[0] == first)
        .unwrap_or_else(|| panic!("no row {first:?}"))
}

fn num(cell: &str) -> f64 {
    cell.parse()
        .unwrap_or_else(|_| panic!("not a number: {cell:?}"))
}

#[test]
fn reports_match_golden_files() {
    for q in ["q1", "q2", "q3"] {
        let got = stdout(&qrel(&["report", &fx(&format!("replica_{q}.json"))]));
        let want = fs::read_to_string(fixture(&format!("golden/report_{q}.md"))).unwrap();
        assert_eq!(got, want, "report for {q} drifted from its golden file");
    }
}

#[test]
fn query1_report_shows_negative_wigner_entry() {
    let text = fs::read_to_string(fixture("golden/report_q1.md")).unwrap();
    let r1 = row(&text, "row 1");
    let r2 = row(&text, "row 2");
    assert!((num(r1[1]) - 0.5939).abs() <= 1e-3, "{r1:?}");
    assert!((num(r2[1]) + 0.0939).abs() <= 1e-3, "{r2:?}");
    assert!(text.contains("negative entries: yes"));
}

#[test]
fn query2_report_ltp_row() {
    let text = fs::read_to_string(fixture("golden/report_q2.md")).unwrap();
    let cells = row(&text, "0.5207");
    assert_eq!(cells[1], "0.4857");
}

#[test]
fn query3_report_zero_effect_cell() {
    let text = fs::read_to_string(fixture("golden/report_q3.md")).unwrap();
    assert!(
        text.lines()
            .any(|l| l.starts_with(r"| P(R+\|U-,T+) | 0.0000 |")),
        "{text}"
    );
}

#[test]
fn fit_writes_model_with_published_angle() {
    let dir = tempfile::tempdir().unwrap();
    for (q, theta) in [("q1", 80.62), ("q2", 56.79), ("q3", 51.43)] {
        let path = dir.path().join(format!("{q}.json"));
        let out = qrel(&[
            "fit",
            &fx(&format!("conditionals_{q}.json")),
            "--output",
            path.to_str().unwrap(),
        ]);
        stdout(&out);
        let doc: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        let got = doc["theta_r_deg"].as_f64().unwrap();
        assert!((got - theta).abs() <= 0.1, "{q}: {got}");
    }
}

#[test]
fn fit_uses_output_dir_variable() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_qrel"))
        .args(["fit", &fx("conditionals_q2.json")])
        .env("QREL_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    stdout(&out);
    assert!(dir.path().join("q2.model.json").exists());
}

#[test]
fn infeasible_fit_exits_with_status_4() {
    let dir = tempfile::tempdir().unwrap();
    let out = qrel(&[
        "fit",
        &fx("infeasible.json"),
        "--output",
        dir.path().join("m.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("infeasible") && err.contains("4.277778"),
        "{err}"
    );
}

#[test]
fn missing_data_exits_with_status_5() {
    // Conditionals alone do not determine the effect tables.
    let out = qrel(&["report", &fx("conditionals_q1.json")]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn malformed_model_names_the_field() {
    let out = qrel(&[
        "simulate",
        "--model",
        &fx("malformed_model.json"),
        "-n",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`r`"));
}

#[test]
fn bad_csv_exits_with_parse_status() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(
        &path,
        "respondent_id,query_id,sequence,answer1,answer2,answer3\np1,q1,URT,yes,no,no\n",
    )
    .unwrap();
    let out = qrel(&["report", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        stdout(&qrel(&[
            "simulate",
            "--model",
            &fx("model_q1.json"),
            "-n",
            "10",
            "--seed",
            "1",
            "--output",
            p.to_str().unwrap(),
        ]));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert_eq!(text.lines().count(), 11);
}

#[test]
fn simulate_then_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sim.csv");
    let out = qrel(&[
        "--format",
        "json",
        "simulate",
        "--model",
        &fx("model_q1.json"),
        "-n",
        "400000",
        "--seed",
        "5",
        "--output",
        csv.to_str().unwrap(),
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let t_pos = &v["probabilities"][0];
    assert_eq!(t_pos["label"], "P(T+)");
    let emp = t_pos["empirical"].as_f64().unwrap();
    let sigma = (0.7622f64 * (1.0 - 0.7622) / 400_000.0).sqrt();
    assert!((emp - 0.7622).abs() <= 3.0 * sigma + 5e-5, "{emp}");

    let out = qrel(&[
        "--format",
        "json",
        "fit",
        csv.to_str().unwrap(),
        "--output",
        dir.path().join("m.json").to_str().unwrap(),
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let theta = v["theta_r_deg"].as_f64().unwrap();
    assert!((theta - 80.62).abs() < 1.5, "{theta}");
}

#[test]
fn spin_demo_setups() {
    let a = stdout(&qrel(&[
        "spin-demo",
        "a",
        "--shots",
        "10000",
        "--seed",
        "3",
    ]));
    assert_eq!(row(&a, "2")[3], "0");
    let c = stdout(&qrel(&[
        "spin-demo",
        "c",
        "--shots",
        "10000",
        "--seed",
        "3",
    ]));
    let last = row(&c, "3");
    assert!(num(last[2]) > 0.0 && num(last[3]) > 0.0, "{last:?}");
    let one = stdout(&qrel(&["spin-demo", "b", "--shots", "1"]));
    let line = one.lines().find(|l| l.starts_with("trajectory: ")).unwrap();
    assert!(line.starts_with("trajectory: Z+ -> X"), "{line}");
}

fn sweep(model: &str, steps: &str) -> Vec<Vec<f64>> {
    let text = stdout(&qrel(&[
        "sweep-theta",
        "--model",
        &fx(model),
        "--steps",
        steps,
    ]));
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("theta_deg,interference,p_direct,p_ltp_sum")
    );
    lines.map(|l| l.split(',').map(num).collect()).collect()
}

#[test]
fn sweep_theta_columns() {
    let rows = sweep("model_u_one.json", "7");
    assert_eq!(rows.len(), 7);
    assert!(rows.iter().all(|r| r[1] == 0.0));

    let rows = sweep("model_q1.json", "9001");
    let at = rows
        .iter()
        .find(|r| r[0] == 80.62)
        .expect("80.62 on the grid");
    assert!((at[1] - 0.0249).abs() <= 1e-3, "{at:?}");
    let (first, last) = (&rows[0], &rows[rows.len() - 1]);
    assert_eq!((first[0], last[0]), (0.0, 180.0));
    for r in &rows {
        assert!(first[1] <= r[1] && r[1] <= last[1], "{r:?}");
    }
}

#[test]
fn sweep_theta_rejects_one_step() {
    assert_eq!(
        qrel(&[
            "sweep-theta",
            "--model",
            &fx("model_q1.json"),
            "--steps",
            "1"
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn json_output_parses() {
    for args in [
        vec!["--format", "json", "report"],
        vec!["--format", "json", "ltp"],
    ] {
        let mut args: Vec<String> = args.into_iter().map(String::from).collect();
        args.push(fx("replica_q2.json"));
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let v: serde_json::Value = serde_json::from_str(&stdout(&qrel(&refs))).unwrap();
        assert!(v.is_array());
    }
    let v: serde_json::Value = serde_json::from_str(&stdout(&qrel(&[
        "--format",
        "json",
        "operators",
        "--model",
        &fx("model_q1.json"),
    ])))
    .unwrap();
    assert_eq!(v["commutators"].as_array().unwrap().len(), 3);
}
