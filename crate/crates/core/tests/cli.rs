use std::path::Path;
use std::process::{Command, Output};

fn tanglesim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tanglesim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn attack_sweep_alias_and_threshold_list() {
    let out = tanglesim(&["attack-sweep", "--regime", "hr", "--m", "50,100,150", "--mu", "10,25,50"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "regime,m,lambda,mu,p,q,prob_formula,prob_mc,mc_se,method,provenance,seed,spec_hash"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 9);
    // m = 50 and m = 100 sit below W(t0) and share the rate ratio
    assert_eq!(rows[0][6], "0.2");
    assert_eq!(rows[3][6], "0.2");
    assert_eq!(rows[2][6], "1.0");
    assert!(rows[6][6].parse::<f64>().unwrap() < 0.2);
}

#[test]
fn exit_codes() {
    // validation error: LR needs a low rate below 1/h_r
    let out = tanglesim(&["analytic", "--kind", "delay", "--regime", "lr", "--lambda-low", "3"]);
    assert_eq!(code(&out), 3);
    let out = tanglesim(&["attack", "-m", "1"]);
    assert_eq!(code(&out), 3);
    // flag parse error
    let out = tanglesim(&["figure", "fig99"]);
    assert_eq!(code(&out), 2);
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bad.toml");
    std::fs::write(&spec, "kind = \"attack_sweep\"\nbogus = 1\n").unwrap();
    let out = tanglesim(&["run", path_str(&spec)]);
    assert_eq!(code(&out), 2);
    let out = tanglesim(&["run", path_str(&dir.path().join("missing.toml"))]);
    assert_eq!(code(&out), 2);
}

#[test]
fn spec_file_and_flags_agree() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{"kind": "confirmation_delay", "regimes": ["lr", "l2hr"], "thresholds": [50], "replications": 0}"#,
    )
    .unwrap();
    let a = dir.path().join("a.csv");
    let out = tanglesim(&["run", path_str(&spec), "--out", path_str(&a)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).starts_with("wrote 2 delay rows"));
    let text = std::fs::read_to_string(&a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[1].starts_with("lr,50,0.5,98.0,,,analytic,,"));
    assert!(lines[2].starts_with("l2hr,50,50.0,0.98,,,analytic,,"));
}

#[test]
fn json_output() {
    let out = tanglesim(&["analytic", "--kind", "delay", "--regime", "lr", "-m", "50", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let row = &v[0];
    assert_eq!(row["regime"], "lr");
    assert_eq!(row["delay_analytic"], 98.0);
    assert_eq!(row["provenance"], "analytic");
    assert!(row["seed"].is_null());
}

#[test]
fn same_seed_same_bytes_other_seed_changes_stochastic_columns_only() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: &str, name: &str| {
        let path = dir.path().join(name);
        let out = tanglesim(&[
            "simulate", "--regime", "lr,hr", "--times", "1,5,10", "--replications", "40", "--seed", seed, "--out",
            path_str(&path),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(&path).unwrap()
    };
    let a = run("7", "a.csv");
    let b = run("7", "b.csv");
    let c = run("8", "c.csv");
    assert_eq!(a, b);
    assert_ne!(a, c);
    let rows = |bytes: &[u8]| -> Vec<Vec<String>> {
        String::from_utf8(bytes.to_vec())
            .unwrap()
            .lines()
            .map(|l| l.split(',').map(str::to_owned).collect())
            .collect()
    };
    let (ra, rc) = (rows(&a), rows(&c));
    let stochastic = [3usize, 4, 6];
    for (x, y) in ra.iter().zip(&rc).skip(1) {
        for i in 0..x.len() {
            if !stochastic.contains(&i) {
                assert_eq!(x[i], y[i], "column {i}");
            }
        }
    }
}

#[test]
fn compare_identical_and_corrupted() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("analytic.csv");
    let out = tanglesim(&["analytic", "--regime", "lr", "--times", "1,5,10,50", "--out", path_str(&a)]);
    assert_eq!(code(&out), 0);
    let out = tanglesim(&["compare", path_str(&a), path_str(&a), "--tolerance", "0"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("max error 0.000e0"));

    let text = std::fs::read_to_string(&a).unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, text.replacen("lr,5.0,3.5,", "lr,5.0,4.5,", 1)).unwrap();
    let out = tanglesim(&["compare", path_str(&a), path_str(&bad), "--tolerance", "0.05"]);
    assert_eq!(code(&out), 4);
    let report = stdout(&out);
    assert!(report.contains("row 2 [lr,5.0]"), "{report}");
    assert!(report.lines().any(|l| l.starts_with("row 2") && l.ends_with("FAIL")));

    let other = dir.path().join("delay.csv");
    tanglesim(&["analytic", "--kind", "delay", "--out", path_str(&other)]);
    let out = tanglesim(&["compare", path_str(&a), path_str(&other)]);
    assert_eq!(code(&out), 2);
}

#[test]
fn lr_weight_simulation_within_five_percent() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let s = dir.path().join("s.csv");
    let times = "1,5,10,50,100";
    tanglesim(&["analytic", "--regime", "lr", "--times", times, "--out", path_str(&a)]);
    let out = tanglesim(&[
        "simulate", "--regime", "lr", "--times", times, "--replications", "10000", "--out", path_str(&s),
    ]);
    assert_eq!(code(&out), 0);
    let out = tanglesim(&["compare", path_str(&a), path_str(&s), "--tolerance", "0.05"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
}

#[test]
fn every_figure_runs() {
    let dir = tempfile::tempdir().unwrap();
    for fig in ["fig8", "fig9", "fig10", "fig11", "fig12", "fig13", "fig14", "fig15"] {
        let path = dir.path().join(format!("{fig}.csv"));
        let out = tanglesim(&["figure", fig, "--replications", "0", "--out", path_str(&path)]);
        assert_eq!(code(&out), 0, "{fig}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(std::fs::read_to_string(&path).unwrap().lines().count() > 2);
    }
}

#[test]
fn fig13_and_fig12_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig13.csv");
    let out = tanglesim(&["figure", "fig13", "--seed", "1", "--out", path_str(&path)]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&path).unwrap();
    // 4 regimes × 3 thresholds × 40 rates
    assert_eq!(text.lines().count(), 1 + 4 * 3 * 40);
    for m in ["50", "100", "200"] {
        assert!(text.lines().any(|l| l.split(',').nth(1) == Some(m)));
    }
    let path = dir.path().join("fig12.csv");
    let out = tanglesim(&["figure", "fig12", "--seed", "1", "--replications", "20", "--out", path_str(&path)]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 1 + 4 * 101);
    let row = text.lines().find(|l| l.starts_with("lr,10.0,")).unwrap();
    let cells: Vec<&str> = row.split(',').collect();
    assert_eq!(cells[2], "6.0");
    assert!(!cells[3].is_empty() && cells[7] == "simulation");
}
