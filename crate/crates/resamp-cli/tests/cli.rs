//! Behavior tests for the `resamp` binary: exit codes, help text,
//! determinism, and agreement between its subcommands.

use std::path::Path;
use std::process::{Command, Output};

use resamp::RngState;

const BIN: &str = env!("CARGO_BIN_EXE_resamp");

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_csv(dir: &Path, name: &str, columns: &[&[f64]]) -> String {
    let n = columns[0].len();
    let mut text = String::new();
    for i in 0..n {
        let row: Vec<String> = columns.iter().map(|c| format!("{:.17}", c[i])).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn normal_vec(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = RngState::new(seed).rng();
    (0..n).map(|_| rng.standard_normal()).collect()
}

#[test]
fn help_documents_the_defaults() {
    for sub in ["corr", "ttest2", "james", "batch", "validate", "bench"] {
        let out = run(&[sub, "--help"]);
        assert!(out.status.success(), "{sub} --help failed");
        let text = stdout(&out);
        assert!(text.contains("42"), "{sub} --help misses seed default");
        if sub != "bench" {
            assert!(text.contains("999"), "{sub} --help misses B default");
            assert!(
                text.contains("efficient"),
                "{sub} --help misses method default"
            );
        }
        if sub == "validate" || sub == "batch" {
            assert!(text.contains("0.05"), "{sub} --help misses alpha default");
        }
    }
}

#[test]
fn usage_errors_exit_one_before_reading_files() {
    // No subcommand.
    assert_eq!(run(&[]).status.code(), Some(1));
    // Unknown flag.
    assert_eq!(run(&["corr", "x.csv", "--frobnicate"]).status.code(), Some(1));
    // Method invalid for the subcommand — checked before the (missing)
    // file would be opened, so this must be 1, not 2.
    let out = run(&["corr", "/definitely/not/there.csv", "--method", "neto"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("not available"));
    let out = run(&["james", "/no/a.csv", "/no/b.csv", "--method", "naive"]);
    assert_eq!(out.status.code(), Some(1));
    // B = 0 rejected.
    assert_eq!(
        run(&["corr", "/definitely/not/there.csv", "-B", "0"]).status.code(),
        Some(1)
    );
    // Unknown validate test name.
    assert_eq!(
        run(&["validate", "--test", "anova"]).status.code(),
        Some(1)
    );
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    // Missing file.
    assert_eq!(
        run(&["corr", dir.path().join("nope.csv").to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    // Non-numeric cell.
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "1,2\n3,oops\n5,6\n7,8\n").unwrap();
    let out = run(&["corr", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    // 1-based row:col coordinates of the offending cell.
    assert!(stderr(&out).contains(":2:2:"), "{}", stderr(&out));
    // Ragged row.
    let ragged = dir.path().join("ragged.csv");
    std::fs::write(&ragged, "1,2\n3\n").unwrap();
    assert_eq!(run(&["corr", ragged.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn degenerate_statistics_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let constant = write_csv(
        dir.path(),
        "const.csv",
        &[&[3.0; 8], &normal_vec(8, 1)],
    );
    let out = run(&["corr", &constant]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("zero variance"));

    // Singular covariance: duplicate coordinate columns.
    let col = normal_vec(10, 2);
    let y1 = write_csv(dir.path(), "y1.csv", &[&col, &col]);
    let y2 = write_csv(dir.path(), "y2.csv", &[&normal_vec(10, 3), &normal_vec(10, 4)]);
    assert_eq!(run(&["james", &y1, &y2]).status.code(), Some(3));
}

#[test]
fn fixed_seed_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let xy = write_csv(dir.path(), "xy.csv", &[&normal_vec(30, 5), &normal_vec(30, 6)]);
    for extra in [&[][..], &["--json"][..]] {
        let mut args = vec!["corr", xy.as_str(), "--seed", "11"];
        args.extend_from_slice(extra);
        let a = run(&args);
        let b = run(&args);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout);
    }
}

#[test]
fn json_documents_carry_the_schema_tag() {
    let dir = tempfile::tempdir().unwrap();
    let xy = write_csv(dir.path(), "xy.csv", &[&normal_vec(12, 7), &normal_vec(12, 8)]);
    let out = run(&["corr", &xy, "--json"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["schema"], "1");
    assert_eq!(doc["test"], "corr");
    assert!(doc["pvalue"].as_f64().unwrap() > 0.0);
}

#[test]
fn ttest2_label_and_two_file_forms_agree() {
    let dir = tempfile::tempdir().unwrap();
    let g1 = normal_vec(10, 21);
    let g2: Vec<f64> = normal_vec(12, 22).iter().map(|v| v + 0.5).collect();
    let f1 = write_csv(dir.path(), "g1.csv", &[&g1]);
    let f2 = write_csv(dir.path(), "g2.csv", &[&g2]);

    let mut stacked: Vec<f64> = g1.clone();
    stacked.extend_from_slice(&g2);
    let fs = write_csv(dir.path(), "stacked.csv", &[&stacked]);
    let labels = ["a"; 10]
        .iter()
        .chain(["b"; 12].iter())
        .copied()
        .collect::<Vec<_>>()
        .join(",");

    let two_files = run(&["ttest2", &f1, &f2, "--seed", "3"]);
    let labeled = run(&["ttest2", &fs, "--labels", &labels, "--seed", "3"]);
    assert!(two_files.status.success() && labeled.status.success());
    assert_eq!(two_files.stdout, labeled.stdout);
}

#[test]
fn asymptotic_and_bootstrap_pvalues_agree_on_well_behaved_data() {
    let dir = tempfile::tempdir().unwrap();
    let f1 = write_csv(dir.path(), "a.csv", &[&normal_vec(100, 31)]);
    let f2 = write_csv(dir.path(), "b.csv", &[&normal_vec(100, 32)]);
    let p = |method: &str| -> f64 {
        let out = run(&["ttest2", &f1, &f2, "--method", method, "-B", "9999", "--json"]);
        assert!(out.status.success());
        let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
        doc["pvalue"].as_f64().unwrap()
    };
    let (asy, boot) = (p("asymptotic"), p("efficient"));
    assert!(
        (asy - boot).abs() < 0.1,
        "asymptotic {asy} vs bootstrap {boot}"
    );
}

#[test]
fn james_on_identical_samples_accepts_the_null() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (normal_vec(15, 41), normal_vec(15, 42), normal_vec(15, 43));
    let y = write_csv(dir.path(), "same.csv", &[&a, &b, &c]);
    let out = run(&["james", &y, &y, "--json"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(doc["pvalue"].as_f64().unwrap() > 0.9);
    assert_eq!(doc["statistic"].as_f64().unwrap(), 0.0);
}

#[test]
fn one_dimensional_james_matches_squared_welch() {
    let dir = tempfile::tempdir().unwrap();
    let g1 = normal_vec(20, 51);
    let g2: Vec<f64> = normal_vec(24, 52).iter().map(|v| 1.3 * v + 0.2).collect();
    let f1 = write_csv(dir.path(), "j1.csv", &[&g1]);
    let f2 = write_csv(dir.path(), "j2.csv", &[&g2]);

    let get = |args: &[&str]| -> serde_json::Value {
        let out = run(args);
        assert!(out.status.success(), "{}", stderr(&out));
        serde_json::from_str(&stdout(&out)).unwrap()
    };
    let welch = get(&["ttest2", &f1, &f2, "--method", "asymptotic", "--json"]);
    let james = get(&["james", &f1, &f2, "--json"]);
    let t = welch["statistic"].as_f64().unwrap();
    let j = james["statistic"].as_f64().unwrap();
    assert!(
        (j - t * t).abs() <= 1e-10 * (t * t).abs().max(1.0),
        "james {j} vs welch² {}",
        t * t
    );
}

#[test]
fn batch_writes_a_complete_tsv() {
    let dir = tempfile::tempdir().unwrap();
    // 8 rows × 3 columns: one clean, one constant, one with an NA.
    let text = "1.0,5,0.8\n2.0,5,0.9\n1.5,5,NA\n2.5,5,1.1\n1.2,5,0.7\n2.2,5,1.3\n1.8,5,0.6\n0.8,5,1.2\n";
    let input = dir.path().join("m.csv");
    std::fs::write(&input, text).unwrap();
    let outdir = dir.path().join("out");
    let labels = "a,a,a,a,b,b,b,b";
    let out = run(&[
        "batch",
        "--input",
        input.to_str().unwrap(),
        "--labels",
        labels,
        "--output",
        outdir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let tsv = std::fs::read_to_string(outdir.join("results.tsv")).unwrap();
    let lines: Vec<&str> = tsv.lines().collect();
    assert_eq!(lines.len(), 4); // header + 3 columns
    assert!(lines[1].starts_with("col1\t"));
    assert!(lines[2].contains("degenerate"));
    assert!(lines[3].contains("skipped="));
    let summary = stdout(&out);
    assert!(summary.contains("tested=1"), "{summary}");
    assert!(summary.contains("degenerate=1"), "{summary}");
    assert!(summary.contains("skipped=1"), "{summary}");
}

#[test]
fn validate_smoke_produces_report_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let outdir = dir.path().join("v");
    let out = run(&[
        "validate",
        "--test",
        "corr",
        "--n",
        "12",
        "--reps",
        "40",
        "-B",
        "199",
        "--output",
        outdir.to_str().unwrap(),
        "--json",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["schema"], "1");
    assert_eq!(doc["reps"], 40);
    assert!(outdir.join("null_corr_efficient.json").exists());
    let tsv = std::fs::read_to_string(outdir.join("null_corr_efficient_quantiles.tsv")).unwrap();
    assert!(tsv.starts_with("prob\t"));
}
