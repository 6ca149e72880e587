//! End-to-end tests of the command-line binary.

use std::path::PathBuf;
use std::process::Command;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use split_logit::io::ModelFile;
use split_logit::simulate::generate_labels;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_split-logit"))
}

fn write_csv(dir: &std::path::Path, n: usize, p: usize, seed: u64) -> (PathBuf, Array2<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_fn((n, p), |_| rng.gen_range(-1.0..1.0f64));
    let beta = Array1::from_shape_fn(p, |j| if j < p / 2 { 1.2 } else { 0.0 });
    let y = generate_labels(&x, 0.0, &beta, &mut rng);
    let mut text = (1..=p).map(|j| format!("x{j}")).collect::<Vec<_>>().join(",");
    text.push_str(",y\n");
    for i in 0..n {
        for j in 0..p {
            text.push_str(&format!("{:.10},", x[(i, j)]));
        }
        text.push_str(&format!("{}\n", if y[i] > 0.0 { 1 } else { 0 }));
    }
    let path = dir.join(format!("data_{seed}.csv"));
    std::fs::write(&path, text).unwrap();
    (path, x)
}

#[test]
fn fit_collapses_at_zero_diversity_and_predict_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let (data_path, x) = write_csv(dir.path(), 80, 6, 42);
    let model_path = dir.path().join("model.json");

    let status = bin()
        .args([
            "fit",
            "--data",
            data_path.to_str().unwrap(),
            "--lambda-sparsity",
            "0.05",
            "--lambda-diversity",
            "0",
            "-G",
            "3",
            "--out",
            model_path.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());

    let model = ModelFile::load(&model_path).unwrap();
    assert_eq!(model.g, 3);
    let fit = model.to_fit().unwrap();
    // λ_d = 0: the three models are identical
    for k in 1..3 {
        assert!((fit.intercepts[k] - fit.intercepts[0]).abs() < 1e-6);
        for j in 0..fit.p() {
            assert!((fit.coefs[(j, k)] - fit.coefs[(j, 0)]).abs() < 1e-6);
        }
    }

    let output = bin()
        .args([
            "predict",
            "--model",
            model_path.to_str().unwrap(),
            "--data",
            data_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "row,probability,class");
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        let printed: f64 = fields[1].parse().unwrap();
        let expected = fit.predict_proba_original(x.row(i)).unwrap();
        // 10 significant digits printed; compare at that precision
        assert!(
            (printed - expected).abs() <= 1e-9 * expected.abs().max(1e-3),
            "row {i}: printed {printed}, expected {expected}"
        );
    }
}

#[test]
fn path_rows_are_totally_ordered() {
    let dir = tempfile::tempdir().unwrap();
    let (data_path, _) = write_csv(dir.path(), 60, 4, 7);
    let output = bin()
        .args([
            "path",
            "--data",
            data_path.to_str().unwrap(),
            "-G",
            "2",
            "--grid-size-sparsity",
            "6",
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    let rows: Vec<Vec<String>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    // 6 lambdas × (2 models + ensemble) × 4 variables
    assert_eq!(rows.len(), 6 * 3 * 4);
    let key = |r: &Vec<String>| {
        let ls: f64 = r[0].parse().unwrap();
        (-ls * 1e15, r[1].clone(), r[2].clone())
    };
    let mut prev = key(&rows[0]);
    for r in &rows[1..] {
        let k = key(r);
        assert!(
            (k.0, &k.1, &k.2) >= (prev.0, &prev.1, &prev.2),
            "rows out of order near {r:?}"
        );
        prev = k;
    }
}

#[test]
fn diversity_report_has_all_keys() {
    let dir = tempfile::tempdir().unwrap();
    let (data_path, _) = write_csv(dir.path(), 80, 6, 9);
    let model_path = dir.path().join("model.json");
    assert!(bin()
        .args([
            "fit",
            "--data",
            data_path.to_str().unwrap(),
            "--lambda-sparsity",
            "0.03",
            "--lambda-diversity",
            "0.5",
            "-G",
            "3",
            "--out",
            model_path.to_str().unwrap(),
        ])
        .status()
        .unwrap()
        .success());
    let output = bin()
        .args([
            "diversity",
            "--model",
            model_path.to_str().unwrap(),
            "--data",
            data_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    for key in ["EM", "DIS", "DF", "KW", "GD", "OV", "MR", "MRbar", "MR1", "MR2", "MR3"] {
        assert!(
            text.lines().any(|l| l.starts_with(&format!("{key},"))),
            "missing key {key} in report:\n{text}"
        );
    }
}

#[test]
fn exit_codes() {
    // usage error: both penalties fixed leaves cv nothing to tune
    let dir = tempfile::tempdir().unwrap();
    let (data_path, _) = write_csv(dir.path(), 40, 3, 11);
    let status = bin()
        .args([
            "cv",
            "--data",
            data_path.to_str().unwrap(),
            "--lambda-sparsity",
            "0.1",
            "--lambda-diversity",
            "0.1",
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));

    // data error: missing file
    let status = bin()
        .args(["fit", "--data", "/nonexistent.csv", "--out", "/tmp/x.json"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // usage error: unknown flag
    let status = bin().args(["fit", "--bogus"]).status().unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn deterministic_given_seed() {
    let dir = tempfile::tempdir().unwrap();
    let (data_path, _) = write_csv(dir.path(), 60, 5, 13);
    let run = || {
        let out = bin()
            .args([
                "cv",
                "--data",
                data_path.to_str().unwrap(),
                "-G",
                "2",
                "--lambda-diversity",
                "0",
                "--cv-folds",
                "4",
                "--grid-size-sparsity",
                "8",
                "--seed",
                "5",
            ])
            .output()
            .unwrap();
        assert!(out.status.success());
        String::from_utf8(out.stdout).unwrap()
    };
    assert_eq!(run(), run());
}
