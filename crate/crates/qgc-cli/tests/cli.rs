//! End-to-end checks of the `qgc` binary: every subcommand runs against real
//! files in a temp directory, and seeded commands reproduce their output.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qgc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qgc"))
        .args(args)
        .output()
        .expect("spawn qgc binary")
}

fn assert_ok(output: &Output, what: &str) {
    assert!(
        output.status.success(),
        "{what} failed with status {:?}\nstdout: {}\nstderr: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr),
    );
}

fn line_count(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count()
}

#[test]
fn gen_data_writes_seeded_csv_triplet() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let output = qgc(&[
            "gen-data",
            "--name",
            "moons",
            "--sizes",
            "80,20",
            "--seed",
            "3",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_ok(&output, "gen-data");
    }
    assert_eq!(line_count(&out_a.join("train.csv")), 81); // header + 80 rows
    assert_eq!(line_count(&out_a.join("test.csv")), 21);
    assert_eq!(line_count(&out_a.join("ood.csv")), 401);
    for file in ["train.csv", "test.csv", "ood.csv"] {
        assert_eq!(
            fs::read(out_a.join(file)).unwrap(),
            fs::read(out_b.join(file)).unwrap(),
            "{file} must be identical across same-seed runs"
        );
    }

    let bad = qgc(&["gen-data", "--name", "hexagons", "--out", out_a.to_str().unwrap()]);
    assert!(!bad.status.success(), "unknown dataset family must fail");
}

fn write_smoke_config(dir: &Path, run_dir: &Path) -> std::path::PathBuf {
    let config = serde_json::json!({
        "name": "cli-smoke",
        "dataset": { "source": "synthetic", "name": "moons", "sizes": [80, 20] },
        "model": {
            "n_ancilla": 1,
            "n_feature": 3,
            "n_label": 1,
            "classes": 2,
            "bandwidth": 0.0625,
            "feature_map": "qeff",
            "layers": 2
        },
        "train": {
            "mode": "generative",
            "learning_rate": 0.05,
            "epochs": 1,
            "batch_size": 32,
            "gradient_method": "adjoint",
            "seed": 7,
            "log_epsilon": 1e-12
        },
        "metrics": ["accuracy", "ood-mae", "spc", "mspc"],
        "output_dir": run_dir.to_str().unwrap(),
        "master_seed": 41
    });
    let path = dir.join("config.json");
    fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}

#[test]
fn train_eval_density_variance_finetune_lifecycle() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    let config = write_smoke_config(dir.path(), &run_dir);

    let output = qgc(&["train", "--config", config.to_str().unwrap()]);
    assert_ok(&output, "train");
    let report: serde_json::Value =
        serde_json::from_slice(&output.stdout).expect("train prints the report as JSON");
    assert_eq!(report["name"], "cli-smoke");
    assert_eq!(report["master_seed"], 41);
    let checkpoint = run_dir.join("checkpoint.json");
    assert!(checkpoint.exists());
    assert!(run_dir.join("results.json").exists());

    // Materialize CSV data for the checkpoint-based subcommands.
    let data_dir = dir.path().join("data");
    assert_ok(
        &qgc(&[
            "gen-data",
            "--name",
            "moons",
            "--sizes",
            "80,20",
            "--seed",
            "3",
            "--out",
            data_dir.to_str().unwrap(),
        ]),
        "gen-data",
    );

    let output = qgc(&[
        "eval",
        "--checkpoint",
        checkpoint.to_str().unwrap(),
        "--data",
        data_dir.join("test.csv").to_str().unwrap(),
    ]);
    assert_ok(&output, "eval");
    let summary: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    let acc = summary["accuracy"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc), "accuracy {acc} out of range");
    assert_eq!(summary["rows"], 20);

    let dens_path = dir.path().join("dens.csv");
    let output = qgc(&[
        "density",
        "--checkpoint",
        checkpoint.to_str().unwrap(),
        "--data",
        data_dir.join("ood.csv").to_str().unwrap(),
        "--out",
        dens_path.to_str().unwrap(),
    ]);
    assert_ok(&output, "density");
    assert_eq!(line_count(&dens_path), 1 + 400 * 2); // header + points x classes

    let output = qgc(&[
        "variance",
        "--checkpoint",
        checkpoint.to_str().unwrap(),
        "--x",
        "0.5,0.5",
        "--label",
        "0",
        "--shots",
        "64",
        "--runs",
        "10",
        "--seed",
        "1",
    ]);
    assert_ok(&output, "variance");
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(report["shots"], 64);
    assert_eq!(report["runs"], 10);
    assert!(report["joint_mean"].as_f64().unwrap() >= 0.0);

    let new_checkpoint = dir.path().join("finetuned.json");
    let trace_path = dir.path().join("finetune_trace.csv");
    let output = qgc(&[
        "finetune",
        "--checkpoint",
        checkpoint.to_str().unwrap(),
        "--data",
        data_dir.join("train.csv").to_str().unwrap(),
        "--epochs",
        "2",
        "--lr",
        "0.01",
        "--out",
        new_checkpoint.to_str().unwrap(),
        "--trace-out",
        trace_path.to_str().unwrap(),
    ]);
    assert_ok(&output, "finetune");
    assert!(new_checkpoint.exists());
    assert_eq!(line_count(&trace_path), 1 + 2);
    assert_ne!(
        fs::read(&checkpoint).unwrap(),
        fs::read(&new_checkpoint).unwrap(),
        "fine-tuning must move the parameters"
    );
    let summary: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert!(summary["final_loss"].as_f64().unwrap().is_finite());
}

#[test]
fn train_flag_overrides_take_effect() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("orig");
    let config = write_smoke_config(dir.path(), &run_dir);

    let override_dir = dir.path().join("override");
    let output = qgc(&[
        "train",
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "77",
        "--out",
        override_dir.to_str().unwrap(),
        "--mode",
        "discriminative",
    ]);
    assert_ok(&output, "train with overrides");
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(report["master_seed"], 77);
    assert!(override_dir.join("results.json").exists());
    assert!(!run_dir.exists(), "overridden output dir must win");
    let trace = fs::read_to_string(override_dir.join("loss_trace.csv")).unwrap();
    assert!(
        trace.lines().nth(1).unwrap().ends_with(",discriminative"),
        "mode override must reach the trainer; trace was: {trace}"
    );

    let bad_mode = qgc(&[
        "train",
        "--config",
        config.to_str().unwrap(),
        "--mode",
        "telepathic",
    ]);
    assert!(!bad_mode.status.success());

    let missing_config = qgc(&["train", "--config", "/nonexistent/config.json"]);
    assert!(!missing_config.status.success());
}
