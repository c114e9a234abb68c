//! End-to-end tests of the `oocdr` binary: pipeline smoke, determinism,
//! and the exit-code contract (0 ok, 2 validation, 3 capacity, 4 I/O).

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_oocdr"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn oocdr")
}

fn run_ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("process exited without a code")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn make_blobs(dir: &Path, name: &str, n: u64, dim: u32, seed: u64) -> PathBuf {
    let path = dir.join(name);
    run_ok(&[
        "generate",
        "blobs",
        path_str(&path),
        "--n",
        &n.to_string(),
        "--dim",
        &dim.to_string(),
        "--clusters",
        "3",
        "--seed",
        &seed.to_string(),
    ]);
    path
}

#[test]
fn generate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = make_blobs(dir.path(), "a.oocdr", 500, 6, 7);
    let b = make_blobs(dir.path(), "b.oocdr", 500, 6, 7);
    let c = make_blobs(dir.path(), "c.oocdr", 500, 6, 8);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn pipeline_project_evaluate_plot() {
    let dir = tempfile::tempdir().unwrap();
    let data = make_blobs(dir.path(), "data.oocdr", 800, 8, 3);
    let proj = dir.path().join("proj.oocdr");
    let stdout = run_ok(&[
        "project",
        path_str(&data),
        "--method",
        "pca",
        "--ref-size",
        "128",
        "--batch-size",
        "200",
        "--seed",
        "3",
        "--out",
        path_str(&proj),
    ]);
    for key in ["fit_seconds=", "mean_batch_seconds=", "total_seconds="] {
        assert!(stdout.contains(key), "missing {key} in {stdout:?}");
    }
    assert!(proj.exists());
    assert!(dir.path().join("proj.oocdr.meta").exists());

    let report = run_ok(&[
        "evaluate",
        path_str(&proj),
        path_str(&data),
        "--metrics",
        "knn,trust",
        "--k",
        "10",
    ]);
    let mut seen = 0;
    for line in report.lines() {
        for name in ["knn_precision=", "trustworthiness="] {
            if let Some(value) = line.strip_prefix(name) {
                let value: f64 = value.parse().unwrap();
                assert!((0.0..=1.0).contains(&value), "{line}");
                seen += 1;
            }
        }
    }
    assert_eq!(seen, 2, "expected two metric lines in {report:?}");

    // Reference scope evaluates a subset and stays bounded.
    let ref_report = run_ok(&[
        "evaluate",
        path_str(&proj),
        path_str(&data),
        "--metrics",
        "knn",
        "--k",
        "10",
        "--scope",
        "reference",
    ]);
    assert!(ref_report.contains("n=128"), "{ref_report:?}");

    let heat = dir.path().join("heat.ppm");
    let stdout = run_ok(&[
        "plot",
        "heatmap",
        path_str(&proj),
        "--grid",
        "16x16",
        "--log",
        "--out",
        path_str(&heat),
    ]);
    let max: u64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("max_tile_count="))
        .expect("max tile count line")
        .parse()
        .unwrap();
    assert!((1..=800).contains(&max));
    let bytes = std::fs::read(&heat).unwrap();
    assert!(bytes.starts_with(b"P6\n"));

    let scatter = dir.path().join("scatter.ppm");
    run_ok(&[
        "plot",
        "scatter",
        path_str(&proj),
        "--labels-from",
        path_str(&data),
        "--out",
        path_str(&scatter),
    ]);
    assert!(std::fs::read(&scatter).unwrap().starts_with(b"P6\n"));
}

#[test]
fn repeated_plots_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let data = make_blobs(dir.path(), "data.oocdr", 400, 2, 5);
    let a = dir.path().join("a.ppm");
    let b = dir.path().join("b.ppm");
    for out in [&a, &b] {
        run_ok(&[
            "plot",
            "heatmap",
            path_str(&data),
            "--grid",
            "8x8",
            "--out",
            path_str(out),
        ]);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn single_thread_run_reproduces_parallel_run() {
    let dir = tempfile::tempdir().unwrap();
    let data = make_blobs(dir.path(), "data.oocdr", 300, 8, 11);
    let parallel = dir.path().join("par.oocdr");
    let single = dir.path().join("single.oocdr");
    for (out, threads) in [(&parallel, None), (&single, Some("1"))] {
        let mut args = vec![
            "project",
            path_str(&data),
            "--method",
            "tsne",
            "--perplexity",
            "10",
            "--iterations",
            "60",
            "--oos-iters",
            "10",
            "--ref-size",
            "64",
            "--batch-size",
            "50",
            "--seed",
            "11",
            "--out",
            path_str(out),
        ];
        if let Some(t) = threads {
            args.extend(["--threads", t]);
        }
        run_ok(&args);
    }
    assert_eq!(
        std::fs::read(&parallel).unwrap(),
        std::fs::read(&single).unwrap(),
        "thread count changed projection bytes"
    );
}

#[test]
fn oos_iters_zero_keeps_the_initialization() {
    let dir = tempfile::tempdir().unwrap();
    let data = make_blobs(dir.path(), "data.oocdr", 200, 4, 13);
    let init_only = dir.path().join("init.oocdr");
    let descended = dir.path().join("desc.oocdr");
    for (out, iters) in [(&init_only, "0"), (&descended, "50")] {
        run_ok(&[
            "project",
            path_str(&data),
            "--method",
            "mds",
            "--iterations",
            "50",
            "--oos-iters",
            iters,
            "--ref-size",
            "32",
            "--batch-size",
            "64",
            "--seed",
            "13",
            "--out",
            path_str(out),
        ]);
    }
    assert_ne!(
        std::fs::read(&init_only).unwrap(),
        std::fs::read(&descended).unwrap(),
        "descent should move OOS points off their initialization"
    );
}

#[test]
fn bench_emits_parseable_csv() {
    let dir = tempfile::tempdir().unwrap();
    let data = make_blobs(dir.path(), "data.oocdr", 600, 8, 17);
    let stdout = run_ok(&[
        "bench",
        path_str(&data),
        "--method",
        "pca",
        "--ref-size",
        "32,64,128",
        "--batch-size",
        "100",
        "--oos-sample",
        "100",
        "--seed",
        "17",
        "--check",
    ]);
    let csv: String = stdout
        .lines()
        .take_while(|l| !l.starts_with("accounting"))
        .map(|l| format!("{l}\n"))
        .collect();
    let rows = oocdr::bench::rows_from_csv(&csv).unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(
        rows.iter().map(|r| r.n_ref).collect::<Vec<_>>(),
        vec![32, 64, 128]
    );
    assert!(stdout.contains("per_point_ratio="), "{stdout:?}");
}

#[test]
fn validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let data = make_blobs(dir.path(), "data.oocdr", 100, 4, 19);
    let out = dir.path().join("p.oocdr");

    // Reference larger than the dataset; message names the flag.
    let res = run(&[
        "project",
        path_str(&data),
        "--method",
        "pca",
        "--ref-size",
        "5000",
        "--batch-size",
        "10",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(exit_code(&res), 2);
    assert!(String::from_utf8_lossy(&res.stderr).contains("--ref-size"));

    let res = run(&[
        "project",
        path_str(&data),
        "--method",
        "umap",
        "--ref-size",
        "32",
        "--batch-size",
        "10",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(exit_code(&res), 2);

    // Hyperparameter flag that does not apply to the method.
    let res = run(&[
        "project",
        path_str(&data),
        "--method",
        "pca",
        "--perplexity",
        "30",
        "--ref-size",
        "32",
        "--batch-size",
        "10",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(exit_code(&res), 2);

    let res = run(&["plot", "heatmap", path_str(&data), "--grid", "64", "--out", "x.ppm"]);
    assert_eq!(exit_code(&res), 2);
}

#[test]
fn capacity_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let data = make_blobs(dir.path(), "data.oocdr", 200, 4, 23);
    let out = dir.path().join("p.oocdr");
    let res = run(&[
        "project",
        path_str(&data),
        "--method",
        "mds",
        "--ref-size",
        "128",
        "--batch-size",
        "50",
        "--memory-cap",
        "1024",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(exit_code(&res), 3);
    assert!(String::from_utf8_lossy(&res.stderr).contains("cap"));
}

#[test]
fn io_errors_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.oocdr");
    let out = dir.path().join("p.oocdr");
    let res = run(&[
        "project",
        path_str(&missing),
        "--method",
        "pca",
        "--ref-size",
        "8",
        "--batch-size",
        "10",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(exit_code(&res), 4);
}
