//! End-to-end command-line tests driving the compiled binary.

use std::path::Path;
use std::process::{Command, Output};

fn gridcast(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridcast"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn expect_success(out: &Output, what: &str) {
    assert!(
        out.status.success(),
        "{what} failed ({:?}):\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn full_pipeline_chain_produces_metric_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path();

    let out = gridcast(
        &[
            "gen",
            "--seed",
            "7",
            "--count",
            "12",
            "--out",
            "scenarios.json",
        ],
        path,
    );
    expect_success(&out, "gen");

    let out = gridcast(
        &[
            "rasterize",
            "--scenario",
            "scenarios.json",
            "--index",
            "0",
            "--ppm",
            "1",
            "--out",
            "topview.hgrd",
        ],
        path,
    );
    expect_success(&out, "rasterize");
    let raster = gridcast::io::read_hgrd(path.join("topview.hgrd")).unwrap();
    assert_eq!(raster.channels(), 27);
    assert!(raster.data().iter().all(|&v| v == 0.0 || v == 1.0));

    let out = gridcast(
        &[
            "predict-cv",
            "--scenario",
            "scenarios.json",
            "--index",
            "0",
            "--horizon",
            "5",
            "--ppm-policy",
            "velocity",
            "--out",
            "heatmap.hgrd",
        ],
        path,
    );
    expect_success(&out, "predict-cv");
    let heatmap = gridcast::io::read_heatmap(path.join("heatmap.hgrd")).unwrap();
    assert!(heatmap.values().iter().all(|&v| (0.0..=1.0).contains(&v)));

    // Speed of the first scenario's target, needed for kernel sizing.
    let scenarios = gridcast::io::load_scenarios(path.join("scenarios.json")).unwrap();
    let speed = scenarios[0].track(0).unwrap().current().speed;

    let out = gridcast(
        &[
            "sample",
            "--heatmap",
            "heatmap.hgrd",
            "--speed",
            &speed.to_string(),
            "--horizon",
            "5",
            "--n",
            "6",
            "--normalize",
            "--out",
            "samples.json",
        ],
        path,
    );
    expect_success(&out, "sample");
    let samples: gridcast::SampleSet =
        serde_json::from_str(&std::fs::read_to_string(path.join("samples.json")).unwrap()).unwrap();
    assert_eq!(samples.len(), 6);
    assert!((samples.confidences.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    for pair in samples.confidences_raw.windows(2) {
        assert!(pair[0] >= pair[1]);
    }

    let out = gridcast(
        &[
            "evaluate",
            "--scenarios",
            "scenarios.json",
            "--per-bucket",
            "--emit-predictions",
            "predictions.json",
            "--out",
            "report.json",
        ],
        path,
    );
    expect_success(&out, "evaluate");
    let report: gridcast::MetricReport =
        serde_json::from_str(&std::fs::read_to_string(path.join("report.json")).unwrap()).unwrap();
    assert_eq!(report.horizons.len(), 3);
    assert!(report.buckets.is_some());
    for m in report.horizons.values() {
        assert!((0.0..=1.0).contains(&m.miss_rate));
    }

    // Evaluating the emitted prediction file reproduces the same report
    // (modulo bucket breakdown, which we request again).
    let out = gridcast(
        &[
            "evaluate",
            "--scenarios",
            "scenarios.json",
            "--predictions",
            "predictions.json",
            "--per-bucket",
            "--out",
            "report2.json",
        ],
        path,
    );
    expect_success(&out, "evaluate --predictions");
    let report2: gridcast::MetricReport =
        serde_json::from_str(&std::fs::read_to_string(path.join("report2.json")).unwrap()).unwrap();
    assert_eq!(report, report2);
}

#[test]
fn sweep_grid_emits_cartesian_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path();
    expect_success(
        &gridcast(
            &["gen", "--seed", "3", "--count", "20", "--out", "s.json"],
            path,
        ),
        "gen",
    );
    let out = gridcast(
        &[
            "sweep-grid",
            "--scenarios",
            "s.json",
            "--ppm",
            "1,2,3",
            "--horizons",
            "3,5,8",
        ],
        path,
    );
    expect_success(&out, "sweep-grid");
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.trim().lines().collect();
    assert_eq!(lines[0], "ppm,horizon_s,coverage_fraction");
    assert_eq!(lines.len(), 1 + 9, "expected 9 data rows:\n{text}");
    for line in &lines[1..] {
        let fraction: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&fraction));
    }
}

#[test]
fn evaluate_n_sweep_emits_monotone_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path();
    expect_success(
        &gridcast(
            &["gen", "--seed", "5", "--count", "15", "--out", "s.json"],
            path,
        ),
        "gen",
    );
    let out = gridcast(
        &[
            "evaluate",
            "--scenarios",
            "s.json",
            "--n-sweep",
            "--sigma-scale",
            "3",
        ],
        path,
    );
    expect_success(&out, "evaluate --n-sweep");
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.trim().lines().collect();
    assert_eq!(lines[0], "n,horizon_s,miss_rate");
    assert_eq!(lines.len(), 1 + 11 * 3);
    let mut last_per_horizon: std::collections::BTreeMap<String, f64> = Default::default();
    for line in &lines[1..] {
        let parts: Vec<&str> = line.split(',').collect();
        let mr: f64 = parts[2].parse().unwrap();
        if let Some(prev) = last_per_horizon.get(parts[1]) {
            assert!(mr <= prev + 1e-9, "MR not monotone: {line}");
        }
        last_per_horizon.insert(parts[1].to_string(), mr);
    }
}

#[test]
fn loss_command_prints_scalar() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path();
    expect_success(
        &gridcast(
            &["gen", "--seed", "9", "--count", "1", "--out", "s.json"],
            path,
        ),
        "gen",
    );
    for (horizon, out_name) in [("3", "a.hgrd"), ("3", "b.hgrd")] {
        expect_success(
            &gridcast(
                &[
                    "predict-cv",
                    "--scenario",
                    "s.json",
                    "--horizon",
                    horizon,
                    "--sigma-scale",
                    if out_name == "a.hgrd" { "1" } else { "2" },
                    "--out",
                    out_name,
                ],
                path,
            ),
            "predict-cv",
        );
    }
    for kind in ["focal", "ce"] {
        let out = gridcast(
            &[
                "loss", "--pred", "a.hgrd", "--target", "b.hgrd", "--kind", kind,
            ],
            path,
        );
        expect_success(&out, "loss");
        let value: f64 = String::from_utf8(out.stdout)
            .unwrap()
            .trim()
            .parse()
            .unwrap();
        assert!(value.is_finite() && value >= 0.0);
    }
    // Identical maps give a near-zero focal loss.
    let out = gridcast(
        &[
            "loss", "--pred", "a.hgrd", "--target", "a.hgrd", "--kind", "focal",
        ],
        path,
    );
    expect_success(&out, "loss self");
    let value: f64 = String::from_utf8(out.stdout)
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!(value < 1e-4, "self-loss {value}");
}

#[test]
fn exit_codes_follow_contract() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path();

    // Unknown flag: usage error, exit 2, message on stderr.
    let out = gridcast(&["sample", "--bogus-flag"], path);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    // Unknown subcommand: exit 2.
    let out = gridcast(&["frobnicate"], path);
    assert_eq!(out.status.code(), Some(2));

    // Validation error: exit 1.
    std::fs::write(path.join("broken.json"), "{ nope").unwrap();
    let out = gridcast(&["evaluate", "--scenarios", "broken.json"], path);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    // Unsupported horizon: exit 1 (domain validation, not usage).
    std::fs::write(path.join("h.hgrd"), b"HGRD").unwrap();
    let out = gridcast(
        &[
            "sample",
            "--heatmap",
            "h.hgrd",
            "--speed",
            "1",
            "--horizon",
            "4",
            "--n",
            "6",
        ],
        path,
    );
    assert_eq!(out.status.code(), Some(1));

    // --help: exit 0.
    let out = gridcast(&["--help"], path);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("sweep-grid"));
}
