use std::path::Path;
use std::process::{Command, Output};

use neurolink::data::{Event, EventFile, TimeUnit};
use neurolink::Checkpoint;

fn neurolink(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_neurolink"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = neurolink(args);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(out.status.success(), "{args:?} failed: {stderr}");
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn train_eval_quantize_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("synthetic.json");
    let run = dir.path().join("run");
    ok(&[
        "gen-synthetic",
        "--output",
        s(&data),
        "--samples-per-class",
        "20",
        "--steps",
        "120",
    ]);
    assert!(data.exists());

    let out = ok(&[
        "train",
        "--data",
        s(&data),
        "--epochs",
        "2",
        "--architecture",
        "1-BRF8-O4",
        "-o",
        s(&run),
    ]);
    assert!(out.contains("acc central="), "{out}");
    let ck = run.join("model.json");
    for f in [&ck, &run.join("metrics.csv"), &run.join("summary.json")] {
        assert!(f.exists(), "missing {}", f.display());
    }
    let trained = Checkpoint::load(&ck).unwrap();
    assert!(trained.config_hash.is_some());

    let out = ok(&[
        "eval",
        "--data",
        s(&data),
        "--architecture",
        "1-BRF8-O4",
        "--checkpoint",
        s(&ck),
        "--snr-db",
        "30",
        "-o",
        s(&run),
    ]);
    assert!(out.contains("split="), "{out}");

    let q = dir.path().join("q4.json");
    let out = ok(&[
        "quantize",
        "--data",
        s(&data),
        "--architecture",
        "1-BRF8-O4",
        "--checkpoint",
        s(&ck),
        "--bits",
        "4",
        "--calibration-iters",
        "3",
        "--output",
        s(&q),
        "-o",
        s(&run),
    ]);
    assert!(out.contains("4-bit"), "{out}");
    let quant = Checkpoint::load(&q).unwrap();
    assert_eq!(quant.quant.map(|i| i.bits), Some(4));
    assert_eq!(quant.network.layers.len(), trained.network.layers.len());
}

#[test]
fn convert_builds_a_dataset_from_event_files() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("evt");
    std::fs::create_dir(&input).unwrap();
    for i in 0..4u32 {
        EventFile {
            n_channels: 6,
            time_unit: TimeUnit::Millis,
            label: Some(i % 2),
            duration: 40.0,
            events: (0..10)
                .map(|k| Event {
                    channel: (k + i) % 6,
                    time: 3.5 * f64::from(k),
                })
                .collect(),
        }
        .write(input.join(format!("{i}.evt")))
        .unwrap();
    }
    let output = dir.path().join("ds.json");
    let out = ok(&[
        "convert",
        "--kind",
        "events",
        "--input",
        s(&input),
        "--output",
        s(&output),
        "--steps",
        "10",
    ]);
    assert!(
        out.contains("4 samples, 2 classes, 10 steps x 6 channels"),
        "{out}"
    );
    let ds = neurolink::data::Dataset::load(&output).unwrap();
    assert_eq!(ds.len(), 4);
}

#[test]
fn mismatched_architecture_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = neurolink(&[
        "train",
        "--architecture",
        "700-FC16-O20",
        "--epochs",
        "1",
        "-o",
        s(dir.path()),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error:"), "{err}");
    assert!(!dir.path().join("model.json").exists());
}

#[test]
fn unknown_flags_fail_cleanly() {
    let out = neurolink(&["train", "--no-such-flag"]);
    assert!(!out.status.success());
    assert!(neurolink(&["--help"]).status.success());
}
