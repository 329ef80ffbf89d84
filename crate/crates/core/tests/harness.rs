use neurolink::harness::{
    metrics_csv, prepare, run, summary_json, sweep, train_model, write_outputs, ExperimentConfig,
    SweepAxis, METRICS_FILE,
};
use neurolink::train::accuracy;
use neurolink::{Checkpoint, NeuronKind, SpikeFn};

fn quick(epochs: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.architecture = "1-BRF16-O4".into();
    c.train.epochs = epochs;
    c
}

#[test]
fn identical_config_and_seed_give_identical_csv() {
    let cfg = quick(3);
    let a = run(&cfg).unwrap();
    let b = run(&cfg).unwrap();
    assert!(a.ok());
    let da = tempfile::tempdir().unwrap();
    let db = tempfile::tempdir().unwrap();
    write_outputs(da.path(), &cfg, std::slice::from_ref(&a)).unwrap();
    write_outputs(db.path(), &cfg, std::slice::from_ref(&b)).unwrap();
    let ca = std::fs::read(da.path().join(METRICS_FILE)).unwrap();
    let cb = std::fs::read(db.path().join(METRICS_FILE)).unwrap();
    assert_eq!(ca, cb);
    let mut other = cfg.clone();
    other.seed = 1;
    let c = run(&other).unwrap();
    assert_ne!(metrics_csv(&[c]).unwrap().into_bytes(), ca);
}

#[test]
fn distance_sweep_scales_tx_energy_by_path_loss() {
    let mut cfg = quick(2);
    cfg.sweep.distance_m = vec![100.0, 200.0];
    let recs = sweep(&cfg, SweepAxis::Distance).unwrap();
    assert_eq!(recs.len(), 2);
    // same model, same received SNR: only the transmit power changes
    assert_eq!(recs[0].summary, recs[1].summary);
    let ratio = recs[1].energy.tx_j / recs[0].energy.tx_j;
    assert!((ratio - 3.317).abs() / 3.317 < 0.01, "{ratio}");
    assert_eq!(recs[0].energy.compute_j, recs[1].energy.compute_j);
}

#[test]
fn split_accuracy_matches_centralized_at_high_snr() {
    let mut cfg = quick(10);
    cfg.sweep.snr_db = vec![40.0, 60.0];
    let recs = sweep(&cfg, SweepAxis::Snr).unwrap();
    for r in &recs {
        assert_eq!(
            r.split_accuracy, r.test_accuracy,
            "{} dB: split {} vs centralized {}",
            r.link.snr_db, r.split_accuracy, r.test_accuracy
        );
    }
    let mut ideal = cfg.clone();
    ideal.link.ideal = true;
    let r = run(&ideal).unwrap();
    assert_eq!(r.split_accuracy, r.test_accuracy);
    assert_eq!(r.link_stats.bit_errors, 0);
}

#[test]
fn stored_energy_recomputes_from_summaries() {
    let mut cfg = quick(2);
    cfg.architecture = "1-RFC16-FC8-O4".into();
    cfg.neuron = NeuronKind::Rf;
    cfg.split_index = 1;
    cfg.sweep.snr_db = vec![0.0, 20.0];
    for r in sweep(&cfg, SweepAxis::Snr).unwrap() {
        assert_eq!(r.recompute_energy(), r.energy);
        let e = &r.energy;
        assert!((e.total_j - (e.compute_j + e.tx_j)).abs() <= 1e-12 * e.total_j);
        // and after a JSON round trip of the record
        let back: neurolink::harness::RunRecord =
            serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back.recompute_energy(), r.energy);
    }
}

#[test]
fn alpha_sweep_rows_follow_config_order() {
    let mut cfg = quick(1);
    cfg.sweep.alpha = vec![0.0, 0.5];
    cfg.sweep.seeds = vec![3, 4];
    let recs = sweep(&cfg, SweepAxis::Alpha).unwrap();
    let order: Vec<(usize, f64, u64)> = recs.iter().map(|r| (r.run, r.alpha, r.seed)).collect();
    assert_eq!(
        order,
        vec![(0, 0.0, 3), (1, 0.0, 4), (2, 0.5, 3), (3, 0.5, 4)]
    );
    let csv = metrics_csv(&recs).unwrap();
    let mut rd = csv::Reader::from_reader(csv.as_bytes());
    let header = rd.headers().unwrap().clone();
    for col in [
        "run",
        "alpha",
        "seed",
        "test_accuracy",
        "split_accuracy",
        "total_pj",
        "status",
    ] {
        assert!(header.iter().any(|h| h == col), "missing column {col}");
    }
    assert!(!header.iter().any(|h| h.contains("wall")));
    assert_eq!(rd.records().count(), 4);

    let summary: serde_json::Value =
        serde_json::from_str(&summary_json(&cfg, &recs).unwrap()).unwrap();
    assert_eq!(summary["config"]["train"]["batch_size"], 32);
    assert_eq!(summary["config"]["link"]["n_paths"], 5);
    assert_eq!(summary["energy_profiles"].as_array().unwrap().len(), 4);
    assert_eq!(summary["records"].as_array().unwrap().len(), 4);
}

#[test]
fn diverging_training_is_recorded_not_fatal() {
    let mut cfg = quick(3);
    cfg.train.learning_rate = 1e300;
    let r = run(&cfg).unwrap();
    assert!(!r.ok());
    let csv = metrics_csv(&[r]).unwrap();
    assert!(
        csv.contains("non-finite") || csv.contains("NaN") || csv.contains("finite"),
        "{csv}"
    );
}

#[test]
fn checkpoint_preserves_model_behaviour() {
    let cfg = quick(3);
    let prep = prepare(&cfg).unwrap();
    let t = train_model(&cfg, &prep, 0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    Checkpoint::new(t.net.clone())
        .with_config(cfg.hash(), cfg.architecture.clone())
        .save(&path)
        .unwrap();
    let back = Checkpoint::load(&path).unwrap();
    assert_eq!(back.network, t.net);
    assert_eq!(back.config_hash.as_deref(), Some(cfg.hash().as_str()));
    let sf = SpikeFn::default();
    assert_eq!(
        accuracy(&back.network, &prep.test.samples, sf).unwrap(),
        accuracy(&t.net, &prep.test.samples, sf).unwrap()
    );
}

#[test]
fn mismatched_architecture_and_data_are_config_errors() {
    let mut cfg = quick(1);
    cfg.architecture = "3-FC4-O4".into();
    assert!(run(&cfg).is_err());
    let mut cfg = quick(1);
    cfg.architecture = "1-FC4-O5".into();
    assert!(run(&cfg).is_err());
}
