//! `metrics.csv` and `summary.json`.
//!
//! The CSV holds one row per run and nothing time-dependent, so an identical
//! config and seed reproduce it byte for byte. Wall-clock time, per-epoch
//! curves and full spike summaries go to the JSON summary only.

use std::path::Path;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::run::RunRecord;
use crate::energy::OpProfile;
use crate::error::Result;
use crate::neuron::NeuronKind;

pub const METRICS_FILE: &str = "metrics.csv";
pub const SUMMARY_FILE: &str = "summary.json";

const PJ: f64 = 1e12;

#[derive(Debug, Serialize)]
struct Row<'a> {
    run: usize,
    axis: Option<&'static str>,
    value: Option<f64>,
    config_hash: &'a str,
    seed: u64,
    neuron: &'static str,
    architecture: &'a str,
    split_index: usize,
    alpha: f64,
    distance_m: f64,
    snr_db: f64,
    tx_power_w: f64,
    bits: Option<u32>,
    epochs: usize,
    initial_objective: Option<f64>,
    final_objective: Option<f64>,
    train_accuracy: f64,
    test_accuracy: f64,
    split_accuracy: f64,
    quant_accuracy: Option<f64>,
    calibrated_accuracy: Option<f64>,
    layer_spike_rates: String,
    spikes_per_inference: f64,
    transmitted_spikes_per_inference: f64,
    spike_error_rate: f64,
    soma_pj: f64,
    synapse_pj: f64,
    compute_pj: f64,
    tx_pj: f64,
    total_pj: f64,
    status: &'a str,
}

fn row(r: &RunRecord) -> Row<'_> {
    let n = r.summary.samples.max(1) as f64;
    Row {
        run: r.run,
        axis: r.axis.map(|a| a.name()),
        value: r.value,
        config_hash: &r.config_hash,
        seed: r.seed,
        neuron: r.neuron.name(),
        architecture: &r.architecture,
        split_index: r.split_index,
        alpha: r.alpha,
        distance_m: r.link.distance_m,
        snr_db: r.link.snr_db,
        tx_power_w: r.tx_power_w,
        bits: r.quant.as_ref().map(|q| q.bits),
        epochs: r.epochs.len().saturating_sub(1),
        initial_objective: r.epochs.first().map(|e| e.objective),
        final_objective: r.epochs.last().map(|e| e.objective),
        train_accuracy: r.train_accuracy,
        test_accuracy: r.test_accuracy,
        split_accuracy: r.split_accuracy,
        quant_accuracy: r.quant.as_ref().map(|q| q.accuracy_uncalibrated),
        calibrated_accuracy: r.quant.as_ref().map(|q| q.accuracy_calibrated),
        layer_spike_rates: r
            .spike_rates
            .iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(";"),
        spikes_per_inference: r.summary.total_spikes() as f64 / n,
        transmitted_spikes_per_inference: r.summary.transmitted_spikes as f64 / n,
        spike_error_rate: r.link_stats.error_rate(),
        soma_pj: r.energy.soma_j * PJ,
        synapse_pj: r.energy.synapse_j * PJ,
        compute_pj: r.energy.compute_j * PJ,
        tx_pj: r.energy.tx_j * PJ,
        total_pj: r.energy.total_j * PJ,
        status: r.error.as_deref().unwrap_or("ok"),
    }
}

pub fn metrics_csv(records: &[RunRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(row(r))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Debug, Serialize)]
struct ProfileEntry {
    kind: NeuronKind,
    profile: OpProfile,
    /// Counts not given by the reference and derived from the update equations.
    derived: bool,
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    format: &'static str,
    config_hash: String,
    /// The full configuration, defaults included.
    config: &'a ExperimentConfig,
    energy_profiles: Vec<ProfileEntry>,
    records: &'a [RunRecord],
}

pub fn summary_json(cfg: &ExperimentConfig, records: &[RunRecord]) -> Result<String> {
    let s = Summary {
        format: "neurolink-summary",
        config_hash: cfg.hash(),
        config: cfg,
        energy_profiles: NeuronKind::ALL
            .iter()
            .map(|&k| ProfileEntry {
                kind: k,
                profile: OpProfile::for_kind(k),
                derived: OpProfile::is_derived(k),
            })
            .collect(),
        records,
    };
    Ok(serde_json::to_string_pretty(&s)?)
}

/// Writes both files into `dir`, creating it if needed.
pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, records: &[RunRecord]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(METRICS_FILE), metrics_csv(records)?)?;
    std::fs::write(dir.join(SUMMARY_FILE), summary_json(cfg, records)?)?;
    Ok(())
}
