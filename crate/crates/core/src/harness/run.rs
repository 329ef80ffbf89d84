//! Single runs and parameter sweeps.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::arch::Architecture;
use super::config::{DataSource, ExperimentConfig, SweepAxis};
use crate::data::{gen_resonance_task, Dataset};
use crate::energy::{energy_from_summary, EnergyConfig, EnergyReport, SpikeSummary};
use crate::error::{Error, Result};
use crate::link::{tx_energy, LinkConfig, LinkSimulator, LinkStats};
use crate::network::SplitNetwork;
use crate::neuron::NeuronKind;
use crate::train::{
    accuracy, calibrate, quantize_network, train, EpochStats, QuantConfig, QuantInfo, QuantScope,
    TrainReport,
};
use crate::SpikeFn;

/// Independent stream for item `i` of a seeded family.
pub fn stream_seed(base: u64, i: u64) -> u64 {
    base ^ i.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Loaded data and parsed architecture, shared across the points of a sweep.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub arch: Architecture,
    pub train: Dataset,
    pub test: Dataset,
}

pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    match cfg.data.source {
        DataSource::Synthetic => gen_resonance_task(&cfg.data.synthetic),
        DataSource::File => {
            let path = cfg
                .data
                .path
                .as_ref()
                .ok_or_else(|| Error::Config("data.path missing".into()))?;
            Dataset::load(path)
        }
    }
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    cfg.validate()?;
    let arch = cfg.arch()?;
    let data = load_dataset(cfg)?;
    if data.input_dim() != arch.input_dim {
        return Err(Error::Config(format!(
            "architecture expects {} input channels, dataset has {}",
            arch.input_dim,
            data.input_dim()
        )));
    }
    if data.classes != arch.classes {
        return Err(Error::Config(format!(
            "architecture has {} classes, dataset has {}",
            arch.classes, data.classes
        )));
    }
    let (train, test) = data.split_stratified(cfg.data.train_fraction, cfg.data.split_seed)?;
    Ok(Prepared { arch, train, test })
}

pub fn build_network(
    cfg: &ExperimentConfig,
    arch: &Architecture,
    seed: u64,
) -> Result<SplitNetwork> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SplitNetwork::init(
        &mut rng,
        arch.input_dim,
        &arch.layers,
        arch.classes,
        cfg.kind(),
        arch.split_index(cfg.split_index),
        cfg.layer_hyper(),
        &cfg.init,
    )
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub seed: u64,
    pub net: SplitNetwork,
    pub report: TrainReport,
    pub seconds: f64,
}

/// Centralized training with `seed` for initialization and shuffling.
pub fn train_model(cfg: &ExperimentConfig, prep: &Prepared, seed: u64) -> Result<Trained> {
    let start = Instant::now();
    let mut net = build_network(cfg, &prep.arch, seed)?;
    let tc = crate::train::TrainConfig { seed, ..cfg.train };
    let report = train(&mut net, &prep.train.samples, &tc)?;
    Ok(Trained {
        seed,
        net,
        report,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Split-mode evaluation result over a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitEval {
    pub accuracy: f64,
    pub summary: SpikeSummary,
    pub link: LinkStats,
    pub tx_power_w: f64,
}

/// Runs every sample through the link, each on its own channel stream
/// derived from `eval_seed` and the sample index.
pub fn evaluate_split(
    net: &SplitNetwork,
    data: &Dataset,
    link: &LinkConfig,
    eval_seed: u64,
) -> Result<SplitEval> {
    let width = net.encoder_width();
    let tx_power_w = LinkSimulator::new(width, *link, eval_seed)?.power();
    let per: Vec<(bool, SpikeSummary, LinkStats)> = data
        .samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut ch = LinkSimulator::new(width, *link, stream_seed(eval_seed, i as u64))?;
            let out = net.forward(&s.input, Some(&mut ch), SpikeFn::default())?;
            Ok((
                out.prediction() == s.label,
                SpikeSummary::from_forward(net, &out),
                ch.stats,
            ))
        })
        .collect::<Result<_>>()?;
    let mut correct = 0usize;
    let mut summary: Option<SpikeSummary> = None;
    let mut stats = LinkStats::default();
    for (ok, s, l) in per {
        correct += usize::from(ok);
        match &mut summary {
            Some(acc) => acc.merge(&s),
            None => summary = Some(s),
        }
        stats.merge(&l);
    }
    let summary = summary.ok_or_else(|| Error::InvalidParam("evaluation set is empty".into()))?;
    Ok(SplitEval {
        accuracy: correct as f64 / data.len() as f64,
        summary,
        link: stats,
        tx_power_w,
    })
}

/// Per-inference energy recomputed from a spike summary and the link power.
pub fn energy_per_inference(
    summary: &SpikeSummary,
    energy: &EnergyConfig,
    tx_power_w: f64,
    symbol_duration: f64,
) -> EnergyReport {
    let tx = tx_energy(&[summary.transmitted_spikes], tx_power_w, symbol_duration);
    energy_from_summary(summary, energy, tx).scaled(1.0 / summary.samples.max(1) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantOutcome {
    pub bits: u32,
    pub scope: QuantScope,
    pub info: QuantInfo,
    pub accuracy_uncalibrated: f64,
    pub accuracy_calibrated: f64,
    pub calibration_initial_loss: f64,
    pub calibration_best_loss: f64,
    pub calibration_samples: usize,
}

/// Quantizes, calibrates on a stratified share of the training set and
/// reports centralized test accuracy before and after calibration.
pub fn quantize_and_calibrate(
    net: &SplitNetwork,
    q: &QuantConfig,
    prep: &Prepared,
    eval_seed: u64,
) -> Result<(SplitNetwork, QuantOutcome)> {
    q.validate()?;
    let (qnet, info) = quantize_network(net, q.bits, q.scope);
    let calib = prep.train.subset(q.calibration_fraction, eval_seed)?;
    let inputs: Vec<_> = calib.samples.iter().map(|s| s.input.clone()).collect();
    let (cal, report) = calibrate(net, &qnet, &inputs, q.calibration_iters, q.calibration_lr)?;
    let sf = SpikeFn::default();
    let outcome = QuantOutcome {
        bits: q.bits,
        scope: q.scope,
        info,
        accuracy_uncalibrated: accuracy(&qnet, &prep.test.samples, sf)?,
        accuracy_calibrated: accuracy(&cal, &prep.test.samples, sf)?,
        calibration_initial_loss: report.initial,
        calibration_best_loss: report.best,
        calibration_samples: inputs.len(),
    };
    Ok((cal, outcome))
}

fn empty_summary() -> SpikeSummary {
    SpikeSummary {
        layers: Vec::new(),
        readout_events: 0,
        samples: 0,
        transmitted_spikes: 0,
    }
}

/// One row of results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub axis: Option<SweepAxis>,
    pub value: Option<f64>,
    pub config_hash: String,
    pub seed: u64,
    pub eval_seed: u64,
    pub architecture: String,
    pub neuron: NeuronKind,
    pub split_index: usize,
    pub alpha: f64,
    pub link: LinkConfig,
    pub epochs: Vec<EpochStats>,
    pub train_accuracy: f64,
    /// Centralized accuracy on the test split.
    pub test_accuracy: f64,
    /// Accuracy with encoder spikes sent over the link.
    pub split_accuracy: f64,
    pub quant: Option<QuantOutcome>,
    /// Mean spikes per neuron per step, by layer, in split mode.
    pub spike_rates: Vec<f64>,
    pub summary: SpikeSummary,
    pub link_stats: LinkStats,
    pub tx_power_w: f64,
    pub energy_config: EnergyConfig,
    /// Per-inference energy.
    pub energy: EnergyReport,
    pub wall_time_s: f64,
    pub error: Option<String>,
}

impl RunRecord {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }

    /// Recomputes the stored energy from the stored spike summary.
    pub fn recompute_energy(&self) -> EnergyReport {
        energy_per_inference(
            &self.summary,
            &self.energy_config,
            self.tx_power_w,
            self.link.symbol_duration,
        )
    }

    fn blank(cfg: &ExperimentConfig, seed: u64, point: Option<(SweepAxis, f64)>) -> Self {
        RunRecord {
            run: 0,
            axis: point.map(|p| p.0),
            value: point.map(|p| p.1),
            config_hash: cfg.hash(),
            seed,
            eval_seed: cfg.eval_seed,
            architecture: cfg.architecture.clone(),
            neuron: cfg.kind(),
            split_index: cfg.effective_split_index().unwrap_or(cfg.split_index),
            alpha: cfg.train.alpha,
            link: cfg.link,
            epochs: Vec::new(),
            train_accuracy: f64::NAN,
            test_accuracy: f64::NAN,
            split_accuracy: f64::NAN,
            quant: None,
            spike_rates: Vec::new(),
            summary: empty_summary(),
            link_stats: LinkStats::default(),
            tx_power_w: f64::NAN,
            energy_config: cfg.energy,
            energy: energy_from_summary(&empty_summary(), &cfg.energy, 0.0),
            wall_time_s: 0.0,
            error: None,
        }
    }

    pub fn failed(
        cfg: &ExperimentConfig,
        seed: u64,
        point: Option<(SweepAxis, f64)>,
        err: &Error,
    ) -> Self {
        RunRecord {
            error: Some(err.to_string()),
            ..RunRecord::blank(cfg, seed, point)
        }
    }
}

/// Evaluates a trained model under `cfg` (link, quantization, energy).
pub fn evaluate_point(
    cfg: &ExperimentConfig,
    prep: &Prepared,
    trained: &Trained,
    point: Option<(SweepAxis, f64)>,
) -> Result<RunRecord> {
    let start = Instant::now();
    let net = &trained.net;
    let test_accuracy = accuracy(net, &prep.test.samples, SpikeFn::default())?;
    let split = evaluate_split(net, &prep.test, &cfg.link, cfg.eval_seed)?;
    let quant = match &cfg.quant {
        Some(q) => Some(quantize_and_calibrate(net, q, prep, cfg.eval_seed)?.1),
        None => None,
    };
    let energy = energy_per_inference(
        &split.summary,
        &cfg.energy,
        split.tx_power_w,
        cfg.link.symbol_duration,
    );
    let final_epoch = trained.report.epochs.last();
    Ok(RunRecord {
        epochs: trained.report.epochs.clone(),
        train_accuracy: final_epoch.map_or(f64::NAN, |e| e.train_accuracy),
        test_accuracy,
        split_accuracy: split.accuracy,
        quant,
        spike_rates: split
            .summary
            .layers
            .iter()
            .map(|l| l.spike_rate())
            .collect(),
        summary: split.summary,
        link_stats: split.link,
        tx_power_w: split.tx_power_w,
        energy,
        wall_time_s: trained.seconds + start.elapsed().as_secs_f64(),
        ..RunRecord::blank(cfg, trained.seed, point)
    })
}

/// Trains and evaluates one configuration. Training failures such as a
/// non-finite loss are recorded in the returned record; configuration and
/// I/O problems are errors.
pub fn run(cfg: &ExperimentConfig) -> Result<RunRecord> {
    let prep = prepare(cfg)?;
    Ok(run_prepared(cfg, &prep, cfg.seed, None))
}

fn run_prepared(
    cfg: &ExperimentConfig,
    prep: &Prepared,
    seed: u64,
    point: Option<(SweepAxis, f64)>,
) -> RunRecord {
    let mut c = cfg.clone();
    c.seed = seed;
    match train_model(&c, prep, seed).and_then(|t| evaluate_point(&c, prep, &t, point)) {
        Ok(r) => r,
        Err(e) => RunRecord::failed(&c, seed, point, &e),
    }
}

/// Configuration of one sweep point.
pub fn point_config(cfg: &ExperimentConfig, axis: SweepAxis, value: f64) -> ExperimentConfig {
    let mut c = cfg.clone();
    match axis {
        SweepAxis::Alpha => c.train.alpha = value,
        SweepAxis::Distance => c.link.distance_m = value,
        SweepAxis::Snr => c.link.snr_db = value,
        SweepAxis::Bits => {
            c.quant = Some(QuantConfig {
                bits: value as u32,
                ..cfg.quant.unwrap_or_default()
            })
        }
    }
    c
}

/// Sweeps one axis over its configured values and every seed. Alpha points
/// retrain; the other axes train once per seed and re-evaluate. Points run
/// in parallel and come back in (value, seed) order.
pub fn sweep(cfg: &ExperimentConfig, axis: SweepAxis) -> Result<Vec<RunRecord>> {
    let prep = prepare(cfg)?;
    let values = cfg.sweep_values(axis);
    let seeds = cfg.seeds();
    let points: Vec<(f64, u64)> = values
        .iter()
        .flat_map(|&v| seeds.iter().map(move |&s| (v, s)))
        .collect();
    for &(v, _) in &points {
        point_config(cfg, axis, v).validate()?;
    }
    let mut records: Vec<RunRecord> = if axis == SweepAxis::Alpha {
        points
            .par_iter()
            .map(|&(v, s)| run_prepared(&point_config(cfg, axis, v), &prep, s, Some((axis, v))))
            .collect()
    } else {
        let trained: Vec<Result<Trained>> = seeds
            .par_iter()
            .map(|&s| {
                let mut c = cfg.clone();
                c.seed = s;
                train_model(&c, &prep, s)
            })
            .collect();
        points
            .par_iter()
            .map(|&(v, s)| {
                let mut c = point_config(cfg, axis, v);
                c.seed = s;
                let si = seeds.iter().position(|&x| x == s).expect("seed listed");
                let r = trained[si]
                    .as_ref()
                    .map_err(|e| Error::Config(e.to_string()))
                    .and_then(|t| evaluate_point(&c, &prep, t, Some((axis, v))));
                r.unwrap_or_else(|e| RunRecord::failed(&c, s, Some((axis, v)), &e))
            })
            .collect()
    };
    for (i, r) in records.iter_mut().enumerate() {
        r.run = i;
    }
    Ok(records)
}
