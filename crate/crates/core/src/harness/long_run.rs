//! Full-scale protocol on converted SHD / ITS datasets, compared against the
//! published headline figures. Best effort: these runs take hours and the
//! comparison is reported, never asserted.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::config::{DataConfig, DataSource, ExperimentConfig, SweepAxis};
use super::run::{sweep, RunRecord};
use crate::error::{Error, Result};
use crate::neuron::NeuronKind;
use crate::train::TrainConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Shd,
    Its,
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "shd" => Ok(Preset::Shd),
            "its" => Ok(Preset::Its),
            other => Err(Error::Config(format!("unknown long-run preset `{other}`"))),
        }
    }
}

/// Published operating point for a preset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub neuron: NeuronKind,
    pub accuracy: f64,
    pub compute_energy_j: f64,
}

/// Accuracy tolerance, absolute.
pub const ACCURACY_TOL: f64 = 0.02;
/// Energy tolerance, relative.
pub const ENERGY_TOL: f64 = 0.25;

impl Preset {
    pub fn reference(self) -> Reference {
        match self {
            Preset::Shd => Reference {
                neuron: NeuronKind::Rf,
                accuracy: 0.934,
                compute_energy_j: 7.63e-6,
            },
            Preset::Its => Reference {
                neuron: NeuronKind::Brf,
                accuracy: 0.877,
                compute_energy_j: 0.67e-6,
            },
        }
    }

    /// Experiment matching the published protocol, reading `data` (a dataset
    /// JSON produced by `convert`).
    pub fn config(self, data: PathBuf) -> ExperimentConfig {
        let (name, arch, batch, alphas) = match self {
            Preset::Shd => (
                "long-run-shd",
                "700-RFC128-RFC128-O20",
                32,
                vec![1e-5, 5e-5, 1e-4, 5e-4, 1e-3, 5e-3],
            ),
            Preset::Its => (
                "long-run-its",
                "1-FC*10-FC128-FC128-O6",
                128,
                vec![1e-5, 3e-5, 5e-5, 7e-5, 9e-5],
            ),
        };
        let mut cfg = ExperimentConfig {
            name: name.into(),
            architecture: arch.into(),
            neuron: self.reference().neuron,
            split_index: 2,
            data: DataConfig {
                source: DataSource::File,
                path: Some(data),
                ..DataConfig::default()
            },
            train: TrainConfig {
                epochs: 20,
                batch_size: batch,
                ..TrainConfig::default()
            },
            ..ExperimentConfig::default()
        };
        cfg.sweep.alpha = alphas;
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongRunReport {
    pub preset: Preset,
    pub reference: Reference,
    pub best_accuracy: f64,
    pub compute_energy_j: f64,
    pub accuracy_within_tol: bool,
    pub energy_within_tol: bool,
    pub records: Vec<RunRecord>,
}

impl LongRunReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Sweeps alpha over the published range and compares the most accurate
/// point with the reference.
pub fn long_run(cfg: &ExperimentConfig, preset: Preset) -> Result<LongRunReport> {
    let records = sweep(cfg, SweepAxis::Alpha)?;
    let best = records
        .iter()
        .filter(|r| r.ok())
        .max_by(|a, b| a.test_accuracy.total_cmp(&b.test_accuracy))
        .ok_or_else(|| Error::Config("every long-run point failed".into()))?;
    let reference = preset.reference();
    let (acc, e) = (best.test_accuracy, best.energy.compute_j);
    Ok(LongRunReport {
        preset,
        reference,
        best_accuracy: acc,
        compute_energy_j: e,
        accuracy_within_tol: (acc - reference.accuracy).abs() <= ACCURACY_TOL,
        energy_within_tol: ((e - reference.compute_energy_j) / reference.compute_energy_j).abs()
            <= ENERGY_TOL,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid() {
        for p in [Preset::Shd, Preset::Its] {
            let c = p.config("data.json".into());
            c.validate().unwrap();
            assert_eq!(c.train.epochs, 20);
            assert_eq!(c.effective_split_index().unwrap(), 2);
        }
        assert_eq!(Preset::Its.config("x".into()).train.batch_size, 128);
    }
}
