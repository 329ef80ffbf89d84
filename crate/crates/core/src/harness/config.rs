//! Experiment configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::arch::{parse_architecture, Architecture};
use crate::data::SyntheticConfig;
use crate::energy::EnergyConfig;
use crate::error::{Error, Result};
use crate::layer::{InitConfig, LayerHyper};
use crate::link::LinkConfig;
use crate::neuron::NeuronKind;
use crate::train::{QuantConfig, TrainConfig};

/// Evaluation streams (channel draws, calibration subsets) derive from this
/// seed rather than the training seed, so models are compared on the same
/// channel realizations.
pub const DEFAULT_EVAL_SEED: u64 = 0x5EED_0E7A;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    #[default]
    Synthetic,
    /// A dataset JSON file as written by `convert` or `gen-synthetic`.
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataConfig {
    pub source: DataSource,
    pub path: Option<PathBuf>,
    pub synthetic: SyntheticConfig,
    pub train_fraction: f64,
    pub split_seed: u64,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            source: DataSource::Synthetic,
            path: None,
            synthetic: SyntheticConfig::default(),
            train_fraction: 0.8,
            split_seed: 0,
        }
    }
}

/// Values for each sweepable axis. Empty lists fall back to the defaults in
/// [`SweepAxis::default_values`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct SweepConfig {
    pub alpha: Vec<f64>,
    pub distance_m: Vec<f64>,
    pub snr_db: Vec<f64>,
    pub bits: Vec<u32>,
    /// Training seeds replicated at every point; empty means `[seed]`.
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Alpha,
    Distance,
    Snr,
    Bits,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Alpha => "alpha",
            SweepAxis::Distance => "distance_m",
            SweepAxis::Snr => "snr_db",
            SweepAxis::Bits => "bits",
        }
    }

    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepAxis::Alpha => vec![0.0, 1e-5, 1e-4, 1e-3, 5e-3],
            SweepAxis::Distance => vec![25.0, 50.0, 100.0, 200.0, 400.0],
            SweepAxis::Snr => vec![0.0, 5.0, 10.0, 20.0, 30.0, 40.0],
            SweepAxis::Bits => vec![2.0, 4.0, 6.0, 8.0],
        }
    }
}

impl std::fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alpha" => Ok(SweepAxis::Alpha),
            "distance" | "distance_m" => Ok(SweepAxis::Distance),
            "snr" | "snr_db" => Ok(SweepAxis::Snr),
            "bits" => Ok(SweepAxis::Bits),
            other => Err(Error::Config(format!("unknown sweep axis `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub architecture: String,
    /// Used for `FC` cells; a kind named in the architecture must match.
    pub neuron: NeuronKind,
    /// Layers on the transmitter side; clamped to the hidden depth.
    pub split_index: usize,
    pub seed: u64,
    pub eval_seed: u64,
    pub output_dir: PathBuf,
    pub data: DataConfig,
    pub train: TrainConfig,
    pub link: LinkConfig,
    /// Post-training quantization, off when absent.
    pub quant: Option<QuantConfig>,
    pub energy: EnergyConfig,
    pub init: InitConfig,
    /// Overrides the per-kind neuron hyperparameters.
    pub hyper: Option<LayerHyper>,
    pub sweep: SweepConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: "synthetic-brf".into(),
            architecture: "1-FC16-O4".into(),
            neuron: NeuronKind::Brf,
            split_index: 2,
            seed: 0,
            eval_seed: DEFAULT_EVAL_SEED,
            output_dir: PathBuf::from("runs"),
            data: DataConfig::default(),
            train: TrainConfig {
                learning_rate: 1e-2,
                ..TrainConfig::default()
            },
            link: LinkConfig::default(),
            quant: None,
            energy: EnergyConfig::default(),
            init: InitConfig::default(),
            hyper: None,
            sweep: SweepConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let txt = std::fs::read_to_string(path)?;
        Self::from_toml_str(&txt).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn arch(&self) -> Result<Architecture> {
        let a = parse_architecture(&self.architecture)?;
        if let Some(k) = a.kind {
            if k != self.neuron {
                return Err(Error::Config(format!(
                    "architecture names {k} cells but neuron = {}",
                    self.neuron
                )));
            }
        }
        Ok(a)
    }

    /// Neuron kind after reconciling the architecture string.
    pub fn kind(&self) -> NeuronKind {
        self.arch().ok().and_then(|a| a.kind).unwrap_or(self.neuron)
    }

    pub fn layer_hyper(&self) -> LayerHyper {
        self.hyper
            .unwrap_or_else(|| LayerHyper::for_kind(self.kind()))
    }

    pub fn effective_split_index(&self) -> Result<usize> {
        Ok(self.arch()?.split_index(self.split_index))
    }

    pub fn seeds(&self) -> Vec<u64> {
        if self.sweep.seeds.is_empty() {
            vec![self.seed]
        } else {
            self.sweep.seeds.clone()
        }
    }

    pub fn sweep_values(&self, axis: SweepAxis) -> Vec<f64> {
        let given: Vec<f64> = match axis {
            SweepAxis::Alpha => self.sweep.alpha.clone(),
            SweepAxis::Distance => self.sweep.distance_m.clone(),
            SweepAxis::Snr => self.sweep.snr_db.clone(),
            SweepAxis::Bits => self.sweep.bits.iter().map(|&b| b as f64).collect(),
        };
        if given.is_empty() {
            axis.default_values()
        } else {
            given
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.arch()?;
        if self.split_index == 0 {
            return Err(Error::Config("split_index must be >= 1".into()));
        }
        self.train.validate()?;
        self.link.validate()?;
        if let Some(q) = &self.quant {
            q.validate()?;
        }
        if !(self.data.train_fraction > 0.0 && self.data.train_fraction < 1.0) {
            return Err(Error::Config(
                "data.train_fraction must be in (0, 1)".into(),
            ));
        }
        if self.data.source == DataSource::File && self.data.path.is_none() {
            return Err(Error::Config(
                "data.source = \"file\" needs data.path".into(),
            ));
        }
        if self.data.source == DataSource::Synthetic {
            self.data.synthetic.validate()?;
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form, ignoring `name` and
    /// `output_dir`, which do not affect results.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.name.clear();
        c.output_dir = PathBuf::new();
        let json = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_toml_gives_defaults() {
        let c = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
    }

    #[test]
    fn partial_tables_keep_other_defaults() {
        let c = ExperimentConfig::from_toml_str(
            r#"
            architecture = "700-RFC128-RFC128-O20"
            neuron = "rf"
            [train]
            epochs = 3
            [link]
            distance_m = 50.0
            equalizer = "real"
            [quant]
            bits = 6
            [sweep]
            alpha = [0.0, 0.001]
            "#,
        )
        .unwrap();
        assert_eq!(c.train.epochs, 3);
        assert_eq!(c.train.batch_size, 32);
        assert_eq!(c.link.distance_m, 50.0);
        assert_eq!(c.link.n_paths, 5);
        assert_eq!(c.quant.unwrap().bits, 6);
        assert_eq!(c.sweep_values(SweepAxis::Alpha), vec![0.0, 0.001]);
        assert_eq!(c.sweep_values(SweepAxis::Snr).len(), 6);
        assert_eq!(c.effective_split_index().unwrap(), 2);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::from_toml_str("architecture = \"700-O20\"").is_err());
        assert!(ExperimentConfig::from_toml_str("bogus_key = 1").is_err());
        assert!(
            ExperimentConfig::from_toml_str("architecture = \"1-LIF4-O2\"\nneuron = \"brf\"")
                .is_err()
        );
        assert!(ExperimentConfig::from_toml_str("[quant]\nbits = 1").is_err());
        assert!(ExperimentConfig::from_toml_str("[data]\nsource = \"file\"").is_err());
    }

    #[test]
    fn toml_round_trip_and_hash() {
        let mut c = ExperimentConfig::default();
        c.quant = Some(QuantConfig::default());
        let back = ExperimentConfig::from_toml_str(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        let mut d = c.clone();
        d.output_dir = "elsewhere".into();
        assert_eq!(d.hash(), c.hash());
        d.train.alpha = 1e-3;
        assert_ne!(d.hash(), c.hash());
        assert_eq!(c.hash().len(), 64);
    }
}
