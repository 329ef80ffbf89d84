use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How pilots are placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PilotMode {
    /// `n_pilots` pilot subcarriers interleaved with data, evenly spaced
    /// including both band edges, with linear interpolation in between.
    Comb,
    /// A pilot-only symbol ahead of each data symbol: every subcarrier is
    /// estimated directly and no interpolation is needed.
    #[default]
    Block,
}

impl std::str::FromStr for PilotMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "comb" => Ok(PilotMode::Comb),
            "block" | "full" => Ok(PilotMode::Block),
            o => Err(Error::Config(format!("unknown pilot mode `{o}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Equalizer {
    /// Divide by the complex channel estimate.
    #[default]
    Complex,
    /// Divide by the real part of the estimate only.
    Real,
}

impl std::str::FromStr for Equalizer {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "complex" => Ok(Equalizer::Complex),
            "real" => Ok(Equalizer::Real),
            o => Err(Error::Config(format!(
                "unknown equalizer `{o}` (complex|real)"
            ))),
        }
    }
}

pub const DEFAULT_SYMBOL_DURATION: f64 = 35.68e-6;
pub const DEFAULT_NOISE_W: f64 = 1e-12;

/// Link parameters. Transmit power follows from the target SNR, the noise
/// floor and the path loss at `distance_m` unless `tx_power_w` pins it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkConfig {
    pub n_pilots: usize,
    pub pilot_mode: PilotMode,
    pub snr_db: f64,
    pub tx_power_w: Option<f64>,
    pub noise_w: f64,
    pub distance_m: f64,
    pub fc_ghz: f64,
    pub symbol_duration: f64,
    pub n_paths: usize,
    pub equalizer: Equalizer,
    /// Disables path loss, noise and fading (an ideal wire).
    pub ideal: bool,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            n_pilots: 8,
            pilot_mode: PilotMode::Block,
            snr_db: 20.0,
            tx_power_w: None,
            noise_w: DEFAULT_NOISE_W,
            distance_m: 100.0,
            fc_ghz: 6.0,
            symbol_duration: DEFAULT_SYMBOL_DURATION,
            n_paths: 5,
            equalizer: Equalizer::Complex,
            ideal: false,
        }
    }
}

impl LinkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pilot_mode == PilotMode::Comb && self.n_pilots < 2 {
            return Err(Error::InvalidParam(
                "comb layout needs at least two pilots".into(),
            ));
        }
        if !(self.noise_w > 0.0) || !(self.distance_m > 0.0) || !(self.fc_ghz > 0.0) {
            return Err(Error::InvalidParam(
                "noise, distance and carrier must be positive".into(),
            ));
        }
        if let Some(p) = self.tx_power_w {
            if !(p > 0.0) {
                return Err(Error::InvalidParam(
                    "transmit power must be positive".into(),
                ));
            }
        }
        if self.n_paths == 0 {
            return Err(Error::InvalidParam(
                "channel needs at least one path".into(),
            ));
        }
        if !(self.symbol_duration > 0.0) || self.snr_db.is_nan() {
            return Err(Error::InvalidParam(
                "symbol duration must be positive and SNR a number".into(),
            ));
        }
        Ok(())
    }

    pub fn path_loss_db(&self) -> f64 {
        super::path_loss_db(self.distance_m, self.fc_ghz)
    }

    /// Per-subcarrier transmit power, W.
    pub fn power(&self) -> f64 {
        self.tx_power_w
            .unwrap_or_else(|| super::power_for_snr(self.snr_db, self.noise_w, self.path_loss_db()))
    }

    /// Amplitude gain `10^(-PL/20)`.
    pub fn amplitude_gain(&self) -> f64 {
        10f64.powf(-self.path_loss_db() / 20.0)
    }
}
