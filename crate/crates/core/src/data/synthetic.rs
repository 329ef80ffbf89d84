//! Synthetic resonance classification: each class is a noisy sinusoid at its
//! own frequency, so a resonator tuned to that frequency responds most.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Sample};
use crate::error::{Error, Result};
use crate::network::InputSeq;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub classes: usize,
    pub samples_per_class: usize,
    pub steps: usize,
    pub noise_sigma: f64,
    pub amplitude: f64,
    /// Lowest and highest class angular frequency, rad/s.
    pub omega_min: f64,
    pub omega_max: f64,
    /// Sampling interval, s.
    pub dt: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            classes: 4,
            samples_per_class: 100,
            steps: 250,
            noise_sigma: 0.3,
            amplitude: 1.0,
            omega_min: 15.0,
            omega_max: 60.0,
            dt: 0.01,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    /// Geometrically spaced class frequencies.
    pub fn class_omegas(&self) -> Vec<f64> {
        if self.classes == 1 {
            return vec![self.omega_min];
        }
        let ratio = (self.omega_max / self.omega_min).powf(1.0 / (self.classes - 1) as f64);
        (0..self.classes)
            .map(|k| self.omega_min * ratio.powi(k as i32))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::InvalidParam(
                "synthetic task needs at least two classes".into(),
            ));
        }
        if self.steps == 0 || self.samples_per_class == 0 {
            return Err(Error::InvalidParam(
                "steps and samples per class must be positive".into(),
            ));
        }
        if !(self.omega_min > 0.0 && self.omega_max > self.omega_min) {
            return Err(Error::InvalidParam("need 0 < omega_min < omega_max".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.dt > 0.0) {
            return Err(Error::InvalidParam(
                "noise sigma must be >= 0 and dt > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Generates a balanced, deterministic dataset. Samples cycle through the
/// classes in order; each draws a uniform random phase.
pub fn gen_resonance_task(cfg: &SyntheticConfig) -> Result<Dataset> {
    cfg.validate()?;
    let omegas = cfg.class_omegas();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.classes * cfg.samples_per_class;
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % cfg.classes;
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        let w = omegas[label];
        let mut x = Array2::zeros((cfg.steps, 1));
        for t in 0..cfg.steps {
            let noise: f64 = rng.sample(StandardNormal);
            x[[t, 0]] =
                cfg.amplitude * (w * t as f64 * cfg.dt + phase).sin() + cfg.noise_sigma * noise;
        }
        samples.push(Sample {
            input: InputSeq::real(x),
            label,
        });
    }
    Dataset::new(format!("resonance{}", cfg.classes), cfg.classes, samples)
}
