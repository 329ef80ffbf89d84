use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary `T x M` spike tensor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpikeRaster {
    steps: usize,
    channels: usize,
    bits: Vec<u8>,
}

impl SpikeRaster {
    pub fn zeros(steps: usize, channels: usize) -> Self {
        SpikeRaster {
            steps,
            channels,
            bits: vec![0; steps * channels],
        }
    }

    pub fn from_bits(steps: usize, channels: usize, bits: Vec<u8>) -> Result<Self> {
        if bits.len() != steps * channels {
            return Err(Error::Dimension {
                what: "raster bits",
                expected: steps * channels,
                got: bits.len(),
            });
        }
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidParam(format!(
                "raster entry {b} is not binary"
            )));
        }
        Ok(SpikeRaster {
            steps,
            channels,
            bits,
        })
    }

    /// Thresholds a real matrix at 0.5.
    pub fn from_matrix(m: &Array2<f64>) -> Self {
        let (steps, channels) = m.dim();
        let bits = m.iter().map(|&x| u8::from(x > 0.5)).collect();
        SpikeRaster {
            steps,
            channels,
            bits,
        }
    }

    pub fn to_matrix(&self) -> Array2<f64> {
        Array2::from_shape_fn((self.steps, self.channels), |(t, m)| {
            f64::from(self.bits[t * self.channels + m])
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn get(&self, t: usize, m: usize) -> bool {
        self.bits[t * self.channels + m] != 0
    }

    pub fn set(&mut self, t: usize, m: usize, on: bool) {
        self.bits[t * self.channels + m] = u8::from(on);
    }

    pub fn row(&self, t: usize) -> &[u8] {
        &self.bits[t * self.channels..(t + 1) * self.channels]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    pub fn counts_per_step(&self) -> Vec<u64> {
        (0..self.steps)
            .map(|t| self.row(t).iter().map(|&b| b as u64).sum())
            .collect()
    }

    pub fn as_bits(&self) -> &[u8] {
        &self.bits
    }
}
