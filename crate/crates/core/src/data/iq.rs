//! `IQF1` sample files and additive white Gaussian noise.
//!
//! Layout (little-endian):
//!
//! | offset | type      | field                         |
//! |--------|-----------|-------------------------------|
//! | 0      | `[u8; 4]` | magic `IQF1`                  |
//! | 4      | `i32`     | label, `-1` when unlabelled   |
//! | 8      | `f64`     | sample rate, samples/s        |
//! | 16     | `u64`     | sample count `n`              |
//! | 24     | `n x 8`   | samples: `f32` I, `f32` Q     |

use std::path::Path;

use num_complex::{Complex32, Complex64};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::bytes::Reader;
use crate::error::{Error, Result};

pub const IQ_MAGIC: &[u8; 4] = b"IQF1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IqFile {
    pub label: Option<u32>,
    pub sample_rate: f64,
    pub samples: Vec<Complex32>,
}

impl IqFile {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + 8 * self.samples.len());
        out.extend_from_slice(IQ_MAGIC);
        out.extend_from_slice(&self.label.map_or(-1, |l| l as i32).to_le_bytes());
        out.extend_from_slice(&self.sample_rate.to_le_bytes());
        out.extend_from_slice(&(self.samples.len() as u64).to_le_bytes());
        for s in &self.samples {
            out.extend_from_slice(&s.re.to_le_bytes());
            out.extend_from_slice(&s.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader::new(buf);
        if &r.array::<4>("magic")? != IQ_MAGIC {
            return Err(Error::Parse {
                offset: 0,
                msg: "bad magic, expected IQF1".into(),
            });
        }
        let label = r.i32("label")?;
        let sample_rate = r.f64("sample rate")?;
        let n = r.u64("sample count")?;
        let fits = (buf.len() - r.offset()) / 8;
        let mut samples = Vec::with_capacity((n as usize).min(fits));
        for _ in 0..n {
            let at = r.offset();
            let i = r.f32("I")?;
            let q = r.f32("Q")?;
            if !(i.is_finite() && q.is_finite()) {
                return Err(Error::Parse {
                    offset: at,
                    msg: "non-finite sample".into(),
                });
            }
            samples.push(Complex32::new(i, q));
        }
        r.finish()?;
        Ok(IqFile {
            label: (label >= 0).then_some(label as u32),
            sample_rate,
            samples,
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn to_complex64(&self) -> Vec<Complex64> {
        self.samples
            .iter()
            .map(|s| Complex64::new(f64::from(s.re), f64::from(s.im)))
            .collect()
    }
}

/// Reads an IQ file as double-precision samples plus its label.
pub fn load_iq(path: impl AsRef<Path>) -> Result<(Vec<Complex64>, Option<u32>)> {
    let f = IqFile::read(path)?;
    Ok((f.to_complex64(), f.label))
}

/// Mean `|x|^2`.
pub fn signal_power(x: &[Complex64]) -> f64 {
    x.iter().map(|c| c.norm_sqr()).sum::<f64>() / x.len().max(1) as f64
}

/// Adds circular complex Gaussian noise so the empirical signal power over
/// noise power equals `10^(snr_db / 10)`. `snr_db = +inf` leaves `x` as is.
pub fn add_awgn<R: Rng + ?Sized>(
    x: &[Complex64],
    snr_db: f64,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    if snr_db == f64::INFINITY {
        return Ok(x.to_vec());
    }
    if snr_db.is_nan() {
        return Err(Error::InvalidParam("SNR is NaN".into()));
    }
    let p = signal_power(x);
    if p == 0.0 {
        return Err(Error::ZeroSignal);
    }
    let sigma = (p / 10f64.powf(snr_db / 10.0) / 2.0).sqrt();
    Ok(x.iter()
        .map(|&c| {
            let n = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            c + n * sigma
        })
        .collect())
}

/// Real-valued variant for current sequences.
pub fn add_awgn_real<R: Rng + ?Sized>(x: &[f64], snr_db: f64, rng: &mut R) -> Result<Vec<f64>> {
    if snr_db == f64::INFINITY {
        return Ok(x.to_vec());
    }
    let p = x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64;
    if p == 0.0 {
        return Err(Error::ZeroSignal);
    }
    let sigma = (p / 10f64.powf(snr_db / 10.0)).sqrt();
    Ok(x.iter()
        .map(|&v| v + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect())
}
