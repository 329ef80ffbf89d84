//! Subcarrier mapping, the fading channel, estimation and detection.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::config::{Equalizer, LinkConfig, PilotMode};
use crate::error::{dim, Error, Result};

/// Estimates below this magnitude mark the subcarrier as erased.
pub const ERASURE_THRESHOLD: f64 = 1e-12;

/// Which subcarriers carry pilots (comb layout) and where data goes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub n_data: usize,
    pub pilot_mode: PilotMode,
    pub pilot_mask: Vec<bool>,
    pub pilots: Vec<usize>,
    pub data: Vec<usize>,
}

impl Layout {
    pub fn new(n_data: usize, cfg: &LinkConfig) -> Result<Self> {
        if n_data == 0 {
            return Err(Error::InvalidParam("no data subcarriers".into()));
        }
        match cfg.pilot_mode {
            PilotMode::Comb => {
                let np = cfg.n_pilots;
                if np < 2 {
                    return Err(Error::InvalidParam(
                        "comb layout needs at least two pilots".into(),
                    ));
                }
                let n = n_data + np;
                let pilots: Vec<usize> = (0..np)
                    .map(|k| ((k * (n - 1)) as f64 / (np - 1) as f64).round() as usize)
                    .collect();
                let mut mask = vec![false; n];
                for &p in &pilots {
                    mask[p] = true;
                }
                let data = (0..n).filter(|&m| !mask[m]).collect();
                Ok(Layout {
                    n_data,
                    pilot_mode: PilotMode::Comb,
                    pilot_mask: mask,
                    pilots,
                    data,
                })
            }
            PilotMode::Block => Ok(Layout {
                n_data,
                pilot_mode: PilotMode::Block,
                pilot_mask: vec![false; n_data],
                pilots: Vec::new(),
                data: (0..n_data).collect(),
            }),
        }
    }

    pub fn n_subcarriers(&self) -> usize {
        self.pilot_mask.len()
    }
}

/// One OFDM symbol in the frequency domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfdmFrame {
    pub values: Vec<Complex64>,
    pub pilot_mask: Vec<bool>,
}

impl OfdmFrame {
    pub fn power(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }
}

/// Pilot value `x^p = sqrt(P)`.
pub fn pilot_value(p: f64) -> Complex64 {
    Complex64::new(p.sqrt(), 0.0)
}

/// Data subcarriers carry `sqrt(P) * S`, pilots `sqrt(P)`.
pub fn map_spikes(spikes: &[u8], layout: &Layout, p: f64) -> Result<OfdmFrame> {
    dim("spike vector width", layout.n_data, spikes.len())?;
    let a = p.sqrt();
    let mut values = vec![Complex64::new(0.0, 0.0); layout.n_subcarriers()];
    for &m in &layout.pilots {
        values[m] = pilot_value(p);
    }
    for (&m, &s) in layout.data.iter().zip(spikes) {
        values[m] = Complex64::new(a * f64::from(s), 0.0);
    }
    Ok(OfdmFrame {
        values,
        pilot_mask: layout.pilot_mask.clone(),
    })
}

/// Block-fading channel for one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub taps: Vec<Complex64>,
    /// Frequency response on every subcarrier.
    pub h: Vec<Complex64>,
}

fn cn<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    Complex64::new(
        rng.sample::<f64, _>(StandardNormal) * s,
        rng.sample::<f64, _>(StandardNormal) * s,
    )
}

impl ChannelRealization {
    /// `H_m = sum_l h_l exp(-j 2 pi l m / N)`.
    pub fn from_taps(taps: Vec<Complex64>, n_subcarriers: usize) -> Self {
        let n = n_subcarriers as f64;
        let h = (0..n_subcarriers)
            .map(|m| {
                taps.iter()
                    .enumerate()
                    .map(|(l, &g)| {
                        g * Complex64::from_polar(1.0, -std::f64::consts::TAU * (l * m) as f64 / n)
                    })
                    .sum()
            })
            .collect();
        ChannelRealization { taps, h }
    }

    /// Unit-gain flat channel.
    pub fn identity(n_subcarriers: usize) -> Self {
        ChannelRealization {
            taps: vec![Complex64::new(1.0, 0.0)],
            h: vec![Complex64::new(1.0, 0.0); n_subcarriers],
        }
    }
}

/// Draws i.i.d. `CN(0, 1/L)` taps, so the average channel norm is one.
pub fn draw_channel<R: Rng + ?Sized>(
    rng: &mut R,
    n_paths: usize,
    n_subcarriers: usize,
) -> ChannelRealization {
    let var = 1.0 / n_paths as f64;
    let taps = (0..n_paths).map(|_| cn(rng, var)).collect();
    ChannelRealization::from_taps(taps, n_subcarriers)
}

/// `y = H x g + w`, `w ~ CN(0, noise_w)`.
pub fn transmit<R: Rng + ?Sized>(
    frame: &OfdmFrame,
    ch: &ChannelRealization,
    gain: f64,
    noise_w: f64,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    dim("channel width", frame.values.len(), ch.h.len())?;
    Ok(frame
        .values
        .iter()
        .zip(&ch.h)
        .map(|(&x, &h)| {
            h * x * gain
                + if noise_w > 0.0 {
                    cn(rng, noise_w)
                } else {
                    Complex64::new(0.0, 0.0)
                }
        })
        .collect())
}

/// Piecewise-linear interpolation of `(index, value)` anchors sorted by index,
/// with real and imaginary parts handled separately.
pub fn interpolate(anchors: &[(usize, Complex64)], m: usize) -> Complex64 {
    let i = anchors.partition_point(|&(k, _)| k <= m);
    if i == 0 {
        return anchors[0].1;
    }
    let (k0, v0) = anchors[i - 1];
    if k0 == m || i == anchors.len() {
        return v0;
    }
    let (k1, v1) = anchors[i];
    let f = (m - k0) as f64 / (k1 - k0) as f64;
    Complex64::new(v0.re + f * (v1.re - v0.re), v0.im + f * (v1.im - v0.im))
}

/// Channel estimates on the data subcarriers.
pub fn estimate_channel(
    layout: &Layout,
    y: &[Complex64],
    pilot_rx: Option<&[Complex64]>,
    p: f64,
) -> Result<Vec<Complex64>> {
    let xp = pilot_value(p);
    match layout.pilot_mode {
        PilotMode::Comb => {
            dim("received frame width", layout.n_subcarriers(), y.len())?;
            let anchors: Vec<(usize, Complex64)> =
                layout.pilots.iter().map(|&k| (k, y[k] / xp)).collect();
            Ok(layout
                .data
                .iter()
                .map(|&m| interpolate(&anchors, m))
                .collect())
        }
        PilotMode::Block => {
            let rx = pilot_rx
                .ok_or_else(|| Error::InvalidParam("block pilots need the pilot symbol".into()))?;
            dim("pilot symbol width", layout.n_data, rx.len())?;
            Ok(rx.iter().map(|&v| v / xp).collect())
        }
    }
}

/// Equalised data symbols; `None` marks an erased subcarrier.
pub fn equalize(
    layout: &Layout,
    y: &[Complex64],
    h_hat: &[Complex64],
    eq: Equalizer,
) -> Vec<Option<Complex64>> {
    layout
        .data
        .iter()
        .zip(h_hat)
        .map(|(&m, &h)| {
            if h.norm() < ERASURE_THRESHOLD {
                return None;
            }
            Some(match eq {
                Equalizer::Complex => y[m] / h,
                Equalizer::Real => {
                    if h.re.abs() < ERASURE_THRESHOLD {
                        return None;
                    }
                    y[m] / h.re
                }
            })
        })
        .collect()
}

/// `S = [Re(x / sqrt(P)) > 1/2]`; erasures decode as no spike.
pub fn detect_spikes(x_hat: &[Option<Complex64>], p: f64) -> Vec<u8> {
    let a = p.sqrt();
    x_hat
        .iter()
        .map(|x| x.map_or(0, |x| u8::from((x / a).re > 0.5)))
        .collect()
}
