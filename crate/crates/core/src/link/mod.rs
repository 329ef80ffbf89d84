//! OFDM link carrying encoder spikes over a multipath Rayleigh channel.

mod budget;
mod config;
mod ofdm;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use budget::{path_loss_db, power_for_snr, snr_of, tx_energy};
pub use config::{Equalizer, LinkConfig, PilotMode, DEFAULT_NOISE_W, DEFAULT_SYMBOL_DURATION};
pub use ofdm::{
    detect_spikes, draw_channel, equalize, estimate_channel, interpolate, map_spikes, pilot_value,
    transmit, ChannelRealization, Layout, OfdmFrame, ERASURE_THRESHOLD,
};

use crate::error::{dim, Result};
use crate::network::SpikeChannel;

/// Counters accumulated by a [`LinkSimulator`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LinkStats {
    pub slots: u64,
    pub bits: u64,
    pub spikes_sent: u64,
    pub bit_errors: u64,
    pub erasures: u64,
    /// Data-subcarrier energy, J.
    pub tx_energy_j: f64,
    /// Pilot energy, reported separately, J.
    pub pilot_energy_j: f64,
}

impl LinkStats {
    pub fn error_rate(&self) -> f64 {
        self.bit_errors as f64 / self.bits.max(1) as f64
    }

    pub fn merge(&mut self, o: &LinkStats) {
        self.slots += o.slots;
        self.bits += o.bits;
        self.spikes_sent += o.spikes_sent;
        self.bit_errors += o.bit_errors;
        self.erasures += o.erasures;
        self.tx_energy_j += o.tx_energy_j;
        self.pilot_energy_j += o.pilot_energy_j;
    }
}

/// Stateful link: one OFDM symbol and one fresh channel draw per slot.
#[derive(Debug, Clone)]
pub struct LinkSimulator {
    pub cfg: LinkConfig,
    pub layout: Layout,
    power: f64,
    gain: f64,
    rng: ChaCha8Rng,
    pub stats: LinkStats,
}

impl LinkSimulator {
    pub fn new(n_data: usize, cfg: LinkConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        Ok(LinkSimulator {
            layout: Layout::new(n_data, &cfg)?,
            power: cfg.power(),
            gain: cfg.amplitude_gain(),
            cfg,
            rng: ChaCha8Rng::seed_from_u64(seed),
            stats: LinkStats::default(),
        })
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    /// Sends one slot of binary spikes and returns the detected bits.
    pub fn slot(&mut self, spikes: &[u8]) -> Result<Vec<u8>> {
        dim("spike vector width", self.layout.n_data, spikes.len())?;
        let sent = spikes.iter().filter(|&&s| s != 0).count() as u64;
        let detected = if self.cfg.ideal {
            spikes.to_vec()
        } else {
            self.air(spikes)?
        };
        let st = &mut self.stats;
        st.slots += 1;
        st.bits += spikes.len() as u64;
        st.spikes_sent += sent;
        st.bit_errors += spikes.iter().zip(&detected).filter(|(a, b)| a != b).count() as u64;
        st.tx_energy_j += tx_energy(&[sent], self.power, self.cfg.symbol_duration);
        let n_pilot_tones = match self.layout.pilot_mode {
            PilotMode::Comb => self.layout.pilots.len(),
            PilotMode::Block => self.layout.n_data,
        };
        st.pilot_energy_j += n_pilot_tones as f64 * self.power * self.cfg.symbol_duration;
        Ok(detected)
    }

    fn air(&mut self, spikes: &[u8]) -> Result<Vec<u8>> {
        let n = self.layout.n_subcarriers();
        let ch = draw_channel(&mut self.rng, self.cfg.n_paths, n);
        let frame = map_spikes(spikes, &self.layout, self.power)?;
        let pilot_rx = if self.layout.pilot_mode == PilotMode::Block {
            let pf = OfdmFrame {
                values: vec![pilot_value(self.power); n],
                pilot_mask: vec![true; n],
            };
            Some(transmit(
                &pf,
                &ch,
                self.gain,
                self.cfg.noise_w,
                &mut self.rng,
            )?)
        } else {
            None
        };
        let y = transmit(&frame, &ch, self.gain, self.cfg.noise_w, &mut self.rng)?;
        let h_hat = estimate_channel(&self.layout, &y, pilot_rx.as_deref(), self.power)?;
        let x_hat = equalize(&self.layout, &y, &h_hat, self.cfg.equalizer);
        self.stats.erasures += x_hat.iter().filter(|x| x.is_none()).count() as u64;
        Ok(detect_spikes(&x_hat, self.power))
    }
}

impl SpikeChannel for LinkSimulator {
    fn transmit_slot(&mut self, spikes: &[f64]) -> Result<Vec<f64>> {
        let bits: Vec<u8> = spikes.iter().map(|&s| u8::from(s > 0.5)).collect();
        Ok(self.slot(&bits)?.into_iter().map(f64::from).collect())
    }
}

const CHUNK: usize = 1000;

/// Monte-Carlo spike error rate over random frames in which each bit is a
/// spike with probability `density`. Chunks run in parallel on independent
/// streams and are merged in order.
pub fn spike_error_rate(
    n_data: usize,
    cfg: &LinkConfig,
    frames: usize,
    density: f64,
    seed: u64,
) -> Result<LinkStats> {
    let chunks = frames.div_ceil(CHUNK);
    let parts: Vec<LinkStats> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut link = LinkSimulator::new(n_data, *cfg, seed)?;
            link.rng.set_stream(c as u64 + 1);
            let mut bits_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            bits_rng.set_stream(c as u64 + 1);
            let n = CHUNK.min(frames - c * CHUNK);
            let mut bits = vec![0u8; n_data];
            for _ in 0..n {
                for b in bits.iter_mut() {
                    *b = u8::from(bits_rng.random_bool(density));
                }
                link.slot(&bits)?;
            }
            Ok(link.stats)
        })
        .collect::<Result<_>>()?;
    let mut total = LinkStats::default();
    for p in &parts {
        total.merge(p);
    }
    Ok(total)
}
