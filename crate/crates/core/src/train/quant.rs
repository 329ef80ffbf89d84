//! Uniform post-training weight quantization and spike-matching calibration.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{InputSeq, SplitNetwork};
use crate::train::bptt::{backward, Seeds};
use crate::train::optim::{Optimizer, OptimizerConfig};
use crate::train::params::ParamClass;
use crate::train::surrogate::SpikeFn;

/// Which side of the split gets quantized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum QuantScope {
    #[default]
    Full,
    TransmitterOnly,
    ReceiverOnly,
}

impl std::str::FromStr for QuantScope {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(QuantScope::Full),
            "transmitter_only" | "transmitter-only" | "tx" => Ok(QuantScope::TransmitterOnly),
            "receiver_only" | "receiver-only" | "rx" => Ok(QuantScope::ReceiverOnly),
            other => Err(Error::Config(format!(
                "unknown quantization scope `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuantConfig {
    pub bits: u32,
    pub scope: QuantScope,
    /// Share of the training set used for calibration.
    pub calibration_fraction: f64,
    pub calibration_iters: usize,
    pub calibration_lr: f64,
}

impl Default for QuantConfig {
    fn default() -> Self {
        QuantConfig {
            bits: 4,
            scope: QuantScope::Full,
            calibration_fraction: 0.02,
            calibration_iters: 30,
            calibration_lr: 1e-2,
        }
    }
}

impl QuantConfig {
    pub fn validate(&self) -> Result<()> {
        if !(2..=16).contains(&self.bits) {
            return Err(Error::InvalidParam(format!(
                "bits {} outside [2, 16]",
                self.bits
            )));
        }
        if !(self.calibration_fraction > 0.0 && self.calibration_fraction <= 1.0) {
            return Err(Error::InvalidParam(
                "calibration fraction must be in (0, 1]".into(),
            ));
        }
        if !(self.calibration_lr > 0.0) {
            return Err(Error::InvalidParam(
                "calibration learning rate must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Scale `lambda = 2^(m-1) / max|w|`; `None` for an all-zero tensor.
pub fn quant_scale(max_abs: f64, bits: u32) -> Option<f64> {
    (max_abs > 0.0 && max_abs.is_finite()).then(|| 2f64.powi(bits as i32 - 1) / max_abs)
}

/// `round(lambda w) / lambda` with ties to even.
#[inline]
pub fn quantize_value(w: f64, lambda: f64) -> f64 {
    (lambda * w).round_ties_even() / lambda
}

fn max_abs<'a>(ws: impl IntoIterator<Item = &'a f64>) -> f64 {
    ws.into_iter().fold(0.0, |m, &w| m.max(w.abs()))
}

/// Quantizes one weight matrix. An all-zero matrix comes back unchanged
/// with no scale.
pub fn quantize_layer(w: &Array2<f64>, bits: u32) -> (Array2<f64>, Option<f64>) {
    match quant_scale(max_abs(w.iter()), bits) {
        Some(l) => (w.mapv(|x| quantize_value(x, l)), Some(l)),
        None => (w.clone(), None),
    }
}

/// Quantization metadata stored with a network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantInfo {
    pub bits: u32,
    pub scope: QuantScope,
    /// One scale per hidden layer, `None` when untouched or all-zero.
    pub layer_lambdas: Vec<Option<f64>>,
    pub readout_lambda: Option<f64>,
}

/// Quantizes the synaptic weights of every layer in `scope`. A layer's
/// feedforward, imaginary and recurrent weights share one scale; the readout
/// has its own and belongs to the receiver.
pub fn quantize_network(
    net: &SplitNetwork,
    bits: u32,
    scope: QuantScope,
) -> (SplitNetwork, QuantInfo) {
    let mut q = net.clone();
    let in_scope = |l: usize| match scope {
        QuantScope::Full => true,
        QuantScope::TransmitterOnly => l < net.split_index,
        QuantScope::ReceiverOnly => l >= net.split_index,
    };
    let mut layer_lambdas = Vec::with_capacity(q.layers.len());
    for (l, layer) in q.layers.iter_mut().enumerate() {
        if !in_scope(l) {
            layer_lambdas.push(None);
            continue;
        }
        let m = max_abs(
            layer
                .w_re
                .iter()
                .chain(layer.w_im.iter().flatten())
                .chain(layer.v.iter().flatten()),
        );
        let lambda = quant_scale(m, bits);
        if let Some(lam) = lambda {
            layer.w_re.mapv_inplace(|x| quantize_value(x, lam));
            if let Some(w) = &mut layer.w_im {
                w.mapv_inplace(|x| quantize_value(x, lam));
            }
            if let Some(v) = &mut layer.v {
                v.mapv_inplace(|x| quantize_value(x, lam));
            }
        }
        layer_lambdas.push(lambda);
    }
    let readout_lambda = if scope != QuantScope::TransmitterOnly {
        let (w, lam) = quantize_layer(&q.readout.w, bits);
        q.readout.w = w;
        lam
    } else {
        None
    };
    (
        q,
        QuantInfo {
            bits,
            scope,
            layer_lambdas,
            readout_lambda,
        },
    )
}

/// Spike-matching loss: per layer `(1/K) sum_i (S_q - S)^2`, averaged over
/// layers, timesteps and samples.
pub fn calibration_loss(
    net_fp: &SplitNetwork,
    net_q: &SplitNetwork,
    data: &[InputSeq],
) -> Result<f64> {
    let sf = SpikeFn::default();
    let mut acc = 0.0;
    for x in data {
        let a = net_fp.forward(x, None, sf)?;
        let b = net_q.forward(x, None, sf)?;
        acc += spike_mismatch(&a.layers, &b.layers, None);
    }
    Ok(acc / data.len().max(1) as f64)
}

fn spike_mismatch(
    target: &[crate::layer::LayerTrace],
    got: &[crate::layer::LayerTrace],
    mut seeds: Option<&mut Vec<Array2<f64>>>,
) -> f64 {
    let n_layers = target.len() as f64;
    let mut loss = 0.0;
    for (l, (ta, tb)) in target.iter().zip(got).enumerate() {
        let steps = ta.steps() as f64;
        let k = ta.spikes.ncols() as f64;
        let diff = &tb.spikes - &ta.spikes;
        loss += diff.mapv(|d| d * d).sum() / (k * steps * n_layers);
        if let Some(s) = seeds.as_deref_mut() {
            s[l] = diff * (2.0 / (k * steps * n_layers));
        }
    }
    loss
}

/// Per-iteration calibration losses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub losses: Vec<f64>,
    pub initial: f64,
    pub best: f64,
}

/// Adjusts only the neuron parameters (`omega`, `b_hat`) of `net_q` so its
/// spikes track `net_fp`. Gradients pass straight through the spike
/// comparison via the surrogate; weights stay quantized. The best iterate is
/// kept, so the returned loss never exceeds the starting one.
pub fn calibrate(
    net_fp: &SplitNetwork,
    net_q: &SplitNetwork,
    data: &[InputSeq],
    iterations: usize,
    lr: f64,
) -> Result<(SplitNetwork, CalibrationReport)> {
    let sf = SpikeFn::default();
    let targets = data
        .iter()
        .map(|x| net_fp.forward(x, None, sf).map(|o| o.layers))
        .collect::<Result<Vec<_>>>()?;
    let mut cur = net_q.clone();
    let mut best = cur.clone();
    let mut opt = Optimizer::new(OptimizerConfig::adam(lr));
    let mut losses = Vec::with_capacity(iterations + 1);
    let mut best_loss = f64::INFINITY;
    for it in 0..=iterations {
        let mut grad = crate::train::params::NetworkGrad::zeros_like(&cur);
        let mut loss = 0.0;
        for (x, target) in data.iter().zip(&targets) {
            let out = cur.forward(x, None, sf)?;
            let mut seeds = Seeds::zeros(&cur, out.probs.nrows());
            loss += spike_mismatch(target, &out.layers, Some(&mut seeds.spikes));
            if it < iterations {
                grad.add_assign(&backward(&cur, &out, &seeds, sf));
            }
        }
        let n = data.len().max(1) as f64;
        loss /= n;
        losses.push(loss);
        if loss < best_loss {
            best_loss = loss;
            best = cur.clone();
        }
        if it == iterations || loss == 0.0 {
            break;
        }
        grad.scale(1.0 / n);
        grad.check_finite()?;
        opt.apply(&mut cur, &grad, ParamClass::is_neuron);
    }
    let initial = losses[0];
    Ok((
        best,
        CalibrationReport {
            losses,
            initial,
            best: best_loss,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn four_bit_example() {
        let w = array![[0.33, -0.5], [0.0, 0.1]];
        let (q, lam) = quantize_layer(&w, 4);
        assert_eq!(lam, Some(16.0));
        assert_eq!(q[[0, 0]], 0.3125);
        assert_eq!(q[[0, 1]], -0.5);
        assert_eq!(q[[1, 0]], 0.0);
    }

    #[test]
    fn ties_go_to_even() {
        // lambda = 2 -> 0.25 * 2 = 0.5 rounds to 0, 0.75 * 2 = 1.5 rounds to 2
        assert_eq!(quantize_value(0.25, 2.0), 0.0);
        assert_eq!(quantize_value(0.75, 2.0), 1.0);
        assert_eq!(quantize_value(-0.25, 2.0), 0.0);
    }

    #[test]
    fn all_zero_is_untouched() {
        let w = Array2::<f64>::zeros((2, 3));
        let (q, lam) = quantize_layer(&w, 8);
        assert_eq!(q, w);
        assert_eq!(lam, None);
    }

    #[test]
    fn idempotent_with_frozen_scale() {
        let w = array![[0.123, -0.77], [0.5, 0.31]];
        let (q, lam) = quantize_layer(&w, 3);
        let lam = lam.unwrap();
        assert_eq!(q.mapv(|x| quantize_value(x, lam)), q);
    }

    #[test]
    fn config_bounds() {
        let mut c = QuantConfig::default();
        assert!(c.validate().is_ok());
        c.bits = 1;
        assert!(c.validate().is_err());
        c.bits = 17;
        assert!(c.validate().is_err());
    }
}
