//! Split spiking network: encoder layers, a spike channel, decoder layers and
//! a leaky-integrator readout.

use ndarray::{concatenate, Array1, Array2, Axis};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{dim, Error, Result};
use crate::layer::{InitConfig, Layer, LayerHyper, LayerInput, LayerTrace, OpTrace};
use crate::neuron::NeuronKind;
use crate::train::surrogate::SpikeFn;

/// Default leak of the readout integrator.
pub const READOUT_DECAY: f64 = 0.9;

/// A `T x D` input sequence, real or complex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSeq {
    pub re: Array2<f64>,
    pub im: Option<Array2<f64>>,
}

impl InputSeq {
    pub fn real(re: Array2<f64>) -> Self {
        InputSeq { re, im: None }
    }

    pub fn complex(values: &Array2<Complex64>) -> Self {
        InputSeq {
            re: values.mapv(|c| c.re),
            im: Some(values.mapv(|c| c.im)),
        }
    }

    pub fn steps(&self) -> usize {
        self.re.nrows()
    }

    pub fn width(&self) -> usize {
        self.re.ncols()
    }

    pub fn is_complex(&self) -> bool {
        self.im.is_some()
    }

    /// Real and imaginary parts side by side as `2D` real channels.
    pub fn split_channels(&self) -> Array2<f64> {
        match &self.im {
            Some(im) => {
                concatenate(Axis(1), &[self.re.view(), im.view()]).expect("matching shapes")
            }
            None => self.re.clone(),
        }
    }
}

/// Non-spiking leaky integrator over a linear map of the last layer's spikes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Readout {
    /// `classes x inputs`.
    pub w: Array2<f64>,
    pub decay: f64,
}

impl Readout {
    pub fn init<R: Rng>(rng: &mut R, n_in: usize, classes: usize, decay: f64) -> Self {
        let scale = 1.0 / (n_in as f64).sqrt();
        Readout {
            w: Array2::from_shape_fn((classes, n_in), |_| rng.random_range(-scale..=scale)),
            decay,
        }
    }

    pub fn classes(&self) -> usize {
        self.w.nrows()
    }

    /// Integrator state over time, `T x classes`.
    pub fn integrate(&self, spikes: &Array2<f64>) -> Array2<f64> {
        let steps = spikes.nrows();
        let c = self.classes();
        let mut state = Array1::<f64>::zeros(c);
        let mut out = Array2::<f64>::zeros((steps, c));
        for t in 0..steps {
            state *= self.decay;
            for (j, &s) in spikes.row(t).iter().enumerate() {
                if s != 0.0 {
                    state.scaled_add(s, &self.w.column(j));
                }
            }
            out.row_mut(t).assign(&state);
        }
        out
    }
}

/// Row-wise softmax.
pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|x| (x - m).exp());
        let z = row.sum();
        row /= z;
    }
    out
}

/// Something that carries one slot of encoder spikes to the decoder.
pub trait SpikeChannel {
    fn transmit_slot(&mut self, spikes: &[f64]) -> Result<Vec<f64>>;
}

/// Lossless channel; split mode through it equals centralized mode.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityChannel;

impl SpikeChannel for IdentityChannel {
    fn transmit_slot(&mut self, spikes: &[f64]) -> Result<Vec<f64>> {
        Ok(spikes.to_vec())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitNetwork {
    pub input_dim: usize,
    /// Complex inputs are fed to a real first layer as `[re, im]` channels.
    pub split_complex_input: bool,
    pub layers: Vec<Layer>,
    /// Number of spiking layers on the transmitter side.
    pub split_index: usize,
    pub readout: Readout,
}

/// Blueprint for one hidden layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerPlan {
    pub size: usize,
    pub recurrent: bool,
    pub complex: bool,
}

#[derive(Debug, Clone)]
pub struct ForwardOutput {
    pub layers: Vec<LayerTrace>,
    /// Readout integrator state, `T x classes`.
    pub logits: Array2<f64>,
    pub probs: Array2<f64>,
    /// Spikes entering the first decoder layer after the channel; `None` in centralized mode.
    pub delivered: Option<Array2<f64>>,
    /// Readout input events per step.
    pub readout_events: Vec<u64>,
}

impl ForwardOutput {
    /// Class decided from time-averaged probabilities.
    pub fn prediction(&self) -> usize {
        let mean = self.probs.mean_axis(Axis(0)).expect("T >= 1");
        argmax(mean.as_slice().expect("contiguous"))
    }

    pub fn layer_spike_counts(&self) -> Vec<u64> {
        self.layers.iter().map(|l| l.spike_count()).collect()
    }

    /// Encoder output spikes, `T x M`.
    pub fn encoder_output(&self, split_index: usize) -> &Array2<f64> {
        &self.layers[split_index - 1].spikes
    }

    pub fn ops(&self) -> Vec<&[OpTrace]> {
        self.layers.iter().map(|l| l.ops.as_slice()).collect()
    }
}

pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

impl SplitNetwork {
    /// Builds a network from layer blueprints. Complex layers with integrator
    /// neurons are realised as real layers over split `[re, im]` channels.
    #[allow(clippy::too_many_arguments)]
    pub fn init<R: Rng>(
        rng: &mut R,
        input_dim: usize,
        plans: &[LayerPlan],
        classes: usize,
        kind: NeuronKind,
        split_index: usize,
        hyper: LayerHyper,
        init: &InitConfig,
    ) -> Result<Self> {
        if plans.is_empty() {
            return Err(Error::InvalidParam(
                "network needs at least one hidden layer".into(),
            ));
        }
        if split_index == 0 || split_index > plans.len() {
            return Err(Error::InvalidParam(format!(
                "split index {split_index} outside 1..={}",
                plans.len()
            )));
        }
        let mut layers = Vec::with_capacity(plans.len());
        let mut split_complex_input = false;
        let mut n_in = input_dim;
        for (l, plan) in plans.iter().enumerate() {
            let mut complex = plan.complex;
            if complex && l > 0 {
                return Err(Error::InvalidParam(
                    "complex weights are only allowed in the first layer".into(),
                ));
            }
            if complex && !kind.is_resonator() {
                complex = false;
                split_complex_input = true;
                n_in *= 2;
            }
            layers.push(Layer::init(
                rng,
                kind,
                n_in,
                plan.size,
                complex,
                plan.recurrent,
                hyper,
                init,
            )?);
            n_in = plan.size;
        }
        let readout = Readout::init(rng, n_in, classes, READOUT_DECAY);
        Ok(SplitNetwork {
            input_dim,
            split_complex_input,
            layers,
            split_index,
            readout,
        })
    }

    pub fn encoder_width(&self) -> usize {
        self.layers[self.split_index - 1].size
    }

    pub fn classes(&self) -> usize {
        self.readout.classes()
    }

    pub fn kind(&self) -> NeuronKind {
        self.layers[0].kind
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::InvalidParam("network has no hidden layers".into()));
        }
        if self.split_index == 0 || self.split_index > self.layers.len() {
            return Err(Error::InvalidParam("split index out of range".into()));
        }
        let first_in = if self.split_complex_input {
            2 * self.input_dim
        } else {
            self.input_dim
        };
        dim("first layer input", first_in, self.layers[0].n_in)?;
        for w in self.layers.windows(2) {
            dim("layer chaining", w[0].size, w[1].n_in)?;
        }
        for l in &self.layers {
            l.validate()?;
        }
        dim(
            "readout input",
            self.layers.last().unwrap().size,
            self.readout.w.ncols(),
        )?;
        Ok(())
    }

    pub fn project(&mut self) {
        for l in &mut self.layers {
            l.project();
        }
    }

    /// Adapts an input sequence to what the first layer consumes.
    fn first_layer_input(&self, input: &InputSeq) -> Result<(Array2<f64>, Option<Array2<f64>>)> {
        dim("input width", self.input_dim, input.width())?;
        if input.steps() == 0 {
            return Err(Error::InvalidParam(
                "input needs at least one timestep".into(),
            ));
        }
        if self.split_complex_input {
            Ok((input.split_channels(), None))
        } else if self.layers[0].is_complex() {
            Ok((input.re.clone(), input.im.clone()))
        } else {
            if input.is_complex() {
                return Err(Error::InvalidParam(
                    "complex input given to a real-weighted first layer".into(),
                ));
            }
            Ok((input.re.clone(), None))
        }
    }

    /// Full forward pass. With `channel == None` the network runs centralized;
    /// otherwise encoder spikes cross the channel slot by slot.
    pub fn forward(
        &self,
        input: &InputSeq,
        channel: Option<&mut dyn SpikeChannel>,
        spike_fn: SpikeFn,
    ) -> Result<ForwardOutput> {
        let (x_re, x_im) = self.first_layer_input(input)?;
        let mut traces: Vec<LayerTrace> = Vec::with_capacity(self.layers.len());
        let mut delivered = None;
        let mut channel = channel;
        for (l, layer) in self.layers.iter().enumerate() {
            let trace = if l == 0 {
                layer.forward_sequence(
                    LayerInput {
                        re: x_re.view(),
                        im: x_im.as_ref().map(|a| a.view()),
                    },
                    spike_fn,
                )?
            } else if l == self.split_index && channel.is_some() {
                let sent = &traces[l - 1].spikes;
                let ch = channel.as_deref_mut().expect("checked");
                let mut recv = Array2::<f64>::zeros(sent.dim());
                for t in 0..sent.nrows() {
                    let row = sent.row(t).to_vec();
                    let out = ch.transmit_slot(&row)?;
                    dim("channel output width", row.len(), out.len())?;
                    recv.row_mut(t).assign(&Array1::from(out));
                }
                let tr = layer.forward_sequence(
                    LayerInput {
                        re: recv.view(),
                        im: None,
                    },
                    spike_fn,
                )?;
                delivered = Some(recv);
                tr
            } else {
                let prev = &traces[l - 1].spikes;
                layer.forward_sequence(
                    LayerInput {
                        re: prev.view(),
                        im: None,
                    },
                    spike_fn,
                )?
            };
            traces.push(trace);
        }
        // A split after the last hidden layer puts only the readout on the receiver.
        let last = &traces.last().expect("non-empty").spikes;
        let readout_in = if self.split_index == self.layers.len() && channel.is_some() {
            let ch = channel.as_deref_mut().expect("checked");
            let mut recv = Array2::<f64>::zeros(last.dim());
            for t in 0..last.nrows() {
                let row = last.row(t).to_vec();
                let out = ch.transmit_slot(&row)?;
                dim("channel output width", row.len(), out.len())?;
                recv.row_mut(t).assign(&Array1::from(out));
            }
            delivered = Some(recv.clone());
            recv
        } else {
            last.clone()
        };
        let logits = self.readout.integrate(&readout_in);
        let probs = softmax_rows(&logits);
        let classes = self.classes() as u64;
        let readout_events = readout_in
            .rows()
            .into_iter()
            .map(|r| r.iter().filter(|&&x| x != 0.0).count() as u64 * classes)
            .collect();
        Ok(ForwardOutput {
            layers: traces,
            logits,
            probs,
            delivered,
            readout_events,
        })
    }

    /// Spikes the readout consumed in a forward output (after the channel when split at the last layer).
    pub fn readout_input<'a>(&self, out: &'a ForwardOutput) -> &'a Array2<f64> {
        if self.split_index == self.layers.len() {
            if let Some(d) = &out.delivered {
                return d;
            }
        }
        &out.layers.last().expect("non-empty").spikes
    }

    /// Encoder-only pass: the spikes that would be put on the air.
    pub fn encode(&self, input: &InputSeq, spike_fn: SpikeFn) -> Result<Vec<LayerTrace>> {
        let (x_re, x_im) = self.first_layer_input(input)?;
        let mut traces: Vec<LayerTrace> = Vec::with_capacity(self.split_index);
        for l in 0..self.split_index {
            let tr = if l == 0 {
                self.layers[0].forward_sequence(
                    LayerInput {
                        re: x_re.view(),
                        im: x_im.as_ref().map(|a| a.view()),
                    },
                    spike_fn,
                )?
            } else {
                let prev = &traces[l - 1].spikes;
                self.layers[l].forward_sequence(
                    LayerInput {
                        re: prev.view(),
                        im: None,
                    },
                    spike_fn,
                )?
            };
            traces.push(tr);
        }
        Ok(traces)
    }

    pub fn parameter_count(&self) -> usize {
        let mut n = self.readout.w.len();
        for l in &self.layers {
            n += l.w_re.len();
            n += l.w_im.as_ref().map_or(0, |w| w.len());
            n += l.v.as_ref().map_or(0, |v| v.len());
            n += l.b_hat.len();
            if l.kind.is_resonator() {
                n += l.omega.len();
            }
        }
        n
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy(kind: NeuronKind) -> SplitNetwork {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        SplitNetwork::init(
            &mut rng,
            3,
            &[
                LayerPlan {
                    size: 6,
                    recurrent: true,
                    complex: false,
                },
                LayerPlan {
                    size: 4,
                    recurrent: false,
                    complex: false,
                },
            ],
            3,
            kind,
            1,
            LayerHyper::default(),
            &InitConfig::default(),
        )
        .unwrap()
    }

    fn input(steps: usize) -> InputSeq {
        InputSeq::real(Array2::from_shape_fn((steps, 3), |(t, j)| {
            ((t as f64) * 0.3 + j as f64).sin() * 2.0
        }))
    }

    #[test]
    fn probabilities_normalised() {
        for kind in NeuronKind::ALL {
            let out = toy(kind)
                .forward(&input(50), None, SpikeFn::default())
                .unwrap();
            for row in out.probs.rows() {
                assert!((row.sum() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identity_channel_equals_centralized() {
        for kind in NeuronKind::ALL {
            let net = toy(kind);
            let x = input(80);
            let a = net.forward(&x, None, SpikeFn::default()).unwrap();
            let mut ch = IdentityChannel;
            let b = net.forward(&x, Some(&mut ch), SpikeFn::default()).unwrap();
            assert_eq!(a.probs, b.probs);
            for (la, lb) in a.layers.iter().zip(&b.layers) {
                assert_eq!(la.spikes, lb.spikes);
            }
        }
    }

    #[test]
    fn complex_input_split_for_integrators() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let plans = [
            LayerPlan {
                size: 4,
                recurrent: false,
                complex: true,
            },
            LayerPlan {
                size: 3,
                recurrent: false,
                complex: false,
            },
        ];
        let net = SplitNetwork::init(
            &mut rng,
            1,
            &plans,
            2,
            NeuronKind::Alif,
            1,
            LayerHyper::default(),
            &InitConfig::default(),
        )
        .unwrap();
        assert!(net.split_complex_input);
        assert_eq!(net.layers[0].n_in, 2);
        let vals = Array2::from_shape_fn((10, 1), |(t, _)| Complex64::new(t as f64, -(t as f64)));
        net.forward(&InputSeq::complex(&vals), None, SpikeFn::default())
            .unwrap();
    }

    #[test]
    fn rejects_wrong_width_and_empty_input() {
        let net = toy(NeuronKind::Lif);
        let bad = InputSeq::real(Array2::zeros((5, 2)));
        assert!(net.forward(&bad, None, SpikeFn::default()).is_err());
        let empty = InputSeq::real(Array2::zeros((0, 3)));
        assert!(net.forward(&empty, None, SpikeFn::default()).is_err());
    }

    #[test]
    fn channel_width_mismatch_is_an_error() {
        struct Short;
        impl SpikeChannel for Short {
            fn transmit_slot(&mut self, spikes: &[f64]) -> Result<Vec<f64>> {
                Ok(spikes[1..].to_vec())
            }
        }
        let net = toy(NeuronKind::Brf);
        let mut ch = Short;
        assert!(net
            .forward(&input(5), Some(&mut ch), SpikeFn::default())
            .is_err());
    }
}
