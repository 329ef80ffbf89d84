//! Computation energy from somatic and synaptic operation counts.
//!
//! Counts are kept as integers and priced once, so the closed form and the
//! per-event trace accumulation agree bit for bit.

use serde::{Deserialize, Serialize};

use crate::layer::OpTrace;
use crate::network::{ForwardOutput, SplitNetwork};
use crate::neuron::NeuronKind;

/// Operations per neuron per step (`som`) and per emitted spike (`p`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpProfile {
    pub n_add_som: u64,
    pub n_mul_som: u64,
    pub n_add_p: u64,
    pub n_mul_p: u64,
}

impl OpProfile {
    /// ALIF and BRF counts come from their digital schematics; LIF and RF
    /// drop the adaptive-threshold circuit.
    pub fn for_kind(kind: NeuronKind) -> Self {
        let (a, m, ap, mp) = match kind {
            NeuronKind::Alif => (2, 3, 2, 0),
            NeuronKind::Brf => (6, 5, 1, 0),
            NeuronKind::Lif => (2, 1, 1, 0),
            NeuronKind::Rf => (5, 4, 1, 0),
        };
        OpProfile {
            n_add_som: a,
            n_mul_som: m,
            n_add_p: ap,
            n_mul_p: mp,
        }
    }

    /// True for the profiles not given by a schematic.
    pub fn is_derived(kind: NeuronKind) -> bool {
        matches!(kind, NeuronKind::Lif | NeuronKind::Rf)
    }
}

/// Joules per operation; defaults are 45 nm CMOS, 32-bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnergyConstants {
    pub e_add: f64,
    pub e_mul: f64,
}

impl Default for EnergyConstants {
    fn default() -> Self {
        EnergyConstants {
            e_add: 0.1e-12,
            e_mul: 3.2e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OpCounts {
    pub adds: u64,
    pub muls: u64,
}

impl OpCounts {
    pub fn joules(&self, c: &EnergyConstants) -> f64 {
        self.adds as f64 * c.e_add + self.muls as f64 * c.e_mul
    }
}

impl std::ops::AddAssign for OpCounts {
    fn add_assign(&mut self, o: OpCounts) {
        self.adds += o.adds;
        self.muls += o.muls;
    }
}

/// Somatic operations: a per-neuron floor every step plus post-spike work.
pub fn soma_ops(
    profile: &OpProfile,
    size: usize,
    steps: usize,
    spikes_per_step: &[u64],
) -> OpCounts {
    let floor = (steps * size) as u64;
    let spikes: u64 = spikes_per_step.iter().sum();
    OpCounts {
        adds: floor * profile.n_add_som + spikes * profile.n_add_p,
        muls: floor * profile.n_mul_som + spikes * profile.n_mul_p,
    }
}

pub fn soma_energy(
    profile: &OpProfile,
    size: usize,
    steps: usize,
    spikes_per_step: &[u64],
    c: &EnergyConstants,
) -> f64 {
    soma_ops(profile, size, steps, spikes_per_step).joules(c)
}

/// One addition per delivered spike per receiving synapse.
pub fn synapse_energy(events_per_step: &[u64], c: &EnergyConstants) -> f64 {
    events_per_step.iter().sum::<u64>() as f64 * c.e_add
}

/// Spike-count summary of one layer over `samples` sequences of `steps` each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSummary {
    pub kind: NeuronKind,
    pub size: usize,
    pub steps: usize,
    pub samples: u64,
    pub output_spikes: u64,
    pub feedforward_events: u64,
    pub recurrent_events: u64,
}

impl LayerSummary {
    pub fn from_ops(kind: NeuronKind, size: usize, ops: &[OpTrace]) -> Self {
        LayerSummary {
            kind,
            size,
            steps: ops.len(),
            samples: 1,
            output_spikes: ops.iter().map(|o| o.output_spikes).sum(),
            feedforward_events: ops.iter().map(|o| o.ff_events).sum(),
            recurrent_events: ops.iter().map(|o| o.rec_events).sum(),
        }
    }

    /// Adds another summary of the same layer.
    pub fn merge(&mut self, o: &LayerSummary) {
        assert_eq!(
            (self.kind, self.size, self.steps),
            (o.kind, o.size, o.steps)
        );
        self.samples += o.samples;
        self.output_spikes += o.output_spikes;
        self.feedforward_events += o.feedforward_events;
        self.recurrent_events += o.recurrent_events;
    }

    /// Mean spikes per neuron per step.
    pub fn spike_rate(&self) -> f64 {
        self.output_spikes as f64
            / (self.samples as f64 * self.steps as f64 * self.size as f64).max(1.0)
    }
}

/// Everything needed to recompute energy: per-layer summaries, readout
/// input events and channel slot counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpikeSummary {
    pub layers: Vec<LayerSummary>,
    pub readout_events: u64,
    pub samples: u64,
    /// Encoder spikes handed to the link, summed over slots and samples.
    pub transmitted_spikes: u64,
}

impl SpikeSummary {
    pub fn from_forward(net: &SplitNetwork, out: &ForwardOutput) -> Self {
        let layers = net
            .layers
            .iter()
            .zip(&out.layers)
            .map(|(l, tr)| LayerSummary::from_ops(l.kind, l.size, &tr.ops))
            .collect();
        SpikeSummary {
            layers,
            readout_events: out.readout_events.iter().sum(),
            samples: 1,
            transmitted_spikes: out.layers[net.split_index - 1].spike_count(),
        }
    }

    pub fn merge(&mut self, o: &SpikeSummary) {
        for (a, b) in self.layers.iter_mut().zip(&o.layers) {
            a.merge(b);
        }
        self.readout_events += o.readout_events;
        self.samples += o.samples;
        self.transmitted_spikes += o.transmitted_spikes;
    }

    pub fn total_spikes(&self) -> u64 {
        self.layers.iter().map(|l| l.output_spikes).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerEnergy {
    pub soma_ops: OpCounts,
    pub synapse_ops: OpCounts,
    pub soma_j: f64,
    pub synapse_j: f64,
}

impl LayerEnergy {
    pub fn total_j(&self) -> f64 {
        self.soma_j + self.synapse_j
    }
}

/// Energy of one or more inferences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub layers: Vec<LayerEnergy>,
    pub readout_synapse_j: f64,
    pub tx_j: f64,
    pub soma_j: f64,
    pub synapse_j: f64,
    pub compute_j: f64,
    pub total_j: f64,
}

impl EnergyReport {
    fn assemble(layers: Vec<LayerEnergy>, readout_synapse_j: f64, tx_j: f64) -> Self {
        let soma_j = layers.iter().map(|l| l.soma_j).sum::<f64>();
        let synapse_j = layers.iter().map(|l| l.synapse_j).sum::<f64>() + readout_synapse_j;
        let compute_j = soma_j + synapse_j;
        EnergyReport {
            layers,
            readout_synapse_j,
            tx_j,
            soma_j,
            synapse_j,
            compute_j,
            total_j: compute_j + tx_j,
        }
    }

    pub fn with_tx(mut self, tx_j: f64) -> Self {
        self.tx_j = tx_j;
        self.total_j = self.compute_j + tx_j;
        self
    }

    /// Multiplies every joule figure by `factor` (op counts stay totals),
    /// e.g. `1 / samples` for per-inference energy.
    pub fn scaled(&self, factor: f64) -> Self {
        let layers = self
            .layers
            .iter()
            .map(|l| LayerEnergy {
                soma_j: l.soma_j * factor,
                synapse_j: l.synapse_j * factor,
                ..*l
            })
            .collect();
        EnergyReport::assemble(layers, self.readout_synapse_j * factor, self.tx_j * factor)
    }
}

/// Energy options shared by both evaluation routes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnergyConfig {
    pub constants: EnergyConstants,
    /// Feedforward synapses of the first layer are a model-independent
    /// constant and are left out by default.
    pub include_input_synapses: bool,
    pub include_readout_synapses: bool,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        EnergyConfig {
            constants: EnergyConstants::default(),
            include_input_synapses: false,
            include_readout_synapses: true,
        }
    }
}

/// Closed form from spike-count summaries.
pub fn energy_from_summary(s: &SpikeSummary, cfg: &EnergyConfig, tx_j: f64) -> EnergyReport {
    let c = &cfg.constants;
    let layers = s
        .layers
        .iter()
        .enumerate()
        .map(|(l, ls)| {
            let p = OpProfile::for_kind(ls.kind);
            let floor = ls.samples * (ls.steps * ls.size) as u64;
            let soma = OpCounts {
                adds: floor * p.n_add_som + ls.output_spikes * p.n_add_p,
                muls: floor * p.n_mul_som + ls.output_spikes * p.n_mul_p,
            };
            let ff = if l == 0 && !cfg.include_input_synapses {
                0
            } else {
                ls.feedforward_events
            };
            let syn = OpCounts {
                adds: ff + ls.recurrent_events,
                muls: 0,
            };
            LayerEnergy {
                soma_ops: soma,
                synapse_ops: syn,
                soma_j: soma.joules(c),
                synapse_j: syn.joules(c),
            }
        })
        .collect();
    let readout = if cfg.include_readout_synapses {
        s.readout_events as f64 * c.e_add
    } else {
        0.0
    };
    EnergyReport::assemble(layers, readout, tx_j)
}

/// Reference route: walks the op traces neuron by neuron and event by event.
pub fn energy_from_traces(
    kinds: &[NeuronKind],
    sizes: &[usize],
    traces: &[&[OpTrace]],
    readout_events: &[u64],
    cfg: &EnergyConfig,
) -> EnergyReport {
    let c = &cfg.constants;
    let mut layers = Vec::with_capacity(traces.len());
    for (l, ops) in traces.iter().enumerate() {
        let p = OpProfile::for_kind(kinds[l]);
        let mut soma = OpCounts::default();
        let mut syn = OpCounts::default();
        for step in ops.iter() {
            for _ in 0..sizes[l] {
                soma += OpCounts {
                    adds: p.n_add_som,
                    muls: p.n_mul_som,
                };
            }
            for _ in 0..step.output_spikes {
                soma += OpCounts {
                    adds: p.n_add_p,
                    muls: p.n_mul_p,
                };
            }
            if l > 0 || cfg.include_input_synapses {
                for _ in 0..step.ff_events {
                    syn.adds += 1;
                }
            }
            for _ in 0..step.rec_events {
                syn.adds += 1;
            }
        }
        layers.push(LayerEnergy {
            soma_ops: soma,
            synapse_ops: syn,
            soma_j: soma.joules(c),
            synapse_j: syn.joules(c),
        });
    }
    let mut readout = 0u64;
    if cfg.include_readout_synapses {
        for &e in readout_events {
            readout += e;
        }
    }
    EnergyReport::assemble(layers, readout as f64 * c.e_add, 0.0)
}

/// Energy of a single forward pass.
pub fn energy_of_forward(
    net: &SplitNetwork,
    out: &ForwardOutput,
    cfg: &EnergyConfig,
) -> EnergyReport {
    energy_from_summary(&SpikeSummary::from_forward(net, out), cfg, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pj(j: f64) -> f64 {
        j * 1e12
    }

    #[test]
    fn hand_values() {
        let c = EnergyConstants::default();
        let brf = OpProfile::for_kind(NeuronKind::Brf);
        assert!((pj(soma_energy(&brf, 2, 3, &[0, 0, 0], &c)) - 99.6).abs() < 1e-9);
        let alif = OpProfile::for_kind(NeuronKind::Alif);
        assert!((pj(soma_energy(&alif, 1, 1, &[1], &c)) - 10.0).abs() < 1e-9);
        assert_eq!(soma_energy(&alif, 4, 0, &[], &c), 0.0);
        assert!((pj(synapse_energy(&[3, 7], &c)) - 1.0).abs() < 1e-12);
        assert_eq!(synapse_energy(&[0, 0], &c), 0.0);
    }

    #[test]
    fn profiles_follow_adaptation() {
        for k in [NeuronKind::Lif, NeuronKind::Rf] {
            assert!(OpProfile::is_derived(k));
        }
        let (lif, alif) = (
            OpProfile::for_kind(NeuronKind::Lif),
            OpProfile::for_kind(NeuronKind::Alif),
        );
        assert!(lif.n_mul_som < alif.n_mul_som);
        let (rf, brf) = (
            OpProfile::for_kind(NeuronKind::Rf),
            OpProfile::for_kind(NeuronKind::Brf),
        );
        assert!(rf.n_add_som < brf.n_add_som && rf.n_mul_som < brf.n_mul_som);
    }

    #[test]
    fn tx_adds_to_total() {
        let s = SpikeSummary {
            layers: vec![LayerSummary {
                kind: NeuronKind::Brf,
                size: 2,
                steps: 3,
                samples: 1,
                output_spikes: 4,
                feedforward_events: 10,
                recurrent_events: 2,
            }],
            readout_events: 5,
            samples: 1,
            transmitted_spikes: 4,
        };
        let cfg = EnergyConfig::default();
        let a = energy_from_summary(&s, &cfg, 0.0);
        let b = energy_from_summary(&s, &cfg, 1e-9);
        assert_eq!(b.total_j, a.compute_j + 1e-9);
        // first-layer feedforward synapses excluded by default
        assert_eq!(a.layers[0].synapse_ops.adds, 2);
    }
}
