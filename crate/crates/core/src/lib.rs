//! Co-simulation of neuromorphic wireless split computing: spiking networks
//! with resonate-and-fire neurons, surrogate-gradient training, an OFDM link
//! over a frequency-selective Rayleigh channel and an energy model.

pub mod checkpoint;
pub mod data;
pub mod energy;
pub mod error;
pub mod harness;
pub mod layer;
pub mod link;
pub mod network;
pub mod neuron;
pub mod raster;
pub mod train;

pub use checkpoint::Checkpoint;
pub use error::{Error, Result};
pub use layer::{InitConfig, Layer, LayerHyper, LayerTrace, OpTrace};
pub use network::{
    ForwardOutput, IdentityChannel, InputSeq, LayerPlan, SpikeChannel, SplitNetwork,
};
pub use neuron::NeuronKind;
pub use raster::SpikeRaster;
pub use train::surrogate::SpikeFn;
