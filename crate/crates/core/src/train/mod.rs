//! Surrogate-gradient training, quantization and calibration.

pub mod bptt;
pub mod loss;
pub mod optim;
pub mod params;
pub mod quant;
pub mod surrogate;
pub mod trainer;

pub use optim::{Optimizer, OptimizerConfig};
pub use quant::{
    calibrate, quantize_layer, quantize_network, CalibrationReport, QuantConfig, QuantInfo,
    QuantScope,
};
pub use trainer::{
    accuracy, evaluate_objective, split_accuracy, train, train_with, EpochStats, TrainConfig,
    TrainReport,
};
