//! Experiment orchestration: configs, runs, sweeps and result files.

pub mod arch;
pub mod config;
pub mod long_run;
pub mod output;
pub mod run;

pub use arch::{parse_architecture, Architecture};
pub use config::{
    DataConfig, DataSource, ExperimentConfig, SweepAxis, SweepConfig, DEFAULT_EVAL_SEED,
};
pub use long_run::{long_run, LongRunReport, Preset};
pub use output::{metrics_csv, summary_json, write_outputs, METRICS_FILE, SUMMARY_FILE};
pub use run::{
    build_network, evaluate_point, evaluate_split, point_config, prepare, quantize_and_calibrate,
    run, stream_seed, sweep, train_model, Prepared, QuantOutcome, RunRecord, SplitEval, Trained,
};
