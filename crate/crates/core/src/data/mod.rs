//! Dataset formats, binning, noise injection and the synthetic task.

mod bytes;
pub mod convert;
pub mod dataset;
pub mod events;
pub mod iq;
pub mod synthetic;

pub use convert::{
    dataset_from_events, dataset_from_iq, list_files, EventConversion, IqConversion,
};
pub use dataset::{Dataset, Sample};
pub use events::{bin_events, Event, EventFile, TimeUnit};
pub use iq::{add_awgn, load_iq, IqFile};
pub use synthetic::{gen_resonance_task, SyntheticConfig};
