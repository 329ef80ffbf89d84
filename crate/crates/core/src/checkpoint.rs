//! Self-describing checkpoint files.
//!
//! A checkpoint is a UTF-8 JSON document (see `docs/formats.md`):
//!
//! ```text
//! {
//!   "format": "neurolink-checkpoint",
//!   "version": 1,
//!   "config_hash": "<sha256 hex of the experiment config>" | null,
//!   "architecture": "1-BRF16-O4"-style string | null,
//!   "network": { input_dim, split_complex_input, split_index,
//!                layers: [{ kind, n_in, size, w_re, w_im, v, omega, b_hat, hyper }],
//!                readout: { w, decay } },
//!   "quant": { bits, scope, layer_lambdas, readout_lambda } | null
//! }
//! ```
//!
//! Matrices use ndarray's serde layout `{"v":1,"dim":[rows,cols],"data":[..]}`
//! in row-major order. Floats round-trip exactly through `serde_json`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::SplitNetwork;
use crate::train::QuantInfo;

pub const CHECKPOINT_FORMAT: &str = "neurolink-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config_hash: Option<String>,
    pub architecture: Option<String>,
    pub network: SplitNetwork,
    pub quant: Option<QuantInfo>,
}

impl Checkpoint {
    pub fn new(network: SplitNetwork) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            config_hash: None,
            architecture: None,
            network,
            quant: None,
        }
    }

    pub fn with_config(mut self, hash: impl Into<String>, architecture: impl Into<String>) -> Self {
        self.config_hash = Some(hash.into());
        self.architecture = Some(architecture.into());
        self
    }

    pub fn with_quant(mut self, quant: QuantInfo) -> Self {
        self.quant = Some(quant);
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(s)?;
        if ck.format != CHECKPOINT_FORMAT {
            return Err(Error::Config(format!(
                "not a checkpoint (format tag {:?})",
                ck.format
            )));
        }
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!(
                "unsupported checkpoint version {}",
                ck.version
            )));
        }
        ck.network.validate()?;
        if let Some(q) = &ck.quant {
            if q.layer_lambdas.len() != ck.network.layers.len() {
                return Err(Error::Config(
                    "quantization metadata does not match layer count".into(),
                ));
            }
        }
        Ok(ck)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Checkpoint::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layer::{InitConfig, LayerHyper};
    use crate::network::LayerPlan;
    use crate::neuron::NeuronKind;
    use crate::train::{quantize_network, QuantScope};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn net(kind: NeuronKind) -> SplitNetwork {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let plans = [
            LayerPlan {
                size: 4,
                recurrent: true,
                complex: true,
            },
            LayerPlan {
                size: 3,
                recurrent: false,
                complex: false,
            },
        ];
        SplitNetwork::init(
            &mut rng,
            2,
            &plans,
            3,
            kind,
            1,
            LayerHyper::for_kind(kind),
            &InitConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        for kind in NeuronKind::ALL {
            let (q, info) = quantize_network(&net(kind), 4, QuantScope::Full);
            let ck = Checkpoint::new(q)
                .with_config("ab12", "2-RFC*4-FC3-O3")
                .with_quant(info);
            let back = Checkpoint::from_json(&ck.to_json().unwrap()).unwrap();
            assert_eq!(back, ck);
        }
    }

    #[test]
    fn rejects_foreign_documents() {
        let mut ck = Checkpoint::new(net(NeuronKind::Brf));
        ck.format = "something-else".into();
        assert!(Checkpoint::from_json(&ck.to_json().unwrap()).is_err());
        let mut ck = Checkpoint::new(net(NeuronKind::Brf));
        ck.version = 99;
        assert!(Checkpoint::from_json(&ck.to_json().unwrap()).is_err());
    }
}
