//! First-order optimisers over the flat tensor order of [`SplitNetwork`].

use serde::{Deserialize, Serialize};

use crate::network::SplitNetwork;
use crate::train::params::{NetworkGrad, ParamClass};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerConfig {
    Sgd {
        lr: f64,
    },
    Adam {
        lr: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
    },
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig::adam(1e-3)
    }
}

impl OptimizerConfig {
    pub fn adam(lr: f64) -> Self {
        OptimizerConfig::Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn lr(&self) -> f64 {
        match *self {
            OptimizerConfig::Sgd { lr } | OptimizerConfig::Adam { lr, .. } => lr,
        }
    }
}

/// Optimiser with its moment estimates.
#[derive(Debug, Clone)]
pub struct Optimizer {
    pub config: OptimizerConfig,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: u64,
}

impl Optimizer {
    pub fn new(config: OptimizerConfig) -> Self {
        Optimizer {
            config,
            m: Vec::new(),
            v: Vec::new(),
            step: 0,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Applies one descent step, restricted to classes for which `train` is
    /// true, then projects neuron parameters back into their domain.
    pub fn apply(
        &mut self,
        net: &mut SplitNetwork,
        grad: &NetworkGrad,
        train: impl Fn(ParamClass) -> bool,
    ) {
        let grads = grad.tensors();
        let mut params = net.tensors_mut();
        assert_eq!(grads.len(), params.len(), "gradient layout mismatch");
        if self.m.len() != params.len() {
            self.m = grads.iter().map(|(_, g)| vec![0.0; g.len()]).collect();
            self.v = self.m.clone();
        }
        self.step += 1;
        for (ti, ((id, p), (_, g))) in params.iter_mut().zip(&grads).enumerate() {
            if !train(id.class) {
                continue;
            }
            match self.config {
                OptimizerConfig::Sgd { lr } => {
                    for (w, &dw) in p.iter_mut().zip(g.iter()) {
                        *w -= lr * dw;
                    }
                }
                OptimizerConfig::Adam {
                    lr,
                    beta1,
                    beta2,
                    eps,
                } => {
                    let c1 = 1.0 - beta1.powi(self.step as i32);
                    let c2 = 1.0 - beta2.powi(self.step as i32);
                    let m = &mut self.m[ti];
                    let v = &mut self.v[ti];
                    for k in 0..p.len() {
                        let dw = g[k];
                        m[k] = beta1 * m[k] + (1.0 - beta1) * dw;
                        v[k] = beta2 * v[k] + (1.0 - beta2) * dw * dw;
                        p[k] -= lr * (m[k] / c1) / ((v[k] / c2).sqrt() + eps);
                    }
                }
            }
        }
        drop(params);
        net.project();
    }
}
