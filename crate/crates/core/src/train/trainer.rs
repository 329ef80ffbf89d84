//! Mini-batch training loop and evaluation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Sample;
use crate::error::{Error, Result};
use crate::network::{SpikeChannel, SplitNetwork};
use crate::train::bptt::sample_gradient;
use crate::train::loss::{sample_objective, ObjectiveParts};
use crate::train::optim::{Optimizer, OptimizerConfig};
use crate::train::params::NetworkGrad;
use crate::train::surrogate::{SpikeFn, DEFAULT_SURROGATE_WIDTH};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub alpha: f64,
    pub surrogate_width: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            batch_size: 32,
            learning_rate: 1e-3,
            alpha: 0.0,
            surrogate_width: DEFAULT_SURROGATE_WIDTH,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidParam("batch size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParam("learning rate must be positive".into()));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParam("alpha must be >= 0".into()));
        }
        if !(self.surrogate_width > 0.0) {
            return Err(Error::InvalidParam(
                "surrogate width must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn spike_fn(&self) -> SpikeFn {
        SpikeFn::Hard {
            width: self.surrogate_width,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    /// 0 is the untrained network.
    pub epoch: usize,
    pub objective: f64,
    pub cross_entropy: f64,
    pub regularizer: f64,
    pub train_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
}

impl TrainReport {
    pub fn initial_objective(&self) -> f64 {
        self.epochs.first().map_or(f64::NAN, |e| e.objective)
    }

    pub fn final_objective(&self) -> f64 {
        self.epochs.last().map_or(f64::NAN, |e| e.objective)
    }
}

/// Objective parts and accuracy over a dataset, evaluated in centralized mode.
pub fn evaluate_objective(
    net: &SplitNetwork,
    data: &[Sample],
    alpha: f64,
    spike_fn: SpikeFn,
) -> Result<(ObjectiveParts, f64)> {
    let per: Vec<(ObjectiveParts, bool)> = data
        .par_iter()
        .map(|s| {
            let out = net.forward(&s.input, None, spike_fn)?;
            Ok((
                sample_objective(&out, s.label, alpha),
                out.prediction() == s.label,
            ))
        })
        .collect::<Result<_>>()?;
    let n = per.len().max(1) as f64;
    let mut acc = ObjectiveParts::default();
    let mut correct = 0usize;
    for (p, ok) in per {
        acc.cross_entropy += p.cross_entropy;
        acc.regularizer += p.regularizer;
        acc.total += p.total;
        correct += usize::from(ok);
    }
    acc.cross_entropy /= n;
    acc.regularizer /= n;
    acc.total /= n;
    Ok((acc, correct as f64 / n))
}

/// Trains `net` in place with Adam on the mean per-sample objective. Samples
/// in a batch are differentiated in parallel and summed in their batch order,
/// so results are identical for any thread count.
pub fn train(net: &mut SplitNetwork, data: &[Sample], cfg: &TrainConfig) -> Result<TrainReport> {
    train_with(net, data, cfg, |_, _| {})
}

/// [`train`] with a callback after every epoch, given the stats and the
/// network as it stands after that epoch.
pub fn train_with(
    net: &mut SplitNetwork,
    data: &[Sample],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochStats, &SplitNetwork),
) -> Result<TrainReport> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidParam("training set is empty".into()));
    }
    let sf = cfg.spike_fn();
    let mut opt = Optimizer::new(OptimizerConfig::adam(cfg.learning_rate));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epochs = Vec::with_capacity(cfg.epochs + 1);

    let (parts, accuracy) = evaluate_objective(net, data, cfg.alpha, sf)?;
    let stats = stats_of(0, parts, accuracy);
    on_epoch(&stats, net);
    epochs.push(stats);

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut sum = ObjectiveParts::default();
        let mut correct = 0usize;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let results: Vec<(ObjectiveParts, bool, NetworkGrad)> = batch
                .par_iter()
                .map(|&i| {
                    let s = &data[i];
                    let out = net.forward(&s.input, None, sf)?;
                    let ok = out.prediction() == s.label;
                    let (p, g) = sample_gradient(net, &out, s.label, cfg.alpha, sf);
                    Ok((p, ok, g))
                })
                .collect::<Result<_>>()?;
            let mut grad = NetworkGrad::zeros_like(net);
            let mut batch_loss = 0.0;
            for (p, ok, g) in &results {
                grad.add_assign(g);
                batch_loss += p.total;
                sum.cross_entropy += p.cross_entropy;
                sum.regularizer += p.regularizer;
                sum.total += p.total;
                correct += usize::from(*ok);
            }
            if !batch_loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            grad.scale(1.0 / results.len() as f64);
            grad.check_finite()?;
            opt.apply(net, &grad, |_| true);
        }
        let n = data.len() as f64;
        // running mean over the epoch, as seen by the optimiser
        let parts = ObjectiveParts {
            cross_entropy: sum.cross_entropy / n,
            regularizer: sum.regularizer / n,
            total: sum.total / n,
        };
        let stats = stats_of(epoch, parts, correct as f64 / n);
        on_epoch(&stats, net);
        epochs.push(stats);
    }
    Ok(TrainReport { epochs })
}

fn stats_of(epoch: usize, p: ObjectiveParts, accuracy: f64) -> EpochStats {
    EpochStats {
        epoch,
        objective: p.total,
        cross_entropy: p.cross_entropy,
        regularizer: p.regularizer,
        train_accuracy: accuracy,
    }
}

/// Classification accuracy in centralized mode.
pub fn accuracy(net: &SplitNetwork, data: &[Sample], spike_fn: SpikeFn) -> Result<f64> {
    let correct: Vec<bool> = data
        .par_iter()
        .map(|s| Ok(net.forward(&s.input, None, spike_fn)?.prediction() == s.label))
        .collect::<Result<_>>()?;
    Ok(correct.iter().filter(|&&c| c).count() as f64 / correct.len().max(1) as f64)
}

/// Accuracy in split mode; `make_channel(i)` builds the channel for sample `i`.
pub fn split_accuracy<C, F>(net: &SplitNetwork, data: &[Sample], make_channel: F) -> Result<f64>
where
    C: SpikeChannel,
    F: Fn(usize) -> C + Sync,
{
    let correct: Vec<bool> = data
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut ch = make_channel(i);
            let out = net.forward(&s.input, Some(&mut ch), SpikeFn::default())?;
            Ok(out.prediction() == s.label)
        })
        .collect::<Result<_>>()?;
    Ok(correct.iter().filter(|&&c| c).count() as f64 / correct.len().max(1) as f64)
}
