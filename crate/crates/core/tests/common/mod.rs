//! Oracles shared by the integration tests. Nothing here calls into the
//! library's own checking code: finite differences, op counts and spike
//! rates are recomputed from first principles.

#![allow(dead_code)]

use std::collections::BTreeMap;

use ndarray::Array2;
use neurolink::train::bptt::sample_gradient;
use neurolink::train::loss::sample_objective;
use neurolink::train::params::ParamClass;
use neurolink::{InitConfig, InputSeq, LayerHyper, LayerPlan, NeuronKind, SpikeFn, SplitNetwork};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Central-difference step.
pub const FD_STEP: f64 = 1e-4;
/// Largest accepted relative error.
pub const FD_TOL: f64 = 1e-4;
/// Denominator floor for the relative error, so gradients that are zero up
/// to round-off (about eps * |f| / h ~ 1e-12 here) are judged absolutely.
pub const FD_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Default)]
pub struct FdReport {
    /// Per parameter class: entries compared and worst relative error.
    pub classes: BTreeMap<&'static str, (usize, f64)>,
    pub worst: f64,
    pub worst_at: String,
}

impl FdReport {
    pub fn passed(&self) -> bool {
        self.worst <= FD_TOL
    }

    pub fn covers(&self, class: ParamClass) -> bool {
        self.classes.contains_key(class.name())
    }
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(FD_FLOOR)
}

/// A seeded network with one recurrent 4-neuron hidden layer, optionally
/// with complex input weights, initialised so potentials hover around the
/// threshold where the relaxed spike has nonzero slope.
pub fn toy_network(kind: NeuronKind, complex: bool, seed: u64) -> SplitNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plans = [LayerPlan {
        size: 4,
        recurrent: true,
        complex,
    }];
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
    .expect("toy network")
}

pub fn toy_input(complex: bool, steps: usize) -> InputSeq {
    let re = Array2::from_shape_fn((steps, 2), |(t, j)| {
        (0.37 * t as f64 + 1.3 * j as f64).sin() + 0.2 * (0.11 * t as f64).cos()
    });
    let im = complex.then(|| re.mapv(|x| 0.4 - 0.8 * x));
    InputSeq { re, im }
}

/// Compares the analytic gradient of the per-sample objective against
/// central finite differences of the same relaxed forward pass, entry by
/// entry over every trainable tensor.
pub fn fd_gradient_check(
    net: &mut SplitNetwork,
    x: &InputSeq,
    label: usize,
    alpha: f64,
) -> FdReport {
    let sf = SpikeFn::relaxed(1.0);
    let f = |n: &SplitNetwork| {
        sample_objective(&n.forward(x, None, sf).expect("forward"), label, alpha).total
    };
    let out = net.forward(x, None, sf).expect("forward");
    let (_, g) = sample_gradient(net, &out, label, alpha, sf);
    let analytic: Vec<(String, ParamClass, Vec<f64>)> = g
        .tensors()
        .into_iter()
        .map(|(id, t)| (id.to_string(), id.class, t.to_vec()))
        .collect();

    let mut rep = FdReport::default();
    for (ti, (name, class, grads)) in analytic.iter().enumerate() {
        for (k, &a) in grads.iter().enumerate() {
            let orig = net.tensors_mut()[ti].1[k];
            net.tensors_mut()[ti].1[k] = orig + FD_STEP;
            let fp = f(net);
            net.tensors_mut()[ti].1[k] = orig - FD_STEP;
            let fm = f(net);
            net.tensors_mut()[ti].1[k] = orig;
            let fd = (fp - fm) / (2.0 * FD_STEP);
            let e = relative_error(a, fd);
            let entry = rep.classes.entry(class.name()).or_insert((0, 0.0));
            entry.0 += 1;
            entry.1 = entry.1.max(e);
            if e > rep.worst || rep.worst_at.is_empty() {
                rep.worst = rep.worst.max(e);
                rep.worst_at = format!("{name}[{k}]: analytic {a:e}, fd {fd:e}");
            }
        }
    }
    rep
}

/// Hidden-layer spikes per neuron per step over `data`, centralized.
pub fn hidden_spike_rate(net: &SplitNetwork, data: &[neurolink::data::Sample]) -> f64 {
    let mut spikes = 0.0;
    let mut slots = 0.0;
    for s in data {
        let out = net.forward(&s.input, None, SpikeFn::default()).unwrap();
        for tr in &out.layers {
            spikes += tr.spikes.sum();
            slots += tr.spikes.len() as f64;
        }
    }
    spikes / slots
}

/// Total spikes emitted by all hidden layers over `data`, centralized.
pub fn total_spikes(net: &SplitNetwork, data: &[neurolink::data::Sample]) -> f64 {
    data.iter()
        .map(|s| {
            let out = net.forward(&s.input, None, SpikeFn::default()).unwrap();
            out.layers.iter().map(|tr| tr.spikes.sum()).sum::<f64>()
        })
        .sum()
}

/// Per-neuron somatic and post-spike op counts `(add, mul, add_p, mul_p)`,
/// tabulated independently of the library.
pub fn profile(kind: NeuronKind) -> (u64, u64, u64, u64) {
    match kind {
        NeuronKind::Alif => (2, 3, 2, 0),
        NeuronKind::Brf => (6, 5, 1, 0),
        NeuronKind::Lif => (2, 1, 1, 0),
        NeuronKind::Rf => (5, 4, 1, 0),
    }
}

/// Integer op totals recomputed from spike rasters alone:
/// `(soma adds, soma muls, synapse adds)` per layer and readout adds.
pub fn count_ops(
    net: &SplitNetwork,
    out: &neurolink::ForwardOutput,
    include_input: bool,
) -> (Vec<(u64, u64, u64)>, u64) {
    let mut layers = Vec::new();
    for (l, tr) in out.layers.iter().enumerate() {
        let layer = &net.layers[l];
        let (a, m, ap, mp) = profile(layer.kind);
        let steps = tr.spikes.nrows() as u64;
        let k = layer.size as u64;
        let fired = tr.spikes.sum() as u64;
        let soma_a = steps * k * a + fired * ap;
        let soma_m = steps * k * m + fired * mp;
        let mut syn = 0u64;
        if l > 0 {
            let prev = &out.layers[l - 1].spikes;
            syn += prev.sum() as u64 * k;
        } else if include_input {
            let x = &tr.x_re;
            let active = |t: usize, j: usize| {
                x[[t, j]] != 0.0 || tr.x_im.as_ref().is_some_and(|xi| xi[[t, j]] != 0.0)
            };
            for t in 0..x.nrows() {
                for j in 0..x.ncols() {
                    syn += u64::from(active(t, j)) * k;
                }
            }
        }
        if layer.v.is_some() {
            for t in 1..tr.spikes.nrows() {
                syn += tr.spikes.row(t - 1).sum() as u64 * k;
            }
        }
        layers.push((soma_a, soma_m, syn));
    }
    let last = &out.layers.last().unwrap().spikes;
    let readout = last.sum() as u64 * net.readout.w.nrows() as u64;
    (layers, readout)
}
