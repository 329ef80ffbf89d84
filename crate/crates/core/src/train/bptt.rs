//! Backpropagation through time for [`SplitNetwork`].
//!
//! The backward pass is hand-derived per neuron family and reads the caches
//! kept in each [`LayerTrace`]. Spikes are differentiated with the surrogate
//! of the [`SpikeFn`] used in the forward pass; complex potentials are carried
//! as two real channels. When the forward pass ran through a link, gradients
//! stop at the channel.

use ndarray::{s, Array2};

use crate::layer::{Layer, LayerTrace};
use crate::network::{ForwardOutput, SplitNetwork};
use crate::neuron::balanced_offset_grad;
use crate::train::loss::{hoyer_backward, ObjectiveParts, LOG_CLAMP};
use crate::train::params::{LayerGrad, NetworkGrad};
use crate::train::surrogate::SpikeFn;

/// Upstream gradients injected into a backward pass.
#[derive(Debug, Clone)]
pub struct Seeds {
    /// `d L / d logits`, `T x classes`.
    pub logits: Array2<f64>,
    /// Per layer `d L / d S`, `T x K`.
    pub spikes: Vec<Array2<f64>>,
    /// Per layer `d L / d Re(u)`.
    pub potentials: Vec<Array2<f64>>,
    /// Per layer `d L / d theta`.
    pub thresholds: Vec<Array2<f64>>,
}

impl Seeds {
    pub fn zeros(net: &SplitNetwork, steps: usize) -> Self {
        let per_layer = |net: &SplitNetwork| -> Vec<Array2<f64>> {
            net.layers
                .iter()
                .map(|l| Array2::zeros((steps, l.size)))
                .collect()
        };
        Seeds {
            logits: Array2::zeros((steps, net.classes())),
            spikes: per_layer(net),
            potentials: per_layer(net),
            thresholds: per_layer(net),
        }
    }
}

/// Seeds for the training objective of one sample; returns the objective too.
pub fn objective_seeds(
    net: &SplitNetwork,
    out: &ForwardOutput,
    label: usize,
    alpha: f64,
) -> (ObjectiveParts, Seeds) {
    let steps = out.probs.nrows();
    let inv_t = 1.0 / steps as f64;
    let mut seeds = Seeds::zeros(net, steps);
    let mut ce = 0.0;
    for t in 0..steps {
        let p = out.probs.row(t);
        let py = p[label];
        ce -= py.max(LOG_CLAMP).ln();
        if py >= LOG_CLAMP {
            let mut g = seeds.logits.row_mut(t);
            for (k, &pk) in p.iter().enumerate() {
                g[k] = inv_t * (pk - if k == label { 1.0 } else { 0.0 });
            }
        }
    }
    ce *= inv_t;
    let mut reg = 0.0;
    for (l, trace) in out.layers.iter().enumerate() {
        for t in 0..steps {
            let u = trace.u_re.row(t);
            let th = trace.theta.row(t);
            let mut gu = seeds.potentials[l].row_mut(t);
            let mut gt = seeds.thresholds[l].row_mut(t);
            reg += hoyer_backward(
                u.as_slice().unwrap(),
                th.as_slice().unwrap(),
                alpha * inv_t,
                gu.as_slice_mut().unwrap(),
                gt.as_slice_mut().unwrap(),
            );
        }
    }
    reg *= inv_t;
    (
        ObjectiveParts {
            cross_entropy: ce,
            regularizer: reg,
            total: ce + alpha * reg,
        },
        seeds,
    )
}

/// Objective value and gradient for one labelled sample.
pub fn sample_gradient(
    net: &SplitNetwork,
    out: &ForwardOutput,
    label: usize,
    alpha: f64,
    spike_fn: SpikeFn,
) -> (ObjectiveParts, NetworkGrad) {
    let (parts, seeds) = objective_seeds(net, out, label, alpha);
    (parts, backward(net, out, &seeds, spike_fn))
}

/// Reverse pass from arbitrary seeds.
pub fn backward(
    net: &SplitNetwork,
    out: &ForwardOutput,
    seeds: &Seeds,
    spike_fn: SpikeFn,
) -> NetworkGrad {
    let mut grad = NetworkGrad::zeros_like(net);
    let steps = out.probs.nrows();
    let detached = out.delivered.is_some();

    // readout: r_t = decay * r_{t-1} + W s_t
    let s_last = net.readout_input(out);
    let mut g_r = seeds.logits.clone();
    for t in (0..steps.saturating_sub(1)).rev() {
        let next = g_r.row(t + 1).to_owned();
        g_r.row_mut(t).scaled_add(net.readout.decay, &next);
    }
    grad.readout = g_r.t().dot(s_last);
    let mut g_spikes = seeds.spikes.last().unwrap().clone();
    let readout_across_link = detached && net.split_index == net.layers.len();
    if !readout_across_link {
        g_spikes += &g_r.dot(&net.readout.w);
    }

    for l in (0..net.layers.len()).rev() {
        let layer = &net.layers[l];
        let trace = &out.layers[l];
        let need_input = l > 0 && !(detached && l == net.split_index);
        let g_in = layer_backward(
            layer,
            trace,
            &g_spikes,
            &seeds.potentials[l],
            &seeds.thresholds[l],
            spike_fn,
            &mut grad.layers[l],
            need_input,
        );
        if l > 0 {
            g_spikes = seeds.spikes[l - 1].clone();
            if let Some(g) = g_in {
                g_spikes += &g;
            }
        }
    }
    grad
}

/// Backward through one layer over the whole sequence. Returns `d L / d x`
/// (real part) when `need_input` is set.
#[allow(clippy::too_many_arguments)]
pub fn layer_backward(
    layer: &Layer,
    trace: &LayerTrace,
    g_spikes: &Array2<f64>,
    g_potential: &Array2<f64>,
    g_threshold: &Array2<f64>,
    spike_fn: SpikeFn,
    grad: &mut LayerGrad,
    need_input: bool,
) -> Option<Array2<f64>> {
    let (g_ir, g_ii) = if layer.kind.is_resonator() {
        resonator_backward(
            layer,
            trace,
            g_spikes,
            g_potential,
            g_threshold,
            spike_fn,
            grad,
        )
    } else {
        (
            integrator_backward(
                layer,
                trace,
                g_spikes,
                g_potential,
                g_threshold,
                spike_fn,
                grad,
            ),
            None,
        )
    };

    // I_re = Wr x_re - Wi x_im + V s_prev ; I_im = Wr x_im + Wi x_re
    grad.w_re += &g_ir.t().dot(&trace.x_re);
    if let (Some(gii), Some(xi)) = (&g_ii, &trace.x_im) {
        grad.w_re += &gii.t().dot(xi);
    }
    if let Some(gwi) = &mut grad.w_im {
        if let Some(gii) = &g_ii {
            *gwi += &gii.t().dot(&trace.x_re);
        }
        if let Some(xi) = &trace.x_im {
            *gwi -= &g_ir.t().dot(xi);
        }
    }
    if let Some(gv) = &mut grad.v {
        let steps = trace.steps();
        if steps > 1 {
            let prev = trace.spikes.slice(s![..steps - 1, ..]);
            let cur = g_ir.slice(s![1.., ..]);
            *gv += &cur.t().dot(&prev);
        }
    }
    if !need_input {
        return None;
    }
    let mut gx = g_ir.dot(&layer.w_re);
    if let (Some(gii), Some(wi)) = (&g_ii, &layer.w_im) {
        gx += &gii.dot(wi);
    }
    Some(gx)
}

/// Returns `(d L / d I_re, d L / d I_im)`.
fn resonator_backward(
    layer: &Layer,
    tr: &LayerTrace,
    g_spikes: &Array2<f64>,
    g_potential: &Array2<f64>,
    g_threshold: &Array2<f64>,
    spike_fn: SpikeFn,
    grad: &mut LayerGrad,
) -> (Array2<f64>, Option<Array2<f64>>) {
    let steps = tr.steps();
    let k = layer.size;
    let adaptive = layer.kind.is_adaptive();
    let delta = layer.hyper.delta;
    let gamma = if adaptive { layer.hyper.gamma } else { 0.0 };
    let theta_c = layer.hyper.theta_c;
    let dp: Vec<f64> = layer
        .omega
        .iter()
        .map(|&w| balanced_offset_grad(delta, w))
        .collect();

    let mut g_ir = Array2::<f64>::zeros((steps, k));
    let mut g_ii = Array2::<f64>::zeros((steps, k));
    let mut lam_ur = vec![0.0; k];
    let mut lam_ui = vec![0.0; k];
    let mut lam_q = vec![0.0; k];
    let mut lam_s = vec![0.0; k];
    let mut next_s = vec![0.0; k];

    for t in (0..steps).rev() {
        for i in 0..k {
            let g_s = g_spikes[[t, i]] + lam_s[i];
            let g_v = g_s * spike_fn.derivative(tr.margin[[t, i]]);
            let g_ur = lam_ur[i] + g_potential[[t, i]] + g_v;
            let g_ui = lam_ui[i];
            let g_th = g_threshold[[t, i]] - g_v;
            let mut g_q = lam_q[i] + if adaptive { g_th } else { 0.0 };

            let a = tr.u_in_re[[t, i]];
            let c = tr.u_in_im[[t, i]];
            let b = tr.b[[t, i]];
            let w = layer.omega[i];
            let g_a = g_ur * (1.0 + delta * b) + g_ui * delta * w;
            let g_c = -g_ur * delta * w + g_ui * (1.0 + delta * b);
            let g_b = delta * (g_ur * a + g_ui * c);
            grad.omega[i] += delta * (g_ui * a - g_ur * c) + g_b * dp[i];
            grad.b_hat[i] -= g_b;
            if adaptive {
                g_q -= g_b;
            }
            g_ir[[t, i]] = delta * g_ur;
            g_ii[[t, i]] = delta * g_ui;

            lam_ur[i] = g_a;
            lam_ui[i] = g_c;
            if adaptive {
                lam_q[i] = gamma * g_q;
                next_s[i] = g_q;
            } else {
                next_s[i] = -theta_c * g_a;
            }
        }
        if let Some(v) = &layer.v {
            let gi = g_ir.row(t);
            for (j, ns) in next_s.iter_mut().enumerate() {
                *ns += v.column(j).dot(&gi);
            }
        }
        std::mem::swap(&mut lam_s, &mut next_s);
    }
    (g_ir, Some(g_ii))
}

/// Returns `d L / d I`.
fn integrator_backward(
    layer: &Layer,
    tr: &LayerTrace,
    g_spikes: &Array2<f64>,
    g_potential: &Array2<f64>,
    g_threshold: &Array2<f64>,
    spike_fn: SpikeFn,
    grad: &mut LayerGrad,
) -> Array2<f64> {
    let steps = tr.steps();
    let k = layer.size;
    let adaptive = layer.kind.is_adaptive();
    let beta = layer.hyper.beta;
    let gamma = layer.hyper.gamma;

    let mut g_i = Array2::<f64>::zeros((steps, k));
    let mut lam_u = vec![0.0; k];
    let mut lam_q = vec![0.0; k];
    let mut lam_th = vec![0.0; k];
    let mut lam_s = vec![0.0; k];
    let mut next_s = vec![0.0; k];

    for t in (0..steps).rev() {
        for i in 0..k {
            let g_s = g_spikes[[t, i]] + lam_s[i];
            let g_v = g_s * spike_fn.derivative(tr.margin[[t, i]]);
            let g_u = lam_u[i] + g_potential[[t, i]] + g_v;
            let g_th = lam_th[i] + g_threshold[[t, i]] - g_v;
            let g_q = lam_q[i] + if adaptive { g_th } else { 0.0 };

            let sigma = tr.b[[t, i]];
            let u_prev = tr.u_in_re[[t, i]];
            let input = tr.current_re[[t, i]];
            let s_prev = if t > 0 { tr.spikes[[t - 1, i]] } else { 0.0 };
            let b_hat = layer.b_hat[i];
            let g_sigma = g_u * (u_prev - input);
            grad.b_hat[i] += g_sigma * sigma / (b_hat * b_hat);
            g_i[[t, i]] = g_u * (1.0 - sigma);

            lam_u[i] = g_u * sigma;
            lam_th[i] = -g_u * s_prev;
            next_s[i] = -g_u * tr.theta_prev[[t, i]];
            if adaptive {
                lam_q[i] = beta * gamma * g_q;
                next_s[i] += beta * (1.0 - gamma) * g_q;
            } else {
                lam_q[i] = 0.0;
            }
        }
        if let Some(v) = &layer.v {
            let gi = g_i.row(t);
            for (j, ns) in next_s.iter_mut().enumerate() {
                *ns += v.column(j).dot(&gi);
            }
        }
        std::mem::swap(&mut lam_s, &mut next_s);
    }
    g_i
}
