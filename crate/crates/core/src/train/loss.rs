//! Cross-entropy, the Hoyer sparsity ratio and the combined objective.

use crate::network::{ForwardOutput, SplitNetwork};

/// Probabilities are clamped here before taking logs.
pub const LOG_CLAMP: f64 = 1e-12;

/// `-sum log p` over the true-class probabilities.
pub fn cross_entropy_loss(probs_true_class: &[f64]) -> f64 {
    probs_true_class
        .iter()
        .map(|&p| -p.max(LOG_CLAMP).ln())
        .sum()
}

/// Normalised, rectified potentials `max(u / theta, 0)`.
pub fn normalized_potentials(potentials: &[f64], thresholds: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.extend(
        potentials
            .iter()
            .zip(thresholds)
            .map(|(&u, &th)| (u / th).max(0.0)),
    );
}

/// `(sum |x|)^2 / sum |x|^2`; zero for the all-zero vector.
pub fn hoyer_ratio(values: &[f64]) -> f64 {
    let (s1, s2) = values
        .iter()
        .fold((0.0, 0.0), |(a, b), &x| (a + x.abs(), b + x * x));
    if s2 == 0.0 {
        0.0
    } else {
        s1 * s1 / s2
    }
}

/// Hoyer ratio of the rectified, threshold-normalised potentials of one layer
/// at one timestep. Pass `Re(u)` for resonators.
pub fn hoyer_regularizer(potentials: &[f64], thresholds: &[f64]) -> f64 {
    let mut buf = Vec::with_capacity(potentials.len());
    normalized_potentials(potentials, thresholds, &mut buf);
    hoyer_ratio(&buf)
}

/// Gradient of the Hoyer regulariser with respect to potentials and thresholds.
/// Writes `d R / d u_i` into `g_u` and `d R / d theta_i` into `g_theta`, scaled by `scale`.
pub fn hoyer_backward(
    potentials: &[f64],
    thresholds: &[f64],
    scale: f64,
    g_u: &mut [f64],
    g_theta: &mut [f64],
) -> f64 {
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for (&u, &th) in potentials.iter().zip(thresholds) {
        let x = (u / th).max(0.0);
        s1 += x;
        s2 += x * x;
    }
    if s2 == 0.0 {
        return 0.0;
    }
    let a = 2.0 * s1 / s2;
    let c = 2.0 * s1 * s1 / (s2 * s2);
    for i in 0..potentials.len() {
        let u = potentials[i];
        let th = thresholds[i];
        let x = u / th;
        if x > 0.0 {
            let gx = scale * (a - c * x);
            g_u[i] += gx / th;
            g_theta[i] -= gx * u / (th * th);
        }
    }
    s1 * s1 / s2
}

/// Decomposed per-sample objective.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObjectiveParts {
    /// Time-averaged cross-entropy.
    pub cross_entropy: f64,
    /// Time-averaged sum over layers of the Hoyer ratio (before `alpha`).
    pub regularizer: f64,
    pub total: f64,
}

/// `(1/T) sum_t (CE_t + alpha sum_l R_t^l)` for one sample whose forward pass is in `out`.
pub fn sample_objective(out: &ForwardOutput, label: usize, alpha: f64) -> ObjectiveParts {
    let steps = out.probs.nrows();
    let ptrue: Vec<f64> = (0..steps).map(|t| out.probs[[t, label]]).collect();
    let ce = cross_entropy_loss(&ptrue) / steps as f64;
    let mut reg = 0.0;
    for trace in &out.layers {
        for t in 0..steps {
            let u = trace.u_re.row(t);
            let th = trace.theta.row(t);
            reg += hoyer_regularizer(u.as_slice().unwrap(), th.as_slice().unwrap());
        }
    }
    reg /= steps as f64;
    ObjectiveParts {
        cross_entropy: ce,
        regularizer: reg,
        total: ce + alpha * reg,
    }
}

/// Mean per-sample objective over a batch.
pub fn total_objective(
    net: &SplitNetwork,
    batch: &[(&crate::network::InputSeq, usize)],
    alpha: f64,
    spike_fn: crate::train::surrogate::SpikeFn,
) -> crate::error::Result<f64> {
    let mut acc = 0.0;
    for (x, y) in batch {
        let out = net.forward(x, None, spike_fn)?;
        acc += sample_objective(&out, *y, alpha).total;
    }
    Ok(acc / batch.len().max(1) as f64)
}
