//! Fully connected spiking layers with optional recurrence.

use ndarray::{Array1, Array2, ArrayView2};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{dim, Error, Result};
use crate::neuron::{
    integrator_update, resonator_update, AlifParams, AlifState, BrfParams, BrfState, NeuronKind,
    DEFAULT_BETA, DEFAULT_DELTA, DEFAULT_GAMMA, DEFAULT_INTEGRATOR_GAMMA, DEFAULT_THETA_C,
};
use crate::train::surrogate::SpikeFn;

/// Per-layer hyperparameters that are not trained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerHyper {
    pub gamma: f64,
    pub theta_c: f64,
    pub beta: f64,
    pub delta: f64,
}

impl Default for LayerHyper {
    fn default() -> Self {
        LayerHyper {
            gamma: DEFAULT_GAMMA,
            theta_c: DEFAULT_THETA_C,
            beta: DEFAULT_BETA,
            delta: DEFAULT_DELTA,
        }
    }
}

impl LayerHyper {
    /// Defaults for a neuron family; integrators use a smaller `gamma`.
    pub fn for_kind(kind: NeuronKind) -> Self {
        let gamma = if kind.is_resonator() {
            DEFAULT_GAMMA
        } else {
            DEFAULT_INTEGRATOR_GAMMA
        };
        LayerHyper {
            gamma,
            ..Default::default()
        }
    }
}

/// Ranges used when drawing fresh layer parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InitConfig {
    /// Feedforward weights are uniform in `±gain / sqrt(n_in)`.
    pub resonator_gain: f64,
    pub integrator_gain: f64,
    pub recurrent_gain: f64,
    pub omega_range: (f64, f64),
    pub resonator_b_hat_range: (f64, f64),
    pub integrator_b_hat_range: (f64, f64),
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig {
            resonator_gain: 30.0,
            integrator_gain: 10.0,
            recurrent_gain: 0.5,
            omega_range: (5.0, 60.0),
            resonator_b_hat_range: (0.5, 2.0),
            integrator_b_hat_range: (2.0, 10.0),
        }
    }
}

/// Lower bound kept on integrator `b_hat` so the leak stays in (0, 1).
pub const MIN_INTEGRATOR_B_HAT: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub kind: NeuronKind,
    pub n_in: usize,
    pub size: usize,
    /// Feedforward weights, `size x n_in`.
    pub w_re: Array2<f64>,
    /// Imaginary part for complex-weighted encoding layers.
    pub w_im: Option<Array2<f64>>,
    /// Recurrent weights, `size x size`.
    pub v: Option<Array2<f64>>,
    /// Intrinsic angular frequency; only meaningful for resonators.
    pub omega: Array1<f64>,
    pub b_hat: Array1<f64>,
    pub hyper: LayerHyper,
}

/// Operation counts for one layer at one timestep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OpTrace {
    /// Nonzero feedforward inputs.
    pub input_spikes: u64,
    /// Nonzero recurrent inputs (own spikes from the previous step).
    pub recurrent_spikes: u64,
    /// Feedforward spike deliveries, one per active input per receiving neuron.
    pub ff_events: u64,
    /// Recurrent spike deliveries.
    pub rec_events: u64,
    pub output_spikes: u64,
}

impl OpTrace {
    pub fn synaptic_events(&self) -> u64 {
        self.ff_events + self.rec_events
    }
}

/// Neuron states of a whole layer.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerState {
    Resonator(Vec<BrfState>),
    Integrator(Vec<AlifState>),
}

/// Per-layer input sequence, `T x n_in`.
#[derive(Debug, Clone, Copy)]
pub struct LayerInput<'a> {
    pub re: ArrayView2<'a, f64>,
    pub im: Option<ArrayView2<'a, f64>>,
}

/// Everything a layer computed over a sequence; the backward pass reads it.
#[derive(Debug, Clone)]
pub struct LayerTrace {
    pub x_re: Array2<f64>,
    pub x_im: Option<Array2<f64>>,
    pub current_re: Array2<f64>,
    pub current_im: Array2<f64>,
    /// Potential entering the update (post soft-reset for RF); zero imaginary part for integrators.
    pub u_in_re: Array2<f64>,
    pub u_in_im: Array2<f64>,
    pub u_re: Array2<f64>,
    pub u_im: Array2<f64>,
    pub q: Array2<f64>,
    pub b: Array2<f64>,
    pub theta: Array2<f64>,
    pub theta_prev: Array2<f64>,
    pub margin: Array2<f64>,
    pub spikes: Array2<f64>,
    pub ops: Vec<OpTrace>,
}

impl LayerTrace {
    pub fn steps(&self) -> usize {
        self.spikes.nrows()
    }

    pub fn spike_count(&self) -> u64 {
        self.ops.iter().map(|o| o.output_spikes).sum()
    }
}

fn uniform_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-scale..=scale))
}

impl Layer {
    /// Draws a fresh layer.
    pub fn init<R: Rng>(
        rng: &mut R,
        kind: NeuronKind,
        n_in: usize,
        size: usize,
        complex: bool,
        recurrent: bool,
        hyper: LayerHyper,
        init: &InitConfig,
    ) -> Result<Self> {
        if n_in == 0 || size == 0 {
            return Err(Error::InvalidParam(
                "layer dimensions must be positive".into(),
            ));
        }
        if complex && !kind.is_resonator() {
            return Err(Error::InvalidParam(
                "complex weights are only supported for resonator layers".into(),
            ));
        }
        let gain = if kind.is_resonator() {
            init.resonator_gain
        } else {
            init.integrator_gain
        };
        let scale = gain / (n_in as f64).sqrt();
        let w_re = uniform_matrix(rng, size, n_in, scale);
        let w_im = complex.then(|| uniform_matrix(rng, size, n_in, scale));
        let v = recurrent.then(|| {
            let s = init.recurrent_gain * gain / (size as f64).sqrt();
            uniform_matrix(rng, size, size, s)
        });
        let (omega, b_hat) = if kind.is_resonator() {
            let omax = 1.0 / hyper.delta;
            let (lo, hi) = init.omega_range;
            let (lo, hi) = (lo.min(omax), hi.min(omax));
            let omega = Array1::from_shape_fn(size, |_| sample_range(rng, lo, hi));
            let (blo, bhi) = init.resonator_b_hat_range;
            let b_hat = Array1::from_shape_fn(size, |_| sample_range(rng, blo, bhi));
            (omega, b_hat)
        } else {
            let (blo, bhi) = init.integrator_b_hat_range;
            let b_hat = Array1::from_shape_fn(size, |_| sample_range(rng, blo, bhi));
            (Array1::zeros(size), b_hat)
        };
        let layer = Layer {
            kind,
            n_in,
            size,
            w_re,
            w_im,
            v,
            omega,
            b_hat,
            hyper,
        };
        layer.validate()?;
        Ok(layer)
    }

    pub fn is_complex(&self) -> bool {
        self.w_im.is_some()
    }

    pub fn is_recurrent(&self) -> bool {
        self.v.is_some()
    }

    pub fn validate(&self) -> Result<()> {
        dim("feedforward rows", self.size, self.w_re.nrows())?;
        dim("feedforward cols", self.n_in, self.w_re.ncols())?;
        if let Some(wi) = &self.w_im {
            dim(
                "imaginary feedforward shape",
                self.size * self.n_in,
                wi.len(),
            )?;
        }
        if let Some(v) = &self.v {
            if v.nrows() != v.ncols() {
                return Err(Error::InvalidParam(
                    "recurrent matrix must be square".into(),
                ));
            }
            dim("recurrent size", self.size, v.nrows())?;
        }
        dim("omega length", self.size, self.omega.len())?;
        dim("b_hat length", self.size, self.b_hat.len())?;
        for i in 0..self.size {
            if self.kind.is_resonator() {
                self.brf_params(i).validate()?;
            } else {
                self.alif_params(i).validate()?;
            }
        }
        Ok(())
    }

    pub fn brf_params(&self, i: usize) -> BrfParams {
        BrfParams {
            omega: self.omega[i],
            b_hat: self.b_hat[i],
            gamma: if self.kind.is_adaptive() {
                self.hyper.gamma
            } else {
                0.0
            },
            theta_c: self.hyper.theta_c,
            delta: self.hyper.delta,
        }
    }

    pub fn alif_params(&self, i: usize) -> AlifParams {
        AlifParams {
            b_hat: self.b_hat[i],
            beta: self.hyper.beta,
            gamma: self.hyper.gamma,
            theta_c: self.hyper.theta_c,
        }
    }

    /// Clamps trainable neuron parameters back into their valid domain.
    pub fn project(&mut self) {
        if self.kind.is_resonator() {
            let omax = 1.0 / self.hyper.delta;
            self.omega.mapv_inplace(|w| w.clamp(0.0, omax));
            self.b_hat.mapv_inplace(|b| b.max(0.0));
        } else {
            self.b_hat.mapv_inplace(|b| b.max(MIN_INTEGRATOR_B_HAT));
        }
    }

    pub fn initial_state(&self) -> LayerState {
        if self.kind.is_resonator() {
            LayerState::Resonator(vec![BrfState::default(); self.size])
        } else {
            LayerState::Integrator(vec![AlifState::default(); self.size])
        }
    }

    /// Input current `W x + V s_prev` (complex).
    pub fn current(
        &self,
        x_re: &[f64],
        x_im: Option<&[f64]>,
        rec_prev: &[f64],
        out_re: &mut [f64],
        out_im: &mut [f64],
    ) {
        out_re.iter_mut().for_each(|x| *x = 0.0);
        out_im.iter_mut().for_each(|x| *x = 0.0);
        for (j, &x) in x_re.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            let col = self.w_re.column(j);
            for (o, &w) in out_re.iter_mut().zip(col.iter()) {
                *o += w * x;
            }
            if let Some(wi) = &self.w_im {
                for (o, &w) in out_im.iter_mut().zip(wi.column(j).iter()) {
                    *o += w * x;
                }
            }
        }
        if let Some(xi) = x_im {
            for (j, &x) in xi.iter().enumerate() {
                if x == 0.0 {
                    continue;
                }
                for (o, &w) in out_im.iter_mut().zip(self.w_re.column(j).iter()) {
                    *o += w * x;
                }
                if let Some(wi) = &self.w_im {
                    for (o, &w) in out_re.iter_mut().zip(wi.column(j).iter()) {
                        *o -= w * x;
                    }
                }
            }
        }
        if let Some(v) = &self.v {
            for (j, &s) in rec_prev.iter().enumerate() {
                if s == 0.0 {
                    continue;
                }
                for (o, &w) in out_re.iter_mut().zip(v.column(j).iter()) {
                    *o += w * s;
                }
            }
        }
    }

    /// One timestep for the whole layer. `rec_prev` is this layer's own output
    /// from the previous step, ignored when the layer has no recurrence.
    pub fn step(
        &self,
        x_re: &[f64],
        x_im: Option<&[f64]>,
        rec_prev: &[f64],
        state: &mut LayerState,
        spike_fn: SpikeFn,
    ) -> Result<(Vec<f64>, OpTrace)> {
        let mut rec = StepRecord::new(self.size);
        let ops = self.step_record(x_re, x_im, rec_prev, state, spike_fn, &mut rec)?;
        Ok((rec.spike, ops))
    }

    fn step_record(
        &self,
        x_re: &[f64],
        x_im: Option<&[f64]>,
        rec_prev: &[f64],
        state: &mut LayerState,
        spike_fn: SpikeFn,
        rec: &mut StepRecord,
    ) -> Result<OpTrace> {
        dim("layer input width", self.n_in, x_re.len())?;
        if let Some(xi) = x_im {
            dim("layer imaginary input width", self.n_in, xi.len())?;
        }
        dim("recurrent input width", self.size, rec_prev.len())?;
        self.current(x_re, x_im, rec_prev, &mut rec.i_re, &mut rec.i_im);

        let input_spikes = (0..self.n_in)
            .filter(|&j| x_re[j] != 0.0 || x_im.is_some_and(|xi| xi[j] != 0.0))
            .count() as u64;
        let recurrent_spikes = if self.v.is_some() {
            rec_prev.iter().filter(|&&s| s != 0.0).count() as u64
        } else {
            0
        };

        match state {
            LayerState::Resonator(states) => {
                dim("resonator state count", self.size, states.len())?;
                if !self.kind.is_resonator() {
                    return Err(Error::InvalidParam(
                        "state kind does not match layer".into(),
                    ));
                }
                let adaptive = self.kind.is_adaptive();
                for i in 0..self.size {
                    let p = self.brf_params(i);
                    let s = resonator_update(
                        &states[i],
                        Complex64::new(rec.i_re[i], rec.i_im[i]),
                        &p,
                        adaptive,
                        spike_fn,
                    );
                    rec.u_in_re[i] = s.u_in.re;
                    rec.u_in_im[i] = s.u_in.im;
                    rec.u_re[i] = s.u.re;
                    rec.u_im[i] = s.u.im;
                    rec.q[i] = s.q;
                    rec.b[i] = s.b;
                    rec.theta[i] = s.theta;
                    rec.theta_prev[i] = p.theta_c + if adaptive { states[i].q } else { 0.0 };
                    rec.margin[i] = s.margin;
                    rec.spike[i] = s.spike;
                    states[i] = BrfState {
                        u: s.u,
                        q: s.q,
                        spike_prev: s.spike,
                    };
                }
            }
            LayerState::Integrator(states) => {
                dim("integrator state count", self.size, states.len())?;
                if self.kind.is_resonator() {
                    return Err(Error::InvalidParam(
                        "state kind does not match layer".into(),
                    ));
                }
                let adaptive = self.kind.is_adaptive();
                for i in 0..self.size {
                    let p = self.alif_params(i);
                    let s = integrator_update(&states[i], rec.i_re[i], &p, adaptive, spike_fn);
                    rec.u_in_re[i] = states[i].u;
                    rec.u_in_im[i] = 0.0;
                    rec.u_re[i] = s.u;
                    rec.u_im[i] = 0.0;
                    rec.q[i] = s.q;
                    rec.b[i] = s.sigma;
                    rec.theta[i] = s.theta;
                    rec.theta_prev[i] = s.theta_prev;
                    rec.margin[i] = s.margin;
                    rec.spike[i] = s.spike;
                    states[i] = AlifState {
                        u: s.u,
                        q: s.q,
                        spike_prev: s.spike,
                    };
                }
            }
        }
        let output_spikes = rec.spike.iter().filter(|&&s| s != 0.0).count() as u64;
        Ok(OpTrace {
            input_spikes,
            recurrent_spikes,
            ff_events: input_spikes * self.size as u64,
            rec_events: recurrent_spikes * self.size as u64,
            output_spikes,
        })
    }

    /// Runs the layer over a whole `T x n_in` input sequence from rest.
    pub fn forward_sequence(&self, input: LayerInput<'_>, spike_fn: SpikeFn) -> Result<LayerTrace> {
        let (steps, width) = input.re.dim();
        dim("layer input width", self.n_in, width)?;
        if let Some(im) = &input.im {
            dim("imaginary input steps", steps, im.nrows())?;
        }
        let k = self.size;
        let z = || Array2::<f64>::zeros((steps, k));
        let mut trace = LayerTrace {
            x_re: input.re.to_owned(),
            x_im: input.im.map(|v| v.to_owned()),
            current_re: z(),
            current_im: z(),
            u_in_re: z(),
            u_in_im: z(),
            u_re: z(),
            u_im: z(),
            q: z(),
            b: z(),
            theta: z(),
            theta_prev: z(),
            margin: z(),
            spikes: z(),
            ops: Vec::with_capacity(steps),
        };
        let mut state = self.initial_state();
        let mut rec = StepRecord::new(k);
        let mut prev = vec![0.0; k];
        let mut xr = vec![0.0; width];
        let mut xi = vec![0.0; width];
        for t in 0..steps {
            xr.iter_mut()
                .zip(input.re.row(t).iter())
                .for_each(|(d, &s)| *d = s);
            let x_im = match &input.im {
                Some(im) => {
                    xi.iter_mut()
                        .zip(im.row(t).iter())
                        .for_each(|(d, &s)| *d = s);
                    Some(&xi[..])
                }
                None => None,
            };
            let ops = self.step_record(&xr, x_im, &prev, &mut state, spike_fn, &mut rec)?;
            trace.ops.push(ops);
            for i in 0..k {
                trace.current_re[[t, i]] = rec.i_re[i];
                trace.current_im[[t, i]] = rec.i_im[i];
                trace.u_in_re[[t, i]] = rec.u_in_re[i];
                trace.u_in_im[[t, i]] = rec.u_in_im[i];
                trace.u_re[[t, i]] = rec.u_re[i];
                trace.u_im[[t, i]] = rec.u_im[i];
                trace.q[[t, i]] = rec.q[i];
                trace.b[[t, i]] = rec.b[i];
                trace.theta[[t, i]] = rec.theta[i];
                trace.theta_prev[[t, i]] = rec.theta_prev[i];
                trace.margin[[t, i]] = rec.margin[i];
                trace.spikes[[t, i]] = rec.spike[i];
            }
            prev.copy_from_slice(&rec.spike);
        }
        Ok(trace)
    }
}

fn sample_range<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

struct StepRecord {
    i_re: Vec<f64>,
    i_im: Vec<f64>,
    u_in_re: Vec<f64>,
    u_in_im: Vec<f64>,
    u_re: Vec<f64>,
    u_im: Vec<f64>,
    q: Vec<f64>,
    b: Vec<f64>,
    theta: Vec<f64>,
    theta_prev: Vec<f64>,
    margin: Vec<f64>,
    spike: Vec<f64>,
}

impl StepRecord {
    fn new(k: usize) -> Self {
        let z = || vec![0.0; k];
        StepRecord {
            i_re: z(),
            i_im: z(),
            u_in_re: z(),
            u_in_im: z(),
            u_re: z(),
            u_im: z(),
            q: z(),
            b: z(),
            theta: z(),
            theta_prev: z(),
            margin: z(),
            spike: z(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn layer(kind: NeuronKind, recurrent: bool) -> Layer {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        Layer::init(
            &mut rng,
            kind,
            5,
            3,
            false,
            recurrent,
            LayerHyper::default(),
            &InitConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn zero_input_is_silent() {
        for kind in NeuronKind::ALL {
            let l = layer(kind, true);
            let mut st = l.initial_state();
            let (s, ops) = l
                .step(&[0.0; 5], None, &[0.0; 3], &mut st, SpikeFn::default())
                .unwrap();
            assert!(s.iter().all(|&x| x == 0.0));
            assert_eq!(ops.synaptic_events(), 0);
            assert_eq!(ops.output_spikes, 0);
        }
    }

    #[test]
    fn single_spike_selects_column() {
        let l = layer(NeuronKind::Alif, false);
        let mut re = vec![0.0; 3];
        let mut im = vec![0.0; 3];
        l.current(
            &[0.0, 0.0, 1.0, 0.0, 0.0],
            None,
            &[0.0; 3],
            &mut re,
            &mut im,
        );
        for i in 0..3 {
            assert_eq!(re[i], l.w_re[[i, 2]]);
        }
    }

    #[test]
    fn synaptic_count_matches_dense_product() {
        let l = layer(NeuronKind::Brf, true);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x: Vec<f64> = (0..5)
                .map(|_| f64::from(rng.random_bool(0.4) as u8))
                .collect();
            let r: Vec<f64> = (0..3)
                .map(|_| f64::from(rng.random_bool(0.4) as u8))
                .collect();
            let mut st = l.initial_state();
            let (_, ops) = l.step(&x, None, &r, &mut st, SpikeFn::default()).unwrap();
            // brute force: one event per nonzero product of (weight, active presynaptic)
            let mut events = 0u64;
            for _ in 0..3 {
                for j in 0..5 {
                    if x[j] != 0.0 {
                        events += 1;
                    }
                }
                for j in 0..3 {
                    if r[j] != 0.0 {
                        events += 1;
                    }
                }
            }
            assert_eq!(ops.synaptic_events(), events);
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let l = layer(NeuronKind::Lif, false);
        let mut st = l.initial_state();
        let err = l.step(&[0.0; 4], None, &[0.0; 3], &mut st, SpikeFn::default());
        assert!(matches!(err, Err(Error::Dimension { .. })));
    }

    #[test]
    fn sequence_matches_stepwise() {
        let l = layer(NeuronKind::Rf, true);
        let x = Array2::from_shape_fn((40, 5), |(t, j)| ((t * 7 + j * 3) % 5 == 0) as u8 as f64);
        let trace = l
            .forward_sequence(
                LayerInput {
                    re: x.view(),
                    im: None,
                },
                SpikeFn::default(),
            )
            .unwrap();
        let mut st = l.initial_state();
        let mut prev = vec![0.0; 3];
        for t in 0..40 {
            let row: Vec<f64> = x.row(t).to_vec();
            let (s, _) = l
                .step(&row, None, &prev, &mut st, SpikeFn::default())
                .unwrap();
            assert_eq!(s, trace.spikes.row(t).to_vec());
            prev = s;
        }
    }

    #[test]
    fn complex_current() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let l = Layer::init(
            &mut rng,
            NeuronKind::Brf,
            2,
            2,
            true,
            false,
            LayerHyper::default(),
            &InitConfig::default(),
        )
        .unwrap();
        let xr = [0.3, -1.2];
        let xi = [0.7, 0.4];
        let mut re = vec![0.0; 2];
        let mut im = vec![0.0; 2];
        l.current(&xr, Some(&xi), &[0.0; 2], &mut re, &mut im);
        let wi = l.w_im.as_ref().unwrap();
        for i in 0..2 {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..2 {
                acc += Complex64::new(l.w_re[[i, j]], wi[[i, j]]) * Complex64::new(xr[j], xi[j]);
            }
            assert!((acc.re - re[i]).abs() < 1e-12);
            assert!((acc.im - im[i]).abs() < 1e-12);
        }
    }
}
