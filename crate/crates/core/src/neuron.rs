//! Discrete-time neuron models.
//!
//! Two families share this module:
//!
//! * resonators (BRF, RF) with a complex membrane potential rotating at an
//!   intrinsic angular frequency `omega` and damped by `b`;
//! * integrators (ALIF, LIF) with a real, exponentially leaking potential.
//!
//! The adaptive variants (BRF, ALIF) carry a refractory accumulator `q` that
//! raises the firing threshold; for BRF it also deepens the damping. The
//! non-adaptive variants (RF, LIF) use a soft reset instead.
//!
//! Spike-previous values are stored as `f64` so the same update serves the
//! hard forward pass (0/1) and the relaxed one used for gradient checks.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::train::surrogate::SpikeFn;

/// Network-wide resonator update rate.
pub const DEFAULT_DELTA: f64 = 0.01;
pub const DEFAULT_THETA_C: f64 = 1.0;
pub const DEFAULT_BETA: f64 = 1.8;
pub const DEFAULT_GAMMA: f64 = 0.9;
/// Integrator default: keeps `beta * gamma < 1` so the threshold recursion is stable.
pub const DEFAULT_INTEGRATOR_GAMMA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NeuronKind {
    Lif,
    Alif,
    Rf,
    Brf,
}

impl NeuronKind {
    pub const ALL: [NeuronKind; 4] = [
        NeuronKind::Lif,
        NeuronKind::Alif,
        NeuronKind::Rf,
        NeuronKind::Brf,
    ];

    pub fn is_resonator(self) -> bool {
        matches!(self, NeuronKind::Rf | NeuronKind::Brf)
    }

    pub fn is_adaptive(self) -> bool {
        matches!(self, NeuronKind::Alif | NeuronKind::Brf)
    }

    pub fn name(self) -> &'static str {
        match self {
            NeuronKind::Lif => "lif",
            NeuronKind::Alif => "alif",
            NeuronKind::Rf => "rf",
            NeuronKind::Brf => "brf",
        }
    }
}

impl std::fmt::Display for NeuronKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for NeuronKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lif" => Ok(NeuronKind::Lif),
            "alif" => Ok(NeuronKind::Alif),
            "rf" => Ok(NeuronKind::Rf),
            "brf" => Ok(NeuronKind::Brf),
            other => Err(Error::InvalidParam(format!(
                "unknown neuron kind {other:?}"
            ))),
        }
    }
}

/// Parameters of a single resonator neuron.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrfParams {
    pub omega: f64,
    pub b_hat: f64,
    pub gamma: f64,
    pub theta_c: f64,
    pub delta: f64,
}

impl BrfParams {
    pub fn new(omega: f64, b_hat: f64, gamma: f64, theta_c: f64, delta: f64) -> Result<Self> {
        let p = BrfParams {
            omega,
            b_hat,
            gamma,
            theta_c,
            delta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) {
            return Err(Error::InvalidParam(format!(
                "delta must be > 0, got {}",
                self.delta
            )));
        }
        if (self.delta * self.omega).powi(2) > 1.0 {
            return Err(Error::InvalidParam(format!(
                "(delta*omega)^2 = {} exceeds 1",
                (self.delta * self.omega).powi(2)
            )));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::InvalidParam(format!(
                "gamma must lie in [0,1), got {}",
                self.gamma
            )));
        }
        if !(self.theta_c > 0.0) {
            return Err(Error::InvalidParam(format!(
                "theta_c must be > 0, got {}",
                self.theta_c
            )));
        }
        if !self.b_hat.is_finite() || self.b_hat < 0.0 {
            return Err(Error::InvalidParam(format!(
                "b_hat must be >= 0, got {}",
                self.b_hat
            )));
        }
        Ok(())
    }
}

/// Damping that places the undamped update exactly on the unit circle:
/// `(-1 + sqrt(1 - (delta*omega)^2)) / delta`.
#[inline]
pub fn balanced_offset(delta: f64, omega: f64) -> f64 {
    let x = delta * omega;
    debug_assert!(x * x <= 1.0, "(delta*omega)^2 > 1");
    (-1.0 + (1.0 - x * x).max(0.0).sqrt()) / delta
}

/// d/d(omega) of [`balanced_offset`].
#[inline]
pub fn balanced_offset_grad(delta: f64, omega: f64) -> f64 {
    let x = delta * omega;
    let r = (1.0 - x * x).max(1e-300).sqrt();
    -x / r
}

/// Damping factor `b` for adaptation value `q`.
pub fn brf_damping(params: &BrfParams, q: f64) -> f64 {
    assert!(
        (params.delta * params.omega).powi(2) <= 1.0,
        "(delta*omega)^2 > 1: square root argument negative"
    );
    debug_assert!(q >= 0.0);
    balanced_offset(params.delta, params.omega) - params.b_hat - q
}

/// Modulus of the homogeneous update multiplier `1 + delta(b + j omega)`.
pub fn update_modulus(params: &BrfParams, q: f64) -> f64 {
    let b = brf_damping(params, q);
    Complex64::new(1.0 + params.delta * b, params.delta * params.omega).norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BrfState {
    pub u: Complex64,
    pub q: f64,
    pub spike_prev: f64,
}

/// Everything one resonator update produced, kept for backpropagation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonatorStep {
    /// Potential entering the rotation (after soft reset for RF).
    pub u_in: Complex64,
    pub u: Complex64,
    pub q: f64,
    pub b: f64,
    pub theta: f64,
    /// `Re(u) - theta`.
    pub margin: f64,
    pub spike: f64,
}

/// Shared resonator update. `adaptive` selects BRF (refractory accumulator in
/// threshold and damping) versus RF (fixed threshold, soft reset on Re(u)).
#[inline]
pub fn resonator_update(
    state: &BrfState,
    input: Complex64,
    params: &BrfParams,
    adaptive: bool,
    spike_fn: SpikeFn,
) -> ResonatorStep {
    let (q, u_in, theta) = if adaptive {
        let q = params.gamma * state.q + state.spike_prev;
        (q, state.u, params.theta_c + q)
    } else {
        let u_in = Complex64::new(state.u.re - params.theta_c * state.spike_prev, state.u.im);
        (0.0, u_in, params.theta_c)
    };
    let b = balanced_offset(params.delta, params.omega) - params.b_hat - q;
    let rot = Complex64::new(b, params.omega);
    let u = u_in + params.delta * (rot * u_in + input);
    let margin = u.re - theta;
    ResonatorStep {
        u_in,
        u,
        q,
        b,
        theta,
        margin,
        spike: spike_fn.forward(margin),
    }
}

fn to_state(step: &ResonatorStep) -> BrfState {
    BrfState {
        u: step.u,
        q: step.q,
        spike_prev: step.spike,
    }
}

/// One balanced resonate-and-fire step.
pub fn brf_step(
    state: &BrfState,
    input_current: Complex64,
    params: &BrfParams,
) -> (BrfState, bool) {
    let step = resonator_update(state, input_current, params, true, SpikeFn::default());
    (to_state(&step), step.spike > 0.0)
}

/// One resonate-and-fire step (no adaptation, soft reset).
pub fn rf_step(state: &BrfState, input_current: Complex64, params: &BrfParams) -> (BrfState, bool) {
    let step = resonator_update(state, input_current, params, false, SpikeFn::default());
    (to_state(&step), step.spike > 0.0)
}

/// Parameters of a single integrator neuron.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlifParams {
    pub b_hat: f64,
    pub beta: f64,
    pub gamma: f64,
    pub theta_c: f64,
}

impl AlifParams {
    pub fn new(b_hat: f64, beta: f64, gamma: f64, theta_c: f64) -> Result<Self> {
        let p = AlifParams {
            b_hat,
            beta,
            gamma,
            theta_c,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b_hat > 0.0) {
            return Err(Error::InvalidParam(format!(
                "b_hat must be > 0, got {}",
                self.b_hat
            )));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidParam(format!(
                "gamma must lie in (0,1), got {}",
                self.gamma
            )));
        }
        if !(self.theta_c > 0.0) {
            return Err(Error::InvalidParam(format!(
                "theta_c must be > 0, got {}",
                self.theta_c
            )));
        }
        if !self.beta.is_finite() || self.beta < 0.0 {
            return Err(Error::InvalidParam(format!(
                "beta must be >= 0, got {}",
                self.beta
            )));
        }
        Ok(())
    }

    /// Leak factor `exp(-1/b_hat)`.
    #[inline]
    pub fn decay(&self) -> f64 {
        leak(self.b_hat)
    }
}

#[inline]
pub fn leak(b_hat: f64) -> f64 {
    (-1.0 / b_hat).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AlifState {
    pub u: f64,
    pub q: f64,
    pub spike_prev: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorStep {
    pub sigma: f64,
    pub u: f64,
    pub q: f64,
    pub theta: f64,
    /// Threshold that was in force at the previous step (used by the reset).
    pub theta_prev: f64,
    pub margin: f64,
    pub spike: f64,
}

/// Shared integrator update. `adaptive` selects ALIF versus LIF (`q == 0`).
#[inline]
pub fn integrator_update(
    state: &AlifState,
    input: f64,
    params: &AlifParams,
    adaptive: bool,
    spike_fn: SpikeFn,
) -> IntegratorStep {
    let sigma = params.decay();
    let theta_prev = params.theta_c + state.q;
    let q = if adaptive {
        params.beta * params.gamma * state.q + params.beta * (1.0 - params.gamma) * state.spike_prev
    } else {
        0.0
    };
    let theta = params.theta_c + q;
    let u = sigma * state.u + (1.0 - sigma) * input - state.spike_prev * theta_prev;
    let margin = u - theta;
    IntegratorStep {
        sigma,
        u,
        q,
        theta,
        theta_prev,
        margin,
        spike: spike_fn.forward(margin),
    }
}

fn to_alif_state(step: &IntegratorStep) -> AlifState {
    AlifState {
        u: step.u,
        q: step.q,
        spike_prev: step.spike,
    }
}

/// One adaptive leaky integrate-and-fire step.
pub fn alif_step(state: &AlifState, input_current: f64, params: &AlifParams) -> (AlifState, bool) {
    let step = integrator_update(state, input_current, params, true, SpikeFn::default());
    (to_alif_state(&step), step.spike > 0.0)
}

/// One leaky integrate-and-fire step: fixed threshold, soft reset.
pub fn lif_step(state: &AlifState, input_current: f64, params: &AlifParams) -> (AlifState, bool) {
    let step = integrator_update(state, input_current, params, false, SpikeFn::default());
    (to_alif_state(&step), step.spike > 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn brf(omega: f64, b_hat: f64) -> BrfParams {
        BrfParams::new(omega, b_hat, 0.9, 1.0, 0.01).unwrap()
    }

    #[test]
    fn damping_values() {
        assert_eq!(brf_damping(&brf(0.0, 0.0), 0.0), 0.0);
        assert_abs_diff_eq!(brf_damping(&brf(10.0, 0.0), 0.0), -0.501256, epsilon = 1e-5);
        assert_abs_diff_eq!(
            brf_damping(&brf(10.0, 15.0), 1.0),
            -16.501256,
            epsilon = 1e-5
        );
    }

    #[test]
    fn damping_decreases_in_q_and_b_hat() {
        let p = brf(30.0, 2.0);
        assert!(brf_damping(&p, 0.5) < brf_damping(&p, 0.0));
        assert!(brf_damping(&brf(30.0, 2.5), 0.0) < brf_damping(&p, 0.0));
    }

    #[test]
    fn rejects_out_of_domain() {
        assert!(BrfParams::new(101.0, 0.0, 0.5, 1.0, 0.01).is_err());
        assert!(BrfParams::new(100.0, 0.0, 0.5, 1.0, 0.01).is_ok());
        assert!(BrfParams::new(10.0, 0.0, 1.0, 1.0, 0.01).is_err());
        assert!(BrfParams::new(10.0, 0.0, 0.5, 0.0, 0.01).is_err());
        assert!(AlifParams::new(0.0, 1.8, 0.5, 1.0).is_err());
        assert!(AlifParams::new(5.0, 1.8, 0.0, 1.0).is_err());
    }

    #[test]
    #[should_panic]
    fn damping_asserts_domain() {
        let p = BrfParams {
            omega: 200.0,
            b_hat: 0.0,
            gamma: 0.5,
            theta_c: 1.0,
            delta: 0.01,
        };
        brf_damping(&p, 0.0);
    }

    #[test]
    fn brf_first_step_from_rest() {
        for (omega, b_hat) in [(0.0, 0.0), (40.0, 3.0), (99.0, 15.0)] {
            let (s, spike) = brf_step(
                &BrfState::default(),
                Complex64::new(1.0, 0.0),
                &brf(omega, b_hat),
            );
            assert_abs_diff_eq!(s.u.re, 0.01, epsilon = 1e-15);
            assert_abs_diff_eq!(s.u.im, 0.0, epsilon = 1e-15);
            assert!(!spike);
        }
    }

    #[test]
    fn rest_is_fixed_point() {
        let p = brf(50.0, 1.0);
        let (s, spike) = brf_step(&BrfState::default(), Complex64::new(0.0, 0.0), &p);
        assert_eq!(s, BrfState::default());
        assert!(!spike);
        let a = AlifParams::new(10.0, 1.8, 0.9, 1.0).unwrap();
        let (s, spike) = alif_step(&AlifState::default(), 0.0, &a);
        assert_eq!(s, AlifState::default());
        assert!(!spike);
    }

    #[test]
    fn brf_refractory_raises_threshold_and_damping() {
        let p = brf(30.0, 1.0);
        let base = BrfState {
            u: Complex64::new(0.4, -0.2),
            q: 0.3,
            spike_prev: 0.0,
        };
        let spiked = BrfState {
            spike_prev: 1.0,
            ..base
        };
        let i = Complex64::new(0.5, 0.0);
        let a = resonator_update(&base, i, &p, true, SpikeFn::default());
        let b = resonator_update(&spiked, i, &p, true, SpikeFn::default());
        assert!(b.theta > a.theta);
        assert!(b.b < a.b);
        assert_abs_diff_eq!(a.q, 0.27, epsilon = 1e-15);
        assert_abs_diff_eq!(b.q, 1.27, epsilon = 1e-15);
    }

    #[test]
    fn rf_soft_reset_on_real_part() {
        let p = BrfParams::new(20.0, 0.5, 0.0, 1.0, 0.01).unwrap();
        let s = BrfState {
            u: Complex64::new(1.4, 0.3),
            q: 0.0,
            spike_prev: 1.0,
        };
        let step = resonator_update(&s, Complex64::new(0.0, 0.0), &p, false, SpikeFn::default());
        assert_abs_diff_eq!(step.u_in.re, 0.4, epsilon = 1e-15);
        assert_eq!(step.u_in.im, 0.3);
        assert_eq!(step.theta, 1.0);
    }

    #[test]
    fn rf_matches_brf_with_zero_gamma_until_first_spike() {
        let p = BrfParams::new(25.0, 0.5, 0.0, 1.0, 0.01).unwrap();
        let mut a = BrfState::default();
        let mut b = BrfState::default();
        for t in 0..2000 {
            let i = Complex64::new(300.0 * (25.0 * 0.01 * t as f64).sin(), 0.0);
            let (na, sa) = brf_step(&a, i, &p);
            let (nb, sb) = rf_step(&b, i, &p);
            assert_eq!(na.u, nb.u);
            assert_eq!(sa, sb);
            a = na;
            b = nb;
            if sa {
                return;
            }
        }
        panic!("drive never produced a spike");
    }

    #[test]
    fn rf_silent_without_input() {
        let p = brf(60.0, 0.2);
        let mut s = BrfState::default();
        for _ in 0..1000 {
            let (n, spike) = rf_step(&s, Complex64::new(0.0, 0.0), &p);
            assert!(!spike);
            s = n;
        }
    }

    #[test]
    fn alif_adaptation_arithmetic() {
        let p = AlifParams::new(10.0, 1.8, 0.5, 1.0).unwrap();
        let s = AlifState {
            u: 0.0,
            q: 0.0,
            spike_prev: 1.0,
        };
        let step = integrator_update(&s, 0.0, &p, true, SpikeFn::default());
        assert_abs_diff_eq!(step.q, 0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(step.theta, 1.9, epsilon = 1e-15);
    }

    #[test]
    fn alif_pure_integrator_limit() {
        let p = AlifParams::new(1e300, 1.8, 0.5, 1.0).unwrap();
        assert_eq!(p.decay(), 1.0);
        let s = AlifState {
            u: 2.5,
            q: 0.2,
            spike_prev: 1.0,
        };
        let step = integrator_update(&s, 7.0, &p, true, SpikeFn::default());
        // reset subtracts the previous threshold theta_c + q_prev = 1.2
        assert_abs_diff_eq!(step.u, 1.3, epsilon = 1e-12);
    }

    #[test]
    fn lif_is_alif_with_zero_beta() {
        let a = AlifParams::new(4.0, 0.0, 0.7, 1.0).unwrap();
        let mut s1 = AlifState::default();
        let mut s2 = AlifState::default();
        let mut x = 0.3f64;
        for _ in 0..500 {
            x = (x * 3.7 * (1.0 - x)).clamp(0.01, 0.99);
            let i = 4.0 * x - 0.5;
            let (n1, sp1) = alif_step(&s1, i, &a);
            let (n2, sp2) = lif_step(&s2, i, &a);
            assert_eq!(n1, n2);
            assert_eq!(sp1, sp2);
            s1 = n1;
            s2 = n2;
        }
    }

    #[test]
    fn lif_constant_drive_with_zero_leak() {
        // sigma = exp(-1/b_hat) underflows to 0, u_t = I - S_{t-1} * theta_c.
        let p = AlifParams::new(1e-3, 0.0, 0.5, 1.0).unwrap();
        assert_eq!(p.decay(), 0.0);
        let mut s = AlifState::default();
        let mut strong = Vec::new();
        for _ in 0..6 {
            let (n, sp) = lif_step(&s, 2.5, &p);
            strong.push(sp);
            s = n;
        }
        assert!(strong.iter().all(|&x| x));

        let mut s = AlifState::default();
        let mut weak = Vec::new();
        for _ in 0..6 {
            let (n, sp) = lif_step(&s, 1.5, &p);
            weak.push(sp);
            s = n;
        }
        assert_eq!(weak, vec![true, false, true, false, true, false]);
    }

    #[test]
    fn lif_silent_without_input() {
        let p = AlifParams::new(10.0, 1.8, 0.9, 1.0).unwrap();
        let mut s = AlifState::default();
        for _ in 0..100 {
            let (n, sp) = lif_step(&s, 0.0, &p);
            assert!(!sp);
            s = n;
        }
    }

    #[test]
    fn threshold_equality_is_silent() {
        let p = AlifParams::new(1e-3, 0.0, 0.5, 1.0).unwrap();
        let (_, sp) = lif_step(&AlifState::default(), 1.0, &p);
        assert!(!sp);
    }

    #[test]
    fn balance_on_unit_circle() {
        for &(d, w) in &[(0.01, 0.0), (0.01, 37.0), (0.001, 188.5), (0.5, 1.9)] {
            let p = BrfParams::new(w, 0.0, 0.0, 1.0, d).unwrap();
            assert_abs_diff_eq!(update_modulus(&p, 0.0), 1.0, epsilon = 1e-12);
        }
    }
}
