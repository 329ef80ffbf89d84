//! Spike nonlinearity and its pseudo-derivative.
//!
//! The forward pass thresholds the potential margin `v` (potential minus
//! threshold). The backward pass replaces the Heaviside derivative with a
//! triangle of half-width `w` and unit area. [`SpikeFn::Relaxed`] swaps the
//! hard threshold for the triangle's primitive, a C¹ ramp from 0 to 1, so that
//! the analytic gradient is the exact derivative of the forward function; this
//! is the mode finite-difference checks run in.

use serde::{Deserialize, Serialize};

/// Default half-width of the triangular pseudo-derivative.
pub const DEFAULT_SURROGATE_WIDTH: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SpikeFn {
    /// Binary spikes `[v > 0]`, triangular pseudo-derivative.
    Hard { width: f64 },
    /// Smooth ramp whose derivative is exactly the triangle.
    Relaxed { width: f64 },
}

impl Default for SpikeFn {
    fn default() -> Self {
        SpikeFn::Hard {
            width: DEFAULT_SURROGATE_WIDTH,
        }
    }
}

impl SpikeFn {
    pub fn hard(width: f64) -> Self {
        SpikeFn::Hard { width }
    }

    pub fn relaxed(width: f64) -> Self {
        SpikeFn::Relaxed { width }
    }

    pub fn width(&self) -> f64 {
        match *self {
            SpikeFn::Hard { width } | SpikeFn::Relaxed { width } => width,
        }
    }

    #[inline]
    pub fn forward(&self, v: f64) -> f64 {
        match *self {
            SpikeFn::Hard { .. } => {
                if v > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            SpikeFn::Relaxed { width } => ramp(v, width),
        }
    }

    #[inline]
    pub fn derivative(&self, v: f64) -> f64 {
        triangle(v, self.width())
    }
}

/// Forward spike and pseudo-derivative for a margin `v` under hard thresholding.
pub fn surrogate_spike(v: f64, width: f64) -> (bool, f64) {
    (v > 0.0, triangle(v, width))
}

#[inline]
pub fn triangle(v: f64, width: f64) -> f64 {
    (1.0 - v.abs() / width).max(0.0) / width
}

/// Primitive of [`triangle`], normalised to run from 0 to 1.
#[inline]
pub fn ramp(v: f64, width: f64) -> f64 {
    if v <= -width {
        0.0
    } else if v <= 0.0 {
        let a = v + width;
        a * a / (2.0 * width * width)
    } else if v < width {
        let a = width - v;
        1.0 - a * a / (2.0 * width * width)
    } else {
        1.0
    }
}
