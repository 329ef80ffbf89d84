//! Flat views of trainable tensors and their gradients.
//!
//! Networks and gradients enumerate their tensors in the same fixed order:
//! per layer `w_re`, `w_im`, `v`, `omega` (resonators only), `b_hat`; then the
//! readout. Optimisers and finite-difference checks index into that order.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::SplitNetwork;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParamClass {
    FeedForward,
    FeedForwardImag,
    Recurrent,
    Omega,
    BHat,
    Readout,
}

impl ParamClass {
    /// Neuron-intrinsic parameters (the ones calibration adjusts).
    pub fn is_neuron(self) -> bool {
        matches!(self, ParamClass::Omega | ParamClass::BHat)
    }

    pub fn name(self) -> &'static str {
        match self {
            ParamClass::FeedForward => "w",
            ParamClass::FeedForwardImag => "w_im",
            ParamClass::Recurrent => "v",
            ParamClass::Omega => "omega",
            ParamClass::BHat => "b_hat",
            ParamClass::Readout => "readout",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParamId {
    /// `None` for the readout.
    pub layer: Option<usize>,
    pub class: ParamClass,
}

impl std::fmt::Display for ParamId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.layer {
            Some(l) => write!(f, "layer{}/{}", l, self.class.name()),
            None => write!(f, "readout/{}", self.class.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub w_re: Array2<f64>,
    pub w_im: Option<Array2<f64>>,
    pub v: Option<Array2<f64>>,
    pub omega: Array1<f64>,
    pub b_hat: Array1<f64>,
    resonator: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGrad {
    pub layers: Vec<LayerGrad>,
    pub readout: Array2<f64>,
}

impl NetworkGrad {
    pub fn zeros_like(net: &SplitNetwork) -> Self {
        let layers = net
            .layers
            .iter()
            .map(|l| LayerGrad {
                w_re: Array2::zeros(l.w_re.dim()),
                w_im: l.w_im.as_ref().map(|w| Array2::zeros(w.dim())),
                v: l.v.as_ref().map(|v| Array2::zeros(v.dim())),
                omega: Array1::zeros(l.size),
                b_hat: Array1::zeros(l.size),
                resonator: l.kind.is_resonator(),
            })
            .collect();
        NetworkGrad {
            layers,
            readout: Array2::zeros(net.readout.w.dim()),
        }
    }

    pub fn tensors(&self) -> Vec<(ParamId, &[f64])> {
        let mut out = Vec::new();
        for (l, g) in self.layers.iter().enumerate() {
            let id = |class| ParamId {
                layer: Some(l),
                class,
            };
            out.push((id(ParamClass::FeedForward), g.w_re.as_slice().unwrap()));
            if let Some(w) = &g.w_im {
                out.push((id(ParamClass::FeedForwardImag), w.as_slice().unwrap()));
            }
            if let Some(v) = &g.v {
                out.push((id(ParamClass::Recurrent), v.as_slice().unwrap()));
            }
            if g.resonator {
                out.push((id(ParamClass::Omega), g.omega.as_slice().unwrap()));
            }
            out.push((id(ParamClass::BHat), g.b_hat.as_slice().unwrap()));
        }
        out.push((
            ParamId {
                layer: None,
                class: ParamClass::Readout,
            },
            self.readout.as_slice().unwrap(),
        ));
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for g in &mut self.layers {
            out.push(g.w_re.as_slice_mut().unwrap());
            if let Some(w) = &mut g.w_im {
                out.push(w.as_slice_mut().unwrap());
            }
            if let Some(v) = &mut g.v {
                out.push(v.as_slice_mut().unwrap());
            }
            if g.resonator {
                out.push(g.omega.as_slice_mut().unwrap());
            }
            out.push(g.b_hat.as_slice_mut().unwrap());
        }
        out.push(self.readout.as_slice_mut().unwrap());
        out
    }

    pub fn add_assign(&mut self, other: &NetworkGrad) {
        let src = other.tensors();
        for (dst, (_, s)) in self.tensors_mut().into_iter().zip(src) {
            for (d, &x) in dst.iter_mut().zip(s) {
                *d += x;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|x| *x *= factor);
        }
    }

    /// Zeroes every class for which `keep` is false.
    pub fn mask(&mut self, keep: impl Fn(ParamClass) -> bool) {
        let ids: Vec<ParamId> = self.tensors().into_iter().map(|(id, _)| id).collect();
        for (id, t) in ids.into_iter().zip(self.tensors_mut()) {
            if !keep(id.class) {
                t.iter_mut().for_each(|x| *x = 0.0);
            }
        }
    }

    pub fn norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|(_, t)| t.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    pub fn check_finite(&self) -> Result<()> {
        for (id, t) in self.tensors() {
            if t.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFiniteGradient {
                    layer: id
                        .layer
                        .map_or_else(|| "readout".to_string(), |l| format!("layer{l}")),
                    param: id.class.name().to_string(),
                });
            }
        }
        Ok(())
    }
}

impl SplitNetwork {
    /// Mutable views over every trainable tensor, in gradient order.
    pub fn tensors_mut(&mut self) -> Vec<(ParamId, &mut [f64])> {
        let mut out: Vec<(ParamId, &mut [f64])> = Vec::new();
        for (l, layer) in self.layers.iter_mut().enumerate() {
            let id = |class| ParamId {
                layer: Some(l),
                class,
            };
            out.push((
                id(ParamClass::FeedForward),
                layer.w_re.as_slice_mut().unwrap(),
            ));
            if let Some(w) = &mut layer.w_im {
                out.push((id(ParamClass::FeedForwardImag), w.as_slice_mut().unwrap()));
            }
            if let Some(v) = &mut layer.v {
                out.push((id(ParamClass::Recurrent), v.as_slice_mut().unwrap()));
            }
            if layer.kind.is_resonator() {
                out.push((id(ParamClass::Omega), layer.omega.as_slice_mut().unwrap()));
            }
            out.push((id(ParamClass::BHat), layer.b_hat.as_slice_mut().unwrap()));
        }
        out.push((
            ParamId {
                layer: None,
                class: ParamClass::Readout,
            },
            self.readout.w.as_slice_mut().unwrap(),
        ));
        out
    }
}
