//! Labelled sequence collections.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::InputSeq;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub input: InputSeq,
    pub label: usize,
}

/// An immutable set of equally shaped samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub classes: usize,
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, classes: usize, samples: Vec<Sample>) -> Result<Self> {
        let ds = Dataset {
            name: name.into(),
            classes,
            samples,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let Some(first) = self.samples.first() else {
            return Ok(());
        };
        let (steps, width, complex) = (
            first.input.steps(),
            first.input.width(),
            first.input.is_complex(),
        );
        for (i, s) in self.samples.iter().enumerate() {
            if s.label >= self.classes {
                return Err(Error::InvalidParam(format!(
                    "sample {i}: label {} >= {} classes",
                    s.label, self.classes
                )));
            }
            if s.input.steps() != steps
                || s.input.width() != width
                || s.input.is_complex() != complex
            {
                return Err(Error::InvalidParam(format!(
                    "sample {i}: shape differs from sample 0"
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.samples.first().map_or(0, |s| s.input.width())
    }

    pub fn steps(&self) -> usize {
        self.samples.first().map_or(0, |s| s.input.steps())
    }

    pub fn is_complex(&self) -> bool {
        self.samples.first().is_some_and(|s| s.input.is_complex())
    }

    pub fn label_histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.classes];
        for s in &self.samples {
            h[s.label] += 1;
        }
        h
    }

    fn with_samples(&self, name: &str, samples: Vec<Sample>) -> Dataset {
        Dataset {
            name: format!("{}-{name}", self.name),
            classes: self.classes,
            samples,
        }
    }

    /// Stratified split: within every class a shuffled `train_fraction`
    /// share goes to the first set. Class order is preserved.
    pub fn split_stratified(&self, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        if !(0.0..=1.0).contains(&train_fraction) {
            return Err(Error::InvalidParam(
                "train fraction must be in [0, 1]".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); self.classes];
        for (i, s) in self.samples.iter().enumerate() {
            by_class[s.label].push(i);
        }
        let mut train = Vec::new();
        let mut test = Vec::new();
        for idx in &mut by_class {
            idx.shuffle(&mut rng);
            let n_train = (idx.len() as f64 * train_fraction).round() as usize;
            train.extend_from_slice(&idx[..n_train]);
            test.extend_from_slice(&idx[n_train..]);
        }
        train.sort_unstable();
        test.sort_unstable();
        let pick = |ix: &[usize]| ix.iter().map(|&i| self.samples[i].clone()).collect();
        Ok((
            self.with_samples("train", pick(&train)),
            self.with_samples("test", pick(&test)),
        ))
    }

    /// Stratified subset holding `fraction` of the samples (at least one per
    /// non-empty class).
    pub fn subset(&self, fraction: f64, seed: u64) -> Result<Dataset> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::InvalidParam(
                "subset fraction must be in (0, 1]".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); self.classes];
        for (i, s) in self.samples.iter().enumerate() {
            by_class[s.label].push(i);
        }
        let mut keep = Vec::new();
        for idx in &mut by_class {
            if idx.is_empty() {
                continue;
            }
            idx.shuffle(&mut rng);
            let n = ((idx.len() as f64 * fraction).round() as usize).clamp(1, idx.len());
            keep.extend_from_slice(&idx[..n]);
        }
        keep.sort_unstable();
        Ok(self.with_samples(
            "subset",
            keep.iter().map(|&i| self.samples[i].clone()).collect(),
        ))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let ds: Dataset = serde_json::from_slice(&std::fs::read(path)?)?;
        ds.validate()?;
        Ok(ds)
    }
}
