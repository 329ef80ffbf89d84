//! Building datasets from directories of event and IQ files.

use std::path::{Path, PathBuf};

use ndarray::Array2;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Sample};
use super::events::{bin_events, EventFile};
use super::iq::{add_awgn, IqFile};
use crate::error::{Error, Result};
use crate::network::InputSeq;

/// Spike-raster defaults: 4 ms bins, 250 steps.
pub const SHD_BIN_WIDTH: f64 = 4e-3;
pub const SHD_STEPS: usize = 250;
/// IQ defaults: a 44 µs window at 5 Msps.
pub const ITS_WINDOW: usize = 220;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventConversion {
    pub bin_width: f64,
    pub steps: usize,
}

impl Default for EventConversion {
    fn default() -> Self {
        EventConversion {
            bin_width: SHD_BIN_WIDTH,
            steps: SHD_STEPS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IqConversion {
    /// Samples kept per record, zero-padded if shorter.
    pub window: usize,
    /// AWGN added per record; `None` leaves samples clean.
    pub snr_db: Option<f64>,
    pub seed: u64,
}

impl Default for IqConversion {
    fn default() -> Self {
        IqConversion {
            window: ITS_WINDOW,
            snr_db: None,
            seed: 0,
        }
    }
}

/// Files in `dir` with extension `ext`, sorted by name.
pub fn list_files(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == ext))
        .collect();
    files.sort();
    Ok(files)
}

fn label_of(label: Option<u32>, path: &Path) -> Result<usize> {
    label
        .map(|l| l as usize)
        .ok_or_else(|| Error::InvalidParam(format!("{}: record has no label", path.display())))
}

fn class_count(samples: &[Sample], classes: Option<usize>) -> usize {
    classes.unwrap_or_else(|| samples.iter().map(|s| s.label + 1).max().unwrap_or(0))
}

/// Bins every event file into a real input sequence.
pub fn dataset_from_events(
    name: &str,
    files: &[PathBuf],
    conv: &EventConversion,
    classes: Option<usize>,
) -> Result<Dataset> {
    let mut samples = Vec::with_capacity(files.len());
    for path in files {
        let f = EventFile::read(path)?;
        let raster = bin_events(&f, conv.bin_width, conv.steps)?;
        samples.push(Sample {
            input: InputSeq::real(raster.to_matrix()),
            label: label_of(f.label, path)?,
        });
    }
    let classes = class_count(&samples, classes);
    Dataset::new(name, classes, samples)
}

/// Windows every IQ file into a one-channel complex sequence, with optional
/// per-record noise on its own seeded stream.
pub fn dataset_from_iq(
    name: &str,
    files: &[PathBuf],
    conv: &IqConversion,
    classes: Option<usize>,
) -> Result<Dataset> {
    let mut samples = Vec::with_capacity(files.len());
    for (i, path) in files.iter().enumerate() {
        let f = IqFile::read(path)?;
        let mut x: Vec<Complex64> = f.to_complex64();
        x.truncate(conv.window);
        if let Some(snr) = conv.snr_db {
            let mut rng = ChaCha8Rng::seed_from_u64(conv.seed.wrapping_add(i as u64));
            x = add_awgn(&x, snr, &mut rng)?;
        }
        x.resize(conv.window, Complex64::new(0.0, 0.0));
        let m = Array2::from_shape_vec((conv.window, 1), x).expect("window x 1");
        samples.push(Sample {
            input: InputSeq::complex(&m),
            label: label_of(f.label, path)?,
        });
    }
    let classes = class_count(&samples, classes);
    Dataset::new(name, classes, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::events::{Event, TimeUnit};
    use num_complex::Complex32;

    #[test]
    fn converts_directories() {
        let dir = tempfile::tempdir().unwrap();
        for (i, label) in [0u32, 1, 1].iter().enumerate() {
            EventFile {
                n_channels: 3,
                time_unit: TimeUnit::Millis,
                label: Some(*label),
                duration: 20.0,
                events: vec![Event {
                    channel: 2,
                    time: 5.0,
                }],
            }
            .write(dir.path().join(format!("s{i}.evt")))
            .unwrap();
            IqFile {
                label: Some(*label),
                sample_rate: 5e6,
                samples: vec![Complex32::new(1.0, -1.0); 300],
            }
            .write(dir.path().join(format!("s{i}.iq")))
            .unwrap();
        }
        let ev = list_files(dir.path(), "evt").unwrap();
        let ds = dataset_from_events("ev", &ev, &EventConversion::default(), None).unwrap();
        assert_eq!(
            (ds.len(), ds.classes, ds.steps(), ds.input_dim()),
            (3, 2, 250, 3)
        );
        assert_eq!(ds.samples[0].input.re[[1, 2]], 1.0);

        let iq = list_files(dir.path(), "iq").unwrap();
        let conv = IqConversion {
            window: 220,
            snr_db: Some(0.0),
            seed: 1,
        };
        let ds = dataset_from_iq("iq", &iq, &conv, Some(6)).unwrap();
        assert_eq!(
            (ds.len(), ds.classes, ds.steps(), ds.input_dim()),
            (3, 6, 220, 1)
        );
        assert!(ds.is_complex());
        assert_ne!(ds.samples[0].input.re[[0, 0]], 1.0);
    }
}
