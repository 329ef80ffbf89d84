//! `EVT1` event files and time binning into spike rasters.
//!
//! Layout (little-endian):
//!
//! | offset | type      | field                                   |
//! |--------|-----------|-----------------------------------------|
//! | 0      | `[u8; 4]` | magic `EVT1`                            |
//! | 4      | `u32`     | channel count                           |
//! | 8      | `u8`      | time unit: 0 = s, 1 = ms, 2 = µs        |
//! | 9      | `[u8; 3]` | reserved, zero                          |
//! | 12     | `i32`     | label, `-1` when unlabelled             |
//! | 16     | `f64`     | duration, in the file's time unit       |
//! | 24     | `u64`     | event count `n`                         |
//! | 32     | `n x 12`  | events: `u32` channel, `f64` timestamp  |
//!
//! Events are sorted by timestamp.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::bytes::Reader;
use crate::error::{Error, Result};
use crate::raster::SpikeRaster;

pub const EVENT_MAGIC: &[u8; 4] = b"EVT1";
const HEADER_LEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeUnit {
    Seconds,
    Millis,
    Micros,
}

impl TimeUnit {
    pub fn code(self) -> u8 {
        match self {
            TimeUnit::Seconds => 0,
            TimeUnit::Millis => 1,
            TimeUnit::Micros => 2,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(TimeUnit::Seconds),
            1 => Some(TimeUnit::Millis),
            2 => Some(TimeUnit::Micros),
            _ => None,
        }
    }

    /// Seconds per unit.
    pub fn seconds(self) -> f64 {
        match self {
            TimeUnit::Seconds => 1.0,
            TimeUnit::Millis => 1e-3,
            TimeUnit::Micros => 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub channel: u32,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventFile {
    pub n_channels: u32,
    pub time_unit: TimeUnit,
    pub label: Option<u32>,
    pub duration: f64,
    pub events: Vec<Event>,
}

impl EventFile {
    pub fn validate(&self) -> Result<()> {
        let mut last = f64::NEG_INFINITY;
        for (i, e) in self.events.iter().enumerate() {
            if e.channel >= self.n_channels {
                return Err(Error::InvalidParam(format!(
                    "event {i}: channel {} >= {}",
                    e.channel, self.n_channels
                )));
            }
            if !e.time.is_finite() || e.time < last {
                return Err(Error::InvalidParam(format!(
                    "event {i}: timestamps must be non-decreasing"
                )));
            }
            last = e.time;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 12 * self.events.len());
        out.extend_from_slice(EVENT_MAGIC);
        out.extend_from_slice(&self.n_channels.to_le_bytes());
        out.extend_from_slice(&[self.time_unit.code(), 0, 0, 0]);
        let label = self.label.map_or(-1, |l| l as i32);
        out.extend_from_slice(&label.to_le_bytes());
        out.extend_from_slice(&self.duration.to_le_bytes());
        out.extend_from_slice(&(self.events.len() as u64).to_le_bytes());
        for e in &self.events {
            out.extend_from_slice(&e.channel.to_le_bytes());
            out.extend_from_slice(&e.time.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader::new(buf);
        if &r.array::<4>("magic")? != EVENT_MAGIC {
            return Err(Error::Parse {
                offset: 0,
                msg: "bad magic, expected EVT1".into(),
            });
        }
        let n_channels = r.u32("channel count")?;
        let at = r.offset();
        let time_unit = match TimeUnit::from_code(r.u8("time unit")?) {
            Some(u) => u,
            None => {
                return Err(Error::Parse {
                    offset: at,
                    msg: "unknown time unit".into(),
                })
            }
        };
        r.take(3, "reserved")?;
        let label = r.i32("label")?;
        let label = if label < 0 { None } else { Some(label as u32) };
        let duration = r.f64("duration")?;
        let n = r.u64("event count")?;
        let fits = (buf.len() - r.offset()) / 12;
        let mut events = Vec::with_capacity((n as usize).min(fits));
        let mut last = f64::NEG_INFINITY;
        for _ in 0..n {
            let at = r.offset();
            let channel = r.u32("event channel")?;
            let time = r.f64("event timestamp")?;
            if channel >= n_channels {
                return Err(Error::Parse {
                    offset: at,
                    msg: format!("channel {channel} >= {n_channels}"),
                });
            }
            if !time.is_finite() || time < last {
                return Err(Error::Parse {
                    offset: at + 4,
                    msg: "timestamps must be finite and non-decreasing".into(),
                });
            }
            last = time;
            events.push(Event { channel, time });
        }
        r.finish()?;
        Ok(EventFile {
            n_channels,
            time_unit,
            label,
            duration,
            events,
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        self.validate()?;
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }
}

/// Bins events into `t_max` half-open bins `[k w, (k+1) w)` of width
/// `bin_width` seconds. A bin is set if any event lands in it; events past
/// the last bin are dropped and missing bins stay zero.
pub fn bin_events(file: &EventFile, bin_width: f64, t_max: usize) -> Result<SpikeRaster> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::InvalidParam("bin width must be positive".into()));
    }
    let mut raster = SpikeRaster::zeros(t_max, file.n_channels as usize);
    let unit = file.time_unit.seconds();
    for e in &file.events {
        let t = e.time * unit;
        if t < 0.0 {
            continue;
        }
        let mut k = (t / bin_width).floor();
        // guard against `t / w` rounding just below an exact boundary
        if (k + 1.0) * bin_width <= t {
            k += 1.0;
        }
        let k = k as usize;
        if k < t_max {
            raster.set(k, e.channel as usize, true);
        }
    }
    Ok(raster)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(times_ms: &[f64]) -> EventFile {
        EventFile {
            n_channels: 2,
            time_unit: TimeUnit::Millis,
            label: Some(3),
            duration: 1000.0,
            events: times_ms
                .iter()
                .map(|&t| Event {
                    channel: 1,
                    time: t,
                })
                .collect(),
        }
    }

    #[test]
    fn no_events_is_empty() {
        let r = bin_events(&file(&[]), 4e-3, 10).unwrap();
        assert_eq!(r.count(), 0);
        assert_eq!(r.steps(), 10);
    }

    #[test]
    fn events_in_one_bin_collapse() {
        let r = bin_events(&file(&[1.0, 3.0, 3.5]), 4e-3, 5).unwrap();
        assert_eq!(r.count(), 1);
        assert!(r.get(0, 1));
    }

    #[test]
    fn boundary_goes_to_later_bin() {
        let r = bin_events(&file(&[4.0, 8.0, 12.0]), 4e-3, 5).unwrap();
        assert!(!r.get(0, 1));
        assert!(r.get(1, 1) && r.get(2, 1) && r.get(3, 1));
    }

    #[test]
    fn truncates_to_t_max() {
        let r = bin_events(&file(&[1.0, 100.0]), 4e-3, 3).unwrap();
        assert_eq!(r.count(), 1);
    }

    #[test]
    fn round_trip_is_exact() {
        let f = file(&[0.25, 1.0 / 3.0, 7.0]);
        assert_eq!(EventFile::from_bytes(&f.to_bytes()).unwrap(), f);
    }

    #[test]
    fn corrupt_files_report_offset() {
        let f = file(&[1.0, 2.0]);
        let bytes = f.to_bytes();
        match EventFile::from_bytes(&bytes[..bytes.len() - 3]) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 32 + 12 + 4),
            other => panic!("{other:?}"),
        }
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(
            EventFile::from_bytes(&bad),
            Err(Error::Parse { offset: 0, .. })
        ));
        let mut bad = bytes;
        bad[32..36].copy_from_slice(&9u32.to_le_bytes());
        assert!(matches!(
            EventFile::from_bytes(&bad),
            Err(Error::Parse { offset: 32, .. })
        ));
    }
}
