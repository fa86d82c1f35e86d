//! Time-tagged detection streams: a synthetic photon-pair source and the
//! binary tag file format.
//!
//! File layout, little-endian: a 16-byte header (`b"TTAG"`, u16 version,
//! u16 channel count, u64 record count) followed by 16-byte records
//! (u16 channel, u16 zero, u32 zero, u64 timestamp in ps).

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"TTAG";
pub const VERSION: u16 = 1;
pub const HEADER_BYTES: usize = 16;
pub const RECORD_BYTES: usize = 16;

pub const SIGNAL: u16 = 0;
pub const IDLER_A: u16 = 1;
pub const IDLER_B: u16 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TagRecord {
    pub timestamp_ps: u64,
    pub channel: u16,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagStream {
    channel_count: u16,
    records: Vec<TagRecord>,
}

impl TagStream {
    /// Records need not be sorted; analysis checks order where it matters.
    pub fn new(channel_count: u16, records: Vec<TagRecord>) -> Result<Self> {
        if let Some(r) = records.iter().find(|r| r.channel >= channel_count) {
            return Err(Error::InvalidInput(format!(
                "channel {} outside the declared {channel_count} channels",
                r.channel
            )));
        }
        Ok(Self {
            channel_count,
            records,
        })
    }

    pub fn channel_count(&self) -> u16 {
        self.channel_count
    }

    pub fn records(&self) -> &[TagRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Index of the first record earlier than its predecessor.
    pub fn first_unsorted(&self) -> Option<usize> {
        self.records
            .windows(2)
            .position(|w| w[1].timestamp_ps < w[0].timestamp_ps)
            .map(|i| i + 1)
    }

    pub fn ensure_sorted(&self) -> Result<()> {
        match self.first_unsorted() {
            Some(index) => Err(Error::UnsortedStream { index }),
            None => Ok(()),
        }
    }

    /// Timestamps of one channel, in stream order.
    pub fn channel_times(&self, channel: u16) -> Vec<u64> {
        self.records
            .iter()
            .filter(|r| r.channel == channel)
            .map(|r| r.timestamp_ps)
            .collect()
    }

    pub fn counts_per_channel(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.channel_count as usize];
        for r in &self.records {
            counts[r.channel as usize] += 1;
        }
        counts
    }

    /// Adds a constant offset to every timestamp.
    pub fn shifted(&self, offset_ps: u64) -> Self {
        Self {
            channel_count: self.channel_count,
            records: self
                .records
                .iter()
                .map(|r| TagRecord {
                    timestamp_ps: r.timestamp_ps + offset_ps,
                    channel: r.channel,
                })
                .collect(),
        }
    }

    /// Exchanges two channel labels.
    pub fn swapped(&self, a: u16, b: u16) -> Self {
        let swap = |c: u16| if c == a { b } else if c == b { a } else { c };
        Self {
            channel_count: self.channel_count,
            records: self
                .records
                .iter()
                .map(|r| TagRecord {
                    timestamp_ps: r.timestamp_ps,
                    channel: swap(r.channel),
                })
                .collect(),
        }
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let mut header = [0u8; HEADER_BYTES];
        header[0..4].copy_from_slice(&MAGIC);
        header[4..6].copy_from_slice(&VERSION.to_le_bytes());
        header[6..8].copy_from_slice(&self.channel_count.to_le_bytes());
        header[8..16].copy_from_slice(&(self.records.len() as u64).to_le_bytes());
        out.write_all(&header)?;
        let mut rec = [0u8; RECORD_BYTES];
        for r in &self.records {
            rec[0..2].copy_from_slice(&r.channel.to_le_bytes());
            rec[8..16].copy_from_slice(&r.timestamp_ps.to_le_bytes());
            out.write_all(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(HEADER_BYTES + RECORD_BYTES * self.records.len());
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        let mut header = [0u8; HEADER_BYTES];
        input
            .read_exact(&mut header)
            .map_err(|_| Error::TagFormat("file shorter than the 16-byte header".into()))?;
        if header[0..4] != MAGIC {
            return Err(Error::TagFormat("bad magic, expected TTAG".into()));
        }
        let version = u16::from_le_bytes([header[4], header[5]]);
        if version != VERSION {
            return Err(Error::TagFormat(format!("unsupported version {version}")));
        }
        let channel_count = u16::from_le_bytes([header[6], header[7]]);
        let count = u64::from_le_bytes(header[8..16].try_into().unwrap());
        let mut records = Vec::with_capacity(count.min(1 << 24) as usize);
        let mut rec = [0u8; RECORD_BYTES];
        for k in 0..count {
            input
                .read_exact(&mut rec)
                .map_err(|_| Error::TagFormat(format!("truncated at record {k} of {count}")))?;
            if rec[2..8].iter().any(|&b| b != 0) {
                return Err(Error::TagFormat(format!("non-zero reserved bytes in record {k}")));
            }
            records.push(TagRecord {
                channel: u16::from_le_bytes([rec[0], rec[1]]),
                timestamp_ps: u64::from_le_bytes(rec[8..16].try_into().unwrap()),
            });
        }
        let mut extra = [0u8; 1];
        if input.read(&mut extra)? != 0 {
            return Err(Error::TagFormat("trailing bytes after the declared records".into()));
        }
        Self::new(channel_count, records).map_err(|e| Error::TagFormat(e.to_string()))
    }
}

/// Synthetic photon-pair source with lossy, jittery, noisy detectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub pair_rate_hz: f64,
    pub duration_s: f64,
    pub eta_s: f64,
    pub eta_i: f64,
    /// Dark count rate of the signal detector.
    pub dark_s_hz: f64,
    /// Dark count rate of each idler detector.
    pub dark_i_hz: f64,
    pub jitter_sigma_ps: f64,
    /// Idler split 50:50 onto channels 1 and 2.
    pub splitter: bool,
    pub seed: u64,
}

impl SourceConfig {
    pub fn validate(&self) -> Result<()> {
        let non_negative = [
            ("pair_rate_hz", self.pair_rate_hz),
            ("dark_s_hz", self.dark_s_hz),
            ("dark_i_hz", self.dark_i_hz),
            ("jitter_sigma_ps", self.jitter_sigma_ps),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be non-negative, got {v}")));
            }
        }
        for (name, v) in [("eta_s", self.eta_s), ("eta_i", self.eta_i)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidInput(format!("{name} must lie in (0, 1], got {v}")));
            }
        }
        if !(self.duration_s > 0.0 && self.duration_s * 1e12 < u64::MAX as f64 / 2.0) {
            return Err(Error::InvalidInput(format!("duration must be positive, got {}", self.duration_s)));
        }
        Ok(())
    }

    pub fn channel_count(&self) -> u16 {
        if self.splitter {
            3
        } else {
            2
        }
    }

    pub fn duration_ps(&self) -> u64 {
        (self.duration_s * 1e12).round() as u64
    }
}

/// Poisson arrival times in [0, duration) ps.
fn poisson_times(rng: &mut ChaCha8Rng, rate_hz: f64, duration_ps: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if rate_hz <= 0.0 {
        return out;
    }
    let gap = Exp::new(rate_hz * 1e-12).expect("positive rate");
    let mut t = gap.sample(rng);
    while t < duration_ps {
        out.push(t);
        t += gap.sample(rng);
    }
    out
}

/// Generates a sorted stream, fully determined by the config and its seed.
pub fn simulate_tags(cfg: &SourceConfig) -> Result<TagStream> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let duration_ps = cfg.duration_ps();
    let span = duration_ps as f64;
    let jitter = Normal::new(0.0, cfg.jitter_sigma_ps).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut records = Vec::new();
    let push = |t: f64, channel: u16, records: &mut Vec<TagRecord>| {
        let ts = t.round();
        if ts >= 0.0 && ts < span {
            records.push(TagRecord {
                timestamp_ps: ts as u64,
                channel,
            });
        }
    };
    for t in poisson_times(&mut rng, cfg.pair_rate_hz, span) {
        // Fixed draw order per pair keeps streams reproducible.
        let keep_s = rng.random::<f64>() < cfg.eta_s;
        let keep_i = rng.random::<f64>() < cfg.eta_i;
        let arm_b = rng.random::<bool>();
        let js = jitter.sample(&mut rng);
        let ji = jitter.sample(&mut rng);
        if keep_s {
            push(t + js, SIGNAL, &mut records);
        }
        if keep_i {
            let ch = if cfg.splitter && arm_b { IDLER_B } else { IDLER_A };
            push(t + ji, ch, &mut records);
        }
    }
    let mut darks = vec![(SIGNAL, cfg.dark_s_hz), (IDLER_A, cfg.dark_i_hz)];
    if cfg.splitter {
        darks.push((IDLER_B, cfg.dark_i_hz));
    }
    for (ch, rate) in darks {
        for t in poisson_times(&mut rng, rate, span) {
            push(t, ch, &mut records);
        }
    }
    records.sort_unstable();
    TagStream::new(cfg.channel_count(), records)
}
