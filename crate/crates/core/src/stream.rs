//! Time-tagged detector clicks and their file formats.
//!
//! Binary layout (`IONCLK1`, little-endian):
//!
//! ```text
//! magic   7 bytes  "IONCLK1"
//! channel u32
//! count   u64
//! duration_ps u64
//! count × { timestamp_ps u64, polarization u8, wavelength u8 }
//! ```
//!
//! Tag bytes: polarization 0 = σ⁻, 1 = σ⁺, 2 = π; wavelength 0 = 397 nm,
//! 1 = 866 nm; 255 marks an unknown tag (dark counts, hardware channels).
//!
//! The CSV mirror has the columns `timestamp_ps,pol,wavelength` and
//! optional `# key=value` header lines.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::atom::{Polarization, Wavelength};
use crate::{Error, Result};

pub const MAGIC: &[u8; 7] = b"IONCLK1";
pub const TAG_NONE: u8 = 255;

/// One detector click.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ClickEvent {
    pub timestamp_ps: u64,
    pub polarization: Option<Polarization>,
    pub wavelength: Option<Wavelength>,
}

impl ClickEvent {
    pub fn new(timestamp_ps: u64, polarization: Option<Polarization>, wavelength: Option<Wavelength>) -> Self {
        ClickEvent { timestamp_ps, polarization, wavelength }
    }
}

pub fn polarization_code(p: Option<Polarization>) -> u8 {
    match p {
        Some(Polarization::SigmaMinus) => 0,
        Some(Polarization::SigmaPlus) => 1,
        Some(Polarization::Pi) => 2,
        None => TAG_NONE,
    }
}

pub fn polarization_from_code(c: u8) -> Result<Option<Polarization>> {
    match c {
        0 => Ok(Some(Polarization::SigmaMinus)),
        1 => Ok(Some(Polarization::SigmaPlus)),
        2 => Ok(Some(Polarization::Pi)),
        TAG_NONE => Ok(None),
        _ => Err(Error::Format(format!("unknown polarization tag {c}"))),
    }
}

pub fn wavelength_code(w: Option<Wavelength>) -> u8 {
    match w {
        Some(Wavelength::Nm397) => 0,
        Some(Wavelength::Nm866) => 1,
        None => TAG_NONE,
    }
}

pub fn wavelength_from_code(c: u8) -> Result<Option<Wavelength>> {
    match c {
        0 => Ok(Some(Wavelength::Nm397)),
        1 => Ok(Some(Wavelength::Nm866)),
        TAG_NONE => Ok(None),
        _ => Err(Error::Format(format!("unknown wavelength tag {c}"))),
    }
}

/// Provenance carried alongside a stream. Not part of the binary format.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StreamMetadata {
    pub seed: Option<u64>,
    pub params_fingerprint: Option<String>,
    pub efficiency: Option<f64>,
}

/// Clicks of one detector channel over an observation window
/// `[0, duration_ps]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickStream {
    pub channel: u32,
    pub events: Vec<ClickEvent>,
    pub duration_ps: u64,
    pub metadata: StreamMetadata,
}

impl ClickStream {
    pub fn new(channel: u32, events: Vec<ClickEvent>, duration_ps: u64) -> Result<Self> {
        let s = ClickStream { channel, events, duration_ps, metadata: StreamMetadata::default() };
        s.validate()?;
        Ok(s)
    }

    /// Builds a stream from unsorted timestamps, dropping duplicates.
    pub fn from_unsorted(channel: u32, mut events: Vec<ClickEvent>, duration_ps: u64) -> Result<Self> {
        events.sort_by_key(|e| e.timestamp_ps);
        events.dedup_by_key(|e| e.timestamp_ps);
        Self::new(channel, events, duration_ps)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(i) = self.events.windows(2).position(|w| w[1].timestamp_ps <= w[0].timestamp_ps) {
            return Err(Error::UnsortedStream { index: i + 1 });
        }
        if let Some(last) = self.events.last() {
            if last.timestamp_ps > self.duration_ps {
                return Err(Error::Format(format!(
                    "timestamp {} beyond duration {}",
                    last.timestamp_ps, self.duration_ps
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn timestamps(&self) -> Vec<u64> {
        self.events.iter().map(|e| e.timestamp_ps).collect()
    }

    /// Mean click rate in s⁻¹.
    pub fn rate(&self) -> f64 {
        if self.duration_ps == 0 {
            0.0
        } else {
            self.events.len() as f64 / (self.duration_ps as f64 * 1e-12)
        }
    }

    /// Events whose tags match; `None` accepts any tag.
    pub fn filtered(&self, polarization: Option<Polarization>, wavelength: Option<Wavelength>) -> ClickStream {
        let events = self
            .events
            .iter()
            .filter(|e| polarization.is_none() || e.polarization == polarization)
            .filter(|e| wavelength.is_none() || e.wavelength == wavelength)
            .copied()
            .collect();
        ClickStream { events, ..self.clone() }
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&self.channel.to_le_bytes())?;
        w.write_all(&(self.events.len() as u64).to_le_bytes())?;
        w.write_all(&self.duration_ps.to_le_bytes())?;
        for e in &self.events {
            w.write_all(&e.timestamp_ps.to_le_bytes())?;
            w.write_all(&[polarization_code(e.polarization), wavelength_code(e.wavelength)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_binary(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(27 + 10 * self.events.len());
        self.write_binary(&mut out).expect("writing to memory");
        out
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 7];
        r.read_exact(&mut magic).map_err(truncated)?;
        if &magic != MAGIC {
            return Err(Error::Format("missing IONCLK1 magic".into()));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4).map_err(truncated)?;
        let channel = u32::from_le_bytes(b4);
        r.read_exact(&mut b8).map_err(truncated)?;
        let count = u64::from_le_bytes(b8);
        r.read_exact(&mut b8).map_err(truncated)?;
        let duration_ps = u64::from_le_bytes(b8);

        let mut events = Vec::with_capacity(count.min(1 << 24) as usize);
        let mut rec = [0u8; 10];
        for _ in 0..count {
            r.read_exact(&mut rec).map_err(truncated)?;
            let ts = u64::from_le_bytes(rec[..8].try_into().expect("8 bytes"));
            events.push(ClickEvent {
                timestamp_ps: ts,
                polarization: polarization_from_code(rec[8])?,
                wavelength: wavelength_from_code(rec[9])?,
            });
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::Format("trailing bytes after last event".into()));
        }
        Self::new(channel, events, duration_ps)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# channel={}", self.channel)?;
        writeln!(w, "# duration_ps={}", self.duration_ps)?;
        if let Some(seed) = self.metadata.seed {
            writeln!(w, "# seed={seed}")?;
        }
        if let Some(fp) = &self.metadata.params_fingerprint {
            writeln!(w, "# params={fp}")?;
        }
        if let Some(eta) = self.metadata.efficiency {
            writeln!(w, "# efficiency={eta}")?;
        }
        writeln!(w, "timestamp_ps,pol,wavelength")?;
        for e in &self.events {
            writeln!(
                w,
                "{},{},{}",
                e.timestamp_ps,
                e.polarization.map_or("none", |p| p.label()),
                e.wavelength.map_or_else(|| "none".to_string(), |l| l.nanometres().to_string()),
            )?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the CSV mirror. Without a `duration_ps` header the duration is
    /// the last timestamp.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut channel = 0u32;
        let mut duration = None;
        let mut metadata = StreamMetadata::default();
        let mut events = Vec::new();
        for (lineno, line) in BufReader::new(r).lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(kv) = line.strip_prefix('#') {
                if let Some((k, v)) = kv.trim().split_once('=') {
                    let bad = || Error::Format(format!("line {}: bad header value {v:?}", lineno + 1));
                    match k.trim() {
                        "channel" => channel = v.trim().parse().map_err(|_| bad())?,
                        "duration_ps" => duration = Some(v.trim().parse().map_err(|_| bad())?),
                        "seed" => metadata.seed = Some(v.trim().parse().map_err(|_| bad())?),
                        "params" => metadata.params_fingerprint = Some(v.trim().to_string()),
                        "efficiency" => metadata.efficiency = Some(v.trim().parse().map_err(|_| bad())?),
                        _ => {}
                    }
                }
                continue;
            }
            if line.starts_with("timestamp_ps") {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.is_empty() || cols.len() > 3 {
                return Err(Error::Format(format!("line {}: expected 1 to 3 columns", lineno + 1)));
            }
            let ts = cols[0]
                .parse::<u64>()
                .map_err(|_| Error::Format(format!("line {}: bad timestamp {:?}", lineno + 1, cols[0])))?;
            let pol = match cols.get(1) {
                None | Some(&"") | Some(&"none") => None,
                Some(s) => Some(s.parse::<Polarization>()?),
            };
            let wl = match cols.get(2) {
                None | Some(&"") | Some(&"none") => None,
                Some(&"397") => Some(Wavelength::Nm397),
                Some(&"866") => Some(Wavelength::Nm866),
                Some(s) => return Err(Error::Format(format!("line {}: unknown wavelength {s:?}", lineno + 1))),
            };
            events.push(ClickEvent::new(ts, pol, wl));
        }
        let duration_ps = duration.unwrap_or_else(|| events.last().map_or(0, |e| e.timestamp_ps));
        let mut s = Self::new(channel, events, duration_ps)?;
        s.metadata = metadata;
        Ok(s)
    }

    /// Loads either format, recognizing the binary one by its magic.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = fs::read(path)?;
        if bytes.starts_with(MAGIC) {
            Self::read_binary(bytes.as_slice())
        } else {
            Self::read_csv(bytes.as_slice())
        }
    }

    pub fn save_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_binary(BufWriter::new(fs::File::create(path)?))
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(BufWriter::new(fs::File::create(path)?))
    }
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("truncated IONCLK1 stream".into())
    } else {
        Error::Io(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ClickStream {
        ClickStream::new(
            1,
            vec![
                ClickEvent::new(5, Some(Polarization::SigmaMinus), Some(Wavelength::Nm397)),
                ClickEvent::new(17, Some(Polarization::Pi), Some(Wavelength::Nm866)),
                ClickEvent::new(u64::MAX - 1, None, None),
            ],
            u64::MAX,
        )
        .unwrap()
    }

    #[test]
    fn binary_layout_is_fixed() {
        let bytes = sample().to_binary();
        assert_eq!(bytes.len(), 7 + 4 + 8 + 8 + 3 * 10);
        assert_eq!(&bytes[..7], b"IONCLK1");
        assert_eq!(&bytes[7..11], &[1, 0, 0, 0]);
        assert_eq!(&bytes[11..19], &3u64.to_le_bytes());
        assert_eq!(&bytes[27..35], &5u64.to_le_bytes());
        assert_eq!(&bytes[35..37], &[0, 0]);
        assert_eq!(&bytes[45..47], &[2, 1]);
        assert_eq!(&bytes[55..57], &[255, 255]);
    }

    #[test]
    fn binary_and_csv_round_trip() {
        let s = sample();
        assert_eq!(ClickStream::read_binary(s.to_binary().as_slice()).unwrap(), s);
        let mut csv = Vec::new();
        s.write_csv(&mut csv).unwrap();
        assert_eq!(ClickStream::read_csv(csv.as_slice()).unwrap(), s);
    }

    #[test]
    fn rejects_corrupt_input() {
        let bytes = sample().to_binary();
        assert!(ClickStream::read_binary(&bytes[..bytes.len() - 3]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(ClickStream::read_binary(extra.as_slice()).is_err());
        let mut bad_tag = bytes;
        bad_tag[35] = 7;
        assert!(ClickStream::read_binary(bad_tag.as_slice()).is_err());
        assert!(ClickStream::read_csv("timestamp_ps,pol,wavelength\n10,sigma-,397\n3,pi,397\n".as_bytes()).is_err());
    }

    #[test]
    fn unsorted_events_are_rejected() {
        let e = |t| ClickEvent::new(t, None, None);
        assert!(matches!(
            ClickStream::new(0, vec![e(3), e(3)], 10),
            Err(Error::UnsortedStream { index: 1 })
        ));
        let s = ClickStream::from_unsorted(0, vec![e(7), e(3), e(7)], 10).unwrap();
        assert_eq!(s.timestamps(), vec![3, 7]);
        assert!(ClickStream::new(0, vec![e(11)], 10).is_err());
    }

    #[test]
    fn filtering_by_tag() {
        let s = sample();
        assert_eq!(s.filtered(Some(Polarization::Pi), None).len(), 1);
        assert_eq!(s.filtered(None, Some(Wavelength::Nm397)).len(), 1);
        assert_eq!(s.filtered(None, None).len(), 3);
    }
}
