//! Coincidence histograms of two time-tag streams.
//!
//! Bin `k ∈ [−K, K]` collects the delays `t_b − t_a` in
//! `[(k − ½)w, (k + ½)w)`, so a delay exactly on a bin edge falls into the
//! higher bin. Positive delays mean the B click came after the A click.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atom::{Polarization, Wavelength};
use crate::stream::{ClickEvent, ClickStream};
use crate::{Error, Result};

/// A-side events per parallel block.
const BLOCK: usize = 1 << 15;

/// Largest histogram half-width, about 13 days.
pub const MAX_WINDOW_PS: u64 = 1 << 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationMode {
    RawCounts,
    #[default]
    RateNormalized,
}

/// Tag selection applied to one side; `None` fields accept everything.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TagFilter {
    pub polarization: Option<Polarization>,
    pub wavelength: Option<Wavelength>,
}

impl TagFilter {
    pub fn polarization(p: Polarization) -> Self {
        TagFilter { polarization: Some(p), wavelength: None }
    }

    fn accepts(&self, e: &ClickEvent) -> bool {
        (self.polarization.is_none() || e.polarization == self.polarization)
            && (self.wavelength.is_none() || e.wavelength == self.wavelength)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelogramConfig {
    pub bin_width_ps: u64,
    /// Half-width of the histogram; a whole number of bins.
    pub window_ps: u64,
    pub mode: NormalizationMode,
    pub filter_a: TagFilter,
    pub filter_b: TagFilter,
}

impl CorrelogramConfig {
    pub fn new(bin_width_ps: u64, window_ps: u64) -> Result<Self> {
        let c = CorrelogramConfig {
            bin_width_ps,
            window_ps,
            mode: NormalizationMode::default(),
            filter_a: TagFilter::default(),
            filter_b: TagFilter::default(),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bin_width_ps == 0 {
            return Err(Error::InvalidParameter("bin width must be > 0".into()));
        }
        if self.window_ps == 0 || !self.window_ps.is_multiple_of(self.bin_width_ps) {
            return Err(Error::InvalidParameter(format!(
                "window {} ps is not a positive multiple of the bin width {} ps",
                self.window_ps, self.bin_width_ps
            )));
        }
        if self.window_ps > MAX_WINDOW_PS {
            return Err(Error::InvalidParameter(format!("window {} ps exceeds {MAX_WINDOW_PS} ps", self.window_ps)));
        }
        Ok(())
    }

    /// Number of bins on each side of zero.
    pub fn half_bins(&self) -> usize {
        (self.window_ps / self.bin_width_ps) as usize
    }

    pub fn n_bins(&self) -> usize {
        2 * self.half_bins() + 1
    }

    /// Index into the histogram of a delay, or `None` outside the window.
    pub fn bin_of(&self, delay_ps: i128) -> Option<usize> {
        let w = self.bin_width_ps as i128;
        let k = (2 * delay_ps + w).div_euclid(2 * w);
        let half = self.half_bins() as i128;
        (-half..=half).contains(&k).then(|| (k + half) as usize)
    }
}

/// Histogram of delays with its normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlogram {
    pub bin_width_ps: u64,
    pub window_ps: u64,
    /// Bin centres, ps.
    pub centers_ps: Vec<i64>,
    pub counts: Vec<u64>,
    /// counts / (r_a r_b T w) in rate-normalized mode, counts otherwise.
    pub normalized: Vec<f64>,
    pub total_pairs: u64,
    /// Length of the common observation window, ps.
    pub overlap_ps: u64,
    pub events_a: usize,
    pub events_b: usize,
    /// Click rates inside the overlap window, s⁻¹.
    pub rate_a: f64,
    pub rate_b: f64,
    /// Set when a side had no events after filtering.
    pub empty: bool,
}

impl Correlogram {
    pub fn value_at(&self, delay_ps: i64) -> Option<f64> {
        let w = self.bin_width_ps as i64;
        let half = (self.window_ps / self.bin_width_ps) as i64;
        let k = (2 * delay_ps + w).div_euclid(2 * w);
        (-half..=half).contains(&k).then(|| self.normalized[(k + half) as usize])
    }
}

fn histogram(a: &[ClickEvent], b: &[ClickEvent], cfg: &CorrelogramConfig, exclude_self: bool) -> Vec<u64> {
    let w = cfg.bin_width_ps as i64;
    let half = cfg.half_bins() as i64;
    // delays d with −(K + ½)w ≤ d < (K + ½)w
    let reach = (2 * half + 1) as i128 * w as i128;
    let (fa, fb) = (&cfg.filter_a, &cfg.filter_b);
    let block_hist = |block: &[ClickEvent]| {
        let mut hist = vec![0u64; cfg.n_bins()];
        let Some(first) = block.first() else {
            return hist;
        };
        let t0 = first.timestamp_ps as i128;
        let mut start = b.partition_point(|e| 2 * (e.timestamp_ps as i128 - t0) < -reach);
        for ea in block.iter().filter(|e| fa.accepts(e)) {
            let ta = ea.timestamp_ps as i128;
            while start < b.len() && 2 * (b[start].timestamp_ps as i128 - ta) < -reach {
                start += 1;
            }
            for eb in &b[start..] {
                let d = eb.timestamp_ps as i128 - ta;
                if 2 * d >= reach {
                    break;
                }
                // timestamps are unique within a stream
                if !fb.accepts(eb) || (exclude_self && d == 0) {
                    continue;
                }
                let k = (2 * d as i64 + w).div_euclid(2 * w);
                hist[(k + half) as usize] += 1;
            }
        }
        hist
    };
    a.par_chunks(BLOCK)
        .map(block_hist)
        .reduce(|| vec![0u64; cfg.n_bins()], |mut x, y| {
            x.iter_mut().zip(y).for_each(|(p, q)| *p += q);
            x
        })
}

/// Events up to `end_ps`.
fn head(s: &ClickStream, end_ps: u64) -> &[ClickEvent] {
    &s.events[..s.events.partition_point(|e| e.timestamp_ps <= end_ps)]
}

fn build(a: &ClickStream, b: &ClickStream, cfg: &CorrelogramConfig, auto: bool) -> Result<Correlogram> {
    cfg.validate()?;
    a.validate()?;
    b.validate()?;
    let overlap_ps = a.duration_ps.min(b.duration_ps);
    let (ha, hb) = (head(a, overlap_ps), head(b, overlap_ps));
    let events_a = ha.iter().filter(|e| cfg.filter_a.accepts(e)).count();
    let events_b = hb.iter().filter(|e| cfg.filter_b.accepts(e)).count();
    let half = cfg.half_bins() as i64;
    let w = cfg.bin_width_ps as i64;
    let centers_ps = (-half..=half).map(|k| k * w).collect();

    let counts = histogram(ha, hb, cfg, auto);
    let t = overlap_ps as f64 * 1e-12;
    let (rate_a, rate_b) = if t > 0.0 { (events_a as f64 / t, events_b as f64 / t) } else { (0.0, 0.0) };
    let empty = events_a == 0 || events_b == 0;
    let normalized = match cfg.mode {
        NormalizationMode::RawCounts => counts.iter().map(|&c| c as f64).collect(),
        NormalizationMode::RateNormalized => {
            let expected = rate_a * rate_b * t * cfg.bin_width_ps as f64 * 1e-12;
            counts
                .iter()
                .map(|&c| if expected > 0.0 { c as f64 / expected } else { 0.0 })
                .collect()
        }
    };
    Ok(Correlogram {
        bin_width_ps: cfg.bin_width_ps,
        window_ps: cfg.window_ps,
        centers_ps,
        total_pairs: counts.iter().sum(),
        counts,
        normalized,
        overlap_ps,
        events_a,
        events_b,
        rate_a,
        rate_b,
        empty,
    })
}

/// Cross-correlation of two streams. Passing the same stream twice
/// excludes the zero-lag self pairs.
pub fn correlate(a: &ClickStream, b: &ClickStream, cfg: &CorrelogramConfig) -> Result<Correlogram> {
    build(a, b, cfg, std::ptr::eq(a, b))
}

/// Autocorrelation of one stream without self pairs.
pub fn autocorrelate(s: &ClickStream, cfg: &CorrelogramConfig) -> Result<Correlogram> {
    build(s, s, cfg, true)
}

/// Polarization-conditioned estimate: A clicks tagged `first`, B clicks
/// tagged `second`, positive delays meaning B after A.
pub fn conditioned_g2_estimate(
    a: &ClickStream,
    b: &ClickStream,
    first: Polarization,
    second: Polarization,
    cfg: &CorrelogramConfig,
) -> Result<Correlogram> {
    let cfg = CorrelogramConfig {
        filter_a: TagFilter { polarization: Some(first), ..cfg.filter_a },
        filter_b: TagFilter { polarization: Some(second), ..cfg.filter_b },
        ..*cfg
    };
    correlate(a, b, &cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::ClickEvent;

    fn stream(ts: &[u64], duration: u64) -> ClickStream {
        ClickStream::new(0, ts.iter().map(|&t| ClickEvent::new(t, None, None)).collect(), duration).unwrap()
    }

    #[test]
    fn bin_edges_go_up() {
        let cfg = CorrelogramConfig::new(10, 30).unwrap();
        assert_eq!(cfg.n_bins(), 7);
        assert_eq!(cfg.bin_of(0), Some(3));
        assert_eq!(cfg.bin_of(4), Some(3));
        assert_eq!(cfg.bin_of(5), Some(4));
        assert_eq!(cfg.bin_of(-5), Some(3));
        assert_eq!(cfg.bin_of(-6), Some(2));
        assert_eq!(cfg.bin_of(34), Some(6));
        assert_eq!(cfg.bin_of(35), None);
        assert_eq!(cfg.bin_of(-35), Some(0));
        assert_eq!(cfg.bin_of(-36), None);
    }

    #[test]
    fn config_validation() {
        assert!(CorrelogramConfig::new(0, 10).is_err());
        assert!(CorrelogramConfig::new(3, 10).is_err());
        assert!(CorrelogramConfig::new(5, 0).is_err());
    }

    #[test]
    fn single_event_autocorrelation_is_empty() {
        let s = stream(&[100], 1000);
        let c = correlate(&s, &s, &CorrelogramConfig::new(10, 100).unwrap()).unwrap();
        assert_eq!(c.total_pairs, 0);
        assert!(c.counts.iter().all(|&x| x == 0));
    }

    #[test]
    fn small_example() {
        let a = stream(&[100, 200], 1000);
        let b = stream(&[95, 130, 205, 260], 1000);
        let cfg = CorrelogramConfig { mode: NormalizationMode::RawCounts, ..CorrelogramConfig::new(10, 60).unwrap() };
        let c = correlate(&a, &b, &cfg).unwrap();
        // delays: -5, 30, 105, 160 | -105, -70, 5, 60
        let idx = |d: i128| cfg.bin_of(d).unwrap();
        assert_eq!(c.counts[idx(-5)], 1);
        assert_eq!(c.counts[idx(5)], 1);
        assert_eq!(c.counts[idx(30)], 1);
        assert_eq!(c.counts[idx(60)], 1);
        assert_eq!(c.total_pairs, 4);
    }

    #[test]
    fn empty_side_is_flagged() {
        let a = stream(&[], 1000);
        let b = stream(&[5, 6], 1000);
        let c = correlate(&a, &b, &CorrelogramConfig::new(10, 100).unwrap()).unwrap();
        assert!(c.empty);
        assert_eq!(c.rate_a, 0.0);
        assert!(c.normalized.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn rates_use_the_overlap() {
        let a = stream(&[10, 20, 900_000], 1_000_000);
        let b = stream(&[15], 500_000);
        let c = correlate(&a, &b, &CorrelogramConfig::new(10, 100).unwrap()).unwrap();
        assert_eq!(c.overlap_ps, 500_000);
        assert_eq!(c.events_a, 2);
        assert!((c.rate_a - 2.0 / 500e-9).abs() < 1e-3);
    }
}
