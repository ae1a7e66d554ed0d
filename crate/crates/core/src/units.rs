//! Unit conversion at the I/O boundary.
//!
//! User-facing quantities carry an explicit suffix: `24ns`, `1.5us`, `-40MHz`,
//! `0.46pi`, `83deg`, `1.2rad`.

use std::f64::consts::PI;

use crate::{Error, Result};

/// Converts a frequency f/2π in MHz to an angular frequency in rad/s.
pub fn mhz_to_angular(mhz: f64) -> f64 {
    2.0 * PI * 1e6 * mhz
}

/// Converts an angular frequency in rad/s to f/2π in MHz.
pub fn angular_to_mhz(omega: f64) -> f64 {
    omega / (2.0 * PI * 1e6)
}

pub fn seconds_to_ns(t: f64) -> f64 {
    t * 1e9
}

pub fn ns_to_seconds(t: f64) -> f64 {
    t * 1e-9
}

/// Splits `"24ns"` into `(24.0, "ns")`.
fn split_number(s: &str) -> Result<(f64, &str)> {
    let s = s.trim();
    let end = s
        .char_indices()
        .find(|&(i, c)| {
            !(c.is_ascii_digit()
                || c == '.'
                || c == '+'
                || c == '-'
                || ((c == 'e' || c == 'E')
                    && s[i + 1..].starts_with(|n: char| n.is_ascii_digit() || n == '-' || n == '+')))
        })
        .map(|(i, _)| i)
        .unwrap_or(s.len());
    let value: f64 = s[..end]
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("cannot parse number in {s:?}")))?;
    if !value.is_finite() {
        return Err(Error::InvalidParameter(format!("non-finite value in {s:?}")));
    }
    Ok((value, s[end..].trim()))
}

/// Parses a duration with unit suffix (`ps`, `ns`, `us`/`µs`, `ms`, `s`) into seconds.
pub fn parse_time(s: &str) -> Result<f64> {
    let (v, unit) = split_number(s)?;
    let per_second = match unit {
        "ps" => 1e12,
        "ns" => 1e9,
        "us" | "µs" | "μs" => 1e6,
        "ms" => 1e3,
        "s" => 1.0,
        _ => {
            return Err(Error::InvalidParameter(format!(
                "time {s:?} needs a unit suffix (ps, ns, us, ms, s)"
            )))
        }
    };
    Ok(v / per_second)
}

/// Parses a duration into integer picoseconds, rounding to the nearest ps.
pub fn parse_time_ps(s: &str) -> Result<u64> {
    let t = parse_time(s)?;
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!("negative duration {s:?}")));
    }
    Ok((t * 1e12).round() as u64)
}

/// Parses `f/2π` with a `Hz`, `kHz`, `MHz` or `GHz` suffix into rad/s.
pub fn parse_frequency(s: &str) -> Result<f64> {
    let (v, unit) = split_number(s)?;
    let mhz = match unit {
        "Hz" => v * 1e-6,
        "kHz" => v * 1e-3,
        "MHz" => v,
        "GHz" => v * 1e3,
        _ => {
            return Err(Error::InvalidParameter(format!(
                "frequency {s:?} needs a unit suffix (Hz, kHz, MHz, GHz)"
            )))
        }
    };
    Ok(mhz_to_angular(mhz))
}

/// Parses an angle with explicit suffix: `pi` (fraction of π), `deg` or `rad`.
pub fn parse_angle(s: &str) -> Result<f64> {
    let (v, unit) = split_number(s)?;
    match unit {
        "pi" | "π" => Ok(v * PI),
        "deg" => Ok(v.to_radians()),
        "rad" => Ok(v),
        _ => Err(Error::InvalidParameter(format!(
            "angle {s:?} needs a suffix (pi, deg, rad)"
        ))),
    }
}

/// Formats an angle as a fraction of π, the form used in parameter files.
pub fn format_angle(alpha: f64) -> String {
    format!("{}pi", alpha / PI)
}
