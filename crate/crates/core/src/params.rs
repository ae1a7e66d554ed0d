//! Physical configuration of the driven ion and its parameter-file format.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::units::{angular_to_mhz, format_angle, mhz_to_angular, parse_angle};
use crate::{Error, Result};

/// Default P½ → S½ decay rate, 2π·20.7 MHz.
pub const DEFAULT_GAMMA_SP_MHZ: f64 = 20.7;
/// Default P½ → D3/2 decay rate, 2π·1.69 MHz.
pub const DEFAULT_GAMMA_DP_MHZ: f64 = 1.69;

/// Lasers, field and decay constants. Frequencies in rad/s, angles in rad.
///
/// Detunings follow Δ = ω_laser − ω_atom, so negative values are red
/// detuned. The Rabi frequencies enter the Hamiltonian as
/// `H[upper, lower] = Ω · a_q · c`, with `a_q` the polarization component
/// and `c` the Clebsch–Gordan amplitude of the channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentParams {
    pub omega_397: f64,
    pub omega_866: f64,
    pub delta_397: f64,
    pub delta_866: f64,
    /// Magnetic field in gauss. The sign selects the orientation of the
    /// quantization axis.
    pub b_gauss: f64,
    pub alpha_397: f64,
    pub alpha_866: f64,
    pub gamma_sp: f64,
    pub gamma_dp: f64,
    /// Laser linewidths (FWHM, rad/s); each adds pure dephasing of the
    /// coherences carrying that laser's phase.
    pub linewidth_397: f64,
    pub linewidth_866: f64,
}

impl ExperimentParams {
    /// Weak excitation of the conditioned-g² calculations:
    /// Ω397 = 2π·9.2 MHz, Ω866 = 2π·1.3 MHz, Δ397 = −2π·15 MHz,
    /// Δ866 = +2π·5.8 MHz, B = 3.5 G, both polarizations perpendicular to B.
    pub fn weak_excitation() -> Self {
        ExperimentParams {
            omega_397: mhz_to_angular(9.2),
            omega_866: mhz_to_angular(1.3),
            delta_397: mhz_to_angular(-15.0),
            delta_866: mhz_to_angular(5.8),
            b_gauss: 3.5,
            alpha_397: PI / 2.0,
            alpha_866: PI / 2.0,
            gamma_sp: mhz_to_angular(DEFAULT_GAMMA_SP_MHZ),
            gamma_dp: mhz_to_angular(DEFAULT_GAMMA_DP_MHZ),
            linewidth_397: 0.0,
            linewidth_866: 0.0,
        }
    }

    /// Strong excitation: Ω397 = 2π·20.2 MHz, Ω866 = 2π·20.3 MHz with the
    /// calibrated polarization angles α397 = 0.46π, α866 = 0.4π, otherwise
    /// as [`weak_excitation`](Self::weak_excitation).
    pub fn strong_excitation() -> Self {
        ExperimentParams {
            omega_397: mhz_to_angular(20.2),
            omega_866: mhz_to_angular(20.3),
            alpha_397: 0.46 * PI,
            alpha_866: 0.4 * PI,
            ..Self::weak_excitation()
        }
    }

    /// Calibration scan of the 866 nm detuning: Ω397 = 2π·9.9 MHz,
    /// Ω866 = 2π·1.5 MHz, Δ397 = −2π·15 MHz, B = 3.5 G, α397 = 0.46π,
    /// α866 = 0.4π. `delta_866` is the scan variable and starts at zero.
    pub fn calibration_scan() -> Self {
        ExperimentParams {
            omega_397: mhz_to_angular(9.9),
            omega_866: mhz_to_angular(1.5),
            delta_866: 0.0,
            alpha_397: 0.46 * PI,
            alpha_866: 0.4 * PI,
            ..Self::weak_excitation()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.omega_397,
            self.omega_866,
            self.delta_397,
            self.delta_866,
            self.b_gauss,
            self.alpha_397,
            self.alpha_866,
            self.gamma_sp,
            self.gamma_dp,
            self.linewidth_397,
            self.linewidth_866,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite parameter".into()));
        }
        if self.omega_397 < 0.0 || self.omega_866 < 0.0 {
            return Err(Error::InvalidParameter("Rabi frequencies must be >= 0".into()));
        }
        if self.gamma_sp <= 0.0 {
            return Err(Error::InvalidParameter("gamma_sp must be > 0".into()));
        }
        if self.gamma_dp < 0.0 {
            return Err(Error::InvalidParameter("gamma_dp must be >= 0".into()));
        }
        if self.linewidth_397 < 0.0 || self.linewidth_866 < 0.0 {
            return Err(Error::InvalidParameter("laser linewidths must be >= 0".into()));
        }
        for (name, a) in [("alpha_397", self.alpha_397), ("alpha_866", self.alpha_866)] {
            if !(0.0..=PI).contains(&a) {
                return Err(Error::InvalidParameter(format!("{name} must lie in [0, pi]")));
            }
        }
        Ok(())
    }

    /// Largest laser coupling, used to pick time steps.
    pub fn max_rabi(&self) -> f64 {
        self.omega_397.max(self.omega_866)
    }

    /// Short stable hash of the parameter set, written into output headers.
    /// Values are rounded to ten significant digits first, so a file round
    /// trip keeps the fingerprint.
    pub fn fingerprint(&self) -> String {
        let canonical = [
            self.omega_397,
            self.omega_866,
            self.delta_397,
            self.delta_866,
            self.b_gauss,
            self.alpha_397,
            self.alpha_866,
            self.gamma_sp,
            self.gamma_dp,
            self.linewidth_397,
            self.linewidth_866,
        ]
        .iter()
        .map(|v| format!("{:.9e}", v + 0.0))
        .collect::<Vec<_>>()
        .join(",");
        let digest = Sha256::digest(canonical.as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ParamsFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ParamsFile::from(self)).expect("params serialize")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }
}

impl Default for ExperimentParams {
    fn default() -> Self {
        Self::weak_excitation()
    }
}

/// On-disk parameter format. Frequencies are f/2π in MHz, the field in
/// gauss, angles are strings with an explicit `pi`, `deg` or `rad` suffix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    pub omega_397_mhz: f64,
    pub omega_866_mhz: f64,
    pub delta_397_mhz: f64,
    pub delta_866_mhz: f64,
    pub b_gauss: f64,
    pub alpha_397: String,
    pub alpha_866: String,
    #[serde(default = "default_gamma_sp")]
    pub gamma_sp_mhz: f64,
    #[serde(default = "default_gamma_dp")]
    pub gamma_dp_mhz: f64,
    #[serde(default)]
    pub linewidth_397_mhz: f64,
    #[serde(default)]
    pub linewidth_866_mhz: f64,
}

fn default_gamma_sp() -> f64 {
    DEFAULT_GAMMA_SP_MHZ
}

fn default_gamma_dp() -> f64 {
    DEFAULT_GAMMA_DP_MHZ
}

impl From<&ExperimentParams> for ParamsFile {
    fn from(p: &ExperimentParams) -> Self {
        ParamsFile {
            omega_397_mhz: angular_to_mhz(p.omega_397),
            omega_866_mhz: angular_to_mhz(p.omega_866),
            delta_397_mhz: angular_to_mhz(p.delta_397),
            delta_866_mhz: angular_to_mhz(p.delta_866),
            b_gauss: p.b_gauss,
            alpha_397: format_angle(p.alpha_397),
            alpha_866: format_angle(p.alpha_866),
            gamma_sp_mhz: angular_to_mhz(p.gamma_sp),
            gamma_dp_mhz: angular_to_mhz(p.gamma_dp),
            linewidth_397_mhz: angular_to_mhz(p.linewidth_397),
            linewidth_866_mhz: angular_to_mhz(p.linewidth_866),
        }
    }
}

impl TryFrom<ParamsFile> for ExperimentParams {
    type Error = Error;

    fn try_from(f: ParamsFile) -> Result<Self> {
        let p = ExperimentParams {
            omega_397: mhz_to_angular(f.omega_397_mhz),
            omega_866: mhz_to_angular(f.omega_866_mhz),
            delta_397: mhz_to_angular(f.delta_397_mhz),
            delta_866: mhz_to_angular(f.delta_866_mhz),
            b_gauss: f.b_gauss,
            alpha_397: parse_angle(&f.alpha_397)?,
            alpha_866: parse_angle(&f.alpha_866)?,
            gamma_sp: mhz_to_angular(f.gamma_sp_mhz),
            gamma_dp: mhz_to_angular(f.gamma_dp_mhz),
            linewidth_397: mhz_to_angular(f.linewidth_397_mhz),
            linewidth_866: mhz_to_angular(f.linewidth_866_mhz),
        };
        p.validate()?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let p = ExperimentParams::calibration_scan();
        let back = ExperimentParams::from_json(&p.to_json()).unwrap();
        let rel = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(1.0);
        assert!(rel(p.omega_397, back.omega_397));
        assert!(rel(p.alpha_397, back.alpha_397));
        assert!(rel(p.gamma_dp, back.gamma_dp));
        assert_eq!(p.fingerprint(), back.fingerprint());
    }

    #[test]
    fn file_requires_angle_suffix() {
        let text = r#"{"omega_397_mhz": 9.2, "omega_866_mhz": 1.3, "delta_397_mhz": -15,
            "delta_866_mhz": 5.8, "b_gauss": 3.5, "alpha_397": "0.5", "alpha_866": "90deg"}"#;
        assert!(ExperimentParams::from_json(text).is_err());
        let ok = text.replace("\"0.5\"", "\"0.5pi\"");
        let p = ExperimentParams::from_json(&ok).unwrap();
        assert!((p.alpha_866 - PI / 2.0).abs() < 1e-15);
        assert!((angular_to_mhz(p.gamma_sp) - DEFAULT_GAMMA_SP_MHZ).abs() < 1e-12);
    }

    #[test]
    fn rejects_out_of_range() {
        let mut p = ExperimentParams::weak_excitation();
        p.omega_397 = -1.0;
        assert!(p.validate().is_err());
        let mut p = ExperimentParams::weak_excitation();
        p.alpha_866 = 4.0;
        assert!(p.validate().is_err());
        let mut p = ExperimentParams::weak_excitation();
        p.gamma_sp = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn fingerprint_tracks_changes() {
        let a = ExperimentParams::weak_excitation();
        let b = ExperimentParams::strong_excitation();
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint().len(), 16);
    }
}
