//! Eight-level ⁴⁰Ca⁺ description: Zeeman sublevels, dipole channels and
//! laser polarization decomposition.
//!
//! Level numbering (0-based in code, 1-based in the usual notation):
//!
//! | index | level | manifold | m_j  |
//! |-------|-------|----------|------|
//! | 0     | \|1⟩  | S½       | −1/2 |
//! | 1     | \|2⟩  | S½       | +1/2 |
//! | 2     | \|3⟩  | P½       | −1/2 |
//! | 3     | \|4⟩  | P½       | +1/2 |
//! | 4..=7 | \|5⟩..\|8⟩ | D3/2 | −3/2..+3/2 |

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64, N_LEVELS};

/// Bohr magneton over Planck's constant, Hz per gauss.
pub const MU_B_HZ_PER_GAUSS: f64 = 1.399624e6;

/// Index of |S½, m = −1/2⟩.
pub const S_MINUS: usize = 0;
/// Index of |S½, m = +1/2⟩.
pub const S_PLUS: usize = 1;
/// Index of |P½, m = −1/2⟩; populated before a σ⁻ emission.
pub const P_MINUS: usize = 2;
/// Index of |P½, m = +1/2⟩; populated before a σ⁺ emission.
pub const P_PLUS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Manifold {
    S12,
    P12,
    D32,
}

impl Manifold {
    /// Twice the total angular momentum J.
    pub fn two_j(self) -> i32 {
        match self {
            Manifold::S12 | Manifold::P12 => 1,
            Manifold::D32 => 3,
        }
    }

    /// Landé factor g_j.
    pub fn lande_g(self) -> f64 {
        match self {
            Manifold::S12 => 2.0,
            Manifold::P12 => 2.0 / 3.0,
            Manifold::D32 => 4.0 / 5.0,
        }
    }
}

/// Photon polarization, identified by the Δm = m_upper − m_lower of the
/// transition on which the photon was emitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    #[serde(rename = "sigma-")]
    SigmaMinus,
    #[serde(rename = "sigma+")]
    SigmaPlus,
    #[serde(rename = "pi")]
    Pi,
}

impl Polarization {
    pub fn from_q(q: i32) -> Option<Self> {
        match q {
            -1 => Some(Polarization::SigmaMinus),
            0 => Some(Polarization::Pi),
            1 => Some(Polarization::SigmaPlus),
            _ => None,
        }
    }

    pub fn q(self) -> i32 {
        match self {
            Polarization::SigmaMinus => -1,
            Polarization::Pi => 0,
            Polarization::SigmaPlus => 1,
        }
    }

    /// The opposite circular polarization; π maps to itself.
    pub fn orthogonal(self) -> Self {
        match self {
            Polarization::SigmaMinus => Polarization::SigmaPlus,
            Polarization::SigmaPlus => Polarization::SigmaMinus,
            Polarization::Pi => Polarization::Pi,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Polarization::SigmaMinus => "sigma-",
            Polarization::SigmaPlus => "sigma+",
            Polarization::Pi => "pi",
        }
    }
}

impl std::str::FromStr for Polarization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigma-" | "σ-" | "σ⁻" | "minus" => Ok(Polarization::SigmaMinus),
            "sigma+" | "σ+" | "σ⁺" | "plus" => Ok(Polarization::SigmaPlus),
            "pi" | "π" => Ok(Polarization::Pi),
            _ => Err(Error::InvalidParameter(format!("unknown polarization {s:?}"))),
        }
    }
}

/// Emission wavelength of a decay channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Wavelength {
    #[serde(rename = "397")]
    Nm397,
    #[serde(rename = "866")]
    Nm866,
}

impl Wavelength {
    pub fn nanometres(self) -> u32 {
        match self {
            Wavelength::Nm397 => 397,
            Wavelength::Nm866 => 866,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub manifold: Manifold,
    /// Twice the magnetic quantum number.
    pub two_m: i32,
}

impl Level {
    pub fn m(&self) -> f64 {
        f64::from(self.two_m) / 2.0
    }

    pub fn lande_g(&self) -> f64 {
        self.manifold.lande_g()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelScheme {
    pub levels: [Level; N_LEVELS],
}

impl LevelScheme {
    pub fn ca40() -> Self {
        let lv = |manifold, two_m| Level { manifold, two_m };
        LevelScheme {
            levels: [
                lv(Manifold::S12, -1),
                lv(Manifold::S12, 1),
                lv(Manifold::P12, -1),
                lv(Manifold::P12, 1),
                lv(Manifold::D32, -3),
                lv(Manifold::D32, -1),
                lv(Manifold::D32, 1),
                lv(Manifold::D32, 3),
            ],
        }
    }

    /// Levels belonging to one manifold, in ascending m.
    pub fn indices(&self, manifold: Manifold) -> impl Iterator<Item = usize> + '_ {
        (0..N_LEVELS).filter(move |&i| self.levels[i].manifold == manifold)
    }
}

impl Default for LevelScheme {
    fn default() -> Self {
        Self::ca40()
    }
}

/// Zeeman shift g_j·m_j·μ_B·B of every level, in rad/s.
///
/// Linear in `b_gauss`; a negative field reverses the quantization axis.
pub fn zeeman_shifts(scheme: &LevelScheme, b_gauss: f64) -> [f64; N_LEVELS] {
    let mu = 2.0 * std::f64::consts::PI * MU_B_HZ_PER_GAUSS;
    let mut out = [0.0; N_LEVELS];
    for (o, lv) in out.iter_mut().zip(scheme.levels.iter()) {
        *o = lv.lande_g() * lv.m() * mu * b_gauss;
    }
    out
}

fn factorial(n: i32) -> f64 {
    debug_assert!(n >= 0);
    (1..=n).fold(1.0, |acc, k| acc * f64::from(k))
}

/// Clebsch–Gordan coefficient ⟨j1 m1; j2 m2 | J M⟩ (Condon–Shortley phase),
/// with every angular momentum passed as twice its value.
pub fn clebsch_gordan(two_j1: i32, two_m1: i32, two_j2: i32, two_m2: i32, two_j: i32, two_m: i32) -> f64 {
    if two_m1 + two_m2 != two_m
        || two_m1.abs() > two_j1
        || two_m2.abs() > two_j2
        || two_m.abs() > two_j
        || two_j < (two_j1 - two_j2).abs()
        || two_j > two_j1 + two_j2
        || (two_j1 + two_j2 + two_j) % 2 != 0
        || (two_j1 + two_m1) % 2 != 0
        || (two_j2 + two_m2) % 2 != 0
        || (two_j + two_m) % 2 != 0
    {
        return 0.0;
    }
    // all combinations below are integers
    let h = |x: i32| x / 2;
    let a = h(two_j1 + two_j2 - two_j);
    let b = h(two_j1 - two_m1);
    let c = h(two_j2 + two_m2);
    let d = h(two_j - two_j2 + two_m1);
    let e = h(two_j - two_j1 - two_m2);

    let prefactor = (f64::from(two_j + 1) * factorial(h(two_j + two_j1 - two_j2))
        * factorial(h(two_j - two_j1 + two_j2))
        * factorial(a)
        / factorial(h(two_j1 + two_j2 + two_j) + 1))
    .sqrt()
        * (factorial(h(two_j + two_m))
            * factorial(h(two_j - two_m))
            * factorial(b)
            * factorial(h(two_j1 + two_m1))
            * factorial(h(two_j2 - two_m2))
            * factorial(c))
        .sqrt();

    let k_min = 0.max(-d).max(-e);
    let k_max = a.min(b).min(c);
    let sum: f64 = (k_min..=k_max)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign / (factorial(k)
                * factorial(a - k)
                * factorial(b - k)
                * factorial(c - k)
                * factorial(d + k)
                * factorial(e + k))
        })
        .sum();
    prefactor * sum
}

/// One dipole channel of a J_upper ↔ J_lower fragment, independent of level numbering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelAmplitude {
    pub two_m_upper: i32,
    pub two_m_lower: i32,
    pub q: i32,
    /// ⟨J_l m_l; 1 q | J_u m_u⟩
    pub amplitude: f64,
}

/// Dipole channel amplitudes between an upper level of angular momentum
/// `two_j_upper/2` and a lower level of `two_j_lower/2`.
///
/// Only the two pairs present in Ca⁺ are supported: (½, ½) and (½, 3/2).
pub fn transition_amplitudes(two_j_upper: i32, two_j_lower: i32) -> Result<Vec<ChannelAmplitude>> {
    if !matches!((two_j_upper, two_j_lower), (1, 1) | (1, 3)) {
        return Err(Error::UnsupportedTransition {
            upper: format!("{two_j_upper}/2"),
            lower: format!("{two_j_lower}/2"),
        });
    }
    let mut out = Vec::new();
    for two_mu in (-two_j_upper..=two_j_upper).step_by(2) {
        for two_ml in (-two_j_lower..=two_j_lower).step_by(2) {
            let two_q = two_mu - two_ml;
            if two_q.abs() > 2 {
                continue;
            }
            let amplitude = clebsch_gordan(two_j_lower, two_ml, 2, two_q, two_j_upper, two_mu);
            if amplitude != 0.0 {
                out.push(ChannelAmplitude {
                    two_m_upper: two_mu,
                    two_m_lower: two_ml,
                    q: two_q / 2,
                    amplitude,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    pub upper: usize,
    pub lower: usize,
    pub q: i32,
    pub amplitude: f64,
}

impl Channel {
    pub fn polarization(&self) -> Polarization {
        Polarization::from_q(self.q).expect("dipole channel has |q| <= 1")
    }
}

/// All dipole channels of the S½–P½ and D3/2–P½ manifolds with their
/// total decay rates.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionTable {
    pub channels: Vec<Channel>,
    /// Total P½ → S½ decay rate, rad/s.
    pub gamma_sp: f64,
    /// Total P½ → D3/2 decay rate, rad/s.
    pub gamma_dp: f64,
}

impl TransitionTable {
    pub fn ca40(scheme: &LevelScheme, gamma_sp: f64, gamma_dp: f64) -> Self {
        let mut channels = Vec::new();
        for lower_manifold in [Manifold::S12, Manifold::D32] {
            let fragment = transition_amplitudes(Manifold::P12.two_j(), lower_manifold.two_j())
                .expect("Ca+ transitions are supported");
            for amp in fragment {
                let find = |manifold, two_m| {
                    scheme
                        .levels
                        .iter()
                        .position(|l| l.manifold == manifold && l.two_m == two_m)
                        .expect("level present in scheme")
                };
                channels.push(Channel {
                    upper: find(Manifold::P12, amp.two_m_upper),
                    lower: find(lower_manifold, amp.two_m_lower),
                    q: amp.q,
                    amplitude: amp.amplitude,
                });
            }
        }
        TransitionTable { channels, gamma_sp, gamma_dp }
    }

    pub fn lower_manifold(&self, scheme: &LevelScheme, channel: &Channel) -> Manifold {
        scheme.levels[channel.lower].manifold
    }

    /// Total decay rate of the manifold a channel decays into.
    pub fn manifold_rate(&self, scheme: &LevelScheme, channel: &Channel) -> f64 {
        match self.lower_manifold(scheme, channel) {
            Manifold::D32 => self.gamma_dp,
            _ => self.gamma_sp,
        }
    }

    pub fn find(&self, upper: usize, lower: usize) -> Option<&Channel> {
        self.channels.iter().find(|c| c.upper == upper && c.lower == lower)
    }
}

/// Spherical components of a linear polarization at angle α to the magnetic
/// field, for a beam propagating perpendicular to the field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationComponents {
    pub pi: C64,
    pub sigma_plus: C64,
    pub sigma_minus: C64,
}

impl PolarizationComponents {
    /// Weight applied to a channel with Δm = q.
    pub fn for_q(&self, q: i32) -> C64 {
        match q {
            -1 => self.sigma_minus,
            0 => self.pi,
            1 => self.sigma_plus,
            _ => C64::new(0.0, 0.0),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.pi.norm_sqr() + self.sigma_plus.norm_sqr() + self.sigma_minus.norm_sqr()
    }
}

/// a_π = cos α, a_σ± = ∓ sin α / √2.
pub fn polarization_components(alpha: f64) -> PolarizationComponents {
    let (s, c) = alpha.sin_cos();
    PolarizationComponents {
        pi: C64::new(c, 0.0),
        sigma_plus: C64::new(-s * FRAC_1_SQRT_2, 0.0),
        sigma_minus: C64::new(s * FRAC_1_SQRT_2, 0.0),
    }
}
