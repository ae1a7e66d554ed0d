//! Quantum-jump (Monte-Carlo wave-function) simulation of the emission
//! record and the detector model that turns it into click streams.
//!
//! Between jumps the unnormalized state evolves under the non-Hermitian
//! H_eff = H − (i/2) Σ C†C. A jump happens when ‖ψ‖² falls below a uniform
//! random threshold; the jump time is located to 1 ps with exact
//! propagators U(2^k ps) and a binary descent, so no time-step bias enters
//! beyond the picosecond timestamp resolution.

use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use crate::atom::{Polarization, Wavelength, S_MINUS};
use crate::dynamics::steady_state;
use crate::linalg::expm8;
use crate::liouvillian::MasterEquation;
use crate::stream::{ClickEvent, ClickStream, StreamMetadata};
use crate::{Error, ExperimentParams, Matrix8, Result, Vector8, C64, N_LEVELS};

/// Largest propagator is U(2^MAX_POWER ps) ≈ 65 ns.
const MAX_POWER: usize = 16;

/// Default length of independently seeded simulation segments: 1 ms.
pub const DEFAULT_SEGMENT_PS: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JumpKind {
    /// Spontaneous emission; produces a photon.
    Decay { lower: usize, upper: usize, polarization: Polarization, wavelength: Wavelength },
    /// Laser phase jump; no photon.
    Dephasing { levels: [bool; N_LEVELS] },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpChannel {
    pub rate: f64,
    pub kind: JumpKind,
}

/// A jump located by [`Walker::advance_until`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub time_ps: u64,
    pub channel: usize,
    pub photon: Option<ClickEvent>,
}

/// Precomputed no-jump propagators and jump channels for one parameter set.
#[derive(Debug, Clone)]
pub struct JumpSimulator {
    pub params: ExperimentParams,
    pub channels: Vec<JumpChannel>,
    steps: Vec<Matrix8>,
    steady: Option<crate::DensityMatrix>,
}

impl JumpSimulator {
    pub fn new(params: &ExperimentParams) -> Result<Self> {
        let eq = MasterEquation::new(params)?;
        let h_eff = eq.effective_hamiltonian();
        let steps = (0..=MAX_POWER)
            .map(|k| expm8(&(h_eff * C64::new(0.0, -((1u64 << k) as f64) * 1e-12))))
            .collect();
        let mut channels: Vec<JumpChannel> = eq
            .decays
            .iter()
            .map(|d| JumpChannel {
                rate: d.rate,
                kind: JumpKind::Decay {
                    lower: d.lower,
                    upper: d.upper,
                    polarization: d.polarization,
                    wavelength: d.wavelength,
                },
            })
            .collect();
        channels.extend(eq.dephasing.iter().map(|dp| JumpChannel {
            rate: dp.rate,
            kind: JumpKind::Dephasing { levels: dp.levels },
        }));
        let steady = steady_state(&eq.liouvillian()).ok();
        Ok(JumpSimulator { params: *params, channels, steps, steady })
    }

    /// Pure state drawn from the eigen-decomposition of the steady state;
    /// the ground state S(−½) when the steady state is not unique.
    pub fn sample_initial(&self, rng: &mut ChaCha8Rng) -> Vector8 {
        let Some(ss) = &self.steady else {
            return basis(S_MINUS);
        };
        let eig = SymmetricEigen::new(*ss.matrix());
        let weights: Vec<f64> = eig.eigenvalues.iter().map(|&w| w.max(0.0)).collect();
        let total: f64 = weights.iter().sum();
        let mut u = rng.random::<f64>() * total;
        let mut pick = weights.len() - 1;
        for (i, w) in weights.iter().enumerate() {
            if u < *w {
                pick = i;
                break;
            }
            u -= w;
        }
        eig.eigenvectors.column(pick).into_owned()
    }

    pub fn walker(&self, psi0: Vector8, rng: ChaCha8Rng) -> Walker<'_> {
        Walker::new(self, psi0, rng)
    }

    /// Emission record over `[0, duration_ps]`, built from independent
    /// segments of `segment_ps`. Segment `i` uses RNG stream `i` of `seed`,
    /// so the output does not depend on the number of threads.
    pub fn simulate(&self, duration_ps: u64, segment_ps: u64, seed: u64) -> Result<ClickStream> {
        if duration_ps == 0 || segment_ps == 0 {
            return Err(Error::InvalidParameter("duration and segment length must be > 0".into()));
        }
        let n_segments = duration_ps.div_ceil(segment_ps);
        let segments: Vec<Vec<ClickEvent>> = (0..n_segments)
            .into_par_iter()
            .map(|i| {
                let start = i * segment_ps;
                let end = (start + segment_ps).min(duration_ps);
                let mut rng = segment_rng(seed, i);
                let psi0 = self.sample_initial(&mut rng);
                let mut w = self.walker(psi0, rng);
                let mut out = Vec::new();
                while let Some(j) = w.advance_until(end - start) {
                    if let Some(mut e) = j.photon {
                        e.timestamp_ps += start;
                        out.push(e);
                    }
                }
                out
            })
            .collect();
        let events = segments.concat();
        let mut s = ClickStream::new(0, events, duration_ps)?;
        s.metadata = StreamMetadata {
            seed: Some(seed),
            params_fingerprint: Some(self.params.fingerprint()),
            efficiency: Some(1.0),
        };
        Ok(s)
    }

    /// Trajectory average of the level populations at `grid_ps`, starting
    /// every trajectory in `psi0`.
    pub fn ensemble_populations(&self, psi0: &Vector8, grid_ps: &[u64], n_traj: usize, seed: u64) -> Result<EnsembleAverage> {
        if grid_ps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("observation grid must be strictly increasing".into()));
        }
        let norm = psi0.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("initial state has norm {norm}")));
        }
        const CHUNK: usize = 256;
        let n_points = grid_ps.len();
        let chunks: Vec<(Vec<[f64; N_LEVELS]>, Vec<[f64; N_LEVELS]>)> = (0..n_traj.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut sum = vec![[0.0; N_LEVELS]; n_points];
                let mut sum_sq = vec![[0.0; N_LEVELS]; n_points];
                for traj in c * CHUNK..((c + 1) * CHUNK).min(n_traj) {
                    let mut w = self.walker(*psi0, segment_rng(seed, traj as u64));
                    for (k, &t) in grid_ps.iter().enumerate() {
                        while w.advance_until(t).is_some() {}
                        let p = w.populations();
                        for l in 0..N_LEVELS {
                            sum[k][l] += p[l];
                            sum_sq[k][l] += p[l] * p[l];
                        }
                    }
                }
                (sum, sum_sq)
            })
            .collect();
        let mut mean = vec![[0.0; N_LEVELS]; n_points];
        let mut sq = vec![[0.0; N_LEVELS]; n_points];
        for (s, s2) in &chunks {
            for k in 0..n_points {
                for l in 0..N_LEVELS {
                    mean[k][l] += s[k][l];
                    sq[k][l] += s2[k][l];
                }
            }
        }
        let n = n_traj as f64;
        let mut std_err = vec![[0.0; N_LEVELS]; n_points];
        for k in 0..n_points {
            for l in 0..N_LEVELS {
                mean[k][l] /= n;
                let var = (sq[k][l] / n - mean[k][l] * mean[k][l]).max(0.0);
                std_err[k][l] = (var / (n - 1.0).max(1.0)).sqrt();
            }
        }
        Ok(EnsembleAverage { times_ps: grid_ps.to_vec(), mean, std_err })
    }
}

/// Mean populations and their standard errors over many trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleAverage {
    pub times_ps: Vec<u64>,
    pub mean: Vec<[f64; N_LEVELS]>,
    pub std_err: Vec<[f64; N_LEVELS]>,
}

/// RNG for trajectory or segment `index` of a run seeded with `seed`.
pub fn segment_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn basis(level: usize) -> Vector8 {
    let mut v = Vector8::zeros();
    v[level] = C64::new(1.0, 0.0);
    v
}

fn threshold(rng: &mut ChaCha8Rng) -> f64 {
    // uniform on (0, 1]
    1.0 - rng.random::<f64>()
}

/// One quantum trajectory. The state is kept unnormalized between jumps.
pub struct Walker<'a> {
    sim: &'a JumpSimulator,
    psi: Vector8,
    threshold: f64,
    time_ps: u64,
    rng: ChaCha8Rng,
}

impl<'a> Walker<'a> {
    pub fn new(sim: &'a JumpSimulator, psi0: Vector8, mut rng: ChaCha8Rng) -> Self {
        let threshold = threshold(&mut rng);
        Walker { sim, psi: psi0 / C64::new(psi0.norm(), 0.0), threshold, time_ps: 0, rng }
    }

    pub fn time_ps(&self) -> u64 {
        self.time_ps
    }

    /// Normalized state.
    pub fn state(&self) -> Vector8 {
        self.psi / C64::new(self.psi.norm(), 0.0)
    }

    pub fn populations(&self) -> [f64; N_LEVELS] {
        let n = self.psi.norm_squared();
        std::array::from_fn(|i| self.psi[i].norm_sqr() / n)
    }

    /// Evolves to `t_stop` or to the next jump, whichever comes first.
    /// Returns the jump if one happened; the walker then sits at the jump
    /// time in the post-jump state.
    pub fn advance_until(&mut self, t_stop: u64) -> Option<Jump> {
        let mut k = MAX_POWER;
        while self.time_ps < t_stop {
            let remaining = t_stop - self.time_ps;
            while (1u64 << k) > remaining {
                k -= 1;
            }
            let candidate = self.sim.steps[k] * self.psi;
            if candidate.norm_squared() > self.threshold {
                self.psi = candidate;
                self.time_ps += 1 << k;
            } else if k == 0 {
                self.time_ps += 1;
                return Some(self.jump(candidate));
            } else {
                k -= 1;
            }
        }
        None
    }

    fn jump(&mut self, psi: Vector8) -> Jump {
        let weights: Vec<f64> = self
            .sim
            .channels
            .iter()
            .map(|c| {
                c.rate
                    * match c.kind {
                        JumpKind::Decay { upper, .. } => psi[upper].norm_sqr(),
                        JumpKind::Dephasing { levels } => {
                            (0..N_LEVELS).filter(|&i| levels[i]).map(|i| psi[i].norm_sqr()).sum()
                        }
                    }
            })
            .collect();
        let total: f64 = weights.iter().sum();
        let mut u = self.rng.random::<f64>() * total;
        let mut pick = weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
        for (i, w) in weights.iter().enumerate() {
            if u < *w {
                pick = i;
                break;
            }
            u -= w;
        }
        let channel = self.sim.channels[pick];
        let photon = match channel.kind {
            JumpKind::Decay { lower, polarization, wavelength, .. } => {
                self.psi = basis(lower);
                Some(ClickEvent::new(self.time_ps, Some(polarization), Some(wavelength)))
            }
            JumpKind::Dephasing { levels } => {
                let mut projected = psi;
                for i in 0..N_LEVELS {
                    if !levels[i] {
                        projected[i] = C64::new(0.0, 0.0);
                    }
                }
                self.psi = projected / C64::new(projected.norm(), 0.0);
                None
            }
        };
        self.threshold = threshold(&mut self.rng);
        Jump { time_ps: self.time_ps, channel: pick, photon }
    }
}

/// Complete emission record over `duration` seconds.
pub fn simulate_emissions(params: &ExperimentParams, duration: f64, seed: u64) -> Result<ClickStream> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::InvalidParameter(format!("duration {duration} must be > 0")));
    }
    let duration_ps = (duration * 1e12).round() as u64;
    JumpSimulator::new(params)?.simulate(duration_ps, DEFAULT_SEGMENT_PS, seed)
}

/// One detection path: collection efficiency, polarization filter and
/// dark counts.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DetectorPath {
    pub efficiency: f64,
    /// Polarization passed by the filter; `None` passes everything.
    pub accept: Option<Polarization>,
    /// Probability that a photon of the orthogonal polarization leaks
    /// through the filter; the accepted one passes with 1 − crosstalk. A σ
    /// filter blocks π photons.
    pub crosstalk: f64,
    /// Wavelength passed by the interference filter; `None` passes both.
    pub wavelength: Option<Wavelength>,
    /// Dark counts per second.
    pub dark_rate: f64,
}

impl DetectorPath {
    pub fn ideal(accept: Option<Polarization>) -> Self {
        DetectorPath { efficiency: 1.0, accept, crosstalk: 0.0, wavelength: Some(Wavelength::Nm397), dark_rate: 0.0 }
    }

    fn validate(&self) -> Result<()> {
        for (name, p) in [("efficiency", self.efficiency), ("crosstalk", self.crosstalk)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("{name} = {p} outside [0, 1]")));
            }
        }
        if !(self.dark_rate >= 0.0 && self.dark_rate.is_finite()) {
            return Err(Error::InvalidParameter("dark rate must be >= 0".into()));
        }
        Ok(())
    }

    fn transmission(&self, e: &ClickEvent) -> f64 {
        if self.wavelength.is_some() && e.wavelength != self.wavelength {
            return 0.0;
        }
        match self.accept {
            None => 1.0,
            Some(p) if e.polarization == Some(p) => 1.0 - self.crosstalk,
            // no π light along the quantization axis
            Some(p) if p != Polarization::Pi && e.polarization == Some(Polarization::Pi) => 0.0,
            Some(_) => self.crosstalk,
        }
    }
}

/// Two detection paths fed from the same ion.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DetectionConfig {
    pub paths: [DetectorPath; 2],
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<()> {
        self.paths.iter().try_for_each(DetectorPath::validate)
    }
}

/// Splits the emission record over the two paths and applies filters and
/// dark counts.
///
/// A photon enters path k with probability η_k / max(1, η_1 + η_2), so the
/// paths never share a photon. A click on a path with a polarization filter
/// is tagged with the filter's polarization; without a filter it keeps the
/// emitted tag. Dark counts carry no tags. Clicks landing on an already
/// occupied picosecond are dropped.
pub fn detect(emissions: &ClickStream, config: &DetectionConfig, seed: u64) -> Result<(ClickStream, ClickStream)> {
    config.validate()?;
    emissions.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eta: Vec<f64> = config.paths.iter().map(|p| p.efficiency).collect();
    let scale = (eta[0] + eta[1]).max(1.0);
    let mut out: [Vec<ClickEvent>; 2] = [Vec::new(), Vec::new()];
    for e in &emissions.events {
        let u = rng.random::<f64>() * scale;
        let path = if u < eta[0] {
            0
        } else if u < eta[0] + eta[1] {
            1
        } else {
            continue;
        };
        let cfg = &config.paths[path];
        if rng.random::<f64>() < cfg.transmission(e) {
            let polarization = cfg.accept.or(e.polarization);
            out[path].push(ClickEvent::new(e.timestamp_ps, polarization, e.wavelength));
        }
    }
    let duration = emissions.duration_ps;
    let mut streams = Vec::with_capacity(2);
    for (k, events) in out.into_iter().enumerate() {
        let cfg = &config.paths[k];
        let mut events = events;
        if cfg.dark_rate > 0.0 && duration > 0 {
            let gap = Exp::new(cfg.dark_rate * 1e-12).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            let mut t = gap.sample(&mut rng);
            while t <= duration as f64 {
                events.push(ClickEvent::new(t as u64, None, None));
                t += gap.sample(&mut rng);
            }
        }
        let mut s = ClickStream::from_unsorted(k as u32 + 1, events, duration)?;
        s.metadata = StreamMetadata {
            seed: Some(seed),
            params_fingerprint: emissions.metadata.params_fingerprint.clone(),
            efficiency: Some(cfg.efficiency),
        };
        streams.push(s);
    }
    let b = streams.pop().expect("two paths");
    let a = streams.pop().expect("two paths");
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atom::P_MINUS;

    #[test]
    fn undriven_ground_state_never_emits() {
        let mut p = ExperimentParams::weak_excitation();
        p.omega_397 = 0.0;
        p.omega_866 = 0.0;
        let s = simulate_emissions(&p, 1e-4, 1).unwrap();
        assert!(s.is_empty());
        assert_eq!(s.duration_ps, 100_000_000);
    }

    #[test]
    fn seeded_runs_repeat() {
        let sim = JumpSimulator::new(&ExperimentParams::strong_excitation()).unwrap();
        let a = sim.simulate(20_000_000, 5_000_000, 9).unwrap();
        let b = sim.simulate(20_000_000, 5_000_000, 9).unwrap();
        let c = sim.simulate(20_000_000, 5_000_000, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.events, c.events);
        assert!(!a.is_empty());
    }

    #[test]
    fn excited_state_emits_once_then_rests_without_drive() {
        let mut p = ExperimentParams::weak_excitation();
        p.omega_397 = 0.0;
        p.omega_866 = 0.0;
        let sim = JumpSimulator::new(&p).unwrap();
        let mut w = sim.walker(basis(P_MINUS), segment_rng(3, 0));
        let j = w.advance_until(10_000_000).unwrap();
        assert!(j.photon.is_some());
        assert!(w.advance_until(10_000_000).is_none());
        assert_eq!(w.time_ps(), 10_000_000);
    }

    #[test]
    fn zero_efficiency_leaves_only_dark_counts() {
        let sim = JumpSimulator::new(&ExperimentParams::strong_excitation()).unwrap();
        let em = sim.simulate(50_000_000, DEFAULT_SEGMENT_PS, 2).unwrap();
        let mut path = DetectorPath::ideal(None);
        path.efficiency = 0.0;
        path.dark_rate = 2e6;
        let (a, b) = detect(&em, &DetectionConfig { paths: [path, path] }, 5).unwrap();
        assert!(a.events.iter().chain(&b.events).all(|e| e.polarization.is_none()));
        assert!(!a.is_empty() && !b.is_empty());
    }

    #[test]
    fn full_efficiency_splits_without_loss() {
        let sim = JumpSimulator::new(&ExperimentParams::strong_excitation()).unwrap();
        let em = sim.simulate(50_000_000, DEFAULT_SEGMENT_PS, 4).unwrap();
        let mut path = DetectorPath::ideal(None);
        path.wavelength = None;
        let (a, b) = detect(&em, &DetectionConfig { paths: [path, path] }, 6).unwrap();
        assert_eq!(a.len() + b.len(), em.len());
        let mut merged: Vec<u64> = a.timestamps().into_iter().chain(b.timestamps()).collect();
        merged.sort_unstable();
        assert_eq!(merged, em.timestamps());
    }

    #[test]
    fn config_is_validated() {
        let mut path = DetectorPath::ideal(None);
        path.crosstalk = 1.5;
        let em = ClickStream::new(0, vec![], 10).unwrap();
        assert!(detect(&em, &DetectionConfig { paths: [path, path] }, 0).is_err());
    }
}
