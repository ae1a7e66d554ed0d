//! Hamiltonian, dissipators and the 64×64 Lindblad generator.
//!
//! The Hamiltonian is written in a frame rotating with both lasers: P½
//! rotates with the 397 nm laser, D3/2 with the difference of the two laser
//! frequencies. Under the rotating-wave approximation the generator is then
//! time independent:
//!
//! ```text
//! dρ/dt = −i[H, ρ] + Σ_c γ_c (C ρ C† − ½{C†C, ρ}) + Σ_k δ_k (P_k ρ P_k − ½{P_k, ρ})
//! ```
//!
//! with one jump operator `C = |lower⟩⟨upper|` per dipole channel
//! (`γ_c = Γ_manifold · amplitude²`) and projector dephasing for finite
//! laser linewidths.

use nalgebra::DMatrix;

use crate::atom::{
    polarization_components, zeeman_shifts, LevelScheme, Manifold, Polarization, TransitionTable, Wavelength,
};
use crate::dynamics::DensityMatrix;
use crate::{ExperimentParams, Matrix8, Result, C64, N_LEVELS, N_LIOUVILLE};

/// Position of ρ_ij in the row-major vectorization.
#[inline]
pub fn vec_index(i: usize, j: usize) -> usize {
    i * N_LEVELS + j
}

/// Spontaneous decay along one dipole channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayChannel {
    pub upper: usize,
    pub lower: usize,
    /// Γ_manifold · amplitude², rad/s.
    pub rate: f64,
    pub polarization: Polarization,
    pub wavelength: Wavelength,
}

/// Pure dephasing `√rate · P` with `P` the projector onto `levels`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dephasing {
    pub rate: f64,
    pub levels: [bool; N_LEVELS],
}

/// Frame in which the Hamiltonian is time independent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatingFrame {
    /// Diagonal of H: detuning terms plus Zeeman shifts, rad/s.
    pub energies: [f64; N_LEVELS],
    pub delta_397: f64,
    pub delta_866: f64,
}

impl RotatingFrame {
    pub fn description(&self) -> &'static str {
        "S1/2 static; P1/2 rotating at the 397 nm laser frequency; \
         D3/2 rotating at the 397 nm minus 866 nm laser frequency; RWA"
    }
}

/// All ingredients of the master equation, shared by the density-matrix
/// solver and the quantum-jump simulator.
#[derive(Debug, Clone)]
pub struct MasterEquation {
    pub scheme: LevelScheme,
    pub table: TransitionTable,
    pub hamiltonian: Matrix8,
    pub decays: Vec<DecayChannel>,
    pub dephasing: Vec<Dephasing>,
    pub frame: RotatingFrame,
}

impl MasterEquation {
    pub fn new(params: &ExperimentParams) -> Result<Self> {
        params.validate()?;
        let scheme = LevelScheme::ca40();
        let table = TransitionTable::ca40(&scheme, params.gamma_sp, params.gamma_dp);
        let shifts = zeeman_shifts(&scheme, params.b_gauss);

        let mut energies = [0.0; N_LEVELS];
        for (i, e) in energies.iter_mut().enumerate() {
            let offset = match scheme.levels[i].manifold {
                Manifold::S12 => 0.0,
                Manifold::P12 => -params.delta_397,
                Manifold::D32 => params.delta_866 - params.delta_397,
            };
            *e = offset + shifts[i];
        }

        let mut h = Matrix8::zeros();
        for (i, &e) in energies.iter().enumerate() {
            h[(i, i)] = C64::new(e, 0.0);
        }
        let blue = polarization_components(params.alpha_397);
        let red = polarization_components(params.alpha_866);

        let mut decays = Vec::with_capacity(table.channels.len());
        for ch in &table.channels {
            let lower = scheme.levels[ch.lower].manifold;
            let (rabi, pol, rate, wavelength) = match lower {
                Manifold::D32 => (params.omega_866, &red, params.gamma_dp, Wavelength::Nm866),
                _ => (params.omega_397, &blue, params.gamma_sp, Wavelength::Nm397),
            };
            let coupling = pol.for_q(ch.q) * (rabi * ch.amplitude);
            h[(ch.upper, ch.lower)] += coupling;
            h[(ch.lower, ch.upper)] += coupling.conj();
            if rate > 0.0 {
                decays.push(DecayChannel {
                    upper: ch.upper,
                    lower: ch.lower,
                    rate: rate * ch.amplitude * ch.amplitude,
                    polarization: ch.polarization(),
                    wavelength,
                });
            }
        }

        let mut dephasing = Vec::new();
        let in_manifolds = |ms: &[Manifold]| {
            let mut mask = [false; N_LEVELS];
            for (m, lv) in mask.iter_mut().zip(scheme.levels.iter()) {
                *m = ms.contains(&lv.manifold);
            }
            mask
        };
        // P and D both carry the 397 nm phase in this frame, D carries the 866 nm phase
        if params.linewidth_397 > 0.0 {
            dephasing.push(Dephasing {
                rate: params.linewidth_397,
                levels: in_manifolds(&[Manifold::P12, Manifold::D32]),
            });
        }
        if params.linewidth_866 > 0.0 {
            dephasing.push(Dephasing {
                rate: params.linewidth_866,
                levels: in_manifolds(&[Manifold::D32]),
            });
        }

        Ok(MasterEquation {
            scheme,
            table,
            hamiltonian: h,
            decays,
            dephasing,
            frame: RotatingFrame {
                energies,
                delta_397: params.delta_397,
                delta_866: params.delta_866,
            },
        })
    }

    /// H − (i/2) Σ C†C, the generator of the no-jump evolution.
    pub fn effective_hamiltonian(&self) -> Matrix8 {
        let mut h = self.hamiltonian;
        for d in &self.decays {
            h[(d.upper, d.upper)] -= C64::new(0.0, 0.5 * d.rate);
        }
        for dp in &self.dephasing {
            for (i, &inside) in dp.levels.iter().enumerate() {
                if inside {
                    h[(i, i)] -= C64::new(0.0, 0.5 * dp.rate);
                }
            }
        }
        h
    }

    pub fn liouvillian(&self) -> Liouvillian {
        let n = N_LEVELS;
        let mut l = DMatrix::<C64>::zeros(N_LIOUVILLE, N_LIOUVILLE);
        let minus_i = C64::new(0.0, -1.0);
        let h = &self.hamiltonian;

        for i in 0..n {
            for j in 0..n {
                let row = vec_index(i, j);
                for k in 0..n {
                    // −i H ρ
                    if h[(i, k)] != C64::new(0.0, 0.0) {
                        l[(row, vec_index(k, j))] += minus_i * h[(i, k)];
                    }
                    // +i ρ H
                    if h[(k, j)] != C64::new(0.0, 0.0) {
                        l[(row, vec_index(i, k))] -= minus_i * h[(k, j)];
                    }
                }
            }
        }

        for d in &self.decays {
            l[(vec_index(d.lower, d.lower), vec_index(d.upper, d.upper))] += d.rate;
            for i in 0..n {
                for j in 0..n {
                    let hits = usize::from(i == d.upper) + usize::from(j == d.upper);
                    if hits > 0 {
                        l[(vec_index(i, j), vec_index(i, j))] -= 0.5 * d.rate * hits as f64;
                    }
                }
            }
        }

        for dp in &self.dephasing {
            for i in 0..n {
                for j in 0..n {
                    if dp.levels[i] != dp.levels[j] {
                        l[(vec_index(i, j), vec_index(i, j))] -= 0.5 * dp.rate;
                    }
                }
            }
        }

        Liouvillian { matrix: l, frame: self.frame }
    }
}

/// Generator of the master equation acting on row-major vectorized 8×8
/// density matrices.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    pub matrix: DMatrix<C64>,
    pub frame: RotatingFrame,
}

impl Liouvillian {
    /// dρ/dt for the given state.
    pub fn apply(&self, rho: &DensityMatrix) -> Matrix8 {
        let v = &self.matrix * rho.to_vector();
        Matrix8::from_fn(|i, j| v[vec_index(i, j)])
    }

    /// Largest component of trace(L(·)) relative to the generator norm.
    /// Zero for an exactly trace-preserving generator.
    pub fn trace_residual(&self) -> f64 {
        let norm = self.norm();
        (0..N_LIOUVILLE)
            .map(|col| {
                (0..N_LEVELS)
                    .map(|i| self.matrix[(vec_index(i, i), col)])
                    .sum::<C64>()
                    .norm()
            })
            .fold(0.0, f64::max)
            / norm
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.matrix.norm()
    }
}

/// Builds the Lindblad generator for the given parameters.
pub fn build_liouvillian(params: &ExperimentParams) -> Result<Liouvillian> {
    Ok(MasterEquation::new(params)?.liouvillian())
}
