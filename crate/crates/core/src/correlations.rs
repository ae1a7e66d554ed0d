//! Second-order correlation functions, polarization purity and excitation
//! spectra computed from the master equation.
//!
//! A detected photon projects the ion onto the ground state it decayed to.
//! By the quantum regression theorem the intensity correlation is then the
//! excited population evolved from that projected state, normalized by its
//! steady-state value:
//!
//! * first photon σ⁻ leaves the ion in S(+½), first σ⁺ in S(−½);
//! * a second σ⁻ photon is emitted from P(−½), a second σ⁺ from P(+½).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atom::{zeeman_shifts, LevelScheme, Manifold, Polarization, P_MINUS, P_PLUS, S_MINUS, S_PLUS};
use crate::dynamics::{check_grid, steady_state, steady_state_fast, steady_state_residual, DensityMatrix, Propagator};
use crate::liouvillian::{build_liouvillian, Liouvillian};
use crate::{Error, ExperimentParams, Result, C64, Matrix8};

/// Which correlation a curve represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CurveKind {
    Total,
    Conditioned { first: Polarization, second: Polarization },
}

impl CurveKind {
    pub fn label(&self) -> String {
        match self {
            CurveKind::Total => "total".into(),
            CurveKind::Conditioned { first, second } => format!("{}|{}", first.label(), second.label()),
        }
    }
}

/// Steady-state excited populations used to normalize a curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub rho_33: f64,
    pub rho_44: f64,
}

/// g²(τ) sampled on a delay grid (seconds).
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationCurve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: CurveKind,
    pub normalization: Normalization,
    /// Set when the curve went through [`apply_error_model`].
    pub error_model: Option<ErrorModel>,
    /// Accidental-coincidence floor β of [`CorrelationCurve::with_background`].
    pub background: f64,
}

impl CorrelationCurve {
    /// Largest value and the delay at which it occurs.
    pub fn peak(&self) -> (f64, f64) {
        self.times
            .iter()
            .zip(&self.values)
            .fold((f64::NAN, f64::NEG_INFINITY), |best, (&t, &v)| if v > best.1 { (t, v) } else { best })
    }

    /// Value at the grid point closest to `tau`.
    pub fn value_at(&self, tau: f64) -> f64 {
        let i = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - tau).abs().total_cmp(&(b.1 - tau).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        self.values[i]
    }

    /// (g + β)/(1 + β): an uncorrelated floor of relative height β.
    pub fn with_background(&self, beta: f64) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("background {beta} must be >= 0")));
        }
        Ok(CorrelationCurve {
            values: self.values.iter().map(|g| (g + beta) / (1.0 + beta)).collect(),
            background: beta,
            ..self.clone()
        })
    }
}

/// All four polarization-conditioned curves on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedCurves {
    pub minus_minus: CorrelationCurve,
    pub minus_plus: CorrelationCurve,
    pub plus_plus: CorrelationCurve,
    pub plus_minus: CorrelationCurve,
}

impl ConditionedCurves {
    pub fn get(&self, first: Polarization, second: Polarization) -> Result<&CorrelationCurve> {
        use Polarization::*;
        match (first, second) {
            (SigmaMinus, SigmaMinus) => Ok(&self.minus_minus),
            (SigmaMinus, SigmaPlus) => Ok(&self.minus_plus),
            (SigmaPlus, SigmaPlus) => Ok(&self.plus_plus),
            (SigmaPlus, SigmaMinus) => Ok(&self.plus_minus),
            _ => Err(Error::InvalidParameter("conditioned curves need sigma polarizations".into())),
        }
    }
}

/// Ground state left behind by a first photon of polarization `pol`.
pub fn projected_ground_state(pol: Polarization) -> Result<usize> {
    match pol {
        Polarization::SigmaMinus => Ok(S_PLUS),
        Polarization::SigmaPlus => Ok(S_MINUS),
        Polarization::Pi => Err(Error::InvalidParameter("pi photons do not select a ground state".into())),
    }
}

/// Excited state that emits a second photon of polarization `pol`.
pub fn emitting_state(pol: Polarization) -> Result<usize> {
    match pol {
        Polarization::SigmaMinus => Ok(P_MINUS),
        Polarization::SigmaPlus => Ok(P_PLUS),
        Polarization::Pi => Err(Error::InvalidParameter("pi photons are not resolved".into())),
    }
}

/// Master equation of one parameter set together with its steady state.
#[derive(Debug, Clone)]
pub struct IonModel {
    pub params: ExperimentParams,
    pub liouvillian: Liouvillian,
    pub steady: DensityMatrix,
}

impl IonModel {
    pub fn new(params: &ExperimentParams) -> Result<Self> {
        let liouvillian = build_liouvillian(params)?;
        let steady = steady_state(&liouvillian)?;
        Ok(IonModel { params: *params, liouvillian, steady })
    }

    /// Same as [`IonModel::new`] with the cheaper pivot-based degeneracy test.
    pub fn new_fast(params: &ExperimentParams) -> Result<Self> {
        let liouvillian = build_liouvillian(params)?;
        let steady = steady_state_fast(&liouvillian)?;
        Ok(IonModel { params: *params, liouvillian, steady })
    }

    /// Uses a caller-supplied reference state for normalization, for
    /// configurations whose stationary state is not unique.
    pub fn with_steady_state(params: &ExperimentParams, steady: DensityMatrix) -> Result<Self> {
        steady.validate()?;
        let liouvillian = build_liouvillian(params)?;
        Ok(IonModel { params: *params, liouvillian, steady })
    }

    pub fn normalization(&self) -> Normalization {
        Normalization { rho_33: self.steady.population(P_MINUS), rho_44: self.steady.population(P_PLUS) }
    }

    pub fn residual(&self) -> f64 {
        steady_state_residual(&self.liouvillian, &self.steady)
    }

    fn curve(&self, kind: CurveKind, grid: &[f64], values: Vec<f64>) -> CorrelationCurve {
        CorrelationCurve {
            times: grid.to_vec(),
            values,
            kind,
            normalization: self.normalization(),
            error_model: None,
            background: 0.0,
        }
    }

    /// Unconditioned g²(τ) = (ρ₃₃ + ρ₄₄)(τ)/(ρ₃₃ + ρ₄₄)(∞), starting from
    /// the ground-state mixture left by a σ photon.
    pub fn g2_total(&self, grid: &[f64]) -> Result<CorrelationCurve> {
        let norm = self.normalization();
        let excited = norm.rho_33 + norm.rho_44;
        if !(excited > 0.0) {
            return Err(Error::ZeroDenominator { tau: f64::INFINITY });
        }
        let mut m = Matrix8::zeros();
        m[(S_MINUS, S_MINUS)] = C64::new(norm.rho_44 / excited, 0.0);
        m[(S_PLUS, S_PLUS)] = C64::new(norm.rho_33 / excited, 0.0);
        let rho0 = DensityMatrix::new(m)?;
        let tr = Propagator::new(&self.liouvillian).run(&rho0, grid)?;
        let values = tr
            .states
            .iter()
            .map(|s| (s.population(P_MINUS) + s.population(P_PLUS)) / excited)
            .collect();
        Ok(self.curve(CurveKind::Total, grid, values))
    }

    pub fn g2_conditioned(&self, first: Polarization, second: Polarization, grid: &[f64]) -> Result<CorrelationCurve> {
        let start = projected_ground_state(first)?;
        let emitter = emitting_state(second)?;
        let norm = self.steady.population(emitter);
        if !(norm > 0.0) {
            return Err(Error::ZeroDenominator { tau: f64::INFINITY });
        }
        let tr = Propagator::new(&self.liouvillian).run(&DensityMatrix::pure(start), grid)?;
        let values = tr.population(emitter).into_iter().map(|p| p / norm).collect();
        Ok(self.curve(CurveKind::Conditioned { first, second }, grid, values))
    }

    /// The four σ-conditioned curves, sharing one set of propagators.
    pub fn conditioned_all(&self, grid: &[f64]) -> Result<ConditionedCurves> {
        let norm = self.normalization();
        if !(norm.rho_33 > 0.0 && norm.rho_44 > 0.0) {
            return Err(Error::ZeroDenominator { tau: f64::INFINITY });
        }
        let initial = [DensityMatrix::pure(S_PLUS), DensityMatrix::pure(S_MINUS)];
        let mut runs = Propagator::new(&self.liouvillian).run_many(&initial, grid)?;
        let after_plus = runs.pop().expect("two runs");
        let after_minus = runs.pop().expect("two runs");
        let make = |tr: &crate::Trajectory, first, second| -> Result<CorrelationCurve> {
            let level = emitting_state(second)?;
            let n = self.steady.population(level);
            let values = tr.population(level).into_iter().map(|p| p / n).collect();
            Ok(self.curve(CurveKind::Conditioned { first, second }, grid, values))
        };
        use Polarization::{SigmaMinus as M, SigmaPlus as P};
        Ok(ConditionedCurves {
            minus_minus: make(&after_minus, M, M)?,
            minus_plus: make(&after_minus, M, P)?,
            plus_plus: make(&after_plus, P, P)?,
            plus_minus: make(&after_plus, P, M)?,
        })
    }

    /// Expected number of photons of polarization `pol` emitted into the
    /// full solid angle during `duration` seconds:
    /// Γ_SP · 2/3 · ρ_excited(∞) · T.
    pub fn mean_photon_number(&self, pol: Polarization, duration: f64) -> Result<f64> {
        let level = emitting_state(pol)?;
        Ok(self.params.gamma_sp * (2.0 / 3.0) * self.steady.population(level) * duration)
    }
}

pub fn g2_total(params: &ExperimentParams, grid: &[f64]) -> Result<CorrelationCurve> {
    IonModel::new(params)?.g2_total(grid)
}

pub fn g2_conditioned(
    params: &ExperimentParams,
    first: Polarization,
    second: Polarization,
    grid: &[f64],
) -> Result<CorrelationCurve> {
    IonModel::new(params)?.g2_conditioned(first, second, grid)
}

pub fn mean_photon_number(params: &ExperimentParams, pol: Polarization, duration: f64) -> Result<f64> {
    IonModel::new(params)?.mean_photon_number(pol, duration)
}

/// Least-squares slope of log g² against log τ over `[t_lo, t_hi]`.
pub fn log_log_slope(curve: &CorrelationCurve, t_lo: f64, t_hi: f64) -> Result<f64> {
    let mut pts = Vec::new();
    for (&t, &v) in curve.times.iter().zip(&curve.values) {
        if t >= t_lo * (1.0 - 1e-9) && t <= t_hi * (1.0 + 1e-9) {
            if !(v > 0.0) {
                return Err(Error::NonPositive { tau: t, value: v });
            }
            pts.push((t.ln(), v.ln()));
        }
    }
    if pts.len() < 2 {
        return Err(Error::InvalidGrid(format!("fewer than two grid points in [{t_lo:e}, {t_hi:e}]")));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Window of the short-time exponent fit, seconds.
pub const EXPONENT_WINDOW: (f64, f64) = (0.1e-9, 1e-9);

/// Power-law exponents (n⁻, n⁺) of the rise of the two curves.
pub fn short_time_exponents(minus: &CorrelationCurve, plus: &CorrelationCurve) -> Result<(f64, f64)> {
    let (lo, hi) = EXPONENT_WINDOW;
    Ok((log_log_slope(minus, lo, hi)?, log_log_slope(plus, lo, hi)?))
}

fn check_shared_grid(a: &CorrelationCurve, b: &CorrelationCurve) -> Result<()> {
    if a.times != b.times || a.values.len() != a.times.len() || b.values.len() != b.times.len() {
        return Err(Error::InvalidGrid("curves do not share one grid".into()));
    }
    check_grid(&a.times)
}

fn cumulative_trapezoid(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    std::iter::once(0.0)
        .chain(times.windows(2).zip(values.windows(2)).map(|(t, v)| {
            acc += 0.5 * (t[1] - t[0]) * (v[0] + v[1]);
            acc
        }))
        .collect()
}

/// p(τ) = ∫₀^τ g²σ⁻ / ∫₀^τ g²σ⁺ by trapezoidal quadrature. `tau` must be a
/// grid point.
pub fn purity(minus: &CorrelationCurve, plus: &CorrelationCurve, tau: f64) -> Result<f64> {
    check_shared_grid(minus, plus)?;
    let times = &minus.times;
    let spacing = times.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let idx = times
        .iter()
        .position(|&t| (t - tau).abs() <= 1e-6 * spacing.min(tau.abs().max(spacing)))
        .ok_or_else(|| Error::InvalidGrid(format!("tau = {tau:e} s is not a grid point")))?;
    let num = cumulative_trapezoid(times, &minus.values)[idx];
    let den = cumulative_trapezoid(times, &plus.values)[idx];
    if den == 0.0 {
        return Err(Error::ZeroDenominator { tau });
    }
    Ok(num / den)
}

/// p(τ) on every grid point after τ = 0.
pub fn purity_curve(minus: &CorrelationCurve, plus: &CorrelationCurve) -> Result<Vec<(f64, f64)>> {
    check_shared_grid(minus, plus)?;
    let num = cumulative_trapezoid(&minus.times, &minus.values);
    let den = cumulative_trapezoid(&plus.times, &plus.values);
    minus
        .times
        .iter()
        .zip(num.iter().zip(&den))
        .skip(1)
        .map(|(&t, (&n, &d))| if d == 0.0 { Err(Error::ZeroDenominator { tau: t }) } else { Ok((t, n / d)) })
        .collect()
}

/// Probability p/(1+p) that a pair has the conditioned polarization.
pub fn pair_probability(p: f64) -> f64 {
    if p.is_infinite() && p > 0.0 {
        1.0
    } else {
        p / (1.0 + p)
    }
}

/// Polarization errors of the conditioning and the two detection channels.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorModel {
    pub eps_init: f64,
    pub eps_minus: f64,
    pub eps_plus: f64,
}

impl ErrorModel {
    pub fn new(eps_init: f64, eps_minus: f64, eps_plus: f64) -> Result<Self> {
        let em = ErrorModel { eps_init, eps_minus, eps_plus };
        em.validate()?;
        Ok(em)
    }

    pub fn ideal() -> Self {
        ErrorModel::default()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, e) in [("eps_init", self.eps_init), ("eps_minus", self.eps_minus), ("eps_plus", self.eps_plus)] {
            if !(0.0..=1.0).contains(&e) {
                return Err(Error::InvalidParameter(format!("{name} = {e} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Measured σ⁻-conditioned curves (g̃²σ⁻, g̃²σ⁺) under polarization errors.
///
/// A fraction ε_init of conditioning events really were σ⁺ photons, so the
/// initial state is the mixture (1−ε_init)|S+½⟩ + ε_init|S−½⟩. Each
/// detection channel then admits a fraction ε of the orthogonal
/// polarization.
pub fn apply_error_model(curves: &ConditionedCurves, em: &ErrorModel) -> Result<(CorrelationCurve, CorrelationCurve)> {
    em.validate()?;
    check_shared_grid(&curves.minus_minus, &curves.plus_plus)?;
    check_shared_grid(&curves.minus_plus, &curves.plus_minus)?;
    let mix = |a: &[f64], b: &[f64], w: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| (1.0 - w) * x + w * y).collect()
    };
    let second_minus = mix(&curves.minus_minus.values, &curves.plus_minus.values, em.eps_init);
    let second_plus = mix(&curves.minus_plus.values, &curves.plus_plus.values, em.eps_init);
    let measured_minus = mix(&second_minus, &second_plus, em.eps_minus);
    let measured_plus = mix(&second_plus, &second_minus, em.eps_plus);
    let wrap = |base: &CorrelationCurve, values| CorrelationCurve {
        values,
        error_model: Some(*em),
        ..base.clone()
    };
    Ok((wrap(&curves.minus_minus, measured_minus), wrap(&curves.minus_plus, measured_plus)))
}

/// Steady-state fluorescence ρ₃₃ + ρ₄₄ against the 866 nm detuning.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumCurve {
    /// Δ866 in rad/s.
    pub detunings: Vec<f64>,
    /// scale · (ρ₃₃ + ρ₄₄) + background; NaN at flagged points.
    pub values: Vec<f64>,
    /// Points whose steady state could not be determined uniquely.
    pub flagged: Vec<bool>,
    pub scale: f64,
    pub background: f64,
}

impl SpectrumCurve {
    /// Rescales the dimensionless populations to count rates.
    pub fn scaled(&self, scale: f64, background: f64) -> Result<Self> {
        if !(background >= 0.0) || !scale.is_finite() {
            return Err(Error::InvalidParameter("background must be >= 0".into()));
        }
        let values = self
            .values
            .iter()
            .map(|v| (v - self.background) / self.scale * scale + background)
            .collect();
        Ok(SpectrumCurve { values, scale, background, ..self.clone() })
    }

    pub fn excited_populations(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(move |v| (v - self.background) / self.scale)
    }
}

/// Default scan: 400 points over Δ866/2π ∈ [−40, +40] MHz.
pub fn default_spectrum_grid() -> Vec<f64> {
    let n = 400;
    let (lo, hi) = (crate::units::mhz_to_angular(-40.0), crate::units::mhz_to_angular(40.0));
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

/// Fluorescence at every Δ866 of `grid`; the 866 nm detuning of `params`
/// is ignored.
pub fn excitation_spectrum(params: &ExperimentParams, grid: &[f64]) -> Result<SpectrumCurve> {
    params.validate()?;
    let points: Vec<Option<f64>> = grid
        .par_iter()
        .map(|&d| {
            let p = ExperimentParams { delta_866: d, ..*params };
            build_liouvillian(&p)
                .and_then(|l| steady_state_fast(&l))
                .ok()
                .map(|s| s.population(P_MINUS) + s.population(P_PLUS))
        })
        .collect();
    Ok(SpectrumCurve {
        detunings: grid.to_vec(),
        values: points.iter().map(|v| v.unwrap_or(f64::NAN)).collect(),
        flagged: points.iter().map(Option::is_none).collect(),
        scale: 1.0,
        background: 0.0,
    })
}

/// Δ866 of the strict local minima of the spectrum (dark resonances).
pub fn dark_resonances(spectrum: &SpectrumCurve) -> Vec<f64> {
    let v = &spectrum.values;
    (1..v.len().saturating_sub(1))
        .filter(|&i| v[i] < v[i - 1] && v[i] < v[i + 1])
        .map(|i| spectrum.detunings[i])
        .collect()
}

/// Two-photon resonance between an S and a D sublevel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamanCondition {
    pub s_level: usize,
    pub d_level: usize,
    /// Δ866 (rad/s) at which the two sublevels are degenerate in the
    /// rotating frame.
    pub delta_866: f64,
}

/// Δ866 = Δ397 + shift(S) − shift(D) for every S/D sublevel pair.
pub fn raman_conditions(params: &ExperimentParams) -> Vec<RamanCondition> {
    let scheme = LevelScheme::ca40();
    let shifts = zeeman_shifts(&scheme, params.b_gauss);
    let ds: Vec<usize> = scheme.indices(Manifold::D32).collect();
    scheme
        .indices(Manifold::S12)
        .flat_map(|s| {
            let shifts = &shifts;
            ds.iter().map(move |&d| RamanCondition {
                s_level: s,
                d_level: d,
                delta_866: params.delta_397 + shifts[s] - shifts[d],
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::uniform_grid;

    #[test]
    fn pair_probability_values() {
        assert!((pair_probability(10.0) - 10.0 / 11.0).abs() < 1e-15);
        assert_eq!(pair_probability(0.0), 0.0);
        assert_eq!(pair_probability(f64::INFINITY), 1.0);
    }

    #[test]
    fn identical_curves_have_unit_purity() {
        let model = IonModel::new(&ExperimentParams::weak_excitation()).unwrap();
        let grid = uniform_grid(50e-9, 0.5e-9).unwrap();
        let c = model.g2_conditioned(Polarization::SigmaMinus, Polarization::SigmaMinus, &grid).unwrap();
        for (_, p) in purity_curve(&c, &c).unwrap() {
            assert!((p - 1.0).abs() < 1e-12);
        }
        assert!(matches!(purity(&c, &c, 0.0), Err(Error::ZeroDenominator { .. })));
        assert!(purity(&c, &c, 0.7e-9).is_err());
    }

    #[test]
    fn flat_exponential_has_zero_slope() {
        let times: Vec<f64> = (0..=200).map(|k| k as f64 * 0.01e-9).collect();
        let values = times.iter().map(|t| (-t / 1e-6).exp()).collect();
        let c = CorrelationCurve {
            times,
            values,
            kind: CurveKind::Total,
            normalization: Normalization { rho_33: 1.0, rho_44: 1.0 },
            error_model: None,
            background: 0.0,
        };
        assert!(log_log_slope(&c, 0.1e-9, 1e-9).unwrap().abs() < 1e-3);
    }

    #[test]
    fn error_model_bounds() {
        assert!(ErrorModel::new(0.5, 0.2, 1.1).is_err());
        assert!(ErrorModel::new(-0.1, 0.2, 0.1).is_err());
        assert!(ErrorModel::new(0.025, 0.05, 0.018).is_ok());
    }

    #[test]
    fn background_floor() {
        let model = IonModel::new(&ExperimentParams::weak_excitation()).unwrap();
        let c = model.g2_total(&[0.0, 1e-9]).unwrap().with_background(0.25).unwrap();
        assert!((c.values[0] - 0.2).abs() < 1e-12);
        assert!(c.with_background(-1.0).is_err());
    }

    #[test]
    fn pi_is_not_a_conditioning_polarization() {
        let model = IonModel::new(&ExperimentParams::weak_excitation()).unwrap();
        assert!(model.g2_conditioned(Polarization::Pi, Polarization::SigmaMinus, &[0.0]).is_err());
    }
}
