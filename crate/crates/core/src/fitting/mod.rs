//! Parameter recovery from excitation spectra and conditioned g² data by
//! Poisson-weighted least squares.
//!
//! Free parameters are mapped onto the unit box and minimized with a
//! bounded Nelder–Mead simplex from several seeded starting points.
//! Uncertainties come from a finite-difference Hessian of χ² at the
//! optimum, `cov = 2 H⁻¹`.

pub mod simplex;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atom::{Polarization, P_MINUS, P_PLUS};
use crate::correlations::{apply_error_model, ConditionedCurves, ErrorModel, IonModel};
use crate::correlator::Correlogram;
use crate::dynamics::steady_state_fast;
use crate::liouvillian::build_liouvillian;
use crate::units::{angular_to_mhz, mhz_to_angular};
use crate::{Error, ExperimentParams, Result};

use simplex::{minimize, SimplexOptions};

/// Quantity a data set measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataKind {
    /// Fluorescence (counts/s) against Δ866 (rad/s).
    Spectrum,
    /// σ⁻-conditioned g² of σ⁻ photons against τ (s).
    G2Minus,
    /// σ⁻-conditioned g² of σ⁺ photons against τ (s).
    G2Plus,
}

/// Observations with one standard error per point, kept sorted by `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    pub kind: DataKind,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Histogram bin width in seconds; g² model values are averaged over
    /// each bin when positive.
    pub bin_width: f64,
}

impl DataSet {
    pub fn new(kind: DataKind, x: Vec<f64>, y: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() || x.len() != sigma.len() {
            return Err(Error::InvalidParameter("data columns differ in length".into()));
        }
        if x.is_empty() {
            return Err(Error::InvalidParameter("empty data set".into()));
        }
        if sigma.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidParameter("errors must be positive".into()));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite data".into()));
        }
        let mut rows: Vec<(f64, f64, f64)> = x.into_iter().zip(y).zip(sigma).map(|((a, b), c)| (a, b, c)).collect();
        rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2)));
        Ok(DataSet {
            kind,
            x: rows.iter().map(|r| r.0).collect(),
            y: rows.iter().map(|r| r.1).collect(),
            sigma: rows.iter().map(|r| r.2).collect(),
            bin_width: 0.0,
        })
    }

    /// Marks g² points as histogram bins of `width` seconds centred on `x`.
    pub fn binned(mut self, width: f64) -> Result<Self> {
        if !(width >= 0.0 && width.is_finite()) {
            return Err(Error::InvalidParameter(format!("bin width {width} must be >= 0")));
        }
        if self.kind == DataKind::Spectrum && width > 0.0 {
            return Err(Error::InvalidParameter("spectrum points cannot be binned".into()));
        }
        if self.x[0] - 0.5 * width < 0.0 {
            return Err(Error::InvalidGrid("first bin extends below zero delay".into()));
        }
        self.bin_width = width;
        Ok(self)
    }

    /// Count data with Poisson errors √counts, floored at 1.
    pub fn poisson(kind: DataKind, x: Vec<f64>, counts: Vec<f64>) -> Result<Self> {
        let sigma = counts.iter().map(|c| c.max(0.0).sqrt().max(1.0)).collect();
        Self::new(kind, x, counts, sigma)
    }

    /// Normalized histogram bins with delays in `[t_min, t_max]` seconds.
    /// Errors are the Poisson errors of the counts, scaled like the values.
    pub fn from_correlogram(kind: DataKind, c: &Correlogram, t_min: f64, t_max: f64) -> Result<Self> {
        let (mut x, mut y, mut sigma) = (Vec::new(), Vec::new(), Vec::new());
        let expected = c.rate_a * c.rate_b * c.overlap_ps as f64 * 1e-12 * c.bin_width_ps as f64 * 1e-12;
        if !(expected > 0.0) {
            return Err(Error::InvalidParameter("correlogram has no rate normalization".into()));
        }
        for (k, &centre) in c.centers_ps.iter().enumerate() {
            let t = centre as f64 * 1e-12;
            if t >= t_min && t <= t_max {
                x.push(t);
                y.push(c.counts[k] as f64 / expected);
                sigma.push((c.counts[k] as f64).sqrt().max(1.0) / expected);
            }
        }
        Self::new(kind, x, y, sigma)?.binned(c.bin_width_ps as f64 * 1e-12)
    }

    /// Delays at which the g² model is needed: the Simpson nodes of each
    /// bin, or the points themselves.
    fn g2_nodes(&self, x: f64) -> [f64; 3] {
        let h = 0.5 * self.bin_width;
        [x - h, x, x + h]
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Adjustable quantities, in file units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitParameter {
    #[serde(rename = "omega_397_mhz")]
    Omega397,
    #[serde(rename = "omega_866_mhz")]
    Omega866,
    #[serde(rename = "delta_397_mhz")]
    Delta397,
    #[serde(rename = "delta_866_mhz")]
    Delta866,
    #[serde(rename = "b_gauss")]
    BField,
    #[serde(rename = "alpha_397_pi")]
    Alpha397,
    #[serde(rename = "alpha_866_pi")]
    Alpha866,
    /// Counts/s at unit excited population.
    Scale,
    /// Counts/s.
    Background,
    EpsInit,
    EpsMinus,
    EpsPlus,
    /// Multiplies both model g² curves.
    G2Scale,
}

impl FitParameter {
    pub const ALL: [FitParameter; 13] = [
        FitParameter::Omega397,
        FitParameter::Omega866,
        FitParameter::Delta397,
        FitParameter::Delta866,
        FitParameter::BField,
        FitParameter::Alpha397,
        FitParameter::Alpha866,
        FitParameter::Scale,
        FitParameter::Background,
        FitParameter::EpsInit,
        FitParameter::EpsMinus,
        FitParameter::EpsPlus,
        FitParameter::G2Scale,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FitParameter::Omega397 => "omega_397_mhz",
            FitParameter::Omega866 => "omega_866_mhz",
            FitParameter::Delta397 => "delta_397_mhz",
            FitParameter::Delta866 => "delta_866_mhz",
            FitParameter::BField => "b_gauss",
            FitParameter::Alpha397 => "alpha_397_pi",
            FitParameter::Alpha866 => "alpha_866_pi",
            FitParameter::Scale => "scale",
            FitParameter::Background => "background",
            FitParameter::EpsInit => "eps_init",
            FitParameter::EpsMinus => "eps_minus",
            FitParameter::EpsPlus => "eps_plus",
            FitParameter::G2Scale => "g2_scale",
        }
    }
}

impl fmt::Display for FitParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FitParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FitParameter::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown fit parameter {s:?}")))
    }
}

/// Everything the forward models depend on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelState {
    pub params: ExperimentParams,
    pub scale: f64,
    pub background: f64,
    pub errors: ErrorModel,
    pub g2_scale: f64,
}

impl ModelState {
    pub fn new(params: ExperimentParams) -> Self {
        ModelState { params, scale: 1.0, background: 0.0, errors: ErrorModel::ideal(), g2_scale: 1.0 }
    }

    pub fn get(&self, p: FitParameter) -> f64 {
        let q = &self.params;
        match p {
            FitParameter::Omega397 => angular_to_mhz(q.omega_397),
            FitParameter::Omega866 => angular_to_mhz(q.omega_866),
            FitParameter::Delta397 => angular_to_mhz(q.delta_397),
            FitParameter::Delta866 => angular_to_mhz(q.delta_866),
            FitParameter::BField => q.b_gauss,
            FitParameter::Alpha397 => q.alpha_397 / PI,
            FitParameter::Alpha866 => q.alpha_866 / PI,
            FitParameter::Scale => self.scale,
            FitParameter::Background => self.background,
            FitParameter::EpsInit => self.errors.eps_init,
            FitParameter::EpsMinus => self.errors.eps_minus,
            FitParameter::EpsPlus => self.errors.eps_plus,
            FitParameter::G2Scale => self.g2_scale,
        }
    }

    pub fn set(&mut self, p: FitParameter, v: f64) {
        let q = &mut self.params;
        match p {
            FitParameter::Omega397 => q.omega_397 = mhz_to_angular(v),
            FitParameter::Omega866 => q.omega_866 = mhz_to_angular(v),
            FitParameter::Delta397 => q.delta_397 = mhz_to_angular(v),
            FitParameter::Delta866 => q.delta_866 = mhz_to_angular(v),
            FitParameter::BField => q.b_gauss = v,
            FitParameter::Alpha397 => q.alpha_397 = v * PI,
            FitParameter::Alpha866 => q.alpha_866 = v * PI,
            FitParameter::Scale => self.scale = v,
            FitParameter::Background => self.background = v,
            FitParameter::EpsInit => self.errors.eps_init = v,
            FitParameter::EpsMinus => self.errors.eps_minus = v,
            FitParameter::EpsPlus => self.errors.eps_plus = v,
            FitParameter::G2Scale => self.g2_scale = v,
        }
    }

    pub fn values(&self) -> BTreeMap<String, f64> {
        FitParameter::ALL.iter().map(|&p| (p.name().to_string(), self.get(p))).collect()
    }
}

/// A free parameter with its box and starting value, in file units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeParameter {
    pub name: FitParameter,
    pub initial: f64,
    pub lower: f64,
    pub upper: f64,
}

impl FreeParameter {
    pub fn new(name: FitParameter, initial: f64, lower: f64, upper: f64) -> Result<Self> {
        let f = FreeParameter { name, initial, lower, upper };
        f.validate()?;
        Ok(f)
    }

    /// Box of ±`fraction` around `initial`.
    pub fn around(name: FitParameter, initial: f64, fraction: f64) -> Self {
        let half = (initial.abs() * fraction).max(1e-6);
        FreeParameter { name, initial, lower: initial - half, upper: initial + half }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lower < self.upper) || !(self.lower..=self.upper).contains(&self.initial) {
            return Err(Error::InvalidParameter(format!(
                "{}: need lower < upper and initial inside the bounds",
                self.name
            )));
        }
        Ok(())
    }

    fn to_unit(&self, v: f64) -> f64 {
        (v - self.lower) / (self.upper - self.lower)
    }

    fn from_unit(&self, u: f64) -> f64 {
        self.lower + u.clamp(0.0, 1.0) * (self.upper - self.lower)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub restarts: usize,
    pub max_evaluations: usize,
    pub seed: u64,
    /// Spread of the random restart points around the start, box units.
    pub restart_spread: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { restarts: 5, max_evaluations: 2000, seed: 0, restart_spread: 0.15 }
    }
}

/// Model values for every point of `data` at `state`.
pub fn model_values(state: &ModelState, data: &DataSet) -> Result<Vec<f64>> {
    match data.kind {
        DataKind::Spectrum => spectrum_model(state, &data.x),
        DataKind::G2Minus | DataKind::G2Plus => Ok(g2_values(state, &[data])?.remove(0)),
    }
}

/// g² model values for several data sets from one propagation.
fn g2_values(state: &ModelState, data: &[&DataSet]) -> Result<Vec<Vec<f64>>> {
    let mut grid: Vec<f64> = data.iter().flat_map(|d| d.x.iter().flat_map(|&x| d.g2_nodes(x))).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let (minus, plus) = g2_model(state, &grid)?;
    let at = |src: &[f64], t: f64| src[grid.binary_search_by(|g| g.total_cmp(&t)).expect("node on grid")];
    Ok(data
        .iter()
        .map(|d| {
            let src: &[f64] = if d.kind == DataKind::G2Minus { &minus } else { &plus };
            d.x.iter()
                .map(|&x| {
                    let [a, m, b] = d.g2_nodes(x);
                    if d.bin_width > 0.0 {
                        (at(src, a) + 4.0 * at(src, m) + at(src, b)) / 6.0
                    } else {
                        at(src, m)
                    }
                })
                .collect()
        })
        .collect())
}

/// scale · (ρ₃₃ + ρ₄₄)(Δ866) + background.
pub fn spectrum_model(state: &ModelState, detunings: &[f64]) -> Result<Vec<f64>> {
    detunings
        .iter()
        .map(|&d| {
            let p = ExperimentParams { delta_866: d, ..state.params };
            let ss = steady_state_fast(&build_liouvillian(&p)?)?;
            Ok(state.scale * (ss.population(P_MINUS) + ss.population(P_PLUS)) + state.background)
        })
        .collect()
}

/// Error-model σ⁻-conditioned curves (g̃²σ⁻, g̃²σ⁺) at the delays `taus`,
/// multiplied by the g² scale.
pub fn g2_model(state: &ModelState, taus: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if taus.iter().any(|&t| !(t >= 0.0)) {
        return Err(Error::InvalidGrid("g2 delays must be >= 0".into()));
    }
    let mut grid: Vec<f64> = taus.to_vec();
    grid.push(0.0);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let model = IonModel::new_fast(&state.params)?;
    let curves: ConditionedCurves = model.conditioned_all(&grid)?;
    let (minus, plus) = apply_error_model(&curves, &state.errors)?;
    let lookup = |values: &[f64]| -> Vec<f64> {
        taus.iter()
            .map(|t| {
                let i = grid.binary_search_by(|g| g.total_cmp(t)).expect("delay on grid");
                state.g2_scale * values[i]
            })
            .collect()
    };
    Ok((lookup(&minus.values), lookup(&plus.values)))
}

/// Σ ((y − model)/σ)² over all data sets.
pub fn chi_square(state: &ModelState, data: &[DataSet]) -> Result<f64> {
    let g2_sets: Vec<&DataSet> = data.iter().filter(|d| d.kind != DataKind::Spectrum).collect();
    let mut g2 = if g2_sets.is_empty() { Vec::new() } else { g2_values(state, &g2_sets)? }.into_iter();
    let mut total = 0.0;
    for d in data {
        let values = match d.kind {
            DataKind::Spectrum => spectrum_model(state, &d.x)?,
            DataKind::G2Minus | DataKind::G2Plus => g2.next().expect("one entry per g2 data set"),
        };
        total += d
            .y
            .iter()
            .zip(&values)
            .zip(&d.sigma)
            .map(|((y, m), s)| ((y - m) / s).powi(2))
            .sum::<f64>();
    }
    Ok(total)
}

/// Free parameters, starting state and data.
#[derive(Debug, Clone)]
pub struct FitProblem {
    pub data: Vec<DataSet>,
    /// Start values of the free parameters and values of the frozen ones.
    pub state: ModelState,
    pub free: Vec<FreeParameter>,
    pub options: FitOptions,
}

/// Outcome of a fit; serializes to the result JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Every model quantity at the optimum, file units.
    pub values: BTreeMap<String, f64>,
    pub free: Vec<String>,
    /// 1σ uncertainties of the free parameters, in the order of `free`.
    pub uncertainties: Vec<f64>,
    /// Approximate covariance of the free parameters.
    pub covariance: Vec<Vec<f64>>,
    pub chi2: f64,
    pub dof: i64,
    pub evaluations: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Best χ² after each simplex iteration of the winning restart.
    pub history: Vec<f64>,
}

impl FitResult {
    pub fn value(&self, p: FitParameter) -> f64 {
        self.values[p.name()]
    }

    pub fn uncertainty(&self, p: FitParameter) -> Option<f64> {
        self.free.iter().position(|n| n == p.name()).map(|i| self.uncertainties[i])
    }

    pub fn reduced_chi2(&self) -> f64 {
        self.chi2 / self.dof.max(1) as f64
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fit result serializes")
    }
}

impl FitProblem {
    pub fn new(data: Vec<DataSet>, state: ModelState, free: Vec<FreeParameter>, options: FitOptions) -> Result<Self> {
        for f in &free {
            f.validate()?;
        }
        let mut names: Vec<FitParameter> = free.iter().map(|f| f.name).collect();
        names.sort();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter("parameter listed twice".into()));
        }
        if data.is_empty() {
            return Err(Error::InvalidParameter("no data".into()));
        }
        let mut state = state;
        for f in &free {
            state.set(f.name, f.initial);
        }
        Ok(FitProblem { data, state, free, options })
    }

    fn state_at(&self, values: &[f64]) -> ModelState {
        let mut s = self.state;
        for (f, &v) in self.free.iter().zip(values) {
            s.set(f.name, v);
        }
        s
    }

    /// χ² at physical parameter values; +∞ where the model is undefined.
    pub fn objective(&self, values: &[f64]) -> f64 {
        chi_square(&self.state_at(values), &self.data).unwrap_or(f64::INFINITY)
    }

    fn n_points(&self) -> usize {
        self.data.iter().map(DataSet::len).sum()
    }

    pub fn solve(&self) -> Result<FitResult> {
        let n = self.free.len();
        let dof = self.n_points() as i64 - n as i64;
        if n == 0 {
            let chi2 = chi_square(&self.state, &self.data)?;
            return Ok(FitResult {
                values: self.state.values(),
                free: vec![],
                uncertainties: vec![],
                covariance: vec![],
                chi2,
                dof,
                evaluations: 1,
                iterations: 0,
                converged: true,
                history: vec![chi2],
            });
        }

        let start: Vec<f64> = self.free.iter().map(|f| f.to_unit(f.initial)).collect();
        let opts = SimplexOptions { max_evaluations: self.options.max_evaluations, ..SimplexOptions::default() };
        let restarts = self.options.restarts.max(1);
        let outcomes: Vec<_> = (0..restarts)
            .into_par_iter()
            .map(|r| {
                let x0: Vec<f64> = if r == 0 {
                    start.clone()
                } else {
                    let mut rng = ChaCha8Rng::seed_from_u64(self.options.seed);
                    rng.set_stream(r as u64);
                    let s = self.options.restart_spread;
                    start.iter().map(|u| (u + s * (2.0 * rng.random::<f64>() - 1.0)).clamp(0.0, 1.0)).collect()
                };
                let f = |u: &[f64]| {
                    let v: Vec<f64> = self.free.iter().zip(u).map(|(p, &x)| p.from_unit(x)).collect();
                    self.objective(&v)
                };
                minimize(f, &x0, &opts)
            })
            .collect();
        let evaluations = outcomes.iter().map(|o| o.evaluations).sum();
        let best = outcomes
            .into_iter()
            .reduce(|a, b| if b.value < a.value { b } else { a })
            .expect("at least one restart");

        let values: Vec<f64> = self.free.iter().zip(&best.x).map(|(p, &u)| p.from_unit(u)).collect();
        let state = self.state_at(&values);
        let chi2 = chi_square(&state, &self.data)?;
        let covariance = self.covariance(&values, chi2);
        let uncertainties = (0..n)
            .map(|i| covariance.as_ref().map_or(f64::NAN, |c| c[(i, i)].max(0.0).sqrt()))
            .collect();
        Ok(FitResult {
            values: state.values(),
            free: self.free.iter().map(|f| f.name.name().to_string()).collect(),
            uncertainties,
            covariance: covariance.map_or_else(
                || vec![vec![f64::NAN; n]; n],
                |c| (0..n).map(|i| (0..n).map(|j| c[(i, j)]).collect()).collect(),
            ),
            chi2,
            dof,
            evaluations,
            iterations: best.history.len(),
            converged: best.converged,
            history: best.history,
        })
    }

    /// 2 H⁻¹ from central differences of χ²; `None` if H is not positive
    /// definite.
    fn covariance(&self, x: &[f64], f0: f64) -> Option<DMatrix<f64>> {
        let n = x.len();
        let h: Vec<f64> = self
            .free
            .iter()
            .zip(x)
            .map(|(p, &v)| (1e-4 * v.abs()).max(1e-5 * (p.upper - p.lower)))
            .collect();
        let f = |dx: &[(usize, f64)]| {
            let mut y = x.to_vec();
            for &(i, d) in dx {
                y[i] += d;
            }
            self.objective(&y)
        };
        let mut hess = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            let fp = f(&[(i, h[i])]);
            let fm = f(&[(i, -h[i])]);
            hess[(i, i)] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
            for j in 0..i {
                let fpp = f(&[(i, h[i]), (j, h[j])]);
                let fpm = f(&[(i, h[i]), (j, -h[j])]);
                let fmp = f(&[(i, -h[i]), (j, h[j])]);
                let fmm = f(&[(i, -h[i]), (j, -h[j])]);
                let v = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
                hess[(i, j)] = v;
                hess[(j, i)] = v;
            }
        }
        if hess.iter().any(|v| !v.is_finite()) {
            return None;
        }
        hess.cholesky().map(|c| c.inverse() * 2.0)
    }
}

/// Fits scale · (ρ₃₃ + ρ₄₄) + background to a Δ866 scan.
pub fn fit_spectrum(data: &DataSet, init: &ModelState, free: &[FreeParameter], options: &FitOptions) -> Result<FitResult> {
    if data.kind != DataKind::Spectrum {
        return Err(Error::InvalidParameter("fit_spectrum needs spectrum data".into()));
    }
    FitProblem::new(vec![data.clone()], *init, free.to_vec(), *options)?.solve()
}

/// Fits both σ⁻-conditioned curves with one shared parameter vector.
pub fn fit_g2_joint(
    minus: &DataSet,
    plus: &DataSet,
    init: &ModelState,
    free: &[FreeParameter],
    options: &FitOptions,
) -> Result<FitResult> {
    if minus.kind != DataKind::G2Minus || plus.kind != DataKind::G2Plus {
        return Err(Error::InvalidParameter("fit_g2_joint needs g2-minus and g2-plus data".into()));
    }
    FitProblem::new(vec![minus.clone(), plus.clone()], *init, free.to_vec(), *options)?.solve()
}

/// Fit configuration file: free parameters with bounds, frozen values and
/// optimizer settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub parameters: Vec<ParameterEntry>,
    #[serde(default)]
    pub options: FitOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterEntry {
    pub name: FitParameter,
    pub value: f64,
    #[serde(default)]
    pub lower: Option<f64>,
    #[serde(default)]
    pub upper: Option<f64>,
    #[serde(default)]
    pub frozen: bool,
}

impl FitConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Applies frozen values to `state` and returns the free parameters.
    pub fn apply(&self, state: &mut ModelState) -> Result<Vec<FreeParameter>> {
        let mut free = Vec::new();
        for p in &self.parameters {
            state.set(p.name, p.value);
            if !p.frozen {
                let (Some(lower), Some(upper)) = (p.lower, p.upper) else {
                    return Err(Error::InvalidParameter(format!("{}: free parameters need bounds", p.name)));
                };
                free.push(FreeParameter::new(p.name, p.value, lower, upper)?);
            }
        }
        Ok(free)
    }
}

/// Polarization of the second photon probed by a g² data kind.
pub fn second_polarization(kind: DataKind) -> Option<Polarization> {
    match kind {
        DataKind::G2Minus => Some(Polarization::SigmaMinus),
        DataKind::G2Plus => Some(Polarization::SigmaPlus),
        DataKind::Spectrum => None,
    }
}
