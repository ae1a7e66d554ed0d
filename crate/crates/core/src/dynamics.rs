//! Steady state and time evolution of the master equation.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::liouvillian::{vec_index, Liouvillian};
use crate::linalg::expm;
use crate::{Error, Matrix8, Result, C64, N_LEVELS, N_LIOUVILLE};

/// Tolerances of a physical density matrix.
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-10;
pub const EIGEN_TOL: f64 = -1e-8;

/// σ_{n−2}/σ_max below which the null space of L counts as degenerate.
pub const DEGENERACY_RATIO: f64 = 1e-6;

/// Reduced pivot ratio used by [`steady_state_fast`].
const PIVOT_RATIO: f64 = 1e-13;

/// 8×8 density operator in the level basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(Matrix8);

impl DensityMatrix {
    /// Validated constructor.
    pub fn new(m: Matrix8) -> Result<Self> {
        let rho = DensityMatrix(m);
        rho.validate()?;
        Ok(rho)
    }

    /// Wraps a matrix without checking it. Used for intermediate results
    /// of the solvers.
    pub fn new_unchecked(m: Matrix8) -> Self {
        DensityMatrix(m)
    }

    /// |level⟩⟨level|.
    pub fn pure(level: usize) -> Self {
        assert!(level < N_LEVELS, "level index out of range");
        let mut m = Matrix8::zeros();
        m[(level, level)] = C64::new(1.0, 0.0);
        DensityMatrix(m)
    }

    /// Diagonal state with the given populations.
    pub fn from_populations(p: &[f64; N_LEVELS]) -> Result<Self> {
        let mut m = Matrix8::zeros();
        for (i, &x) in p.iter().enumerate() {
            m[(i, i)] = C64::new(x, 0.0);
        }
        Self::new(m)
    }

    /// |ψ⟩⟨ψ| for a normalized state vector.
    pub fn from_state(psi: &crate::Vector8) -> Result<Self> {
        Self::new(psi * psi.adjoint())
    }

    pub fn matrix(&self) -> &Matrix8 {
        &self.0
    }

    pub fn into_inner(self) -> Matrix8 {
        self.0
    }

    pub fn population(&self, level: usize) -> f64 {
        self.0[(level, level)].re
    }

    pub fn populations(&self) -> [f64; N_LEVELS] {
        std::array::from_fn(|i| self.0[(i, i)].re)
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (self.0 - self.0.adjoint()).camax()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (self.0 + self.0.adjoint()) * C64::new(0.5, 0.0);
        SymmetricEigen::new(h).eigenvalues.min()
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        let herm = self.hermiticity_error();
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = self.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let ev = self.min_eigenvalue();
        if ev < EIGEN_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {ev:e}")));
        }
        Ok(())
    }

    /// Row-major vectorization matching [`vec_index`].
    pub fn to_vector(&self) -> DVector<C64> {
        DVector::from_fn(N_LIOUVILLE, |k, _| self.0[(k / N_LEVELS, k % N_LEVELS)])
    }

    pub fn from_vector(v: &DVector<C64>) -> Self {
        assert_eq!(v.len(), N_LIOUVILLE);
        DensityMatrix(Matrix8::from_fn(|i, j| v[vec_index(i, j)]))
    }
}

/// Time series of density matrices on a τ grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
}

impl Trajectory {
    pub fn population(&self, level: usize) -> Vec<f64> {
        self.states.iter().map(|s| s.population(level)).collect()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&DensityMatrix> {
        self.states.last()
    }
}

/// Points `0, dt, 2dt, …` up to and including `t_max` (rounded to a whole
/// number of steps).
pub fn uniform_grid(t_max: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0 && dt.is_finite()) || !(t_max >= 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidGrid(format!("t_max = {t_max}, dt = {dt}")));
    }
    let n = (t_max / dt).round() as usize;
    Ok((0..=n).map(|k| k as f64 * dt).collect())
}

/// 1 ns spacing over [0, 1 μs].
pub fn correlation_grid() -> Vec<f64> {
    uniform_grid(1e-6, 1e-9).expect("static grid")
}

/// 0.05 ns spacing over [0, 2 ns].
pub fn short_time_grid() -> Vec<f64> {
    uniform_grid(2e-9, 0.05e-9).expect("static grid")
}

pub fn check_grid(grid: &[f64]) -> Result<()> {
    match grid.first() {
        None => return Err(Error::InvalidGrid("empty grid".into())),
        Some(&t0) if t0 != 0.0 => return Err(Error::InvalidGrid(format!("grid starts at {t0}, not 0"))),
        _ => {}
    }
    if let Some(k) = grid.windows(2).position(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
        return Err(Error::InvalidGrid(format!("grid not strictly increasing at index {}", k + 1)));
    }
    Ok(())
}

/// ‖L ρ‖ / (‖L‖ ‖ρ‖), Frobenius norms.
pub fn steady_state_residual(l: &Liouvillian, rho: &DensityMatrix) -> f64 {
    let v = rho.to_vector();
    (&l.matrix * &v).norm() / (l.norm() * v.norm())
}

/// Stationary state of `l`.
///
/// Fails with [`Error::DegenerateSteadyState`] when the null space of `l`
/// has more than one dimension.
pub fn steady_state(l: &Liouvillian) -> Result<DensityMatrix> {
    let sv = l.matrix.singular_values();
    let mut s: Vec<f64> = sv.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    let ratio = s[N_LIOUVILLE - 2] / s[0];
    if !(ratio >= DEGENERACY_RATIO) {
        return Err(Error::DegenerateSteadyState { ratio });
    }
    solve_with_trace_row(l).map(|(rho, _)| rho)
}

/// Like [`steady_state`] but detects degeneracy from the LU pivots only.
/// Much cheaper; meant for parameter sweeps and fits.
pub fn steady_state_fast(l: &Liouvillian) -> Result<DensityMatrix> {
    let (rho, pivot_ratio) = solve_with_trace_row(l)?;
    if !(pivot_ratio >= PIVOT_RATIO) {
        return Err(Error::DegenerateSteadyState { ratio: pivot_ratio });
    }
    Ok(rho)
}

/// Real coordinates of a Hermitian matrix: ρ_ii, then Re ρ_ij and Im ρ_ij
/// for i < j.
fn hermitian_coordinates() -> Vec<(usize, usize, u8)> {
    let mut out = Vec::with_capacity(N_LIOUVILLE);
    for i in 0..N_LEVELS {
        out.push((i, i, 0));
        for j in i + 1..N_LEVELS {
            out.push((i, j, 1));
            out.push((i, j, 2));
        }
    }
    out
}

/// L restricted to Hermitian matrices, in [`hermitian_coordinates`].
fn real_generator(l: &Liouvillian, coords: &[(usize, usize, u8)]) -> DMatrix<f64> {
    let m = &l.matrix;
    let mut r = DMatrix::<f64>::zeros(N_LIOUVILLE, N_LIOUVILLE);
    for (col, &(i, j, part)) in coords.iter().enumerate() {
        let (ij, ji) = (vec_index(i, j), vec_index(j, i));
        for (row, &(a, b, out)) in coords.iter().enumerate() {
            let k = vec_index(a, b);
            let v = match part {
                0 => m[(k, ij)],
                1 => m[(k, ij)] + m[(k, ji)],
                _ => (m[(k, ij)] - m[(k, ji)]) * C64::i(),
            };
            r[(row, col)] = if out == 2 { v.im } else { v.re };
        }
    }
    r
}

fn solve_with_trace_row(l: &Liouvillian) -> Result<(DensityMatrix, f64)> {
    let coords = hermitian_coordinates();
    let mut a = real_generator(l, &coords);
    let scale = l.norm() / N_LIOUVILLE as f64;
    a.row_mut(0).fill(0.0);
    for (col, &(i, j, _)) in coords.iter().enumerate() {
        if i == j {
            a[(0, col)] = scale;
        }
    }
    let mut b = DVector::<f64>::zeros(N_LIOUVILLE);
    b[0] = scale;

    let lu = a.lu();
    let pivots = lu.u().diagonal().map(f64::abs);
    let pivot_ratio = pivots.min() / pivots.max();
    let x = lu.solve(&b).ok_or(Error::DegenerateSteadyState { ratio: 0.0 })?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateSteadyState { ratio: pivot_ratio });
    }
    let mut m = Matrix8::zeros();
    for (&(i, j, part), &v) in coords.iter().zip(x.iter()) {
        match part {
            0 => m[(i, i)] = C64::new(v, 0.0),
            1 => {
                m[(i, j)].re = v;
                m[(j, i)].re = v;
            }
            _ => {
                m[(i, j)].im = v;
                m[(j, i)].im = -v;
            }
        }
    }
    let tr = m.trace().re;
    m /= C64::new(tr, 0.0);
    Ok((DensityMatrix(m), pivot_ratio))
}

/// Repeated propagation with cached one-step propagators exp(L·dt).
pub struct Propagator<'a> {
    l: &'a Liouvillian,
    cache: HashMap<u64, DMatrix<C64>>,
}

impl<'a> Propagator<'a> {
    pub fn new(l: &'a Liouvillian) -> Self {
        Propagator { l, cache: HashMap::new() }
    }

    fn step(&mut self, dt: f64) -> &DMatrix<C64> {
        // steps equal to ~1e-12 relative share one propagator
        let key = dt.to_bits() >> 12;
        let l = self.l;
        self.cache
            .entry(key)
            .or_insert_with(|| expm(&(&l.matrix * C64::new(dt, 0.0))))
    }

    /// Evolves every initial state over `grid`; one trajectory per state.
    pub fn run_many(&mut self, initial: &[DensityMatrix], grid: &[f64]) -> Result<Vec<Trajectory>> {
        check_grid(grid)?;
        for rho in initial {
            rho.validate()?;
        }
        let k = initial.len();
        let mut block = DMatrix::<C64>::zeros(N_LIOUVILLE, k);
        for (c, rho) in initial.iter().enumerate() {
            block.set_column(c, &rho.to_vector());
        }
        let mut states: Vec<Vec<DensityMatrix>> = initial.iter().map(|r| vec![*r]).collect();
        for w in grid.windows(2) {
            block = self.step(w[1] - w[0]) * &block;
            for (c, st) in states.iter_mut().enumerate() {
                st.push(DensityMatrix::from_vector(&block.column(c).into_owned()));
            }
        }
        Ok(states
            .into_iter()
            .map(|states| Trajectory { times: grid.to_vec(), states })
            .collect())
    }

    pub fn run(&mut self, rho0: &DensityMatrix, grid: &[f64]) -> Result<Trajectory> {
        Ok(self.run_many(std::slice::from_ref(rho0), grid)?.remove(0))
    }

    /// exp(L·t) ρ0 at a single time.
    pub fn evolve(&mut self, rho0: &DensityMatrix, t: f64) -> DensityMatrix {
        let v = self.step(t) * rho0.to_vector();
        DensityMatrix::from_vector(&v)
    }
}

/// ρ(τ) = exp(Lτ) ρ0 on every grid point.
pub fn propagate(l: &Liouvillian, rho0: &DensityMatrix, grid: &[f64]) -> Result<Trajectory> {
    Propagator::new(l).run(rho0, grid)
}
