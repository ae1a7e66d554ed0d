//! Nelder–Mead descent on the unit box with projection onto the bounds.

/// Stopping rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub max_evaluations: usize,
    /// Relative spread of the objective over the simplex.
    pub f_tolerance: f64,
    /// Largest vertex distance from the best vertex, in box units.
    pub x_tolerance: f64,
    /// Edge length of the initial simplex, in box units.
    pub initial_step: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions { max_evaluations: 2000, f_tolerance: 1e-10, x_tolerance: 1e-6, initial_step: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
    /// Best objective after each iteration.
    pub history: Vec<f64>,
}

fn project(x: &mut [f64]) {
    for v in x.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
}

/// Minimizes `f` over `[0, 1]^n` from `start`. Non-finite objective
/// values count as +∞.
pub fn minimize<F: FnMut(&[f64]) -> f64>(mut f: F, start: &[f64], opts: &SimplexOptions) -> SimplexOutcome {
    let n = start.len();
    let mut evaluations = 0;
    let mut eval = |x: &[f64], count: &mut usize| {
        *count += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut x0 = start.to_vec();
    project(&mut x0);
    if n == 0 {
        let value = eval(&x0, &mut evaluations);
        return SimplexOutcome { x: x0, value, evaluations, converged: true, history: vec![value] };
    }

    // adaptive coefficients for higher dimensions
    let nf = n as f64;
    let (alpha, beta, gamma, delta) = (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf);

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = eval(&x0, &mut evaluations);
    simplex.push((x0.clone(), f0));
    for i in 0..n {
        let mut x = x0.clone();
        x[i] += if x[i] + opts.initial_step <= 1.0 { opts.initial_step } else { -opts.initial_step };
        project(&mut x);
        let v = eval(&x, &mut evaluations);
        simplex.push((x, v));
    }

    let mut history = Vec::new();
    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        history.push(simplex[0].1);

        let best = simplex[0].1;
        let worst = simplex[n].1;
        let spread = (worst - best).abs();
        let size = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        let flat = spread <= opts.f_tolerance * (best.abs() + opts.f_tolerance);
        if worst.is_finite() && (flat && size <= opts.x_tolerance || size <= 1e-3 * opts.x_tolerance) {
            converged = true;
            break;
        }
        if evaluations >= opts.max_evaluations {
            break;
        }

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / nf;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid.iter().zip(&simplex[n].0).map(|(c, w)| c + t * (c - w)).collect();
            project(&mut p);
            p
        };

        let xr = along(alpha);
        let fr = eval(&xr, &mut evaluations);
        if fr < simplex[0].1 {
            let xe = along(alpha * beta);
            let fe = eval(&xe, &mut evaluations);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = along(alpha * gamma);
                let fc = eval(&xc, &mut evaluations);
                (xc, fc)
            } else {
                let xc = along(-gamma);
                let fc = eval(&xc, &mut evaluations);
                (xc, fc)
            };
            if fc < fr.min(simplex[n].1) {
                simplex[n] = (xc, fc);
            } else {
                let x_best = simplex[0].0.clone();
                for (x, v) in simplex.iter_mut().skip(1) {
                    for (xi, bi) in x.iter_mut().zip(&x_best) {
                        *xi = bi + delta * (*xi - bi);
                    }
                    *v = eval(x, &mut evaluations);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    SimplexOutcome { x, value, evaluations, converged, history }
}
