use std::f64::consts::PI;

use ionpair::atom::{P_MINUS, P_PLUS, S_MINUS};
use ionpair::correlations::{
    apply_error_model, log_log_slope, pair_probability, purity, purity_curve, CorrelationCurve, CurveKind,
    Normalization,
};
use ionpair::dynamics::{short_time_grid, uniform_grid, Propagator};
use ionpair::liouvillian::build_liouvillian;
use ionpair::units::mhz_to_angular;
use ionpair::{DensityMatrix, Error, ErrorModel, ExperimentParams, IonModel, Polarization};
use proptest::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use Polarization::{SigmaMinus as M, SigmaPlus as P};

/// Resonantly driven two-level atom, ground state at τ = 0.
fn two_level_g2(t: f64, rabi: f64, gamma: f64) -> f64 {
    let mu = (rabi * rabi - gamma * gamma / 16.0).sqrt();
    1.0 - (-0.75 * gamma * t).exp() * ((mu * t).cos() + 0.75 * gamma / mu * (mu * t).sin())
}

#[test]
fn reduced_two_level_cut() {
    let params = ExperimentParams {
        omega_397: mhz_to_angular(15.0),
        omega_866: 0.0,
        delta_397: 0.0,
        b_gauss: 0.0,
        alpha_397: 0.0,
        gamma_dp: 0.0,
        ..ExperimentParams::weak_excitation()
    };
    let l = build_liouvillian(&params).unwrap();
    let steady = Propagator::new(&l).evolve(&DensityMatrix::pure(S_MINUS), 20e-6);
    let model = IonModel::with_steady_state(&params, steady).unwrap();
    let grid = uniform_grid(300e-9, 0.25e-9).unwrap();
    let curve = model.g2_total(&grid).unwrap();
    // H couples with Ω·a_π·c = Ω/√3, i.e. a Rabi frequency of 2Ω/√3
    let rabi = 2.0 * params.omega_397 / 3f64.sqrt();
    for (t, v) in grid.iter().zip(&curve.values) {
        let want = two_level_g2(*t, rabi, params.gamma_sp);
        assert!((v - want).abs() < 1e-8, "τ = {t:e}: {v} vs {want}");
    }
}

#[test]
fn conditioned_curves_start_at_zero_and_end_at_one() {
    let model = IonModel::new(&ExperimentParams::weak_excitation()).unwrap();
    let mut grid = uniform_grid(2e-6, 2e-9).unwrap();
    grid.extend((1..=75).map(|k| 2e-6 + k as f64 * 2e-6));
    let all = model.conditioned_all(&grid).unwrap();
    let total = model.g2_total(&grid).unwrap();
    for c in [&all.minus_minus, &all.minus_plus, &all.plus_plus, &all.plus_minus, &total] {
        assert_eq!(c.values[0], 0.0, "{}", c.kind.label());
        assert!(c.values.iter().all(|v| *v >= -1e-12));
        let end = *c.values.last().unwrap();
        assert!((end - 1.0).abs() < 1e-4, "{}: {end}", c.kind.label());
    }
    let n = model.normalization();
    assert!(n.rho_33 > 0.0 && n.rho_44 > 0.0);
}

#[test]
fn single_curves_match_batch() {
    let model = IonModel::new(&ExperimentParams::strong_excitation()).unwrap();
    let grid = uniform_grid(300e-9, 1e-9).unwrap();
    let all = model.conditioned_all(&grid).unwrap();
    for (first, second) in [(M, M), (M, P), (P, P), (P, M)] {
        let single = model.g2_conditioned(first, second, &grid).unwrap();
        let batch = all.get(first, second).unwrap();
        assert_eq!(single.kind, CurveKind::Conditioned { first, second });
        for (a, b) in single.values.iter().zip(&batch.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }
    assert!(model.g2_conditioned(Polarization::Pi, M, &grid).is_err());
}

#[test]
fn mirror_symmetry_at_perpendicular_drive() {
    let params = ExperimentParams::weak_excitation();
    let mirrored = ExperimentParams { b_gauss: -params.b_gauss, ..params };
    let grid = uniform_grid(1e-6, 1e-9).unwrap();
    let a = IonModel::new(&params).unwrap().conditioned_all(&grid).unwrap();
    let b = IonModel::new(&mirrored).unwrap().conditioned_all(&grid).unwrap();
    let close = |x: &CorrelationCurve, y: &CorrelationCurve| {
        x.values.iter().zip(&y.values).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
    };
    assert!(close(&a.minus_minus, &b.plus_plus) < 1e-9);
    assert!(close(&a.minus_plus, &b.plus_minus) < 1e-9);
}

#[test]
fn tails_share_one_rate() {
    let model = IonModel::new(&ExperimentParams::weak_excitation()).unwrap();
    let grid = uniform_grid(60e-6, 20e-9).unwrap();
    let all = model.conditioned_all(&grid).unwrap();
    let rate = |c: &CorrelationCurve| {
        let pts: Vec<(f64, f64)> = c
            .times
            .iter()
            .zip(&c.values)
            .filter(|(t, _)| **t >= 30e-6)
            .map(|(t, v)| (*t, (v - 1.0).abs().ln()))
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        -sxy / sxx
    };
    let (a, b) = (rate(&all.minus_minus), rate(&all.minus_plus));
    assert!(a > 0.0 && b > 0.0);
    assert!((a - b).abs() / a.max(b) < 0.05, "{a:e} vs {b:e}");
}

#[test]
fn strong_drive_rings_at_generalized_rabi_frequency() {
    let params = ExperimentParams::strong_excitation();
    let dt = 0.1e-9;
    let grid = uniform_grid(200e-9, dt).unwrap();
    let curve = IonModel::new(&params).unwrap().g2_conditioned(M, M, &grid).unwrap();
    let n_fft = 1 << 16;
    let mut buf: Vec<Complex<f64>> = curve.values.iter().map(|v| Complex::new(v - 1.0, 0.0)).collect();
    buf.resize(n_fft, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(n_fft).process(&mut buf);
    let amp: Vec<f64> = buf[..n_fft / 2].iter().map(|z| z.norm()).collect();
    // below one cycle per window there is no oscillation to speak of
    let k_min = (n_fft as f64 * dt / 200e-9).ceil() as usize;
    let peak = (k_min.max(1)..amp.len() - 1)
        .filter(|&k| amp[k] > amp[k - 1] && amp[k] > amp[k + 1])
        .max_by(|&i, &j| amp[i].total_cmp(&amp[j]))
        .unwrap();
    let f_peak = peak as f64 / (n_fft as f64 * dt);
    let f_g = (params.omega_397.powi(2) + params.delta_397.powi(2)).sqrt() / (2.0 * PI);
    assert!(
        (f_peak - f_g).abs() / f_g < 0.15,
        "FFT peak {:.2} MHz, generalized Rabi frequency {:.2} MHz",
        f_peak / 1e6,
        f_g / 1e6
    );
}

fn synthetic(times: &[f64], f: impl Fn(f64) -> f64) -> CorrelationCurve {
    CorrelationCurve {
        times: times.to_vec(),
        values: times.iter().map(|&t| f(t)).collect(),
        kind: CurveKind::Total,
        normalization: Normalization { rho_33: 1.0, rho_44: 1.0 },
        error_model: None,
        background: 0.0,
    }
}

#[test]
fn exponential_has_flat_short_time_slope() {
    let grid = short_time_grid();
    let c = synthetic(&grid, |t| (-t / 1e-6).exp());
    assert!(log_log_slope(&c, 0.1e-9, 1e-9).unwrap().abs() < 1e-3);
    let zero = synthetic(&grid, |t| t * 0.0);
    assert!(matches!(log_log_slope(&zero, 0.1e-9, 1e-9), Err(Error::NonPositive { .. })));
}

#[test]
fn purity_properties() {
    let model = IonModel::new(&ExperimentParams::weak_excitation()).unwrap();
    let grid = uniform_grid(400e-9, 0.1e-9).unwrap();
    let all = model.conditioned_all(&grid).unwrap();

    let (m, p) = apply_error_model(&all, &ErrorModel::ideal()).unwrap();
    assert_eq!(m.values, all.minus_minus.values);
    assert_eq!(p.values, all.minus_plus.values);
    assert!(matches!(purity(&m, &p, 0.0), Err(Error::ZeroDenominator { .. })));
    assert!(purity(&m, &p, 0.123456e-9).is_err());

    let ideal = purity_curve(&m, &p).unwrap();
    let imax = (0..ideal.len()).max_by(|&i, &j| ideal[i].1.total_cmp(&ideal[j].1)).unwrap();
    assert!(ideal[imax..].windows(2).all(|w| w[1].1 <= w[0].1));
    assert!(ideal[0].1 > 1e8);

    for em in [ErrorModel::new(0.02, 0.0, 0.0).unwrap(), ErrorModel::new(0.0, 0.0, 0.02).unwrap()] {
        let (m, p) = apply_error_model(&all, &em).unwrap();
        let first = purity_curve(&m, &p).unwrap()[0].1;
        assert!(first.is_finite() && first < 1e3, "{first}");
    }

    let half = ErrorModel::new(0.5, 0.5, 0.5).unwrap();
    let (m, p) = apply_error_model(&all, &half).unwrap();
    for (a, b) in m.values.iter().zip(&p.values) {
        assert!((a - b).abs() < 1e-12);
    }
    assert!(ErrorModel::new(1.5, 0.0, 0.0).is_err());
    assert!(ErrorModel::new(0.0, -0.1, 0.0).is_err());
}

#[test]
fn pair_probability_examples() {
    assert_eq!(pair_probability(0.0), 0.0);
    assert!((pair_probability(10.0) - 0.909).abs() < 5e-4);
    assert!((pair_probability(130.0) - 0.9924).abs() < 5e-5);
    assert_eq!(pair_probability(f64::INFINITY), 1.0);
}

#[test]
fn photon_number_is_linear_in_time() {
    let model = IonModel::new(&ExperimentParams::strong_excitation()).unwrap();
    let a = model.mean_photon_number(M, 12e-9).unwrap();
    let b = model.mean_photon_number(M, 24e-9).unwrap();
    assert!((b - 2.0 * a).abs() < 1e-15);
    let rate = model.params.gamma_sp * 2.0 / 3.0 * model.steady.population(P_MINUS);
    assert!((a - rate * 12e-9).abs() < 1e-15);
    assert!(model.steady.population(P_PLUS) > 0.0);
    assert!(model.mean_photon_number(Polarization::Pi, 1e-9).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn identical_curves_have_unit_purity(a in 0.1f64..10.0, rate in 1e6f64..1e9) {
        let grid = uniform_grid(100e-9, 1e-9).unwrap();
        let c = synthetic(&grid, |t| a * (1.0 - (-rate * t).exp()));
        for (_, p) in purity_curve(&c, &c).unwrap() {
            prop_assert!((p - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn background_floor_is_affine(beta in 0.0f64..5.0) {
        let grid = uniform_grid(10e-9, 1e-9).unwrap();
        let c = synthetic(&grid, |t| t * 1e8);
        let b = c.with_background(beta).unwrap();
        for (x, y) in c.values.iter().zip(&b.values) {
            prop_assert!((y - (x + beta) / (1.0 + beta)).abs() < 1e-12);
        }
    }

    #[test]
    fn error_model_output_is_between_inputs(e1 in 0.0f64..1.0, e2 in 0.0f64..1.0, e3 in 0.0f64..1.0) {
        let grid = uniform_grid(60e-9, 2e-9).unwrap();
        let model = IonModel::new(&ExperimentParams::weak_excitation()).unwrap();
        let all = model.conditioned_all(&grid).unwrap();
        let (m, p) = apply_error_model(&all, &ErrorModel::new(e1, e2, e3).unwrap()).unwrap();
        for k in 0..grid.len() {
            let pool = [
                all.minus_minus.values[k],
                all.minus_plus.values[k],
                all.plus_plus.values[k],
                all.plus_minus.values[k],
            ];
            let lo = pool.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = pool.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            for v in [m.values[k], p.values[k]] {
                prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            }
        }
    }
}
