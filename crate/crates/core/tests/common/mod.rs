#![allow(dead_code)]

use ionpair::correlator::{CorrelogramConfig, TagFilter};
use ionpair::stream::{ClickEvent, ClickStream};
use ionpair::Polarization;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

/// All-pairs histogram. Bin k holds delays with (k − ½)w ≤ d < (k + ½)w.
pub fn brute_force(a: &ClickStream, b: &ClickStream, cfg: &CorrelogramConfig, skip_self: bool) -> Vec<u64> {
    let w = cfg.bin_width_ps as i128;
    let half = (cfg.window_ps / cfg.bin_width_ps) as i128;
    let end = a.duration_ps.min(b.duration_ps);
    let keep = |e: &ClickEvent, f: &TagFilter| {
        e.timestamp_ps <= end
            && f.polarization.is_none_or(|p| e.polarization == Some(p))
            && f.wavelength.is_none_or(|l| e.wavelength == Some(l))
    };
    let pick = |s: &ClickStream, f: &TagFilter| -> Vec<(usize, i64)> {
        s.events.iter().enumerate().filter(|(_, e)| keep(e, f)).map(|(i, e)| (i, e.timestamp_ps as i64)).collect()
    };
    let xs = pick(a, &cfg.filter_a);
    let ys = pick(b, &cfg.filter_b);
    let reach = (2 * half + 1) * w;
    let mut hist = vec![0u64; (2 * half + 1) as usize];
    for &(i, tx) in &xs {
        for &(j, ty) in &ys {
            let d = (ty - tx) as i128;
            if 2 * d < -reach || 2 * d >= reach || (skip_self && i == j) {
                continue;
            }
            let mut k = (d as f64 / w as f64).round() as i128;
            while 2 * d < (2 * k - 1) * w {
                k -= 1;
            }
            while 2 * d >= (2 * k + 1) * w {
                k += 1;
            }
            hist[(k + half) as usize] += 1;
        }
    }
    hist
}

/// Sorted, distinct timestamps in [0, duration] with random σ tags.
pub fn random_stream(rng: &mut ChaCha8Rng, n: usize, duration_ps: u64) -> ClickStream {
    let mut events: Vec<ClickEvent> = (0..n)
        .map(|_| {
            let pol = match rng.random_range(0..3) {
                0 => Some(Polarization::SigmaMinus),
                1 => Some(Polarization::SigmaPlus),
                _ => None,
            };
            ClickEvent::new(rng.random_range(0..=duration_ps), pol, None)
        })
        .collect();
    events.sort_by_key(|e| e.timestamp_ps);
    events.dedup_by_key(|e| e.timestamp_ps);
    ClickStream::new(0, events, duration_ps).unwrap()
}

/// Homogeneous Poisson process with the given rate (s⁻¹).
pub fn poisson_stream(seed: u64, rate: f64, duration_ps: u64) -> ClickStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gap = Exp::new(rate * 1e-12).unwrap();
    let mut t = 0.0;
    let mut events = Vec::new();
    loop {
        t += gap.sample(&mut rng);
        if t > duration_ps as f64 {
            break;
        }
        events.push(ClickEvent::new(t as u64, None, None));
    }
    ClickStream::from_unsorted(0, events, duration_ps).unwrap()
}
