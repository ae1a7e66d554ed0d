mod common;

use std::time::Instant;

use common::{brute_force, poisson_stream, random_stream};
use ionpair::correlator::{autocorrelate, correlate, CorrelogramConfig, NormalizationMode, TagFilter, MAX_WINDOW_PS};
use ionpair::stream::{ClickEvent, ClickStream};
use ionpair::{Error, Polarization};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn config(bin: u64, bins: u64) -> CorrelogramConfig {
    CorrelogramConfig { mode: NormalizationMode::RawCounts, ..CorrelogramConfig::new(bin, bin * bins).unwrap() }
}

fn pol_filter(code: u8) -> TagFilter {
    match code {
        0 => TagFilter::polarization(Polarization::SigmaMinus),
        1 => TagFilter::polarization(Polarization::SigmaPlus),
        _ => TagFilter::default(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fast_equals_brute_force(
        seed in any::<u64>(),
        na in 0usize..4000,
        nb in 0usize..4000,
        bin in 1u64..5000,
        bins in 1u64..60,
        fa in 0u8..3,
        fb in 0u8..3,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_stream(&mut rng, na, 20_000_000);
        let b = random_stream(&mut rng, nb, 25_000_000);
        let cfg = CorrelogramConfig { filter_a: pol_filter(fa), filter_b: pol_filter(fb), ..config(bin, bins) };
        let fast = correlate(&a, &b, &cfg).unwrap();
        prop_assert_eq!(&fast.counts, &brute_force(&a, &b, &cfg, false));
        prop_assert_eq!(fast.total_pairs, fast.counts.iter().sum::<u64>());
        let auto = autocorrelate(&a, &cfg).unwrap();
        prop_assert_eq!(&auto.counts, &brute_force(&a, &a, &cfg, true));
    }

    #[test]
    fn swapping_sides_mirrors_the_histogram(seed in any::<u64>(), n in 1usize..3000, half_bin in 1u64..2000, bins in 1u64..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_stream(&mut rng, n, 10_000_000);
        let b = random_stream(&mut rng, n, 10_000_000);
        // odd widths put every bin edge on a half picosecond
        let cfg = config(2 * half_bin + 1, bins);
        let ab = correlate(&a, &b, &cfg).unwrap().counts;
        let ba = correlate(&b, &a, &cfg).unwrap().counts;
        let reversed: Vec<u64> = ba.iter().rev().copied().collect();
        prop_assert_eq!(ab, reversed);
    }

    #[test]
    fn edge_delays_go_to_the_higher_bin(t in 10_000u64..1_000_000, k in -5i64..5) {
        let w = 1000i64;
        let d = (2 * k + 1) * w / 2;
        let tb = (t as i64 + d) as u64;
        let a = ClickStream::new(0, vec![ClickEvent::new(t, None, None)], 2_000_000).unwrap();
        let b = ClickStream::new(1, vec![ClickEvent::new(tb, None, None)], 2_000_000).unwrap();
        let c = correlate(&a, &b, &config(1000, 10)).unwrap();
        let expected_bin = (k + 1 + 10) as usize;
        prop_assert_eq!(c.counts[expected_bin], 1);
        prop_assert_eq!(c.total_pairs, 1);
    }
}

#[test]
fn full_size_instances_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for (bin, bins) in [(1000, 1000), (37, 5)] {
        let a = random_stream(&mut rng, 10_000, 1_000_000_000);
        let b = random_stream(&mut rng, 10_000, 1_000_000_000);
        let cfg = config(bin, bins);
        assert_eq!(correlate(&a, &b, &cfg).unwrap().counts, brute_force(&a, &b, &cfg, false));
    }
}

#[test]
fn single_event_autocorrelation_is_empty() {
    let s = ClickStream::new(0, vec![ClickEvent::new(500, None, None)], 1000).unwrap();
    let c = correlate(&s, &s, &config(10, 5)).unwrap();
    assert_eq!(c.total_pairs, 0);
    let copy = s.clone();
    let with_self = correlate(&s, &copy, &config(10, 5)).unwrap();
    assert_eq!(with_self.counts[5], 1);
}

#[test]
fn unsorted_and_empty_inputs() {
    let bad = ClickStream {
        channel: 0,
        events: vec![ClickEvent::new(10, None, None), ClickEvent::new(5, None, None)],
        duration_ps: 100,
        metadata: Default::default(),
    };
    let good = ClickStream::new(1, vec![ClickEvent::new(7, None, None)], 100).unwrap();
    assert!(matches!(correlate(&bad, &good, &config(1, 3)), Err(Error::UnsortedStream { index: 1 })));
    assert!(CorrelogramConfig::new(0, 10).is_err());
    assert!(CorrelogramConfig::new(3, 10).is_err());
    assert!(CorrelogramConfig::new(1 << 20, MAX_WINDOW_PS + (1 << 20)).is_err());

    let cfg = CorrelogramConfig { filter_a: TagFilter::polarization(Polarization::Pi), ..CorrelogramConfig::new(1, 3).unwrap() };
    let c = correlate(&good, &good.clone(), &cfg).unwrap();
    assert!(c.empty);
    assert!(c.normalized.iter().all(|v| *v == 0.0));
    assert_eq!(c.rate_a, 0.0);
}

#[test]
fn rates_use_the_overlap_window() {
    let a = poisson_stream(1, 1e5, 2_000_000_000_000);
    let b = poisson_stream(2, 1e5, 1_000_000_000_000);
    let c = correlate(&a, &b, &CorrelogramConfig::new(1000, 100_000).unwrap()).unwrap();
    assert_eq!(c.overlap_ps, 1_000_000_000_000);
    let in_overlap = a.events.iter().filter(|e| e.timestamp_ps <= c.overlap_ps).count();
    assert_eq!(c.events_a, in_overlap);
    assert!((c.rate_a - in_overlap as f64).abs() < 1e-6);
}

#[test]
fn independent_poisson_streams_are_flat() {
    let duration = 10_000_000_000_000;
    let a = poisson_stream(11, 1e5, duration);
    let b = poisson_stream(12, 1e5, duration);
    assert!(a.len() > 900_000 && b.len() > 900_000);
    let cfg = CorrelogramConfig::new(10_000_000, 1_000_000_000).unwrap();
    let c = correlate(&a, &b, &cfg).unwrap();
    let expected = c.rate_a * c.rate_b * c.overlap_ps as f64 * 1e-12 * cfg.bin_width_ps as f64 * 1e-12;
    let sigma = 1.0 / expected.sqrt();
    let n = c.normalized.len() as f64;
    let mean = c.normalized.iter().sum::<f64>() / n;
    assert!((mean - 1.0).abs() < 3.0 * sigma / n.sqrt(), "mean {mean}");
    let outliers = c.normalized.iter().filter(|v| (*v - 1.0).abs() > 3.0 * sigma).count();
    assert!(outliers <= 3, "{outliers} bins beyond 3σ");
    let chi2: f64 = c.normalized.iter().map(|v| ((v - 1.0) / sigma).powi(2)).sum::<f64>() / n;
    assert!((chi2 - 1.0).abs() < 0.5, "χ²/bin {chi2}");
}

#[test]
fn throughput_scales_linearly() {
    let rate = 1e6;
    let small = poisson_stream(3, rate, 1_000_000_000_000);
    let small_b = poisson_stream(4, rate, 1_000_000_000_000);
    let large = poisson_stream(5, rate, 2_000_000_000_000);
    let large_b = poisson_stream(6, rate, 2_000_000_000_000);
    let cfg = CorrelogramConfig::new(1000, 1_000_000).unwrap();
    let time = |a: &ClickStream, b: &ClickStream| {
        let t = Instant::now();
        std::hint::black_box(correlate(a, b, &cfg).unwrap());
        t.elapsed().as_secs_f64()
    };
    let (mut t_small, mut t_large) = (f64::INFINITY, f64::INFINITY);
    for _ in 0..15 {
        t_small = t_small.min(time(&small, &small_b));
        t_large = t_large.min(time(&large, &large_b));
    }
    let ratio = t_large / t_small;
    assert!(ratio < 2.2, "doubling the events took {ratio:.2}× as long");
}
