use std::f64::consts::PI;

use dwpt::fleet::{DemandDist, FleetClass, FleetModel};
use dwpt::signal::{
    aggregate_coefficients, detect_peaks, empirical_thc, estimate_psd, find_spectral_peaks, monte_carlo_psd,
    sample_fleet, synthesize, LoadSeries, PsdEstimate, PsdMethod, Window,
};
use dwpt::spectrum::{fs_dc, fs_harmonic};
use dwpt::traffic::{generate_occupancy, OccupancySpec, Provenance, Scenario, TrafficClass};
use dwpt::{load_at_time, ControlScheme, ErConfig, EvParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

fn indot() -> ErConfig {
    ErConfig::indot()
}

fn single_speed(n: usize, window_s: f64, seed: u64) -> (Scenario, LoadSeries) {
    let cfg = indot();
    let spec = OccupancySpec {
        n_evs: n,
        window_s,
        classes: vec![TrafficClass::new("truck", 1.83, 1.0, 24.6, DemandDist::MaxDemand)],
    };
    let sc = generate_occupancy(&cfg, &spec, seed).unwrap();
    let (t0, t1) = sc.observation_window_s.unwrap();
    let series = synthesize(&sc, 1000.0, t0, t1).unwrap();
    (sc, series)
}

fn tone(f: f64, secs: f64) -> LoadSeries {
    let fs = 1000.0;
    let n = (fs * secs) as usize;
    LoadSeries::new((0..n).map(|i| 3.0 * (2.0 * PI * f * i as f64 / fs).cos()).collect(), fs, 0.0)
}

#[test]
fn mean_tracks_dc_coefficient() {
    let cfg = indot();
    let c0 = fs_dc(&cfg, &EvParams::at_max_demand(&cfg, 1.83, 0.0, 24.6)).unwrap();
    let (_, series) = single_speed(10, 60.0, 4);
    assert_eq!(series.len(), 60_000);
    assert!((series.mean() - 10.0 * c0).abs() < 0.02 * 10.0 * c0, "{}", series.mean());
    assert!(series.samples_kw.iter().all(|&p| p >= 0.0));
}

#[test]
fn single_speed_fundamental() {
    let (_, series) = single_speed(45, 60.0, 8);
    let psd = estimate_psd(&series, PsdMethod::default()).unwrap();
    let top = find_spectral_peaks(&psd, 1.0, 1, 4);
    let f0 = 24.6 / 4.57;
    assert!((top[0].0 - f0).abs() <= psd.resolution_hz, "{top:?}");
}

#[test]
fn synthetic_lines_are_recovered_exactly() {
    // line spectrum on a 0.125 Hz grid with the fundamental on bin 43
    let df = 0.125;
    let f0 = 43.0 * df;
    let bins = 4001;
    let mut values = vec![0.0; bins];
    for m in 1..=10 {
        values[43 * m] = 100.0 / (m * m) as f64;
    }
    let psd = PsdEstimate {
        freqs_hz: (0..bins).map(|k| k as f64 * df).collect(),
        psd: values,
        resolution_hz: df,
        method: PsdMethod::Periodogram { window: Window::Rectangular },
        segment_len: 2 * (bins - 1),
        n_segments: 1,
    };
    let table = detect_peaks(&psd, &[f0], 10);
    assert_eq!(table.peaks.len(), 10);
    for p in &table.peaks {
        assert_eq!(p.peak_hz, p.harmonic as f64 * f0);
        let want = 0.5 * 100.0 / (p.harmonic * p.harmonic) as f64 * df;
        assert!((p.line_power_kw2 - want).abs() < 1e-12);
        assert!(p.resolved);
    }
}

#[test]
fn line_powers_match_ensemble_expectation() {
    let cfg = indot();
    let ev = EvParams::at_max_demand(&cfg, 1.83, 0.0, 24.6);
    let f0 = 24.6 / 4.57;
    let windows = 48;
    let method = PsdMethod::Welch {
        segment_s: 8.0,
        overlap_frac: 0.5,
        window: Window::Hann,
    };
    let per_window: Vec<Vec<f64>> = (0..windows)
        .map(|w| {
            let (_, series) = single_speed(45, 24.0, 1000 + w);
            let psd = estimate_psd(&series, method).unwrap();
            let table = detect_peaks(&psd, &[f0], 3);
            table.peaks.iter().map(|p| p.line_power_kw2).collect()
        })
        .collect();
    for m in 1..=3 {
        let xs: Vec<f64> = per_window.iter().map(|r| r[m - 1]).collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let se = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
        let want = 45.0 * fs_harmonic(&cfg, &ev, m).powi(2);
        assert!((mean - want).abs() <= 3.0 * se, "m={m}: {mean} vs {want} ± {se}");
    }
}

#[test]
fn peak_width_scales_inversely_with_segment() {
    let series = tone(10.0, 64.0);
    let width = |segment_s: f64| {
        let psd = estimate_psd(
            &series,
            PsdMethod::Welch {
                segment_s,
                overlap_frac: 0.5,
                window: Window::Hann,
            },
        )
        .unwrap();
        // equivalent width (Σ P Δf)² / Σ P² Δf
        let s1: f64 = psd.psd.iter().sum::<f64>() * psd.resolution_hz;
        let s2: f64 = psd.psd.iter().map(|p| p * p).sum::<f64>() * psd.resolution_hz;
        s1 * s1 / s2
    };
    let ratio = width(4.0) / width(8.0);
    assert!((ratio - 2.0).abs() < 0.02, "{ratio}");
    let ratio = width(2.0) / width(8.0);
    assert!((ratio - 4.0).abs() < 0.04, "{ratio}");
}

#[test]
fn outputs_are_bit_reproducible() {
    let (a_sc, a) = single_speed(45, 20.0, 77);
    let (b_sc, b) = single_speed(45, 20.0, 77);
    assert_eq!(a_sc, b_sc);
    assert_eq!(a.samples_kw, b.samples_kw);
    let pa = estimate_psd(&a, PsdMethod::default()).unwrap();
    let pb = estimate_psd(&b, PsdMethod::default()).unwrap();
    assert_eq!(pa, pb);

    let fleet = FleetModel::new(
        indot(),
        vec![FleetClass::new(1.83, 1.0, DemandDist::UniformOnRange)],
        45.0,
        24.6,
    )
    .unwrap();
    let many = monte_carlo_psd(&fleet, 5, 500, 3).unwrap();
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| monte_carlo_psd(&fleet, 5, 500, 3).unwrap());
    assert_eq!(many, one);
    let series_one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| {
            let (t0, t1) = a_sc.observation_window_s.unwrap();
            synthesize(&a_sc, 1000.0, t0, t1).unwrap()
        });
    assert_eq!(series_one.samples_kw, a.samples_kw);
}

fn wss_fleet() -> FleetModel {
    FleetModel::new(
        indot(),
        vec![
            FleetClass::new(1.83, 0.3, DemandDist::UniformOnRange),
            FleetClass::new(1.2, 0.7, DemandDist::MaxDemand),
        ],
        45.0,
        24.6,
    )
    .unwrap()
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn mean_load_is_time_invariant() {
    let fleet = wss_fleet();
    let cfg = fleet.cfg;
    let period = cfg.period_s(24.6);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let taus = [0.0, 0.13, 0.37, 0.71];
    let mut at: Vec<Vec<f64>> = vec![Vec::new(); taus.len()];
    for _ in 0..4000 {
        let evs = sample_fleet(&fleet, &mut rng);
        for (i, tau) in taus.iter().enumerate() {
            let t = (20.0 + tau) * period;
            at[i].push(evs.iter().map(|e| load_at_time(&cfg, e, ControlScheme::Clipping, t)).sum());
        }
    }
    let (m0, s0) = mean_and_se(&at[0]);
    for xs in &at[1..] {
        let (m, s) = mean_and_se(xs);
        assert!((m - m0).abs() <= 4.0 * (s * s + s0 * s0).sqrt(), "{m} vs {m0}");
    }
}

#[test]
fn distinct_harmonics_are_uncorrelated() {
    let fleet = wss_fleet();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let pairs = [(1usize, 2usize), (1, 3), (2, 5)];
    let mut prods: Vec<Vec<Complex64>> = vec![Vec::new(); pairs.len()];
    let mut first: Vec<Complex64> = Vec::new();
    for _ in 0..4000 {
        let c = aggregate_coefficients(&fleet, &sample_fleet(&fleet, &mut rng), 5);
        for (i, &(a, b)) in pairs.iter().enumerate() {
            prods[i].push(c[a] * c[b].conj());
        }
        first.push(c[1]);
    }
    for xs in prods.iter().chain(std::iter::once(&first)) {
        let re: Vec<f64> = xs.iter().map(|z| z.re).collect();
        let im: Vec<f64> = xs.iter().map(|z| z.im).collect();
        for part in [re, im] {
            let (m, s) = mean_and_se(&part);
            assert!(m.abs() <= 4.0 * s, "{m} ± {s}");
        }
    }
}

#[test]
fn single_ev_long_window_thc() {
    let cfg = indot();
    let sc = Scenario {
        cfg,
        duration_s: 170.0,
        seed: None,
        provenance: Provenance::IngestedFile { path: "single".into() },
        observation_window_s: None,
        evs: vec![EvParams::new(1.83, 200.0, 0.0, 24.6)],
    };
    let series = synthesize(&sc, 1000.0, 10.0, 150.0).unwrap();
    let psd = estimate_psd(&series, PsdMethod::default()).unwrap();
    let thc = empirical_thc(&series, &psd, &[24.6 / 4.57], 50).unwrap();
    assert!((thc.percent - 26.0).abs() <= 1.0, "{}", thc.percent);
    assert_eq!(thc.peaks.unresolved().count(), 0);
}

#[test]
fn welch_needs_two_segments() {
    let series = tone(5.0, 10.0);
    let err = estimate_psd(
        &series,
        PsdMethod::Welch {
            segment_s: 8.0,
            overlap_frac: 0.0,
            window: Window::Hann,
        },
    );
    assert!(err.is_err());
    let too_long = estimate_psd(
        &series,
        PsdMethod::Welch {
            segment_s: 11.0,
            overlap_frac: 0.5,
            window: Window::Hann,
        },
    );
    assert!(too_long.is_err());
}
