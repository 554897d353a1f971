//! Sampled aggregate load, PSD estimation, harmonic peaks and Monte Carlo.
//!
//! PSD estimates are one-sided densities in kW²/Hz normalised so that the sum
//! over bins times the bin width equals the mean square of the windowed
//! series divided by the mean square of the window. A sinusoid of amplitude
//! `A` therefore integrates to `A²/2` whatever the window. Line powers
//! reported by [`detect_peaks`] are halved to the two-sided value so they
//! compare directly with `|c_m|²`.

use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::er_model::{load_at_time, ControlScheme, EvParams};
use crate::error::{DwptError, Result};
use crate::fleet::FleetModel;
use crate::spectrum::{fs_harmonic, Truncation};
use crate::traffic::Scenario;

pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 1000.0;
const SYNTH_CHUNK: usize = 4096;

/// Uniformly sampled total load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadSeries {
    pub samples_kw: Vec<f64>,
    pub sample_rate_hz: f64,
    pub t0_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario_seed: Option<u64>,
}

impl LoadSeries {
    pub fn new(samples_kw: Vec<f64>, sample_rate_hz: f64, t0_s: f64) -> Self {
        LoadSeries {
            samples_kw,
            sample_rate_hz,
            t0_s,
            scenario_seed: None,
        }
    }

    pub fn len(&self) -> usize {
        self.samples_kw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples_kw.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.sample_rate_hz
    }

    pub fn time_at(&self, i: usize) -> f64 {
        self.t0_s + i as f64 / self.sample_rate_hz
    }

    pub fn mean(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.samples_kw.iter().sum::<f64>() / self.len() as f64
    }

    pub fn mean_square(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.samples_kw.iter().map(|x| x * x).sum::<f64>() / self.len() as f64
    }

    /// `t_s,p_kw` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t_s,p_kw")?;
        for (i, p) in self.samples_kw.iter().enumerate() {
            writeln!(out, "{},{}", self.time_at(i), p)?;
        }
        Ok(())
    }
}

fn evaluate_chunk(scenario: &Scenario, series_t0: f64, rate: f64, offset: usize, out: &mut [f64]) {
    let cfg = &scenario.cfg;
    for ev in &scenario.evs {
        // samples strictly outside [entry, exit) contribute nothing
        let first = ((ev.entry_time_s - series_t0) * rate).floor().max(0.0) as usize;
        let last = ((ev.exit_time_s(cfg) - series_t0) * rate).ceil() + 1.0;
        if last < 0.0 {
            continue;
        }
        let last = last as usize;
        let lo = first.max(offset);
        let hi = last.min(offset + out.len());
        for i in lo..hi {
            let t = series_t0 + i as f64 / rate;
            out[i - offset] += load_at_time(cfg, ev, ControlScheme::Clipping, t);
        }
    }
}

/// Sample the total clipped load of every EV over `[t_start, t_end)`.
pub fn synthesize(scenario: &Scenario, sample_rate_hz: f64, t_start: f64, t_end: f64) -> Result<LoadSeries> {
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(DwptError::invalid("sample_rate_hz", format!("{sample_rate_hz}")));
    }
    if t_start.is_nan() || t_end.is_nan() || t_end <= t_start {
        return Err(DwptError::invalid(
            "window",
            format!("need t_end > t_start, got [{t_start}, {t_end}]"),
        ));
    }
    let n = ((t_end - t_start) * sample_rate_hz).round() as usize;
    let mut samples = vec![0.0; n];
    samples
        .par_chunks_mut(SYNTH_CHUNK)
        .enumerate()
        .for_each(|(c, chunk)| evaluate_chunk(scenario, t_start, sample_rate_hz, c * SYNTH_CHUNK, chunk));
    Ok(LoadSeries {
        samples_kw: samples,
        sample_rate_hz,
        t0_s: t_start,
        scenario_seed: scenario.seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    Rectangular,
    /// Periodic (DFT-even) Hann window.
    Hann,
}

impl Window {
    pub fn coefficients(&self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            Window::Hann => (0..n)
                .map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / n as f64).cos()))
                .collect(),
        }
    }

    /// Half-width, in bins, over which a line's power is integrated.
    fn line_half_width(&self) -> usize {
        match self {
            Window::Rectangular => 3,
            Window::Hann => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PsdMethod {
    Periodogram { window: Window },
    Welch {
        segment_s: f64,
        overlap_frac: f64,
        window: Window,
    },
}

impl Default for PsdMethod {
    fn default() -> Self {
        PsdMethod::Welch {
            segment_s: 8.0,
            overlap_frac: 0.5,
            window: Window::Hann,
        }
    }
}

impl PsdMethod {
    pub fn window(&self) -> Window {
        match *self {
            PsdMethod::Periodogram { window } | PsdMethod::Welch { window, .. } => window,
        }
    }
}

/// One-sided PSD in kW²/Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdEstimate {
    pub freqs_hz: Vec<f64>,
    pub psd: Vec<f64>,
    pub resolution_hz: f64,
    pub method: PsdMethod,
    pub segment_len: usize,
    pub n_segments: usize,
}

impl PsdEstimate {
    /// `Σ psd · Δf`.
    pub fn total_power(&self) -> f64 {
        self.psd.iter().sum::<f64>() * self.resolution_hz
    }

    pub fn bin_of(&self, freq_hz: f64) -> usize {
        ((freq_hz / self.resolution_hz).round().max(0.0) as usize).min(self.psd.len() - 1)
    }

    /// `freq_hz,psd` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "freq_hz,psd")?;
        for (f, p) in self.freqs_hz.iter().zip(&self.psd) {
            writeln!(out, "{f},{p}")?;
        }
        Ok(())
    }
}

fn segment_spectrum(
    fft: &dyn rustfft::Fft<f64>,
    segment: &[f64],
    window: &[f64],
    acc: &mut [f64],
) {
    let mut buf: Vec<Complex<f64>> = segment
        .iter()
        .zip(window)
        .map(|(x, w)| Complex::new(x * w, 0.0))
        .collect();
    fft.process(&mut buf);
    for (a, c) in acc.iter_mut().zip(&buf) {
        *a += c.norm_sqr();
    }
}

/// Periodogram or Welch estimate of the one-sided PSD.
pub fn estimate_psd(series: &LoadSeries, method: PsdMethod) -> Result<PsdEstimate> {
    let n = series.len();
    let fs = series.sample_rate_hz;
    let (seg, step) = match method {
        PsdMethod::Periodogram { .. } => (n, n.max(1)),
        PsdMethod::Welch {
            segment_s,
            overlap_frac,
            ..
        } => {
            if !(0.0..1.0).contains(&overlap_frac) {
                return Err(DwptError::invalid("overlap_frac", format!("{overlap_frac}")));
            }
            let seg = (segment_s * fs).round() as usize;
            if seg > n {
                return Err(DwptError::SegmentTooLong { segment: seg, len: n });
            }
            let step = ((seg as f64 * (1.0 - overlap_frac)).round() as usize).max(1);
            (seg, step)
        }
    };
    if seg < 2 {
        return Err(DwptError::invalid("segment", format!("{seg} samples is too short")));
    }
    let n_segments = 1 + (n - seg) / step;
    if matches!(method, PsdMethod::Welch { .. }) && n_segments < 2 {
        return Err(DwptError::Precondition(format!(
            "Welch needs at least 2 segments; series of {n} samples holds {n_segments}"
        )));
    }
    let window = method.window().coefficients(seg);
    let w_energy: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::new().plan_fft_forward(seg);
    let mut acc = vec![0.0; seg];
    for s in 0..n_segments {
        let start = s * step;
        segment_spectrum(fft.as_ref(), &series.samples_kw[start..start + seg], &window, &mut acc);
    }
    let bins = seg / 2 + 1;
    let scale = 1.0 / (fs * w_energy * n_segments as f64);
    let psd: Vec<f64> = (0..bins)
        .map(|k| {
            let one_sided = if k == 0 || (seg % 2 == 0 && k == seg / 2) { 1.0 } else { 2.0 };
            acc[k] * scale * one_sided
        })
        .collect();
    let resolution_hz = fs / seg as f64;
    Ok(PsdEstimate {
        freqs_hz: (0..bins).map(|k| k as f64 * resolution_hz).collect(),
        psd,
        resolution_hz,
        method,
        segment_len: seg,
        n_segments,
    })
}

/// One expected harmonic line and what was found near it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub fundamental_hz: f64,
    pub harmonic: usize,
    pub expected_hz: f64,
    pub peak_hz: f64,
    pub peak_bin: usize,
    pub psd_value: f64,
    /// Integrated power, two-sided convention (comparable with `|c_m|²`), kW².
    pub line_power_kw2: f64,
    /// False when another expected line falls within this line's integration
    /// band; bins are then shared out to the nearest line.
    pub resolved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakTable {
    pub peaks: Vec<Peak>,
    pub resolution_hz: f64,
}

impl PeakTable {
    pub fn line_power_sum(&self) -> f64 {
        self.peaks.iter().map(|p| p.line_power_kw2).sum()
    }

    pub fn unresolved(&self) -> impl Iterator<Item = &Peak> {
        self.peaks.iter().filter(|p| !p.resolved)
    }

    pub fn get(&self, fundamental_hz: f64, harmonic: usize) -> Option<&Peak> {
        self.peaks
            .iter()
            .find(|p| p.harmonic == harmonic && p.fundamental_hz == fundamental_hz)
    }
}

/// Locate harmonics `m·f` for each expected fundamental and integrate their
/// power.
pub fn detect_peaks(psd: &PsdEstimate, fundamentals_hz: &[f64], m_max: usize) -> PeakTable {
    let df = psd.resolution_hz;
    let nyquist = *psd.freqs_hz.last().unwrap_or(&0.0);
    let half = psd.method.window().line_half_width();
    let last_bin = psd.psd.len().saturating_sub(1);

    struct Line {
        f0: f64,
        m: usize,
        expected: f64,
        peak: usize,
    }
    let mut lines = Vec::new();
    for &f0 in fundamentals_hz {
        for m in 1..=m_max {
            let expected = m as f64 * f0;
            if expected + half as f64 * df > nyquist {
                break;
            }
            // local maximum within ±1.5 bins of the expected frequency
            let lo = ((expected - 1.5 * df) / df).ceil().max(1.0) as usize;
            let hi = (((expected + 1.5 * df) / df).floor() as usize).min(last_bin);
            let peak = (lo..=hi.max(lo))
                .max_by(|&a, &b| psd.psd[a].total_cmp(&psd.psd[b]).then(b.cmp(&a)))
                .unwrap_or(lo);
            lines.push(Line {
                f0,
                m,
                expected,
                peak,
            });
        }
    }

    let mut power = vec![0.0; lines.len()];
    let mut resolved = vec![true; lines.len()];
    for i in 0..lines.len() {
        for j in 0..lines.len() {
            if i != j && lines[i].peak.abs_diff(lines[j].peak) <= 2 * half {
                resolved[i] = false;
            }
        }
    }
    // each bin goes to the nearest line whose band contains it
    let mut owner: Vec<Option<usize>> = vec![None; psd.psd.len()];
    for (i, line) in lines.iter().enumerate() {
        let lo = line.peak.saturating_sub(half).max(1);
        let hi = (line.peak + half).min(last_bin);
        for (k, slot) in owner.iter_mut().enumerate().take(hi + 1).skip(lo) {
            let better = match *slot {
                None => true,
                Some(j) => {
                    let dk = (k as f64 * df - line.expected).abs();
                    let dj = (k as f64 * df - lines[j].expected).abs();
                    dk < dj
                }
            };
            if better {
                *slot = Some(i);
            }
        }
    }
    for (k, o) in owner.iter().enumerate() {
        if let Some(i) = o {
            power[*i] += psd.psd[k] * df;
        }
    }
    PeakTable {
        peaks: lines
            .iter()
            .enumerate()
            .map(|(i, l)| Peak {
                fundamental_hz: l.f0,
                harmonic: l.m,
                expected_hz: l.expected,
                peak_hz: psd.freqs_hz[l.peak],
                peak_bin: l.peak,
                psd_value: psd.psd[l.peak],
                line_power_kw2: 0.5 * power[i],
                resolved: resolved[i],
            })
            .collect(),
        resolution_hz: df,
    }
}

/// Strongest local maxima above `min_hz`, strongest first, as
/// `(freq_hz, psd_value)`.
///
/// A bin counts as a maximum if it dominates every bin within `±guard` bins.
pub fn find_spectral_peaks(psd: &PsdEstimate, min_hz: f64, count: usize, guard: usize) -> Vec<(f64, f64)> {
    let n = psd.psd.len();
    let start = (min_hz / psd.resolution_hz).ceil() as usize;
    let mut found: Vec<(f64, f64)> = (start.max(1)..n.saturating_sub(1))
        .filter(|&k| {
            let lo = k.saturating_sub(guard);
            let hi = (k + guard).min(n - 1);
            (lo..=hi).all(|j| j == k || psd.psd[j] < psd.psd[k])
        })
        .map(|k| (psd.freqs_hz[k], psd.psd[k]))
        .collect();
    found.sort_by(|a, b| b.1.total_cmp(&a.1));
    found.truncate(count);
    found
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalThc {
    pub percent: f64,
    /// Time-domain mean, kW.
    pub dc_kw: f64,
    pub line_power_sum_kw2: f64,
    pub peaks: PeakTable,
}

/// THC of a sampled load from its harmonic lines and time-domain mean.
pub fn empirical_thc(
    series: &LoadSeries,
    psd: &PsdEstimate,
    fundamentals_hz: &[f64],
    m_max: usize,
) -> Result<EmpiricalThc> {
    let dc = series.mean();
    if dc.abs() < 1e-12 {
        return Err(DwptError::ZeroDc("THC"));
    }
    let peaks = detect_peaks(psd, fundamentals_hz, m_max);
    let lines = peaks.line_power_sum();
    Ok(EmpiricalThc {
        percent: (2.0 * lines / (dc * dc)).sqrt() * 100.0,
        dc_kw: dc,
        line_power_sum_kw2: lines,
        peaks,
    })
}

/// Independent stream seed for trial `index` of a run seeded with `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draw one fleet realisation with entry times uniform over a period.
pub fn sample_fleet<R: Rng>(fleet: &FleetModel, rng: &mut R) -> Vec<EvParams> {
    let n = fleet.n_evs.round() as usize;
    let period = fleet.cfg.period_s(fleet.speed_mps);
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut class = &fleet.classes[fleet.classes.len() - 1];
            for c in &fleet.classes {
                acc += c.prob;
                if u < acc {
                    class = c;
                    break;
                }
            }
            let demand = class.demand.sample(&fleet.cfg, class.rx_len_m, rng.random());
            EvParams::new(class.rx_len_m, demand, rng.random::<f64>() * period, fleet.speed_mps)
        })
        .collect()
}

/// Period Fourier coefficients `c_m = Σ_n c_{m,n} e^{-j m ω₀ t_n}`, `m = 0..=m_max`.
pub fn aggregate_coefficients(fleet: &FleetModel, evs: &[EvParams], m_max: usize) -> Vec<Complex<f64>> {
    let w0 = 2.0 * PI * fleet.fundamental_hz();
    let mut out = vec![Complex::new(0.0, 0.0); m_max + 1];
    for ev in evs {
        for (m, c) in out.iter_mut().enumerate() {
            let amp = fs_harmonic(&fleet.cfg, ev, m);
            *c += Complex::from_polar(amp, -(m as f64) * w0 * ev.entry_time_s);
        }
    }
    out
}

/// Ensemble statistics of `|c_m|²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloLines {
    /// Mean of `|c_m|²` for `m = 0..=M`, kW².
    pub mean: Vec<f64>,
    /// Standard error of each mean.
    pub std_err: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
}

/// Average `|c_m|²` over random fleets with uniform entry times.
pub fn monte_carlo_psd(fleet: &FleetModel, m_max: usize, trials: usize, seed: u64) -> Result<MonteCarloLines> {
    fleet.validate()?;
    if fleet.n_evs.fract() != 0.0 {
        return Err(DwptError::invalid("n_evs", "Monte Carlo needs an integer fleet size"));
    }
    if trials < 2 {
        return Err(DwptError::invalid("trials", "need at least 2 trials"));
    }
    let per_trial: Vec<Vec<f64>> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i));
            let evs = sample_fleet(fleet, &mut rng);
            aggregate_coefficients(fleet, &evs, m_max)
                .iter()
                .map(|c| c.norm_sqr())
                .collect()
        })
        .collect();
    let t = trials as f64;
    let mut mean = vec![0.0; m_max + 1];
    for row in &per_trial {
        for (a, v) in mean.iter_mut().zip(row) {
            *a += v;
        }
    }
    mean.iter_mut().for_each(|a| *a /= t);
    let mut var = vec![0.0; m_max + 1];
    for row in &per_trial {
        for ((a, v), mu) in var.iter_mut().zip(row).zip(&mean) {
            *a += (v - mu).powi(2);
        }
    }
    let std_err = var.iter().map(|v| (v / (t - 1.0) / t).sqrt()).collect();
    Ok(MonteCarloLines {
        mean,
        std_err,
        trials,
        seed,
    })
}

/// Truncation used when none is given for sampled spectra.
pub fn default_line_truncation() -> Truncation {
    Truncation::Fixed(50)
}
