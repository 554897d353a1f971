#![allow(dead_code)]
//! Oracles shared by the integration tests.
//!
//! The clipped load is piecewise linear in position between a finite set of
//! breakpoints (coil edges seen by either receiver end, plus the points where
//! the coupled power crosses the demand). The oracles find those breakpoints
//! from the coil geometry, sample the library waveform there and integrate
//! the linear interpolant exactly. Nothing here uses the sinc formulas.

use std::f64::consts::PI;

use dwpt::{load_at_time, ControlScheme, ErConfig, EvParams};
use rand::Rng;
use rustfft::num_complex::Complex64;

/// Length of receiver `[x − ℓ, x]` lying over any coil `[kD, kD + ℓ_T]`.
pub fn coil_overlap(cfg: &ErConfig, rx: f64, x: f64) -> f64 {
    let d = cfg.period_m();
    let lo = x - rx;
    let first = (lo / d).floor() as i64 - 1;
    let last = (x / d).floor() as i64 + 1;
    (first..=last)
        .map(|k| {
            let a = k as f64 * d;
            let b = a + cfg.tx_len_m();
            (x.min(b) - lo.max(a)).max(0.0)
        })
        .sum()
}

/// `min(p, α · overlap)` from geometry alone.
pub fn geometric_load(cfg: &ErConfig, rx: f64, peak: f64, x: f64) -> f64 {
    peak.min(cfg.power_density_kw_per_m() * coil_overlap(cfg, rx, x))
}

/// Breakpoints of the clipped load on `[0, D]`, including both ends.
pub fn breakpoints(cfg: &ErConfig, rx: f64, peak: f64) -> Vec<f64> {
    let d = cfg.period_m();
    let mut xs = vec![0.0, d];
    for edge in [0.0, cfg.tx_len_m()] {
        for shift in [0.0, rx] {
            let x = (edge + shift).rem_euclid(d);
            xs.push(x);
        }
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    // insert the crossings of α·overlap with the demand
    let alpha = cfg.power_density_kw_per_m();
    let mut out = Vec::new();
    for w in xs.windows(2) {
        out.push(w[0]);
        let (a, b) = (w[0], w[1]);
        let fa = alpha * coil_overlap(cfg, rx, a);
        let fb = alpha * coil_overlap(cfg, rx, b);
        if (fa - peak) * (fb - peak) < 0.0 {
            out.push(a + (peak - fa) / (fb - fa) * (b - a));
        }
    }
    out.push(d);
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

const INTERIOR_PERIOD: f64 = 11.0;

/// Library waveform value at position `x ∈ [0, D]` of an interior period,
/// reached through the time-domain path.
fn sample(cfg: &ErConfig, ev: &EvParams, x: f64) -> f64 {
    let t = (INTERIOR_PERIOD * cfg.period_m() + x) / ev.speed_mps;
    load_at_time(cfg, ev, ControlScheme::Clipping, t)
}

fn nodes(cfg: &ErConfig, ev: &EvParams) -> Vec<(f64, f64)> {
    breakpoints(cfg, ev.rx_len_m, ev.peak_demand_kw)
        .into_iter()
        .map(|x| {
            // the right end is the start of the next period
            let y = if x >= cfg.period_m() { sample(cfg, ev, 0.0) } else { sample(cfg, ev, x) };
            (x, y)
        })
        .collect()
}

/// Complex Fourier coefficient `(1/D) ∫ p(x) e^{-j 2π m x / D} dx` of the
/// piecewise-linear interpolant, integrated exactly.
pub fn fs_oracle(cfg: &ErConfig, ev: &EvParams, m: usize) -> Complex64 {
    let d = cfg.period_m();
    let pts = nodes(cfg, ev);
    let mut acc = Complex64::new(0.0, 0.0);
    if m == 0 {
        for w in pts.windows(2) {
            acc += 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0);
        }
        return acc / d;
    }
    let k = 2.0 * PI * m as f64 / d;
    let j = Complex64::new(0.0, 1.0);
    let e = |x: f64| Complex64::from_polar(1.0, -k * x);
    for w in pts.windows(2) {
        let ((x0, f0), (x1, f1)) = (w[0], w[1]);
        if x1 <= x0 {
            continue;
        }
        let s = (f1 - f0) / (x1 - x0);
        // ∫ f e^{-jkx} = [f e^{-jkx} j/k + s e^{-jkx}/k²]
        let at = |x: f64, f: f64| e(x) * (j * f / k + s / (k * k));
        acc += at(x1, f1) - at(x0, f0);
    }
    acc / d
}

/// Mean square over one period, exact for the piecewise-linear interpolant.
pub fn mean_square_oracle(cfg: &ErConfig, ev: &EvParams) -> f64 {
    nodes(cfg, ev)
        .windows(2)
        .map(|w| {
            let ((x0, f0), (x1, f1)) = (w[0], w[1]);
            (x1 - x0) * (f0 * f0 + f0 * f1 + f1 * f1) / 3.0
        })
        .sum::<f64>()
        / cfg.period_m()
}

/// Receiver in `(0, ℓ_T)` and demand strictly above the flat floor.
pub fn random_rippled<R: Rng>(cfg: &ErConfig, rng: &mut R) -> EvParams {
    let rx = cfg.tx_len_m() * rng.random_range(0.02..0.98);
    let floor = cfg.floor_power_kw(rx);
    let max = cfg.max_power_kw(rx);
    let peak = floor + (max - floor) * rng.random_range(0.01..=1.0);
    EvParams::new(rx, peak, 0.0, 24.6)
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}
