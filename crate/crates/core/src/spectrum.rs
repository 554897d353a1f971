//! Closed-form Fourier series of a single EV load.
//!
//! The clipped trapezoid is the periodic convolution of two boxes of widths
//! `p^d/α` and `ℓ_T + ℓ − p^d/α`, which gives the DC term
//!
//! ```text
//! c0 = (p^d / D) (ℓ_T + ℓ − p^d/α)
//! ```
//!
//! and the harmonics `c_m = c0 · sinc(m p^d/(αD)) · sinc(m (ℓ_T + ℓ − p^d/α)/D)`,
//! with `sinc(x) = sin(πx)/(πx)`. Coefficients are those of the pulse centred
//! on its plateau, so they are real; a shift to entry time `t_n` multiplies
//! harmonic `m` by `exp(-j m ω₀ t_n)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::er_model::{is_constant_regime, ControlScheme, ErConfig, EvParams};
use crate::error::{DwptError, Result};

/// THC contribution (percentage points) the auto truncation may leave out.
pub const AUTO_TAIL_POINTS: f64 = 0.01;
const MAX_AUTO_HARMONICS: usize = 1_000_000;

/// Normalised sinc, `sin(πx)/(πx)`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    let y = PI * x;
    if x.abs() < 1e-6 {
        let y2 = y * y;
        1.0 - y2 / 6.0 + y2 * y2 / 120.0
    } else {
        y.sin() / y
    }
}

/// Number of harmonics kept when summing a spectrum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// Smallest `M` whose worst-case tail moves THC by less than
    /// [`AUTO_TAIL_POINTS`].
    #[default]
    Auto,
    Fixed(usize),
}

impl Truncation {
    pub fn from_option(m: Option<usize>) -> Self {
        m.map_or(Truncation::Auto, Truncation::Fixed)
    }
}

/// Upper bound on `Σ_{m>M} m⁻⁴`.
fn quartic_tail(m: usize) -> f64 {
    let m = m as f64;
    1.0 / (3.0 * m * m * m)
}

/// THC points that harmonics above `m` can add at most, given the per-harmonic
/// bound `|c_m| ≤ bound_coeff / m²`, `lines` independent contributors and DC
/// level `dc`.
pub(crate) fn tail_points(bound_coeff: f64, lines: f64, dc: f64, m: usize) -> f64 {
    100.0 * (2.0 * lines * bound_coeff * bound_coeff * quartic_tail(m)).sqrt() / dc
}

pub(crate) fn resolve_truncation(t: Truncation, bound_coeff: f64, lines: f64, dc: f64) -> usize {
    match t {
        Truncation::Fixed(m) => m,
        Truncation::Auto => {
            if dc <= 0.0 {
                return 1;
            }
            // tail_points(M) < tol  <=>  M³ > 2·lines·B²·1e4 / (3 tol² dc²)
            let cube = 2.0 * lines * bound_coeff * bound_coeff * 1e4
                / (3.0 * AUTO_TAIL_POINTS * AUTO_TAIL_POINTS * dc * dc);
            let mut m = (cube.cbrt().ceil() as usize).clamp(1, MAX_AUTO_HARMONICS);
            while m < MAX_AUTO_HARMONICS && tail_points(bound_coeff, lines, dc, m) >= AUTO_TAIL_POINTS
            {
                m += 1;
            }
            m
        }
    }
}

/// Fourier coefficients of one EV load, truncated at `truncation_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FsCoefficients {
    pub c0_kw: f64,
    /// `c_m` for `m = 1..=truncation_m`.
    pub harmonics_kw: Vec<f64>,
    pub fundamental_hz: f64,
    pub truncation_m: usize,
}

impl FsCoefficients {
    pub fn harmonic(&self, m: usize) -> f64 {
        if m == 0 {
            self.c0_kw
        } else {
            self.harmonics_kw[m - 1]
        }
    }

    /// Total harmonic content in percent of the DC term; 0 for a zero load.
    pub fn thc_percent(&self) -> f64 {
        if self.c0_kw == 0.0 {
            return 0.0;
        }
        let sum: f64 = self.harmonics_kw.iter().map(|c| (c / self.c0_kw).powi(2)).sum();
        (2.0 * sum).sqrt() * 100.0
    }

    /// Mean of `p(t)²` over a period implied by the retained coefficients.
    pub fn mean_square(&self) -> f64 {
        self.c0_kw * self.c0_kw + 2.0 * self.harmonics_kw.iter().map(|c| c * c).sum::<f64>()
    }
}

/// Plateau-to-ramp widths of the clipped trapezoid.
fn box_widths(cfg: &ErConfig, rx_len_m: f64, peak_kw: f64) -> (f64, f64) {
    let w1 = peak_kw / cfg.power_density_kw_per_m();
    (w1, cfg.tx_len_m() + rx_len_m - w1)
}

pub(crate) fn dc_raw(cfg: &ErConfig, rx_len_m: f64, peak_kw: f64) -> f64 {
    let (_, w2) = box_widths(cfg, rx_len_m, peak_kw);
    peak_kw / cfg.period_m() * w2
}

pub(crate) fn harmonic_raw(cfg: &ErConfig, rx_len_m: f64, peak_kw: f64, m: usize) -> f64 {
    let (w1, w2) = box_widths(cfg, rx_len_m, peak_kw);
    let d = cfg.period_m();
    let m = m as f64;
    dc_raw(cfg, rx_len_m, peak_kw) * sinc(m * w1 / d) * sinc(m * w2 / d)
}

/// DC coefficient `c_{0,n}` of a periodic (not flattened) clipped load.
pub fn fs_dc(cfg: &ErConfig, ev: &EvParams) -> Result<f64> {
    if ev.is_constant_load(cfg) {
        return Err(DwptError::ConstantRegime {
            peak_demand_kw: ev.peak_demand_kw,
            floor_kw: cfg.power_density_kw_per_m() * (ev.rx_len_m - cfg.gap_m()),
        });
    }
    Ok(dc_raw(cfg, ev.rx_len_m, ev.peak_demand_kw))
}

/// Harmonic `c_{m,n}` of the clipped load; zero when the load is flat.
pub fn fs_harmonic(cfg: &ErConfig, ev: &EvParams, m: usize) -> f64 {
    if ev.is_constant_load(cfg) {
        return if m == 0 { ev.peak_demand_kw } else { 0.0 };
    }
    harmonic_raw(cfg, ev.rx_len_m, ev.peak_demand_kw, m)
}

/// `αD/(m²π²)`: bound on `|c_m|` that holds for every receiver and demand.
pub fn harmonic_bound(cfg: &ErConfig, m: usize) -> f64 {
    let m = m as f64;
    cfg.power_density_kw_per_m() * cfg.period_m() / (m * m * PI * PI)
}

fn bound_coeff(cfg: &ErConfig) -> f64 {
    harmonic_bound(cfg, 1)
}

/// Coefficients of the load under either control scheme.
pub fn fs_coefficients(
    cfg: &ErConfig,
    ev: &EvParams,
    scheme: ControlScheme,
    truncation: Truncation,
) -> FsCoefficients {
    let (rx, peak, gain) = match scheme {
        ControlScheme::Clipping => (ev.rx_len_m, ev.peak_demand_kw, 1.0),
        ControlScheme::Scaling { scale_factor } => {
            (ev.rx_len_m, cfg.max_power_kw(ev.rx_len_m), scale_factor)
        }
    };
    let fundamental_hz = ev.fundamental_hz(cfg);
    if is_constant_regime(cfg, rx, peak) {
        let m = resolve_truncation(truncation, 0.0, 1.0, peak);
        return FsCoefficients {
            c0_kw: peak,
            harmonics_kw: vec![0.0; m],
            fundamental_hz,
            truncation_m: m,
        };
    }
    let c0 = gain * dc_raw(cfg, rx, peak);
    let m_max = resolve_truncation(truncation, gain * bound_coeff(cfg), 1.0, c0);
    FsCoefficients {
        c0_kw: c0,
        harmonics_kw: (1..=m_max).map(|m| gain * harmonic_raw(cfg, rx, peak, m)).collect(),
        fundamental_hz,
        truncation_m: m_max,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThcResult {
    pub percent: f64,
    pub truncation_m: usize,
    /// Largest THC increase (points) the discarded harmonics could cause.
    pub tail_bound_points: f64,
}

/// THC of one clipped EV load.
pub fn thc_single(cfg: &ErConfig, ev: &EvParams, truncation: Truncation) -> ThcResult {
    let coeffs = fs_coefficients(cfg, ev, ControlScheme::Clipping, truncation);
    let tail_bound_points = if coeffs.c0_kw > 0.0 && !ev.is_constant_load(cfg) {
        tail_points(bound_coeff(cfg), 1.0, coeffs.c0_kw, coeffs.truncation_m)
    } else {
        0.0
    };
    ThcResult {
        percent: coeffs.thc_percent(),
        truncation_m: coeffs.truncation_m,
        tail_bound_points,
    }
}

/// First-harmonic ratio `c₁/c₀` under clipping, as a function of demand.
pub fn harmonic_ratio_clipping(cfg: &ErConfig, ev: &EvParams) -> f64 {
    if ev.is_constant_load(cfg) {
        return 0.0;
    }
    let (w1, w2) = box_widths(cfg, ev.rx_len_m, ev.peak_demand_kw);
    sinc(w1 / cfg.period_m()) * sinc(w2 / cfg.period_m())
}

/// First-harmonic ratio under scaling; independent of demand and scale factor.
pub fn harmonic_ratio_scaling(cfg: &ErConfig, ev: &EvParams) -> f64 {
    let d = cfg.period_m();
    sinc(ev.rx_len_m / d) * sinc(cfg.tx_len_m() / d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeComparison {
    pub clipping_ratio: f64,
    pub scaling_ratio: f64,
    /// Whether `ℓ_T > D/2`, the condition under which clipping is guaranteed
    /// not to be worse.
    pub guarantee_applies: bool,
    pub clipping_not_worse: bool,
}

/// Compare the harmonic ratio of the two schemes for one EV.
pub fn compare_schemes(cfg: &ErConfig, ev: &EvParams) -> SchemeComparison {
    let clipping_ratio = harmonic_ratio_clipping(cfg, ev);
    let scaling_ratio = harmonic_ratio_scaling(cfg, ev);
    SchemeComparison {
        clipping_ratio,
        scaling_ratio,
        guarantee_applies: cfg.tx_len_m() > cfg.period_m() / 2.0,
        // relative slack for the equality case at full demand
        clipping_not_worse: clipping_ratio <= scaling_ratio + 1e-12 * scaling_ratio.abs(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn truck() -> (ErConfig, EvParams) {
        let cfg = ErConfig::indot();
        let ev = EvParams::at_max_demand(&cfg, 1.83, 0.0, 24.6);
        (cfg, ev)
    }

    #[test]
    fn sinc_behaviour() {
        assert_eq!(sinc(0.0), 1.0);
        assert!((sinc(0.5) - 2.0 / PI).abs() < 1e-15);
        assert!(sinc(1.0).abs() < 1e-15);
        let x = 3e-7;
        let direct = (PI * x).sin() / (PI * x);
        assert!((sinc(x) - direct).abs() < 1e-14);
        assert!((sinc(-x) - sinc(x)).abs() == 0.0);
    }

    #[test]
    fn indot_dc() {
        let (cfg, ev) = truck();
        let c0 = fs_dc(&cfg, &ev).unwrap();
        assert!((c0 - 109.36 * 1.83 * 3.66 / 4.57).abs() < 1e-10);
        assert!((c0 - 160.28).abs() < 0.01);
    }

    #[test]
    fn dc_tends_to_floor_at_low_demand() {
        let (cfg, _) = truck();
        let floor = 109.36 * (1.83 - 0.91);
        let ev = EvParams::new(1.83, floor + 1e-9, 0.0, 24.6);
        assert!((fs_dc(&cfg, &ev).unwrap() - floor).abs() < 1e-6);
        let flat = EvParams::new(1.83, floor, 0.0, 24.6);
        assert!(matches!(fs_dc(&cfg, &flat), Err(DwptError::ConstantRegime { .. })));
    }

    #[test]
    fn first_harmonic_ratio() {
        let (cfg, ev) = truck();
        let ratio = fs_harmonic(&cfg, &ev, 1) / fs_dc(&cfg, &ev).unwrap();
        let full_demand_form = sinc(1.83 / 4.57) * sinc(3.66 / 4.57);
        assert!((ratio - full_demand_form).abs() < 1e-14);
        assert!((ratio - 0.1760).abs() < 5e-4);
        assert!(((2f64).sqrt() * ratio - 0.25).abs() < 0.005);
    }

    #[test]
    fn thc_indot_and_flat() {
        let (cfg, ev) = truck();
        let thc = thc_single(&cfg, &ev, Truncation::Auto);
        assert!((thc.percent - 26.0).abs() < 0.2, "{thc:?}");
        assert!(thc.tail_bound_points < AUTO_TAIL_POINTS);
        let at_200 = EvParams::new(1.83, 200.0, 0.0, 24.6);
        assert!((thc_single(&cfg, &at_200, Truncation::Auto).percent - 26.0).abs() < 0.2);
        let first = thc_single(&cfg, &ev, Truncation::Fixed(1)).percent;
        assert!((first - 24.9).abs() < 0.1);
        let flat = EvParams::new(1.83, 50.0, 0.0, 24.6);
        assert_eq!(thc_single(&cfg, &flat, Truncation::Auto).percent, 0.0);
    }

    #[test]
    fn thc_monotone_in_truncation() {
        let (cfg, ev) = truck();
        let mut prev = 0.0;
        for m in 1..300 {
            let t = thc_single(&cfg, &ev, Truncation::Fixed(m)).percent;
            assert!(t >= prev);
            prev = t;
        }
    }

    #[test]
    fn bound_values() {
        let cfg = ErConfig::indot();
        assert!((harmonic_bound(&cfg, 1) - 50.63).abs() < 0.01);
        assert!((harmonic_bound(&cfg, 6) * 4.0 - harmonic_bound(&cfg, 3)).abs() < 1e-12);
    }

    #[test]
    fn ratios_coincide_at_full_demand() {
        let (cfg, ev) = truck();
        let cmp = compare_schemes(&cfg, &ev);
        assert!((cmp.clipping_ratio - cmp.scaling_ratio).abs() < 1e-15);
        assert!(cmp.clipping_not_worse && cmp.guarantee_applies);
        let flat = EvParams::new(1.83, 100.0, 0.0, 24.6);
        let cmp = compare_schemes(&cfg, &flat);
        assert_eq!(cmp.clipping_ratio, 0.0);
        assert!(cmp.scaling_ratio > 0.0);
    }

    #[test]
    fn scaling_spectrum_is_scaled_full_demand_spectrum() {
        let (cfg, ev) = truck();
        let half = EvParams::new(1.83, 120.0, 0.0, 24.6);
        let full = fs_coefficients(&cfg, &ev, ControlScheme::Clipping, Truncation::Fixed(20));
        for a in [0.1, 0.5, 1.0] {
            let scaled =
                fs_coefficients(&cfg, &half, ControlScheme::scaling(a).unwrap(), Truncation::Fixed(20));
            assert!((scaled.c0_kw - a * full.c0_kw).abs() < 1e-10);
            for (s, f) in scaled.harmonics_kw.iter().zip(&full.harmonics_kw) {
                assert!((s - a * f).abs() < 1e-10);
            }
            assert_eq!(harmonic_ratio_scaling(&cfg, &half), harmonic_ratio_scaling(&cfg, &ev));
        }
    }

    #[test]
    fn ordering_guarantee_flag_for_short_transmitters() {
        let cfg = ErConfig::new(2.0, 2.5, 100.0, 1000.0).unwrap();
        let ev = EvParams::new(1.9, 150.0, 0.0, 20.0);
        assert!(!compare_schemes(&cfg, &ev).guarantee_applies);
    }
}
