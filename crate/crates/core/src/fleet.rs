//! Stochastic model of the aggregate load of a fleet.
//!
//! EVs fall into classes by receiver length. Each class carries a probability
//! and a peak-demand distribution. With entry times independent and uniform
//! over one period `T = D/v`, the total load is wide-sense stationary with a
//! line spectrum at multiples of `v/D`:
//!
//! ```text
//! E|c_0|² = N² (E[c_{0,n}])²        E|c_m|² = N E[c_{m,n}²]   (m ≠ 0)
//! ```
//!
//! The class-conditional expectations are integrated numerically over the
//! demand distribution. The second half of the module compares two-class
//! compositions: which of two fleets with equal DC load has more harmonic
//! content.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::er_model::{is_constant_regime, ErConfig};
use crate::error::{DwptError, Result};
use crate::quad;
use crate::spectrum::{dc_raw, harmonic_bound, harmonic_raw, resolve_truncation, tail_points};
use crate::spectrum::{ThcResult, Truncation};

const MOMENT_ABS_TOL: f64 = 1e-10;

/// Distribution of the peak demand within a class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DemandDist {
    /// Every EV demands `α·ℓ`.
    MaxDemand,
    /// Uniform over `(α·max(ℓ − d, 0), α·ℓ]`.
    UniformOnRange,
    /// Uniform over `[lo_kw, hi_kw]`; draws above `α·ℓ` saturate at `α·ℓ`.
    UniformExplicit { lo_kw: f64, hi_kw: f64 },
}

impl DemandDist {
    pub fn validate(&self) -> Result<()> {
        if let DemandDist::UniformExplicit { lo_kw, hi_kw } = *self {
            if !(lo_kw.is_finite() && hi_kw.is_finite() && lo_kw >= 0.0 && lo_kw <= hi_kw) {
                return Err(DwptError::invalid(
                    "demand",
                    format!("need 0 <= lo_kw <= hi_kw, got [{lo_kw}, {hi_kw}]"),
                ));
            }
        }
        Ok(())
    }

    /// Demand obtained from a uniform variate `u ∈ [0, 1)`.
    pub fn sample(&self, cfg: &ErConfig, rx_len_m: f64, u: f64) -> f64 {
        let max = cfg.max_power_kw(rx_len_m);
        match *self {
            DemandDist::MaxDemand => max,
            DemandDist::UniformOnRange => {
                // (lo, max]: 1 - u lies in (0, 1]
                let lo = cfg.floor_power_kw(rx_len_m);
                lo + (1.0 - u) * (max - lo)
            }
            DemandDist::UniformExplicit { lo_kw, hi_kw } => {
                (lo_kw + u * (hi_kw - lo_kw)).min(max)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FleetClass {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub rx_len_m: f64,
    pub prob: f64,
    pub demand: DemandDist,
}

impl FleetClass {
    pub fn new(rx_len_m: f64, prob: f64, demand: DemandDist) -> Self {
        FleetClass {
            name: None,
            rx_len_m,
            prob,
            demand,
        }
    }
}

/// Fleet of `n_evs` EVs at a common speed, drawn from a class mixture.
///
/// `n_evs` is real-valued so that compositions can be matched on DC load
/// without rounding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FleetModel {
    pub cfg: ErConfig,
    pub classes: Vec<FleetClass>,
    pub n_evs: f64,
    pub speed_mps: f64,
}

impl FleetModel {
    pub fn new(cfg: ErConfig, classes: Vec<FleetClass>, n_evs: f64, speed_mps: f64) -> Result<Self> {
        let model = FleetModel {
            cfg,
            classes,
            n_evs,
            speed_mps,
        };
        model.validate()?;
        Ok(model)
    }

    /// Fleet of two max-demand classes: a fraction `truck_fraction` with
    /// receiver `la`, the rest with `lb`.
    pub fn two_class(
        cfg: ErConfig,
        la: f64,
        lb: f64,
        truck_fraction: f64,
        n_evs: f64,
        speed_mps: f64,
    ) -> Result<Self> {
        FleetModel::new(
            cfg,
            vec![
                FleetClass::new(la, truck_fraction, DemandDist::MaxDemand),
                FleetClass::new(lb, 1.0 - truck_fraction, DemandDist::MaxDemand),
            ],
            n_evs,
            speed_mps,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() {
            return Err(DwptError::invalid("classes", "at least one class is required"));
        }
        let mut total = 0.0;
        for class in &self.classes {
            if !(class.prob >= 0.0 && class.prob <= 1.0) {
                return Err(DwptError::invalid(
                    "prob",
                    format!("class probability must lie in [0, 1], got {}", class.prob),
                ));
            }
            self.cfg.check_rx_len(class.rx_len_m)?;
            class.demand.validate()?;
            total += class.prob;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(DwptError::invalid(
                "prob",
                format!("class probabilities sum to {total}, not 1"),
            ));
        }
        if !(self.n_evs.is_finite() && self.n_evs > 0.0) {
            return Err(DwptError::invalid("n_evs", format!("must be > 0, got {}", self.n_evs)));
        }
        if !(self.speed_mps.is_finite() && self.speed_mps > 0.0) {
            return Err(DwptError::invalid(
                "speed_mps",
                format!("must be > 0, got {}", self.speed_mps),
            ));
        }
        Ok(())
    }

    pub fn fundamental_hz(&self) -> f64 {
        self.cfg.fundamental_hz(self.speed_mps)
    }

    /// Expected number of EVs in each class, `π_g N`.
    pub fn class_counts(&self) -> Vec<f64> {
        self.classes.iter().map(|c| c.prob * self.n_evs).collect()
    }
}

/// Class-conditional moments for one harmonic index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    /// `E[c_{0,n}]` in kW.
    pub mean_dc_kw: f64,
    /// `E[c_{m,n}²]` in kW²; for `m = 0` this is `E[c_{0,n}²]`.
    pub mean_sq_kw2: f64,
}

/// `c_{m,n}` for demand `p` including the flat regime.
fn coefficient(cfg: &ErConfig, rx_len_m: f64, peak_kw: f64, m: usize) -> f64 {
    if is_constant_regime(cfg, rx_len_m, peak_kw) {
        if m == 0 {
            peak_kw
        } else {
            0.0
        }
    } else if m == 0 {
        dc_raw(cfg, rx_len_m, peak_kw)
    } else {
        harmonic_raw(cfg, rx_len_m, peak_kw, m)
    }
}

/// `E[f(p^d)]` for the class demand distribution.
fn demand_expectation<F: Fn(f64) -> f64>(
    cfg: &ErConfig,
    rx_len_m: f64,
    demand: DemandDist,
    f: F,
) -> f64 {
    let max = cfg.max_power_kw(rx_len_m);
    let (lo, hi) = match demand {
        DemandDist::MaxDemand => return f(max),
        DemandDist::UniformOnRange => (cfg.floor_power_kw(rx_len_m), max),
        DemandDist::UniformExplicit { lo_kw, hi_kw } => (lo_kw, hi_kw),
    };
    let width = hi - lo;
    if width <= 0.0 {
        return f(lo.min(max));
    }
    let top = hi.min(max);
    let mut acc = 0.0;
    if top > lo {
        // integrand has a kink where the load stops being flat
        let kink = cfg.power_density_kw_per_m() * (rx_len_m - cfg.gap_m());
        let tol = MOMENT_ABS_TOL * width;
        if kink > lo && kink < top {
            acc += quad::integrate(&f, lo, kink, 0.5 * tol);
            acc += quad::integrate(&f, kink, top, 0.5 * tol);
        } else {
            acc += quad::integrate(&f, lo, top, tol);
        }
    }
    if hi > max {
        acc += (hi - max.max(lo)) * f(max);
    }
    acc / width
}

/// Moments of `c_{0,n}` and `c_{m,n}²` conditioned on class `g`.
pub fn class_moments(model: &FleetModel, g: usize, m: usize) -> Result<Moments> {
    let class = model.classes.get(g).ok_or_else(|| {
        DwptError::invalid("class", format!("index {g} out of range (G = {})", model.classes.len()))
    })?;
    let cfg = &model.cfg;
    let rx = class.rx_len_m;
    Ok(Moments {
        mean_dc_kw: demand_expectation(cfg, rx, class.demand, |p| coefficient(cfg, rx, p, 0)),
        mean_sq_kw2: demand_expectation(cfg, rx, class.demand, |p| {
            coefficient(cfg, rx, p, m).powi(2)
        }),
    })
}

/// Probability-weighted moments over all classes.
pub fn mixture_moments(model: &FleetModel, m: usize) -> Result<Moments> {
    let mut out = Moments {
        mean_dc_kw: 0.0,
        mean_sq_kw2: 0.0,
    };
    for (g, class) in model.classes.iter().enumerate() {
        let cm = class_moments(model, g, m)?;
        out.mean_dc_kw += class.prob * cm.mean_dc_kw;
        out.mean_sq_kw2 += class.prob * cm.mean_sq_kw2;
    }
    Ok(out)
}

/// `E[c_{m,n}²]` for max-demand classes from the sine-product form
/// `Σ π_g [αD/(m²π²) sin(mπℓ_g/D) sin(mπℓ_T/D)]²`.
pub fn max_demand_harmonic_power(cfg: &ErConfig, classes: &[(f64, f64)], m: usize) -> f64 {
    let d = cfg.period_m();
    let mf = m as f64;
    let tx = (mf * PI * cfg.tx_len_m() / d).sin();
    classes
        .iter()
        .map(|&(rx, prob)| {
            let c = harmonic_bound(cfg, m) * (mf * PI * rx / d).sin() * tx;
            prob * c * c
        })
        .sum()
}

/// Mean DC coefficient of max-demand classes, `Σ π_g α ℓ_g ℓ_T / D`.
pub fn max_demand_mean_dc(cfg: &ErConfig, classes: &[(f64, f64)]) -> f64 {
    classes
        .iter()
        .map(|&(rx, prob)| prob * cfg.power_density_kw_per_m() * rx * cfg.tx_len_m() / cfg.period_m())
        .sum()
}

/// Line spectrum of the aggregate load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdModel {
    /// `E|c_0|²` in kW².
    pub dc_power_sq: f64,
    /// `E|c_m|²` for `m = 1..=M`, kW².
    pub harmonic_powers: Vec<f64>,
    pub fundamental_hz: f64,
    pub n_evs: f64,
    /// `N E[c_{0,n}]`, kW.
    pub mean_kw: f64,
}

impl PsdModel {
    pub fn line_power(&self, m: usize) -> f64 {
        if m == 0 {
            self.dc_power_sq
        } else {
            self.harmonic_powers[m - 1]
        }
    }

    /// `R_p(τ) = Σ_m E|c_m|² e^{-jmω₀τ}`, summed over `|m| ≤ M`; real.
    pub fn autocorrelation(&self, tau_s: f64) -> f64 {
        let w0 = 2.0 * PI * self.fundamental_hz;
        self.dc_power_sq
            + 2.0
                * self
                    .harmonic_powers
                    .iter()
                    .enumerate()
                    .map(|(i, p)| p * ((i + 1) as f64 * w0 * tau_s).cos())
                    .sum::<f64>()
    }

    /// One-sided lines `(freq_hz, power_kw2)`: DC, then `2 E|c_m|²` at `m f₀`.
    pub fn one_sided_lines(&self) -> Vec<(f64, f64)> {
        std::iter::once((0.0, self.dc_power_sq))
            .chain(
                self.harmonic_powers
                    .iter()
                    .enumerate()
                    .map(|(i, p)| ((i + 1) as f64 * self.fundamental_hz, 2.0 * p)),
            )
            .collect()
    }

    pub fn thc_percent(&self) -> f64 {
        if self.dc_power_sq == 0.0 {
            return 0.0;
        }
        (2.0 * self.harmonic_powers.iter().sum::<f64>() / self.dc_power_sq).sqrt() * 100.0
    }
}

fn fleet_truncation(model: &FleetModel, truncation: Truncation, mean_dc: f64) -> usize {
    resolve_truncation(
        truncation,
        harmonic_bound(&model.cfg, 1),
        model.n_evs,
        model.n_evs * mean_dc,
    )
}

/// Line spectrum for uniformly distributed entry times.
pub fn analytic_psd(model: &FleetModel, truncation: Truncation) -> Result<PsdModel> {
    model.validate()?;
    let mean_dc = mixture_moments(model, 0)?.mean_dc_kw;
    let m_max = fleet_truncation(model, truncation, mean_dc);
    let harmonic_powers = (1..=m_max)
        .map(|m| mixture_moments(model, m).map(|mm| model.n_evs * mm.mean_sq_kw2))
        .collect::<Result<Vec<_>>>()?;
    let mean_kw = model.n_evs * mean_dc;
    Ok(PsdModel {
        dc_power_sq: mean_kw * mean_kw,
        harmonic_powers,
        fundamental_hz: model.fundamental_hz(),
        n_evs: model.n_evs,
        mean_kw,
    })
}

/// THC of the aggregate load.
pub fn thc_total(model: &FleetModel, truncation: Truncation) -> Result<ThcResult> {
    let psd = analytic_psd(model, truncation)?;
    let m_max = psd.harmonic_powers.len();
    let tail_bound_points = if psd.mean_kw > 0.0 {
        tail_points(harmonic_bound(&model.cfg, 1), model.n_evs, psd.mean_kw, m_max)
    } else {
        0.0
    };
    Ok(ThcResult {
        percent: psd.thc_percent(),
        truncation_m: m_max,
        tail_bound_points,
    })
}

fn check_pair(cfg: &ErConfig, la: f64, lb: f64) -> Result<()> {
    let d = cfg.period_m();
    if !(lb > 0.0 && lb <= la && la < d) {
        return Err(DwptError::OutOfDomain {
            what: "receiver pair (need 0 < lb <= la < D), la",
            value: la,
            lo: lb,
            hi: d,
        });
    }
    Ok(())
}

/// Whether a larger truck share lowers THC at equal DC load:
/// `ℓ_a sin²(πℓ_b/D) > ℓ_b sin²(πℓ_a/D)`.
pub fn composition_condition(cfg: &ErConfig, la: f64, lb: f64) -> Result<bool> {
    check_pair(cfg, la, lb)?;
    let d = cfg.period_m();
    let sa = (PI * la / d).sin();
    let sb = (PI * lb / d).sin();
    Ok(la * sb * sb > lb * sa * sa)
}

/// The same verdict from the max-demand coefficients:
/// `c₀ᵇ (c₁ᵃ)² < c₀ᵃ (c₁ᵇ)²`.
pub fn composition_condition_from_coefficients(cfg: &ErConfig, la: f64, lb: f64) -> Result<bool> {
    check_pair(cfg, la, lb)?;
    let (c0a, c1a) = max_demand_pair(cfg, la);
    let (c0b, c1b) = max_demand_pair(cfg, lb);
    Ok(c0b * c1a * c1a < c0a * c1b * c1b)
}

/// `(c₀, c₁)` at maximum demand, valid for any `0 < ℓ < D`.
fn max_demand_pair(cfg: &ErConfig, rx: f64) -> (f64, f64) {
    let peak = cfg.max_power_kw(rx);
    (dc_raw(cfg, rx, peak), harmonic_raw(cfg, rx, peak, 1))
}

const BOUNDARY_SCAN: usize = 4096;
const BOUNDARY_TOL_M: f64 = 1e-6;

/// Sedan receiver length below which the composition condition fails.
///
/// Root of `ℓ_a sin²(πx/D) − x sin²(πℓ_a/D)` on `(0, ℓ_a)`, bracketed by a
/// sign scan and refined by bisection.
pub fn composition_boundary(cfg: &ErConfig, la: f64) -> Result<f64> {
    let d = cfg.period_m();
    if !(la > 0.0 && la < d) {
        return Err(DwptError::OutOfDomain {
            what: "la",
            value: la,
            lo: 0.0,
            hi: d,
        });
    }
    let sa2 = (PI * la / d).sin().powi(2);
    let h = |x: f64| la * (PI * x / d).sin().powi(2) - x * sa2;
    let step = la / BOUNDARY_SCAN as f64;
    let mut bracket = None;
    let mut prev_x = step;
    let mut prev_h = h(prev_x);
    for i in 2..BOUNDARY_SCAN {
        let x = i as f64 * step;
        let hx = h(x);
        if prev_h < 0.0 && hx > 0.0 {
            bracket = Some((prev_x, x));
            break;
        }
        prev_x = x;
        prev_h = hx;
    }
    let (mut lo, mut hi) = bracket.ok_or(DwptError::NoRoot { upper_m: la })?;
    while hi - lo > BOUNDARY_TOL_M {
        let mid = 0.5 * (lo + hi);
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One side of a two-class comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositionScenario {
    /// Number of EVs; derived from DC matching when absent.
    pub n_evs: Option<f64>,
    pub truck_fraction: f64,
}

impl CompositionScenario {
    pub fn new(n_evs: Option<f64>, truck_fraction: f64) -> Self {
        CompositionScenario {
            n_evs,
            truck_fraction,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QRatio {
    /// First-harmonic power of scenario 1 over scenario 2.
    pub q: f64,
    pub n1: f64,
    pub n2: f64,
}

/// Ratio of first-harmonic powers `E|c₁|²` of two max-demand two-class
/// scenarios.
///
/// `s2.n_evs` is required. When `s1.n_evs` is absent it is chosen so that
/// both scenarios have the same DC load.
pub fn q_ratio(
    cfg: &ErConfig,
    s1: CompositionScenario,
    s2: CompositionScenario,
    la: f64,
    lb: f64,
) -> Result<QRatio> {
    check_pair(cfg, la, lb)?;
    for s in [&s1, &s2] {
        if !(0.0..=1.0).contains(&s.truck_fraction) {
            return Err(DwptError::invalid(
                "truck_fraction",
                format!("must lie in [0, 1], got {}", s.truck_fraction),
            ));
        }
    }
    let n2 = s2
        .n_evs
        .ok_or_else(|| DwptError::invalid("n_evs", "scenario 2 needs an EV count"))?;
    let (c0a, c1a) = max_demand_pair(cfg, la);
    let (c0b, c1b) = max_demand_pair(cfg, lb);
    let (t1, t2) = (s1.truck_fraction, s2.truck_fraction);
    let n1 = match s1.n_evs {
        Some(n) => n,
        None => n2 * (c0a * t2 + c0b * (1.0 - t2)) / (c0a * t1 + c0b * (1.0 - t1)),
    };
    let den = (c1a * c1a * t2 + c1b * c1b * (1.0 - t2)) * n2;
    if den == 0.0 {
        return Err(DwptError::ZeroHarmonicPower(2));
    }
    let num = (c1a * c1a * t1 + c1b * c1b * (1.0 - t1)) * n1;
    Ok(QRatio { q: num / den, n1, n2 })
}
