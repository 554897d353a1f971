//! Roadway geometry and the load drawn by a single EV.
//!
//! The roadway is a row of transmitter coils of length `tx_len_m` separated by
//! gaps of length `gap_m`, so the layout repeats every `period_m`. An EV whose
//! receiver overlaps the transmitters by `o` meters can draw at most `α·o` kW.
//! As the EV moves, that overlap (and thus the maximum power) traces a periodic
//! trapezoid in position. The two control schemes decide how much of it the EV
//! actually consumes:
//!
//! * clipping saturates the maximum-power waveform at the EV's peak demand;
//! * scaling multiplies it by a constant factor in `(0, 1]`.
//!
//! Positions are measured from the start of the segment to the front of the
//! receiver. All power is in kW, lengths in m and time in s.

use serde::{Deserialize, Serialize};

use crate::error::{DwptError, Result};

/// Geometry and power rating of one electrified roadway segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ErConfigRaw", into = "ErConfigRaw")]
pub struct ErConfig {
    tx_len_m: f64,
    gap_m: f64,
    power_density_kw_per_m: f64,
    segment_len_m: f64,
    period_m: f64,
    n_coils: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ErConfigRaw {
    tx_len_m: f64,
    gap_m: f64,
    power_density_kw_per_m: f64,
    segment_len_m: f64,
}

impl TryFrom<ErConfigRaw> for ErConfig {
    type Error = DwptError;

    fn try_from(raw: ErConfigRaw) -> Result<Self> {
        ErConfig::new(
            raw.tx_len_m,
            raw.gap_m,
            raw.power_density_kw_per_m,
            raw.segment_len_m,
        )
    }
}

impl From<ErConfig> for ErConfigRaw {
    fn from(cfg: ErConfig) -> Self {
        ErConfigRaw {
            tx_len_m: cfg.tx_len_m,
            gap_m: cfg.gap_m,
            power_density_kw_per_m: cfg.power_density_kw_per_m,
            segment_len_m: cfg.segment_len_m,
        }
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(DwptError::invalid(name, format!("must be finite and > 0, got {value}")))
    }
}

impl ErConfig {
    pub fn new(
        tx_len_m: f64,
        gap_m: f64,
        power_density_kw_per_m: f64,
        segment_len_m: f64,
    ) -> Result<Self> {
        positive("tx_len_m", tx_len_m)?;
        positive("gap_m", gap_m)?;
        positive("power_density_kw_per_m", power_density_kw_per_m)?;
        positive("segment_len_m", segment_len_m)?;
        let period_m = tx_len_m + gap_m;
        let n_coils = (segment_len_m / period_m).floor() as usize;
        if n_coils == 0 {
            return Err(DwptError::invalid(
                "segment_len_m",
                format!("{segment_len_m} m holds no full coil period of {period_m} m"),
            ));
        }
        Ok(ErConfig {
            tx_len_m,
            gap_m,
            power_density_kw_per_m,
            segment_len_m,
            period_m,
            n_coils,
        })
    }

    /// The INDOT pilot roadway with a 4 km segment.
    pub fn indot() -> Self {
        ErConfig::new(3.66, 0.91, 109.36, 4000.0).expect("INDOT constants are valid")
    }

    pub fn tx_len_m(&self) -> f64 {
        self.tx_len_m
    }

    pub fn gap_m(&self) -> f64 {
        self.gap_m
    }

    pub fn power_density_kw_per_m(&self) -> f64 {
        self.power_density_kw_per_m
    }

    pub fn segment_len_m(&self) -> f64 {
        self.segment_len_m
    }

    /// Spatial period `D = ℓ_T + d`.
    pub fn period_m(&self) -> f64 {
        self.period_m
    }

    /// Whole coil periods in the segment.
    pub fn n_coils(&self) -> usize {
        self.n_coils
    }

    /// Length over which the pulse train is defined, `K·D`.
    pub fn active_len_m(&self) -> f64 {
        self.n_coils as f64 * self.period_m
    }

    pub fn fundamental_hz(&self, speed_mps: f64) -> f64 {
        speed_mps / self.period_m
    }

    pub fn period_s(&self, speed_mps: f64) -> f64 {
        self.period_m / speed_mps
    }

    /// Time for an EV at `speed_mps` to cross the active part of the segment.
    pub fn traversal_s(&self, speed_mps: f64) -> f64 {
        self.active_len_m() / speed_mps
    }

    /// Largest power a receiver of length `rx_len_m` can ever draw, `α·ℓ`.
    pub fn max_power_kw(&self, rx_len_m: f64) -> f64 {
        self.power_density_kw_per_m * rx_len_m
    }

    /// Minimum of the maximum-power waveform, `α·max(ℓ − d, 0)`.
    pub fn floor_power_kw(&self, rx_len_m: f64) -> f64 {
        self.power_density_kw_per_m * (rx_len_m - self.gap_m).max(0.0)
    }

    pub fn check_rx_len(&self, rx_len_m: f64) -> Result<()> {
        if !(rx_len_m.is_finite() && rx_len_m > 0.0 && rx_len_m < self.tx_len_m) {
            return Err(DwptError::invalid(
                "rx_len_m",
                format!(
                    "must lie in (0, {}) m (shorter than a transmitter), got {rx_len_m}",
                    self.tx_len_m
                ),
            ));
        }
        Ok(())
    }
}

impl Default for ErConfig {
    fn default() -> Self {
        ErConfig::indot()
    }
}

/// One EV crossing the segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvParams {
    pub rx_len_m: f64,
    pub peak_demand_kw: f64,
    pub entry_time_s: f64,
    pub speed_mps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_id: Option<String>,
}

impl EvParams {
    pub fn new(rx_len_m: f64, peak_demand_kw: f64, entry_time_s: f64, speed_mps: f64) -> Self {
        EvParams {
            rx_len_m,
            peak_demand_kw,
            entry_time_s,
            speed_mps,
            class_id: None,
        }
    }

    /// An EV that always demands the most its receiver can take.
    pub fn at_max_demand(cfg: &ErConfig, rx_len_m: f64, entry_time_s: f64, speed_mps: f64) -> Self {
        EvParams::new(rx_len_m, cfg.max_power_kw(rx_len_m), entry_time_s, speed_mps)
    }

    pub fn with_class(mut self, class_id: impl Into<String>) -> Self {
        self.class_id = Some(class_id.into());
        self
    }

    pub fn validate(&self, cfg: &ErConfig) -> Result<()> {
        cfg.check_rx_len(self.rx_len_m)?;
        let max = cfg.max_power_kw(self.rx_len_m);
        if !(self.peak_demand_kw.is_finite()
            && self.peak_demand_kw >= 0.0
            && self.peak_demand_kw <= max * (1.0 + 1e-12))
        {
            return Err(DwptError::invalid(
                "peak_demand_kw",
                format!("must lie in [0, {max}] kW, got {}", self.peak_demand_kw),
            ));
        }
        if !(self.speed_mps.is_finite() && self.speed_mps > 0.0) {
            return Err(DwptError::invalid(
                "speed_mps",
                format!("must be finite and > 0, got {}", self.speed_mps),
            ));
        }
        if !self.entry_time_s.is_finite() {
            return Err(DwptError::invalid("entry_time_s", "must be finite"));
        }
        Ok(())
    }

    /// Fundamental period `T = D / v`.
    pub fn period_s(&self, cfg: &ErConfig) -> f64 {
        cfg.period_s(self.speed_mps)
    }

    pub fn fundamental_hz(&self, cfg: &ErConfig) -> f64 {
        cfg.fundamental_hz(self.speed_mps)
    }

    /// `ω₀ = 2πv/D` in rad/s.
    pub fn angular_frequency(&self, cfg: &ErConfig) -> f64 {
        2.0 * std::f64::consts::PI * self.fundamental_hz(cfg)
    }

    /// True when clipping flattens the load to a constant (`p^d ≤ α(ℓ − d)`).
    pub fn is_constant_load(&self, cfg: &ErConfig) -> bool {
        is_constant_regime(cfg, self.rx_len_m, self.peak_demand_kw)
    }

    /// Time at which the EV leaves the active part of the segment.
    pub fn exit_time_s(&self, cfg: &ErConfig) -> f64 {
        self.entry_time_s + cfg.traversal_s(self.speed_mps)
    }
}

pub(crate) fn is_constant_regime(cfg: &ErConfig, rx_len_m: f64, peak_demand_kw: f64) -> bool {
    peak_demand_kw <= cfg.power_density_kw_per_m * (rx_len_m - cfg.gap_m)
}

/// How the EV converter limits the power it draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ControlScheme {
    Clipping,
    Scaling { scale_factor: f64 },
}

impl ControlScheme {
    pub fn scaling(scale_factor: f64) -> Result<Self> {
        let scheme = ControlScheme::Scaling { scale_factor };
        scheme.validate()?;
        Ok(scheme)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ControlScheme::Clipping => Ok(()),
            ControlScheme::Scaling { scale_factor } => {
                if scale_factor > 0.0 && scale_factor <= 1.0 {
                    Ok(())
                } else {
                    Err(DwptError::invalid(
                        "scale_factor",
                        format!("must lie in (0, 1], got {scale_factor}"),
                    ))
                }
            }
        }
    }
}

/// Trapezoidal pulse of the clipped load over one coil period.
///
/// `x` is the receiver front position within the period, in `[0, D)`.
/// Receivers shorter than the gap (`ℓ < d`) see a zero-power stretch at the
/// end of the period; otherwise the floor is `α(ℓ − d)`.
pub fn pulse_g(cfg: &ErConfig, ev: &EvParams, x: f64) -> Result<f64> {
    let period = cfg.period_m();
    if !(x >= 0.0 && x < period) {
        return Err(DwptError::OutOfDomain {
            what: "x",
            value: x,
            lo: 0.0,
            hi: period,
        });
    }
    if ev.is_constant_load(cfg) {
        return Err(DwptError::ConstantRegime {
            peak_demand_kw: ev.peak_demand_kw,
            floor_kw: cfg.power_density_kw_per_m() * (ev.rx_len_m - cfg.gap_m()),
        });
    }
    Ok(trapezoid(cfg, ev.rx_len_m, ev.peak_demand_kw, x))
}

/// Unchecked pulse evaluation; `x ∈ [0, D)` and `p^d` above the floor.
#[inline]
pub(crate) fn trapezoid(cfg: &ErConfig, rx_len_m: f64, peak_kw: f64, x: f64) -> f64 {
    let alpha = cfg.power_density_kw_per_m();
    let span = rx_len_m + cfg.tx_len_m();
    let rise_end = peak_kw / alpha;
    let fall_start = span - rise_end;
    if x < rx_len_m - cfg.gap_m() {
        alpha * (rx_len_m - cfg.gap_m())
    } else if x < rise_end {
        alpha * x
    } else if x < fall_start {
        peak_kw
    } else if x < span {
        alpha * (span - x)
    } else {
        // only reachable for receivers shorter than the gap
        0.0
    }
}

/// Load of one EV when its receiver front sits at `x_n` meters.
///
/// Zero off the active segment `[0, K·D)`.
pub fn load_at_position(cfg: &ErConfig, ev: &EvParams, scheme: ControlScheme, x_n: f64) -> f64 {
    if !(x_n >= 0.0 && x_n < cfg.active_len_m()) {
        return 0.0;
    }
    let x = x_n.rem_euclid(cfg.period_m());
    match scheme {
        ControlScheme::Clipping => {
            if ev.is_constant_load(cfg) {
                ev.peak_demand_kw
            } else {
                trapezoid(cfg, ev.rx_len_m, ev.peak_demand_kw, x)
            }
        }
        ControlScheme::Scaling { scale_factor } => {
            scale_factor * trapezoid(cfg, ev.rx_len_m, cfg.max_power_kw(ev.rx_len_m), x)
        }
    }
}

/// Load of one EV at time `t`, moving at constant speed from its entry time.
pub fn load_at_time(cfg: &ErConfig, ev: &EvParams, scheme: ControlScheme, t: f64) -> f64 {
    if t < ev.entry_time_s {
        return 0.0;
    }
    load_at_position(cfg, ev, scheme, ev.speed_mps * (t - ev.entry_time_s))
}
