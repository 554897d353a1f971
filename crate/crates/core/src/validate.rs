//! Self-checks of the closed forms against numerical oracles.
//!
//! Every suite draws its parameters from a seeded generator, so a report is
//! reproducible. Tolerances can be multiplied by `tolerance_scale` to make
//! the harness fail on purpose.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::er_model::{load_at_time, ControlScheme, ErConfig, EvParams};
use crate::error::{DwptError, Result};
use crate::fleet::{
    analytic_psd, composition_boundary, composition_condition, q_ratio, thc_total, CompositionScenario,
    FleetModel,
};
use crate::quad;
use crate::signal::monte_carlo_psd;
use crate::spectrum::{compare_schemes, fs_harmonic, harmonic_bound, Truncation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateOptions {
    pub seed: u64,
    pub draws: usize,
    pub harmonics: usize,
    pub mc_trials: usize,
    pub mc_fleet_size: usize,
    pub tolerance_scale: f64,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions {
            seed: 1,
            draws: 100,
            harmonics: 50,
            mc_trials: 10_000,
            mc_fleet_size: 45,
            tolerance_scale: 1.0,
        }
    }
}

impl ValidateOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance_scale.is_finite() && self.tolerance_scale >= 0.0) {
            return Err(DwptError::invalid("tolerance_scale", format!("{}", self.tolerance_scale)));
        }
        if self.draws == 0 || self.harmonics == 0 || self.mc_fleet_size == 0 {
            return Err(DwptError::invalid("validate", "draws, harmonics and fleet size must be > 0"));
        }
        if self.mc_trials < 100 {
            return Err(DwptError::invalid("mc_trials", "need at least 100 trials"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub checks: usize,
    pub failures: usize,
    /// Largest error seen, in the suite's own metric.
    pub max_error: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub suites: Vec<SuiteResult>,
    pub passed: bool,
}

impl ValidationReport {
    pub fn failing(&self) -> impl Iterator<Item = &SuiteResult> {
        self.suites.iter().filter(|s| !s.passed)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.suites {
            writeln!(
                f,
                "{} {:<19} checks={:<6} failures={:<4} max_error={:.3e} tol={:.3e}  {}",
                if s.passed { "PASS" } else { "FAIL" },
                s.name,
                s.checks,
                s.failures,
                s.max_error,
                s.tolerance,
                s.detail
            )?;
        }
        write!(f, "{}", if self.passed { "all suites passed" } else { "validation failed" })
    }
}

struct Tally {
    checks: usize,
    failures: usize,
    max_error: f64,
}

impl Tally {
    fn new() -> Self {
        Tally {
            checks: 0,
            failures: 0,
            max_error: 0.0,
        }
    }

    fn record(&mut self, error: f64, tol: f64) {
        self.checks += 1;
        self.max_error = self.max_error.max(error);
        if error.is_nan() || error > tol {
            self.failures += 1;
        }
    }

    fn finish(self, name: &str, tolerance: f64, detail: String) -> SuiteResult {
        SuiteResult {
            name: name.to_string(),
            passed: self.failures == 0 && self.checks > 0,
            checks: self.checks,
            failures: self.failures,
            max_error: self.max_error,
            tolerance,
            detail,
        }
    }
}

/// A receiver length in `(0, ℓ_T)` and a demand above the flat floor.
pub fn random_rippled_ev<R: Rng>(cfg: &ErConfig, rng: &mut R, speed_mps: f64) -> EvParams {
    let rx = cfg.tx_len_m() * (0.02 + 0.96 * rng.random::<f64>());
    let floor = cfg.floor_power_kw(rx);
    let max = cfg.max_power_kw(rx);
    let peak = floor + (max - floor) * (0.01 + 0.99 * rng.random::<f64>());
    EvParams::new(rx, peak, 0.0, speed_mps)
}

/// Breakpoints of one period of a clipped load with entry time 0.
fn period_breaks(cfg: &ErConfig, ev: &EvParams) -> Vec<f64> {
    let d = cfg.period_m();
    let alpha = cfg.power_density_kw_per_m();
    let span = ev.rx_len_m + cfg.tx_len_m();
    let rise = ev.peak_demand_kw / alpha;
    let mut xs = vec![0.0, d];
    for x in [ev.rx_len_m - cfg.gap_m(), rise, span - rise, span] {
        if x > 0.0 && x < d {
            xs.push(x);
        }
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs.iter().map(|x| x / ev.speed_mps).collect()
}

const ORACLE_PERIOD: f64 = 7.0;

/// `|c_m|` by quadrature of the time-domain waveform over one interior period.
pub fn quadrature_harmonic(cfg: &ErConfig, ev: &EvParams, m: usize) -> f64 {
    let period = ev.period_s(cfg);
    let w = 2.0 * PI * m as f64 / period;
    let t0 = ORACLE_PERIOD * period;
    let breaks = period_breaks(cfg, ev);
    let load = |t: f64| load_at_time(cfg, ev, ControlScheme::Clipping, t0 + t);
    let tol = 1e-14 * cfg.max_power_kw(ev.rx_len_m) * period;
    let (mut re, mut im) = (0.0, 0.0);
    for pair in breaks.windows(2) {
        // t0 is a whole number of periods, so the phase uses local time
        re += quad::integrate(|t| load(t) * (w * t).cos(), pair[0], pair[1], tol);
        im += quad::integrate(|t| load(t) * (w * t).sin(), pair[0], pair[1], tol);
    }
    re.hypot(im) / period
}

/// Mean square of the time-domain waveform over one interior period.
pub fn quadrature_mean_square(cfg: &ErConfig, ev: &EvParams) -> f64 {
    let period = ev.period_s(cfg);
    let t0 = ORACLE_PERIOD * period;
    let breaks = period_breaks(cfg, ev);
    let tol = 1e-14 * cfg.max_power_kw(ev.rx_len_m).powi(2) * period;
    breaks
        .windows(2)
        .map(|p| {
            quad::integrate(
                |t| load_at_time(cfg, ev, ControlScheme::Clipping, t0 + t).powi(2),
                p[0],
                p[1],
                tol,
            )
        })
        .sum::<f64>()
        / period
}

fn suite_quadrature(cfg: &ErConfig, o: &ValidateOptions, rng: &mut ChaCha8Rng) -> SuiteResult {
    let tol = 1e-8 * o.tolerance_scale;
    let mut tally = Tally::new();
    for _ in 0..o.draws {
        let ev = random_rippled_ev(cfg, rng, 24.6);
        let c0 = fs_harmonic(cfg, &ev, 0);
        for m in 0..=o.harmonics {
            let closed = fs_harmonic(cfg, &ev, m).abs();
            let oracle = quadrature_harmonic(cfg, &ev, m);
            // coefficients close to a zero of the sinc are compared on the DC scale
            tally.record((closed - oracle).abs() / closed.max(1e-6 * c0), tol);
        }
    }
    tally.finish(
        "quadrature",
        tol,
        format!("closed-form vs quadrature, m <= {}", o.harmonics),
    )
}

const PARSEVAL_HARMONICS: usize = 1000;

fn suite_parseval(cfg: &ErConfig, o: &ValidateOptions, rng: &mut ChaCha8Rng) -> SuiteResult {
    let tol = 1e-6 * o.tolerance_scale;
    let mut tally = Tally::new();
    for _ in 0..o.draws {
        let ev = random_rippled_ev(cfg, rng, 24.6);
        let c0 = fs_harmonic(cfg, &ev, 0);
        let series = c0 * c0
            + 2.0
                * (1..=PARSEVAL_HARMONICS)
                    .map(|m| fs_harmonic(cfg, &ev, m).powi(2))
                    .sum::<f64>();
        let direct = quadrature_mean_square(cfg, &ev);
        tally.record((series - direct).abs() / direct, tol);
    }
    tally.finish("parseval", tol, format!("mean square vs c0^2 + 2 sum_{{m<={PARSEVAL_HARMONICS}}} c_m^2"))
}

fn suite_bound(cfg: &ErConfig, o: &ValidateOptions, rng: &mut ChaCha8Rng) -> SuiteResult {
    let mut tally = Tally::new();
    for _ in 0..(10 * o.draws) {
        let ev = random_rippled_ev(cfg, rng, 24.6);
        for m in 1..=100 {
            let excess = fs_harmonic(cfg, &ev, m).abs() / harmonic_bound(cfg, m) - 1.0;
            tally.record(excess.max(0.0), 1e-12);
        }
    }
    tally.finish("bound", 1e-12, "|c_m| <= aD/(m^2 pi^2), m <= 100".to_string())
}

fn suite_scheme_order(cfg: &ErConfig) -> SuiteResult {
    let mut tally = Tally::new();
    let guarantee = cfg.tx_len_m() > cfg.period_m() / 2.0;
    if guarantee {
        for i in 1..=100 {
            let rx = cfg.tx_len_m() * i as f64 / 101.0;
            for j in 1..=100 {
                let peak = cfg.max_power_kw(rx) * j as f64 / 100.0;
                let cmp = compare_schemes(cfg, &EvParams::new(rx, peak, 0.0, 24.6));
                let excess = (cmp.clipping_ratio - cmp.scaling_ratio).max(0.0);
                tally.record(if cmp.clipping_not_worse { 0.0 } else { excess }, 0.0);
            }
        }
    }
    let detail = if guarantee {
        "clipping ratio <= scaling ratio on a 100x100 grid".to_string()
    } else {
        "skipped: transmitter shorter than half a period".to_string()
    };
    let mut out = tally.finish("scheme_order", 0.0, detail);
    if !guarantee {
        out.passed = true;
    }
    out
}

fn suite_ensemble_lines(cfg: &ErConfig, o: &ValidateOptions) -> Result<SuiteResult> {
    let z_tol = 3.0 * o.tolerance_scale;
    let fleet = FleetModel::two_class(*cfg, 1.83, 1.83, 1.0, o.mc_fleet_size as f64, 24.6)?;
    let mc = monte_carlo_psd(&fleet, 5, o.mc_trials, o.seed)?;
    let psd = analytic_psd(&fleet, Truncation::Fixed(5))?;
    let mut tally = Tally::new();
    for m in 0..=5 {
        let want = psd.line_power(m);
        let diff = (mc.mean[m] - want).abs();
        // the DC line is deterministic at max demand
        let z = if mc.std_err[m] > 1e-12 * want {
            diff / mc.std_err[m]
        } else if diff <= 1e-9 * want {
            0.0
        } else {
            f64::INFINITY
        };
        tally.record(z, z_tol);
    }
    Ok(tally.finish(
        "ensemble_lines",
        z_tol,
        format!(
            "{} trials, N = {}, m = 0..5, error in standard errors",
            o.mc_trials, o.mc_fleet_size
        ),
    ))
}

fn suite_composition_verdict(cfg: &ErConfig, o: &ValidateOptions, rng: &mut ChaCha8Rng) -> Result<SuiteResult> {
    let mut tally = Tally::new();
    let mut full_agree = 0usize;
    let pairs = 10 * o.draws;
    let d = cfg.gap_m();
    let tx = cfg.tx_len_m();
    for _ in 0..pairs {
        let la = d + (tx - d) * rng.random::<f64>();
        let lb = d + (la - d) * rng.random::<f64>();
        let (mut t1, mut t2): (f64, f64) = (rng.random(), rng.random());
        if t1 < t2 {
            std::mem::swap(&mut t1, &mut t2);
        }
        let n2 = 10.0 + 90.0 * rng.random::<f64>();
        let q = q_ratio(
            cfg,
            CompositionScenario::new(None, t1),
            CompositionScenario::new(Some(n2), t2),
            la,
            lb,
        )?;
        let cond = composition_condition(cfg, la, lb)?;
        tally.record(if (q.q < 1.0) == cond { 0.0 } else { 1.0 }, 0.0);
        let thc1 = thc_total(&FleetModel::two_class(*cfg, la, lb, t1, q.n1, 24.6)?, Truncation::Fixed(50))?;
        let thc2 = thc_total(&FleetModel::two_class(*cfg, la, lb, t2, q.n2, 24.6)?, Truncation::Fixed(50))?;
        if (thc1.percent < thc2.percent) == (q.q < 1.0) {
            full_agree += 1;
        }
    }
    // the boundary root must bracket the condition
    for i in 0..20 {
        let la = d + 0.05 + (tx - d - 0.1) * i as f64 / 19.0;
        if let Ok(root) = composition_boundary(cfg, la) {
            let below = root - 1e-4;
            let above = (root + 1e-4).min(la);
            let ok = below > 0.0
                && !composition_condition(cfg, la, below)?
                && (above >= la || composition_condition(cfg, la, above)?);
            tally.record(if ok { 0.0 } else { 1.0 }, 0.0);
        }
    }
    Ok(tally.finish(
        "composition_verdict",
        0.0,
        format!(
            "sign(Q-1) vs composition condition; first-harmonic verdict matches M=50 THC in {:.1}% of pairs",
            100.0 * full_agree as f64 / pairs as f64
        ),
    ))
}

/// Run every suite.
pub fn run(cfg: &ErConfig, options: &ValidateOptions) -> Result<ValidationReport> {
    options.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let suites = vec![
        suite_quadrature(cfg, options, &mut rng),
        suite_parseval(cfg, options, &mut rng),
        suite_bound(cfg, options, &mut rng),
        suite_scheme_order(cfg),
        suite_ensemble_lines(cfg, options)?,
        suite_composition_verdict(cfg, options, &mut rng)?,
    ];
    let passed = suites.iter().all(|s| s.passed);
    Ok(ValidationReport { suites, passed })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> ValidateOptions {
        ValidateOptions {
            draws: 10,
            harmonics: 20,
            mc_trials: 500,
            ..ValidateOptions::default()
        }
    }

    #[test]
    fn defaults_pass() {
        let report = run(&ErConfig::indot(), &quick()).unwrap();
        assert!(report.passed, "{report}");
        let q = report.suites.iter().find(|s| s.name == "quadrature").unwrap();
        assert!(q.max_error < 1e-8);
    }

    #[test]
    fn injected_tolerance_fails_and_is_named() {
        let opts = ValidateOptions {
            tolerance_scale: 0.0,
            ..quick()
        };
        let report = run(&ErConfig::indot(), &opts).unwrap();
        assert!(!report.passed);
        let names: Vec<&str> = report.failing().map(|s| s.name.as_str()).collect();
        assert!(names.contains(&"parseval"), "{names:?}");
        assert!(report.to_string().contains("FAIL parseval"));
    }

    #[test]
    fn bad_options_rejected() {
        let opts = ValidateOptions {
            mc_trials: 10,
            ..ValidateOptions::default()
        };
        assert!(run(&ErConfig::indot(), &opts).is_err());
    }
}
