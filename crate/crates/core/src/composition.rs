//! Truck-share sweep: average THC of sampled one-minute windows over a grid
//! of truck fractions and sedan receiver lengths.
//!
//! Each window holds a fixed population of EVs that stay on the segment for
//! the whole minute. Trucks and sedans travel at different speeds, so their
//! harmonics form two separate line sets; both are summed into the THC.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::er_model::ErConfig;
use crate::error::{DwptError, Result};
use crate::fleet::{class_moments, DemandDist, FleetClass, FleetModel};
use crate::signal::{derive_seed, empirical_thc, estimate_psd, synthesize, PsdMethod};
use crate::traffic::{generate_occupancy, OccupancySpec, TrafficClass};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub truck_fractions: Vec<f64>,
    pub sedan_rx_m: Vec<f64>,
    pub truck_rx_m: f64,
    pub n_evs: usize,
    pub truck_speed_mps: f64,
    pub sedan_speed_mps: f64,
    pub demand: DemandDist,
    pub window_s: f64,
    pub windows: usize,
    pub sample_rate_hz: f64,
    pub harmonics: usize,
    pub psd: PsdMethod,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            truck_fractions: vec![0.0377, 0.0557, 0.1775],
            sedan_rx_m: vec![0.58, 1.2, 1.7],
            truck_rx_m: 1.83,
            n_evs: 45,
            truck_speed_mps: 21.7,
            sedan_speed_mps: 29.0,
            demand: DemandDist::MaxDemand,
            window_s: 60.0,
            windows: 20,
            sample_rate_hz: 1000.0,
            harmonics: 50,
            psd: PsdMethod::default(),
        }
    }
}

impl SweepSpec {
    pub fn validate(&self, cfg: &ErConfig) -> Result<()> {
        if self.truck_fractions.is_empty() || self.sedan_rx_m.is_empty() {
            return Err(DwptError::invalid("sweep", "empty truck-fraction or sedan-length list"));
        }
        if self.windows < 2 {
            return Err(DwptError::invalid("windows", "need at least 2 windows per cell"));
        }
        if self.n_evs == 0 {
            return Err(DwptError::invalid("n_evs", "must be > 0"));
        }
        if self.harmonics == 0 {
            return Err(DwptError::invalid("harmonics", "must be > 0"));
        }
        for &theta in &self.truck_fractions {
            for &lb in &self.sedan_rx_m {
                self.occupancy(theta, lb).validate(cfg)?;
            }
        }
        let top = self.harmonics as f64 * cfg.fundamental_hz(self.truck_speed_mps.max(self.sedan_speed_mps));
        if top >= 0.5 * self.sample_rate_hz {
            return Err(DwptError::invalid(
                "sample_rate_hz",
                format!("harmonic {} at {top:.1} Hz is above Nyquist", self.harmonics),
            ));
        }
        Ok(())
    }

    pub fn occupancy(&self, truck_fraction: f64, sedan_rx_m: f64) -> OccupancySpec {
        OccupancySpec {
            n_evs: self.n_evs,
            window_s: self.window_s,
            classes: vec![
                TrafficClass::new("truck", self.truck_rx_m, truck_fraction, self.truck_speed_mps, self.demand),
                TrafficClass::new("sedan", sedan_rx_m, 1.0 - truck_fraction, self.sedan_speed_mps, self.demand),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub truck_fraction: f64,
    pub sedan_rx_m: f64,
    pub trucks: usize,
    pub sedans: usize,
    pub mean_thc_percent: f64,
    pub std_err: f64,
    /// Expected-line-power THC for the same class counts.
    pub analytic_thc_percent: f64,
    pub windows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub cells: Vec<SweepCell>,
    pub seed: u64,
}

impl SweepTable {
    pub fn cell(&self, truck_fraction: f64, sedan_rx_m: f64) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.truck_fraction == truck_fraction && c.sedan_rx_m == sedan_rx_m)
    }

    /// Mean THC of the cells with the given sedan length, in sweep order.
    pub fn column(&self, sedan_rx_m: f64) -> Vec<f64> {
        self.cells
            .iter()
            .filter(|c| c.sedan_rx_m == sedan_rx_m)
            .map(|c| c.mean_thc_percent)
            .collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record([
            "truck_fraction",
            "sedan_rx_m",
            "trucks",
            "sedans",
            "mean_thc_percent",
            "std_err",
            "analytic_thc_percent",
            "windows",
        ])?;
        for c in &self.cells {
            w.write_record([
                c.truck_fraction.to_string(),
                c.sedan_rx_m.to_string(),
                c.trucks.to_string(),
                c.sedans.to_string(),
                c.mean_thc_percent.to_string(),
                c.std_err.to_string(),
                c.analytic_thc_percent.to_string(),
                c.windows.to_string(),
            ])?;
        }
        w.flush().map_err(|e| DwptError::io("<csv>", e))?;
        Ok(())
    }
}

/// THC from expected line powers: `√(2 Σ_g n_g Σ_m E[c²_{m}]) / Σ_g n_g E[c₀]`.
pub fn analytic_mix_thc(cfg: &ErConfig, classes: &[(f64, DemandDist, usize)], harmonics: usize) -> Result<f64> {
    let mut lines = 0.0;
    let mut dc = 0.0;
    for &(rx, demand, count) in classes {
        if count == 0 {
            continue;
        }
        // moments do not depend on speed or fleet size
        let model = FleetModel::new(*cfg, vec![FleetClass::new(rx, 1.0, demand)], 1.0, 1.0)?;
        dc += count as f64 * class_moments(&model, 0, 0)?.mean_dc_kw;
        for m in 1..=harmonics {
            lines += count as f64 * class_moments(&model, 0, m)?.mean_sq_kw2;
        }
    }
    if dc == 0.0 {
        return Err(DwptError::ZeroDc("mixture THC"));
    }
    Ok((2.0 * lines).sqrt() / dc * 100.0)
}

/// THC of one sampled window.
pub fn window_thc(cfg: &ErConfig, spec: &SweepSpec, truck_fraction: f64, sedan_rx_m: f64, seed: u64) -> Result<f64> {
    let scenario = generate_occupancy(cfg, &spec.occupancy(truck_fraction, sedan_rx_m), seed)?;
    let (t0, t1) = scenario
        .observation_window_s
        .expect("occupancy scenarios carry their window");
    let series = synthesize(&scenario, spec.sample_rate_hz, t0, t1)?;
    let psd = estimate_psd(&series, spec.psd)?;
    let fundamentals = [
        cfg.fundamental_hz(spec.truck_speed_mps),
        cfg.fundamental_hz(spec.sedan_speed_mps),
    ];
    Ok(empirical_thc(&series, &psd, &fundamentals, spec.harmonics)?.percent)
}

/// Run every (θ, ℓ_b) cell; cells are ordered θ-major.
pub fn run_sweep(cfg: &ErConfig, spec: &SweepSpec, seed: u64) -> Result<SweepTable> {
    spec.validate(cfg)?;
    let mut cells = Vec::new();
    for (i, &theta) in spec.truck_fractions.iter().enumerate() {
        for (j, &lb) in spec.sedan_rx_m.iter().enumerate() {
            let cell_seed = derive_seed(seed, (i * spec.sedan_rx_m.len() + j) as u64);
            let thc: Vec<f64> = (0..spec.windows as u64)
                .into_par_iter()
                .map(|w| window_thc(cfg, spec, theta, lb, derive_seed(cell_seed, w)))
                .collect::<Result<_>>()?;
            let n = thc.len() as f64;
            let mean = thc.iter().sum::<f64>() / n;
            let var = thc.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let counts = spec.occupancy(theta, lb).class_counts();
            let analytic = analytic_mix_thc(
                cfg,
                &[
                    (spec.truck_rx_m, spec.demand, counts[0]),
                    (lb, spec.demand, counts[1]),
                ],
                spec.harmonics,
            )?;
            cells.push(SweepCell {
                truck_fraction: theta,
                sedan_rx_m: lb,
                trucks: counts[0],
                sedans: counts[1],
                mean_thc_percent: mean,
                std_err: (var / n).sqrt(),
                analytic_thc_percent: analytic,
                windows: spec.windows,
            });
        }
    }
    Ok(SweepTable { cells, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{thc_single, Truncation};
    use crate::EvParams;

    #[test]
    fn default_spec_is_valid() {
        SweepSpec::default().validate(&ErConfig::indot()).unwrap();
    }

    #[test]
    fn window_must_fit_traversal() {
        let spec = SweepSpec {
            window_s: 500.0,
            ..SweepSpec::default()
        };
        assert!(spec.validate(&ErConfig::indot()).is_err());
    }

    #[test]
    fn single_ev_analytic_matches_single_thc() {
        let cfg = ErConfig::indot();
        let got = analytic_mix_thc(&cfg, &[(1.83, DemandDist::MaxDemand, 1)], 50).unwrap();
        let ev = EvParams::at_max_demand(&cfg, 1.83, 0.0, 24.6);
        let want = thc_single(&cfg, &ev, Truncation::Fixed(50)).percent;
        assert!((got - want).abs() < 1e-9);
    }

    #[test]
    fn population_scales_as_root_n() {
        let cfg = ErConfig::indot();
        let one = analytic_mix_thc(&cfg, &[(1.2, DemandDist::MaxDemand, 1)], 50).unwrap();
        let many = analytic_mix_thc(&cfg, &[(1.2, DemandDist::MaxDemand, 45)], 50).unwrap();
        assert!((many * 45f64.sqrt() - one).abs() < 1e-9);
    }

    #[test]
    fn small_sweep_runs_and_is_reproducible() {
        let cfg = ErConfig::indot();
        let spec = SweepSpec {
            truck_fractions: vec![0.1],
            sedan_rx_m: vec![1.2],
            windows: 2,
            window_s: 20.0,
            sample_rate_hz: 400.0,
            harmonics: 20,
            ..SweepSpec::default()
        };
        let a = run_sweep(&cfg, &spec, 5).unwrap();
        let b = run_sweep(&cfg, &spec, 5).unwrap();
        assert_eq!(a, b);
        let cell = &a.cells[0];
        assert_eq!(cell.trucks + cell.sedans, 45);
        assert!(cell.mean_thc_percent > 0.0 && cell.mean_thc_percent < 30.0);
    }
}
