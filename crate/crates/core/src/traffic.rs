//! EV arrival scenarios: synthetic traffic and trajectory files.
//!
//! Two generators are provided. [`generate`] draws homogeneous Poisson
//! arrivals at the segment entrance. [`generate_occupancy`] places a fixed
//! number of EVs on the segment for a whole observation window, with class
//! counts rounded from the class fractions.
//!
//! Trajectory files are CSV with the header
//! `entry_time_s,speed_mps,rx_len_m,peak_demand_kw[,class_id]`.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::er_model::{ErConfig, EvParams};
use crate::error::{DwptError, Result};
use crate::fleet::DemandDist;

pub const CSV_HEADER: [&str; 5] = [
    "entry_time_s",
    "speed_mps",
    "rx_len_m",
    "peak_demand_kw",
    "class_id",
];

/// One vehicle class of a traffic generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficClass {
    pub name: String,
    pub rx_len_m: f64,
    /// Probability (Poisson) or fraction of the fleet (occupancy).
    pub prob: f64,
    pub speed_mps: f64,
    pub demand: DemandDist,
}

impl TrafficClass {
    pub fn new(name: &str, rx_len_m: f64, prob: f64, speed_mps: f64, demand: DemandDist) -> Self {
        TrafficClass {
            name: name.to_string(),
            rx_len_m,
            prob,
            speed_mps,
            demand,
        }
    }
}

fn validate_classes(cfg: &ErConfig, classes: &[TrafficClass]) -> Result<()> {
    if classes.is_empty() {
        return Err(DwptError::invalid("classes", "at least one class is required"));
    }
    let mut total = 0.0;
    for c in classes {
        cfg.check_rx_len(c.rx_len_m)?;
        c.demand.validate()?;
        if !(c.prob >= 0.0 && c.prob <= 1.0) {
            return Err(DwptError::invalid("prob", format!("class `{}`: {}", c.name, c.prob)));
        }
        if !(c.speed_mps.is_finite() && c.speed_mps > 0.0) {
            return Err(DwptError::invalid(
                "speed_mps",
                format!("class `{}`: {}", c.name, c.speed_mps),
            ));
        }
        total += c.prob;
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(DwptError::invalid("prob", format!("class probabilities sum to {total}")));
    }
    Ok(())
}

/// Homogeneous Poisson arrivals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub rate_evps: f64,
    pub duration_s: f64,
    pub classes: Vec<TrafficClass>,
}

impl GeneratorSpec {
    pub fn validate(&self, cfg: &ErConfig) -> Result<()> {
        if !(self.rate_evps.is_finite() && self.rate_evps >= 0.0) {
            return Err(DwptError::invalid("rate_evps", format!("{}", self.rate_evps)));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(DwptError::invalid("duration_s", format!("{}", self.duration_s)));
        }
        validate_classes(cfg, &self.classes)
    }

    /// Trucks and sedans at the default speeds, a fraction `truck_fraction` of
    /// trucks, arriving at 0.21 EV/s.
    pub fn trucks_and_sedans(
        truck_rx_m: f64,
        sedan_rx_m: f64,
        truck_fraction: f64,
        demand: DemandDist,
        duration_s: f64,
    ) -> Self {
        GeneratorSpec {
            rate_evps: 0.21,
            duration_s,
            classes: vec![
                TrafficClass::new("truck", truck_rx_m, truck_fraction, 21.7, demand),
                TrafficClass::new("sedan", sedan_rx_m, 1.0 - truck_fraction, 29.0, demand),
            ],
        }
    }
}

/// A fixed set of EVs, all on the segment during the observation window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OccupancySpec {
    pub n_evs: usize,
    pub window_s: f64,
    pub classes: Vec<TrafficClass>,
}

impl OccupancySpec {
    pub fn validate(&self, cfg: &ErConfig) -> Result<()> {
        validate_classes(cfg, &self.classes)?;
        if !(self.window_s.is_finite() && self.window_s > 0.0) {
            return Err(DwptError::invalid("window_s", format!("{}", self.window_s)));
        }
        for c in &self.classes {
            if cfg.traversal_s(c.speed_mps) < self.window_s {
                return Err(DwptError::invalid(
                    "window_s",
                    format!(
                        "class `{}` crosses the segment in {:.1} s, shorter than the {} s window",
                        c.name,
                        cfg.traversal_s(c.speed_mps),
                        self.window_s
                    ),
                ));
            }
        }
        Ok(())
    }

    /// Integer class counts summing to `n_evs`, by largest remainder.
    pub fn class_counts(&self) -> Vec<usize> {
        let exact: Vec<f64> = self.classes.iter().map(|c| c.prob * self.n_evs as f64).collect();
        let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
        let mut left = self.n_evs.saturating_sub(counts.iter().sum());
        let mut order: Vec<usize> = (0..exact.len()).collect();
        order.sort_by(|&a, &b| {
            let fa = exact[a] - exact[a].floor();
            let fb = exact[b] - exact[b].floor();
            fb.total_cmp(&fa).then(a.cmp(&b))
        });
        for &i in order.iter().cycle() {
            if left == 0 {
                break;
            }
            counts[i] += 1;
            left -= 1;
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Provenance {
    Poisson { spec: GeneratorSpec },
    Occupancy { spec: OccupancySpec },
    IngestedFile { path: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub cfg: ErConfig,
    pub duration_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub provenance: Provenance,
    /// Interval over which every EV of an occupancy scenario is on the segment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observation_window_s: Option<(f64, f64)>,
    pub evs: Vec<EvParams>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        for (i, ev) in self.evs.iter().enumerate() {
            ev.validate(&self.cfg).map_err(|e| {
                DwptError::invalid("evs", format!("EV #{i}: {e}"))
            })?;
            if !(ev.entry_time_s >= 0.0 && ev.entry_time_s < self.duration_s) {
                return Err(DwptError::invalid(
                    "entry_time_s",
                    format!("EV #{i} enters at {} s, outside [0, {})", ev.entry_time_s, self.duration_s),
                ));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let scenario: Scenario = serde_json::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    /// Distinct speeds present, in ascending order.
    pub fn speeds(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.evs.iter().map(|e| e.speed_mps).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// Number of EVs on the active segment at time `t`.
    pub fn occupancy_at(&self, t: f64) -> usize {
        self.evs
            .iter()
            .filter(|e| t >= e.entry_time_s && t < e.exit_time_s(&self.cfg))
            .count()
    }

    /// Union of two scenarios on the same roadway.
    pub fn merged(&self, other: &Scenario) -> Scenario {
        let mut evs = self.evs.clone();
        evs.extend(other.evs.iter().cloned());
        Scenario {
            cfg: self.cfg,
            duration_s: self.duration_s.max(other.duration_s),
            seed: None,
            provenance: self.provenance.clone(),
            observation_window_s: None,
            evs,
        }
    }
}

fn pick_class(classes: &[TrafficClass], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, c) in classes.iter().enumerate() {
        acc += c.prob;
        if u < acc {
            return i;
        }
    }
    classes.len() - 1
}

fn make_ev(cfg: &ErConfig, class: &TrafficClass, entry: f64, u_demand: f64) -> EvParams {
    EvParams {
        rx_len_m: class.rx_len_m,
        peak_demand_kw: class.demand.sample(cfg, class.rx_len_m, u_demand),
        entry_time_s: entry,
        speed_mps: class.speed_mps,
        class_id: Some(class.name.clone()),
    }
}

/// Poisson arrivals over `[0, duration_s)`, reproducible from `seed`.
pub fn generate(cfg: &ErConfig, spec: &GeneratorSpec, seed: u64) -> Result<Scenario> {
    spec.validate(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut evs = Vec::new();
    if spec.rate_evps > 0.0 {
        let gap = Exp::new(spec.rate_evps)
            .map_err(|e| DwptError::invalid("rate_evps", e.to_string()))?;
        let mut t = 0.0;
        loop {
            t += gap.sample(&mut rng);
            if t >= spec.duration_s {
                break;
            }
            let class = &spec.classes[pick_class(&spec.classes, rng.random::<f64>())];
            evs.push(make_ev(cfg, class, t, rng.random::<f64>()));
        }
    }
    Ok(Scenario {
        cfg: *cfg,
        duration_s: spec.duration_s,
        seed: Some(seed),
        provenance: Provenance::Poisson { spec: spec.clone() },
        observation_window_s: None,
        evs,
    })
}

/// `n_evs` EVs that stay on the segment for the whole observation window.
///
/// Entry times are uniform over the interval that keeps each EV on the
/// segment throughout the window, so positions (and pulse phases) at the start
/// of the window are uniform.
pub fn generate_occupancy(cfg: &ErConfig, spec: &OccupancySpec, seed: u64) -> Result<Scenario> {
    spec.validate(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let longest = spec
        .classes
        .iter()
        .map(|c| cfg.traversal_s(c.speed_mps))
        .fold(0.0, f64::max);
    let start = longest - spec.window_s;
    let mut evs = Vec::with_capacity(spec.n_evs);
    for (class, count) in spec.classes.iter().zip(spec.class_counts()) {
        let earliest = start + spec.window_s - cfg.traversal_s(class.speed_mps);
        for _ in 0..count {
            let entry = earliest + rng.random::<f64>() * (start - earliest);
            evs.push(make_ev(cfg, class, entry, rng.random::<f64>()));
        }
    }
    Ok(Scenario {
        cfg: *cfg,
        duration_s: start + spec.window_s,
        seed: Some(seed),
        provenance: Provenance::Occupancy { spec: spec.clone() },
        observation_window_s: Some((start, start + spec.window_s)),
        evs,
    })
}

fn parse_field(path: &str, row: usize, name: &str, raw: Option<&str>) -> Result<f64> {
    let raw = raw.ok_or_else(|| DwptError::Row {
        path: path.to_string(),
        row,
        reason: format!("missing column `{name}`"),
    })?;
    raw.trim().parse::<f64>().map_err(|_| DwptError::Row {
        path: path.to_string(),
        row,
        reason: format!("`{name}` is not a number: {raw:?}"),
    })
}

/// Parse trajectory CSV text; `origin` names the source in diagnostics.
pub fn parse_csv<R: Read>(reader: R, origin: &str, cfg: &ErConfig) -> Result<Scenario> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let names: Vec<&str> = headers.iter().map(str::trim).collect();
    if names.len() < 4 || names[..4] != CSV_HEADER[..4] || (names.len() == 5 && names[4] != CSV_HEADER[4]) || names.len() > 5 {
        return Err(DwptError::Row {
            path: origin.to_string(),
            row: 1,
            reason: format!("expected header `{}[,class_id]`, got `{}`", CSV_HEADER[..4].join(","), names.join(",")),
        });
    }
    let mut evs = Vec::new();
    for result in rdr.records() {
        let record = result?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        let entry = parse_field(origin, row, "entry_time_s", record.get(0))?;
        let speed = parse_field(origin, row, "speed_mps", record.get(1))?;
        let rx = parse_field(origin, row, "rx_len_m", record.get(2))?;
        let demand = parse_field(origin, row, "peak_demand_kw", record.get(3))?;
        let class_id = record.get(4).map(str::trim).filter(|s| !s.is_empty()).map(String::from);
        if record.len() > 5 {
            return Err(DwptError::Row {
                path: origin.to_string(),
                row,
                reason: format!("expected at most 5 fields, got {}", record.len()),
            });
        }
        let ev = EvParams {
            rx_len_m: rx,
            peak_demand_kw: demand,
            entry_time_s: entry,
            speed_mps: speed,
            class_id,
        };
        ev.validate(cfg).map_err(|e| DwptError::Row {
            path: origin.to_string(),
            row,
            reason: e.to_string(),
        })?;
        if entry < 0.0 {
            return Err(DwptError::Row {
                path: origin.to_string(),
                row,
                reason: format!("entry_time_s must be >= 0, got {entry}"),
            });
        }
        evs.push(ev);
    }
    // horizon ends once the last EV has left the segment
    let duration_s = evs
        .iter()
        .map(|e| e.exit_time_s(cfg))
        .fold(0.0, f64::max);
    Ok(Scenario {
        cfg: *cfg,
        duration_s,
        seed: None,
        provenance: Provenance::IngestedFile {
            path: origin.to_string(),
        },
        observation_window_s: None,
        evs,
    })
}

/// Read a trajectory CSV file into a scenario.
pub fn ingest(path: &Path, cfg: &ErConfig) -> Result<Scenario> {
    let file = std::fs::File::open(path).map_err(|e| DwptError::io(path, e))?;
    parse_csv(file, &path.display().to_string(), cfg)
}

/// Write the EV list in trajectory CSV format.
pub fn write_csv<W: Write>(scenario: &Scenario, writer: W) -> Result<()> {
    let with_class = scenario.evs.iter().any(|e| e.class_id.is_some());
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    let cols = if with_class { 5 } else { 4 };
    wtr.write_record(&CSV_HEADER[..cols])?;
    for ev in &scenario.evs {
        let mut rec = vec![
            ev.entry_time_s.to_string(),
            ev.speed_mps.to_string(),
            ev.rx_len_m.to_string(),
            ev.peak_demand_kw.to_string(),
        ];
        if with_class {
            rec.push(ev.class_id.clone().unwrap_or_default());
        }
        wtr.write_record(&rec)?;
    }
    wtr.flush().map_err(|e| DwptError::io("<csv writer>", e))?;
    Ok(())
}

pub fn csv_string(scenario: &Scenario) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(scenario, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_class(theta: f64, duration: f64) -> GeneratorSpec {
        GeneratorSpec::trucks_and_sedans(1.83, 1.2, theta, DemandDist::MaxDemand, duration)
    }

    #[test]
    fn poisson_count_is_plausible() {
        let cfg = ErConfig::indot();
        let sc = generate(&cfg, &two_class(0.3, 600.0), 7).unwrap();
        let n = sc.evs.len() as f64;
        assert!((n - 126.0).abs() <= 3.0 * 126f64.sqrt(), "{n}");
        sc.validate().unwrap();
    }

    #[test]
    fn zero_rate_is_empty() {
        let cfg = ErConfig::indot();
        let mut spec = two_class(0.3, 600.0);
        spec.rate_evps = 0.0;
        assert!(generate(&cfg, &spec, 1).unwrap().evs.is_empty());
        spec.rate_evps = 1e-12;
        assert!(generate(&cfg, &spec, 1).unwrap().evs.is_empty());
    }

    #[test]
    fn reproducible() {
        let cfg = ErConfig::indot();
        let a = generate(&cfg, &two_class(0.3, 600.0), 42).unwrap();
        let b = generate(&cfg, &two_class(0.3, 600.0), 42).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let c = generate(&cfg, &two_class(0.3, 600.0), 43).unwrap();
        assert_ne!(a.evs, c.evs);
    }

    #[test]
    fn occupancy_counts_and_window() {
        let cfg = ErConfig::indot();
        let spec = OccupancySpec {
            n_evs: 45,
            window_s: 60.0,
            classes: two_class(0.0557, 1.0).classes,
        };
        assert_eq!(spec.class_counts(), vec![3, 42]);
        let sc = generate_occupancy(&cfg, &spec, 3).unwrap();
        sc.validate().unwrap();
        let (t0, t1) = sc.observation_window_s.unwrap();
        assert!((t1 - t0 - 60.0).abs() < 1e-9);
        for t in [t0, 0.5 * (t0 + t1), t1 - 1e-9] {
            assert_eq!(sc.occupancy_at(t), 45);
        }
        let counts = |th: f64| {
            OccupancySpec {
                n_evs: 45,
                window_s: 60.0,
                classes: two_class(th, 1.0).classes,
            }
            .class_counts()
        };
        assert_eq!(counts(0.0377), vec![2, 43]);
        assert_eq!(counts(0.1775), vec![8, 37]);
    }

    #[test]
    fn csv_single_truck_row() {
        let cfg = ErConfig::indot();
        let text = "entry_time_s,speed_mps,rx_len_m,peak_demand_kw\n0.0,24.6,1.83,200.0\n";
        let sc = parse_csv(text.as_bytes(), "mem", &cfg).unwrap();
        assert_eq!(sc.evs.len(), 1);
        assert_eq!(sc.evs[0], EvParams::new(1.83, 200.0, 0.0, 24.6));
    }

    #[test]
    fn csv_header_only_is_empty() {
        let cfg = ErConfig::indot();
        let sc = parse_csv("entry_time_s,speed_mps,rx_len_m,peak_demand_kw\n".as_bytes(), "mem", &cfg)
            .unwrap();
        assert!(sc.evs.is_empty());
        assert_eq!(sc.duration_s, 0.0);
    }

    #[test]
    fn csv_errors_name_the_row() {
        let cfg = ErConfig::indot();
        let text = "entry_time_s,speed_mps,rx_len_m,peak_demand_kw\n0,24.6,1.83,200\n1,24.6,5.0,100\n";
        let err = parse_csv(text.as_bytes(), "f.csv", &cfg).unwrap_err();
        match err {
            DwptError::Row { row, ref reason, .. } => {
                assert_eq!(row, 3);
                assert!(reason.contains("rx_len_m"), "{reason}");
            }
            other => panic!("unexpected {other}"),
        }
        let text = "entry_time_s,speed_mps,rx_len_m,peak_demand_kw\n0,abc,1.83,200\n";
        assert!(matches!(parse_csv(text.as_bytes(), "f", &cfg), Err(DwptError::Row { row: 2, .. })));
        let text = "entry_time_s,speed_mps,rx_len_m,peak_demand_kw\n0,-3,1.83,200\n";
        assert!(parse_csv(text.as_bytes(), "f", &cfg).is_err());
        let text = "entry,speed_mps,rx_len_m,peak_demand_kw\n";
        assert!(parse_csv(text.as_bytes(), "f", &cfg).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let cfg = ErConfig::indot();
        let mut spec = two_class(0.3, 600.0);
        spec.classes[0].demand = DemandDist::UniformOnRange;
        let sc = generate(&cfg, &spec, 9).unwrap();
        let text = csv_string(&sc).unwrap();
        let back = parse_csv(text.as_bytes(), "mem", &cfg).unwrap();
        assert_eq!(back.evs, sc.evs);
        let again = parse_csv(csv_string(&back).unwrap().as_bytes(), "mem", &cfg).unwrap();
        assert_eq!(again, back);
    }

    #[test]
    fn json_round_trip() {
        let cfg = ErConfig::indot();
        let sc = generate(&cfg, &two_class(0.3, 100.0), 5).unwrap();
        let back = Scenario::from_json(&sc.to_json().unwrap()).unwrap();
        assert_eq!(back, sc);
    }
}
