//! `dwpt` command-line front end.
//!
//! A run is described by one JSON [`RunConfig`]; command-line flags override
//! its keys, and missing keys fall back to the INDOT pilot values. Outputs are
//! written atomically into the output directory and carry a metadata record
//! (tool version, seed, SHA-256 of the effective config): a `metadata` field in
//! JSON files and a leading `#` comment line in CSV files.
//!
//! Exit codes: 0 success, 2 validation failure, 3 I/O error, 4 config error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::composition::{run_sweep, SweepSpec};
use crate::er_model::{ControlScheme, ErConfig, EvParams};
use crate::error::{DwptError, Result};
use crate::fleet::{analytic_psd, DemandDist, FleetClass, FleetModel};
use crate::signal::{
    detect_peaks, empirical_thc, estimate_psd, find_spectral_peaks, synthesize, PsdMethod,
    DEFAULT_SAMPLE_RATE_HZ,
};
use crate::spectrum::{compare_schemes, fs_coefficients, harmonic_bound, thc_single, Truncation};
use crate::traffic::{generate, generate_occupancy, ingest, GeneratorSpec, OccupancySpec, Scenario, TrafficClass};
use crate::validate::{self, ValidateOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "dwpt", version, about = "DWPT roadway load and spectrum toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub sample_rate_hz: Option<f64>,
    /// Length of the observed window.
    #[arg(long, global = true)]
    pub duration_s: Option<f64>,
    /// Windows per composition cell (`composition`) or Monte Carlo trials
    /// (`validate`).
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Number of harmonics `M`.
    #[arg(long, global = true)]
    pub harmonics: Option<usize>,
    /// Emit the analytical line spectrum instead of an estimate (`psd`).
    #[arg(long, global = true)]
    pub analytic: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate traffic and write the sampled total load.
    Simulate,
    /// Fourier coefficients and THC of a single EV.
    Spectrum,
    /// PSD estimate and harmonic peaks of the sampled load.
    Psd,
    /// THC table over truck fractions and sedan receiver lengths.
    Composition,
    /// Check every closed form against its numerical oracle.
    Validate {
        /// Multiply every tolerance (values below 1 tighten them).
        #[arg(long, default_value_t = 1.0)]
        tolerance_scale: f64,
    },
    /// Read a trajectory CSV and write it back as a scenario.
    Ingest { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoissonTraffic {
    pub rate_evps: f64,
    pub classes: Vec<TrafficClass>,
    /// Simulated time discarded before the observed window.
    #[serde(default)]
    pub warmup_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OccupancyTraffic {
    pub n_evs: usize,
    pub classes: Vec<TrafficClass>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileTraffic {
    pub path: PathBuf,
    #[serde(default)]
    pub start_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TrafficSource {
    Poisson(PoissonTraffic),
    Occupancy(OccupancyTraffic),
    File(FileTraffic),
}

impl Default for TrafficSource {
    fn default() -> Self {
        let spec = GeneratorSpec::trucks_and_sedans(1.83, 1.2, 0.3, DemandDist::UniformOnRange, 1.0);
        TrafficSource::Poisson(PoissonTraffic {
            rate_evps: spec.rate_evps,
            classes: spec.classes,
            warmup_s: 200.0,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SignalConfig {
    pub sample_rate_hz: f64,
    pub psd: PsdMethod,
    /// Harmonics per fundamental in the peak table.
    pub harmonics: usize,
    /// Expected fundamentals; derived from the EV speeds when absent.
    pub fundamentals_hz: Option<Vec<f64>>,
    /// Lower edge of the blind peak search.
    pub min_peak_hz: f64,
}

impl Default for SignalConfig {
    fn default() -> Self {
        SignalConfig {
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
            psd: PsdMethod::default(),
            harmonics: 10,
            fundamentals_hz: None,
            min_peak_hz: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    pub rx_len_m: f64,
    /// Maximum demand `αℓ` when absent.
    pub peak_demand_kw: Option<f64>,
    pub speed_mps: f64,
    pub scheme: ControlScheme,
    /// Automatic truncation when absent.
    pub harmonics: Option<usize>,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig {
            rx_len_m: 1.83,
            peak_demand_kw: None,
            speed_mps: 24.6,
            scheme: ControlScheme::Clipping,
            harmonics: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FleetConfig {
    pub classes: Vec<FleetClass>,
    pub n_evs: f64,
    pub speed_mps: f64,
}

impl Default for FleetConfig {
    fn default() -> Self {
        FleetConfig {
            classes: vec![
                FleetClass::new(1.83, 0.3, DemandDist::MaxDemand),
                FleetClass::new(1.2, 0.7, DemandDist::MaxDemand),
            ],
            n_evs: 45.0,
            speed_mps: 24.6,
        }
    }
}

/// Everything a run needs; every key is optional in the JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub er: ErConfig,
    pub seed: u64,
    pub out: PathBuf,
    pub duration_s: f64,
    pub traffic: TrafficSource,
    pub signal: SignalConfig,
    pub spectrum: SpectrumConfig,
    pub fleet: FleetConfig,
    pub composition: SweepSpec,
    pub validate: ValidateOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            er: ErConfig::indot(),
            seed: 1,
            out: PathBuf::from("out"),
            duration_s: 60.0,
            traffic: TrafficSource::default(),
            signal: SignalConfig::default(),
            spectrum: SpectrumConfig::default(),
            fleet: FleetConfig::default(),
            composition: SweepSpec::default(),
            validate: ValidateOptions::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| DwptError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| DwptError::io(path, e))?;
        Self::from_json(&text)
    }

    /// Apply command-line overrides.
    pub fn apply(&mut self, cli: &Cli) {
        if let Some(seed) = cli.seed {
            self.seed = seed;
            self.validate.seed = seed;
        }
        if let Some(out) = &cli.out {
            self.out = out.clone();
        }
        if let Some(rate) = cli.sample_rate_hz {
            self.signal.sample_rate_hz = rate;
            self.composition.sample_rate_hz = rate;
        }
        if let Some(duration) = cli.duration_s {
            self.duration_s = duration;
            self.composition.window_s = duration;
        }
        if let Some(trials) = cli.trials {
            match cli.command {
                Command::Composition => self.composition.windows = trials,
                Command::Validate { .. } => self.validate.mc_trials = trials,
                _ => {}
            }
        }
        if let Some(m) = cli.harmonics {
            self.signal.harmonics = m;
            self.spectrum.harmonics = Some(m);
            self.composition.harmonics = m;
            self.validate.harmonics = m;
        }
        if let Command::Validate { tolerance_scale } = cli.command {
            self.validate.tolerance_scale = tolerance_scale;
        }
    }

    /// Check every section before any computation.
    pub fn validate(&self) -> Result<()> {
        let cfg = &self.er;
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(DwptError::invalid("duration_s", format!("{}", self.duration_s)));
        }
        match &self.traffic {
            TrafficSource::Poisson(p) => {
                if !(p.warmup_s.is_finite() && p.warmup_s >= 0.0) {
                    return Err(DwptError::invalid("warmup_s", format!("{}", p.warmup_s)));
                }
                self.poisson_spec(p).validate(cfg)?;
            }
            TrafficSource::Occupancy(o) => self.occupancy_spec(o).validate(cfg)?,
            TrafficSource::File(f) => {
                if !(f.start_s.is_finite() && f.start_s >= 0.0) {
                    return Err(DwptError::invalid("start_s", format!("{}", f.start_s)));
                }
            }
        }
        let s = &self.signal;
        if !(s.sample_rate_hz.is_finite() && s.sample_rate_hz > 0.0) {
            return Err(DwptError::invalid("sample_rate_hz", format!("{}", s.sample_rate_hz)));
        }
        if s.harmonics == 0 {
            return Err(DwptError::invalid("signal.harmonics", "must be > 0"));
        }
        if let Some(fs) = &s.fundamentals_hz {
            if fs.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
                return Err(DwptError::invalid("fundamentals_hz", "must be positive"));
            }
        }
        if let PsdMethod::Welch { segment_s, .. } = s.psd {
            if !(segment_s > 0.0 && 2.0 * segment_s <= self.duration_s) {
                return Err(DwptError::invalid(
                    "psd.segment_s",
                    format!("{segment_s} s does not fit twice in {} s", self.duration_s),
                ));
            }
        }
        self.single_ev().validate(cfg)?;
        self.spectrum.scheme.validate()?;
        self.fleet_model()?;
        self.composition.validate(cfg)?;
        self.validate.validate()?;
        Ok(())
    }

    /// Hash of the effective config; the output directory is left out so
    /// identical runs written to different places carry the same hash.
    pub fn sha256(&self) -> String {
        let mut hashed = self.clone();
        hashed.out = PathBuf::new();
        let bytes = serde_json::to_vec(&hashed).expect("config serialises");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    fn poisson_spec(&self, p: &PoissonTraffic) -> GeneratorSpec {
        GeneratorSpec {
            rate_evps: p.rate_evps,
            duration_s: p.warmup_s + self.duration_s,
            classes: p.classes.clone(),
        }
    }

    fn occupancy_spec(&self, o: &OccupancyTraffic) -> OccupancySpec {
        OccupancySpec {
            n_evs: o.n_evs,
            window_s: self.duration_s,
            classes: o.classes.clone(),
        }
    }

    fn single_ev(&self) -> EvParams {
        let s = &self.spectrum;
        let peak = s.peak_demand_kw.unwrap_or_else(|| self.er.max_power_kw(s.rx_len_m));
        EvParams::new(s.rx_len_m, peak, 0.0, s.speed_mps)
    }

    fn fleet_model(&self) -> Result<FleetModel> {
        FleetModel::new(self.er, self.fleet.classes.clone(), self.fleet.n_evs, self.fleet.speed_mps)
    }

    /// Scenario and observed window.
    pub fn scenario(&self) -> Result<(Scenario, (f64, f64))> {
        match &self.traffic {
            TrafficSource::Poisson(p) => {
                let sc = generate(&self.er, &self.poisson_spec(p), self.seed)?;
                Ok((sc, (p.warmup_s, p.warmup_s + self.duration_s)))
            }
            TrafficSource::Occupancy(o) => {
                let sc = generate_occupancy(&self.er, &self.occupancy_spec(o), self.seed)?;
                let window = sc.observation_window_s.expect("occupancy window");
                Ok((sc, window))
            }
            TrafficSource::File(f) => {
                let sc = ingest(&f.path, &self.er)?;
                sc.validate()?;
                Ok((sc, (f.start_s, f.start_s + self.duration_s)))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config_sha256: String,
}

impl Metadata {
    fn new(command: &str, config: &RunConfig) -> Self {
        Metadata {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed: config.seed,
            config_sha256: config.sha256(),
        }
    }

    fn csv_comment(&self) -> String {
        format!(
            "# {} {} command={} seed={} config_sha256={}\n",
            self.tool, self.version, self.command, self.seed, self.config_sha256
        )
    }
}

/// Write `bytes` to a temporary sibling and rename it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| DwptError::io(dir, e))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = fs::File::create(&tmp)
        .and_then(|mut f| f.write_all(bytes).and_then(|_| f.sync_all()))
        .and_then(|_| fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(DwptError::io(path, e));
    }
    Ok(())
}

fn write_csv_with_meta<F>(path: &Path, meta: &Metadata, body: F) -> Result<()>
where
    F: FnOnce(&mut Vec<u8>) -> Result<()>,
{
    let mut buf = meta.csv_comment().into_bytes();
    body(&mut buf)?;
    write_atomic(path, &buf)
}

fn write_json_with_meta<T: Serialize>(path: &Path, meta: &Metadata, value: &T) -> Result<()> {
    let mut v = serde_json::to_value(value)?;
    if let serde_json::Value::Object(map) = &mut v {
        map.insert("metadata".to_string(), serde_json::to_value(meta)?);
    }
    let mut text = serde_json::to_string_pretty(&v)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn io_err(e: std::io::Error) -> DwptError {
    DwptError::io("<buffer>", e)
}

/// Files written by one command.
pub type Outputs = Vec<PathBuf>;

pub fn cmd_simulate(config: &RunConfig) -> Result<Outputs> {
    let meta = Metadata::new("simulate", config);
    let (scenario, (t0, t1)) = config.scenario()?;
    let series = synthesize(&scenario, config.signal.sample_rate_hz, t0, t1)?;
    let ts = config.out.join("timeseries.csv");
    write_csv_with_meta(&ts, &meta, |buf| series.write_csv(buf).map_err(io_err))?;
    let sc = config.out.join("scenario.json");
    write_json_with_meta(&sc, &meta, &scenario)?;
    Ok(vec![ts, sc])
}

#[derive(Debug, Serialize)]
struct ThcReport {
    rx_len_m: f64,
    peak_demand_kw: f64,
    speed_mps: f64,
    scheme: ControlScheme,
    fundamental_hz: f64,
    c0_kw: f64,
    thc_percent: f64,
    first_harmonic_relative_power: f64,
    truncation_m: usize,
    tail_bound_points: f64,
    constant_load: bool,
    clipping_ratio: f64,
    scaling_ratio: f64,
}

pub fn cmd_spectrum(config: &RunConfig) -> Result<Outputs> {
    let meta = Metadata::new("spectrum", config);
    let cfg = &config.er;
    let ev = config.single_ev();
    let truncation = Truncation::from_option(config.spectrum.harmonics);
    let coeffs = fs_coefficients(cfg, &ev, config.spectrum.scheme, truncation);
    let thc = match config.spectrum.scheme {
        ControlScheme::Clipping => thc_single(cfg, &ev, truncation),
        ControlScheme::Scaling { .. } => crate::spectrum::ThcResult {
            percent: coeffs.thc_percent(),
            truncation_m: coeffs.truncation_m,
            tail_bound_points: 0.0,
        },
    };
    let cmp = compare_schemes(cfg, &ev);
    let fs_path = config.out.join("fs_coeffs.csv");
    write_csv_with_meta(&fs_path, &meta, |buf| {
        writeln!(buf, "m,freq_hz,c_m_kw,bound_kw").map_err(io_err)?;
        writeln!(buf, "0,0,{},", coeffs.c0_kw).map_err(io_err)?;
        for m in 1..=coeffs.truncation_m {
            writeln!(
                buf,
                "{m},{},{},{}",
                m as f64 * coeffs.fundamental_hz,
                coeffs.harmonic(m),
                harmonic_bound(cfg, m)
            )
            .map_err(io_err)?;
        }
        Ok(())
    })?;
    let report = ThcReport {
        rx_len_m: ev.rx_len_m,
        peak_demand_kw: ev.peak_demand_kw,
        speed_mps: ev.speed_mps,
        scheme: config.spectrum.scheme,
        fundamental_hz: coeffs.fundamental_hz,
        c0_kw: coeffs.c0_kw,
        thc_percent: thc.percent,
        first_harmonic_relative_power: if coeffs.c0_kw > 0.0 {
            2f64.sqrt() * coeffs.harmonic(1) / coeffs.c0_kw
        } else {
            0.0
        },
        truncation_m: thc.truncation_m,
        tail_bound_points: thc.tail_bound_points,
        constant_load: ev.is_constant_load(cfg),
        clipping_ratio: cmp.clipping_ratio,
        scaling_ratio: cmp.scaling_ratio,
    };
    let thc_path = config.out.join("thc.json");
    write_json_with_meta(&thc_path, &meta, &report)?;
    Ok(vec![fs_path, thc_path])
}

#[derive(Debug, Serialize)]
struct PeaksReport {
    mode: &'static str,
    fundamentals_hz: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    resolution_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    empirical_thc_percent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    analytic_thc_percent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_kw: Option<f64>,
    /// Strongest local maxima regardless of the expected fundamentals.
    strongest: Vec<(f64, f64)>,
    peaks: serde_json::Value,
}

pub fn cmd_psd(config: &RunConfig, analytic: bool) -> Result<Outputs> {
    if analytic {
        return cmd_psd_analytic(config);
    }
    let meta = Metadata::new("psd", config);
    let (scenario, (t0, t1)) = config.scenario()?;
    let series = synthesize(&scenario, config.signal.sample_rate_hz, t0, t1)?;
    let psd = estimate_psd(&series, config.signal.psd)?;
    let fundamentals = match &config.signal.fundamentals_hz {
        Some(f) => f.clone(),
        None => scenario.speeds().iter().map(|&v| config.er.fundamental_hz(v)).collect(),
    };
    let m_max = config.signal.harmonics;
    let table = detect_peaks(&psd, &fundamentals, m_max);
    let thc = empirical_thc(&series, &psd, &fundamentals, m_max).ok();
    let report = PeaksReport {
        mode: "estimate",
        resolution_hz: Some(psd.resolution_hz),
        empirical_thc_percent: thc.as_ref().map(|t| t.percent),
        analytic_thc_percent: None,
        mean_kw: Some(series.mean()),
        strongest: find_spectral_peaks(&psd, config.signal.min_peak_hz, fundamentals.len().max(2), 3),
        fundamentals_hz: fundamentals,
        peaks: serde_json::to_value(&table.peaks)?,
    };
    let psd_path = config.out.join("psd.csv");
    write_csv_with_meta(&psd_path, &meta, |buf| psd.write_csv(buf).map_err(io_err))?;
    let peaks_path = config.out.join("peaks.json");
    write_json_with_meta(&peaks_path, &meta, &report)?;
    Ok(vec![psd_path, peaks_path])
}

fn cmd_psd_analytic(config: &RunConfig) -> Result<Outputs> {
    let meta = Metadata::new("psd", config);
    let model = config.fleet_model()?;
    let lines = analytic_psd(&model, Truncation::Fixed(config.signal.harmonics))?;
    let psd_path = config.out.join("psd.csv");
    write_csv_with_meta(&psd_path, &meta, |buf| {
        writeln!(buf, "freq_hz,line_power_kw2").map_err(io_err)?;
        for (f, p) in lines.one_sided_lines() {
            writeln!(buf, "{f},{p}").map_err(io_err)?;
        }
        Ok(())
    })?;
    let peaks: Vec<serde_json::Value> = (1..=lines.harmonic_powers.len())
        .map(|m| {
            serde_json::json!({
                "harmonic": m,
                "freq_hz": m as f64 * lines.fundamental_hz,
                "line_power_kw2": lines.line_power(m),
            })
        })
        .collect();
    let report = PeaksReport {
        mode: "analytic",
        fundamentals_hz: vec![lines.fundamental_hz],
        resolution_hz: None,
        empirical_thc_percent: None,
        analytic_thc_percent: Some(lines.thc_percent()),
        mean_kw: Some(lines.mean_kw),
        strongest: Vec::new(),
        peaks: serde_json::Value::Array(peaks),
    };
    let peaks_path = config.out.join("peaks.json");
    write_json_with_meta(&peaks_path, &meta, &report)?;
    Ok(vec![psd_path, peaks_path])
}

pub fn cmd_composition(config: &RunConfig) -> Result<Outputs> {
    let meta = Metadata::new("composition", config);
    let table = run_sweep(&config.er, &config.composition, config.seed)?;
    let path = config.out.join("thc_table.csv");
    write_csv_with_meta(&path, &meta, |buf| table.write_csv(buf))?;
    Ok(vec![path])
}

/// Run the suites; the report is returned even when a suite fails.
pub fn cmd_validate(config: &RunConfig) -> Result<(validate::ValidationReport, Outputs)> {
    let meta = Metadata::new("validate", config);
    let report = validate::run(&config.er, &config.validate)?;
    let path = config.out.join("validation.json");
    write_json_with_meta(&path, &meta, &report)?;
    Ok((report, vec![path]))
}

pub fn cmd_ingest(config: &RunConfig, path: &Path) -> Result<Outputs> {
    let meta = Metadata::new("ingest", config);
    let scenario = ingest(path, &config.er)?;
    scenario.validate()?;
    let json = config.out.join("scenario.json");
    write_json_with_meta(&json, &meta, &scenario)?;
    let csv_path = config.out.join("trajectories.csv");
    write_csv_with_meta(&csv_path, &meta, |buf| crate::traffic::write_csv(&scenario, buf))?;
    Ok(vec![json, csv_path])
}

/// Exit code for an error.
pub fn exit_code(err: &DwptError) -> i32 {
    match err {
        DwptError::Config(_) => EXIT_CONFIG,
        DwptError::Io { .. } => EXIT_IO,
        DwptError::Csv(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => EXIT_IO,
        _ => EXIT_VALIDATION,
    }
}

fn execute(cli: &Cli) -> Result<i32> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    config.apply(cli);
    config.validate()?;
    let outputs = match &cli.command {
        Command::Simulate => cmd_simulate(&config)?,
        Command::Spectrum => cmd_spectrum(&config)?,
        Command::Psd => cmd_psd(&config, cli.analytic)?,
        Command::Composition => cmd_composition(&config)?,
        Command::Validate { .. } => {
            let (report, outputs) = cmd_validate(&config)?;
            println!("{report}");
            for p in &outputs {
                println!("wrote {}", p.display());
            }
            return Ok(if report.passed { EXIT_OK } else { EXIT_VALIDATION });
        }
        Command::Ingest { path } => cmd_ingest(&config, path)?,
    };
    for p in &outputs {
        println!("wrote {}", p.display());
    }
    Ok(EXIT_OK)
}

/// Parse arguments, run the command and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
