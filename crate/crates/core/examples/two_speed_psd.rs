//! One minute of Poisson traffic with trucks and sedans at different speeds:
//! the PSD shows a harmonic set for each speed.

use dwpt::fleet::DemandDist;
use dwpt::signal::{detect_peaks, estimate_psd, find_spectral_peaks, synthesize, PsdMethod};
use dwpt::traffic::{generate, GeneratorSpec};
use dwpt::ErConfig;

fn main() -> dwpt::Result<()> {
    let cfg = ErConfig::indot();
    let spec = GeneratorSpec::trucks_and_sedans(1.83, 1.2, 0.3, DemandDist::UniformOnRange, 260.0);
    let scenario = generate(&cfg, &spec, 7)?;
    // skip the first 200 s while the segment fills up
    let series = synthesize(&scenario, 1000.0, 200.0, 260.0)?;
    let psd = estimate_psd(&series, PsdMethod::default())?;

    for (f, p) in find_spectral_peaks(&psd, 1.0, 2, 3) {
        println!("peak at {f:.3} Hz ({p:.1} kW^2/Hz)");
    }
    let fundamentals = [cfg.fundamental_hz(21.7), cfg.fundamental_hz(29.0)];
    let table = detect_peaks(&psd, &fundamentals, 3);
    for p in &table.peaks {
        println!(
            "f0 {:.3} Hz, m = {}: {:.3} Hz, {:.1} kW^2{}",
            p.fundamental_hz,
            p.harmonic,
            p.peak_hz,
            p.line_power_kw2,
            if p.resolved { "" } else { " (unresolved)" }
        );
    }
    Ok(())
}
