//! Read a trajectory CSV and summarise the scenario. Without an argument a
//! small built-in file is used.

use std::path::PathBuf;

use dwpt::signal::synthesize;
use dwpt::traffic::{ingest, parse_csv};
use dwpt::ErConfig;

const SAMPLE: &str = "\
entry_time_s,speed_mps,rx_len_m,peak_demand_kw,class_id
0.0,24.6,1.83,200.0,truck
4.2,29.0,1.2,120.0,sedan
9.8,21.7,1.83,180.0,truck
";

fn main() -> dwpt::Result<()> {
    let cfg = ErConfig::indot();
    let scenario = match std::env::args().nth(1).map(PathBuf::from) {
        Some(path) => ingest(&path, &cfg)?,
        None => parse_csv(SAMPLE.as_bytes(), "sample", &cfg)?,
    };
    println!("{} EVs, horizon {:.1} s", scenario.evs.len(), scenario.duration_s);
    if scenario.evs.is_empty() {
        return Ok(());
    }
    let t = scenario.evs.last().map_or(0.0, |e| e.entry_time_s) + 1.0;
    println!("{} on the segment at t = {t:.1} s", scenario.occupancy_at(t));
    let series = synthesize(&scenario, 1000.0, t, t + 30.0)?;
    println!("mean load over the next 30 s: {:.1} kW", series.mean());
    Ok(())
}
