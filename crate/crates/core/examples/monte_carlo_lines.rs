//! Random entry times against the expected harmonic powers N c_m^2.

use dwpt::fleet::{analytic_psd, DemandDist, FleetClass, FleetModel};
use dwpt::signal::monte_carlo_psd;
use dwpt::spectrum::Truncation;
use dwpt::ErConfig;

fn main() -> dwpt::Result<()> {
    let fleet = FleetModel::new(
        ErConfig::indot(),
        vec![FleetClass::new(1.83, 1.0, DemandDist::MaxDemand)],
        45.0,
        24.6,
    )?;
    let mc = monte_carlo_psd(&fleet, 5, 10_000, 42)?;
    let expected = analytic_psd(&fleet, Truncation::Fixed(5))?;
    println!("{:>2} {:>14} {:>14} {:>6}", "m", "ensemble", "expected", "z");
    for m in 0..=5 {
        let want = expected.line_power(m);
        // the DC line is the same in every trial
        let z = if mc.std_err[m] > 1e-9 * want { (mc.mean[m] - want) / mc.std_err[m] } else { 0.0 };
        println!("{m:>2} {:>14.2} {want:>14.2} {z:>6.2}", mc.mean[m]);
    }
    Ok(())
}
