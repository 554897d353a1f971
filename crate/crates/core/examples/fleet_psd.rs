//! Expected line spectrum and THC of a 45-EV truck/sedan fleet.

use dwpt::fleet::{analytic_psd, FleetModel};
use dwpt::spectrum::Truncation;
use dwpt::ErConfig;

fn main() -> dwpt::Result<()> {
    let fleet = FleetModel::two_class(ErConfig::indot(), 1.83, 1.2, 0.3, 45.0, 24.6)?;
    let psd = analytic_psd(&fleet, Truncation::Fixed(50))?;
    println!("mean load {:.1} kW", psd.mean_kw);
    for (f, p) in psd.one_sided_lines().iter().take(6) {
        println!("{f:>7.3} Hz  {p:>12.1} kW^2");
    }
    println!("THC {:.2}%", psd.thc_percent());
    Ok(())
}
