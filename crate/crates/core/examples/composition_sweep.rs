//! THC of one-minute windows across truck shares and sedan receiver lengths.
//! Pass a window count as the first argument (default 5).

use dwpt::composition::{run_sweep, SweepSpec};
use dwpt::fleet::composition_boundary;
use dwpt::ErConfig;

fn main() -> dwpt::Result<()> {
    let cfg = ErConfig::indot();
    let windows = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(5);
    let spec = SweepSpec {
        windows,
        ..SweepSpec::default()
    };
    let table = run_sweep(&cfg, &spec, 1)?;

    print!("{:>8}", "theta");
    for lb in &spec.sedan_rx_m {
        print!(" {:>14}", format!("lb = {lb} m"));
    }
    println!();
    for &theta in &spec.truck_fractions {
        print!("{theta:>8.4}");
        for &lb in &spec.sedan_rx_m {
            let c = table.cell(theta, lb).expect("cell");
            print!(" {:>7.2} ± {:<4.2}", c.mean_thc_percent, c.std_err);
        }
        println!();
    }
    println!(
        "more trucks lower THC when lb > {:.3} m",
        composition_boundary(&cfg, spec.truck_rx_m)?
    );
    Ok(())
}
