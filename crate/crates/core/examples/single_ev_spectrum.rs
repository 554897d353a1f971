//! Fourier coefficients and THC of one truck on the INDOT geometry.

use dwpt::spectrum::{fs_coefficients, harmonic_bound, thc_single, Truncation};
use dwpt::{ControlScheme, ErConfig, EvParams};

fn main() {
    let cfg = ErConfig::indot();
    let truck = EvParams::at_max_demand(&cfg, 1.83, 0.0, 24.6);
    let coeffs = fs_coefficients(&cfg, &truck, ControlScheme::Clipping, Truncation::Fixed(8));

    println!("fundamental {:.3} Hz, DC {:.2} kW", coeffs.fundamental_hz, coeffs.c0_kw);
    println!("{:>3} {:>10} {:>10}", "m", "c_m (kW)", "bound");
    for m in 1..=8 {
        println!("{m:>3} {:>10.3} {:>10.3}", coeffs.harmonic(m), harmonic_bound(&cfg, m));
    }

    let thc = thc_single(&cfg, &truck, Truncation::Auto);
    println!("THC {:.2}% using {} harmonics", thc.percent, thc.truncation_m);
}
