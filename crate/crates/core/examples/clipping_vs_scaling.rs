//! First-harmonic ratio c1/c0 of the two power-limiting schemes as the
//! demand drops below the maximum.

use dwpt::spectrum::compare_schemes;
use dwpt::{ErConfig, EvParams};

fn main() {
    let cfg = ErConfig::indot();
    let rx = 1.83;
    let max = cfg.max_power_kw(rx);
    println!("{:>8} {:>10} {:>10}", "p (kW)", "clipping", "scaling");
    for frac in [1.0, 0.9, 0.8, 0.7, 0.6, 0.5] {
        let ev = EvParams::new(rx, frac * max, 0.0, 24.6);
        let cmp = compare_schemes(&cfg, &ev);
        println!("{:>8.1} {:>10.4} {:>10.4}", frac * max, cmp.clipping_ratio, cmp.scaling_ratio);
    }
}
