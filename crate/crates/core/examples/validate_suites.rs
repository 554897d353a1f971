//! Run the built-in checks of the closed forms against numerical oracles.

use dwpt::validate::{run, ValidateOptions};
use dwpt::ErConfig;

fn main() -> dwpt::Result<()> {
    let report = run(&ErConfig::indot(), &ValidateOptions::default())?;
    println!("{report}");
    std::process::exit(if report.passed { 0 } else { 2 });
}
