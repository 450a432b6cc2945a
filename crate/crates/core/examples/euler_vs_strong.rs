//! Strong errors of Euler and strong order 1.0 on the linear model, both
//! measured against their own run on the 2^12 grid with shared noise.

use msdej::experiment::{estimate_errors, ExperimentConfig, Mode};
use msdej::schemes::SchemeKind;

fn main() -> msdej::Result<()> {
    println!("{:>6} {:>14} {:>14}", "N", "euler", "strong1");
    let run = |scheme| {
        estimate_errors(&ExperimentConfig {
            scheme,
            mode: Mode::Strong,
            ..ExperimentConfig::default()
        })
    };
    let (euler, strong) = (run(SchemeKind::Euler)?, run(SchemeKind::Strong1)?);
    for (a, b) in euler.rows.iter().zip(&strong.rows) {
        println!("{:>6} {:>14.4e} {:>14.4e}", a.steps, a.strong.unwrap().value, b.strong.unwrap().value);
    }
    println!(
        "{:>6} {:>14.3} {:>14.3}",
        "rate",
        euler.strong_rate.unwrap_or(f64::NAN),
        strong.strong_rate.unwrap_or(f64::NAN)
    );
    Ok(())
}
