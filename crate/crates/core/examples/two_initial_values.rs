//! Superlinear model with weak order 2.0, with the target chain started at
//! the law's initial value and away from it.

use msdej::experiment::{estimate_errors, to_report, ExperimentConfig, Mode, ModelChoice};
use msdej::schemes::SchemeKind;

fn main() -> msdej::Result<()> {
    for (x0, target_x0) in [(0.1, 0.1), (0.15, 0.05)] {
        let table = estimate_errors(&ExperimentConfig {
            model: ModelChoice::Example2,
            law_x0: x0,
            target_x0,
            scheme: SchemeKind::Weak2,
            mode: Mode::Weak,
            steps: vec![8, 16, 32, 64, 128],
            ..ExperimentConfig::default()
        })?;
        println!("{}", to_report(&table));
    }
    Ok(())
}
