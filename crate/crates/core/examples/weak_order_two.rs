//! Weak errors of Euler and weak order 2.0 on the linear model, for a few
//! jump intensities.

use msdej::experiment::{estimate_errors, ExperimentConfig, Mode};
use msdej::schemes::SchemeKind;

fn main() -> msdej::Result<()> {
    for intensity in [0.5, 1.0, 2.0] {
        for scheme in [SchemeKind::Euler, SchemeKind::Weak2] {
            let table = estimate_errors(&ExperimentConfig {
                intensity,
                scheme,
                mode: Mode::Weak,
                steps: vec![8, 16, 32, 64, 128],
                ..ExperimentConfig::default()
            })?;
            let errors: Vec<String> = table.rows.iter().map(|r| format!("{:.2e}", r.weak.unwrap().value)).collect();
            println!(
                "intensity {intensity:.1} {scheme:>7}: rate {:.3}  [{}]",
                table.weak_rate.unwrap_or(f64::NAN),
                errors.join(", ")
            );
        }
    }
    Ok(())
}
