//! Exact mean and variance of the linear model over time, next to a particle
//! approximation.

use msdej::experiment::moment_oracle;
use msdej::meanfield::{propagate_law, ParticleEnsemble};
use msdej::model::builtin::LinearInteraction;
use msdej::noise::{Coupling, NoisePlan};
use msdej::schemes::SchemeKind;

fn main() -> msdej::Result<()> {
    let model = LinearInteraction::standard(1.0);
    let plan = NoisePlan {
        intensity: model.intensity,
        horizon: 1.0,
        marks: model.marks.clone(),
        coupling: Coupling::Independent,
    };
    let steps = 128;
    let mut ensemble = ParticleEnsemble::keyed(0.1, 5000, &plan, 3, 0, steps)?;
    let law = propagate_law(&model, SchemeKind::Weak2, &mut ensemble, steps, 1.0)?;
    println!("{:>5} {:>10} {:>10} {:>10} {:>10}", "t", "mean", "particles", "variance", "particles");
    for k in (0..=steps).step_by(16) {
        let snap = law.at(k);
        let exact = moment_oracle(&model, 0.1, 0.1, snap.time())?;
        println!(
            "{:>5.3} {:>10.5} {:>10.5} {:>10.5} {:>10.5}",
            snap.time(),
            exact.mean,
            snap.mean(),
            exact.variance(),
            snap.second_moment() - snap.mean().powi(2)
        );
    }
    Ok(())
}
