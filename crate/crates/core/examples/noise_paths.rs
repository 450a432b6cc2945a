//! One coupled noise realization seen at three resolutions.

use msdej::noise::{coarsen, MarkDistribution, NoiseConfig, NoiseKey, Role};

fn main() -> msdej::Result<()> {
    let config = NoiseConfig {
        intensity: 3.0,
        horizon: 1.0,
        marks: MarkDistribution::centered_unit(),
        fine_exponent: 10,
    };
    let bundle = NoiseKey::new(5, Role::Auxiliary, 0, 0).bundle(&config)?;
    println!("jumps at:");
    for (t, e) in bundle.jumps.times.iter().zip(&bundle.jumps.sizes) {
        println!("  t = {t:.4}  mark = {e:+.4}");
    }
    for steps in [4, 16, 1024] {
        let contexts = coarsen(&bundle, steps)?;
        let w: f64 = contexts.iter().map(|c| c.dw).sum();
        let z: f64 = contexts.iter().map(|c| c.dz).sum();
        let n: usize = contexts.iter().map(|c| c.jumps.len()).sum();
        println!("N = {steps:5}: W_T = {w:+.6}, sum dZ = {z:+.6}, jumps = {n}");
    }
    let ctx = &coarsen(&bundle, 4)?[0];
    println!("first of 4 steps: {ctx:#?}");
    Ok(())
}
