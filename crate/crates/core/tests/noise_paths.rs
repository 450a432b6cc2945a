use msdej::noise::{coarsen, Coupling, MarkDistribution, NoiseConfig, NoiseKey, NoisePlan, Role};
use msdej::stats::Summary;

fn config(intensity: f64, fine_exponent: u32) -> NoiseConfig {
    NoiseConfig {
        intensity,
        horizon: 1.0,
        marks: MarkDistribution::centered_unit(),
        fine_exponent,
    }
}

fn z_score(values: &[f64], target: f64) -> f64 {
    let s = Summary::of(values);
    (s.mean - target) / s.std_error
}

#[test]
fn terminal_brownian_variance() {
    let cfg = config(0.0, 5);
    let w: Vec<f64> = (0..20_000)
        .map(|i| {
            let b = NoiseKey::new(11, Role::Auxiliary, i, 0).bundle(&cfg).unwrap();
            b.brownian.value_at(1.0).unwrap()
        })
        .collect();
    let sq: Vec<f64> = w.iter().map(|x| x * x).collect();
    assert!(z_score(&w, 0.0).abs() < 3.0);
    assert!(z_score(&sq, 1.0).abs() < 3.0, "{}", Summary::of(&sq).mean);
}

#[test]
fn single_step_area_moments() {
    let cfg = config(1.0, 7);
    let (mut dz, mut cross) = (Vec::new(), Vec::new());
    for i in 0..20_000 {
        let ctx = NoiseKey::new(12, Role::Auxiliary, i, 0).steps(&cfg, 1).unwrap().next().unwrap();
        dz.push(ctx.dz);
        cross.push(ctx.dz * ctx.dw);
    }
    let sq: Vec<f64> = dz.iter().map(|v| v * v).collect();
    assert!(z_score(&dz, 0.0).abs() < 3.0);
    assert!(z_score(&sq, 1.0 / 3.0).abs() < 3.0);
    assert!(z_score(&cross, 0.5).abs() < 3.0);
}

#[test]
fn coarse_and_fine_runs_share_the_realization() {
    let cfg = config(3.0, 8);
    for i in 0..50 {
        let bundle = NoiseKey::new(13, Role::Target, i, 0).bundle(&cfg).unwrap();
        let coarse = coarsen(&bundle, 16).unwrap();
        let fine = coarsen(&bundle, 256).unwrap();
        for (k, c) in coarse.iter().enumerate() {
            let block = &fine[16 * k..16 * (k + 1)];
            let dw: f64 = block.iter().map(|f| f.dw).sum();
            assert!((c.dw - dw).abs() < 1e-12);
            let fine_jumps: Vec<(f64, f64)> = block.iter().flat_map(|f| f.jumps.iter().map(|j| (j.time, j.mark))).collect();
            let coarse_jumps: Vec<(f64, f64)> = c.jumps.iter().map(|j| (j.time, j.mark)).collect();
            assert_eq!(coarse_jumps, fine_jumps);
        }
        let total: usize = coarse.iter().map(|c| c.jumps.len()).sum();
        assert_eq!(total, bundle.jumps.count());
    }
}

#[test]
fn plan_streams_match_materialized_bundles() {
    let plan = NoisePlan {
        intensity: 2.0,
        horizon: 1.0,
        marks: MarkDistribution::centered_unit(),
        coupling: Coupling::FineGrid(6),
    };
    let key = NoiseKey::new(14, Role::Law, 3, 9);
    let streamed: Vec<_> = plan.stream(key, 8).unwrap().collect();
    assert_eq!(streamed, coarsen(&key.bundle(&plan.fine_config(6)).unwrap(), 8).unwrap());
    assert!(plan.stream(key, 3).is_err());
}
