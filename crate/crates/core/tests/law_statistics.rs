use msdej::experiment::{estimate_errors, law_pass, moment_oracle, ExperimentConfig, Mode, Reference};
use msdej::meanfield::{propagate_law, ParticleEnsemble};
use msdej::model::builtin::LinearInteraction;
use msdej::noise::{Coupling, NoisePlan};
use msdej::schemes::SchemeKind;
use msdej::stats::Summary;

#[test]
fn oracle_moments_match_a_fine_particle_run() {
    let model = LinearInteraction::standard(1.0);
    let plan = NoisePlan {
        intensity: 1.0,
        horizon: 1.0,
        marks: model.marks.clone(),
        coupling: Coupling::Independent,
    };
    let mut ensemble = ParticleEnsemble::keyed(0.1, 20_000, &plan, 31, 0, 256).unwrap();
    propagate_law(&model, SchemeKind::Weak2, &mut ensemble, 256, 1.0).unwrap();
    let exact = moment_oracle(&model, 0.1, 0.1, 1.0).unwrap();
    let first = Summary::of(ensemble.states());
    let squares: Vec<f64> = ensemble.states().iter().map(|x| x * x).collect();
    let second = Summary::of(&squares);
    assert!((first.mean - exact.mean).abs() < 3.0 * first.std_error, "{} vs {}", first.mean, exact.mean);
    assert!((second.mean - exact.second_moment).abs() < 3.0 * second.std_error, "{} vs {}", second.mean, exact.second_moment);
}

#[test]
fn law_standard_error_shrinks_like_inverse_root() {
    let sizes = [100usize, 400, 1600, 6400];
    let mut points = Vec::new();
    for &m_law in &sizes {
        let cfg = ExperimentConfig {
            m_law,
            reference: Reference::MomentOracle,
            mode: Mode::Weak,
            ..ExperimentConfig::default()
        };
        let model = cfg.build_model();
        let plan = cfg.noise_plan();
        let means: Vec<f64> = (0..60)
            .map(|r| law_pass(model.as_ref(), &cfg, &plan, r, 16).unwrap().terminal().mean())
            .collect();
        points.push(((m_law as f64).ln(), Summary::of(&means).std_dev.ln()));
    }
    let n = points.len() as f64;
    let (mx, my) = points.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0 / n, b + p.1 / n));
    let slope = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / points.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((slope + 0.5).abs() < 0.1, "{slope}");
}

#[test]
fn fine_reference_agrees_with_the_oracle() {
    let cfg = ExperimentConfig {
        steps: vec![1024],
        scheme: SchemeKind::Euler,
        mode: Mode::Weak,
        reference: Reference::MomentOracle,
        m_law: 1,
        m_err: 4000,
        ..ExperimentConfig::default()
    };
    let row = estimate_errors(&cfg).unwrap().rows[0].weak.unwrap();
    // Euler bias at N = 1024 is about 4e-3, well inside 3 SE here.
    assert!(row.value < 3.0 * row.std_error, "{row:?}");
}

#[test]
fn euler_strong_error_tends_to_decrease() {
    let seeds = 1..=10u64;
    let decreasing = seeds
        .clone()
        .filter(|&seed| {
            let cfg = ExperimentConfig {
                seed,
                steps: vec![32, 64],
                mode: Mode::Strong,
                m_law: 200,
                m_err: 200,
                reference: Reference::FineGrid(8),
                ..ExperimentConfig::default()
            };
            let rows = estimate_errors(&cfg).unwrap().rows;
            rows[0].strong.unwrap().value >= rows[1].strong.unwrap().value
        })
        .count();
    assert!(decreasing * 10 >= seeds.count() * 8, "{decreasing}");
}

#[test]
fn error_estimates_ignore_thread_count() {
    let cfg = ExperimentConfig {
        steps: vec![8, 16],
        m_law: 64,
        m_err: 64,
        reference: Reference::FineGrid(6),
        scheme: SchemeKind::Weak2,
        ..ExperimentConfig::default()
    };
    let runs: Vec<_> = [1, 2, 4]
        .into_iter()
        .map(|threads| estimate_errors(&ExperimentConfig { threads: Some(threads), ..cfg.clone() }).unwrap().rows)
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0], runs[2]);
}
