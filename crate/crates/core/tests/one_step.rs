//! Mean of one step of the linear model from a point-mass law, compared with
//! the exact conditional mean `(x - m) e^{aΔt} + m e^{2aΔt}`.

use msdej::model::builtin::LinearInteraction;
use msdej::model::LawView;
use msdej::noise::{Coupling, NoiseKey, NoisePlan, Role};
use msdej::schemes::SchemeKind;
use msdej::stats::Summary;

const A: f64 = 1.25;
const X: f64 = 0.5;
const M: f64 = 0.1;

struct Moments {
    euler: Summary,
    weak2: Summary,
    gap: Summary,
}

fn sample(dt: f64, draws: u64) -> Moments {
    let model = LinearInteraction::standard(1.0);
    let law = LawView::new(&model, 0.0, &[M; 4]).unwrap();
    let plan = NoisePlan {
        intensity: 1.0,
        horizon: dt,
        marks: model.marks.clone(),
        coupling: Coupling::Independent,
    };
    let (mut euler, mut weak2) = (Vec::new(), Vec::new());
    for i in 0..draws {
        let ctx = plan.stream(NoiseKey::new(21, Role::Auxiliary, i, 0), 1).unwrap().next().unwrap();
        euler.push(SchemeKind::Euler.step(&model, &law, X, &ctx).unwrap().next);
        weak2.push(SchemeKind::Weak2.step(&model, &law, X, &ctx).unwrap().next);
    }
    let gap: Vec<f64> = weak2.iter().zip(&euler).map(|(w, e)| w - e).collect();
    Moments {
        euler: Summary::of(&euler),
        weak2: Summary::of(&weak2),
        gap: Summary::of(&gap),
    }
}

fn exact(dt: f64) -> f64 {
    (X - M) * (A * dt).exp() + M * (2.0 * A * dt).exp()
}

#[test]
fn euler_bias_is_second_order_and_weak2_removes_it() {
    let leading = |dt: f64| 0.5 * A * A * (X + 3.0 * M) * dt * dt;
    let mut gaps = Vec::new();
    for dt in [0.1, 0.05] {
        let s = sample(dt, 100_000);
        // Euler misses the Δt² term; weak 2.0 is off by O(Δt³) only.
        let euler_bias = exact(dt) - s.euler.mean;
        assert!((euler_bias - leading(dt)).abs() < 4.0 * s.euler.std_error + 0.5 * dt.powi(3), "dt {dt}: {euler_bias}");
        assert!((exact(dt) - s.weak2.mean).abs() < 4.0 * s.weak2.std_error + 0.5 * dt.powi(3));
        assert!((s.gap.mean - leading(dt)).abs() < 4.0 * s.gap.std_error + 1e-12);
        gaps.push(s.gap.mean);
    }
    // Richardson: halving Δt divides the correction by four.
    let ratio = gaps[0] / gaps[1];
    assert!((ratio - 4.0).abs() < 0.4, "{ratio}");
}
