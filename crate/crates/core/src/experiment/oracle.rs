use crate::error::{Error, Result};
use crate::model::builtin::LinearInteraction;

/// RK4 step size of [`moment_oracle`].
pub const ORACLE_STEP: f64 = 1e-5;

/// First two moments of the linear model at one time, plus the mean of a
/// chain started elsewhere but driven by the same law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub second_moment: f64,
    pub target_mean: f64,
}

impl Moments {
    pub fn variance(&self) -> f64 {
        self.second_moment - self.mean * self.mean
    }
}

/// Right-hand side of the closed moment system of [`LinearInteraction`].
fn moment_rhs(model: &LinearInteraction, [m1, m2, y]: [f64; 3]) -> [f64; 3] {
    let (a, s, k, rate) = (model.drift_rate, model.volatility, model.jump_scale, model.intensity);
    let (mu1, mu2) = (model.marks.mean(), model.marks.second_moment());
    let growth = 2.0 * a + 2.0 * rate * k * mu1;
    let dm2 = 2.0 * a * (m1 * m1 + m2)
        + s * s * m2
        + rate * (2.0 * k * mu1 * (m1 * m1 + m2) + k * k * mu2 * (3.0 * m1 * m1 + m2));
    let dy = (a + rate * k * mu1) * (m1 + y);
    [growth * m1, dm2, dy]
}

/// Integrates the moment equations of [`LinearInteraction`] from a point
/// mass at `x0` (law) and `target_x0` (chain) up to `t`.
pub fn moment_oracle(model: &LinearInteraction, x0: f64, target_x0: f64, t: f64) -> Result<Moments> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("oracle time {t} must be finite and >= 0")));
    }
    if !(x0.is_finite() && target_x0.is_finite()) {
        return Err(Error::invalid("oracle initial values must be finite"));
    }
    let steps = (t / ORACLE_STEP).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let mut u = [x0, x0 * x0, target_x0];
    let axpy = |u: [f64; 3], c: f64, k: [f64; 3]| [u[0] + c * k[0], u[1] + c * k[1], u[2] + c * k[2]];
    for _ in 0..steps {
        let k1 = moment_rhs(model, u);
        let k2 = moment_rhs(model, axpy(u, 0.5 * h, k1));
        let k3 = moment_rhs(model, axpy(u, 0.5 * h, k2));
        let k4 = moment_rhs(model, axpy(u, h, k3));
        for i in 0..3 {
            u[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("moment equations overflowed"));
    }
    Ok(Moments {
        mean: u[0],
        second_moment: u[1],
        target_mean: u[2],
    })
}
