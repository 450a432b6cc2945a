//! The two reference problems used by the experiments.
//!
//! Both depend on the law only through a handful of moments, so their
//! mean-field terms are closed forms in the snapshot moments.

use super::{Coef, Compensator, LawAccess, LawView, MeanField, Model, Partials};
use crate::error::Result;
use crate::noise::MarkDistribution;
use crate::stats::compensated_sum;

/// Linear interaction
/// `dX = a(E[X] + X) dt + s X dW + ∫ k e (E[X] + X⁻) μ(de, dt)`.
#[derive(Clone, Debug)]
pub struct LinearInteraction {
    pub drift_rate: f64,
    pub volatility: f64,
    pub jump_scale: f64,
    pub intensity: f64,
    pub marks: MarkDistribution,
}

impl LinearInteraction {
    pub const DRIFT_RATE: f64 = 1.25;
    pub const VOLATILITY: f64 = 0.75;
    pub const JUMP_SCALE: f64 = 0.25;

    /// Reference parameters with uniform marks on `[-1/2, 1/2]`.
    pub fn standard(intensity: f64) -> Self {
        LinearInteraction {
            drift_rate: Self::DRIFT_RATE,
            volatility: Self::VOLATILITY,
            jump_scale: Self::JUMP_SCALE,
            intensity,
            marks: MarkDistribution::centered_unit(),
        }
    }

    /// d/dt E[X] under the particle dynamics.
    fn mean_velocity(&self, law: &LawView) -> f64 {
        let m1 = law.mean();
        2.0 * self.drift_rate * m1 + 2.0 * self.intensity * self.jump_scale * self.marks.mean() * m1
    }
}

impl Model for LinearInteraction {
    fn name(&self) -> &str {
        "example1"
    }

    fn partials(&self, coef: Coef, _t: f64, law_arg: f64, x: f64) -> Partials {
        match coef {
            Coef::Drift => Partials {
                value: self.drift_rate * (law_arg + x),
                d_x: self.drift_rate,
                d_law: self.drift_rate,
                ..Partials::ZERO
            },
            Coef::Diffusion => Partials {
                value: self.volatility * x,
                d_x: self.volatility,
                ..Partials::ZERO
            },
            Coef::Jump(e) => {
                let k = self.jump_scale * e;
                Partials {
                    value: k * (law_arg + x),
                    d_x: k,
                    d_law: k,
                    ..Partials::ZERO
                }
            }
        }
    }

    fn intensity(&self) -> f64 {
        self.intensity
    }

    fn marks(&self) -> &MarkDistribution {
        &self.marks
    }

    fn compensator(&self) -> Compensator {
        Compensator::AffineInMark
    }

    fn law_access(&self) -> LawAccess {
        LawAccess::Moments
    }

    fn mean_field(&self, coef: Coef, _t: f64, law: &LawView, x: f64) -> Result<MeanField> {
        let m1 = law.mean();
        Ok(match coef {
            Coef::Drift => MeanField {
                value: self.drift_rate * (m1 + x),
                d_x: self.drift_rate,
                d_xx: 0.0,
            },
            Coef::Diffusion => MeanField {
                value: self.volatility * x,
                d_x: self.volatility,
                d_xx: 0.0,
            },
            Coef::Jump(e) => {
                let k = self.jump_scale * e;
                MeanField {
                    value: k * (m1 + x),
                    d_x: k,
                    d_xx: 0.0,
                }
            }
        })
    }

    fn law_derivative(&self, coef: Coef, _t: f64, law: &LawView, _x: f64) -> Result<f64> {
        let v = self.mean_velocity(law);
        Ok(match coef {
            Coef::Drift => self.drift_rate * v,
            Coef::Diffusion => 0.0,
            Coef::Jump(e) => self.jump_scale * e * v,
        })
    }
}

/// `sign(x) |x|^(5/3)`, the odd extension of `x^(5/3)`.
#[inline]
pub fn signed_power(x: f64) -> f64 {
    x.signum() * x.abs().powf(5.0 / 3.0)
}

/// Superlinear interaction with `λ̇`-dependent scalings
/// `dX = (X^(5/3) + 2λ̇² E[X']) dt + ½ E[X'] dW + ∫ κ e (X + E[X'²]) μ(de, dt)`,
/// `κ = 1 / (2 (1 + λ̇²))`, where `X'` follows the law started from `x0`.
///
/// Snapshot extras: `E[sign(X)|X|^(5/3)]` and `E[|X|^(8/3)]`.
#[derive(Clone, Debug)]
pub struct SuperlinearInteraction {
    pub intensity: f64,
    pub marks: MarkDistribution,
}

impl SuperlinearInteraction {
    pub fn new(intensity: f64) -> Self {
        SuperlinearInteraction {
            intensity,
            marks: MarkDistribution::centered_unit(),
        }
    }

    pub fn jump_scale(&self) -> f64 {
        0.5 / (1.0 + self.intensity * self.intensity)
    }

    fn law_coupling(&self) -> f64 {
        2.0 * self.intensity * self.intensity
    }

    /// d/dt E[X] under the particle dynamics.
    fn mean_velocity(&self, law: &LawView) -> f64 {
        let (m1, m2) = (law.mean(), law.second_moment());
        law.extra(0) + self.law_coupling() * m1 + self.intensity * self.jump_scale() * self.marks.mean() * (m1 + m2)
    }
}

impl Model for SuperlinearInteraction {
    fn name(&self) -> &str {
        "example2"
    }

    fn partials(&self, coef: Coef, _t: f64, law_arg: f64, x: f64) -> Partials {
        match coef {
            Coef::Drift => {
                let curvature = if x == 0.0 {
                    0.0
                } else {
                    10.0 / 9.0 * x.signum() * x.abs().powf(-1.0 / 3.0)
                };
                Partials {
                    value: signed_power(x) + self.law_coupling() * law_arg,
                    d_x: 5.0 / 3.0 * x.abs().powf(2.0 / 3.0),
                    d_xx: curvature,
                    d_law: self.law_coupling(),
                    ..Partials::ZERO
                }
            }
            Coef::Diffusion => Partials {
                value: 0.5 * law_arg,
                d_law: 0.5,
                ..Partials::ZERO
            },
            Coef::Jump(e) => {
                let k = self.jump_scale() * e;
                Partials {
                    value: k * (x + law_arg * law_arg),
                    d_x: k,
                    d_law: 2.0 * k * law_arg,
                    d_law2: 2.0 * k,
                    ..Partials::ZERO
                }
            }
        }
    }

    fn intensity(&self) -> f64 {
        self.intensity
    }

    fn marks(&self) -> &MarkDistribution {
        &self.marks
    }

    fn compensator(&self) -> Compensator {
        Compensator::AffineInMark
    }

    fn law_access(&self) -> LawAccess {
        LawAccess::Moments
    }

    fn law_extras(&self, states: &[f64]) -> Vec<f64> {
        let n = states.len() as f64;
        vec![
            compensated_sum(states.iter().map(|&x| signed_power(x))) / n,
            compensated_sum(states.iter().map(|&x| x.abs().powf(8.0 / 3.0))) / n,
        ]
    }

    fn mean_field(&self, coef: Coef, t: f64, law: &LawView, x: f64) -> Result<MeanField> {
        let (m1, m2) = (law.mean(), law.second_moment());
        Ok(match coef {
            Coef::Drift => {
                let p = self.partials(coef, t, m1, x);
                MeanField {
                    value: signed_power(x) + self.law_coupling() * m1,
                    d_x: p.d_x,
                    d_xx: p.d_xx,
                }
            }
            Coef::Diffusion => MeanField {
                value: 0.5 * m1,
                d_x: 0.0,
                d_xx: 0.0,
            },
            Coef::Jump(e) => {
                let k = self.jump_scale() * e;
                MeanField {
                    value: k * (x + m2),
                    d_x: k,
                    d_xx: 0.0,
                }
            }
        })
    }

    fn law_derivative(&self, coef: Coef, _t: f64, law: &LawView, _x: f64) -> Result<f64> {
        let v = self.mean_velocity(law);
        Ok(match coef {
            Coef::Drift => self.law_coupling() * v,
            Coef::Diffusion => 0.5 * v,
            Coef::Jump(e) => {
                let (m1, m2) = (law.mean(), law.second_moment());
                let (rate, kappa) = (self.intensity, self.jump_scale());
                let (mu1, mu2) = (self.marks.mean(), self.marks.second_moment());
                // d/dt E[X²] under the particle dynamics
                let second = 2.0 * (law.extra(1) + self.law_coupling() * m1 * m1)
                    + 0.25 * m1 * m1
                    + rate
                        * (2.0 * kappa * mu1 * (m2 + m1 * m2)
                            + kappa * kappa * mu2 * (m2 + 2.0 * m1 * m2 + m2 * m2));
                kappa * e * second
            }
        })
    }
}
