use std::fmt;

use super::{Coef, Compensator, DerivativeSet, LawAccess, Model, Partials};
use crate::noise::MarkDistribution;

type CoefFn = Box<dyn Fn(f64, f64, f64) -> Partials + Send + Sync>;
type JumpFn = Box<dyn Fn(f64, f64, f64, f64) -> Partials + Send + Sync>;

/// A model assembled from closures. Mean-field terms are ensemble averages.
///
/// Every closure receives `(t, law_arg, x)`; the jump closure gets the mark
/// last.
pub struct CustomModel {
    name: String,
    drift: CoefFn,
    diffusion: CoefFn,
    jump: JumpFn,
    intensity: f64,
    marks: MarkDistribution,
    provided: DerivativeSet,
    compensator: Compensator,
}

impl CustomModel {
    /// All coefficients zero, no jumps, every derivative provided.
    pub fn new(name: impl Into<String>) -> Self {
        CustomModel {
            name: name.into(),
            drift: Box::new(|_, _, _| Partials::ZERO),
            diffusion: Box::new(|_, _, _| Partials::ZERO),
            jump: Box::new(|_, _, _, _| Partials::ZERO),
            intensity: 0.0,
            marks: MarkDistribution::centered_unit(),
            provided: DerivativeSet::all(),
            compensator: Compensator::Quadrature,
        }
    }

    pub fn drift(mut self, f: impl Fn(f64, f64, f64) -> Partials + Send + Sync + 'static) -> Self {
        self.drift = Box::new(f);
        self
    }

    pub fn diffusion(mut self, f: impl Fn(f64, f64, f64) -> Partials + Send + Sync + 'static) -> Self {
        self.diffusion = Box::new(f);
        self
    }

    pub fn jump(mut self, f: impl Fn(f64, f64, f64, f64) -> Partials + Send + Sync + 'static) -> Self {
        self.jump = Box::new(f);
        self
    }

    pub fn jumps(mut self, intensity: f64, marks: MarkDistribution) -> Self {
        self.intensity = intensity;
        self.marks = marks;
        self
    }

    pub fn provided(mut self, provided: DerivativeSet) -> Self {
        self.provided = provided;
        self
    }

    pub fn compensator(mut self, compensator: Compensator) -> Self {
        self.compensator = compensator;
        self
    }
}

impl fmt::Debug for CustomModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomModel")
            .field("name", &self.name)
            .field("intensity", &self.intensity)
            .field("marks", &self.marks)
            .finish_non_exhaustive()
    }
}

impl Model for CustomModel {
    fn name(&self) -> &str {
        &self.name
    }

    fn partials(&self, coef: Coef, t: f64, law_arg: f64, x: f64) -> Partials {
        match coef {
            Coef::Drift => (self.drift)(t, law_arg, x),
            Coef::Diffusion => (self.diffusion)(t, law_arg, x),
            Coef::Jump(e) => (self.jump)(t, law_arg, x, e),
        }
    }

    fn provided(&self) -> DerivativeSet {
        self.provided
    }

    fn intensity(&self) -> f64 {
        self.intensity
    }

    fn marks(&self) -> &MarkDistribution {
        &self.marks
    }

    fn compensator(&self) -> Compensator {
        self.compensator
    }

    fn law_access(&self) -> LawAccess {
        LawAccess::Full
    }
}
