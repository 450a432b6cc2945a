//! Coefficients of a mean-field SDE with jumps and the mean-field Itô operators.
//!
//! A model supplies point evaluations `f(t, x', x)` of its drift, diffusion and
//! jump coefficients together with their partial derivatives. The second
//! argument `x'` is the law argument: the mean-field coefficient at `x` is the
//! average of `f(t, x', x)` over `x'` drawn from the current law. The law is
//! passed around as an immutable [`LawView`].
//!
//! The default mean-field evaluations in [`Model`] are plain ensemble averages
//! and need the particle array. Models whose law dependence runs through a few
//! moments override them with closed forms; see [`builtin`].

pub mod builtin;
mod custom;

use std::fmt;
use std::sync::Arc;

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::noise::MarkDistribution;
use crate::stats::{compensated_sum, CompensatedSum};

pub use custom::CustomModel;

/// Which coefficient is evaluated. Jump coefficients carry their mark.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coef {
    Drift,
    Diffusion,
    Jump(f64),
}

impl Coef {
    pub fn kind(self) -> CoefKind {
        match self {
            Coef::Drift => CoefKind::Drift,
            Coef::Diffusion => CoefKind::Diffusion,
            Coef::Jump(_) => CoefKind::Jump,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CoefKind {
    Drift,
    Diffusion,
    Jump,
}

impl CoefKind {
    const ALL: [CoefKind; 3] = [CoefKind::Drift, CoefKind::Diffusion, CoefKind::Jump];

    fn symbol(self) -> &'static str {
        match self {
            CoefKind::Drift => "b",
            CoefKind::Diffusion => "sigma",
            CoefKind::Jump => "c",
        }
    }
}

/// A partial derivative of a coefficient `f(t, x', x)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Partial {
    Time,
    State,
    StateState,
    Law,
    LawLaw,
}

impl Partial {
    const ALL: [Partial; 5] = [
        Partial::Time,
        Partial::State,
        Partial::StateState,
        Partial::Law,
        Partial::LawLaw,
    ];

    fn suffix(self) -> &'static str {
        match self {
            Partial::Time => "t",
            Partial::State => "x",
            Partial::StateState => "xx",
            Partial::Law => "x'",
            Partial::LawLaw => "x'x'",
        }
    }
}

/// One required derivative, printed as e.g. `sigma_x` or `b_x'x'`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Derivative {
    pub coef: CoefKind,
    pub partial: Partial,
}

impl fmt::Display for Derivative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.coef.symbol(), self.partial.suffix())
    }
}

/// Set of derivatives a model can evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct DerivativeSet(u16);

impl DerivativeSet {
    fn bit(d: Derivative) -> u16 {
        let c = CoefKind::ALL.iter().position(|&k| k == d.coef).unwrap_or(0);
        let p = Partial::ALL.iter().position(|&k| k == d.partial).unwrap_or(0);
        1 << (c * 5 + p)
    }

    pub fn none() -> Self {
        DerivativeSet(0)
    }

    pub fn all() -> Self {
        DerivativeSet((1 << 15) - 1)
    }

    pub fn with(mut self, coef: CoefKind, partials: &[Partial]) -> Self {
        for &partial in partials {
            self.0 |= Self::bit(Derivative { coef, partial });
        }
        self
    }

    pub fn contains(&self, d: Derivative) -> bool {
        self.0 & Self::bit(d) != 0
    }

    /// Members of `required` absent from `self`, in the order given.
    pub fn missing(&self, required: &[Derivative]) -> Vec<Derivative> {
        required.iter().copied().filter(|d| !self.contains(*d)).collect()
    }
}

/// Checks that `model` provides `required`, naming `context` in the error.
pub fn require(model: &(impl Model + ?Sized), context: &str, required: &[Derivative]) -> Result<()> {
    let missing = model.provided().missing(required);
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::MissingDerivatives {
            scheme: context.to_string(),
            missing: missing.iter().map(ToString::to_string).collect(),
        })
    }
}

/// Every partial of one coefficient, used by the `L⁰` operator.
pub fn full_suite(coef: CoefKind) -> [Derivative; 5] {
    Partial::ALL.map(|partial| Derivative { coef, partial })
}

/// Point values of `f(t, x', x)` and its partials. Entries a model does not
/// provide are NaN.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Partials {
    pub value: f64,
    pub d_t: f64,
    pub d_x: f64,
    pub d_xx: f64,
    pub d_law: f64,
    pub d_law2: f64,
}

impl Partials {
    pub const ZERO: Partials = Partials {
        value: 0.0,
        d_t: 0.0,
        d_x: 0.0,
        d_xx: 0.0,
        d_law: 0.0,
        d_law2: 0.0,
    };

    pub fn constant(value: f64) -> Self {
        Partials { value, ..Self::ZERO }
    }

    /// Only the value is known.
    pub fn value_only(value: f64) -> Self {
        Partials {
            value,
            d_t: f64::NAN,
            d_x: f64::NAN,
            d_xx: f64::NAN,
            d_law: f64::NAN,
            d_law2: f64::NAN,
        }
    }
}

/// Mean-field value `f^X(t, x)` with its first two state derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanField {
    pub value: f64,
    pub d_x: f64,
    pub d_xx: f64,
}

/// How `E_F[c(t, x', x, e)]` is computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Compensator {
    /// `c` is affine in the mark, so two evaluations and `E[e]` suffice.
    AffineInMark,
    /// Fixed-node quadrature over the mark law.
    Quadrature,
    Unavailable,
}

/// What a model reads from a law snapshot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LawAccess {
    /// Mean, second moment and the model's own extras.
    Moments,
    /// The particle array itself.
    Full,
}

/// Frozen empirical law of the particle system at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct LawView {
    time: f64,
    count: usize,
    mean: f64,
    second_moment: f64,
    extras: SmallVec<[f64; 4]>,
    states: Option<Arc<[f64]>>,
}

impl LawView {
    /// Snapshot of `states`, keeping the particle array only if `model` asks
    /// for it.
    pub fn new(model: &(impl Model + ?Sized), time: f64, states: &[f64]) -> Result<Self> {
        Self::build(model, time, states, model.law_access() == LawAccess::Full)
    }

    /// Snapshot that always keeps the particle array.
    pub fn full(model: &(impl Model + ?Sized), time: f64, states: &[f64]) -> Result<Self> {
        Self::build(model, time, states, true)
    }

    fn build(model: &(impl Model + ?Sized), time: f64, states: &[f64], keep: bool) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::invalid("a law snapshot needs at least one particle"));
        }
        let n = states.len() as f64;
        let mut first = CompensatedSum::new();
        let mut second = CompensatedSum::new();
        for &x in states {
            first.add(x);
            second.add(x * x);
        }
        Ok(LawView {
            time,
            count: states.len(),
            mean: first.value() / n,
            second_moment: second.value() / n,
            extras: model.law_extras(states).into(),
            states: keep.then(|| Arc::from(states)),
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// E[X]
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// E[X²]
    pub fn second_moment(&self) -> f64 {
        self.second_moment
    }

    pub fn extra(&self, i: usize) -> f64 {
        self.extras.get(i).copied().unwrap_or(f64::NAN)
    }

    pub fn extras(&self) -> &[f64] {
        &self.extras
    }

    pub fn particles(&self) -> Result<&[f64]> {
        self.states
            .as_deref()
            .ok_or_else(|| Error::invalid("law snapshot holds moments only"))
    }
}

/// A scalar mean-field SDE with jumps.
///
/// `partials` must be total on the state range the model is run on. Growth
/// and Lipschitz conditions are the author's responsibility.
pub trait Model: Send + Sync {
    fn name(&self) -> &str;

    /// Point evaluation of one coefficient at `(t, law_arg, x)`.
    fn partials(&self, coef: Coef, t: f64, law_arg: f64, x: f64) -> Partials;

    fn provided(&self) -> DerivativeSet {
        DerivativeSet::all()
    }

    /// λ̇ = λ(E), the total jump rate.
    fn intensity(&self) -> f64;

    fn marks(&self) -> &MarkDistribution;

    fn compensator(&self) -> Compensator {
        Compensator::Quadrature
    }

    fn law_access(&self) -> LawAccess {
        LawAccess::Full
    }

    /// Additional law statistics stored in every snapshot.
    fn law_extras(&self, _states: &[f64]) -> Vec<f64> {
        Vec::new()
    }

    /// `f^X(t, x)` and its state derivatives for one coefficient.
    fn mean_field(&self, coef: Coef, t: f64, law: &LawView, x: f64) -> Result<MeanField> {
        ensemble_mean_field(&|t, y, x| self.partials(coef, t, y, x), t, law, x)
    }

    /// `∂/∂s E[f(s, X_s, x)]` at `s = t` for one coefficient, with `X` the
    /// particle process driven by this model.
    fn law_derivative(&self, coef: Coef, t: f64, law: &LawView, x: f64) -> Result<f64> {
        ensemble_law_derivative(self, &|t, y, x| self.partials(coef, t, y, x), t, law, x)
    }
}

/// An arbitrary `f(t, x', x)` the operators can be applied to.
pub type PointFn<'a> = &'a (dyn Fn(f64, f64, f64) -> Partials + Sync);

/// Operand of the mean-field operators.
#[derive(Clone, Copy)]
pub enum Integrand<'a> {
    Coef(Coef),
    Custom(PointFn<'a>),
}

impl From<Coef> for Integrand<'_> {
    fn from(c: Coef) -> Self {
        Integrand::Coef(c)
    }
}

/// Ensemble average of `f` and its state derivatives over the particles.
pub fn ensemble_mean_field(f: PointFn<'_>, t: f64, law: &LawView, x: f64) -> Result<MeanField> {
    let states = law.particles()?;
    let n = states.len() as f64;
    let (mut v, mut dx, mut dxx) = (CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new());
    for &y in states {
        let p = f(t, y, x);
        v.add(p.value);
        dx.add(p.d_x);
        dxx.add(p.d_xx);
    }
    Ok(MeanField {
        value: v.value() / n,
        d_x: dx.value() / n,
        d_xx: dxx.value() / n,
    })
}

/// Generic `∂/∂s E[f(s, X_s, x)]`: for each particle `y` the generator of the
/// particle dynamics applied to `f(t, ·, x)`, averaged over the ensemble.
/// The drift is the uncompensated `b^X`; the jump part is integrated over the
/// mark law by quadrature.
pub fn ensemble_law_derivative<M: Model + ?Sized>(
    model: &M,
    f: PointFn<'_>,
    t: f64,
    law: &LawView,
    x: f64,
) -> Result<f64> {
    let states = law.particles()?;
    let rate = model.intensity();
    let mut total = CompensatedSum::new();
    for &y in states {
        let p = f(t, y, x);
        let drift = model.mean_field(Coef::Drift, t, law, y)?.value;
        let diffusion = model.mean_field(Coef::Diffusion, t, law, y)?.value;
        let mut term = p.d_t + p.d_law * drift + 0.5 * p.d_law2 * diffusion * diffusion;
        if rate > 0.0 {
            let jump = mark_expectation(model, |e| {
                let shift = model.mean_field(Coef::Jump(e), t, law, y)?.value;
                Ok(f(t, y + shift, x).value - p.value)
            })?;
            term += rate * jump;
        }
        total.add(term);
    }
    Ok(total.value() / states.len() as f64)
}

fn operand_mean_field<M: Model + ?Sized>(
    model: &M,
    f: Integrand<'_>,
    t: f64,
    law: &LawView,
    x: f64,
) -> Result<MeanField> {
    match f {
        Integrand::Coef(c) => model.mean_field(c, t, law, x),
        Integrand::Custom(g) => ensemble_mean_field(g, t, law, x),
    }
}

fn check_operand<M: Model + ?Sized>(model: &M, f: Integrand<'_>, context: &str, partials: &[Partial]) -> Result<()> {
    if let Integrand::Coef(c) = f {
        let required: Vec<_> = partials
            .iter()
            .map(|&partial| Derivative {
                coef: c.kind(),
                partial,
            })
            .collect();
        require(model, context, &required)?;
    }
    Ok(())
}

/// `f^X(t, x) = E[f(t, X', x)]`.
pub fn mf_eval<M: Model + ?Sized>(model: &M, f: Integrand<'_>, t: f64, law: &LawView, x: f64) -> Result<f64> {
    Ok(operand_mean_field(model, f, t, law, x)?.value)
}

/// `λ̇ E_F[c^X(t, x, e)]`.
pub fn jump_compensator<M: Model + ?Sized>(model: &M, t: f64, law: &LawView, x: f64) -> Result<f64> {
    let rate = model.intensity();
    if rate == 0.0 {
        return Ok(0.0);
    }
    let expected = match model.compensator() {
        Compensator::AffineInMark => {
            let at_zero = model.mean_field(Coef::Jump(0.0), t, law, x)?.value;
            let at_one = model.mean_field(Coef::Jump(1.0), t, law, x)?.value;
            at_zero + model.marks().mean() * (at_one - at_zero)
        }
        Compensator::Quadrature => mark_expectation(model, |e| {
            Ok(model.mean_field(Coef::Jump(e), t, law, x)?.value)
        })?,
        Compensator::Unavailable => {
            return Err(Error::config(format!(
                "model {} declares no jump compensator",
                model.name()
            )))
        }
    };
    Ok(rate * expected)
}

/// `b̃^X(t, x) = b^X(t, x) + λ̇ E_F[c^X(t, x, e)]`.
pub fn compensated_drift<M: Model + ?Sized>(model: &M, t: f64, law: &LawView, x: f64) -> Result<f64> {
    let drift = model.mean_field(Coef::Drift, t, law, x)?.value;
    Ok(drift + jump_compensator(model, t, law, x)?)
}

/// `L¹f = (∂x f)^X σ^X`.
pub fn op_l1<M: Model + ?Sized>(model: &M, f: Integrand<'_>, t: f64, law: &LawView, x: f64) -> Result<f64> {
    check_operand(model, f, "L1", &[Partial::State])?;
    let grad = operand_mean_field(model, f, t, law, x)?.d_x;
    let diffusion = model.mean_field(Coef::Diffusion, t, law, x)?.value;
    Ok(grad * diffusion)
}

/// `L_e⁻¹f = f^X(t, x + c^X(t, x, e)) − f^X(t, x)` against one frozen law.
pub fn op_lminus1<M: Model + ?Sized>(
    model: &M,
    f: Integrand<'_>,
    t: f64,
    law: &LawView,
    x: f64,
    mark: f64,
) -> Result<f64> {
    let shift = model.mean_field(Coef::Jump(mark), t, law, x)?.value;
    let after = operand_mean_field(model, f, t, law, x + shift)?.value;
    let before = operand_mean_field(model, f, t, law, x)?.value;
    Ok(after - before)
}

/// `L⁰f = ∂s f^X + (∂x f)^X b^X + ½ (∂xx f)^X (σ^X)²`.
pub fn op_l0<M: Model + ?Sized>(model: &M, f: Integrand<'_>, t: f64, law: &LawView, x: f64) -> Result<f64> {
    check_operand(model, f, "L0", &Partial::ALL)?;
    let mf = operand_mean_field(model, f, t, law, x)?;
    let law_term = match f {
        Integrand::Coef(c) => model.law_derivative(c, t, law, x)?,
        Integrand::Custom(g) => ensemble_law_derivative(model, g, t, law, x)?,
    };
    let drift = model.mean_field(Coef::Drift, t, law, x)?.value;
    let diffusion = model.mean_field(Coef::Diffusion, t, law, x)?.value;
    Ok(law_term + mf.d_x * drift + 0.5 * mf.d_xx * diffusion * diffusion)
}

/// `L̃⁰f = L⁰f + λ̇ E_F[L_e⁻¹f]`.
pub fn op_l0_tilde<M: Model + ?Sized>(model: &M, f: Integrand<'_>, t: f64, law: &LawView, x: f64) -> Result<f64> {
    let base = op_l0(model, f, t, law, x)?;
    let rate = model.intensity();
    if rate == 0.0 {
        return Ok(base);
    }
    let jumps = mark_expectation(model, |e| op_lminus1(model, f, t, law, x, e))?;
    Ok(base + rate * jumps)
}

/// `E_F[g(e)]` by the fixed mark quadrature, stopping at the first error.
fn mark_expectation<M: Model + ?Sized>(
    model: &M,
    mut g: impl FnMut(f64) -> Result<f64>,
) -> Result<f64> {
    let mut failure = None;
    let value = model.marks().expect(|e| match g(e) {
        Ok(v) => v,
        Err(err) => {
            failure.get_or_insert(err);
            0.0
        }
    });
    match failure {
        Some(err) => Err(err),
        None => Ok(value),
    }
}

/// Mean of `f(x)` over the particles of `law`, in particle order.
pub fn particle_average(law: &LawView, f: impl Fn(f64) -> f64) -> Result<f64> {
    let states = law.particles()?;
    Ok(compensated_sum(states.iter().map(|&y| f(y))) / states.len() as f64)
}
