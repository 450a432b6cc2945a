//! One-step maps of the Euler, strong order 1.0 and weak order 2.0 Itô-Taylor
//! schemes, written with explicit sums over the jumps inside a step.
//!
//! All coefficients are frozen at the start of the step: time `t_k`, state
//! `x` and the law snapshot taken at `t_k`. Each step returns its individual
//! Taylor terms so that identities between the schemes can be asserted term
//! by term.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{
    compensated_drift, full_suite, jump_compensator, require, Coef, CoefKind, Compensator, Derivative, LawView,
    MeanField, Model, Partial,
};
use crate::noise::StepContext;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    Euler,
    Strong1,
    Weak2,
    CompensatedEuler,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [
        SchemeKind::Euler,
        SchemeKind::Strong1,
        SchemeKind::Weak2,
        SchemeKind::CompensatedEuler,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Euler => "euler",
            SchemeKind::Strong1 => "strong1",
            SchemeKind::Weak2 => "weak2",
            SchemeKind::CompensatedEuler => "compensated_euler",
        }
    }

    /// Derivatives the step evaluates.
    pub fn required_derivatives(self) -> Vec<Derivative> {
        match self {
            SchemeKind::Euler | SchemeKind::CompensatedEuler => Vec::new(),
            SchemeKind::Strong1 => vec![
                Derivative {
                    coef: CoefKind::Diffusion,
                    partial: Partial::State,
                },
                Derivative {
                    coef: CoefKind::Jump,
                    partial: Partial::State,
                },
            ],
            SchemeKind::Weak2 => [CoefKind::Drift, CoefKind::Diffusion, CoefKind::Jump]
                .into_iter()
                .flat_map(full_suite)
                .collect(),
        }
    }

    /// Fails if `model` cannot be stepped by this scheme.
    pub fn check(self, model: &(impl Model + ?Sized)) -> Result<()> {
        require(model, self.name(), &self.required_derivatives())?;
        if self == SchemeKind::CompensatedEuler
            && model.intensity() > 0.0
            && model.compensator() == Compensator::Unavailable
        {
            return Err(Error::config(format!(
                "compensated_euler needs a jump compensator, model {} has none",
                model.name()
            )));
        }
        Ok(())
    }

    /// Advances `x` over the step described by `ctx`. Call [`SchemeKind::check`]
    /// once beforehand; missing derivatives otherwise show up as NaN.
    pub fn step<M: Model + ?Sized>(self, model: &M, law: &LawView, x: f64, ctx: &StepContext) -> Result<StepResult> {
        match self {
            SchemeKind::Euler => euler_step(model, law, x, ctx),
            SchemeKind::Strong1 => strong1_step(model, law, x, ctx),
            SchemeKind::Weak2 => weak2_step(model, law, x, ctx),
            SchemeKind::CompensatedEuler => compensated_euler_step(model, law, x, ctx),
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::config(format!("unknown scheme {s:?} (euler, strong1, weak2, compensated_euler)")))
    }
}

/// Individual Taylor terms of one step. Terms a scheme does not use are 0.
///
/// Names read in integration order: `jump_then_brownian` integrates against
/// the jump measure first and the Brownian motion second.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Terms {
    pub drift: f64,
    pub diffusion: f64,
    pub jumps: f64,
    /// `−λ̇ E_F[c] Δt`, compensated Euler only.
    pub compensator: f64,
    pub brownian_brownian: f64,
    pub brownian_then_jump: f64,
    pub jump_then_brownian: f64,
    pub jump_jump: f64,
    pub time_time: f64,
    pub brownian_then_time: f64,
    pub time_then_brownian: f64,
    pub time_then_jump: f64,
    pub jump_then_time: f64,
}

impl Terms {
    pub fn as_array(&self) -> [f64; 13] {
        [
            self.drift,
            self.diffusion,
            self.jumps,
            self.compensator,
            self.brownian_brownian,
            self.brownian_then_jump,
            self.jump_then_brownian,
            self.jump_jump,
            self.time_time,
            self.brownian_then_time,
            self.time_then_brownian,
            self.time_then_jump,
            self.jump_then_time,
        ]
    }

    /// Sum in field order.
    pub fn total(&self) -> f64 {
        self.as_array().iter().sum()
    }

    /// Keeps the Euler terms only.
    pub fn euler_part(&self) -> Terms {
        Terms {
            drift: self.drift,
            diffusion: self.diffusion,
            jumps: self.jumps,
            ..Terms::default()
        }
    }

    /// Keeps the terms of the strong order 1.0 scheme.
    pub fn strong1_part(&self) -> Terms {
        Terms {
            brownian_brownian: self.brownian_brownian,
            brownian_then_jump: self.brownian_then_jump,
            jump_then_brownian: self.jump_then_brownian,
            jump_jump: self.jump_jump,
            ..self.euler_part()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepResult {
    pub next: f64,
    pub terms: Terms,
}

impl StepResult {
    fn assemble(x: f64, terms: Terms) -> Self {
        StepResult {
            next: x + terms.total(),
            terms,
        }
    }
}

struct Frozen<'a, M: ?Sized> {
    model: &'a M,
    law: &'a LawView,
    t: f64,
}

impl<M: Model + ?Sized> Frozen<'_, M> {
    fn eval(&self, coef: Coef, x: f64) -> Result<MeanField> {
        self.model.mean_field(coef, self.t, self.law, x)
    }

    fn value(&self, coef: Coef, x: f64) -> Result<f64> {
        Ok(self.eval(coef, x)?.value)
    }

    /// L⁰ of one coefficient, from its already evaluated mean field.
    fn l0(&self, coef: Coef, x: f64, f: &MeanField, drift: f64, diffusion: f64) -> Result<f64> {
        let law_term = self.model.law_derivative(coef, self.t, self.law, x)?;
        Ok(law_term + f.d_x * drift + 0.5 * f.d_xx * diffusion * diffusion)
    }
}

fn frozen<'a, M: Model + ?Sized>(model: &'a M, law: &'a LawView, ctx: &StepContext) -> Frozen<'a, M> {
    Frozen {
        model,
        law,
        t: ctx.t,
    }
}

/// `x + b Δt + σ ΔW + Σ c(Y_i)`.
pub fn euler_step<M: Model + ?Sized>(model: &M, law: &LawView, x: f64, ctx: &StepContext) -> Result<StepResult> {
    let f = frozen(model, law, ctx);
    let mut terms = Terms {
        drift: f.value(Coef::Drift, x)? * ctx.dt,
        diffusion: f.value(Coef::Diffusion, x)? * ctx.dw,
        ..Terms::default()
    };
    for j in &ctx.jumps {
        terms.jumps += f.value(Coef::Jump(j.mark), x)?;
    }
    Ok(StepResult::assemble(x, terms))
}

/// Euler written with the compensated drift and the compensated jump measure.
pub fn compensated_euler_step<M: Model + ?Sized>(
    model: &M,
    law: &LawView,
    x: f64,
    ctx: &StepContext,
) -> Result<StepResult> {
    let f = frozen(model, law, ctx);
    let mut terms = Terms {
        drift: compensated_drift(model, ctx.t, law, x)? * ctx.dt,
        diffusion: f.value(Coef::Diffusion, x)? * ctx.dw,
        compensator: -jump_compensator(model, ctx.t, law, x)? * ctx.dt,
        ..Terms::default()
    };
    for j in &ctx.jumps {
        terms.jumps += f.value(Coef::Jump(j.mark), x)?;
    }
    Ok(StepResult::assemble(x, terms))
}

/// Strong order 1.0 terms on top of Euler. Returns the jump coefficients at
/// `x` for reuse.
fn strong1_terms<M: Model + ?Sized>(
    f: &Frozen<'_, M>,
    x: f64,
    ctx: &StepContext,
    drift: &MeanField,
    diffusion: &MeanField,
    terms: &mut Terms,
) -> Result<smallvec::SmallVec<[MeanField; 4]>> {
    terms.drift = drift.value * ctx.dt;
    terms.diffusion = diffusion.value * ctx.dw;
    terms.brownian_brownian = 0.5 * diffusion.d_x * diffusion.value * (ctx.dw * ctx.dw - ctx.dt);
    let mut shifts = smallvec::SmallVec::<[MeanField; 4]>::new();
    for (i, j) in ctx.jumps.iter().enumerate() {
        let c = f.eval(Coef::Jump(j.mark), x)?;
        terms.jumps += c.value;
        terms.brownian_then_jump += c.d_x * diffusion.value * j.dw_before;
        let moved = f.value(Coef::Diffusion, x + c.value)?;
        terms.jump_then_brownian += (moved - diffusion.value) * (ctx.dw - j.dw_before);
        for earlier in &shifts[..i] {
            terms.jump_jump += f.value(Coef::Jump(j.mark), x + earlier.value)? - c.value;
        }
        shifts.push(c);
    }
    Ok(shifts)
}

pub fn strong1_step<M: Model + ?Sized>(model: &M, law: &LawView, x: f64, ctx: &StepContext) -> Result<StepResult> {
    let f = frozen(model, law, ctx);
    let drift = f.eval(Coef::Drift, x)?;
    let diffusion = f.eval(Coef::Diffusion, x)?;
    let mut terms = Terms::default();
    strong1_terms(&f, x, ctx, &drift, &diffusion, &mut terms)?;
    Ok(StepResult::assemble(x, terms))
}

pub fn weak2_step<M: Model + ?Sized>(model: &M, law: &LawView, x: f64, ctx: &StepContext) -> Result<StepResult> {
    let f = frozen(model, law, ctx);
    let drift = f.eval(Coef::Drift, x)?;
    let diffusion = f.eval(Coef::Diffusion, x)?;
    let mut terms = Terms::default();
    let shifts = strong1_terms(&f, x, ctx, &drift, &diffusion, &mut terms)?;

    let (b, s) = (drift.value, diffusion.value);
    let l0_drift = f.l0(Coef::Drift, x, &drift, b, s)?;
    let l0_diffusion = f.l0(Coef::Diffusion, x, &diffusion, b, s)?;
    terms.time_time = 0.5 * l0_drift * ctx.dt * ctx.dt;
    terms.brownian_then_time = drift.d_x * s * ctx.dz;
    terms.time_then_brownian = l0_diffusion * (ctx.dw * ctx.dt - ctx.dz);
    let end = ctx.end();
    for (j, c) in ctx.jumps.iter().zip(&shifts) {
        let coef = Coef::Jump(j.mark);
        terms.time_then_jump += f.l0(coef, x, c, b, s)? * (j.time - ctx.t);
        terms.jump_then_time += (f.value(Coef::Drift, x + c.value)? - b) * (end - j.time);
    }
    Ok(StepResult::assemble(x, terms))
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use smallvec::smallvec;

    use super::*;
    use crate::model::builtin::LinearInteraction;
    use crate::model::{CustomModel, DerivativeSet, Partials};
    use crate::noise::{JumpEvent, MarkDistribution};

    fn ex1_law(m: &LinearInteraction, at: f64) -> LawView {
        LawView::new(m, 0.0, &[at; 3]).unwrap()
    }

    fn ctx(dw: f64, jumps: &[(f64, f64, f64)]) -> StepContext {
        StepContext {
            t: 0.0,
            dt: 1.0 / 16.0,
            dw,
            dz: 0.5 * dw / 16.0,
            jumps: jumps
                .iter()
                .map(|&(time, mark, dw_before)| JumpEvent { time, mark, dw_before })
                .collect(),
        }
    }

    #[test]
    fn zero_model_is_the_identity() {
        let m = CustomModel::new("zero").jumps(2.0, MarkDistribution::centered_unit());
        let law = LawView::new(&m, 0.0, &[0.3]).unwrap();
        let c = ctx(0.2, &[(0.01, 0.3, 0.05)]);
        for kind in SchemeKind::ALL {
            assert_eq!(kind.step(&m, &law, 0.7, &c).unwrap().next, 0.7, "{kind}");
        }
    }

    #[test]
    fn euler_hand_values() {
        let m = LinearInteraction::standard(1.0);
        let law = ex1_law(&m, 0.1);
        let quiet = euler_step(&m, &law, 0.1, &ctx(0.05, &[])).unwrap();
        assert!((quiet.next - 0.119375).abs() < 1e-15);
        let jumped = euler_step(&m, &law, 0.1, &ctx(0.05, &[(0.03, 0.2, 0.01)])).unwrap();
        assert!((jumped.next - 0.129375).abs() < 1e-15);
    }

    #[test]
    fn strong1_hand_values() {
        let m = LinearInteraction::standard(1.0);
        let law = ex1_law(&m, 0.1);
        let quiet = strong1_step(&m, &law, 0.1, &ctx(0.05, &[])).unwrap();
        assert!((quiet.next - 0.1176875).abs() < 1e-15, "{}", quiet.next);
        let euler = euler_step(&m, &law, 0.1, &ctx(0.05, &[])).unwrap();
        assert_eq!(quiet.terms.euler_part(), euler.terms);

        let one = strong1_step(&m, &law, 0.1, &ctx(0.05, &[(0.03, 0.2, 0.01)])).unwrap();
        assert_eq!(one.terms.jump_jump, 0.0);
        // c = 0.25 · 0.2 · 0.2 = 0.01, σ_x σ = 0.075 · 0.75
        assert!((one.terms.brownian_then_jump - 0.05 * 0.075 * 0.01).abs() < 1e-17);
        assert!((one.terms.jump_then_brownian - 0.75 * 0.01 * 0.04).abs() < 1e-17);
    }

    #[test]
    fn double_jump_sum_runs_over_earlier_jumps() {
        let m = LinearInteraction::standard(1.0);
        let law = ex1_law(&m, 0.1);
        let c = ctx(0.0, &[(0.01, 0.2, 0.0), (0.02, -0.4, 0.0), (0.03, 0.1, 0.0)]);
        let r = strong1_step(&m, &law, 0.1, &c).unwrap();
        // c(x + c_j, Y_i) − c(x, Y_i) = k Y_i c_j for this model
        let k = 0.25;
        let cj = |y: f64| k * y * 0.2;
        let want = k * -0.4 * cj(0.2) + k * 0.1 * (cj(0.2) + cj(-0.4));
        assert!((r.terms.jump_jump - want).abs() < 1e-17);
    }

    #[test]
    fn weak2_of_constant_coefficients() {
        let (beta, s0) = (0.7, 0.3);
        let m = CustomModel::new("constant")
            .drift(move |_, _, _| Partials::constant(beta))
            .diffusion(move |_, _, _| Partials::constant(s0))
            .jumps(1.0, MarkDistribution::centered_unit());
        let law = LawView::new(&m, 0.0, &[0.0, 1.0]).unwrap();
        let c = ctx(0.12, &[(0.02, 0.3, 0.04)]);
        let r = weak2_step(&m, &law, 1.0, &c).unwrap();
        assert_eq!(r.next, 1.0 + (beta * c.dt + s0 * c.dw));
    }

    /// Law-free `b = sin x`, `σ = 0.5 + 0.2 cos x`, no jumps.
    fn classical_model() -> CustomModel {
        CustomModel::new("classical")
            .drift(|_, _, x: f64| Partials {
                value: x.sin(),
                d_x: x.cos(),
                d_xx: -x.sin(),
                ..Partials::ZERO
            })
            .diffusion(|_, _, x: f64| Partials {
                value: 0.5 + 0.2 * x.cos(),
                d_x: -0.2 * x.sin(),
                d_xx: -0.2 * x.cos(),
                ..Partials::ZERO
            })
    }

    #[test]
    fn weak2_matches_the_classical_diffusion_step() {
        let m = classical_model();
        let law = LawView::new(&m, 0.0, &[0.0]).unwrap();
        let (x, dt, dw) = (0.4f64, 0.1, -0.23);
        let c = StepContext::quiet(0.0, dt, dw, 0.5 * dw * dt);
        let r = weak2_step(&m, &law, x, &c).unwrap();
        let (a, a1, a2) = (x.sin(), x.cos(), -x.sin());
        let (b, b1, b2) = (0.5 + 0.2 * x.cos(), -0.2 * x.sin(), -0.2 * x.cos());
        let want = [
            a * dt,
            b * dw,
            0.5 * b * b1 * (dw * dw - dt),
            a1 * b * c.dz,
            0.5 * (a * a1 + 0.5 * a2 * b * b) * dt * dt,
            (a * b1 + 0.5 * b2 * b * b) * (dw * dt - c.dz),
        ];
        let got = [
            r.terms.drift,
            r.terms.diffusion,
            r.terms.brownian_brownian,
            r.terms.brownian_then_time,
            r.terms.time_time,
            r.terms.time_then_brownian,
        ];
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-15, "{g} vs {w}");
        }
        assert_eq!(r.next, x + want.iter().sum::<f64>());
    }

    #[test]
    fn weak2_hand_value_with_one_jump() {
        let (a, s, k) = (1.25, 0.75, 0.25);
        let m = LinearInteraction::standard(1.0);
        let (mean, x) = (0.3, 0.2);
        let law = LawView::new(&m, 0.0, &[0.1, 0.5]).unwrap();
        let (t, dt, dw, dz) = (0.25, 0.125, 0.1, 0.004);
        let (tau, y, w) = (0.3, -0.3, 0.06);
        let c = StepContext {
            t,
            dt,
            dw,
            dz,
            jumps: smallvec![JumpEvent {
                time: tau,
                mark: y,
                dw_before: w
            }],
        };
        let jump = k * y * (mean + x);
        let l0b = 2.0 * a * a * mean + a * a * (mean + x);
        let l0s = s * a * (mean + x);
        let l0c = k * y * 2.0 * a * mean + k * y * a * (mean + x);
        let hand = x
            + a * (mean + x) * dt
            + s * x * dw
            + jump
            + 0.5 * s * s * x * (dw * dw - dt)
            + k * y * s * x * w
            + s * jump * (dw - w)
            + 0.5 * l0b * dt * dt
            + a * s * x * dz
            + l0s * (dw * dt - dz)
            + l0c * (tau - t)
            + a * jump * (t + dt - tau);
        assert!((hand - 0.256_846_484_375).abs() < 1e-12, "{hand:.16}");
        let r = weak2_step(&m, &law, x, &c).unwrap();
        assert!((r.next - hand).abs() < 1e-15, "{} vs {hand}", r.next);
    }

    #[test]
    fn missing_derivatives_block_higher_schemes() {
        let m = CustomModel::new("values only").provided(DerivativeSet::none());
        assert!(SchemeKind::Euler.check(&m).is_ok());
        match SchemeKind::Strong1.check(&m) {
            Err(Error::MissingDerivatives { scheme, missing }) => {
                assert_eq!(scheme, "strong1");
                assert_eq!(missing, vec!["sigma_x", "c_x"]);
            }
            other => panic!("{other:?}"),
        }
        match SchemeKind::Weak2.check(&m) {
            Err(Error::MissingDerivatives { missing, .. }) => assert_eq!(missing.len(), 15),
            other => panic!("{other:?}"),
        }
        let opaque = CustomModel::new("opaque")
            .jumps(1.0, MarkDistribution::centered_unit())
            .compensator(Compensator::Unavailable);
        assert!(SchemeKind::CompensatedEuler.check(&opaque).is_err());
    }

    #[test]
    fn names_round_trip() {
        for kind in SchemeKind::ALL {
            assert_eq!(kind.name().parse::<SchemeKind>().unwrap(), kind);
        }
        assert!("milstein".parse::<SchemeKind>().is_err());
    }

    fn arb_context() -> impl Strategy<Value = StepContext> {
        (
            0.0f64..0.9,
            0.001f64..0.1,
            -0.5f64..0.5,
            -0.05f64..0.05,
            proptest::collection::vec((0.0f64..1.0, -0.5f64..0.5, -0.3f64..0.3), 0..4),
        )
            .prop_map(|(t, dt, dw, dz, raw)| {
                let mut raw = raw;
                raw.sort_by(|a, b| a.0.total_cmp(&b.0));
                let jumps = raw
                    .into_iter()
                    .enumerate()
                    .map(|(i, (u, mark, w))| JumpEvent {
                        time: t + dt * (u * 0.9 + 0.1 * i as f64 / 4.0).min(1.0),
                        mark,
                        dw_before: w,
                    })
                    .collect();
                StepContext { t, dt, dw, dz, jumps }
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn compensated_euler_is_euler(
            rate in 0.0f64..3.0,
            low in -1.0f64..0.0,
            width in 0.1f64..1.5,
            mean in -1.0f64..1.0,
            x in -2.0f64..2.0,
            c in arb_context(),
        ) {
            let m = LinearInteraction {
                marks: MarkDistribution::uniform(low, low + width).unwrap(),
                ..LinearInteraction::standard(rate)
            };
            let law = LawView::new(&m, c.t, &[mean - 0.1, mean + 0.1]).unwrap();
            let a = euler_step(&m, &law, x, &c).unwrap().next;
            let b = compensated_euler_step(&m, &law, x, &c).unwrap().next;
            prop_assert!((a - b).abs() <= 1e-13, "{a} vs {b}");
        }

        #[test]
        fn results_reassemble_from_terms(
            x in -2.0f64..2.0,
            mean in -1.0f64..1.0,
            c in arb_context(),
        ) {
            let m = LinearInteraction::standard(1.0);
            let law = LawView::new(&m, c.t, &[mean, mean + 0.3]).unwrap();
            for kind in SchemeKind::ALL {
                let r = kind.step(&m, &law, x, &c).unwrap();
                prop_assert_eq!(r.next, x + r.terms.total());
            }
        }

        #[test]
        fn higher_schemes_contain_lower_ones(
            x in -2.0f64..2.0,
            mean in -1.0f64..1.0,
            c in arb_context(),
        ) {
            let m = LinearInteraction::standard(1.5);
            let law = LawView::new(&m, c.t, &[mean, mean + 0.3]).unwrap();
            let euler = euler_step(&m, &law, x, &c).unwrap();
            let strong = strong1_step(&m, &law, x, &c).unwrap();
            let weak = weak2_step(&m, &law, x, &c).unwrap();
            prop_assert_eq!(strong.terms.euler_part(), euler.terms);
            prop_assert_eq!(weak.terms.strong1_part(), strong.terms);
            prop_assert_eq!(x + strong.terms.euler_part().total(), euler.next);
            prop_assert_eq!(x + weak.terms.strong1_part().total(), strong.next);
        }

        #[test]
        fn jump_sums_vanish_without_jumps(
            x in -2.0f64..2.0,
            mean in -1.0f64..1.0,
            c in arb_context(),
        ) {
            let mut c = c;
            c.jumps.clear();
            let m = LinearInteraction::standard(1.0);
            let law = LawView::new(&m, c.t, &[mean]).unwrap();
            let t = weak2_step(&m, &law, x, &c).unwrap().terms;
            for v in [t.jumps, t.brownian_then_jump, t.jump_then_brownian, t.jump_jump, t.time_then_jump, t.jump_then_time] {
                prop_assert_eq!(v, 0.0);
            }
        }
    }
}
