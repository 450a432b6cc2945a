//! Interacting-particle approximation of the law and the two-pass procedure
//! for distinct initial values.
//!
//! Pass one advances `M` particles started at `x0`; at every step all of them
//! are moved against the same frozen snapshot of their empirical law. Pass two
//! moves a single target chain from `X0`, reading every mean-field term from
//! the snapshots recorded in pass one.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{LawView, Model};
use crate::noise::{grid_time, NoiseKey, NoisePlan, Role, StepContext, StepStream};
use crate::schemes::SchemeKind;

/// Law snapshots at `t_0, ..., t_N` of a uniform partition of `[0, T]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LawTrajectory {
    horizon: f64,
    snapshots: Vec<LawView>,
}

impl LawTrajectory {
    pub fn steps(&self) -> usize {
        self.snapshots.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn snapshots(&self) -> &[LawView] {
        &self.snapshots
    }

    /// Snapshot at `t_k`.
    pub fn at(&self, k: usize) -> &LawView {
        &self.snapshots[k]
    }

    pub fn terminal(&self) -> &LawView {
        self.snapshots.last().expect("a trajectory holds at least the initial snapshot")
    }
}

/// `M` particles, each with its own stream of step contexts.
pub struct ParticleEnsemble<S> {
    states: Vec<f64>,
    streams: Vec<S>,
    step: usize,
}

impl<S> ParticleEnsemble<S>
where
    S: Iterator<Item = StepContext> + Send,
{
    pub fn new(states: Vec<f64>, streams: Vec<S>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::invalid("an ensemble needs at least one particle"));
        }
        if states.len() != streams.len() {
            return Err(Error::invalid(format!(
                "{} particles but {} noise streams",
                states.len(),
                streams.len()
            )));
        }
        Ok(ParticleEnsemble {
            states,
            streams,
            step: 0,
        })
    }

    /// All particles at `x0`.
    pub fn uniform(x0: f64, streams: Vec<S>) -> Result<Self> {
        Self::new(vec![x0; streams.len()], streams)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    /// Steps taken so far.
    pub fn step(&self) -> usize {
        self.step
    }
}

impl ParticleEnsemble<StepStream> {
    /// Ensemble whose particle `j` is driven by key `(seed, Law, replication, j)`.
    pub fn keyed(x0: f64, count: usize, plan: &NoisePlan, seed: u64, replication: u64, steps: usize) -> Result<Self> {
        let streams = (0..count as u64)
            .map(|j| plan.stream(NoiseKey::new(seed, Role::Law, replication, j), steps))
            .collect::<Result<Vec<_>>>()?;
        Self::uniform(x0, streams)
    }
}

fn next_context<S: Iterator<Item = StepContext>>(stream: &mut S, step: usize, t: f64) -> Result<StepContext> {
    let ctx = stream
        .next()
        .ok_or_else(|| Error::invalid("noise stream ended before the partition").at_step(step))?;
    if ctx.t != t {
        return Err(Error::invalid(format!("noise stream at t = {} but the partition is at t = {t}", ctx.t)).at_step(step));
    }
    Ok(ctx)
}

/// Pass one: advances every particle through `steps` uniform steps on
/// `[0, horizon]` and records the law snapshot at each grid time.
pub fn propagate_law<M, S>(
    model: &M,
    scheme: SchemeKind,
    ensemble: &mut ParticleEnsemble<S>,
    steps: usize,
    horizon: f64,
) -> Result<LawTrajectory>
where
    M: Model + ?Sized,
    S: Iterator<Item = StepContext> + Send,
{
    scheme.check(model)?;
    if steps == 0 {
        return Err(Error::invalid("at least one step is required"));
    }
    let mut snapshots = Vec::with_capacity(steps + 1);
    for k in 0..steps {
        let t = grid_time(horizon, k, steps);
        let law = LawView::new(model, t, &ensemble.states)?;
        let moved: Vec<Result<f64>> = ensemble
            .states
            .par_iter()
            .zip(ensemble.streams.par_iter_mut())
            .map(|(&x, stream)| {
                let ctx = next_context(stream, k, t)?;
                let next = scheme.step(model, &law, x, &ctx).map_err(|e| e.at_step(k))?.next;
                if next.is_finite() {
                    Ok(next)
                } else {
                    Err(Error::NonFinite { step: k })
                }
            })
            .collect();
        for (slot, r) in ensemble.states.iter_mut().zip(moved) {
            *slot = r?;
        }
        ensemble.step += 1;
        snapshots.push(law);
    }
    snapshots.push(LawView::new(model, horizon, &ensemble.states)?);
    Ok(LawTrajectory { horizon, snapshots })
}

/// Pass two: one chain from `x0` whose mean-field terms come from `law`.
/// Returns the states at `t_0, ..., t_N`.
pub fn propagate_target<M, S>(
    model: &M,
    scheme: SchemeKind,
    law: &LawTrajectory,
    x0: f64,
    stream: S,
) -> Result<Vec<f64>>
where
    M: Model + ?Sized,
    S: IntoIterator<Item = StepContext>,
{
    let mut path = Vec::with_capacity(law.steps() + 1);
    path.push(x0);
    target_fold(model, scheme, law, x0, stream, |x| path.push(x))?;
    Ok(path)
}

/// Like [`propagate_target`] but keeps only the terminal state.
pub fn target_terminal<M, S>(model: &M, scheme: SchemeKind, law: &LawTrajectory, x0: f64, stream: S) -> Result<f64>
where
    M: Model + ?Sized,
    S: IntoIterator<Item = StepContext>,
{
    target_fold(model, scheme, law, x0, stream, |_| ())
}

fn target_fold<M, S>(
    model: &M,
    scheme: SchemeKind,
    law: &LawTrajectory,
    x0: f64,
    stream: S,
    mut visit: impl FnMut(f64),
) -> Result<f64>
where
    M: Model + ?Sized,
    S: IntoIterator<Item = StepContext>,
{
    scheme.check(model)?;
    let mut stream = stream.into_iter();
    let mut x = x0;
    for (k, snapshot) in law.snapshots[..law.steps()].iter().enumerate() {
        let ctx = next_context(&mut stream, k, snapshot.time())?;
        x = scheme.step(model, snapshot, x, &ctx).map_err(|e| e.at_step(k))?.next;
        if !x.is_finite() {
            return Err(Error::NonFinite { step: k });
        }
        visit(x);
    }
    if stream.next().is_some() {
        return Err(Error::invalid(format!(
            "noise stream is longer than the {} step partition",
            law.steps()
        )));
    }
    Ok(x)
}
