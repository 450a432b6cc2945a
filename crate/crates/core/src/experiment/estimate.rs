use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::config::{ExperimentConfig, Reference};
use super::fit::fit_rate;
use super::oracle::moment_oracle;
use crate::error::{Error, Result};
use crate::meanfield::{propagate_law, target_terminal, LawTrajectory, ParticleEnsemble};
use crate::model::Model;
use crate::noise::{NoiseKey, NoisePlan, Role};
use crate::stats::Summary;

/// A Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorRow {
    pub steps: usize,
    pub strong: Option<Estimate>,
    pub weak: Option<Estimate>,
}

/// Result of [`estimate_errors`].
#[derive(Clone, Debug)]
pub struct ErrorTable {
    pub config: ExperimentConfig,
    pub rows: Vec<ErrorRow>,
    pub strong_rate: Option<f64>,
    pub weak_rate: Option<f64>,
    /// Replications that entered the estimates.
    pub replications: usize,
    /// Replications dropped because some chain left the floating-point range.
    pub diverged: usize,
    pub runtime: Duration,
}

/// Largest tolerated fraction of divergent replications.
pub const DIVERGENCE_TOLERANCE: f64 = 1e-3;

/// Runs the law pass with `steps` steps on keys `(seed, Law, replication, j)`.
pub fn law_pass(
    model: &(dyn Model + '_),
    config: &ExperimentConfig,
    plan: &NoisePlan,
    replication: u64,
    steps: usize,
) -> Result<LawTrajectory> {
    let mut ensemble = ParticleEnsemble::keyed(config.law_x0, config.m_law, plan, config.seed, replication, steps)?;
    propagate_law(model, config.scheme, &mut ensemble, steps, config.horizon)
}

fn target_key(config: &ExperimentConfig, i: usize) -> NoiseKey {
    NoiseKey::new(config.seed, Role::Target, i as u64, 0)
}

/// `Ok(None)` marks a divergent replication.
fn tolerate_divergence<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::NonFinite { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Keeps the finite replications, failing if too many diverged.
fn screen<T>(outcomes: Vec<Result<Option<T>>>) -> Result<(Vec<T>, usize)> {
    let total = outcomes.len();
    let mut kept = Vec::with_capacity(total);
    for o in outcomes {
        if let Some(v) = o? {
            kept.push(v);
        }
    }
    let diverged = total - kept.len();
    if diverged as f64 > DIVERGENCE_TOLERANCE * total as f64 {
        return Err(Error::Divergence { diverged, total });
    }
    Ok((kept, diverged))
}

fn mean_estimate(values: &[f64], center: f64) -> Estimate {
    let s = Summary::of(values);
    Estimate {
        value: (s.mean - center).abs(),
        std_error: s.std_error,
    }
}

fn coupled_rows(config: &ExperimentConfig, model: &(dyn Model + '_), r: u32) -> Result<(Vec<ErrorRow>, usize, usize)> {
    let plan = config.noise_plan();
    let fine = 1usize << r;
    let reference_law = law_pass(model, config, &plan, 0, fine)?;
    let laws = config
        .steps
        .iter()
        .map(|&n| law_pass(model, config, &plan, 0, n))
        .collect::<Result<Vec<_>>>()?;
    let outcomes: Vec<Result<Option<Vec<f64>>>> = (0..config.m_err)
        .into_par_iter()
        .map(|i| {
            let key = target_key(config, i);
            let chain = |law: &LawTrajectory, steps| {
                target_terminal(model, config.scheme, law, config.target_x0, plan.stream(key, steps)?)
            };
            tolerate_divergence((|| {
                let reference = chain(&reference_law, fine)?;
                config
                    .steps
                    .iter()
                    .zip(&laws)
                    .map(|(&n, law)| Ok(reference - chain(law, n)?))
                    .collect::<Result<Vec<f64>>>()
            })())
        })
        .collect();
    let (diffs, diverged) = screen(outcomes)?;
    let rows = config
        .steps
        .iter()
        .enumerate()
        .map(|(col, &steps)| {
            let d: Vec<f64> = diffs.iter().map(|row| row[col]).collect();
            let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
            let strong = Summary::of(&abs);
            ErrorRow {
                steps,
                strong: config.mode.strong().then_some(Estimate {
                    value: strong.mean,
                    std_error: strong.std_error,
                }),
                weak: config.mode.weak().then(|| mean_estimate(&d, 0.0)),
            }
        })
        .collect();
    Ok((rows, diffs.len(), diverged))
}

/// Every replication draws its own law ensemble, so the particle error of
/// the law averages out instead of biasing all replications alike.
fn oracle_rows(config: &ExperimentConfig, model: &(dyn Model + '_)) -> Result<(Vec<ErrorRow>, usize, usize)> {
    let linear = config
        .linear_model()
        .ok_or_else(|| Error::config("moment_oracle is only available for example1"))?;
    let exact = moment_oracle(&linear, config.law_x0, config.target_x0, config.horizon)?.target_mean;
    let plan = config.noise_plan();
    let mut rows = Vec::with_capacity(config.steps.len());
    let (mut used, mut diverged_total) = (usize::MAX, 0);
    for &n in &config.steps {
        let outcomes: Vec<Result<Option<f64>>> = (0..config.m_err)
            .into_par_iter()
            .map(|i| {
                tolerate_divergence((|| {
                    let law = law_pass(model, config, &plan, i as u64, n)?;
                    let stream = plan.stream(target_key(config, i), n)?;
                    target_terminal(model, config.scheme, &law, config.target_x0, stream)
                })())
            })
            .collect();
        let (terminal, diverged) = screen(outcomes)?;
        used = used.min(terminal.len());
        diverged_total = diverged_total.max(diverged);
        rows.push(ErrorRow {
            steps: n,
            strong: None,
            weak: Some(mean_estimate(&terminal, exact)),
        });
    }
    Ok((rows, used, diverged_total))
}

fn rate(rows: &[ErrorRow], horizon: f64, pick: impl Fn(&ErrorRow) -> Option<Estimate>) -> Option<f64> {
    let pts: Option<Vec<(usize, f64)>> = rows.iter().map(|r| pick(r).map(|e| (r.steps, e.value))).collect();
    fit_rate(&pts?, horizon).ok()
}

fn run(config: &ExperimentConfig) -> Result<ErrorTable> {
    config.validate()?;
    let started = Instant::now();
    let model = config.build_model();
    let (rows, replications, diverged) = match config.reference {
        Reference::FineGrid(r) => coupled_rows(config, model.as_ref(), r)?,
        Reference::MomentOracle => oracle_rows(config, model.as_ref())?,
    };
    Ok(ErrorTable {
        strong_rate: rate(&rows, config.horizon, |r| r.strong),
        weak_rate: rate(&rows, config.horizon, |r| r.weak),
        config: config.clone(),
        rows,
        replications,
        diverged,
        runtime: started.elapsed(),
    })
}

/// Strong and weak errors of the configured scheme at every resolution in
/// `config.steps`, and the fitted rates.
///
/// Results depend only on the configuration, not on the thread count.
pub fn estimate_errors(config: &ExperimentConfig) -> Result<ErrorTable> {
    match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::config(format!("thread pool: {e}")))?
            .install(|| run(config)),
        None => run(config),
    }
}
