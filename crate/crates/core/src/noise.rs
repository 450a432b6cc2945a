//! Driving noise: Poisson jump streams, Brownian paths on a merged grid and the
//! per-step increments consumed by the schemes.
//!
//! One realization of `(W, μ)` is generated on a dyadic fine grid
//! `{i T 2^-r}` merged with the jump times. Coarse steps are exact
//! restrictions of that realization, so a coarse run and a fine reference run
//! see the same Brownian motion and the same jumps.
//!
//! Two equivalent routes produce the same numbers bit for bit:
//!
//! * [`sample_bundle`] materializes a [`PathBundle`] and [`coarsen`] slices it;
//! * [`NoiseKey::steps`] streams the identical fine segments lazily, which keeps
//!   memory flat when thousands of particles run at `r = 12`.
//!
//! # Stream splitting
//!
//! Every random stream is a ChaCha8 generator seeded from a
//! `(seed, role, replication, particle)` key. The 256-bit seed is four
//! consecutive outputs of SplitMix64 started from
//! `h = mix(mix(mix(mix(seed) ^ role) ^ replication) ^ particle)`, where `mix`
//! is the SplitMix64 finalizer. The jump stream and the Brownian stream of a
//! bundle are two child generators drawn in that order from the keyed parent.
//! Nothing depends on thread count or scheduling.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::quadrature::mark_rule;

/// Law `F` of the jump marks.
#[derive(Clone)]
pub enum MarkDistribution {
    Uniform { low: f64, high: f64 },
    /// A law given by its quantile function, with declared first and second
    /// moments used by compensators.
    Quantile {
        label: String,
        quantile: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        mean: f64,
        second_moment: f64,
    },
}

impl MarkDistribution {
    pub fn uniform(low: f64, high: f64) -> Result<Self> {
        if !(low.is_finite() && high.is_finite() && low < high) {
            return Err(Error::invalid(format!("uniform({low}, {high}) is not a valid law")));
        }
        Ok(MarkDistribution::Uniform { low, high })
    }

    /// `U(-1/2, 1/2)`, the mark law of both built-in examples.
    pub fn centered_unit() -> Self {
        MarkDistribution::Uniform {
            low: -0.5,
            high: 0.5,
        }
    }

    pub fn quantile(
        label: impl Into<String>,
        quantile: impl Fn(f64) -> f64 + Send + Sync + 'static,
        mean: f64,
        second_moment: f64,
    ) -> Self {
        MarkDistribution::Quantile {
            label: label.into(),
            quantile: Arc::new(quantile),
            mean,
            second_moment,
        }
    }

    /// E[e]
    pub fn mean(&self) -> f64 {
        match self {
            MarkDistribution::Uniform { low, high } => 0.5 * (low + high),
            MarkDistribution::Quantile { mean, .. } => *mean,
        }
    }

    /// E[e²]
    pub fn second_moment(&self) -> f64 {
        match self {
            MarkDistribution::Uniform { low, high } => {
                (low * low + low * high + high * high) / 3.0
            }
            MarkDistribution::Quantile { second_moment, .. } => *second_moment,
        }
    }

    fn at_quantile(&self, u: f64) -> f64 {
        match self {
            MarkDistribution::Uniform { low, high } => low + (high - low) * u,
            MarkDistribution::Quantile { quantile, .. } => quantile(u),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.at_quantile(rng.random::<f64>())
    }

    /// E_F[g(e)] by the fixed 64-node Gauss-Legendre rule in quantile space.
    pub fn expect(&self, mut g: impl FnMut(f64) -> f64) -> f64 {
        mark_rule()
            .iter()
            .map(|&(u, w)| w * g(self.at_quantile(u)))
            .sum()
    }
}

impl fmt::Debug for MarkDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarkDistribution::Uniform { low, high } => write!(f, "uniform({low}, {high})"),
            MarkDistribution::Quantile { label, .. } => write!(f, "quantile({label})"),
        }
    }
}

impl fmt::Display for MarkDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Jump times `τ_i ∈ (0, T]` with their marks `Y_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpStream {
    pub intensity: f64,
    pub horizon: f64,
    pub times: Vec<f64>,
    pub sizes: Vec<f64>,
}

impl JumpStream {
    /// N_T
    pub fn count(&self) -> usize {
        self.times.len()
    }

    /// N_t, the number of jumps in `(0, t]`.
    pub fn count_until(&self, t: f64) -> usize {
        self.times.partition_point(|&tau| tau <= t)
    }
}

fn check_rate(intensity: f64, horizon: f64) -> Result<()> {
    if !(intensity >= 0.0 && intensity.is_finite()) {
        return Err(Error::invalid(format!("jump intensity {intensity} must be finite and >= 0")));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::invalid(format!("horizon {horizon} must be finite and > 0")));
    }
    Ok(())
}

/// Lazily produces `(τ_i, Y_i)` by exponential inter-arrival gaps.
#[derive(Clone)]
struct JumpSource<R> {
    rng: R,
    intensity: f64,
    horizon: f64,
    marks: MarkDistribution,
    clock: f64,
    pending: Option<(f64, f64)>,
    exhausted: bool,
}

impl<R: Rng> JumpSource<R> {
    fn new(rng: R, intensity: f64, horizon: f64, marks: MarkDistribution) -> Self {
        let mut src = JumpSource {
            rng,
            intensity,
            horizon,
            marks,
            clock: 0.0,
            pending: None,
            exhausted: intensity == 0.0,
        };
        src.advance();
        src
    }

    fn advance(&mut self) {
        self.pending = None;
        if self.exhausted {
            return;
        }
        let gap: f64 = self.rng.sample::<f64, _>(Exp1) / self.intensity;
        self.clock += gap;
        if self.clock > self.horizon || !self.clock.is_finite() {
            self.exhausted = true;
            return;
        }
        let mark = self.marks.sample(&mut self.rng);
        self.pending = Some((self.clock, mark));
    }

    fn peek(&self) -> Option<(f64, f64)> {
        self.pending
    }

    fn pop(&mut self) -> Option<(f64, f64)> {
        let out = self.pending;
        if out.is_some() {
            self.advance();
        }
        out
    }
}

/// Samples a compound Poisson jump stream on `(0, T]`.
pub fn sample_jump_stream<R: Rng>(
    intensity: f64,
    horizon: f64,
    marks: &MarkDistribution,
    rng: R,
) -> Result<JumpStream> {
    check_rate(intensity, horizon)?;
    let mut src = JumpSource::new(rng, intensity, horizon, marks.clone());
    let (mut times, mut sizes) = (Vec::new(), Vec::new());
    while let Some((tau, y)) = src.pop() {
        times.push(tau);
        sizes.push(y);
    }
    Ok(JumpStream {
        intensity,
        horizon,
        times,
        sizes,
    })
}

/// Brownian values on the merged grid (fine points and jump times).
#[derive(Clone, Debug, PartialEq)]
pub struct BrownianPath {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// `increments[i]` is the generated Gaussian increment over
    /// `[grid[i], grid[i + 1]]`; `values` is their running sum.
    pub increments: Vec<f64>,
}

impl BrownianPath {
    /// Value at a grid time; `None` if `t` is not a grid point.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        self.grid
            .binary_search_by(|g| g.total_cmp(&t))
            .ok()
            .map(|i| self.values[i])
    }
}

/// One jump inside a step, with the Brownian displacement accumulated from the
/// start of the step up to the jump time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpEvent {
    pub time: f64,
    pub mark: f64,
    /// W_τ − W_{t_k}
    pub dw_before: f64,
}

/// Every stochastic quantity one scheme step consumes.
#[derive(Clone, Debug, PartialEq)]
pub struct StepContext {
    pub t: f64,
    pub dt: f64,
    pub dw: f64,
    /// ΔZ = ∫∫ dW_z ds over the step.
    pub dz: f64,
    pub jumps: SmallVec<[JumpEvent; 4]>,
}

impl StepContext {
    /// A jump-free context with the given increments.
    pub fn quiet(t: f64, dt: f64, dw: f64, dz: f64) -> Self {
        StepContext {
            t,
            dt,
            dw,
            dz,
            jumps: SmallVec::new(),
        }
    }

    pub fn end(&self) -> f64 {
        self.t + self.dt
    }
}

/// Parameters fixing the law of a [`PathBundle`].
#[derive(Clone, Debug)]
pub struct NoiseConfig {
    pub intensity: f64,
    pub horizon: f64,
    pub marks: MarkDistribution,
    /// `r` such that the fine grid is `{i T 2^-r}`.
    pub fine_exponent: u32,
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        check_rate(self.intensity, self.horizon)?;
        if self.fine_exponent == 0 || self.fine_exponent > 30 {
            return Err(Error::invalid(format!(
                "fine exponent {} must lie in 1..=30",
                self.fine_exponent
            )));
        }
        Ok(())
    }

    pub fn fine_steps(&self) -> usize {
        1usize << self.fine_exponent
    }

    /// Number of fine intervals per coarse step, if `steps` divides `2^r`.
    pub fn ratio(&self, steps: usize) -> Result<usize> {
        let fine = self.fine_steps();
        if steps == 0 || fine % steps != 0 {
            return Err(Error::invalid(format!(
                "{steps} steps do not divide the fine grid of 2^{} intervals",
                self.fine_exponent
            )));
        }
        Ok(fine / steps)
    }
}

/// One realization of `(W, μ)` shared by coarse and fine solvers.
#[derive(Clone, Debug, PartialEq)]
pub struct PathBundle {
    pub brownian: BrownianPath,
    pub jumps: JumpStream,
    pub fine_exponent: u32,
}

/// `k`-th point of a uniform grid with `n` intervals on `[0, horizon]`.
#[inline]
pub fn grid_time(horizon: f64, k: usize, n: usize) -> f64 {
    horizon * (k as f64) / (n as f64)
}

/// The noise over one fine interval `[t, t + dt]`.
#[derive(Clone, Debug, PartialEq)]
struct FineSegment {
    t: f64,
    dt: f64,
    dw: f64,
    /// ∫ (W_s − W_t) ds over the interval, trapezoidal on the merged sub-grid.
    area: f64,
    jumps: SmallVec<[JumpEvent; 2]>,
    /// Sub-interval boundaries and increments, recorded only when materializing.
    points: SmallVec<[(f64, f64); 2]>,
}

/// Lazily generates fine segments of one realization.
#[derive(Clone)]
struct FineStream<R> {
    jumps: JumpSource<R>,
    brownian: R,
    horizon: f64,
    fine: usize,
    index: usize,
    record_points: bool,
}

impl<R: Rng> FineStream<R> {
    fn new(config: &NoiseConfig, jump_rng: R, brownian_rng: R, record_points: bool) -> Self {
        FineStream {
            jumps: JumpSource::new(jump_rng, config.intensity, config.horizon, config.marks.clone()),
            brownian: brownian_rng,
            horizon: config.horizon,
            fine: config.fine_steps(),
            index: 0,
            record_points,
        }
    }

    fn next_segment(&mut self) -> FineSegment {
        debug_assert!(self.index < self.fine);
        let start = grid_time(self.horizon, self.index, self.fine);
        let end = grid_time(self.horizon, self.index + 1, self.fine);
        self.index += 1;
        let mut seg = FineSegment {
            t: start,
            dt: end - start,
            dw: 0.0,
            area: 0.0,
            jumps: SmallVec::new(),
            points: SmallVec::new(),
        };
        let mut cur = start;
        let mut w = 0.0;
        while let Some((tau, mark)) = self.jumps.peek().filter(|&(tau, _)| tau <= end) {
            self.jumps.pop();
            let len = tau - cur;
            let inc = len.sqrt() * self.brownian.sample::<f64, _>(StandardNormal);
            seg.area += (w + 0.5 * inc) * len;
            w += inc;
            if self.record_points {
                seg.points.push((tau, inc));
            }
            seg.jumps.push(JumpEvent {
                time: tau,
                mark,
                dw_before: w,
            });
            cur = tau;
        }
        if cur < end {
            let len = end - cur;
            let inc = len.sqrt() * self.brownian.sample::<f64, _>(StandardNormal);
            seg.area += (w + 0.5 * inc) * len;
            w += inc;
            if self.record_points {
                seg.points.push((end, inc));
            }
        }
        seg.dw = w;
        seg
    }
}

fn child_rngs<R: Rng>(rng: &mut R) -> (ChaCha8Rng, ChaCha8Rng) {
    let jump = ChaCha8Rng::from_rng(rng);
    let brownian = ChaCha8Rng::from_rng(rng);
    (jump, brownian)
}

/// Samples one realization: jump times first, then Gaussian increments on the
/// merged grid.
pub fn sample_bundle<R: Rng>(config: &NoiseConfig, rng: &mut R) -> Result<PathBundle> {
    config.validate()?;
    let (jump_rng, brownian_rng) = child_rngs(rng);
    let mut stream = FineStream::new(config, jump_rng, brownian_rng, true);
    let fine = config.fine_steps();
    let mut grid = Vec::with_capacity(fine + 1);
    let mut values = Vec::with_capacity(fine + 1);
    let mut increments = Vec::with_capacity(fine);
    let (mut times, mut sizes) = (Vec::new(), Vec::new());
    grid.push(0.0);
    values.push(0.0);
    let mut w = 0.0;
    for _ in 0..fine {
        let seg = stream.next_segment();
        for j in &seg.jumps {
            times.push(j.time);
            sizes.push(j.mark);
        }
        for &(t, inc) in &seg.points {
            w += inc;
            grid.push(t);
            values.push(w);
            increments.push(inc);
        }
    }
    Ok(PathBundle {
        brownian: BrownianPath {
            grid,
            values,
            increments,
        },
        jumps: JumpStream {
            intensity: config.intensity,
            horizon: config.horizon,
            times,
            sizes,
        },
        fine_exponent: config.fine_exponent,
    })
}

impl PathBundle {
    pub fn horizon(&self) -> f64 {
        self.jumps.horizon
    }

    pub fn fine_steps(&self) -> usize {
        1usize << self.fine_exponent
    }

    /// Rebuilds the fine segments from the stored grid. Produces exactly the
    /// segments the lazy generator produced for the same realization.
    fn segments(&self) -> Vec<FineSegment> {
        let fine = self.fine_steps();
        let horizon = self.horizon();
        let b = &self.brownian;
        let mut out = Vec::with_capacity(fine);
        let mut g = 0usize;
        let mut next_jump = 0usize;
        for i in 0..fine {
            let start = grid_time(horizon, i, fine);
            let end = grid_time(horizon, i + 1, fine);
            let mut seg = FineSegment {
                t: start,
                dt: end - start,
                dw: 0.0,
                area: 0.0,
                jumps: SmallVec::new(),
                points: SmallVec::new(),
            };
            let (mut cur, mut w) = (start, 0.0);
            while next_jump < self.jumps.times.len() && self.jumps.times[next_jump] <= end {
                let tau = self.jumps.times[next_jump];
                let inc = b.increments[g];
                g += 1;
                seg.area += (w + 0.5 * inc) * (tau - cur);
                w += inc;
                seg.jumps.push(JumpEvent {
                    time: tau,
                    mark: self.jumps.sizes[next_jump],
                    dw_before: w,
                });
                cur = tau;
                next_jump += 1;
            }
            if cur < end {
                let inc = b.increments[g];
                g += 1;
                seg.area += (w + 0.5 * inc) * (end - cur);
                w += inc;
            }
            seg.dw = w;
            out.push(seg);
        }
        out
    }
}

/// Merges consecutive fine segments into one coarse step.
///
/// ΔW is summed along a balanced binary tree over the segments, so the coarse
/// increment over a dyadic block equals the sum of the increments over its
/// two halves bit for bit.
#[derive(Default)]
struct Aggregator {
    /// Partial tree sums with their levels; levels strictly decrease.
    pending: SmallVec<[(u32, f64); 16]>,
    offset: f64,
    dz: f64,
    jumps: SmallVec<[JumpEvent; 4]>,
}

impl Aggregator {
    fn push(&mut self, seg: &FineSegment) {
        self.dz += seg.area + self.offset * seg.dt;
        for j in &seg.jumps {
            self.jumps.push(JumpEvent {
                dw_before: self.offset + j.dw_before,
                ..*j
            });
        }
        self.offset += seg.dw;
        let mut node = (0u32, seg.dw);
        while let Some(&(level, left)) = self.pending.last() {
            if level != node.0 {
                break;
            }
            self.pending.pop();
            node = (level + 1, left + node.1);
        }
        self.pending.push(node);
    }

    fn finish(&mut self, t: f64, dt: f64) -> StepContext {
        let dw = self.pending.iter().rev().fold(None, |acc: Option<f64>, &(_, v)| {
            Some(match acc {
                None => v,
                Some(right) => v + right,
            })
        });
        let ctx = StepContext {
            t,
            dt,
            dw: dw.unwrap_or(0.0),
            dz: self.dz,
            jumps: std::mem::take(&mut self.jumps),
        };
        self.pending.clear();
        self.offset = 0.0;
        self.dz = 0.0;
        ctx
    }
}

/// Restricts a bundle to a uniform partition with `steps` intervals.
pub fn coarsen(bundle: &PathBundle, steps: usize) -> Result<Vec<StepContext>> {
    let fine = bundle.fine_steps();
    if steps == 0 || fine % steps != 0 {
        return Err(Error::invalid(format!(
            "{steps} steps do not divide the fine grid of 2^{} intervals",
            bundle.fine_exponent
        )));
    }
    let ratio = fine / steps;
    let horizon = bundle.horizon();
    let segments = bundle.segments();
    let mut agg = Aggregator::default();
    Ok(segments
        .chunks(ratio)
        .enumerate()
        .map(|(k, chunk)| {
            chunk.iter().for_each(|seg| agg.push(seg));
            let t = grid_time(horizon, k, steps);
            agg.finish(t, grid_time(horizon, k + 1, steps) - t)
        })
        .collect())
}

/// Draws ΔZ from its exact law given ΔW: mean `ΔW dt / 2`, variance `dt³ / 12`.
pub fn sample_dz_standalone<R: Rng + ?Sized>(dt: f64, dw: f64, rng: &mut R) -> Result<f64> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid(format!("step size {dt} must be positive")));
    }
    let xi: f64 = rng.sample(StandardNormal);
    Ok(0.5 * dw * dt + (dt * dt * dt / 12.0).sqrt() * xi)
}

/// Who consumes a random stream. Part of the stream key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    /// A particle of the law ensemble.
    Law,
    /// A target chain used for error estimation.
    Target,
    /// Ad-hoc draws in diagnostics and tests.
    Auxiliary,
}

impl Role {
    fn tag(self) -> u64 {
        match self {
            Role::Law => 1,
            Role::Target => 2,
            Role::Auxiliary => 3,
        }
    }
}

#[inline]
fn splitmix_finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn mix(z: u64) -> u64 {
    splitmix_finalize(z.wrapping_add(0x9e37_79b9_7f4a_7c15))
}

/// Identifies one independent random stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NoiseKey {
    pub seed: u64,
    pub role: Role,
    pub replication: u64,
    pub particle: u64,
}

impl NoiseKey {
    pub fn new(seed: u64, role: Role, replication: u64, particle: u64) -> Self {
        NoiseKey {
            seed,
            role,
            replication,
            particle,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let h = mix(mix(mix(mix(self.seed) ^ self.role.tag()) ^ self.replication) ^ self.particle);
        let mut seed = [0u8; 32];
        let mut state = h;
        for chunk in seed.chunks_exact_mut(8) {
            state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
            chunk.copy_from_slice(&splitmix_finalize(state).to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }

    /// The materialized realization for this key.
    pub fn bundle(&self, config: &NoiseConfig) -> Result<PathBundle> {
        sample_bundle(config, &mut self.rng())
    }

    /// Streams the coarse contexts of this key's realization for `steps`
    /// intervals. Identical to `coarsen(&self.bundle(config)?, steps)`.
    pub fn steps(&self, config: &NoiseConfig, steps: usize) -> Result<StepStream> {
        config.validate()?;
        let ratio = config.ratio(steps)?;
        let (jump_rng, brownian_rng) = child_rngs(&mut self.rng());
        Ok(StepStream::Coupled(CoupledSteps {
            fine: FineStream::new(config, jump_rng, brownian_rng, false),
            ratio,
            steps,
            k: 0,
            horizon: config.horizon,
            agg: Aggregator::default(),
        }))
    }

    /// Streams contexts with no fine path behind them: jumps and Brownian
    /// values at jump times are exact, ΔZ is drawn from its conditional law
    /// on each sub-interval. For runs that need no coupling.
    pub fn standalone_steps(
        &self,
        intensity: f64,
        horizon: f64,
        marks: &MarkDistribution,
        steps: usize,
    ) -> Result<StepStream> {
        check_rate(intensity, horizon)?;
        if steps == 0 {
            return Err(Error::invalid("at least one step is required"));
        }
        let (jump_rng, brownian_rng) = child_rngs(&mut self.rng());
        Ok(StepStream::Standalone(StandaloneSteps {
            jumps: JumpSource::new(jump_rng, intensity, horizon, marks.clone()),
            brownian: brownian_rng,
            steps,
            k: 0,
            horizon,
        }))
    }
}

/// How the streams of a run are realized.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coupling {
    /// Restrictions of one path on the dyadic grid with `2^r` intervals, so
    /// that every resolution dividing `2^r` sees the same realization.
    FineGrid(u32),
    /// Exact per-step sampling without an underlying fine path.
    Independent,
}

/// Everything needed to turn a [`NoiseKey`] into step contexts.
#[derive(Clone, Debug)]
pub struct NoisePlan {
    pub intensity: f64,
    pub horizon: f64,
    pub marks: MarkDistribution,
    pub coupling: Coupling,
}

impl NoisePlan {
    pub fn stream(&self, key: NoiseKey, steps: usize) -> Result<StepStream> {
        match self.coupling {
            Coupling::FineGrid(r) => key.steps(&self.fine_config(r), steps),
            Coupling::Independent => key.standalone_steps(self.intensity, self.horizon, &self.marks, steps),
        }
    }

    pub fn fine_config(&self, fine_exponent: u32) -> NoiseConfig {
        NoiseConfig {
            intensity: self.intensity,
            horizon: self.horizon,
            marks: self.marks.clone(),
            fine_exponent,
        }
    }

    /// Fails unless `steps` is admissible for this plan.
    pub fn check_steps(&self, steps: usize) -> Result<()> {
        match self.coupling {
            Coupling::FineGrid(r) => self.fine_config(r).validate().and(self.fine_config(r).ratio(steps).map(|_| ())),
            Coupling::Independent if steps == 0 => Err(Error::invalid("at least one step is required")),
            Coupling::Independent => check_rate(self.intensity, self.horizon),
        }
    }
}

pub struct CoupledSteps {
    fine: FineStream<ChaCha8Rng>,
    ratio: usize,
    steps: usize,
    k: usize,
    horizon: f64,
    agg: Aggregator,
}

pub struct StandaloneSteps {
    jumps: JumpSource<ChaCha8Rng>,
    brownian: ChaCha8Rng,
    steps: usize,
    k: usize,
    horizon: f64,
}

/// Lazy sequence of [`StepContext`]s for one particle or chain.
pub enum StepStream {
    Coupled(CoupledSteps),
    Standalone(StandaloneSteps),
}

impl StepStream {
    pub fn steps(&self) -> usize {
        match self {
            StepStream::Coupled(s) => s.steps,
            StepStream::Standalone(s) => s.steps,
        }
    }
}

impl Iterator for StepStream {
    type Item = StepContext;

    fn next(&mut self) -> Option<StepContext> {
        match self {
            StepStream::Coupled(s) => {
                if s.k == s.steps {
                    return None;
                }
                for _ in 0..s.ratio {
                    let seg = s.fine.next_segment();
                    s.agg.push(&seg);
                }
                let t = grid_time(s.horizon, s.k, s.steps);
                let dt = grid_time(s.horizon, s.k + 1, s.steps) - t;
                s.k += 1;
                Some(s.agg.finish(t, dt))
            }
            StepStream::Standalone(s) => {
                if s.k == s.steps {
                    return None;
                }
                let t = grid_time(s.horizon, s.k, s.steps);
                let end = grid_time(s.horizon, s.k + 1, s.steps);
                s.k += 1;
                let mut ctx = StepContext::quiet(t, end - t, 0.0, 0.0);
                let (mut cur, mut w) = (t, 0.0);
                let sub = |len: f64, w: &mut f64, dz: &mut f64, rng: &mut ChaCha8Rng| {
                    let inc = len.sqrt() * rng.sample::<f64, _>(StandardNormal);
                    let area = if len > 0.0 {
                        // infallible for len > 0
                        sample_dz_standalone(len, inc, rng).unwrap_or(0.5 * inc * len)
                    } else {
                        0.0
                    };
                    *dz += *w * len + area;
                    *w += inc;
                };
                while let Some((tau, mark)) = s.jumps.peek().filter(|&(tau, _)| tau <= end) {
                    s.jumps.pop();
                    sub(tau - cur, &mut w, &mut ctx.dz, &mut s.brownian);
                    ctx.jumps.push(JumpEvent {
                        time: tau,
                        mark,
                        dw_before: w,
                    });
                    cur = tau;
                }
                if cur < end {
                    sub(end - cur, &mut w, &mut ctx.dz, &mut s.brownian);
                }
                ctx.dw = w;
                Some(ctx)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{covariance, Summary};

    fn config(intensity: f64, r: u32) -> NoiseConfig {
        NoiseConfig {
            intensity,
            horizon: 1.0,
            marks: MarkDistribution::centered_unit(),
            fine_exponent: r,
        }
    }

    #[test]
    fn zero_intensity_has_no_jumps() {
        let s = sample_jump_stream(0.0, 1.0, &MarkDistribution::centered_unit(), NoiseKey::new(1, Role::Auxiliary, 0, 0).rng()).unwrap();
        assert_eq!(s.count(), 0);
    }

    #[test]
    fn rejects_bad_rates() {
        let marks = MarkDistribution::centered_unit();
        let rng = NoiseKey::new(1, Role::Auxiliary, 0, 0).rng();
        assert!(sample_jump_stream(-1.0, 1.0, &marks, rng.clone()).is_err());
        assert!(sample_jump_stream(1.0, 0.0, &marks, rng).is_err());
        assert!(MarkDistribution::uniform(1.0, 0.0).is_err());
    }

    #[test]
    fn jump_counts_follow_poisson_law() {
        let marks = MarkDistribution::centered_unit();
        let counts: Vec<f64> = (0..20_000)
            .map(|i| {
                let rng = NoiseKey::new(7, Role::Auxiliary, i, 0).rng();
                sample_jump_stream(2.0, 1.0, &marks, rng).unwrap().count() as f64
            })
            .collect();
        let s = Summary::of(&counts);
        // Var(N) = 2, Var(sample variance) ≈ (μ4 - σ⁴)/n with μ4 = λ + 3λ² for Poisson.
        assert!((s.mean - 2.0).abs() < 3.0 * s.std_error, "mean {}", s.mean);
        let var_se = ((2.0 + 3.0 * 4.0 - 4.0) / counts.len() as f64).sqrt();
        assert!((s.std_dev.powi(2) - 2.0).abs() < 3.0 * var_se, "var {}", s.std_dev.powi(2));
    }

    #[test]
    fn uniform_mark_moments() {
        let marks = MarkDistribution::centered_unit();
        let mut ys = Vec::new();
        for i in 0..20_000 {
            let rng = NoiseKey::new(8, Role::Auxiliary, i, 0).rng();
            ys.extend(sample_jump_stream(1.0, 1.0, &marks, rng).unwrap().sizes);
        }
        let s = Summary::of(&ys);
        assert!(s.mean.abs() < 3.0 * s.std_error);
        let sq: Vec<f64> = ys.iter().map(|y| y * y).collect();
        let s2 = Summary::of(&sq);
        assert!((s2.mean - 1.0 / 12.0).abs() < 3.0 * s2.std_error);
        assert!((marks.mean()).abs() < 1e-15);
        assert!((marks.second_moment() - 1.0 / 12.0).abs() < 1e-15);
        assert!((marks.expect(|e| e * e) - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn quantile_law_quadrature() {
        // exponential(1) via its quantile function
        let marks = MarkDistribution::quantile("exp", |u: f64| -(1.0 - u).ln(), 1.0, 2.0);
        assert!((marks.expect(|e| e) - 1.0).abs() < 1e-2);
        let uniform = MarkDistribution::uniform(0.0, 1.0).unwrap();
        assert!((uniform.expect(|e| e) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn jump_free_grid_is_the_fine_grid() {
        let b = NoiseKey::new(3, Role::Auxiliary, 0, 0).bundle(&config(0.0, 3)).unwrap();
        let expected: Vec<f64> = (0..=8).map(|i| i as f64 / 8.0).collect();
        assert_eq!(b.brownian.grid, expected);
        assert_eq!(b.brownian.values[0], 0.0);
    }

    #[test]
    fn merged_grid_contains_jump_times() {
        for p in 0..50 {
            let b = NoiseKey::new(4, Role::Auxiliary, 0, p).bundle(&config(5.0, 4)).unwrap();
            let g = &b.brownian.grid;
            assert!(g.windows(2).all(|w| w[0] < w[1]));
            assert_eq!(g[0], 0.0);
            assert_eq!(*g.last().unwrap(), 1.0);
            for &tau in &b.jumps.times {
                assert!(b.brownian.value_at(tau).is_some());
            }
            assert!(b.jumps.times.windows(2).all(|w| w[0] < w[1]));
            assert_eq!(b.jumps.times.len(), b.jumps.sizes.len());
        }
    }

    #[test]
    fn streamed_and_materialized_contexts_agree() {
        let cfg = config(3.0, 6);
        for p in 0..20 {
            let key = NoiseKey::new(11, Role::Law, 2, p);
            let bundle = key.bundle(&cfg).unwrap();
            for steps in [1, 4, 16, 64] {
                let a = coarsen(&bundle, steps).unwrap();
                let b: Vec<_> = key.steps(&cfg, steps).unwrap().collect();
                assert_eq!(a, b, "particle {p}, {steps} steps");
            }
        }
    }

    #[test]
    fn coarse_increments_are_sums_of_halves() {
        let cfg = config(2.0, 8);
        for p in 0..20 {
            let b = NoiseKey::new(5, Role::Target, p, 0).bundle(&cfg).unwrap();
            for steps in [2, 8, 32, 128] {
                let coarse = coarsen(&b, steps).unwrap();
                let fine = coarsen(&b, 2 * steps).unwrap();
                for (k, c) in coarse.iter().enumerate() {
                    assert_eq!(c.dw, fine[2 * k].dw + fine[2 * k + 1].dw);
                }
            }
        }
    }

    #[test]
    fn contexts_partition_the_realization() {
        let cfg = config(4.0, 7);
        for p in 0..20 {
            let b = NoiseKey::new(6, Role::Target, p, 0).bundle(&cfg).unwrap();
            let w_t = *b.brownian.values.last().unwrap();
            for steps in [1, 2, 16, 128] {
                let ctx = coarsen(&b, steps).unwrap();
                let total: f64 = ctx.iter().map(|c| c.dw).sum();
                assert!((total - w_t).abs() < 1e-12);
                let n: usize = ctx.iter().map(|c| c.jumps.len()).sum();
                assert_eq!(n, b.jumps.count());
                for c in &ctx {
                    let w_k = b.brownian.value_at(c.t).unwrap();
                    assert!(c.jumps.windows(2).all(|w| w[0].time < w[1].time));
                    for j in &c.jumps {
                        assert!(j.time > c.t && j.time <= c.end() + 1e-15);
                        let w_tau = b.brownian.value_at(j.time).unwrap();
                        assert!((j.dw_before - (w_tau - w_k)).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn coarsen_rejects_non_divisors() {
        let b = NoiseKey::new(1, Role::Auxiliary, 0, 0).bundle(&config(1.0, 4)).unwrap();
        assert!(coarsen(&b, 3).is_err());
        assert!(coarsen(&b, 0).is_err());
        assert!(coarsen(&b, 32).is_err());
    }

    #[test]
    fn bundles_are_reproducible() {
        let cfg = config(2.0, 5);
        let key = NoiseKey::new(99, Role::Law, 1, 3);
        assert_eq!(key.bundle(&cfg).unwrap(), key.bundle(&cfg).unwrap());
        let other = NoiseKey::new(99, Role::Law, 1, 4);
        assert_ne!(key.bundle(&cfg).unwrap(), other.bundle(&cfg).unwrap());
    }

    #[test]
    fn standalone_dz_moments() {
        let mut rng = NoiseKey::new(12, Role::Auxiliary, 0, 0).rng();
        let dt: f64 = 0.5;
        let (mut dws, mut dzs) = (Vec::new(), Vec::new());
        for _ in 0..40_000 {
            let dw = dt.sqrt() * rng.sample::<f64, _>(StandardNormal);
            dws.push(dw);
            dzs.push(sample_dz_standalone(dt, dw, &mut rng).unwrap());
        }
        let s = Summary::of(&dzs);
        assert!(s.mean.abs() < 3.0 * s.std_error);
        let var = s.std_dev.powi(2);
        let target = dt.powi(3) / 3.0;
        // Gaussian: SE of the sample variance is sqrt(2/n) σ².
        assert!((var - target).abs() < 3.0 * (2.0 / 40_000f64).sqrt() * target);
        let cov = covariance(&dws, &dzs);
        assert!((cov - dt * dt / 2.0).abs() < 0.03 * dt * dt / 2.0);
        assert!(sample_dz_standalone(0.0, 0.0, &mut rng).is_err());
    }

    #[test]
    fn standalone_stream_places_jumps_in_steps() {
        let marks = MarkDistribution::centered_unit();
        let key = NoiseKey::new(13, Role::Target, 0, 0);
        let ctx: Vec<_> = key.standalone_steps(10.0, 1.0, &marks, 8).unwrap().collect();
        assert_eq!(ctx.len(), 8);
        for c in &ctx {
            for j in &c.jumps {
                assert!(j.time > c.t && j.time <= c.end());
            }
        }
    }
}
