//! Deterministic synthetic rollout.
//!
//! Stands in for a video backbone: prompt signatures and per-head value
//! streams are synthesized from a single seed and fed to [`Engine`].
//!
//! Randomness comes from ChaCha20 (`rand_chacha`), one stream per purpose and
//! head slot, so every output is a function of `(seed, config)` alone:
//!
//! * signatures for slot `s` use stream `2·s`
//! * value frames for slot `s` use stream `2·s + 1`
//!
//! Gaussian draws use `rand_distr::StandardNormal`. The generator version is
//! [`GENERATOR`].

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::engine::{budget_report, BlockTrace, BudgetReport, Engine, EngineConfig, ReadSet};
use crate::error::{Error, Result};
use crate::vector::SemanticVector;
use crate::window::PromptSchedule;

/// Identifies the stream construction; bump when it changes.
pub const GENERATOR: &str = "chacha20-stream-v1";

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    pub engine: EngineConfig,
    pub schedule: PromptSchedule,
    pub drift_sigma: f64,
    pub signature_separation: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            engine: EngineConfig::default(),
            schedule: PromptSchedule::new(vec![40, 80, 120, 160, 200], 240).expect("default schedule"),
            drift_sigma: 0.05,
            signature_separation: 0.5,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.engine.validate()?;
        if !(self.drift_sigma > 0.0 && self.drift_sigma.is_finite()) {
            return Err(Error::config("drift_sigma", "must be positive"));
        }
        if !(0.0..=2.0).contains(&self.signature_separation) {
            return Err(Error::config("signature_separation", "must be in [0, 2]"));
        }
        Ok(())
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn gaussian(rng: &mut ChaCha20Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}

fn random_unit(rng: &mut ChaCha20Rng, dim: usize) -> SemanticVector {
    loop {
        let g = SemanticVector::from_raw(gaussian(rng, dim));
        let n = g.norm();
        if n > 1e-12 {
            return g.scaled(1.0 / n);
        }
    }
}

/// Unit vector orthogonal to the unit vector `p`.
fn random_orthogonal(rng: &mut ChaCha20Rng, p: &SemanticVector) -> SemanticVector {
    loop {
        let q = random_unit(rng, p.dim());
        let r = q.minus_scaled(q.dot(p), p);
        let n = r.norm();
        if n > 1e-6 {
            return r.scaled(1.0 / n);
        }
    }
}

/// Unit-norm prompt signatures indexed `[segment][layer * heads + head]`.
///
/// Each next signature rotates the previous one toward a random orthogonal
/// direction by `acos(1 − separation)`, so consecutive signatures of a head
/// have switch strength `separation`. In one dimension only 0 and 2 are
/// reachable; separations below 1 keep the sign, the rest flip it.
pub fn synth_prompt_signatures(
    seed: u64,
    segments: usize,
    layers: usize,
    heads: usize,
    dim: usize,
    separation: f64,
) -> Vec<Vec<SemanticVector>> {
    let slots = layers * heads;
    let theta = (1.0 - separation.clamp(0.0, 2.0)).acos();
    let mut out = vec![Vec::with_capacity(slots); segments];
    for slot in 0..slots {
        let mut rng = rng_for(seed, 2 * slot as u64);
        let mut p = random_unit(&mut rng, dim);
        for seg_sigs in out.iter_mut() {
            seg_sigs.push(p.clone());
            p = if dim == 1 {
                if separation < 1.0 { p } else { p.scaled(-1.0) }
            } else {
                let u = random_orthogonal(&mut rng, &p);
                let next = p.scaled(theta.cos()).add(&u.scaled(theta.sin()));
                let n = next.norm();
                next.scaled(1.0 / n)
            };
        }
    }
    out
}

/// Random-walk state of one head's value stream.
#[derive(Debug, Clone)]
pub struct StreamState {
    rng: ChaCha20Rng,
    current: SemanticVector,
}

impl StreamState {
    pub fn new(seed: u64, slot: usize, dim: usize) -> Self {
        let mut rng = rng_for(seed, 2 * slot as u64 + 1);
        let current = random_unit(&mut rng, dim);
        Self { rng, current }
    }

    pub fn current(&self) -> &SemanticVector {
        &self.current
    }
}

/// `v_t = normalize(v_{t−1} + σ·g_t)` for each of `frames` frames.
pub fn synth_block_values(state: &mut StreamState, frames: usize, sigma: f64) -> Vec<SemanticVector> {
    let dim = state.current.dim();
    (0..frames)
        .map(|_| {
            let step = SemanticVector::from_raw(gaussian(&mut state.rng, dim));
            let next = state.current.add(&step.scaled(sigma));
            let n = next.norm();
            state.current = if n > 0.0 { next.scaled(1.0 / n) } else { random_unit(&mut state.rng, dim) };
            state.current.clone()
        })
        .collect()
}

/// All head streams of one rollout.
#[derive(Debug, Clone)]
pub struct ValueStreams {
    streams: Vec<StreamState>,
    sigma: f64,
}

impl ValueStreams {
    pub fn new(seed: u64, slots: usize, dim: usize, sigma: f64) -> Self {
        Self {
            streams: (0..slots).map(|s| StreamState::new(seed, s, dim)).collect(),
            sigma,
        }
    }

    /// Next block, shaped `[slot][frame]`.
    pub fn next_block(&mut self, frames: usize) -> Vec<Vec<SemanticVector>> {
        let sigma = self.sigma;
        self.streams
            .iter_mut()
            .map(|s| synth_block_values(s, frames, sigma))
            .collect()
    }
}

pub fn build_engine(sim: &SimConfig, engine: EngineConfig) -> Result<Engine> {
    let sigs = synth_prompt_signatures(
        sim.seed,
        sim.schedule.segment_count(),
        engine.layers,
        engine.heads,
        engine.value_dim,
        sim.signature_separation,
    );
    Engine::new(engine, sim.schedule.clone(), sigs)
}

/// Drives an engine over the whole schedule, calling `observe` after every
/// block.
pub fn drive<F>(sim: &SimConfig, engine_cfg: EngineConfig, mut observe: F) -> Result<Engine>
where
    F: FnMut(&Engine, &ReadSet, &BlockTrace),
{
    sim.validate()?;
    let mut engine = build_engine(sim, engine_cfg)?;
    let mut streams = ValueStreams::new(
        sim.seed,
        engine.config().head_slots(),
        engine.config().value_dim,
        sim.drift_sigma,
    );
    while !engine.is_finished() {
        let block = streams.next_block(engine.next_block_frames());
        let (read_set, trace) = engine.step_block(&block)?;
        observe(&engine, &read_set, &trace);
    }
    Ok(engine)
}

#[derive(Debug, Clone)]
pub struct SimRun {
    pub traces: Vec<BlockTrace>,
    pub report: BudgetReport,
}

pub fn run(sim: &SimConfig) -> Result<SimRun> {
    let engine = drive(sim, sim.engine.clone(), |_, _, _| {})?;
    let traces = engine.traces().to_vec();
    let report = budget_report(&traces)?;
    Ok(SimRun { traces, report })
}

/// Exported rollout inputs: signatures `(segments, layers, heads, dim)` and
/// one `(layers, heads, frames, dim)` buffer per block, all row-major.
#[derive(Debug, Clone)]
pub struct RolloutInputs {
    pub signatures: Vec<f64>,
    pub signature_shape: [usize; 4],
    pub blocks: Vec<Vec<f64>>,
}

pub fn export_inputs(sim: &SimConfig) -> Result<RolloutInputs> {
    sim.validate()?;
    let e = &sim.engine;
    let sigs = synth_prompt_signatures(
        sim.seed,
        sim.schedule.segment_count(),
        e.layers,
        e.heads,
        e.value_dim,
        sim.signature_separation,
    );
    let signatures = sigs.iter().flatten().flat_map(|v| v.as_slice().iter().copied()).collect();
    let mut streams = ValueStreams::new(sim.seed, e.head_slots(), e.value_dim, sim.drift_sigma);
    let total = sim.schedule.total_frames();
    let mut blocks = Vec::new();
    let mut frame = 0;
    while frame < total {
        let frames = e.frames_per_block.min(total - frame);
        let block = streams.next_block(frames);
        blocks.push(block.iter().flatten().flat_map(|v| v.as_slice().iter().copied()).collect());
        frame += frames;
    }
    Ok(RolloutInputs {
        signatures,
        signature_shape: [sim.schedule.segment_count(), e.layers, e.heads, e.value_dim],
        blocks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentComparison {
    pub segment_index: usize,
    pub adaptive_mean_budget: f64,
    pub fixed_mean_budget: f64,
    pub max_window: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub adaptive_mean_budget: f64,
    pub fixed_mean_budget: f64,
    pub savings_ratio: f64,
    pub per_segment: Vec<SegmentComparison>,
    /// Largest adaptive window seen in each segment.
    pub boundary_window_maxima: Vec<usize>,
}

/// Runs the configured engine and a fixed `w_max` engine on the same streams.
pub fn compare_fixed_vs_adaptive(sim: &SimConfig) -> Result<ComparisonReport> {
    let adaptive = drive(sim, sim.engine.clone(), |_, _, _| {})?;
    let fixed = drive(sim, sim.engine.fixed_window(), |_, _, _| {})?;
    let a = budget_report(adaptive.traces())?;
    let f = budget_report(fixed.traces())?;

    let per_segment: Vec<_> = a
        .per_segment
        .iter()
        .zip(&f.per_segment)
        .map(|(sa, sf)| SegmentComparison {
            segment_index: sa.segment_index,
            adaptive_mean_budget: sa.mean_read_budget,
            fixed_mean_budget: sf.mean_read_budget,
            max_window: adaptive
                .traces()
                .iter()
                .filter(|t| t.segment_index == sa.segment_index)
                .map(|t| t.window)
                .max()
                .unwrap_or(0),
        })
        .collect();
    let savings_ratio = if f.mean_read_budget > 0.0 {
        1.0 - a.mean_read_budget / f.mean_read_budget
    } else {
        0.0
    };
    Ok(ComparisonReport {
        adaptive_mean_budget: a.mean_read_budget,
        fixed_mean_budget: f.mean_read_budget,
        savings_ratio,
        boundary_window_maxima: per_segment.iter().map(|s| s.max_window).collect(),
        per_segment,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthComparison {
    pub seconds: u32,
    pub total_frames: usize,
    pub boundaries: Vec<usize>,
    pub report: ComparisonReport,
}

/// Repeats the comparison with the schedule scaled to other durations.
///
/// `base_seconds` is the duration the configured schedule represents;
/// boundaries are stretched proportionally.
pub fn compare_across_lengths(sim: &SimConfig, base_seconds: u32, seconds: &[u32]) -> Result<Vec<LengthComparison>> {
    seconds
        .iter()
        .map(|&s| {
            let total = (sim.schedule.total_frames() as f64 * s as f64 / base_seconds as f64).round() as usize;
            let schedule = sim.schedule.scaled_to(total)?;
            let scaled = SimConfig { schedule: schedule.clone(), ..sim.clone() };
            Ok(LengthComparison {
                seconds: s,
                total_frames: total,
                boundaries: schedule.boundaries().to_vec(),
                report: compare_fixed_vs_adaptive(&scaled)?,
            })
        })
        .collect()
}
