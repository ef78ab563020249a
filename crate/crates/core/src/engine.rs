//! Structured attention memory driven block by block.
//!
//! Each (layer, head) owns a sink region, a rolling local ring with fixed
//! physical capacity `w_max`, an optional semantic bridge and a store of
//! segment anchors. [`Engine::step_block`] runs one generated block:
//!
//! 1. on the first block of a new segment, finalize the previous segment
//!    into an anchor and inject a bridge for the new prompt;
//! 2. assemble the read set for the block's phase window;
//! 3. append the block's frames (sink first, then the ring);
//! 4. advance the bridge by its schedule and prune it once faded;
//! 5. record a [`BlockTrace`].

use std::collections::VecDeque;

use serde::Serialize;

use crate::anchor::{make_anchor, summarize_recent, AnchorConfig, AnchorStore};
use crate::error::{Error, Result};
use crate::injection::{
    advance_bridge, build_bridge, head_gates, prune_bridge, BridgeMemory, HeadGates, HeadSummaries,
    InjectionSchedule, DEFAULT_PRUNE_TOL,
};
use crate::vector::{transition_signal, SemanticVector, TransitionSignal, DEFAULT_EPS_REL};
use crate::window::{phase_state, PhaseUnit, PromptSchedule, WindowConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub layers: usize,
    pub heads: usize,
    pub value_dim: usize,
    pub frames_per_block: usize,
    pub sink_frames: usize,
    pub window: WindowConfig,
    pub anchors: AnchorConfig,
    pub bridge_lambda: f64,
    pub bridge_schedule: InjectionSchedule,
    /// Relative stabilizer; the absolute epsilon is this times the mean
    /// squared component of the tangent.
    pub eps_stabilized: f64,
    pub tokens_per_frame: usize,
    pub bridge_prune_tol: f64,
    /// When false, prompt switches still finalize anchors but write no bridge.
    pub injection_enabled: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            layers: 2,
            heads: 4,
            value_dim: 16,
            frames_per_block: 3,
            sink_frames: 3,
            window: WindowConfig::default(),
            anchors: AnchorConfig::default(),
            bridge_lambda: 0.85,
            bridge_schedule: InjectionSchedule::Decayed,
            eps_stabilized: DEFAULT_EPS_REL,
            tokens_per_frame: 1,
            bridge_prune_tol: DEFAULT_PRUNE_TOL,
            injection_enabled: true,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        for (key, value) in [
            ("engine.layers", self.layers),
            ("engine.heads", self.heads),
            ("engine.value_dim", self.value_dim),
            ("engine.frames_per_block", self.frames_per_block),
            ("engine.sink_frames", self.sink_frames),
            ("engine.tokens_per_frame", self.tokens_per_frame),
        ] {
            if value == 0 {
                return Err(Error::config(key, "must be positive"));
            }
        }
        self.window.validate()?;
        if let PhaseUnit::Blocks { frames_per_block } = self.window.phase_unit {
            if frames_per_block != self.frames_per_block {
                return Err(Error::config(
                    "engine.window.phase_unit",
                    "block unit must use engine.frames_per_block",
                ));
            }
        }
        self.anchors.validate()?;
        if !(0.0..=1.0).contains(&self.bridge_lambda) {
            return Err(Error::config("engine.bridge_lambda", "must be in [0, 1]"));
        }
        if !(self.eps_stabilized > 0.0 && self.eps_stabilized.is_finite()) {
            return Err(Error::config("engine.eps_stabilized", "must be positive"));
        }
        if !(self.bridge_prune_tol > 0.0 && self.bridge_prune_tol.is_finite()) {
            return Err(Error::config("engine.bridge_prune_tol", "must be positive"));
        }
        Ok(())
    }

    pub fn head_slots(&self) -> usize {
        self.layers * self.heads
    }

    /// Physical frames stored per head: sink plus the full ring.
    pub fn frame_capacity(&self) -> usize {
        self.sink_frames + self.window.w_max
    }

    /// Copy of this config with the window pinned at `w_max`.
    pub fn fixed_window(&self) -> Self {
        Self {
            window: self.window.fixed(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct StoredFrame {
    index: usize,
    value: SemanticVector,
}

/// Memory of one (layer, head).
#[derive(Debug, Clone)]
pub struct HeadCache {
    sink: Vec<SemanticVector>,
    local: VecDeque<StoredFrame>,
    bridge: Option<BridgeMemory>,
    anchors: AnchorStore,
    last_block_mean: Option<SemanticVector>,
    prev_block_mean: Option<SemanticVector>,
}

impl HeadCache {
    fn new(cfg: &EngineConfig) -> Self {
        Self {
            sink: Vec::with_capacity(cfg.sink_frames),
            local: VecDeque::with_capacity(cfg.window.w_max + 1),
            bridge: None,
            anchors: AnchorStore::new(cfg.anchors.max_anchors),
            last_block_mean: None,
            prev_block_mean: None,
        }
    }

    pub fn sink(&self) -> &[SemanticVector] {
        &self.sink
    }

    /// Absolute frame indices held in the local ring, oldest first.
    pub fn local_indices(&self) -> Vec<usize> {
        self.local.iter().map(|f| f.index).collect()
    }

    pub fn local_values(&self) -> impl Iterator<Item = &SemanticVector> {
        self.local.iter().map(|f| &f.value)
    }

    pub fn stored_frames(&self) -> usize {
        self.sink.len() + self.local.len()
    }

    pub fn bridge(&self) -> Option<&BridgeMemory> {
        self.bridge.as_ref()
    }

    pub fn anchors(&self) -> &AnchorStore {
        &self.anchors
    }

    /// Frames with absolute index below `end`, in index order.
    fn frames_before(&self, end: usize) -> Vec<SemanticVector> {
        // Sink frames are frames 0..sink.len().
        let sink = self.sink.iter().enumerate().filter(|(i, _)| *i < end).map(|(_, v)| v.clone());
        let local = self.local.iter().filter(|f| f.index < end).map(|f| f.value.clone());
        sink.chain(local).collect()
    }
}

/// Entries one head reads for a block.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadReadSet {
    pub layer: usize,
    pub head: usize,
    pub sink: Vec<SemanticVector>,
    /// Anchors already multiplied by their injection scale.
    pub anchors: Vec<SemanticVector>,
    /// `[B_s, B_r]` when a bridge is live.
    pub bridge: Vec<SemanticVector>,
    pub local: Vec<SemanticVector>,
    /// Absolute frame indices of `local`.
    pub local_frames: Vec<usize>,
    pub budget: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReadSet {
    pub window: usize,
    pub heads: Vec<HeadReadSet>,
}

impl ReadSet {
    /// Per-head read budget (identical for every head).
    pub fn budget(&self) -> usize {
        self.heads.first().map_or(0, |h| h.budget)
    }

    pub fn total_budget(&self) -> usize {
        self.heads.iter().map(|h| h.budget).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockTrace {
    pub block_index: usize,
    pub first_frame: usize,
    pub segment_index: usize,
    pub age: usize,
    pub distance: Option<usize>,
    pub window: usize,
    pub read_budget: usize,
    /// Norm of all bridge entries across heads as read in this block.
    pub bridge_norm: f64,
    pub switch_flag: bool,
    pub anchors_count: usize,
}

/// What was computed at the most recent prompt switch, per head slot.
#[derive(Debug, Clone)]
pub struct InjectionRecord {
    pub block_index: usize,
    pub segment_index: usize,
    pub signals: Vec<TransitionSignal>,
    pub gates: Vec<HeadGates>,
    pub summaries: Vec<HeadSummaries>,
}

#[derive(Debug, Clone)]
pub struct Engine {
    cfg: EngineConfig,
    schedule: PromptSchedule,
    /// `[segment][layer * heads + head]`
    signatures: Vec<Vec<SemanticVector>>,
    heads: Vec<HeadCache>,
    next_block: usize,
    next_frame: usize,
    current_segment: usize,
    traces: Vec<BlockTrace>,
    last_injection: Option<InjectionRecord>,
}

impl Engine {
    pub fn new(
        cfg: EngineConfig,
        schedule: PromptSchedule,
        signatures: Vec<Vec<SemanticVector>>,
    ) -> Result<Self> {
        cfg.validate()?;
        if signatures.len() != schedule.segment_count() {
            return Err(Error::ShapeMismatch {
                what: "prompt signatures (segments)",
                expected: vec![schedule.segment_count()],
                actual: vec![signatures.len()],
            });
        }
        for seg in &signatures {
            if seg.len() != cfg.head_slots() {
                return Err(Error::ShapeMismatch {
                    what: "prompt signatures (layers x heads)",
                    expected: vec![cfg.layers, cfg.heads],
                    actual: vec![seg.len()],
                });
            }
            for v in seg {
                if v.dim() != cfg.value_dim {
                    return Err(Error::DimensionMismatch {
                        expected: cfg.value_dim,
                        actual: v.dim(),
                    });
                }
            }
        }
        // Every boundary must be the segment of a distinct block start.
        let b = cfg.frames_per_block;
        let mut last_block = 0;
        for &boundary in schedule.boundaries() {
            let block = boundary.div_ceil(b);
            if block * b >= schedule.total_frames() {
                return Err(Error::config(
                    "schedule.boundaries",
                    format!("boundary {boundary} starts no block (frames_per_block = {b})"),
                ));
            }
            if block == last_block {
                return Err(Error::config(
                    "schedule.boundaries",
                    format!("boundary {boundary} shares a block with the previous segment start"),
                ));
            }
            last_block = block;
        }

        let heads = (0..cfg.head_slots()).map(|_| HeadCache::new(&cfg)).collect();
        Ok(Self {
            cfg,
            schedule,
            signatures,
            heads,
            next_block: 0,
            next_frame: 0,
            current_segment: 0,
            traces: Vec::new(),
            last_injection: None,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn schedule(&self) -> &PromptSchedule {
        &self.schedule
    }

    pub fn total_blocks(&self) -> usize {
        self.schedule.total_frames().div_ceil(self.cfg.frames_per_block)
    }

    pub fn blocks_done(&self) -> usize {
        self.next_block
    }

    pub fn is_finished(&self) -> bool {
        self.next_frame >= self.schedule.total_frames()
    }

    /// Frames expected by the next call to [`Engine::step_block`].
    pub fn next_block_frames(&self) -> usize {
        self.cfg
            .frames_per_block
            .min(self.schedule.total_frames().saturating_sub(self.next_frame))
    }

    pub fn traces(&self) -> &[BlockTrace] {
        &self.traces
    }

    pub fn head(&self, layer: usize, head: usize) -> &HeadCache {
        &self.heads[layer * self.cfg.heads + head]
    }

    pub fn last_injection(&self) -> Option<&InjectionRecord> {
        self.last_injection.as_ref()
    }

    /// Runs one block. `block[slot][frame]` with `slot = layer * heads + head`.
    pub fn step_block(&mut self, block: &[Vec<SemanticVector>]) -> Result<(ReadSet, BlockTrace)> {
        if self.is_finished() {
            return Err(Error::RolloutFinished { blocks: self.next_block });
        }
        let frames = self.next_block_frames();
        self.check_block_shape(block, frames)?;

        let first_frame = self.next_frame;
        let phase = phase_state(&self.schedule, first_frame, &self.cfg.window)?;
        let switch_flag = phase.segment_index != self.current_segment;
        if switch_flag {
            debug_assert_eq!(phase.segment_index, self.current_segment + 1);
            self.finalize_segment(phase.segment_index)?;
            if self.cfg.injection_enabled {
                self.inject(phase.segment_index)?;
            }
            self.current_segment = phase.segment_index;
        }

        let read_set = self.assemble_read_set(phase.window);
        let bridge_norm = self
            .heads
            .iter()
            .filter_map(|h| h.bridge.as_ref())
            .map(|b| b.norm().powi(2))
            .sum::<f64>()
            .sqrt();
        let anchors_count = self.heads[0].anchors.len();

        self.append_block(block, first_frame);
        self.advance_bridges()?;

        let trace = BlockTrace {
            block_index: self.next_block,
            first_frame,
            segment_index: phase.segment_index,
            age: phase.age,
            distance: phase.distance,
            window: phase.window,
            read_budget: read_set.budget(),
            bridge_norm,
            switch_flag,
            anchors_count,
        };
        self.traces.push(trace.clone());
        self.next_block += 1;
        self.next_frame += frames;
        Ok((read_set, trace))
    }

    /// Runs one block from a row-major `(layers, heads, frames, value_dim)`
    /// buffer.
    pub fn step_block_flat(&mut self, data: &[f64]) -> Result<(ReadSet, BlockTrace)> {
        let frames = self.next_block_frames();
        let dim = self.cfg.value_dim;
        let expected = self.cfg.head_slots() * frames * dim;
        if data.len() != expected {
            return Err(Error::ShapeMismatch {
                what: "block values",
                expected: vec![self.cfg.layers, self.cfg.heads, frames, dim],
                actual: vec![data.len()],
            });
        }
        let block = data
            .chunks_exact(frames * dim)
            .map(|slot| {
                slot.chunks_exact(dim)
                    .map(|c| SemanticVector::new(c.to_vec()))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        self.step_block(&block)
    }

    fn check_block_shape(&self, block: &[Vec<SemanticVector>], frames: usize) -> Result<()> {
        let expected = || vec![self.cfg.layers, self.cfg.heads, frames, self.cfg.value_dim];
        if block.len() != self.cfg.head_slots() {
            return Err(Error::ShapeMismatch {
                what: "block values",
                expected: expected(),
                actual: vec![block.len()],
            });
        }
        for slot in block {
            if slot.len() != frames {
                return Err(Error::ShapeMismatch {
                    what: "block values",
                    expected: expected(),
                    actual: vec![block.len(), slot.len()],
                });
            }
            if let Some(v) = slot.iter().find(|v| v.dim() != self.cfg.value_dim) {
                return Err(Error::DimensionMismatch {
                    expected: self.cfg.value_dim,
                    actual: v.dim(),
                });
            }
        }
        Ok(())
    }

    fn finalize_segment(&mut self, new_segment: usize) -> Result<()> {
        let completed = new_segment - 1;
        let end = self.schedule.segment_start(new_segment);
        for (slot, head) in self.heads.iter_mut().enumerate() {
            let mut frames = head.frames_before(end);
            if frames.is_empty() {
                frames = head.frames_before(usize::MAX);
            }
            let u = summarize_recent(&frames, self.cfg.anchors.recent_frames)?;
            let anchor = make_anchor(&u, &self.signatures[completed][slot], &self.cfg.anchors, completed)?;
            head.anchors.push_anchor(anchor)?;
        }
        Ok(())
    }

    fn inject(&mut self, segment: usize) -> Result<()> {
        let dim = self.cfg.value_dim;
        let mut record = InjectionRecord {
            block_index: self.next_block,
            segment_index: segment,
            signals: Vec::with_capacity(self.heads.len()),
            gates: Vec::with_capacity(self.heads.len()),
            summaries: Vec::with_capacity(self.heads.len()),
        };
        for (slot, head) in self.heads.iter_mut().enumerate() {
            let tangent = match (&head.prev_block_mean, &head.last_block_mean) {
                (Some(prev), Some(last)) => last.sub(prev),
                _ => SemanticVector::zeros(dim),
            };
            let signal = transition_signal(
                &self.signatures[segment - 1][slot],
                &self.signatures[segment][slot],
                tangent,
                self.cfg.eps_stabilized,
            )?;
            let summaries = HeadSummaries {
                recent: head.last_block_mean.clone().unwrap_or_else(|| SemanticVector::zeros(dim)),
                sink: SemanticVector::mean(&head.sink).unwrap_or_else(|| SemanticVector::zeros(dim)),
                layer_index: slot / self.cfg.heads,
                head_index: slot % self.cfg.heads,
            };
            let gates = head_gates(&summaries, &signal.delta_perp, signal.strength)?;
            head.bridge = Some(build_bridge(&summaries, &signal.delta_perp, gates, self.cfg.bridge_schedule)?);
            record.signals.push(signal);
            record.gates.push(gates);
            record.summaries.push(summaries);
        }
        self.last_injection = Some(record);
        Ok(())
    }

    fn assemble_read_set(&self, window: usize) -> ReadSet {
        let tpf = self.cfg.tokens_per_frame;
        let heads = self
            .heads
            .iter()
            .enumerate()
            .map(|(slot, head)| {
                let take = window.min(head.local.len());
                let skip = head.local.len() - take;
                let (local_frames, local): (Vec<_>, Vec<_>) = head
                    .local
                    .iter()
                    .skip(skip)
                    .map(|f| (f.index, f.value.clone()))
                    .unzip();
                let anchors: Vec<_> = head.anchors.anchors_view().into_iter().map(|a| a.vector).collect();
                let bridge: Vec<_> = head
                    .bridge
                    .as_ref()
                    .map(|b| b.entries().into_iter().cloned().collect())
                    .unwrap_or_default();
                let budget = tpf * (head.sink.len() + local.len()) + bridge.len() + anchors.len();
                HeadReadSet {
                    layer: slot / self.cfg.heads,
                    head: slot % self.cfg.heads,
                    sink: head.sink.clone(),
                    anchors,
                    bridge,
                    local,
                    local_frames,
                    budget,
                }
            })
            .collect();
        ReadSet { window, heads }
    }

    fn append_block(&mut self, block: &[Vec<SemanticVector>], first_frame: usize) {
        let sink_cap = self.cfg.sink_frames;
        let ring_cap = self.cfg.window.w_max;
        for (head, frames) in self.heads.iter_mut().zip(block) {
            for (offset, value) in frames.iter().enumerate() {
                if head.sink.len() < sink_cap {
                    head.sink.push(value.clone());
                } else {
                    head.local.push_back(StoredFrame {
                        index: first_frame + offset,
                        value: value.clone(),
                    });
                    while head.local.len() > ring_cap {
                        head.local.pop_front();
                    }
                }
            }
            head.prev_block_mean = head.last_block_mean.take();
            head.last_block_mean = SemanticVector::mean(frames);
        }
    }

    fn advance_bridges(&mut self) -> Result<()> {
        for head in &mut self.heads {
            if let Some(bridge) = head.bridge.take() {
                let initial = bridge.initial_norm;
                let advanced = advance_bridge(bridge, self.cfg.bridge_lambda)?;
                head.bridge = prune_bridge(advanced, self.cfg.bridge_prune_tol, initial);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentBudget {
    pub segment_index: usize,
    pub blocks: usize,
    pub mean_read_budget: f64,
    pub mean_window: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetReport {
    pub blocks: usize,
    pub mean_read_budget: f64,
    pub min_read_budget: usize,
    pub max_read_budget: usize,
    pub mean_window: f64,
    pub per_segment: Vec<SegmentBudget>,
}

pub fn budget_report(traces: &[BlockTrace]) -> Result<BudgetReport> {
    if traces.is_empty() {
        return Err(Error::Empty("no block traces"));
    }
    let n = traces.len() as f64;
    let mean_read_budget = traces.iter().map(|t| t.read_budget as f64).sum::<f64>() / n;
    let mean_window = traces.iter().map(|t| t.window as f64).sum::<f64>() / n;
    let min_read_budget = traces.iter().map(|t| t.read_budget).min().unwrap_or(0);
    let max_read_budget = traces.iter().map(|t| t.read_budget).max().unwrap_or(0);

    let segments = traces.iter().map(|t| t.segment_index).max().unwrap_or(0) + 1;
    let mut per_segment = Vec::new();
    for seg in 0..segments {
        let rows: Vec<_> = traces.iter().filter(|t| t.segment_index == seg).collect();
        if rows.is_empty() {
            continue;
        }
        let k = rows.len() as f64;
        per_segment.push(SegmentBudget {
            segment_index: seg,
            blocks: rows.len(),
            mean_read_budget: rows.iter().map(|t| t.read_budget as f64).sum::<f64>() / k,
            mean_window: rows.iter().map(|t| t.window as f64).sum::<f64>() / k,
        });
    }
    Ok(BudgetReport {
        blocks: traces.len(),
        mean_read_budget,
        min_read_budget,
        max_read_budget,
        mean_window,
        per_segment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_sig(dim: usize, axis: usize) -> SemanticVector {
        let mut c = vec![0.0; dim];
        c[axis % dim] = 1.0;
        SemanticVector::new(c).unwrap()
    }

    fn minimal() -> Engine {
        let cfg = EngineConfig {
            layers: 1,
            heads: 1,
            value_dim: 4,
            ..EngineConfig::default()
        };
        let schedule = PromptSchedule::new(vec![12], 30).unwrap();
        let sigs = vec![vec![unit_sig(4, 0)], vec![unit_sig(4, 1)]];
        Engine::new(cfg, schedule, sigs).unwrap()
    }

    fn block(engine: &Engine, k: usize) -> Vec<Vec<SemanticVector>> {
        let frames = engine.next_block_frames();
        (0..engine.config().head_slots())
            .map(|slot| {
                (0..frames)
                    .map(|f| {
                        let x = (k * 7 + f * 3 + slot) as f64;
                        SemanticVector::new(vec![x.sin(), x.cos(), 0.5, (0.3 * x).sin()]).unwrap()
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn minimal_engine_starts_empty() {
        let e = minimal();
        assert_eq!(e.blocks_done(), 0);
        assert_eq!(e.head(0, 0).stored_frames(), 0);
        assert_eq!(e.total_blocks(), 10);
    }

    #[test]
    fn rejects_signature_count_mismatch() {
        let cfg = EngineConfig { layers: 1, heads: 1, value_dim: 4, ..EngineConfig::default() };
        let schedule = PromptSchedule::new(vec![12], 30).unwrap();
        let err = Engine::new(cfg, schedule, vec![vec![unit_sig(4, 0)]]);
        assert!(matches!(err, Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn rejects_boundaries_sharing_a_block() {
        let cfg = EngineConfig { layers: 1, heads: 1, value_dim: 4, ..EngineConfig::default() };
        let schedule = PromptSchedule::new(vec![10, 11], 30).unwrap();
        let sigs = vec![vec![unit_sig(4, 0)]; 3];
        assert!(matches!(Engine::new(cfg, schedule, sigs), Err(Error::Config { .. })));
    }

    #[test]
    fn cold_start_reads_nothing() {
        let mut e = minimal();
        let b = block(&e, 0);
        let (rs, trace) = e.step_block(&b).unwrap();
        assert_eq!(rs.budget(), 0);
        assert!(rs.heads[0].local.is_empty());
        assert_eq!(trace.read_budget, 0);
        assert_eq!(e.head(0, 0).stored_frames(), 3);
        assert_eq!(e.head(0, 0).sink().len(), 3);
    }

    #[test]
    fn switch_block_injects_bridge() {
        let mut e = minimal();
        for k in 0..4 {
            let b = block(&e, k);
            let (_, t) = e.step_block(&b).unwrap();
            assert!(!t.switch_flag);
        }
        let b = block(&e, 4);
        let (rs, t) = e.step_block(&b).unwrap();
        assert!(t.switch_flag);
        assert_eq!(t.first_frame, 12);
        assert_eq!(t.window, 12);
        assert!(t.bridge_norm > 0.0);
        assert_eq!(rs.heads[0].bridge.len(), 2);
        assert_eq!(rs.heads[0].anchors.len(), 1);
        assert_eq!(t.anchors_count, 1);
        // sink 3 + local 9 frames + 2 bridge entries + 1 anchor
        assert_eq!(t.read_budget, 3 + 9 + 2 + 1);
    }

    #[test]
    fn ring_is_bounded_and_contiguous() {
        let mut e = minimal();
        while !e.is_finished() {
            let b = block(&e, e.blocks_done());
            e.step_block(&b).unwrap();
            let h = e.head(0, 0);
            assert!(h.stored_frames() <= e.config().frame_capacity());
            let idx = h.local_indices();
            assert!(idx.windows(2).all(|w| w[1] == w[0] + 1));
        }
        assert_eq!(e.head(0, 0).local_indices().last(), Some(&29));
        let b = vec![vec![]; 1];
        assert!(matches!(e.step_block(&b), Err(Error::RolloutFinished { .. })));
    }

    #[test]
    fn shape_errors() {
        let mut e = minimal();
        assert!(e.step_block(&[]).is_err());
        assert!(e.step_block_flat(&[0.0; 5]).is_err());
        assert!(e.step_block_flat(&[0.0; 12]).is_ok());
    }

    #[test]
    fn partial_last_block() {
        let cfg = EngineConfig { layers: 1, heads: 1, value_dim: 2, ..EngineConfig::default() };
        let schedule = PromptSchedule::new(vec![], 10).unwrap();
        let mut e = Engine::new(cfg, schedule, vec![vec![unit_sig(2, 0)]]).unwrap();
        for _ in 0..3 {
            e.step_block_flat(&[0.1; 6]).unwrap();
        }
        assert_eq!(e.next_block_frames(), 1);
        e.step_block_flat(&[0.1; 2]).unwrap();
        assert!(e.is_finished());
        assert_eq!(e.total_blocks(), 4);
    }

    #[test]
    fn report_rejects_empty() {
        assert!(budget_report(&[]).is_err());
    }

    #[test]
    fn report_constant_window() {
        let cfg = EngineConfig {
            layers: 1,
            heads: 1,
            value_dim: 4,
            window: WindowConfig { w_min: 12, ..WindowConfig::default() },
            ..EngineConfig::default()
        };
        let schedule = PromptSchedule::new(vec![12], 30).unwrap();
        let mut e = Engine::new(cfg, schedule, vec![vec![unit_sig(4, 0)], vec![unit_sig(4, 2)]]).unwrap();
        while !e.is_finished() {
            let b = block(&e, e.blocks_done());
            e.step_block(&b).unwrap();
        }
        let r = budget_report(e.traces()).unwrap();
        assert_eq!(r.mean_window, 12.0);
        assert_eq!(r.per_segment.len(), 2);
    }
}
