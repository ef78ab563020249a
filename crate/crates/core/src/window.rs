//! Prompt-phase window scheduling.
//!
//! The effective local window is largest right after a prompt switch and
//! just before the next one, and shrinks toward `w_min` in the stable middle
//! of a segment:
//!
//! ```text
//! w_post = exp(−age/τ_post)      w_pre = exp(−distance/τ_pre)
//! w      = max(w_post, w_pre)    W     = round(W_min + (W_max − W_min)·w)
//! ```

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSchedule {
    boundaries: Vec<usize>,
    total_frames: usize,
}

impl PromptSchedule {
    /// `boundaries` are the first frames of segments 1.., strictly ascending
    /// and inside `(0, total_frames)`. Segment 0 starts at frame 0.
    pub fn new(boundaries: Vec<usize>, total_frames: usize) -> Result<Self> {
        if total_frames == 0 {
            return Err(Error::config("schedule.total_frames", "must be positive"));
        }
        for (i, &b) in boundaries.iter().enumerate() {
            if b == 0 || b >= total_frames {
                return Err(Error::config(
                    "schedule.boundaries",
                    format!("boundary {b} is outside (0, {total_frames})"),
                ));
            }
            if i > 0 && boundaries[i - 1] >= b {
                return Err(Error::config("schedule.boundaries", "must be strictly ascending"));
            }
        }
        Ok(Self { boundaries, total_frames })
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn total_frames(&self) -> usize {
        self.total_frames
    }

    pub fn segment_count(&self) -> usize {
        self.boundaries.len() + 1
    }

    /// First frame of segment `m`.
    pub fn segment_start(&self, m: usize) -> usize {
        if m == 0 {
            0
        } else {
            self.boundaries[m - 1]
        }
    }

    /// Same prompt layout stretched to a new length; boundaries are scaled
    /// proportionally and rounded to the nearest frame.
    pub fn scaled_to(&self, total_frames: usize) -> Result<Self> {
        let k = total_frames as f64 / self.total_frames as f64;
        let boundaries = self
            .boundaries
            .iter()
            .map(|&b| (b as f64 * k).round() as usize)
            .collect();
        Self::new(boundaries, total_frames)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentPosition {
    pub segment_index: usize,
    pub segment_start: usize,
    pub next_boundary: Option<usize>,
}

pub fn segment_of(schedule: &PromptSchedule, t: usize) -> Result<SegmentPosition> {
    if t >= schedule.total_frames {
        return Err(Error::FrameOutOfRange {
            frame: t,
            total: schedule.total_frames,
        });
    }
    // Number of boundaries ≤ t; a boundary frame belongs to the new segment.
    let segment_index = schedule.boundaries.partition_point(|&b| b <= t);
    Ok(SegmentPosition {
        segment_index,
        segment_start: schedule.segment_start(segment_index),
        next_boundary: schedule.boundaries.get(segment_index).copied(),
    })
}

/// Unit in which segment age and distance-to-switch are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseUnit {
    Frames,
    /// Ages are counted in whole blocks (floor), distances in blocks left
    /// until the boundary (ceil).
    Blocks { frames_per_block: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowConfig {
    pub w_min: usize,
    pub w_max: usize,
    pub tau_post: f64,
    pub tau_pre: f64,
    pub phase_unit: PhaseUnit,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            w_min: 7,
            w_max: 12,
            tau_post: 18.0,
            tau_pre: 9.0,
            phase_unit: PhaseUnit::Frames,
        }
    }
}

impl WindowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.w_min == 0 {
            return Err(Error::config("engine.window.w_min", "must be positive"));
        }
        if self.w_min > self.w_max {
            return Err(Error::config(
                "engine.window.w_min",
                format!("w_min ({}) exceeds w_max ({})", self.w_min, self.w_max),
            ));
        }
        if !(self.tau_post > 0.0 && self.tau_post.is_finite()) {
            return Err(Error::config("engine.window.tau_post", "must be positive"));
        }
        if !(self.tau_pre > 0.0 && self.tau_pre.is_finite()) {
            return Err(Error::config("engine.window.tau_pre", "must be positive"));
        }
        if let PhaseUnit::Blocks { frames_per_block: 0 } = self.phase_unit {
            return Err(Error::config("engine.frames_per_block", "must be positive"));
        }
        Ok(())
    }

    /// The same config pinned at `w_max` (the fixed-window reference).
    pub fn fixed(&self) -> Self {
        Self {
            w_min: self.w_max,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseWeights {
    pub w_post: f64,
    pub w_pre: f64,
    pub w: f64,
}

pub fn phase_weight(age: usize, distance: Option<usize>, cfg: &WindowConfig) -> PhaseWeights {
    let w_post = (-(age as f64) / cfg.tau_post).exp();
    let w_pre = match distance {
        Some(d) => (-(d as f64) / cfg.tau_pre).exp(),
        None => 0.0,
    };
    PhaseWeights {
        w_post,
        w_pre,
        w: w_post.max(w_pre),
    }
}

/// Integer window for phase weight `w`, rounded half-up and clamped.
pub fn window_size(w: f64, cfg: &WindowConfig) -> usize {
    let span = (cfg.w_max - cfg.w_min) as f64;
    let raw = (cfg.w_min as f64 + span * w + 0.5).floor();
    (raw.max(0.0) as usize).clamp(cfg.w_min, cfg.w_max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseState {
    pub t: usize,
    #[serde(rename = "segment")]
    pub segment_index: usize,
    pub age: usize,
    /// `None` in the last segment (no next switch).
    pub distance: Option<usize>,
    pub w_post: f64,
    pub w_pre: f64,
    pub w: f64,
    pub window: usize,
}

pub fn phase_state(schedule: &PromptSchedule, t: usize, cfg: &WindowConfig) -> Result<PhaseState> {
    let pos = segment_of(schedule, t)?;
    let age_frames = t.saturating_sub(pos.segment_start);
    let dist_frames = pos.next_boundary.map(|b| b.saturating_sub(t));
    let (age, distance) = match cfg.phase_unit {
        PhaseUnit::Frames => (age_frames, dist_frames),
        PhaseUnit::Blocks { frames_per_block } => (
            age_frames / frames_per_block,
            dist_frames.map(|d| d.div_ceil(frames_per_block)),
        ),
    };
    let weights = phase_weight(age, distance, cfg);
    Ok(PhaseState {
        t,
        segment_index: pos.segment_index,
        age,
        distance,
        w_post: weights.w_post,
        w_pre: weights.w_pre,
        w: weights.w,
        window: window_size(weights.w, cfg),
    })
}

/// Per-frame phase table over the whole schedule.
pub fn schedule_table(schedule: &PromptSchedule, cfg: &WindowConfig) -> Result<Vec<PhaseState>> {
    (0..schedule.total_frames())
        .map(|t| phase_state(schedule, t, cfg))
        .collect()
}
