//! Segment-level semantic anchors.
//!
//! When a prompt segment completes, its recent value cache is summarized and
//! mixed with the segment's prompt signature. Anchors are kept FIFO up to a
//! fixed count and read at a static scale.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::vector::{check_dims, SemanticVector};

#[derive(Debug, Clone, PartialEq)]
pub struct AnchorConfig {
    pub alpha: f64,
    pub recent_frames: usize,
    pub max_anchors: usize,
    pub injection_scale: f64,
}

impl Default for AnchorConfig {
    fn default() -> Self {
        Self {
            alpha: 0.35,
            recent_frames: 6,
            max_anchors: 4,
            injection_scale: 0.8,
        }
    }
}

impl AnchorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::config("engine.anchors.alpha", "must be in [0, 1]"));
        }
        if self.recent_frames == 0 {
            return Err(Error::config("engine.anchors.recent_frames", "must be positive"));
        }
        if self.max_anchors == 0 {
            return Err(Error::config("engine.anchors.max_anchors", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.injection_scale) {
            return Err(Error::config("engine.anchors.injection_scale", "must be in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentAnchor {
    pub vector: SemanticVector,
    pub segment_index: usize,
    pub injection_scale: f64,
}

/// Mean of the last `min(r_anchor, len)` frame vectors.
pub fn summarize_recent(frame_values: &[SemanticVector], r_anchor: usize) -> Result<SemanticVector> {
    if frame_values.is_empty() {
        return Err(Error::Empty("no frames to summarize"));
    }
    let take = r_anchor.min(frame_values.len()).max(1);
    let tail = &frame_values[frame_values.len() - take..];
    for v in tail {
        check_dims(&tail[0], v)?;
    }
    Ok(SemanticVector::mean(tail).expect("non-empty tail"))
}

/// `(1 − α)·u + α·p`
pub fn make_anchor(
    u: &SemanticVector,
    p: &SemanticVector,
    cfg: &AnchorConfig,
    segment_index: usize,
) -> Result<SegmentAnchor> {
    check_dims(u, p)?;
    Ok(SegmentAnchor {
        vector: u.blend(p, cfg.alpha),
        segment_index,
        injection_scale: cfg.injection_scale,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnchorStore {
    max_anchors: usize,
    anchors: VecDeque<SegmentAnchor>,
}

impl AnchorStore {
    pub fn new(max_anchors: usize) -> Self {
        assert!(max_anchors > 0);
        Self {
            max_anchors,
            anchors: VecDeque::with_capacity(max_anchors + 1),
        }
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn segment_indices(&self) -> Vec<usize> {
        self.anchors.iter().map(|a| a.segment_index).collect()
    }

    /// Appends an anchor, evicting the oldest when over capacity.
    pub fn push_anchor(&mut self, anchor: SegmentAnchor) -> Result<()> {
        if let Some(last) = self.anchors.back() {
            if anchor.segment_index <= last.segment_index {
                return Err(Error::NonMonotoneSegment {
                    last: last.segment_index,
                    got: anchor.segment_index,
                });
            }
        }
        self.anchors.push_back(anchor);
        while self.anchors.len() > self.max_anchors {
            self.anchors.pop_front();
        }
        Ok(())
    }

    /// Anchors in ascending segment order with vectors pre-multiplied by
    /// their injection scale.
    pub fn anchors_view(&self) -> Vec<SegmentAnchor> {
        self.anchors
            .iter()
            .map(|a| SegmentAnchor {
                vector: a.vector.scaled(a.injection_scale),
                ..a.clone()
            })
            .collect()
    }
}
