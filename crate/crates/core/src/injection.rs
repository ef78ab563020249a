//! Head-wise semantic bridge written at prompt boundaries.
//!
//! A bridge is a pair of transient entries per head: the sink summary and the
//! recent summary, each pulled toward the motion-neutral prompt update by a
//! gate. After injection the bridge evolves once per generated block
//! according to its [`InjectionSchedule`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::{check_dims, cosine, SemanticVector};

/// Bridges are dropped once their norm falls below this fraction of the
/// norm they had when injected.
pub const DEFAULT_PRUNE_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectionSchedule {
    /// Full-strength bridge for exactly one block, then removed.
    OneShot,
    /// Full-strength bridge until the next prompt switch replaces it.
    Constant,
    /// Bridge scaled by `λ` after every block.
    Decayed,
}

impl InjectionSchedule {
    pub const ALL: [InjectionSchedule; 3] = [Self::OneShot, Self::Constant, Self::Decayed];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::OneShot => "one_shot",
            Self::Constant => "constant",
            Self::Decayed => "decayed",
        }
    }
}

impl fmt::Display for InjectionSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InjectionSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one_shot" => Ok(Self::OneShot),
            "constant" => Ok(Self::Constant),
            "decayed" => Ok(Self::Decayed),
            other => Err(Error::config(
                "bridge_schedule",
                format!("expected one_shot, constant or decayed, got `{other}`"),
            )),
        }
    }
}

/// Value-cache summaries of one head at the moment of a switch.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadSummaries {
    pub recent: SemanticVector,
    pub sink: SemanticVector,
    pub layer_index: usize,
    pub head_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadGates {
    pub g_recent: f64,
    pub g_sink: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BridgeMemory {
    pub bridge_sink: SemanticVector,
    pub bridge_recent: SemanticVector,
    /// Cumulative multiplier applied to the entries since injection. The
    /// stored vectors already include it.
    pub scale: f64,
    pub age_blocks: u32,
    pub schedule: InjectionSchedule,
    /// Norm of `[B_s; B_r]` when the bridge was built.
    pub initial_norm: f64,
}

impl BridgeMemory {
    /// Norm of the concatenated entries `[B_s; B_r]`.
    pub fn norm(&self) -> f64 {
        (self.bridge_sink.norm_sq() + self.bridge_recent.norm_sq()).sqrt()
    }

    /// Entries in read order (sink-side first).
    pub fn entries(&self) -> [&SemanticVector; 2] {
        [&self.bridge_sink, &self.bridge_recent]
    }
}

fn clip01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Gates from switch strength and clipped cosine alignment.
///
/// `ρ·[cos]₀¹` can reach 2; the product is clamped back to [0, 1] so the
/// bridge stays an interpolation between summary and update.
pub fn head_gates(summaries: &HeadSummaries, delta_perp: &SemanticVector, rho: f64) -> Result<HeadGates> {
    check_dims(&summaries.recent, delta_perp)?;
    check_dims(&summaries.sink, delta_perp)?;
    if !(0.0..=2.0).contains(&rho) {
        return Err(Error::config("rho", format!("switch strength must be in [0, 2], got {rho}")));
    }
    let g_recent = clip01(rho * clip01(cosine(&summaries.recent, delta_perp)));
    let g_sink = clip01(rho * clip01(cosine(&summaries.sink, delta_perp)));
    Ok(HeadGates { g_recent, g_sink })
}

pub fn build_bridge(
    summaries: &HeadSummaries,
    delta_perp: &SemanticVector,
    gates: HeadGates,
    schedule: InjectionSchedule,
) -> Result<BridgeMemory> {
    check_dims(&summaries.recent, delta_perp)?;
    check_dims(&summaries.sink, delta_perp)?;
    for (name, g) in [("g_recent", gates.g_recent), ("g_sink", gates.g_sink)] {
        if !(0.0..=1.0).contains(&g) {
            return Err(Error::config(name, format!("gate must be in [0, 1], got {g}")));
        }
    }
    let bridge_recent = summaries.recent.blend(delta_perp, gates.g_recent);
    let bridge_sink = summaries.sink.blend(delta_perp, gates.g_sink);
    let initial_norm = (bridge_sink.norm_sq() + bridge_recent.norm_sq()).sqrt();
    Ok(BridgeMemory {
        bridge_sink,
        bridge_recent,
        scale: 1.0,
        age_blocks: 0,
        schedule,
        initial_norm,
    })
}

/// Moves a bridge forward by one generated block.
pub fn advance_bridge(mut bridge: BridgeMemory, lambda: f64) -> Result<BridgeMemory> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::config("bridge_lambda", format!("must be in [0, 1], got {lambda}")));
    }
    bridge.age_blocks += 1;
    match bridge.schedule {
        InjectionSchedule::Decayed => {
            bridge.scale *= lambda;
            bridge.bridge_sink = bridge.bridge_sink.scaled(lambda);
            bridge.bridge_recent = bridge.bridge_recent.scaled(lambda);
        }
        InjectionSchedule::Constant => {}
        InjectionSchedule::OneShot => {
            bridge.scale = 0.0;
            bridge.bridge_sink = SemanticVector::zeros(bridge.bridge_sink.dim());
            bridge.bridge_recent = SemanticVector::zeros(bridge.bridge_recent.dim());
        }
    }
    Ok(bridge)
}

/// Drops a bridge whose norm has decayed below `norm_tol · initial_norm`.
pub fn prune_bridge(bridge: BridgeMemory, norm_tol: f64, initial_norm: f64) -> Option<BridgeMemory> {
    debug_assert!(norm_tol > 0.0);
    if bridge.scale == 0.0 || bridge.norm() < norm_tol * initial_norm {
        None
    } else {
        Some(bridge)
    }
}
