//! TOML configuration files.
//!
//! Every key is optional; omitted keys take the defaults of
//! [`SimConfig::default`]. Unknown keys are rejected. See
//! `configs/default.toml` for the full layout.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::anchor::AnchorConfig;
use crate::engine::EngineConfig;
use crate::error::{Error, Result};
use crate::injection::InjectionSchedule;
use crate::sim::SimConfig;
use crate::window::{PhaseUnit, PromptSchedule, WindowConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseUnitName {
    Frames,
    Blocks,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleFile {
    pub boundaries: Vec<usize>,
    pub total_frames: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowFile {
    pub w_min: usize,
    pub w_max: usize,
    pub tau_post: f64,
    pub tau_pre: f64,
    pub phase_unit: PhaseUnitName,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnchorFile {
    pub alpha: f64,
    pub recent_frames: usize,
    pub max_anchors: usize,
    pub injection_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineFile {
    pub layers: usize,
    pub heads: usize,
    pub value_dim: usize,
    pub frames_per_block: usize,
    pub sink_frames: usize,
    pub bridge_lambda: f64,
    pub bridge_schedule: InjectionSchedule,
    pub eps_stabilized: f64,
    pub tokens_per_frame: usize,
    pub bridge_prune_tol: f64,
    pub injection_enabled: bool,
    pub window: WindowFile,
    pub anchors: AnchorFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimFile {
    pub seed: u64,
    pub drift_sigma: f64,
    pub signature_separation: f64,
    pub schedule: ScheduleFile,
    pub engine: EngineFile,
}

impl Default for ScheduleFile {
    fn default() -> Self {
        let s = SimConfig::default().schedule;
        Self {
            boundaries: s.boundaries().to_vec(),
            total_frames: s.total_frames(),
        }
    }
}

impl Default for WindowFile {
    fn default() -> Self {
        let w = WindowConfig::default();
        Self {
            w_min: w.w_min,
            w_max: w.w_max,
            tau_post: w.tau_post,
            tau_pre: w.tau_pre,
            phase_unit: PhaseUnitName::Frames,
        }
    }
}

impl Default for AnchorFile {
    fn default() -> Self {
        let a = AnchorConfig::default();
        Self {
            alpha: a.alpha,
            recent_frames: a.recent_frames,
            max_anchors: a.max_anchors,
            injection_scale: a.injection_scale,
        }
    }
}

impl Default for EngineFile {
    fn default() -> Self {
        let e = EngineConfig::default();
        Self {
            layers: e.layers,
            heads: e.heads,
            value_dim: e.value_dim,
            frames_per_block: e.frames_per_block,
            sink_frames: e.sink_frames,
            bridge_lambda: e.bridge_lambda,
            bridge_schedule: e.bridge_schedule,
            eps_stabilized: e.eps_stabilized,
            tokens_per_frame: e.tokens_per_frame,
            bridge_prune_tol: e.bridge_prune_tol,
            injection_enabled: e.injection_enabled,
            window: WindowFile::default(),
            anchors: AnchorFile::default(),
        }
    }
}

impl Default for SimFile {
    fn default() -> Self {
        let s = SimConfig::default();
        Self {
            seed: s.seed,
            drift_sigma: s.drift_sigma,
            signature_separation: s.signature_separation,
            schedule: ScheduleFile::default(),
            engine: EngineFile::default(),
        }
    }
}

impl ScheduleFile {
    pub fn to_schedule(&self) -> Result<PromptSchedule> {
        PromptSchedule::new(self.boundaries.clone(), self.total_frames)
    }
}

impl EngineFile {
    pub fn to_config(&self) -> Result<EngineConfig> {
        let phase_unit = match self.window.phase_unit {
            PhaseUnitName::Frames => PhaseUnit::Frames,
            PhaseUnitName::Blocks => PhaseUnit::Blocks {
                frames_per_block: self.frames_per_block,
            },
        };
        let cfg = EngineConfig {
            layers: self.layers,
            heads: self.heads,
            value_dim: self.value_dim,
            frames_per_block: self.frames_per_block,
            sink_frames: self.sink_frames,
            window: WindowConfig {
                w_min: self.window.w_min,
                w_max: self.window.w_max,
                tau_post: self.window.tau_post,
                tau_pre: self.window.tau_pre,
                phase_unit,
            },
            anchors: AnchorConfig {
                alpha: self.anchors.alpha,
                recent_frames: self.anchors.recent_frames,
                max_anchors: self.anchors.max_anchors,
                injection_scale: self.anchors.injection_scale,
            },
            bridge_lambda: self.bridge_lambda,
            bridge_schedule: self.bridge_schedule,
            eps_stabilized: self.eps_stabilized,
            tokens_per_frame: self.tokens_per_frame,
            bridge_prune_tol: self.bridge_prune_tol,
            injection_enabled: self.injection_enabled,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl SimFile {
    pub fn to_config(&self) -> Result<SimConfig> {
        let sim = SimConfig {
            seed: self.seed,
            engine: self.engine.to_config()?,
            schedule: self.schedule.to_schedule()?,
            drift_sigma: self.drift_sigma,
            signature_separation: self.signature_separation,
        };
        sim.validate()?;
        Ok(sim)
    }
}

fn parse_error(e: toml::de::Error) -> Error {
    let key = match e.message().split('`').nth(1) {
        Some(k) if e.message().starts_with("unknown field") => k.to_string(),
        _ => "config".to_string(),
    };
    Error::config(key, e.message().trim().to_string())
}

pub fn parse_sim_config(text: &str) -> Result<SimConfig> {
    let file: SimFile = toml::from_str(text).map_err(parse_error)?;
    file.to_config()
}

pub fn load_sim_config(path: &Path) -> Result<SimConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
    parse_sim_config(&text)
}

/// The default configuration as a TOML document.
pub fn default_config_toml() -> String {
    toml::to_string(&SimFile::default()).expect("default config serializes")
}
