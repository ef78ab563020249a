//! Structured attention memory for multi-prompt autoregressive rollout.
//!
//! * [`vector`]: semantic vectors, switch strength and the motion-neutral
//!   projection (with a brute-force oracle in [`vector::oracle`]).
//! * [`injection`]: head-wise semantic bridges written at prompt switches.
//! * [`window`]: prompt-phase adaptive window schedule.
//! * [`anchor`]: segment anchors with FIFO retention.
//! * [`engine`]: the per-head memory state machine and budget accounting.
//! * [`sim`]: seeded synthetic rollouts and fixed-vs-adaptive comparison.
//! * [`trace`], [`config`], [`verify`], [`cli`]: I/O and tooling.

pub mod anchor;
pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod injection;
pub mod sim;
pub mod trace;
pub mod vector;
pub mod verify;
pub mod window;

pub use engine::{budget_report, BlockTrace, BudgetReport, Engine, EngineConfig, ReadSet};
pub use error::{Error, Result};
pub use injection::InjectionSchedule;
pub use sim::SimConfig;
pub use vector::SemanticVector;
pub use window::{PromptSchedule, WindowConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
