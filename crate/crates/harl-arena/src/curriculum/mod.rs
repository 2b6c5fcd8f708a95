//! Curriculum stage plans and the constant-width zero-buffer observation
//! contract.
//!
//! A curriculum is an ordered list of stages over the same agents. The
//! observation layout is the union of every stage's feature slots plus an
//! always-zero tail buffer; slots only ever activate as the stage index
//! grows, and the total width never changes, so checkpoints transfer
//! between stages without touching network shapes.

mod layout;
mod plan;
mod transfer;

pub use layout::{make_layout, pad_observation, ObservationLayout, Slot};
pub use plan::{advance, AdvanceDecision, AdvanceGate, CurriculumPlan, EvalMetrics, StageSpec};
pub use transfer::transfer_checkpoint;
