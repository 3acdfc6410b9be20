//! Two-stage iteration counts and instance condition measures.

mod condition;
mod stages;

pub use condition::{condition_report, verify_bound_chain, ConditionReport};
pub use stages::{detect_stages, StageDecomposition};
