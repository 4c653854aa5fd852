//! Low-Water-Mark baseline and the side-by-side comparison against the
//! taint engine.

mod compare;
mod lwm;

pub use compare::{compare, Classification, ComparisonReport, DenialRow, LEVEL_MAPPING};
pub use lwm::{lwm_step, IntegrityLevel, LevelChange, LwmDecision, LwmEngine};
