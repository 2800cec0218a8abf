//! Gaze-behaviour recognition and reading augmentation engine.
//!
//! The sample path is `signal` (filtering, fixation detection) →
//! `calibration` (vertical drift correction) → `behavior` (line
//! identification, return sweeps, difficult words) → `augmentation`
//! (render directives). `session` binds the pipeline to the wire protocol
//! and file formats; `simulator` and `metrics` provide ground truth and
//! offline evaluation.

pub mod augmentation;
pub mod behavior;
pub mod calibration;
pub mod config;
pub mod geometry;
pub mod layout;
pub mod metrics;
pub mod session;
pub mod signal;
pub mod simulator;
pub mod types;

pub use config::EngineConfig;
pub use geometry::{degrees_to_px, px_to_degrees, Axis, ScreenGeometry};
pub use layout::{validate_layout, Background, LineBox, LineId, PageLayout, WordBox, WordId};
pub use types::{Eye, Fixation, GazeSample, Micros, ScrollDelta};
