//! Session lifecycle, wire protocol and file formats.

pub mod formats;
pub mod pipeline;
pub mod protocol;
mod source;
mod state;

pub use source::{
    gaze_log_messages, replay_source, run_session, simulated_messages, Direction, GazeSource, LiveSource, LogEntry,
    MessageSource, NoTracker, SessionLog, SessionRun, SourceError, SourceItem, TrackerAdapter,
};
pub use state::{Session, SessionOptions, SOURCE_STALL};
