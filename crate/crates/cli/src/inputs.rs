//! Loading recorded sessions from either file format.

use std::path::Path;

use anyhow::{bail, Context, Result};
use gazeprompt_core::session::formats::{parse_gaze_log, read_json, read_text, GAZELOG_MAGIC};
use gazeprompt_core::session::protocol::Envelope;
use gazeprompt_core::session::{gaze_log_messages, run_session, MessageSource, SessionLog, SessionOptions, SessionRun};
use gazeprompt_core::PageLayout;

/// A recorded session: a bare gaze log or an NDJSON session log.
pub enum Recording {
    Gaze(gazeprompt_core::session::formats::GazeLog),
    Session(SessionLog),
}

impl Recording {
    pub fn load(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        if text.starts_with(GAZELOG_MAGIC) {
            Ok(Recording::Gaze(parse_gaze_log(&text).with_context(|| path.display().to_string())?))
        } else {
            Ok(Recording::Session(SessionLog::parse_ndjson(&text).with_context(|| path.display().to_string())?))
        }
    }

    /// Client messages to feed a fresh session. Gaze logs need a layout.
    pub fn inbound(&self, session: &str, layout: Option<&PageLayout>) -> Result<Vec<Envelope>> {
        match self {
            Recording::Gaze(log) => {
                let Some(layout) = layout else { bail!("a gaze log needs --layout") };
                Ok(gaze_log_messages(session, log, layout))
            }
            Recording::Session(log) => Ok(log.inbound().cloned().collect()),
        }
    }
}

pub fn load_layout(path: Option<&Path>) -> Result<Option<PageLayout>> {
    let Some(path) = path else { return Ok(None) };
    let layout: PageLayout = read_json(path)?;
    let violations = gazeprompt_core::validate_layout(&layout);
    if let Some(v) = violations.first() {
        bail!("{}: invalid layout: {v}", path.display());
    }
    Ok(Some(layout))
}

/// Runs `inbound` through a new session, collecting outbound messages.
pub fn drive(inbound: &[Envelope], opts: SessionOptions) -> Result<(SessionRun, Vec<Envelope>)> {
    let mut sent = Vec::new();
    let run = run_session(&mut MessageSource::from_envelopes(inbound), &mut |e| sent.push(e.clone()), opts)?;
    Ok((run, sent))
}
