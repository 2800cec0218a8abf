//! Message sources, session logs and the driver loop.

use std::collections::VecDeque;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::formats::GazeLog;
use super::pipeline::PipelineError;
use super::protocol::{encode, ClientMessage, Envelope, Gaze, Hello, LayoutMessage, Phase, PhaseRequest, Scroll};
use super::state::{Session, SessionOptions};
use crate::layout::{IdMap, PageLayout};
use crate::simulator::SimulatedSession;
use crate::types::{GazeSample, Micros};

#[derive(Debug, Error)]
pub enum SourceError {
    #[error("tracker: {0}")]
    Tracker(String),
    #[error("log line {line}: {message}")]
    Log { line: usize, message: String },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    In,
    Out,
}

/// One logged message. `t` is the session's stream time when it was handled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub dir: Direction,
    pub t: Micros,
    pub msg: Envelope,
}

/// Everything a session received and sent, in order. Stored as NDJSON.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SessionLog {
    pub entries: Vec<LogEntry>,
}

impl SessionLog {
    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("log entries serialize"));
            out.push('\n');
        }
        out
    }

    pub fn parse_ndjson(text: &str) -> Result<Self, SourceError> {
        let entries = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| SourceError::Log { line: i + 1, message: e.to_string() }))
            .collect::<Result<_, _>>()?;
        Ok(Self { entries })
    }

    pub fn inbound(&self) -> impl Iterator<Item = &Envelope> {
        self.entries.iter().filter(|e| e.dir == Direction::In).map(|e| &e.msg)
    }

    pub fn outbound(&self) -> impl Iterator<Item = &Envelope> {
        self.entries.iter().filter(|e| e.dir == Direction::Out).map(|e| &e.msg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourceItem {
    Line(Vec<u8>),
    /// No input arrived for this long.
    Idle(Duration),
}

/// Anything that yields client protocol lines.
pub trait GazeSource {
    fn next_item(&mut self) -> Result<Option<SourceItem>, SourceError>;
}

/// A fixed, in-memory list of lines.
#[derive(Debug, Clone, Default)]
pub struct MessageSource {
    items: VecDeque<SourceItem>,
}

impl MessageSource {
    pub fn from_envelopes<'a>(envs: impl IntoIterator<Item = &'a Envelope>) -> Self {
        Self { items: envs.into_iter().map(|e| SourceItem::Line(encode(e).into_bytes())).collect() }
    }

    pub fn from_items(items: impl IntoIterator<Item = SourceItem>) -> Self {
        Self { items: items.into_iter().collect() }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

impl GazeSource for MessageSource {
    fn next_item(&mut self) -> Result<Option<SourceItem>, SourceError> {
        Ok(self.items.pop_front())
    }
}

/// Re-feeds the inbound half of a recorded session.
pub fn replay_source(log: &SessionLog) -> MessageSource {
    MessageSource::from_envelopes(log.inbound())
}

/// Hardware driver boundary. Returns `Ok(None)` when no sample arrived within `timeout`.
pub trait TrackerAdapter {
    fn poll(&mut self, timeout: Duration) -> Result<Option<GazeSample>, SourceError>;
}

/// Adapter used when no tracker driver is linked in.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoTracker;

impl TrackerAdapter for NoTracker {
    fn poll(&mut self, _timeout: Duration) -> Result<Option<GazeSample>, SourceError> {
        Err(SourceError::Tracker("no tracker driver available".into()))
    }
}

/// Wraps a tracker: forwards setup messages first, then one gaze message per sample.
pub struct LiveSource<A: TrackerAdapter> {
    adapter: A,
    session: String,
    seq: u64,
    setup: VecDeque<Envelope>,
    idle: Duration,
    poll: Duration,
}

impl<A: TrackerAdapter> LiveSource<A> {
    pub fn new(adapter: A, session: &str, setup: Vec<Envelope>, poll: Duration) -> Self {
        let seq = setup.iter().map(|e| e.seq).max().unwrap_or(0);
        Self { adapter, session: session.to_string(), seq, setup: setup.into(), idle: Duration::ZERO, poll }
    }
}

impl<A: TrackerAdapter> GazeSource for LiveSource<A> {
    fn next_item(&mut self) -> Result<Option<SourceItem>, SourceError> {
        if let Some(e) = self.setup.pop_front() {
            return Ok(Some(SourceItem::Line(encode(&e).into_bytes())));
        }
        match self.adapter.poll(self.poll)? {
            Some(sample) => {
                self.idle = Duration::ZERO;
                self.seq += 1;
                let msg = ClientMessage::Gaze(Gaze::Single { sample, target: None });
                Ok(Some(SourceItem::Line(encode(&msg.envelope(&self.session, self.seq)).into_bytes())))
            }
            None => {
                self.idle += self.poll;
                Ok(Some(SourceItem::Idle(self.idle)))
            }
        }
    }
}

struct Builder<'a> {
    session: &'a str,
    seq: u64,
    out: Vec<Envelope>,
}

impl Builder<'_> {
    fn push(&mut self, m: ClientMessage) {
        self.seq += 1;
        self.out.push(m.envelope(self.session, self.seq));
    }

    fn opening(&mut self, layout: &PageLayout) {
        self.push(ClientMessage::Hello(Hello {
            client: "gazeprompt".into(),
            geometry: None,
            viewport: None,
            max_magnification: None,
        }));
        self.push(ClientMessage::Layout(Box::new(LayoutMessage {
            layout: layout.clone(),
            scroll_dy: 0.0,
            id_map: None,
            viewport: None,
        })));
        self.push(ClientMessage::Phase(PhaseRequest { phase: Phase::Reading, skip_calibration: true }));
    }

    fn end(mut self) -> Vec<Envelope> {
        self.push(ClientMessage::Phase(PhaseRequest { phase: Phase::Ended, skip_calibration: false }));
        self.out
    }
}

/// Client messages for a simulated reading session, scrolls included.
pub fn simulated_messages(session: &str, sim: &SimulatedSession, layout: &PageLayout) -> Vec<Envelope> {
    let mut b = Builder { session, seq: 0, out: Vec::new() };
    b.opening(layout);
    let mut scrolls = sim.truth.scrolls.iter().zip(&sim.layouts).peekable();
    for s in &sim.samples {
        while let Some((d, l)) = scrolls.next_if(|(d, _)| d.t <= s.t) {
            b.push(ClientMessage::Scroll(Scroll { t: d.t, dy: d.dy }));
            b.push(ClientMessage::Layout(Box::new(LayoutMessage {
                layout: l.clone(),
                scroll_dy: d.dy,
                id_map: Some(IdMap::identity(l)),
                viewport: None,
            })));
        }
        b.push(ClientMessage::Gaze(Gaze::Single { sample: *s, target: None }));
    }
    b.end()
}

/// Client messages that replay a gaze log over a fixed layout.
pub fn gaze_log_messages(session: &str, log: &GazeLog, layout: &PageLayout) -> Vec<Envelope> {
    let mut b = Builder { session, seq: 0, out: Vec::new() };
    b.opening(layout);
    for s in &log.samples {
        b.push(ClientMessage::Gaze(Gaze::Single { sample: *s, target: None }));
    }
    b.end()
}

#[derive(Debug)]
pub struct SessionRun {
    pub session: Session,
    pub log: SessionLog,
}

/// Drives a session until the source is exhausted or the session ends.
pub fn run_session(
    source: &mut dyn GazeSource,
    sink: &mut dyn FnMut(&Envelope),
    opts: SessionOptions,
) -> Result<SessionRun, SourceError> {
    let mut session = Session::new(opts)?;
    let mut log = SessionLog::default();
    while let Some(item) = source.next_item()? {
        let replies = match item {
            SourceItem::Line(bytes) => {
                if let Ok(msg) = serde_json::from_slice::<Envelope>(&bytes) {
                    log.entries.push(LogEntry { dir: Direction::In, t: session.stream_time(), msg });
                }
                session.handle_bytes(&bytes)
            }
            SourceItem::Idle(d) => session.on_idle(d),
        };
        for msg in replies {
            sink(&msg);
            log.entries.push(LogEntry { dir: Direction::Out, t: session.stream_time(), msg });
        }
        if session.is_ended() {
            break;
        }
    }
    Ok(SessionRun { session, log })
}
