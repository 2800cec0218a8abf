//! Newline-delimited JSON wire protocol.
//!
//! Every message is one line holding an envelope
//! `{"type": ..., "session": ..., "seq": ..., "payload": {...}}`. `seq`
//! increases strictly in each direction. Decoding is total: any byte
//! sequence yields either a message or a [`ProtocolError`].

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::augmentation::{AugmentationConfig, AugmentationEvent, Viewport};
use crate::behavior::BehaviorEvent;
use crate::calibration::{DotValidation, SweepTrajectory, TargetKind};
use crate::geometry::ScreenGeometry;
use crate::layout::{IdMap, PageLayout};
use crate::metrics::{FixationRecord, PassageMetrics};
use crate::types::{Eye, GazeSample, Micros};

pub const DEFAULT_PORT: u16 = 7327;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    #[serde(rename = "type")]
    pub kind: String,
    pub session: String,
    pub seq: u64,
    #[serde(default)]
    pub payload: Value,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("unknown message type {0:?}")]
    UnknownType(String),
    #[error("invalid {kind} payload: {message}")]
    Payload { kind: String, message: String },
}

impl ProtocolError {
    /// Stable machine-readable code carried in `error` messages.
    pub fn code(&self) -> &'static str {
        match self {
            ProtocolError::Malformed(_) => "malformed",
            ProtocolError::UnknownType(_) => "unknown_type",
            ProtocolError::Payload { .. } => "bad_payload",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Hello {
    #[serde(default)]
    pub client: String,
    #[serde(default)]
    pub geometry: Option<ScreenGeometry>,
    #[serde(default)]
    pub viewport: Option<Viewport>,
    /// Largest magnification the client can render.
    #[serde(default)]
    pub max_magnification: Option<f64>,
}

/// Partial update: present keys replace current values.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Configure {
    #[serde(default)]
    pub engine: Option<Value>,
    #[serde(default)]
    pub augmentation: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutMessage {
    pub layout: PageLayout,
    #[serde(default)]
    pub scroll_dy: f64,
    #[serde(default)]
    pub id_map: Option<IdMap>,
    #[serde(default)]
    pub viewport: Option<Viewport>,
}

/// Calibration target a gaze batch belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetRef {
    pub kind: TargetKind,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gaze {
    Batch {
        samples: Vec<GazeSample>,
        #[serde(default)]
        target: Option<TargetRef>,
    },
    Single {
        #[serde(flatten)]
        sample: GazeSample,
        #[serde(default)]
        target: Option<TargetRef>,
    },
}

impl Gaze {
    pub fn samples(&self) -> &[GazeSample] {
        match self {
            Gaze::Batch { samples, .. } => samples,
            Gaze::Single { sample, .. } => std::slice::from_ref(sample),
        }
    }

    pub fn target(&self) -> Option<TargetRef> {
        match self {
            Gaze::Batch { target, .. } | Gaze::Single { target, .. } => *target,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scroll {
    pub t: Micros,
    pub dy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Configuring,
    Calibrating,
    Validating,
    Reading,
    Ended,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseRequest {
    pub phase: Phase,
    #[serde(default)]
    pub skip_calibration: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClientMessage {
    Hello(Hello),
    Configure(Configure),
    Layout(Box<LayoutMessage>),
    Gaze(Gaze),
    Scroll(Scroll),
    Phase(PhaseRequest),
}

impl ClientMessage {
    pub fn kind(&self) -> &'static str {
        match self {
            ClientMessage::Hello(_) => "hello",
            ClientMessage::Configure(_) => "configure",
            ClientMessage::Layout(_) => "layout",
            ClientMessage::Gaze(_) => "gaze",
            ClientMessage::Scroll(_) => "scroll",
            ClientMessage::Phase(_) => "phase",
        }
    }

    pub fn payload(&self) -> Value {
        let v = match self {
            ClientMessage::Hello(m) => serde_json::to_value(m),
            ClientMessage::Configure(m) => serde_json::to_value(m),
            ClientMessage::Layout(m) => serde_json::to_value(m),
            ClientMessage::Gaze(m) => serde_json::to_value(m),
            ClientMessage::Scroll(m) => serde_json::to_value(m),
            ClientMessage::Phase(m) => serde_json::to_value(m),
        };
        v.expect("client payloads serialize")
    }

    pub fn envelope(&self, session: &str, seq: u64) -> Envelope {
        Envelope { kind: self.kind().to_string(), session: session.to_string(), seq, payload: self.payload() }
    }
}

fn typed<T: for<'de> Deserialize<'de>>(kind: &str, payload: Value) -> Result<T, ProtocolError> {
    serde_json::from_value(payload)
        .map_err(|e| ProtocolError::Payload { kind: kind.to_string(), message: e.to_string() })
}

pub fn decode_envelope(bytes: &[u8]) -> Result<Envelope, ProtocolError> {
    serde_json::from_slice(bytes).map_err(|e| ProtocolError::Malformed(e.to_string()))
}

pub fn decode_client(env: &Envelope) -> Result<ClientMessage, ProtocolError> {
    let p = env.payload.clone();
    let k = env.kind.as_str();
    Ok(match k {
        "hello" => ClientMessage::Hello(typed(k, p)?),
        "configure" => ClientMessage::Configure(typed(k, p)?),
        "layout" => ClientMessage::Layout(Box::new(typed(k, p)?)),
        "gaze" => ClientMessage::Gaze(typed(k, p)?),
        "scroll" => ClientMessage::Scroll(typed(k, p)?),
        "phase" => ClientMessage::Phase(typed(k, p)?),
        other => return Err(ProtocolError::UnknownType(other.to_string())),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetsPayload {
    pub phase: Phase,
    pub dots: TargetKind,
    pub dot_targets: Vec<(f64, f64)>,
    pub lines: TargetKind,
    pub sweeps: Vec<SweepTrajectory>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub dots: Option<DotValidation>,
    pub selected_eye: Option<Eye>,
    pub raw_line_error_px: Option<f64>,
    pub corrected_line_error_px: Option<f64>,
    pub drift_correction_applied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricsPayload {
    /// Echo of the active configuration after hello or configure.
    Snapshot {
        phase: Phase,
        engine: crate::config::EngineConfig,
        augmentation: AugmentationConfig,
    },
    Validation(ValidationReport),
    Passage(PassageMetrics),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorPayload {
    pub code: String,
    pub message: String,
    /// The session ends after a fatal error.
    pub fatal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VersionedBehavior {
    pub event: BehaviorEvent,
    pub layout_version: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VersionedAugment {
    pub event: AugmentationEvent,
    pub layout_version: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EngineMessage {
    Targets(TargetsPayload),
    FixationDebug(FixationRecord),
    Behavior(VersionedBehavior),
    Augment(VersionedAugment),
    Metrics(Box<MetricsPayload>),
    Error(ErrorPayload),
}

impl EngineMessage {
    pub fn kind(&self) -> &'static str {
        match self {
            EngineMessage::Targets(_) => "targets",
            EngineMessage::FixationDebug(_) => "fixation_debug",
            EngineMessage::Behavior(_) => "behavior",
            EngineMessage::Augment(_) => "augment",
            EngineMessage::Metrics(_) => "metrics",
            EngineMessage::Error(_) => "error",
        }
    }

    pub fn error(code: &str, message: impl Into<String>, fatal: bool) -> Self {
        EngineMessage::Error(ErrorPayload { code: code.to_string(), message: message.into(), fatal })
    }

    pub fn envelope(&self, session: &str, seq: u64) -> Envelope {
        let payload = match self {
            EngineMessage::Targets(p) => serde_json::to_value(p),
            EngineMessage::FixationDebug(p) => serde_json::to_value(p),
            EngineMessage::Behavior(p) => serde_json::to_value(p),
            EngineMessage::Augment(p) => serde_json::to_value(p),
            EngineMessage::Metrics(p) => serde_json::to_value(p),
            EngineMessage::Error(p) => serde_json::to_value(p),
        }
        .expect("engine payloads serialize");
        Envelope { kind: self.kind().to_string(), session: session.to_string(), seq, payload }
    }

    pub fn decode(env: &Envelope) -> Result<Self, ProtocolError> {
        let p = env.payload.clone();
        let k = env.kind.as_str();
        Ok(match k {
            "targets" => EngineMessage::Targets(typed(k, p)?),
            "fixation_debug" => EngineMessage::FixationDebug(typed(k, p)?),
            "behavior" => EngineMessage::Behavior(typed(k, p)?),
            "augment" => EngineMessage::Augment(typed(k, p)?),
            "metrics" => EngineMessage::Metrics(Box::new(typed(k, p)?)),
            "error" => EngineMessage::Error(typed(k, p)?),
            other => return Err(ProtocolError::UnknownType(other.to_string())),
        })
    }
}

/// Serializes an envelope as one protocol line without the trailing newline.
pub fn encode(env: &Envelope) -> String {
    serde_json::to_string(env).expect("envelopes serialize")
}
