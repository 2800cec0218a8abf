//! One client session: phase machine, calibration buffers and the pipeline.

use std::collections::BTreeMap;
use std::time::Duration;

use serde_json::Value;
use tracing::debug;

use super::pipeline::{LatencyStats, Pipeline, PipelineEvent};
use super::protocol::{
    decode_client, decode_envelope, ClientMessage, Configure, EngineMessage, Envelope, Gaze, Hello, LayoutMessage,
    MetricsPayload, Phase, PhaseRequest, TargetsPayload, ValidationReport, VersionedAugment, VersionedBehavior,
};
use crate::augmentation::AugmentationConfig;
use crate::behavior::BehaviorEvent;
use crate::calibration::{
    decide_apply_correction, fit_drift_profile, score_dot_validation, score_line_validation, select_eye, DriftProfile,
    SweepRecording, TargetKind, TargetLayout,
};
use crate::config::EngineConfig;
use crate::geometry::ScreenGeometry;
use crate::layout::validate_layout;
use crate::metrics::{compute_metrics, FixationRecord, MetricsInput, PassageMetrics};
use crate::types::{Eye, GazeSample, Micros, ScrollDelta};

/// Reading pauses when no gaze arrives for this long.
pub const SOURCE_STALL: Duration = Duration::from_secs(2);
const SOURCE_STALL_US: Micros = 2_000_000;
const TARGET_RADIUS_PX: f64 = 20.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SessionOptions {
    pub session_id: String,
    pub engine: EngineConfig,
    pub augmentation: AugmentationConfig,
    pub geometry: ScreenGeometry,
}

impl Default for SessionOptions {
    fn default() -> Self {
        Self {
            session_id: "session-0".into(),
            engine: EngineConfig::default(),
            augmentation: AugmentationConfig::default(),
            geometry: ScreenGeometry::study_display(),
        }
    }
}

/// Samples grouped by calibration target index.
type TargetBuffers = BTreeMap<usize, Vec<GazeSample>>;

#[derive(Debug, Clone, Default)]
struct Calibration {
    dots: TargetBuffers,
    lines: TargetBuffers,
    candidate: Option<DriftProfile>,
}

#[derive(Debug, Clone)]
pub struct Session {
    id: String,
    phase: Phase,
    calibrated: bool,
    hello_seen: bool,
    ended: bool,
    paused: bool,
    pipeline: Pipeline,
    geometry: ScreenGeometry,
    in_seq: Option<u64>,
    out_seq: u64,
    last_gaze_t: Option<Micros>,
    selected_eye: Option<Eye>,
    calibration: Calibration,
    validation: Calibration,
    pub fixations: Vec<FixationRecord>,
    pub behaviors: Vec<BehaviorEvent>,
    pub scrolls: Vec<ScrollDelta>,
}

fn merge(base: &mut Value, patch: &Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                merge(b.entry(k.clone()).or_insert(Value::Null), v);
            }
        }
        (b, p) => *b = p.clone(),
    }
}

fn recordings(buffers: &TargetBuffers, layout: &TargetLayout, geom: &ScreenGeometry) -> Vec<SweepRecording> {
    (0..layout.targets.len())
        .map(|i| {
            let samples = buffers.get(&i).cloned().unwrap_or_default();
            let start_t = samples.first().map_or(0, |s| s.t);
            let end_t = samples.last().map_or(0, |s| s.t);
            SweepRecording { y_px: layout.sweep(i, geom, 0).y_px, start_t, end_t, samples }
        })
        .collect()
}

impl Session {
    pub fn new(opts: SessionOptions) -> Result<Self, super::pipeline::PipelineError> {
        Ok(Self {
            id: opts.session_id,
            phase: Phase::Configuring,
            calibrated: false,
            hello_seen: false,
            ended: false,
            paused: false,
            pipeline: Pipeline::new(opts.engine, opts.augmentation, opts.geometry)?,
            geometry: opts.geometry,
            in_seq: None,
            out_seq: 0,
            last_gaze_t: None,
            selected_eye: None,
            calibration: Calibration::default(),
            validation: Calibration::default(),
            fixations: Vec::new(),
            behaviors: Vec::new(),
            scrolls: Vec::new(),
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn is_ended(&self) -> bool {
        self.ended
    }

    pub fn is_paused(&self) -> bool {
        self.paused
    }

    pub fn pipeline(&self) -> &Pipeline {
        &self.pipeline
    }

    pub fn latency(&self) -> &LatencyStats {
        &self.pipeline.latency
    }

    /// Timestamp of the newest gaze sample seen.
    pub fn stream_time(&self) -> Micros {
        self.last_gaze_t.unwrap_or(0)
    }

    pub fn data_loss_fraction(&self) -> f64 {
        let c = self.pipeline.counters();
        if c.total == 0 {
            0.0
        } else {
            c.invalid as f64 / c.total as f64
        }
    }

    /// Metrics over everything read so far; `None` without a layout.
    pub fn passage_metrics(&self) -> Option<PassageMetrics> {
        let layout = self.pipeline.layout()?;
        compute_metrics(&MetricsInput {
            fixations: &self.fixations,
            behavior: &self.behaviors,
            scrolls: &self.scrolls,
            layout,
            truth: None,
            data_loss_fraction: self.data_loss_fraction(),
        })
        .ok()
    }

    fn emit(&mut self, msgs: Vec<EngineMessage>) -> Vec<Envelope> {
        msgs.into_iter()
            .map(|m| {
                self.out_seq += 1;
                m.envelope(&self.id, self.out_seq)
            })
            .collect()
    }

    fn fatal(&mut self, code: &str, message: String) -> Vec<EngineMessage> {
        self.ended = true;
        self.phase = Phase::Ended;
        vec![EngineMessage::error(code, message, true)]
    }

    /// Handles one raw protocol line. Never panics; every rejection is an `error` message.
    pub fn handle_bytes(&mut self, bytes: &[u8]) -> Vec<Envelope> {
        let msgs = match decode_envelope(bytes) {
            Ok(env) => self.dispatch(env),
            Err(e) => self.reject(e.code(), e.to_string()),
        };
        self.emit(msgs)
    }

    pub fn handle(&mut self, env: Envelope) -> Vec<Envelope> {
        let msgs = self.dispatch(env);
        self.emit(msgs)
    }

    fn reject(&mut self, code: &str, message: String) -> Vec<EngineMessage> {
        if self.ended {
            return vec![EngineMessage::error("ended", "session has ended", true)];
        }
        vec![EngineMessage::error(code, message, false)]
    }

    /// Wall-clock idle notification from a live transport.
    pub fn on_idle(&mut self, idle: Duration) -> Vec<Envelope> {
        if self.phase == Phase::Reading && !self.paused && !self.ended && idle >= SOURCE_STALL {
            self.paused = true;
            let msg = EngineMessage::error(
                "source_stall",
                format!("no gaze for {} ms, session paused", idle.as_millis()),
                false,
            );
            return self.emit(vec![msg]);
        }
        Vec::new()
    }

    fn dispatch(&mut self, env: Envelope) -> Vec<EngineMessage> {
        if self.ended {
            return vec![EngineMessage::error("ended", "session has ended", true)];
        }
        if let Some(last) = self.in_seq {
            if env.seq <= last {
                return self.fatal("seq", format!("seq {} does not follow {last}", env.seq));
            }
        }
        self.in_seq = Some(env.seq);
        let msg = match decode_client(&env) {
            Ok(m) => m,
            Err(e) => return self.reject(e.code(), e.to_string()),
        };
        if !self.hello_seen && !matches!(msg, ClientMessage::Hello(_)) {
            return self.reject("no_hello", format!("{} before hello", msg.kind()));
        }
        match msg {
            ClientMessage::Hello(h) => self.on_hello(h),
            ClientMessage::Configure(c) => self.on_configure(c),
            ClientMessage::Layout(l) => self.on_layout(*l),
            ClientMessage::Gaze(g) => self.on_gaze(g),
            ClientMessage::Scroll(s) => {
                self.scrolls.push(ScrollDelta { t: s.t, dy: s.dy });
                Vec::new()
            }
            ClientMessage::Phase(p) => self.on_phase(p),
        }
    }

    fn snapshot(&self) -> EngineMessage {
        EngineMessage::Metrics(Box::new(MetricsPayload::Snapshot {
            phase: self.phase,
            engine: self.pipeline.config().clone(),
            augmentation: self.pipeline.augmentation_config().clone(),
        }))
    }

    fn on_hello(&mut self, h: Hello) -> Vec<EngineMessage> {
        if self.hello_seen {
            return self.reject("duplicate_hello", "hello already received".into());
        }
        if let Some(g) = h.geometry {
            if let Err(e) = g.validate() {
                return self.reject("bad_geometry", e.to_string());
            }
            let rebuilt = Pipeline::new(self.pipeline.config().clone(), self.pipeline.augmentation_config().clone(), g);
            match rebuilt {
                Ok(p) => {
                    self.pipeline = p;
                    self.geometry = g;
                }
                Err(e) => return self.reject("bad_geometry", e.to_string()),
            }
        }
        if let Some(v) = h.viewport {
            self.pipeline.set_viewport(v);
        }
        if let Some(m) = h.max_magnification {
            if m.is_finite() && m > 0.0 {
                let mut aug = self.pipeline.augmentation_config().clone();
                aug.magnifier_scale = m;
                self.pipeline.set_augmentation(aug);
            }
        }
        self.hello_seen = true;
        debug!(client = %h.client, "hello");
        vec![self.snapshot()]
    }

    fn on_configure(&mut self, c: Configure) -> Vec<EngineMessage> {
        let mut out = Vec::new();
        if let Some(patch) = c.engine {
            let mut v = serde_json::to_value(self.pipeline.config()).expect("config serializes");
            merge(&mut v, &patch);
            let cfg: EngineConfig = match serde_json::from_value(v) {
                Ok(c) => c,
                Err(e) => return self.reject("bad_config", e.to_string()),
            };
            let mut events = Vec::new();
            if let Err(e) = self.pipeline.set_config(cfg, &mut events) {
                return self.reject("bad_config", e.to_string());
            }
            out.extend(self.absorb(events));
        }
        if let Some(patch) = c.augmentation {
            let mut v = serde_json::to_value(self.pipeline.augmentation_config()).expect("config serializes");
            merge(&mut v, &patch);
            match serde_json::from_value::<AugmentationConfig>(v) {
                Ok(a) => self.pipeline.set_augmentation(a),
                Err(e) => return self.reject("bad_config", e.to_string()),
            }
        }
        out.push(self.snapshot());
        out
    }

    fn on_layout(&mut self, l: LayoutMessage) -> Vec<EngineMessage> {
        let violations = validate_layout(&l.layout);
        if !violations.is_empty() {
            let text: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            return self.reject("bad_layout", text.join("; "));
        }
        if let Some(v) = l.viewport {
            self.pipeline.set_viewport(v);
        }
        let mut events = Vec::new();
        let at = self.stream_time();
        if let Err(e) = self.pipeline.set_layout(l.layout, l.scroll_dy, l.id_map.as_ref(), at, &mut events) {
            return self.reject("bad_layout", e.to_string());
        }
        self.absorb(events)
    }

    fn on_gaze(&mut self, g: Gaze) -> Vec<EngineMessage> {
        let mut out = Vec::new();
        for s in g.samples() {
            if !(s.x.is_finite() && s.y.is_finite()) {
                return self.reject("bad_payload", format!("non-finite sample at t={}", s.t));
            }
            if let Some(last) = self.last_gaze_t {
                if s.t <= last {
                    out.extend(self.fatal("order", format!("sample at t={} does not follow t={last}", s.t)));
                    return out;
                }
                if self.phase == Phase::Reading && !self.paused && s.t - last > SOURCE_STALL_US {
                    out.push(EngineMessage::error(
                        "source_stall",
                        format!("gaze gap of {} ms", (s.t - last) / 1000),
                        false,
                    ));
                }
            }
            self.last_gaze_t = Some(s.t);
            self.paused = false;
            match self.phase {
                Phase::Calibrating | Phase::Validating => {
                    let Some(target) = g.target() else { continue };
                    let buf =
                        if self.phase == Phase::Calibrating { &mut self.calibration } else { &mut self.validation };
                    let slot = match target.kind {
                        TargetKind::Dots14 | TargetKind::Dots5 => &mut buf.dots,
                        TargetKind::Lines5 | TargetKind::Lines4 => &mut buf.lines,
                    };
                    slot.entry(target.index).or_default().push(*s);
                }
                Phase::Reading | Phase::Configuring => {
                    if self.selected_eye.is_some_and(|e| e != s.eye) {
                        continue;
                    }
                    let mut events = Vec::new();
                    if let Err(e) = self.pipeline.push_sample(*s, &mut events) {
                        out.extend(self.absorb(events));
                        out.extend(self.fatal("pipeline", e.to_string()));
                        return out;
                    }
                    out.extend(self.absorb(events));
                }
                Phase::Ended => {}
            }
        }
        out
    }

    fn absorb(&mut self, events: Vec<PipelineEvent>) -> Vec<EngineMessage> {
        events
            .into_iter()
            .map(|e| match e {
                PipelineEvent::Fixation(r) => {
                    self.fixations.push(r);
                    EngineMessage::FixationDebug(r)
                }
                PipelineEvent::Behavior { event, layout_version } => {
                    self.behaviors.push(event);
                    EngineMessage::Behavior(VersionedBehavior { event, layout_version })
                }
                PipelineEvent::Augment { event, layout_version } => {
                    EngineMessage::Augment(VersionedAugment { event, layout_version })
                }
            })
            .collect()
    }

    fn targets(&self, phase: Phase, dots: TargetKind, lines: TargetKind) -> EngineMessage {
        let d = TargetLayout::new(dots, TARGET_RADIUS_PX);
        let l = TargetLayout::new(lines, TARGET_RADIUS_PX);
        let mut start = self.stream_time();
        let sweeps = (0..l.targets.len())
            .map(|i| {
                let s = l.sweep(i, &self.geometry, start);
                start = s.end_t();
                s
            })
            .collect();
        EngineMessage::Targets(TargetsPayload {
            phase,
            dots,
            dot_targets: (0..d.targets.len()).map(|i| d.target_px(i, &self.geometry)).collect(),
            lines,
            sweeps,
        })
    }

    fn on_phase(&mut self, p: PhaseRequest) -> Vec<EngineMessage> {
        use Phase::*;
        match (self.phase, p.phase) {
            (_, Ended) => self.end(),
            (Configuring, Calibrating) => {
                self.calibration = Calibration::default();
                self.phase = Calibrating;
                vec![self.targets(Calibrating, TargetKind::Dots14, TargetKind::Lines5)]
            }
            (Calibrating, Validating) => {
                let layout = TargetLayout::new(TargetKind::Lines5, TARGET_RADIUS_PX);
                let recs = recordings(&self.calibration.lines, &layout, &self.geometry);
                match fit_drift_profile(&recs) {
                    Ok(profile) => {
                        self.validation = Calibration { candidate: Some(profile), ..Calibration::default() };
                        self.phase = Validating;
                        vec![self.targets(Validating, TargetKind::Dots5, TargetKind::Lines4)]
                    }
                    Err(e) => self.reject("calibration", e.to_string()),
                }
            }
            (Validating, Reading) => match self.validate() {
                Ok(report) => {
                    self.calibrated = true;
                    self.phase = Reading;
                    vec![EngineMessage::Metrics(Box::new(MetricsPayload::Validation(report)))]
                }
                Err(e) => self.reject("validation", e),
            },
            (Configuring, Reading) if self.calibrated || p.skip_calibration => {
                self.calibrated = true;
                self.phase = Reading;
                Vec::new()
            }
            (Configuring, Reading) => {
                self.reject("phase", "reading requires a validated or skipped calibration".into())
            }
            (Reading, Configuring) => {
                self.phase = Configuring;
                Vec::new()
            }
            (from, to) if from == to => Vec::new(),
            (from, to) => self.reject("phase", format!("cannot move from {from:?} to {to:?}")),
        }
    }

    fn validate(&mut self) -> Result<ValidationReport, String> {
        let dot_layout = TargetLayout::new(TargetKind::Dots5, TARGET_RADIUS_PX);
        let (dots, selected_eye) = if self.validation.dots.is_empty() {
            (None, None)
        } else {
            let mut per_eye = Vec::new();
            let mut results = Vec::new();
            for eye in [Eye::Average, Eye::Right, Eye::Left] {
                let per_target: Vec<Vec<GazeSample>> = (0..dot_layout.targets.len())
                    .map(|i| {
                        self.validation
                            .dots
                            .get(&i)
                            .map_or_else(Vec::new, |v| v.iter().filter(|s| s.eye == eye).copied().collect())
                    })
                    .collect();
                if per_target.iter().all(|v| v.is_empty()) {
                    continue;
                }
                let v = score_dot_validation(&per_target, &dot_layout, &self.geometry).map_err(|e| e.to_string())?;
                per_eye.push((eye, v.mean_error_deg));
                results.push((eye, v));
            }
            let eye = select_eye(&per_eye);
            let chosen = results.into_iter().find(|(e, _)| Some(*e) == eye).map(|(_, v)| v);
            (chosen, eye)
        };
        let (mut raw, mut corrected, mut apply) = (None, None, false);
        if let Some(profile) = self.validation.candidate.clone() {
            let layout = TargetLayout::new(TargetKind::Lines4, TARGET_RADIUS_PX);
            let recs = recordings(&self.validation.lines, &layout, &self.geometry);
            let r = score_line_validation(&recs, None).map_err(|e| e.to_string())?;
            let c = score_line_validation(&recs, Some(&profile)).map_err(|e| e.to_string())?;
            apply = decide_apply_correction(r, c);
            (raw, corrected) = (Some(r), Some(c));
            self.pipeline.set_drift(apply.then_some(profile));
        }
        self.selected_eye = selected_eye;
        Ok(ValidationReport {
            dots,
            selected_eye,
            raw_line_error_px: raw,
            corrected_line_error_px: corrected,
            drift_correction_applied: apply,
        })
    }

    fn end(&mut self) -> Vec<EngineMessage> {
        let mut events = Vec::new();
        let flushed = self.pipeline.finish(&mut events);
        let mut out = self.absorb(events);
        if let Err(e) = flushed {
            out.extend(self.fatal("pipeline", e.to_string()));
            return out;
        }
        if let Some(m) = self.passage_metrics() {
            out.push(EngineMessage::Metrics(Box::new(MetricsPayload::Passage(m))));
        }
        self.phase = Phase::Ended;
        self.ended = true;
        out
    }
}
