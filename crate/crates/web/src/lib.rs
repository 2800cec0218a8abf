//! Browser demo bindings. Every export takes and returns a JSON string so the
//! page needs no generated TypeScript types.
//!
//! Build: `cargo build -p gazeprompt-web --target wasm32-unknown-unknown --release`
//! then `wasm-bindgen --target web --out-dir crates/web/www/pkg` on the `.wasm`.

use gazeprompt_core::behavior::{landing_vote, tally_votes, LineVote};
use gazeprompt_core::calibration::{
    decide_apply_correction, fit_drift_profile, score_line_validation, DriftProfile, TargetKind,
};
use gazeprompt_core::layout::TextMetrics;
use gazeprompt_core::metrics::{FixationRecord, PassageMetrics};
use gazeprompt_core::session::protocol::Envelope;
use gazeprompt_core::session::{run_session, simulated_messages, MessageSource, SessionOptions};
use gazeprompt_core::simulator::{simulate, simulate_sweep_session, DriftModel, ReaderProfile, TruthSweep};
use gazeprompt_core::{Background, Fixation, LineBox, PageLayout, ScreenGeometry};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use wasm_bindgen::prelude::*;

#[derive(Debug, Error)]
pub enum DemoError {
    #[error("bad request: {0}")]
    Request(#[from] serde_json::Error),
    #[error("{0}")]
    Engine(String),
}

fn engine(e: impl std::fmt::Display) -> DemoError {
    DemoError::Engine(e.to_string())
}

#[derive(Debug, Deserialize)]
#[serde(default)]
pub struct VoteRequest {
    pub lines: usize,
    pub line_height: f64,
    pub line_pitch: f64,
    /// Fixation centres, oldest first.
    pub fixations: Vec<(f64, f64)>,
}

impl Default for VoteRequest {
    fn default() -> Self {
        Self { lines: 5, line_height: 40.0, line_pitch: 80.0, fixations: Vec::new() }
    }
}

#[derive(Debug, Serialize)]
pub struct VoteResponse {
    pub layout: PageLayout,
    pub votes: Vec<LineVote>,
    pub totals: Vec<(usize, f64)>,
    pub winner: usize,
}

/// Landing votes and the weighted winner for a handful of fixations over evenly spaced lines.
pub fn vote(request: &str) -> Result<VoteResponse, DemoError> {
    let req: VoteRequest = serde_json::from_str(request)?;
    if req.lines == 0 || req.line_height.is_nan() || req.line_height <= 0.0 || req.line_pitch < req.line_height {
        return Err(DemoError::Engine("need at least one line and pitch >= height".into()));
    }
    let lines = (0..req.lines)
        .map(|i| {
            let top = 60.0 + req.line_pitch * i as f64;
            LineBox { line_id: i, top, bottom: top + req.line_height, left: 60.0, right: 1860.0 }
        })
        .collect();
    let layout = PageLayout::new(0, lines, Vec::new(), Background::Light);
    let fixations: Vec<Fixation> = req
        .fixations
        .iter()
        .enumerate()
        .map(|(i, &(cx, cy))| Fixation { cx, cy, onset: i as u64 * 300_000, duration: 250_000, sample_count: 30 })
        .collect();
    let votes = fixations.iter().filter_map(|f| landing_vote(f, &layout)).collect();
    let tally = tally_votes(&fixations, &layout).map_err(engine)?;
    Ok(VoteResponse { layout, votes, totals: tally.totals, winner: tally.winner })
}

#[derive(Debug, Deserialize)]
#[serde(default)]
pub struct DriftRequest {
    /// `(screen y, vertical offset)` knots of the simulated drift.
    pub knots: Vec<(f64, f64)>,
    pub noise_sd_px: f64,
    pub seed: u64,
}

impl Default for DriftRequest {
    fn default() -> Self {
        Self { knots: vec![(0.0, 5.0), (600.0, 20.0), (1200.0, -10.0)], noise_sd_px: 3.0, seed: 1 }
    }
}

#[derive(Debug, Serialize)]
pub struct SweepTrace {
    pub y_px: f64,
    /// Every fourth valid sample, raw and corrected.
    pub raw: Vec<(f64, f64)>,
    pub corrected: Vec<(f64, f64)>,
}

#[derive(Debug, Serialize)]
pub struct DriftResponse {
    pub profile: DriftProfile,
    pub raw_error_px: f64,
    pub corrected_error_px: f64,
    pub apply_correction: bool,
    pub validation: Vec<SweepTrace>,
}

/// Simulates drifted calibration and validation pursuits, fits a profile and scores it.
pub fn drift(request: &str) -> Result<DriftResponse, DemoError> {
    let req: DriftRequest = serde_json::from_str(request)?;
    let mut knots = req.knots;
    knots.sort_by(|a, b| a.0.total_cmp(&b.0));
    let profile = ReaderProfile {
        drift: DriftModel::Knots(knots),
        noise_sd_px: req.noise_sd_px.max(0.0),
        seed: req.seed,
        ..ReaderProfile::default()
    };
    let geom = ScreenGeometry::study_display();
    let calibration = simulate_sweep_session(TargetKind::Lines5, &profile, &geom);
    let validation =
        simulate_sweep_session(TargetKind::Lines4, &ReaderProfile { seed: req.seed.wrapping_add(1), ..profile }, &geom);
    let fitted = fit_drift_profile(&calibration).map_err(engine)?;
    let raw = score_line_validation(&validation, None).map_err(engine)?;
    let corrected = score_line_validation(&validation, Some(&fitted)).map_err(engine)?;
    let traces = validation
        .iter()
        .map(|rec| {
            let kept: Vec<_> = rec.samples.iter().filter(|s| s.valid).step_by(4).collect();
            SweepTrace {
                y_px: rec.y_px,
                raw: kept.iter().map(|s| (s.x, s.y)).collect(),
                corrected: kept.iter().map(|s| (s.x, fitted.correct_y(s.y))).collect(),
            }
        })
        .collect();
    Ok(DriftResponse {
        apply_correction: decide_apply_correction(raw, corrected),
        profile: fitted,
        raw_error_px: raw,
        corrected_error_px: corrected,
        validation: traces,
    })
}

#[derive(Debug, Deserialize)]
#[serde(default)]
pub struct ReadingRequest {
    pub text: String,
    pub seed: u64,
    pub noise_sd_px: f64,
    pub deviation_prob: f64,
    pub hesitation_prob: f64,
    /// Engine and augmentation settings, as in a `configure` message.
    pub engine: serde_json::Value,
    pub augmentation: serde_json::Value,
}

impl Default for ReadingRequest {
    fn default() -> Self {
        let p = ReaderProfile::default();
        Self {
            text: String::new(),
            seed: 1,
            noise_sd_px: 4.0,
            deviation_prob: p.deviation_prob,
            hesitation_prob: p.hesitation_prob,
            engine: serde_json::Value::Null,
            augmentation: serde_json::Value::Null,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ReadingResponse {
    pub layout: PageLayout,
    pub samples: usize,
    pub fixations: Vec<FixationRecord>,
    pub truth_sweeps: Vec<TruthSweep>,
    /// Outbound `behavior` and `augment` messages in order.
    pub events: Vec<Envelope>,
    pub metrics: Option<PassageMetrics>,
}

fn patched<T: Serialize + serde::de::DeserializeOwned>(base: T, patch: serde_json::Value) -> Result<T, DemoError> {
    let serde_json::Value::Object(patch) = patch else { return Ok(base) };
    let mut value = serde_json::to_value(base)?;
    if let serde_json::Value::Object(map) = &mut value {
        map.extend(patch);
    }
    Ok(serde_json::from_value(value)?)
}

const SAMPLE_TEXT: &str = "The harbour was quiet in the early morning when the fishing boats returned \
with their catch and the gulls circled above the weathered wooden piers while merchants prepared \
their stalls along the narrow cobbled street that wound its way uphill toward the old lighthouse \
standing watch over the bay where generations of sailors had found their way home through storms \
and fog guided by a steady beam that never once failed to shine across the restless water";

/// Simulates a reader over `text` and runs the full session engine on the stream.
pub fn reading(request: &str) -> Result<ReadingResponse, DemoError> {
    let req: ReadingRequest = serde_json::from_str(request)?;
    let text = if req.text.trim().is_empty() { SAMPLE_TEXT } else { req.text.as_str() };
    let layout = PageLayout::flow_text(text, &TextMetrics::default(), Background::Light);
    let profile = ReaderProfile {
        seed: req.seed,
        noise_sd_px: req.noise_sd_px.max(0.0),
        deviation_prob: req.deviation_prob.clamp(0.0, 1.0),
        hesitation_prob: req.hesitation_prob.clamp(0.0, 1.0),
        ..ReaderProfile::default()
    };
    let opts = SessionOptions {
        engine: patched(SessionOptions::default().engine, req.engine)?,
        augmentation: patched(SessionOptions::default().augmentation, req.augmentation)?,
        ..SessionOptions::default()
    };
    opts.engine.validate().map_err(engine)?;
    let sim = simulate(&layout, &profile);
    let mut events = Vec::new();
    let mut source = MessageSource::from_envelopes(&simulated_messages("demo", &sim, &layout));
    let run = run_session(
        &mut source,
        &mut |e| {
            if e.kind == "behavior" || e.kind == "augment" {
                events.push(e.clone());
            }
        },
        opts,
    )
    .map_err(engine)?;
    Ok(ReadingResponse {
        metrics: run.session.passage_metrics(),
        fixations: run.session.fixations,
        samples: sim.samples.len(),
        truth_sweeps: sim.truth.sweeps,
        events,
        layout,
    })
}

fn respond<T: Serialize>(result: Result<T, DemoError>) -> Result<String, JsError> {
    let value = result.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = voteDemo)]
pub fn vote_demo(request: &str) -> Result<String, JsError> {
    respond(vote(request))
}

#[wasm_bindgen(js_name = driftDemo)]
pub fn drift_demo(request: &str) -> Result<String, JsError> {
    respond(drift(request))
}

#[wasm_bindgen(js_name = readingDemo)]
pub fn reading_demo(request: &str) -> Result<String, JsError> {
    respond(reading(request))
}
