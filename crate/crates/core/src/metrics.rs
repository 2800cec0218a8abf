//! Offline reading measures for one passage.
//!
//! Everything here is a pure function of the logs: line-switching time,
//! line-switch deviations, maximum first-pass time per word, scroll events
//! and data loss.

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

use crate::behavior::{BehaviorEvent, BehaviorKind};
use crate::layout::{LineId, PageLayout, WordId};
use crate::simulator::GroundTruth;
use crate::types::{Fixation, Micros, ScrollDelta};

/// Slack for the saccade after a landing fixation to still count as forward.
pub const FORWARD_SLACK_PX: f64 = 10.0;
/// Scroll deltas separated by more than this belong to different events.
pub const SCROLL_PAUSE_US: Micros = 100_000;
/// A detected sweep is matched to a scripted one when their landing fixations end this close.
pub const TRUTH_MATCH_US: Micros = 100_000;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("layout has no lines")]
    EmptyLayout,
}

/// One detected fixation as logged by the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixationRecord {
    pub fixation: Fixation,
    /// Line assigned by the vote window; `None` before a layout arrived.
    pub line_id: Option<LineId>,
    pub word_id: Option<WordId>,
    pub layout_version: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WordOnePass {
    pub word_id: WordId,
    pub one_pass_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PassageMetrics {
    pub line_count: usize,
    pub line_switch_count: usize,
    pub mean_line_switch_time_ms: f64,
    pub deviation_count: usize,
    /// Deviations divided by the number of lines on the page.
    pub deviation_frequency: f64,
    pub mean_deviation_magnitude_lines: f64,
    pub deviation_magnitudes: Vec<usize>,
    /// First-pass time for each content word that was fixated.
    pub word_one_pass: Vec<WordOnePass>,
    pub max_one_pass_fixation_ms: f64,
    pub scroll_event_count: usize,
    pub scroll_distances_px: Vec<f64>,
    pub mean_scroll_distance_px: f64,
    pub data_loss_fraction: f64,
}

pub struct MetricsInput<'a> {
    pub fixations: &'a [FixationRecord],
    pub behavior: &'a [BehaviorEvent],
    pub scrolls: &'a [ScrollDelta],
    pub layout: &'a PageLayout,
    pub truth: Option<&'a GroundTruth>,
    pub data_loss_fraction: f64,
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Splits scroll deltas at pauses longer than [`SCROLL_PAUSE_US`]; returns `|Σdy|` per event.
pub fn segment_scrolls(scrolls: &[ScrollDelta]) -> Vec<f64> {
    let mut out = Vec::new();
    let mut acc: Option<(Micros, f64)> = None;
    for s in scrolls {
        acc = match acc {
            Some((last, sum)) if s.t.saturating_sub(last) <= SCROLL_PAUSE_US => Some((s.t, sum + s.dy)),
            Some((_, sum)) => {
                out.push(sum.abs());
                Some((s.t, s.dy))
            }
            None => Some((s.t, s.dy)),
        };
    }
    if let Some((_, sum)) = acc {
        out.push(sum.abs());
    }
    out
}

/// Index of the fixation record whose end is `at`.
fn landing_index(fixations: &[FixationRecord], at: Micros) -> Option<usize> {
    fixations.iter().position(|r| r.fixation.end() == at)
}

/// Line the reader meant to reach with a sweep that landed at `at` from `from`.
fn intended_line(from: LineId, at: Micros, truth: Option<&GroundTruth>) -> LineId {
    let scripted = truth.and_then(|t| {
        t.sweeps
            .iter()
            .filter_map(|s| t.fixations.get(s.fixation).map(|f| (s, f.end().abs_diff(at))))
            .filter(|(_, d)| *d <= TRUTH_MATCH_US)
            .min_by_key(|(_, d)| *d)
            .map(|(s, _)| s.target_line)
    });
    scripted.unwrap_or(from + 1)
}

/// Time from the last fixation before the sweep to the first fixation on `target` followed by a forward saccade.
fn switch_time(fixations: &[FixationRecord], landing: usize, target: LineId) -> Option<Micros> {
    let before = fixations[..landing].last()?;
    let start = before.fixation.end();
    (landing..fixations.len().saturating_sub(1)).find_map(|j| {
        let (f, next) = (&fixations[j], &fixations[j + 1]);
        let forward = f.line_id == Some(target)
            && next.line_id == Some(target)
            && next.fixation.cx >= f.fixation.cx - FORWARD_SLACK_PX;
        forward.then(|| f.fixation.onset.saturating_sub(start))
    })
}

/// First-pass time per content word: the summed duration of the first run of consecutive fixations on it.
pub fn one_pass_times(fixations: &[FixationRecord], layout: &PageLayout) -> Vec<WordOnePass> {
    let mut out: Vec<WordOnePass> = Vec::new();
    let mut run: Option<(WordId, Micros)> = None;
    let flush = |run: Option<(WordId, Micros)>, out: &mut Vec<WordOnePass>| {
        if let Some((w, d)) = run {
            let content = layout.word(w).is_some_and(|b| !b.function_word);
            if content && !out.iter().any(|p| p.word_id == w) {
                out.push(WordOnePass { word_id: w, one_pass_ms: d as f64 / 1000.0 });
            }
        }
    };
    for r in fixations {
        match (run, r.word_id) {
            (Some((w, d)), Some(id)) if w == id => run = Some((w, d + r.fixation.duration)),
            (_, id) => {
                flush(run, &mut out);
                run = id.map(|id| (id, r.fixation.duration));
            }
        }
    }
    flush(run, &mut out);
    out
}

pub fn compute_metrics(input: &MetricsInput<'_>) -> Result<PassageMetrics, MetricsError> {
    let line_count = input.layout.lines.len();
    if line_count == 0 {
        return Err(MetricsError::EmptyLayout);
    }
    if input.fixations.is_empty() && input.scrolls.is_empty() {
        warn!("empty log, metrics are all zero");
        return Ok(PassageMetrics { line_count, data_loss_fraction: input.data_loss_fraction, ..Default::default() });
    }

    let mut switch_times = Vec::new();
    let mut magnitudes = Vec::new();
    for ev in input.behavior.iter().filter(|e| e.kind == BehaviorKind::SwitchReturnSweep) {
        let Some(from) = ev.from_line else { continue };
        let intended = intended_line(from, ev.at, input.truth);
        if ev.line_id != intended {
            magnitudes.push(ev.line_id.abs_diff(intended));
        }
        if let Some(i) = landing_index(input.fixations, ev.at) {
            if let Some(dt) = switch_time(input.fixations, i, intended) {
                switch_times.push(dt as f64 / 1000.0);
            }
        }
    }

    let word_one_pass = one_pass_times(input.fixations, input.layout);
    let scroll_distances_px = segment_scrolls(input.scrolls);
    Ok(PassageMetrics {
        line_count,
        line_switch_count: switch_times.len(),
        mean_line_switch_time_ms: mean(switch_times.iter().copied()),
        deviation_count: magnitudes.len(),
        deviation_frequency: magnitudes.len() as f64 / line_count as f64,
        mean_deviation_magnitude_lines: mean(magnitudes.iter().map(|&m| m as f64)),
        deviation_magnitudes: magnitudes,
        max_one_pass_fixation_ms: word_one_pass.iter().map(|p| p.one_pass_ms).fold(0.0, f64::max),
        word_one_pass,
        scroll_event_count: scroll_distances_px.len(),
        mean_scroll_distance_px: mean(scroll_distances_px.iter().copied()),
        scroll_distances_px,
        data_loss_fraction: input.data_loss_fraction,
    })
}

impl PassageMetrics {
    /// Two-column human-readable table.
    pub fn table(&self) -> String {
        let rows = [
            ("lines", self.line_count.to_string()),
            ("line switches", self.line_switch_count.to_string()),
            ("mean line-switch time (ms)", format!("{:.1}", self.mean_line_switch_time_ms)),
            ("deviations", self.deviation_count.to_string()),
            ("deviation frequency", format!("{:.3}", self.deviation_frequency)),
            ("mean deviation magnitude (lines)", format!("{:.2}", self.mean_deviation_magnitude_lines)),
            ("max one-pass time (ms)", format!("{:.1}", self.max_one_pass_fixation_ms)),
            ("scroll events", self.scroll_event_count.to_string()),
            ("mean scroll distance (px)", format!("{:.1}", self.mean_scroll_distance_px)),
            ("data loss", format!("{:.3}", self.data_loss_fraction)),
        ];
        let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
        rows.iter().map(|(k, v)| format!("{k:<width$}  {v}\n")).collect()
    }
}
