#![allow(dead_code)]

use gazeprompt_core::augmentation::AugmentationConfig;
use gazeprompt_core::behavior::{BehaviorEvent, BehaviorKind, DwTrigger};
use gazeprompt_core::config::EngineConfig;
use gazeprompt_core::geometry::ScreenGeometry;
use gazeprompt_core::layout::{Background, PageLayout, TextMetrics};
use gazeprompt_core::metrics::{compute_metrics, FixationRecord, MetricsInput, PassageMetrics};
use gazeprompt_core::session::pipeline::{Pipeline, PipelineEvent};
use gazeprompt_core::simulator::{GroundTruth, SimulatedSession};
use gazeprompt_core::Micros;

pub const WORDS: &[&str] = &[
    "the",
    "harbour",
    "was",
    "quiet",
    "in",
    "early",
    "morning",
    "when",
    "fishing",
    "boats",
    "returned",
    "with",
    "their",
    "catch",
    "and",
    "gulls",
    "circled",
    "above",
    "weathered",
    "wooden",
    "piers",
    "while",
    "merchants",
    "prepared",
    "stalls",
    "along",
    "narrow",
    "cobbled",
    "street",
    "that",
    "wound",
    "uphill",
    "toward",
    "old",
    "lighthouse",
    "standing",
    "watch",
    "over",
    "bay",
    "where",
    "generations",
    "of",
    "sailors",
    "had",
    "found",
    "bearings",
    "through",
    "storms",
    "fog",
    "extraordinarily",
    "incomprehensible",
    "a",
    "to",
];

/// A page of roughly `lines` lines built from a seeded word sequence.
pub fn page(seed: u64, lines: usize) -> PageLayout {
    let metrics = TextMetrics::default();
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut text = String::new();
    loop {
        for _ in 0..12 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            text.push_str(WORDS[(state >> 33) as usize % WORDS.len()]);
            text.push(' ');
        }
        let full = PageLayout::flow_text(&text, &metrics, Background::Light);
        if full.lines.len() > lines {
            let keep = full.lines[..lines].to_vec();
            let words = full.words.iter().filter(|w| w.line_id < lines).cloned().collect();
            return PageLayout::new(0, keep, words, Background::Light);
        }
    }
}

#[derive(Debug, Default)]
pub struct Run {
    pub records: Vec<FixationRecord>,
    pub behavior: Vec<BehaviorEvent>,
    pub events: Vec<PipelineEvent>,
}

pub fn pipeline() -> Pipeline {
    Pipeline::new(EngineConfig::default(), AugmentationConfig::default(), ScreenGeometry::study_display()).unwrap()
}

/// Streams a simulated session through a fresh pipeline, scrolls included.
pub fn run(sim: &SimulatedSession, layout: &PageLayout) -> Run {
    let mut p = pipeline();
    let mut out = Vec::new();
    p.set_layout(layout.clone(), 0.0, None, 0, &mut out).unwrap();
    let mut scrolls = sim.truth.scrolls.iter().zip(&sim.layouts).peekable();
    for s in &sim.samples {
        while let Some((d, l)) = scrolls.next_if(|(d, _)| d.t <= s.t) {
            let map = gazeprompt_core::layout::IdMap::identity(l);
            p.set_layout(l.clone(), d.dy, Some(&map), d.t, &mut out).unwrap();
        }
        p.push_sample(*s, &mut out).unwrap();
    }
    p.finish(&mut out).unwrap();
    let mut r = Run::default();
    for e in &out {
        match e {
            PipelineEvent::Fixation(f) => r.records.push(*f),
            PipelineEvent::Behavior { event, .. } => r.behavior.push(*event),
            PipelineEvent::Augment { .. } => {}
        }
    }
    r.events = out;
    r
}

pub fn metrics(r: &Run, layout: &PageLayout, truth: Option<&GroundTruth>) -> PassageMetrics {
    compute_metrics(&MetricsInput {
        fixations: &r.records,
        behavior: &r.behavior,
        scrolls: &[],
        layout,
        truth,
        data_loss_fraction: 0.0,
    })
    .unwrap()
}

pub type LineEvent = (usize, usize, Micros);
pub type WordEvent = (usize, DwTrigger, Micros);

pub fn detected_sweeps(r: &Run) -> Vec<LineEvent> {
    line_events(r, BehaviorKind::SwitchReturnSweep)
}

pub fn detected_jumps(r: &Run) -> Vec<LineEvent> {
    line_events(r, BehaviorKind::Jump)
}

fn line_events(r: &Run, kind: BehaviorKind) -> Vec<LineEvent> {
    r.behavior.iter().filter(|e| e.kind == kind).map(|e| (e.from_line.unwrap(), e.line_id, e.at)).collect()
}

pub fn detected_difficult(r: &Run) -> Vec<WordEvent> {
    r.behavior
        .iter()
        .filter(|e| e.kind == BehaviorKind::DifficultWord)
        .map(|e| (e.word_id.unwrap(), e.trigger.unwrap(), e.at))
        .collect()
}

pub fn truth_sweeps(t: &GroundTruth) -> Vec<LineEvent> {
    t.sweeps.iter().map(|s| (s.from_line, s.landed_line, t.fixations[s.fixation].end())).collect()
}

pub fn truth_jumps(t: &GroundTruth) -> Vec<LineEvent> {
    t.jumps.iter().map(|j| (j.from_line, j.line_id, t.fixations[j.fixation].end())).collect()
}

pub fn truth_difficult(t: &GroundTruth) -> Vec<WordEvent> {
    t.difficult_words.iter().map(|d| (d.word_id, d.trigger, t.fixations[d.fixation].end())).collect()
}

pub fn truth_deviation_magnitudes(t: &GroundTruth) -> Vec<usize> {
    t.deviations.iter().map(|d| d.magnitude()).collect()
}
