//! Reading-behaviour recognition over the fixation stream.
//!
//! * Line identification: each fixation votes for the line whose vertical
//!   centre is nearest, weighted by `1 / (1 + |d|)` where `d` is the offset
//!   from that centre in half line heights. The line with the largest summed
//!   weight over the latest `vote_window` fixations is the reading line.
//! * Line switching: a return sweep is a large leftward, downward move that
//!   lands in the left part of the text block. Other line changes are only
//!   reported as jumps once the new line wins `jump_stability_count`
//!   consecutive votes.
//! * Difficult words: within one pass over a word (consecutive fixations on
//!   it), a long first fixation, too many refixations or a long total
//!   duration flags the word. Each pass flags at most once.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::EngineConfig;
use crate::layout::{IdMap, LineId, PageLayout, WordId};
use crate::types::{Fixation, Micros};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BehaviorError {
    #[error("layout has no lines")]
    NoLayout,
    #[error("no fixations to vote with")]
    NoFixations,
    #[error("fixation from layout version {fixation} but active layout is {active}")]
    StaleFixation { fixation: u64, active: u64 },
    #[error("layout version went from {from} to {to}")]
    VersionRegression { from: u64, to: u64 },
}

/// One fixation's vote for its landing line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineVote {
    pub landing_line: LineId,
    pub weight: f64,
    pub normalized_distance: f64,
}

/// Nearest line by vertical centre; equidistant fixations go to the upper line.
pub fn landing_vote(fix: &Fixation, layout: &PageLayout) -> Option<LineVote> {
    let lines = &layout.lines;
    if lines.is_empty() {
        return None;
    }
    let idx = lines.partition_point(|l| l.mid() < fix.cy);
    let line = if idx == 0 {
        &lines[0]
    } else if idx == lines.len() {
        &lines[idx - 1]
    } else {
        let above = &lines[idx - 1];
        let below = &lines[idx];
        if fix.cy - above.mid() <= below.mid() - fix.cy {
            above
        } else {
            below
        }
    };
    let d = (fix.cy - line.mid()) / (0.5 * line.height());
    Some(LineVote { landing_line: line.line_id, weight: 1.0 / (1.0 + d.abs()), normalized_distance: d })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoteTally {
    pub winner: LineId,
    /// Summed weight per line, in order of first vote.
    pub totals: Vec<(LineId, f64)>,
    pub votes: Vec<LineVote>,
}

impl VoteTally {
    pub fn total(&self, line: LineId) -> f64 {
        self.totals.iter().find(|(l, _)| *l == line).map_or(0.0, |(_, w)| *w)
    }
}

/// Weighted vote over `fixations` (oldest first). Ties go to the line voted for most recently.
pub fn tally_votes(fixations: &[Fixation], layout: &PageLayout) -> Result<VoteTally, BehaviorError> {
    if layout.lines.is_empty() {
        return Err(BehaviorError::NoLayout);
    }
    if fixations.is_empty() {
        return Err(BehaviorError::NoFixations);
    }
    let mut totals: Vec<(LineId, f64, usize)> = Vec::with_capacity(fixations.len());
    let mut votes = Vec::with_capacity(fixations.len());
    for (i, f) in fixations.iter().enumerate() {
        let v = landing_vote(f, layout).ok_or(BehaviorError::NoLayout)?;
        match totals.iter_mut().find(|(l, _, _)| *l == v.landing_line) {
            Some(entry) => {
                entry.1 += v.weight;
                entry.2 = i;
            }
            None => totals.push((v.landing_line, v.weight, i)),
        }
        votes.push(v);
    }
    let mut best = totals[0];
    for &t in &totals[1..] {
        if t.1 > best.1 || (t.1 == best.1 && t.2 > best.2) {
            best = t;
        }
    }
    Ok(VoteTally { winner: best.0, totals: totals.into_iter().map(|(l, w, _)| (l, w)).collect(), votes })
}

pub fn identify_line(fixations: &[Fixation], layout: &PageLayout) -> Result<LineId, BehaviorError> {
    tally_votes(fixations, layout).map(|t| t.winner)
}

/// Per-criterion outcome of the return-sweep test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepCriteria {
    pub leftward: bool,
    pub left_portion: bool,
    pub line_apart: bool,
}

impl SweepCriteria {
    pub fn all(&self) -> bool {
        self.leftward && self.left_portion && self.line_apart
    }
}

pub fn sweep_criteria(prev: &Fixation, next: &Fixation, layout: &PageLayout, cfg: &EngineConfig) -> SweepCriteria {
    let left_limit = layout.text_left() + cfg.ls_left_portion_fraction * layout.text_width;
    SweepCriteria {
        leftward: prev.cx - next.cx > cfg.ls_min_leftward_px,
        left_portion: next.cx < left_limit,
        line_apart: next.cy - prev.cy > layout.line_height,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BehaviorKind {
    Following,
    SwitchReturnSweep,
    Jump,
    DifficultWord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DwTrigger {
    #[serde(rename = "DW0_first_fixation")]
    FirstFixation,
    #[serde(rename = "DW1_refixations")]
    Refixations,
    #[serde(rename = "DW2_total")]
    TotalDuration,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BehaviorEvent {
    pub kind: BehaviorKind,
    pub line_id: LineId,
    /// Reading line before the event.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from_line: Option<LineId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word_id: Option<WordId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trigger: Option<DwTrigger>,
    pub at: Micros,
}

impl BehaviorEvent {
    fn line(kind: BehaviorKind, line_id: LineId, from_line: Option<LineId>, at: Micros) -> Self {
        Self { kind, line_id, from_line, word_id: None, trigger: None, at }
    }
}

/// Result of feeding one fixation to the tracker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub event: Option<BehaviorEvent>,
    /// Vote winner over the window ending at this fixation.
    pub window_line: LineId,
}

#[derive(Debug, Clone, Default)]
pub struct LineTracker {
    window: VecDeque<Fixation>,
    current_line: Option<LineId>,
    pending_jump: Option<(LineId, u32)>,
    prev: Option<Fixation>,
}

impl LineTracker {
    pub fn new() -> Self {
        Self::default()
    }

    /// `None` while pending (before the first fixation or after a reset).
    pub fn current_line(&self) -> Option<LineId> {
        self.current_line
    }

    pub fn pending_jump(&self) -> Option<(LineId, u32)> {
        self.pending_jump
    }

    pub fn window(&self) -> impl Iterator<Item = &Fixation> {
        self.window.iter()
    }

    pub fn reset(&mut self) {
        *self = Self::default();
    }

    /// Classifies the move from the previous fixation to `next` and updates the tracker.
    pub fn classify(
        &mut self,
        next: &Fixation,
        layout: &PageLayout,
        cfg: &EngineConfig,
    ) -> Result<Transition, BehaviorError> {
        if layout.lines.is_empty() {
            return Err(BehaviorError::NoLayout);
        }
        let at = next.end();
        let from = self.current_line;
        let sweep = self.prev.is_some_and(|p| sweep_criteria(&p, next, layout, cfg).all());
        self.prev = Some(*next);

        if sweep {
            self.window.clear();
            self.window.push_back(*next);
            let line = identify_line(self.window.make_contiguous(), layout)?;
            self.current_line = Some(line);
            self.pending_jump = None;
            return Ok(Transition {
                event: Some(BehaviorEvent::line(BehaviorKind::SwitchReturnSweep, line, from, at)),
                window_line: line,
            });
        }

        self.window.push_back(*next);
        while self.window.len() > cfg.vote_window.max(1) {
            self.window.pop_front();
        }
        let line = identify_line(self.window.make_contiguous(), layout)?;
        let event = match self.current_line {
            None => {
                self.current_line = Some(line);
                self.pending_jump = None;
                Some(BehaviorEvent::line(BehaviorKind::Following, line, None, at))
            }
            Some(cur) if cur == line => {
                self.pending_jump = None;
                Some(BehaviorEvent::line(BehaviorKind::Following, line, from, at))
            }
            Some(_) => {
                let count = match self.pending_jump {
                    Some((cand, n)) if cand == line => n + 1,
                    _ => 1,
                };
                if count >= cfg.jump_stability_count {
                    self.current_line = Some(line);
                    self.pending_jump = None;
                    Some(BehaviorEvent::line(BehaviorKind::Jump, line, from, at))
                } else {
                    self.pending_jump = Some((line, count));
                    None
                }
            }
        };
        Ok(Transition { event, window_line: line })
    }

    /// Re-expresses tracker state in a scrolled/reflowed layout, or resets without a map.
    pub fn remap(&mut self, dy: f64, map: Option<&IdMap>) {
        let Some(map) = map else {
            self.reset();
            return;
        };
        for f in self.window.iter_mut() {
            *f = f.translated(0.0, dy);
        }
        self.prev = self.prev.map(|f| f.translated(0.0, dy));
        self.current_line = self.current_line.and_then(|l| map.line(l));
        self.pending_jump = self.pending_jump.and_then(|(l, n)| map.line(l).map(|l| (l, n)));
        if self.current_line.is_none() {
            self.pending_jump = None;
        }
    }
}

/// Consecutive fixations on one word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordPass {
    pub word_id: WordId,
    pub first_fixation_duration: Micros,
    pub refixation_count: u32,
    pub total_duration: Micros,
    pub open: bool,
    pub fired: Option<DwTrigger>,
}

impl WordPass {
    fn open(word_id: WordId, duration: Micros) -> Self {
        Self {
            word_id,
            first_fixation_duration: duration,
            refixation_count: 0,
            total_duration: duration,
            open: true,
            fired: None,
        }
    }

    /// Earliest satisfied trigger, in threshold order.
    pub fn satisfied(&self, cfg: &EngineConfig) -> Option<DwTrigger> {
        if self.first_fixation_duration > cfg.dw_first_fixation_us {
            Some(DwTrigger::FirstFixation)
        } else if self.refixation_count > cfg.dw_refixations {
            Some(DwTrigger::Refixations)
        } else if self.total_duration > cfg.dw_total_us {
            Some(DwTrigger::TotalDuration)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct WordPassTracker {
    pass: Option<WordPass>,
}

impl WordPassTracker {
    pub fn current(&self) -> Option<&WordPass> {
        self.pass.as_ref()
    }

    /// Adds a fixation assigned to `line`; returns a difficult-word event when a pass first crosses a threshold.
    pub fn track(
        &mut self,
        fix: &Fixation,
        line: LineId,
        layout: &PageLayout,
        cfg: &EngineConfig,
    ) -> Option<BehaviorEvent> {
        let Some(word) = layout.word_at(line, fix.cx) else {
            self.close();
            return None;
        };
        let pass = match &mut self.pass {
            Some(p) if p.open && p.word_id == word.word_id => {
                p.refixation_count += 1;
                p.total_duration += fix.duration;
                p
            }
            slot => slot.insert(WordPass::open(word.word_id, fix.duration)),
        };
        if pass.fired.is_some() {
            return None;
        }
        let trigger = pass.satisfied(cfg)?;
        pass.fired = Some(trigger);
        if cfg.stopword_suppression && word.function_word {
            return None;
        }
        Some(BehaviorEvent {
            kind: BehaviorKind::DifficultWord,
            line_id: line,
            from_line: None,
            word_id: Some(word.word_id),
            trigger: Some(trigger),
            at: fix.end(),
        })
    }

    pub fn close(&mut self) {
        if let Some(p) = &mut self.pass {
            p.open = false;
        }
    }

    pub fn remap(&mut self, map: Option<&IdMap>) {
        let survivor = self.pass.and_then(|p| {
            let new_id = map?.word(p.word_id)?;
            Some(WordPass { word_id: new_id, ..p })
        });
        self.pass = survivor;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixationOutcome {
    pub line_id: LineId,
    pub word_id: Option<WordId>,
    pub events: Vec<BehaviorEvent>,
}

/// Per-session recognition state.
#[derive(Debug, Clone)]
pub struct BehaviorEngine {
    cfg: EngineConfig,
    layout: PageLayout,
    pub tracker: LineTracker,
    pub words: WordPassTracker,
}

impl BehaviorEngine {
    pub fn new(cfg: EngineConfig, layout: PageLayout) -> Self {
        Self { cfg, layout, tracker: LineTracker::new(), words: WordPassTracker::default() }
    }

    pub fn layout(&self) -> &PageLayout {
        &self.layout
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn set_config(&mut self, cfg: EngineConfig) {
        self.cfg = cfg;
    }

    /// Processes a fixation detected against layout `version`. Emits at most one line event then at most one
    /// difficult-word event.
    pub fn on_fixation(&mut self, fix: &Fixation, version: u64) -> Result<Vec<BehaviorEvent>, BehaviorError> {
        self.assess(fix, version).map(|o| o.events)
    }

    /// As [`Self::on_fixation`], also reporting the vote-window line and the word under the fixation.
    pub fn assess(&mut self, fix: &Fixation, version: u64) -> Result<FixationOutcome, BehaviorError> {
        if version != self.layout.layout_version {
            return Err(BehaviorError::StaleFixation { fixation: version, active: self.layout.layout_version });
        }
        let t = self.tracker.classify(fix, &self.layout, &self.cfg)?;
        let mut events = Vec::with_capacity(2);
        events.extend(t.event);
        events.extend(self.words.track(fix, t.window_line, &self.layout, &self.cfg));
        let word_id = self.layout.word_at(t.window_line, fix.cx).map(|w| w.word_id);
        Ok(FixationOutcome { line_id: t.window_line, word_id, events })
    }

    /// Installs `new`. `scroll_dy` is the scroll distance; content moved by `-scroll_dy` on screen.
    pub fn on_layout_change(
        &mut self,
        new: PageLayout,
        scroll_dy: f64,
        map: Option<&IdMap>,
    ) -> Result<(), BehaviorError> {
        if new.layout_version <= self.layout.layout_version {
            return Err(BehaviorError::VersionRegression { from: self.layout.layout_version, to: new.layout_version });
        }
        self.tracker.remap(-scroll_dy, map);
        self.words.remap(map);
        self.layout = new;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{Background, LineBox, TextMetrics};

    fn fix(cx: f64, cy: f64) -> Fixation {
        Fixation { cx, cy, onset: 0, duration: 200_000, sample_count: 24 }
    }

    fn lines(n: usize, top: f64, h: f64, pitch: f64) -> PageLayout {
        let lines = (0..n)
            .map(|i| {
                let t = top + i as f64 * pitch;
                LineBox { line_id: i, top: t, bottom: t + h, left: 100.0, right: 1900.0 }
            })
            .collect();
        PageLayout::new(0, lines, vec![], Background::Light)
    }

    #[test]
    fn centred_fixation_has_unit_weight() {
        let l = lines(3, 100.0, 50.0, 100.0);
        let v = landing_vote(&fix(500.0, l.lines[1].mid()), &l).unwrap();
        assert_eq!(v.landing_line, 1);
        assert_eq!(v.weight, 1.0);
        assert_eq!(identify_line(&[fix(500.0, l.lines[1].mid())], &l).unwrap(), 1);
    }

    #[test]
    fn bottom_edge_has_half_weight() {
        let l = lines(3, 100.0, 50.0, 100.0);
        let v = landing_vote(&fix(500.0, l.lines[1].bottom), &l).unwrap();
        assert_eq!(v.normalized_distance, 1.0);
        assert_eq!(v.weight, 0.5);
    }

    #[test]
    fn equidistant_goes_to_upper_line() {
        let l = lines(3, 100.0, 50.0, 100.0);
        let mid = (l.lines[0].mid() + l.lines[1].mid()) / 2.0;
        assert_eq!(landing_vote(&fix(500.0, mid), &l).unwrap().landing_line, 0);
    }

    #[test]
    fn vote_tie_prefers_most_recent() {
        let l = lines(3, 100.0, 50.0, 100.0);
        let a = fix(500.0, l.lines[0].mid());
        let b = fix(500.0, l.lines[2].mid());
        assert_eq!(identify_line(&[a, b], &l).unwrap(), 2);
        assert_eq!(identify_line(&[b, a], &l).unwrap(), 0);
    }

    #[test]
    fn empty_layout_is_an_error() {
        let l = PageLayout::new(0, vec![], vec![], Background::Light);
        assert_eq!(identify_line(&[fix(1.0, 1.0)], &l), Err(BehaviorError::NoLayout));
    }

    fn sweep_layout() -> PageLayout {
        // text block x in [100, 1900], box height 50, pitch 62
        let mut l = lines(4, 275.0, 50.0, 62.0);
        l.text_width = 1800.0;
        l
    }

    #[test]
    fn return_sweep_criteria() {
        let l = sweep_layout();
        let c = EngineConfig::default();
        let s = sweep_criteria(&fix(1500.0, 300.0), &fix(200.0, 362.0), &l, &c);
        assert!(s.all());
        let s = sweep_criteria(&fix(1500.0, 300.0), &fix(1100.0, 362.0), &l, &c);
        assert!(!s.leftward && !s.all());
    }

    #[test]
    fn tracker_reports_sweep_on_new_line() {
        let l = sweep_layout();
        let c = EngineConfig::default();
        let mut t = LineTracker::new();
        let first = t.classify(&fix(1500.0, 300.0), &l, &c).unwrap();
        assert_eq!(first.event.unwrap().kind, BehaviorKind::Following);
        let ev = t.classify(&fix(200.0, 362.0), &l, &c).unwrap().event.unwrap();
        assert_eq!(ev.kind, BehaviorKind::SwitchReturnSweep);
        assert_eq!(ev.line_id, 1);
        assert_eq!(ev.from_line, Some(0));
    }

    #[test]
    fn backward_scan_on_same_line_is_following() {
        let l = sweep_layout();
        let c = EngineConfig::default();
        let mut t = LineTracker::new();
        let y = l.lines[2].mid();
        for k in 0..12 {
            let tr = t.classify(&fix(1800.0 - 120.0 * k as f64, y), &l, &c).unwrap();
            assert_eq!(tr.event.unwrap().kind, BehaviorKind::Following);
        }
    }

    #[test]
    fn jump_needs_three_stable_votes() {
        let l = lines(6, 100.0, 40.0, 72.0);
        let c = EngineConfig::default();
        let mut t = LineTracker::new();
        for _ in 0..3 {
            t.classify(&fix(800.0, l.lines[1].mid()), &l, &c).unwrap();
        }
        // window {1,1,4}: still line 1
        let e = t.classify(&fix(900.0, l.lines[4].mid()), &l, &c).unwrap().event;
        assert_eq!(e.unwrap().kind, BehaviorKind::Following);
        // {1,4,4} -> pending 1, {4,4,4} -> pending 2, then jump
        assert!(t.classify(&fix(1000.0, l.lines[4].mid()), &l, &c).unwrap().event.is_none());
        assert!(t.classify(&fix(1100.0, l.lines[4].mid()), &l, &c).unwrap().event.is_none());
        let e = t.classify(&fix(1200.0, l.lines[4].mid()), &l, &c).unwrap().event.unwrap();
        assert_eq!((e.kind, e.line_id, e.from_line), (BehaviorKind::Jump, 4, Some(1)));
        assert_eq!(t.current_line(), Some(4));
    }

    fn word_layout() -> PageLayout {
        PageLayout::flow_text("Reindeer wander across frozen tundra", &TextMetrics::default(), Background::Light)
    }

    fn on_word(layout: &PageLayout, word: usize, dur: Micros, onset: Micros) -> Fixation {
        let w = &layout.words[word];
        Fixation { cx: w.center_x(), cy: layout.lines[w.line_id].mid(), onset, duration: dur, sample_count: 10 }
    }

    #[test]
    fn long_first_fixation_triggers_dw0() {
        let l = word_layout();
        let c = EngineConfig::default();
        let mut w = WordPassTracker::default();
        let ev = w.track(&on_word(&l, 0, 600_000, 0), 0, &l, &c).unwrap();
        assert_eq!(ev.trigger, Some(DwTrigger::FirstFixation));
        assert_eq!(ev.word_id, Some(0));
    }

    #[test]
    fn six_refixations_trigger_dw1() {
        let l = word_layout();
        let c = EngineConfig::default();
        let mut w = WordPassTracker::default();
        let mut events = vec![];
        for k in 0..6 {
            events.extend(w.track(&on_word(&l, 0, 200_000, k * 250_000), 0, &l, &c));
        }
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].trigger, Some(DwTrigger::Refixations));
        assert_eq!(w.current().unwrap().total_duration, 1_200_000);
    }

    #[test]
    fn long_total_triggers_dw2_on_fourth() {
        let l = word_layout();
        let c = EngineConfig::default();
        let mut w = WordPassTracker::default();
        for k in 0..3 {
            assert!(w.track(&on_word(&l, 0, 450_000, k * 500_000), 0, &l, &c).is_none());
        }
        let ev = w.track(&on_word(&l, 0, 450_000, 1_500_000), 0, &l, &c).unwrap();
        assert_eq!(ev.trigger, Some(DwTrigger::TotalDuration));
    }

    #[test]
    fn leaving_word_opens_fresh_pass() {
        let l = word_layout();
        let c = EngineConfig::default();
        let mut w = WordPassTracker::default();
        assert!(w.track(&on_word(&l, 0, 600_000, 0), 0, &l, &c).is_some());
        assert!(w.track(&on_word(&l, 0, 600_000, 700_000), 0, &l, &c).is_none());
        w.track(&on_word(&l, 1, 200_000, 1_400_000), 0, &l, &c);
        assert!(w.track(&on_word(&l, 0, 600_000, 1_700_000), 0, &l, &c).is_some());
    }

    #[test]
    fn stopword_suppression_hides_event() {
        let l = PageLayout::flow_text("through tundra", &TextMetrics::default(), Background::Light);
        let c = EngineConfig { stopword_suppression: true, ..EngineConfig::default() };
        let mut w = WordPassTracker::default();
        assert!(w.track(&on_word(&l, 0, 600_000, 0), 0, &l, &c).is_none());
        assert_eq!(w.current().unwrap().fired, Some(DwTrigger::FirstFixation));
        assert!(w.track(&on_word(&l, 1, 600_000, 700_000), 0, &l, &c).is_some());
    }

    #[test]
    fn layout_change_with_shift_map_keeps_state() {
        let l = lines(5, 100.0, 40.0, 72.0);
        let mut l = PageLayout { words: word_layout().words, ..l };
        for w in &mut l.words {
            w.line_id = 2;
        }
        let c = EngineConfig::default();
        let mut e = BehaviorEngine::new(c, l.clone());
        let w0 = &l.words[0];
        e.on_fixation(
            &Fixation { cx: w0.center_x(), cy: l.lines[2].mid(), onset: 0, duration: 200_000, sample_count: 20 },
            0,
        )
        .unwrap();
        assert_eq!(e.tracker.current_line(), Some(2));

        let mut next = l.scrolled(-72.0);
        next.lines.remove(0);
        for (i, line) in next.lines.iter_mut().enumerate() {
            line.line_id = i;
        }
        for w in &mut next.words {
            w.line_id = 1;
        }
        let map = IdMap {
            lines: (1..5).map(|i| (i, i - 1)).collect(),
            words: next.words.iter().map(|w| (w.word_id, w.word_id)).collect(),
        };
        e.on_layout_change(next, 72.0, Some(&map)).unwrap();
        assert_eq!(e.tracker.current_line(), Some(1));
        assert!(e.words.current().is_some());
        assert!(matches!(
            e.on_fixation(&fix(1.0, 1.0), 0),
            Err(BehaviorError::StaleFixation { fixation: 0, active: 1 })
        ));
    }

    #[test]
    fn layout_change_without_map_resets() {
        let l = lines(5, 100.0, 40.0, 72.0);
        let mut e = BehaviorEngine::new(EngineConfig::default(), l.clone());
        e.on_fixation(&fix(500.0, l.lines[3].mid()), 0).unwrap();
        let next = PageLayout { layout_version: 1, ..l.clone() };
        e.on_layout_change(next, 0.0, None).unwrap();
        assert_eq!(e.tracker.current_line(), None);
        let ev = e.on_fixation(&fix(500.0, l.lines[1].mid()), 1).unwrap();
        assert_eq!(ev[0].line_id, 1);
        let regress = PageLayout { layout_version: 0, ..l };
        assert!(matches!(e.on_layout_change(regress, 0.0, None), Err(BehaviorError::VersionRegression { .. })));
    }
}
