//! Synthetic low-vision reader.
//!
//! Produces a 120 Hz gaze stream for a page together with the scripted
//! ground truth: every fixation, each return sweep and its intended line,
//! injected line-switch deviations, hesitations on hard words and scrolls.
//! Saccades are sample-free time gaps; noise, drift and data loss are applied
//! to samples last. Generation is fully determined by the profile's seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::behavior::DwTrigger;
use crate::calibration::{SweepRecording, TargetKind, TargetLayout};
use crate::geometry::ScreenGeometry;
use crate::layout::{LineId, PageLayout, WordId};
use crate::types::{Eye, GazeSample, Micros, ScrollDelta, SAMPLE_PERIOD_120HZ};

/// Vertical drift as a function of true screen height.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftModel {
    #[default]
    None,
    Constant(f64),
    /// offset = slope * y + intercept
    Linear {
        slope: f64,
        intercept: f64,
    },
    /// Piecewise-linear through `(y, offset)` knots, clamped outside them.
    Knots(Vec<(f64, f64)>),
}

impl DriftModel {
    pub fn offset(&self, y: f64) -> f64 {
        match self {
            DriftModel::None => 0.0,
            DriftModel::Constant(c) => *c,
            DriftModel::Linear { slope, intercept } => slope * y + intercept,
            DriftModel::Knots(k) => {
                let Some(first) = k.first() else { return 0.0 };
                let last = k[k.len() - 1];
                if y <= first.0 {
                    return first.1;
                }
                if y >= last.0 {
                    return last.1;
                }
                let i = k.partition_point(|p| p.0 <= y) - 1;
                let (a, b) = (k[i], k[i + 1]);
                a.1 + (y - a.0) / (b.0 - a.0) * (b.1 - a.1)
            }
        }
    }
}

/// Scroll injected in the middle of fixation `during_fixation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScriptedScroll {
    pub during_fixation: usize,
    pub dy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReaderProfile {
    /// Mean and standard deviation of ordinary fixation durations.
    pub fixation_duration_ms: (f64, f64),
    /// Ordinary durations are clamped into this range.
    pub fixation_clamp_ms: (f64, f64),
    /// Words advanced per forward saccade, inclusive range.
    pub saccade_len_words: (usize, usize),
    /// Consecutive fixations are placed at least this far apart horizontally.
    pub min_saccade_px: f64,
    /// Samples skipped during a saccade within a line.
    pub saccade_gap_samples: u64,
    /// Samples skipped during a return sweep.
    pub sweep_gap_samples: u64,
    /// Probability that an eligible word causes a hesitation.
    pub hesitation_prob: f64,
    /// Words narrower than this are never hesitation targets.
    pub hard_word_min_px: f64,
    /// Probability that a return sweep overshoots its target line.
    pub deviation_prob: f64,
    pub max_deviation_lines: usize,
    /// Per-fixation landing error.
    pub landing_sd_px: f64,
    /// Per-sample isotropic jitter.
    pub noise_sd_px: f64,
    pub drift: DriftModel,
    pub data_loss_rate: f64,
    pub scrolls: Vec<ScriptedScroll>,
    pub seed: u64,
}

impl Default for ReaderProfile {
    fn default() -> Self {
        Self {
            fixation_duration_ms: (250.0, 80.0),
            fixation_clamp_ms: (120.0, 450.0),
            saccade_len_words: (1, 2),
            min_saccade_px: 80.0,
            saccade_gap_samples: 4,
            sweep_gap_samples: 10,
            hesitation_prob: 0.05,
            hard_word_min_px: 100.0,
            deviation_prob: 0.1,
            max_deviation_lines: 2,
            landing_sd_px: 0.0,
            noise_sd_px: 0.0,
            drift: DriftModel::None,
            data_loss_rate: 0.0,
            scrolls: Vec::new(),
            seed: 0,
        }
    }
}

impl ReaderProfile {
    /// No noise, drift, loss, deviations or hesitations.
    pub fn ideal(seed: u64) -> Self {
        Self { hesitation_prob: 0.0, deviation_prob: 0.0, seed, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthFixation {
    pub cx: f64,
    pub cy: f64,
    pub onset: Micros,
    pub duration: Micros,
    pub line_id: LineId,
    pub word_id: WordId,
    pub layout_version: u64,
}

impl TruthFixation {
    pub fn end(&self) -> Micros {
        self.onset + self.duration
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthSweep {
    pub from_line: LineId,
    pub target_line: LineId,
    pub landed_line: LineId,
    /// Index of the landing fixation.
    pub fixation: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthDeviation {
    pub wrong_line: LineId,
    pub target_line: LineId,
    pub fixation: usize,
}

impl TruthDeviation {
    pub fn magnitude(&self) -> usize {
        self.wrong_line.abs_diff(self.target_line)
    }
}

/// Line change the engine should confirm once the reader settles (default stability of three).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthJump {
    pub from_line: LineId,
    pub line_id: LineId,
    pub fixation: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthDifficultWord {
    pub word_id: WordId,
    pub line_id: LineId,
    /// Trigger under the default thresholds.
    pub trigger: DwTrigger,
    /// Fixation at which the trigger is first satisfied.
    pub fixation: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub fixations: Vec<TruthFixation>,
    /// Scripted fixation index per emitted sample.
    pub sample_fixation: Vec<Option<usize>>,
    pub sweeps: Vec<TruthSweep>,
    pub deviations: Vec<TruthDeviation>,
    pub jumps: Vec<TruthJump>,
    pub difficult_words: Vec<TruthDifficultWord>,
    pub scrolls: Vec<ScrollDelta>,
    pub line_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedSession {
    pub samples: Vec<GazeSample>,
    pub truth: GroundTruth,
    /// Layout after each scripted scroll, in order.
    pub layouts: Vec<PageLayout>,
}

#[derive(Debug, Clone, Copy)]
struct Planned {
    word: WordId,
    line: LineId,
    /// Horizontal position as a fraction of the word's width.
    at: f64,
    duration_ms: f64,
}

fn sample_count(duration_ms: f64) -> u64 {
    (duration_ms * 1000.0 / SAMPLE_PERIOD_120HZ as f64).floor() as u64 + 1
}

struct Generator<'a> {
    layout: &'a PageLayout,
    profile: &'a ReaderProfile,
    rng: ChaCha8Rng,
}

impl Generator<'_> {
    fn ordinary_duration(&mut self) -> f64 {
        let (mean, sd) = self.profile.fixation_duration_ms;
        let (lo, hi) = self.profile.fixation_clamp_ms;
        let d = if sd > 0.0 { Normal::new(mean, sd).unwrap().sample(&mut self.rng) } else { mean };
        d.clamp(lo, hi)
    }

    /// Word indices (into `layout.words`) visited on one line, left to right.
    fn plan_line_words(&mut self, line: LineId) -> Vec<usize> {
        let words: Vec<usize> =
            self.layout.words.iter().enumerate().filter(|(_, w)| w.line_id == line).map(|(i, _)| i).collect();
        if words.is_empty() {
            return words;
        }
        let x_of = |i: usize| {
            let w = &self.layout.words[i];
            w.left + 0.4 * w.width()
        };
        let (lo, hi) = self.profile.saccade_len_words;
        let mut out = vec![words[0]];
        let mut pos = 0;
        loop {
            let step = self.rng.random_range(lo.max(1)..=hi.max(lo.max(1)));
            let mut next = pos + step;
            while next < words.len() && x_of(words[next]) - x_of(words[pos]) < self.profile.min_saccade_px {
                next += 1;
            }
            if next >= words.len() {
                break;
            }
            out.push(words[next]);
            pos = next;
        }
        let last = *words.last().unwrap();
        if *out.last().unwrap() != last {
            if out.len() >= 2 && x_of(last) - x_of(out[out.len() - 1]) < self.profile.min_saccade_px {
                let n = out.len();
                if x_of(last) - x_of(out[n - 2]) >= self.profile.min_saccade_px {
                    out[n - 1] = last;
                }
            } else if x_of(last) - x_of(*out.last().unwrap()) >= self.profile.min_saccade_px {
                out.push(last);
            }
        }
        out
    }
}

/// Generates a reading session over `layout`.
pub fn simulate(layout: &PageLayout, profile: &ReaderProfile) -> SimulatedSession {
    let mut g = Generator { layout, profile, rng: ChaCha8Rng::seed_from_u64(profile.seed) };
    let mut truth = GroundTruth { line_count: layout.lines.len(), ..GroundTruth::default() };

    // 1. fixation script
    let mut plan: Vec<Planned> = Vec::new();
    let mut sweep_before: Vec<bool> = Vec::new();
    let n_lines = layout.lines.len();
    let line_plans: Vec<Vec<usize>> = (0..n_lines).map(|l| g.plan_line_words(l)).collect();
    for line in 0..n_lines {
        let words = &line_plans[line];
        if line > 0 {
            let from = line - 1;
            let eligible_dev = words.len() >= 4 && line + 1 < n_lines;
            if eligible_dev && g.rng.random_bool(profile.deviation_prob.clamp(0.0, 1.0)) {
                let max_m = profile.max_deviation_lines.max(1).min(n_lines - 1 - line);
                let m = g.rng.random_range(1..=max_m);
                let wrong = line + m;
                let wrong_word = line_plans[wrong].first().copied();
                if let Some(wi) = wrong_word {
                    let idx = plan.len();
                    truth.sweeps.push(TruthSweep {
                        from_line: from,
                        target_line: line,
                        landed_line: wrong,
                        fixation: idx,
                    });
                    truth.deviations.push(TruthDeviation { wrong_line: wrong, target_line: line, fixation: idx });
                    truth.jumps.push(TruthJump { from_line: wrong, line_id: line, fixation: idx + 3 });
                    let d = g.ordinary_duration();
                    plan.push(Planned { word: layout.words[wi].word_id, line: wrong, at: 0.4, duration_ms: d });
                    sweep_before.push(true);
                    let mut first = true;
                    for &wi in words {
                        push_word(&mut g, &mut plan, &mut sweep_before, &mut truth, wi, line, false, !first);
                        first = false;
                    }
                    continue;
                }
            }
            truth.sweeps.push(TruthSweep {
                from_line: from,
                target_line: line,
                landed_line: line,
                fixation: plan.len(),
            });
        }
        let mut first = true;
        for &wi in words {
            push_word(&mut g, &mut plan, &mut sweep_before, &mut truth, wi, line, line > 0 && first, !first);
            first = false;
        }
    }

    // 2. samples
    let landing = Normal::new(0.0, profile.landing_sd_px.max(0.0)).unwrap();
    let jitter = Normal::new(0.0, profile.noise_sd_px.max(0.0)).unwrap();
    let mut samples = Vec::new();
    let mut current = layout.clone();
    let mut layouts = Vec::new();
    let mut tick: u64 = 0;
    for (i, p) in plan.iter().enumerate() {
        if i > 0 {
            tick += if sweep_before[i] { profile.sweep_gap_samples } else { profile.saccade_gap_samples };
        }
        let word = current.word(p.word).expect("planned word exists");
        let base_x = word.left + p.at * word.width();
        let (nx, ny) = if profile.landing_sd_px > 0.0 {
            (landing.sample(&mut g.rng), landing.sample(&mut g.rng))
        } else {
            (0.0, 0.0)
        };
        let n = sample_count(p.duration_ms);
        let scroll_at = profile.scrolls.iter().find(|s| s.during_fixation == i).map(|s| (n / 2, s.dy));
        let onset = tick * SAMPLE_PERIOD_120HZ;
        for k in 0..n {
            if let Some((at, dy)) = scroll_at {
                if k == at {
                    current = current.scrolled(-dy);
                    layouts.push(current.clone());
                    truth.scrolls.push(ScrollDelta { t: tick * SAMPLE_PERIOD_120HZ, dy });
                }
            }
            let true_x = base_x + nx;
            let true_y = current.line(p.line).expect("planned line exists").mid() + ny;
            let obs_y = true_y + profile.drift.offset(true_y);
            let (jx, jy) = if profile.noise_sd_px > 0.0 {
                (jitter.sample(&mut g.rng), jitter.sample(&mut g.rng))
            } else {
                (0.0, 0.0)
            };
            let lost = profile.data_loss_rate > 0.0 && g.rng.random_bool(profile.data_loss_rate.clamp(0.0, 1.0));
            let t = tick * SAMPLE_PERIOD_120HZ;
            samples.push(if lost {
                GazeSample { t, x: 0.0, y: 0.0, valid: false, eye: Eye::Average }
            } else {
                GazeSample { t, x: true_x + jx, y: obs_y + jy, valid: true, eye: Eye::Average }
            });
            truth.sample_fixation.push(Some(i));
            tick += 1;
        }
        let final_line = current.line(p.line).unwrap();
        truth.fixations.push(TruthFixation {
            cx: base_x + nx,
            cy: final_line.mid() + ny,
            onset,
            duration: (n - 1) * SAMPLE_PERIOD_120HZ,
            line_id: p.line,
            word_id: p.word,
            layout_version: current.layout_version,
        });
    }
    SimulatedSession { samples, truth, layouts }
}

#[allow(clippy::too_many_arguments)]
fn push_word(
    g: &mut Generator<'_>,
    plan: &mut Vec<Planned>,
    sweep_before: &mut Vec<bool>,
    truth: &mut GroundTruth,
    word_index: usize,
    line: LineId,
    after_sweep: bool,
    allow_hesitation: bool,
) {
    let word = &g.layout.words[word_index];
    let hesitate = allow_hesitation
        && !word.function_word
        && word.width() >= g.profile.hard_word_min_px
        && g.profile.hesitation_prob > 0.0
        && g.rng.random_bool(g.profile.hesitation_prob.clamp(0.0, 1.0));
    if !hesitate {
        let d = g.ordinary_duration();
        plan.push(Planned { word: word.word_id, line, at: 0.4, duration_ms: d });
        sweep_before.push(after_sweep);
        return;
    }
    let kind = match g.rng.random_range(0..3) {
        0 => DwTrigger::FirstFixation,
        1 => DwTrigger::Refixations,
        _ => DwTrigger::TotalDuration,
    };
    let durations: Vec<f64> = match kind {
        DwTrigger::FirstFixation => vec![g.rng.random_range(550.0..900.0)],
        DwTrigger::Refixations => (0..6).map(|_| g.rng.random_range(150.0..230.0)).collect(),
        DwTrigger::TotalDuration => (0..4).map(|_| g.rng.random_range(400.0..480.0)).collect(),
    };
    let trigger_at = match kind {
        DwTrigger::FirstFixation => 0,
        DwTrigger::Refixations => 5,
        DwTrigger::TotalDuration => 3,
    };
    truth.difficult_words.push(TruthDifficultWord {
        word_id: word.word_id,
        line_id: line,
        trigger: kind,
        fixation: plan.len() + trigger_at,
    });
    // Even-length runs go right edge first and finish on the left edge, so both
    // neighbouring landings stay at least a minimum saccade away.
    for (k, d) in durations.into_iter().enumerate() {
        let at = match (kind, k % 2) {
            (DwTrigger::FirstFixation, _) => 0.4,
            (_, 0) => 0.85,
            _ => 0.15,
        };
        plan.push(Planned { word: word.word_id, line, at, duration_ms: d });
        sweep_before.push(after_sweep && k == 0);
    }
}

/// Pursuit samples for a line calibration (`lines5`) or validation (`lines4`) screen.
pub fn simulate_sweep_session(kind: TargetKind, profile: &ReaderProfile, geom: &ScreenGeometry) -> Vec<SweepRecording> {
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    let jitter = Normal::new(0.0, profile.noise_sd_px.max(0.0)).unwrap();
    let layout = TargetLayout::new(kind, 20.0);
    let mut start = 0;
    let mut out = Vec::with_capacity(layout.targets.len());
    for i in 0..layout.targets.len() {
        let traj = layout.sweep(i, geom, start);
        let mut samples = Vec::new();
        let mut t = traj.start_t;
        while t <= traj.end_t() {
            let (x, y) = traj.position(t);
            let obs_y = y + profile.drift.offset(y);
            let (jx, jy) =
                if profile.noise_sd_px > 0.0 { (jitter.sample(&mut rng), jitter.sample(&mut rng)) } else { (0.0, 0.0) };
            let lost = profile.data_loss_rate > 0.0 && rng.random_bool(profile.data_loss_rate.clamp(0.0, 1.0));
            samples.push(if lost {
                GazeSample { t, x: 0.0, y: 0.0, valid: false, eye: Eye::Average }
            } else {
                GazeSample { t, x: x + jx, y: obs_y + jy, valid: true, eye: Eye::Average }
            });
            t += SAMPLE_PERIOD_120HZ;
        }
        out.push(SweepRecording { y_px: traj.y_px, start_t: traj.start_t, end_t: traj.end_t(), samples });
        start = traj.end_t() + 1_000_000;
    }
    out
}
