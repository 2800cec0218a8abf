//! Calibration and validation targets, validation scoring, eye selection and
//! line-based vertical drift correction.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::ScreenGeometry;
use crate::types::{Eye, GazeSample, Micros};

pub const MIN_DOT_SAMPLES: usize = 30;
pub const MIN_SWEEP_SAMPLES: usize = 50;
/// Fraction of each sweep discarded at either end (pursuit onset/offset).
pub const SWEEP_TRIM_FRACTION: f64 = 0.1;
pub const SWEEP_DURATION_US: Micros = 4_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("target {target} has {got} usable samples, need {need}")]
    UnderSampled { target: usize, got: usize, need: usize },
    #[error("expected {expected} sample lists, got {got}")]
    TargetCountMismatch { expected: usize, got: usize },
    #[error("need at least 2 calibrated lines, got {0}")]
    TooFewLines(usize),
    #[error("calibrated line positions must be strictly increasing")]
    UnorderedLines,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Dots14,
    Dots5,
    Lines5,
    Lines4,
}

impl TargetKind {
    pub fn is_sweep(self) -> bool {
        matches!(self, TargetKind::Lines5 | TargetKind::Lines4)
    }
}

/// Target positions as screen fractions. For sweep layouts each target is the sweep's start point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetLayout {
    pub kind: TargetKind,
    pub targets: Vec<(f64, f64)>,
    pub target_radius_px: f64,
}

const EDGE: f64 = 0.1;
const SWEEP_START_X: f64 = 0.05;
const SWEEP_END_X: f64 = 0.95;

impl TargetLayout {
    pub fn new(kind: TargetKind, target_radius_px: f64) -> Self {
        let targets = match kind {
            TargetKind::Dots14 => {
                let ys = spread(4);
                let mut t = Vec::with_capacity(14);
                for (row, &y) in ys.iter().enumerate() {
                    let n = if row == 0 || row == 3 { 3 } else { 4 };
                    t.extend(spread(n).into_iter().map(|x| (x, y)));
                }
                t
            }
            TargetKind::Dots5 => {
                vec![(EDGE, EDGE), (1.0 - EDGE, EDGE), (0.5, 0.5), (EDGE, 1.0 - EDGE), (1.0 - EDGE, 1.0 - EDGE)]
            }
            TargetKind::Lines5 => [0.1, 0.3, 0.5, 0.7, 0.9].into_iter().map(|y| (SWEEP_START_X, y)).collect(),
            TargetKind::Lines4 => [0.2, 0.4, 0.6, 0.8].into_iter().map(|y| (SWEEP_START_X, y)).collect(),
        };
        Self { kind, targets, target_radius_px }
    }

    pub fn target_px(&self, i: usize, geom: &ScreenGeometry) -> (f64, f64) {
        let (fx, fy) = self.targets[i];
        (fx * f64::from(geom.width_px), fy * f64::from(geom.height_px))
    }

    /// Sweep for target `i` of a line layout, starting at `start_t`.
    pub fn sweep(&self, i: usize, geom: &ScreenGeometry, start_t: Micros) -> SweepTrajectory {
        let w = f64::from(geom.width_px);
        SweepTrajectory {
            y_px: self.targets[i].1 * f64::from(geom.height_px),
            start_x: SWEEP_START_X * w,
            end_x: SWEEP_END_X * w,
            start_t,
            duration: SWEEP_DURATION_US,
        }
    }
}

/// `n` evenly spaced fractions from 0.1 to 0.9.
fn spread(n: usize) -> Vec<f64> {
    (0..n).map(|i| EDGE + (1.0 - 2.0 * EDGE) * i as f64 / (n - 1) as f64).collect()
}

/// Horizontal smoothstep sweep along one line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepTrajectory {
    pub y_px: f64,
    pub start_x: f64,
    pub end_x: f64,
    pub start_t: Micros,
    pub duration: Micros,
}

impl SweepTrajectory {
    pub fn end_t(&self) -> Micros {
        self.start_t + self.duration
    }

    pub fn position(&self, t: Micros) -> (f64, f64) {
        let u = (t.saturating_sub(self.start_t) as f64 / self.duration as f64).clamp(0.0, 1.0);
        let s = u * u * (3.0 - 2.0 * u);
        (self.start_x + (self.end_x - self.start_x) * s, self.y_px)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DotValidation {
    pub mean_error_deg: f64,
    pub per_target_deg: Vec<f64>,
    pub data_loss: f64,
}

/// Angular error between each target and the centroid of its valid samples.
pub fn score_dot_validation(
    samples_per_target: &[Vec<GazeSample>],
    layout: &TargetLayout,
    geom: &ScreenGeometry,
) -> Result<DotValidation, CalibrationError> {
    if samples_per_target.len() != layout.targets.len() {
        return Err(CalibrationError::TargetCountMismatch {
            expected: layout.targets.len(),
            got: samples_per_target.len(),
        });
    }
    let mut per_target = Vec::with_capacity(layout.targets.len());
    let (mut total, mut invalid) = (0usize, 0usize);
    for (i, samples) in samples_per_target.iter().enumerate() {
        total += samples.len();
        let valid: Vec<&GazeSample> = samples.iter().filter(|s| s.valid).collect();
        invalid += samples.len() - valid.len();
        if valid.len() < MIN_DOT_SAMPLES {
            return Err(CalibrationError::UnderSampled { target: i, got: valid.len(), need: MIN_DOT_SAMPLES });
        }
        let n = valid.len() as f64;
        let cx = valid.iter().map(|s| s.x).sum::<f64>() / n;
        let cy = valid.iter().map(|s| s.y).sum::<f64>() / n;
        let (tx, ty) = layout.target_px(i, geom);
        per_target.push(geom.offset_to_degrees(cx - tx, cy - ty));
    }
    let mean = per_target.iter().sum::<f64>() / per_target.len().max(1) as f64;
    Ok(DotValidation {
        mean_error_deg: mean,
        per_target_deg: per_target,
        data_loss: if total == 0 { 0.0 } else { invalid as f64 / total as f64 },
    })
}

/// Stream with the lowest mean error; ties prefer average, then right.
pub fn select_eye(results: &[(Eye, f64)]) -> Option<Eye> {
    let rank = |e: Eye| match e {
        Eye::Average => 0,
        Eye::Right => 1,
        Eye::Left => 2,
    };
    results
        .iter()
        .filter(|(_, err)| err.is_finite())
        .min_by(|a, b| a.1.total_cmp(&b.1).then(rank(a.0).cmp(&rank(b.0))))
        .map(|(e, _)| *e)
}

/// Samples recorded while the reader followed one sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecording {
    pub y_px: f64,
    pub start_t: Micros,
    pub end_t: Micros,
    pub samples: Vec<GazeSample>,
}

impl SweepRecording {
    /// Valid samples outside the trimmed onset/offset transients.
    pub fn retained(&self) -> impl Iterator<Item = &GazeSample> {
        let span = self.end_t.saturating_sub(self.start_t) as f64;
        let lo = self.start_t + (span * SWEEP_TRIM_FRACTION).round() as Micros;
        let hi = self.end_t - (span * SWEEP_TRIM_FRACTION).round() as Micros;
        self.samples.iter().filter(move |s| s.valid && s.t >= lo && s.t <= hi)
    }

    fn mean_offset(&self, index: usize, profile: Option<&DriftProfile>) -> Result<f64, CalibrationError> {
        let mut n = 0usize;
        let mut sum = 0.0;
        for s in self.retained() {
            let y = profile.map_or(s.y, |p| p.correct_y(s.y));
            sum += y - self.y_px;
            n += 1;
        }
        if n < MIN_SWEEP_SAMPLES {
            return Err(CalibrationError::UnderSampled { target: index, got: n, need: MIN_SWEEP_SAMPLES });
        }
        Ok(sum / n as f64)
    }
}

/// Mean vertical gaze error at each calibrated line (+ down).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftProfile {
    pub calibrated_line_ys: Vec<f64>,
    pub per_line_offset: Vec<f64>,
}

impl DriftProfile {
    pub fn new(calibrated_line_ys: Vec<f64>, per_line_offset: Vec<f64>) -> Result<Self, CalibrationError> {
        if calibrated_line_ys.len() < 2 || calibrated_line_ys.len() != per_line_offset.len() {
            return Err(CalibrationError::TooFewLines(calibrated_line_ys.len().min(per_line_offset.len())));
        }
        if calibrated_line_ys.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
            return Err(CalibrationError::UnorderedLines);
        }
        Ok(Self { calibrated_line_ys, per_line_offset })
    }

    pub fn zero(calibrated_line_ys: Vec<f64>) -> Self {
        let n = calibrated_line_ys.len();
        Self { calibrated_line_ys, per_line_offset: vec![0.0; n] }
    }

    /// Drift at screen height `y`: linear between calibrated lines, clamped outside them.
    pub fn offset_at(&self, y: f64) -> f64 {
        let ys = &self.calibrated_line_ys;
        let off = &self.per_line_offset;
        let last = ys.len() - 1;
        if y <= ys[0] {
            return off[0];
        }
        if y >= ys[last] {
            return off[last];
        }
        let i = ys.partition_point(|&k| k <= y) - 1;
        let u = (y - ys[i]) / (ys[i + 1] - ys[i]);
        off[i] + u * (off[i + 1] - off[i])
    }

    /// True height `z` whose drifted observation is `y`, i.e. `z + offset_at(z) = y`.
    pub fn correct_y(&self, y: f64) -> f64 {
        let ys = &self.calibrated_line_ys;
        let off = &self.per_line_offset;
        let observed: Vec<f64> = ys.iter().zip(off).map(|(k, o)| k + o).collect();
        if observed.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
            return y - self.offset_at(y);
        }
        let last = ys.len() - 1;
        if y <= observed[0] {
            return y - off[0];
        }
        if y >= observed[last] {
            return y - off[last];
        }
        let i = observed.partition_point(|&k| k <= y) - 1;
        let u = (y - observed[i]) / (observed[i + 1] - observed[i]);
        ys[i] + u * (ys[i + 1] - ys[i])
    }
}

/// Per-line mean vertical offset over the trimmed portion of each sweep.
pub fn fit_drift_profile(sweeps: &[SweepRecording]) -> Result<DriftProfile, CalibrationError> {
    if sweeps.len() < 2 {
        return Err(CalibrationError::TooFewLines(sweeps.len()));
    }
    let mut ys = Vec::with_capacity(sweeps.len());
    let mut offsets = Vec::with_capacity(sweeps.len());
    for (i, sweep) in sweeps.iter().enumerate() {
        ys.push(sweep.y_px);
        offsets.push(sweep.mean_offset(i, None)?);
    }
    DriftProfile::new(ys, offsets)
}

/// Removes vertical drift from one sample; x is untouched.
pub fn correct_drift(s: &GazeSample, profile: &DriftProfile) -> GazeSample {
    GazeSample { y: profile.correct_y(s.y), ..*s }
}

/// Mean over lines of the absolute mean vertical offset, optionally after correction.
pub fn score_line_validation(
    sweeps: &[SweepRecording],
    profile: Option<&DriftProfile>,
) -> Result<f64, CalibrationError> {
    if sweeps.is_empty() {
        return Err(CalibrationError::TooFewLines(0));
    }
    let mut sum = 0.0;
    for (i, sweep) in sweeps.iter().enumerate() {
        sum += sweep.mean_offset(i, profile)?.abs();
    }
    Ok(sum / sweeps.len() as f64)
}

/// Apply the line-based correction only when it strictly improves validation.
pub fn decide_apply_correction(raw_error: f64, corrected_error: f64) -> bool {
    corrected_error < raw_error
}
