//! Engine thresholds.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::Micros;

/// Step size of the adjustable first-fixation threshold.
pub const DW_FIRST_FIXATION_STEP_US: Micros = 50_000;
/// Step size of the adjustable total-duration threshold.
pub const DW_TOTAL_STEP_US: Micros = 250_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("{name} = {value} is not a multiple of {step}")]
    OffStep { name: &'static str, value: Micros, step: Micros },
    #[error("median_window must be odd, got {0}")]
    EvenMedianWindow(usize),
}

/// How the vertical return-sweep threshold is derived from the layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerticalThresholdMode {
    /// Height of the line's glyph bounding box.
    #[default]
    LineBoxHeight,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    /// Minimum leftward travel of a return sweep, px.
    pub ls_min_leftward_px: f64,
    /// Landing must fall within this fraction of the text width from its left edge.
    pub ls_left_portion_fraction: f64,
    pub ls_vertical_mode: VerticalThresholdMode,
    /// First-fixation duration that flags a difficult word.
    pub dw_first_fixation_us: Micros,
    /// Refixation count that flags a difficult word.
    pub dw_refixations: u32,
    /// One-pass total duration that flags a difficult word.
    pub dw_total_us: Micros,
    /// I-DT dispersion limit, (max x - min x) + (max y - min y).
    pub fixation_dispersion_px: f64,
    pub min_fixation_duration_us: Micros,
    /// Consecutive fixations a new line must win before a jump is reported.
    pub jump_stability_count: u32,
    /// Number of most recent fixations voting on the current line.
    pub vote_window: usize,
    /// Pause separating two scroll events in metrics.
    pub scroll_pause_gap_us: Micros,
    /// Suppress difficult-word events on function words.
    pub stopword_suppression: bool,
    /// Validity gaps up to this long do not break an open fixation.
    pub blink_merge_us: Micros,
    pub median_window: usize,
    /// Emitted samples implying a faster eye rotation are dropped as outliers.
    pub max_angular_velocity_deg_s: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            ls_min_leftward_px: 500.0,
            ls_left_portion_fraction: 1.0 / 3.0,
            ls_vertical_mode: VerticalThresholdMode::LineBoxHeight,
            dw_first_fixation_us: 500_000,
            dw_refixations: 4,
            dw_total_us: 1_500_000,
            fixation_dispersion_px: 60.0,
            min_fixation_duration_us: 100_000,
            jump_stability_count: 3,
            vote_window: 3,
            scroll_pause_gap_us: 100_000,
            stopword_suppression: false,
            blink_merge_us: 75_000,
            median_window: 3,
            max_angular_velocity_deg_s: 1000.0,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("ls_min_leftward_px", self.ls_min_leftward_px),
            ("ls_left_portion_fraction", self.ls_left_portion_fraction),
            ("fixation_dispersion_px", self.fixation_dispersion_px),
            ("max_angular_velocity_deg_s", self.max_angular_velocity_deg_s),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::NonPositive(name));
            }
        }
        let counts = [
            ("dw_first_fixation_us", self.dw_first_fixation_us),
            ("dw_refixations", u64::from(self.dw_refixations)),
            ("dw_total_us", self.dw_total_us),
            ("min_fixation_duration_us", self.min_fixation_duration_us),
            ("jump_stability_count", u64::from(self.jump_stability_count)),
            ("vote_window", self.vote_window as u64),
            ("scroll_pause_gap_us", self.scroll_pause_gap_us),
            ("blink_merge_us", self.blink_merge_us),
            ("median_window", self.median_window as u64),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(ConfigError::NonPositive(name));
            }
        }
        if !self.dw_first_fixation_us.is_multiple_of(DW_FIRST_FIXATION_STEP_US) {
            return Err(ConfigError::OffStep {
                name: "dw_first_fixation_us",
                value: self.dw_first_fixation_us,
                step: DW_FIRST_FIXATION_STEP_US,
            });
        }
        if !self.dw_total_us.is_multiple_of(DW_TOTAL_STEP_US) {
            return Err(ConfigError::OffStep { name: "dw_total_us", value: self.dw_total_us, step: DW_TOTAL_STEP_US });
        }
        if self.median_window.is_multiple_of(2) {
            return Err(ConfigError::EvenMedianWindow(self.median_window));
        }
        Ok(())
    }

    /// Moves the first-fixation threshold by `steps` increments, never below one step.
    pub fn step_dw_first_fixation(&mut self, steps: i64) {
        self.dw_first_fixation_us = stepped(self.dw_first_fixation_us, steps, DW_FIRST_FIXATION_STEP_US);
    }

    pub fn step_dw_total(&mut self, steps: i64) {
        self.dw_total_us = stepped(self.dw_total_us, steps, DW_TOTAL_STEP_US);
    }
}

fn stepped(value: Micros, steps: i64, step: Micros) -> Micros {
    let base = (value / step) as i64;
    (base + steps).max(1) as Micros * step
}
