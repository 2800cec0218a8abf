//! Gaze samples and fixations.

use serde::{Deserialize, Serialize};

/// Microsecond timestamps and durations.
pub type Micros = u64;

/// Nominal inter-sample gap of a 120 Hz tracker.
pub const SAMPLE_PERIOD_120HZ: Micros = 8_333;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Eye {
    Left,
    Right,
    Average,
}

impl Eye {
    pub fn code(self) -> char {
        match self {
            Eye::Left => 'L',
            Eye::Right => 'R',
            Eye::Average => 'A',
        }
    }

    pub fn from_code(c: &str) -> Option<Self> {
        match c {
            "L" => Some(Eye::Left),
            "R" => Some(Eye::Right),
            "A" => Some(Eye::Average),
            _ => None,
        }
    }
}

/// One raw tracker sample in screen pixels (origin top-left, y down).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeSample {
    pub t: Micros,
    pub x: f64,
    pub y: f64,
    #[serde(default = "default_valid")]
    pub valid: bool,
    #[serde(default = "default_eye")]
    pub eye: Eye,
}

fn default_valid() -> bool {
    true
}

fn default_eye() -> Eye {
    Eye::Average
}

impl GazeSample {
    pub fn new(t: Micros, x: f64, y: f64) -> Self {
        Self { t, x, y, valid: true, eye: Eye::Average }
    }

    pub fn invalid(t: Micros) -> Self {
        Self { t, x: 0.0, y: 0.0, valid: false, eye: Eye::Average }
    }
}

/// Page scroll reported by the reading surface; positive `dy` moves content up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScrollDelta {
    pub t: Micros,
    pub dy: f64,
}

/// A dispersion-stable gaze cluster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fixation {
    pub cx: f64,
    pub cy: f64,
    pub onset: Micros,
    pub duration: Micros,
    pub sample_count: u32,
}

impl Fixation {
    pub fn end(&self) -> Micros {
        self.onset + self.duration
    }

    pub fn translated(mut self, dx: f64, dy: f64) -> Self {
        self.cx += dx;
        self.cy += dy;
        self
    }
}
