//! Online noise filtering and dispersion-threshold fixation detection.
//!
//! Raw samples pass through [`GazeFilter`] (screen clamping, a centred
//! per-axis median, a physiological velocity cap and validity-gap tracking)
//! and then [`FixationDetector`], an incremental I-DT segmenter. Both stages
//! are push-based and allocation free per sample.

use std::collections::VecDeque;

use thiserror::Error;

use crate::config::EngineConfig;
use crate::geometry::ScreenGeometry;
use crate::types::{Fixation, GazeSample, Micros};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SignalError {
    #[error("sample at t={got} does not follow t={last}")]
    StreamOrder { last: Micros, got: Micros },
}

/// Output of the filter stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterOutput {
    Sample(GazeSample),
    /// Tracking was lost for longer than the blink-merge gap.
    Break,
}

/// Per-stream accounting. `total == invalid + outliers + in_fixations + discarded`
/// once the stream has been finished.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SignalCounters {
    pub total: u64,
    pub invalid: u64,
    pub outliers: u64,
    pub in_fixations: u64,
    pub discarded: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    pub median_window: usize,
    pub blink_merge_us: Micros,
    pub max_angular_velocity_deg_s: f64,
    pub geometry: ScreenGeometry,
}

impl FilterConfig {
    pub fn new(cfg: &EngineConfig, geometry: ScreenGeometry) -> Self {
        Self {
            median_window: cfg.median_window.max(1) | 1,
            blink_merge_us: cfg.blink_merge_us,
            max_angular_velocity_deg_s: cfg.max_angular_velocity_deg_s,
            geometry,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GazeFilter {
    cfg: FilterConfig,
    half: usize,
    /// Raw valid samples of the current segment, starting at segment index `buf_start`.
    buf: VecDeque<GazeSample>,
    buf_start: usize,
    seg_len: usize,
    next_emit: usize,
    last_t: Option<Micros>,
    last_valid_t: Option<Micros>,
    last_emitted: Option<GazeSample>,
    gap_us: Micros,
    broken: bool,
    scratch: Vec<f64>,
    pub counters: SignalCounters,
}

impl GazeFilter {
    pub fn new(cfg: FilterConfig) -> Self {
        let half = cfg.median_window / 2;
        Self {
            cfg,
            half,
            buf: VecDeque::with_capacity(2 * half + 2),
            buf_start: 0,
            seg_len: 0,
            next_emit: 0,
            last_t: None,
            last_valid_t: None,
            last_emitted: None,
            gap_us: 0,
            broken: true,
            scratch: Vec::with_capacity(cfg.median_window),
            counters: SignalCounters::default(),
        }
    }

    /// Time since the last valid sample while tracking is lost.
    pub fn gap_us(&self) -> Micros {
        self.gap_us
    }

    pub fn push(&mut self, s: GazeSample, out: &mut impl FnMut(FilterOutput)) -> Result<(), SignalError> {
        if let Some(last) = self.last_t {
            if s.t <= last {
                return Err(SignalError::StreamOrder { last, got: s.t });
            }
        }
        self.last_t = Some(s.t);
        self.counters.total += 1;

        let valid = s.valid && s.x.is_finite() && s.y.is_finite();
        if let Some(lv) = self.last_valid_t {
            self.gap_us = s.t - lv;
            if self.gap_us > self.cfg.blink_merge_us && !self.broken {
                self.flush(out);
                out(FilterOutput::Break);
                self.broken = true;
            }
        }
        if !valid {
            self.counters.invalid += 1;
            return Ok(());
        }

        self.gap_us = 0;
        self.last_valid_t = Some(s.t);
        self.broken = false;
        let g = &self.cfg.geometry;
        let clamped = GazeSample {
            x: s.x.clamp(0.0, f64::from(g.width_px)),
            y: s.y.clamp(0.0, f64::from(g.height_px)),
            valid: true,
            ..s
        };
        self.buf.push_back(clamped);
        self.seg_len += 1;
        while self.next_emit + self.half < self.seg_len {
            self.emit_next(out);
        }
        Ok(())
    }

    /// Emits everything still held back by the median delay.
    pub fn finish(&mut self, out: &mut impl FnMut(FilterOutput)) {
        self.flush(out);
    }

    /// Shifts held-back samples, e.g. after the page scrolled under the reader.
    pub fn translate(&mut self, dx: f64, dy: f64) {
        for s in &mut self.buf {
            s.x += dx;
            s.y += dy;
        }
        if let Some(e) = &mut self.last_emitted {
            e.x += dx;
            e.y += dy;
        }
    }

    fn flush(&mut self, out: &mut impl FnMut(FilterOutput)) {
        while self.next_emit < self.seg_len {
            self.emit_next(out);
        }
        self.buf.clear();
        self.buf_start = 0;
        self.seg_len = 0;
        self.next_emit = 0;
    }

    fn window_value(&mut self, idx: usize, axis: impl Fn(&GazeSample) -> f64) -> f64 {
        self.scratch.clear();
        let lo = idx as isize - self.half as isize;
        for k in 0..self.cfg.median_window {
            let j = (lo + k as isize).clamp(0, self.seg_len as isize - 1) as usize;
            self.scratch.push(axis(&self.buf[j - self.buf_start]));
        }
        self.scratch.sort_by(f64::total_cmp);
        self.scratch[self.half]
    }

    fn emit_next(&mut self, out: &mut impl FnMut(FilterOutput)) {
        let idx = self.next_emit;
        let x = self.window_value(idx, |s| s.x);
        let y = self.window_value(idx, |s| s.y);
        let centre = self.buf[idx - self.buf_start];
        let emitted = GazeSample { x, y, ..centre };
        self.next_emit += 1;
        while self.buf_start + self.half < self.next_emit && !self.buf.is_empty() {
            self.buf.pop_front();
            self.buf_start += 1;
        }

        if let Some(prev) = self.last_emitted {
            let dt = (emitted.t - prev.t) as f64 / 1e6;
            let deg = self.cfg.geometry.offset_to_degrees(emitted.x - prev.x, emitted.y - prev.y);
            if deg / dt > self.cfg.max_angular_velocity_deg_s {
                self.counters.outliers += 1;
                return;
            }
        }
        self.last_emitted = Some(emitted);
        out(FilterOutput::Sample(emitted));
    }
}

#[derive(Debug, Clone, Copy)]
struct Accumulator {
    onset: Micros,
    last_t: Micros,
    n: u32,
    sum_x: f64,
    sum_y: f64,
    min_x: f64,
    max_x: f64,
    min_y: f64,
    max_y: f64,
}

impl Accumulator {
    fn open(s: &GazeSample) -> Self {
        Self { onset: s.t, last_t: s.t, n: 1, sum_x: s.x, sum_y: s.y, min_x: s.x, max_x: s.x, min_y: s.y, max_y: s.y }
    }

    fn dispersion_with(&self, s: &GazeSample) -> f64 {
        (self.max_x.max(s.x) - self.min_x.min(s.x)) + (self.max_y.max(s.y) - self.min_y.min(s.y))
    }

    fn add(&mut self, s: &GazeSample) {
        self.last_t = s.t;
        self.n += 1;
        self.sum_x += s.x;
        self.sum_y += s.y;
        self.min_x = self.min_x.min(s.x);
        self.max_x = self.max_x.max(s.x);
        self.min_y = self.min_y.min(s.y);
        self.max_y = self.max_y.max(s.y);
    }
}

/// Incremental dispersion-threshold (I-DT) fixation detector.
#[derive(Debug, Clone)]
pub struct FixationDetector {
    dispersion_px: f64,
    min_duration_us: Micros,
    acc: Option<Accumulator>,
    pub in_fixations: u64,
    pub discarded: u64,
}

impl FixationDetector {
    pub fn new(cfg: &EngineConfig) -> Self {
        Self {
            dispersion_px: cfg.fixation_dispersion_px,
            min_duration_us: cfg.min_fixation_duration_us,
            acc: None,
            in_fixations: 0,
            discarded: 0,
        }
    }

    /// Number of samples in the open window.
    pub fn open_len(&self) -> u32 {
        self.acc.map_or(0, |a| a.n)
    }

    pub fn push(&mut self, s: &GazeSample) -> Option<Fixation> {
        match &mut self.acc {
            Some(acc) if acc.dispersion_with(s) <= self.dispersion_px => {
                acc.add(s);
                None
            }
            Some(_) => {
                let closed = self.close();
                self.acc = Some(Accumulator::open(s));
                closed
            }
            None => {
                self.acc = Some(Accumulator::open(s));
                None
            }
        }
    }

    /// Force-closes the open window (tracking loss or end of stream).
    pub fn close(&mut self) -> Option<Fixation> {
        let acc = self.acc.take()?;
        let duration = acc.last_t - acc.onset;
        if duration >= self.min_duration_us && acc.n >= 2 {
            self.in_fixations += u64::from(acc.n);
            Some(Fixation {
                cx: acc.sum_x / f64::from(acc.n),
                cy: acc.sum_y / f64::from(acc.n),
                onset: acc.onset,
                duration,
                sample_count: acc.n,
            })
        } else {
            self.discarded += u64::from(acc.n);
            None
        }
    }

    /// Shifts the open window so it stays attached to scrolled content.
    pub fn translate(&mut self, dx: f64, dy: f64) {
        if let Some(a) = &mut self.acc {
            let n = f64::from(a.n);
            a.sum_x += dx * n;
            a.sum_y += dy * n;
            a.min_x += dx;
            a.max_x += dx;
            a.min_y += dy;
            a.max_y += dy;
        }
    }
}

/// Filter plus detector for one session stream.
#[derive(Debug, Clone)]
pub struct FixationStream {
    pub filter: GazeFilter,
    pub detector: FixationDetector,
}

impl FixationStream {
    pub fn new(cfg: &EngineConfig, geometry: ScreenGeometry) -> Self {
        Self { filter: GazeFilter::new(FilterConfig::new(cfg, geometry)), detector: FixationDetector::new(cfg) }
    }

    /// Pushes one raw sample; `map` may adjust filtered samples (drift correction) before detection.
    pub fn push(
        &mut self,
        s: GazeSample,
        mut map: impl FnMut(GazeSample) -> GazeSample,
        out: &mut impl FnMut(Fixation),
    ) -> Result<(), SignalError> {
        let detector = &mut self.detector;
        self.filter.push(s, &mut |o| match o {
            FilterOutput::Sample(f) => {
                if let Some(fix) = detector.push(&map(f)) {
                    out(fix);
                }
            }
            FilterOutput::Break => {
                if let Some(fix) = detector.close() {
                    out(fix);
                }
            }
        })
    }

    pub fn finish(&mut self, mut map: impl FnMut(GazeSample) -> GazeSample, out: &mut impl FnMut(Fixation)) {
        let detector = &mut self.detector;
        self.filter.finish(&mut |o| {
            if let FilterOutput::Sample(f) = o {
                if let Some(fix) = detector.push(&map(f)) {
                    out(fix);
                }
            }
        });
        if let Some(fix) = detector.close() {
            out(fix);
        }
    }

    pub fn translate(&mut self, dx: f64, dy: f64) {
        self.filter.translate(dx, dy);
        self.detector.translate(dx, dy);
    }

    pub fn counters(&self) -> SignalCounters {
        SignalCounters {
            in_fixations: self.detector.in_fixations,
            discarded: self.detector.discarded,
            ..self.filter.counters
        }
    }
}

/// Runs both stages over a whole buffered stream.
pub fn detect_fixations(
    samples: &[GazeSample],
    cfg: &EngineConfig,
    geometry: ScreenGeometry,
) -> Result<(Vec<Fixation>, SignalCounters), SignalError> {
    let mut stream = FixationStream::new(cfg, geometry);
    let mut out = Vec::new();
    for s in samples {
        stream.push(*s, |s| s, &mut |f| out.push(f))?;
    }
    stream.finish(|s| s, &mut |f| out.push(f));
    Ok((out, stream.counters()))
}
