//! The per-sample processing chain of one session.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augmentation::{AugmentationConfig, AugmentationController, AugmentationEvent, Viewport};
use crate::behavior::{BehaviorEngine, BehaviorError, BehaviorEvent};
use crate::calibration::{correct_drift, DriftProfile};
use crate::config::{ConfigError, EngineConfig};
use crate::geometry::ScreenGeometry;
use crate::layout::{IdMap, PageLayout};
use crate::metrics::FixationRecord;
use crate::signal::{FixationStream, SignalCounters, SignalError};
use crate::types::{Fixation, GazeSample, Micros};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Behavior(#[from] BehaviorError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PipelineEvent {
    Fixation(FixationRecord),
    Behavior { event: BehaviorEvent, layout_version: u64 },
    Augment { event: AugmentationEvent, layout_version: u64 },
}

/// Wall-clock processing time per pushed sample.
#[derive(Debug, Clone, Default)]
pub struct LatencyStats {
    nanos: Vec<u64>,
}

impl LatencyStats {
    pub fn record(&mut self, d: Duration) {
        self.nanos.push(d.as_nanos().min(u64::MAX as u128) as u64);
    }

    pub fn count(&self) -> usize {
        self.nanos.len()
    }

    /// Nearest-rank percentile, `p` in `[0, 100]`.
    pub fn percentile(&self, p: f64) -> Duration {
        if self.nanos.is_empty() {
            return Duration::ZERO;
        }
        let mut v = self.nanos.clone();
        v.sort_unstable();
        let rank = ((p / 100.0) * v.len() as f64).ceil().max(1.0) as usize;
        Duration::from_nanos(v[rank.min(v.len()) - 1])
    }

    pub fn max(&self) -> Duration {
        Duration::from_nanos(self.nanos.iter().copied().max().unwrap_or(0))
    }
}

/// Wall-clock timer; wasm32 without a host clock records nothing.
struct Clock(#[cfg(not(target_arch = "wasm32"))] std::time::Instant);

impl Clock {
    fn start() -> Self {
        Clock(
            #[cfg(not(target_arch = "wasm32"))]
            std::time::Instant::now(),
        )
    }

    fn elapsed(&self) -> Option<Duration> {
        #[cfg(not(target_arch = "wasm32"))]
        return Some(self.0.elapsed());
        #[cfg(target_arch = "wasm32")]
        None
    }
}

/// filter → drift correction → fixation detection → behaviour → augmentation.
#[derive(Debug, Clone)]
pub struct Pipeline {
    cfg: EngineConfig,
    aug_cfg: AugmentationConfig,
    geometry: ScreenGeometry,
    viewport: Viewport,
    stream: FixationStream,
    drift: Option<DriftProfile>,
    behavior: Option<BehaviorEngine>,
    augment: AugmentationController,
    scratch: Vec<Fixation>,
    pub latency: LatencyStats,
}

impl Pipeline {
    pub fn new(
        cfg: EngineConfig,
        aug_cfg: AugmentationConfig,
        geometry: ScreenGeometry,
    ) -> Result<Self, PipelineError> {
        cfg.validate()?;
        let viewport = Viewport { top: 0.0, width: geometry.width_px as f64, height: geometry.height_px as f64 };
        Ok(Self {
            stream: FixationStream::new(&cfg, geometry),
            cfg,
            aug_cfg,
            geometry,
            viewport,
            drift: None,
            behavior: None,
            augment: AugmentationController::new(),
            scratch: Vec::new(),
            latency: LatencyStats::default(),
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn augmentation_config(&self) -> &AugmentationConfig {
        &self.aug_cfg
    }

    pub fn layout(&self) -> Option<&PageLayout> {
        self.behavior.as_ref().map(|b| b.layout())
    }

    pub fn counters(&self) -> SignalCounters {
        self.stream.counters()
    }

    pub fn drift(&self) -> Option<&DriftProfile> {
        self.drift.as_ref()
    }

    pub fn set_drift(&mut self, drift: Option<DriftProfile>) {
        self.drift = drift;
    }

    pub fn set_viewport(&mut self, viewport: Viewport) {
        self.viewport = viewport;
    }

    pub fn set_augmentation(&mut self, aug_cfg: AugmentationConfig) {
        self.aug_cfg = aug_cfg;
    }

    /// Applies new thresholds. Signal-stage changes restart the filter after flushing it.
    pub fn set_config(&mut self, cfg: EngineConfig, out: &mut Vec<PipelineEvent>) -> Result<(), PipelineError> {
        cfg.validate()?;
        let signal_changed = cfg.fixation_dispersion_px != self.cfg.fixation_dispersion_px
            || cfg.min_fixation_duration_us != self.cfg.min_fixation_duration_us
            || cfg.blink_merge_us != self.cfg.blink_merge_us
            || cfg.median_window != self.cfg.median_window
            || cfg.max_angular_velocity_deg_s != self.cfg.max_angular_velocity_deg_s;
        if signal_changed {
            self.finish(out)?;
            self.stream = FixationStream::new(&cfg, self.geometry);
        }
        if let Some(b) = &mut self.behavior {
            b.set_config(cfg.clone());
        }
        self.cfg = cfg;
        Ok(())
    }

    /// Installs a new layout. `scroll_dy` is the scroll distance since the previous layout.
    pub fn set_layout(
        &mut self,
        layout: PageLayout,
        scroll_dy: f64,
        map: Option<&IdMap>,
        at: Micros,
        out: &mut Vec<PipelineEvent>,
    ) -> Result<(), PipelineError> {
        match &mut self.behavior {
            None => self.behavior = Some(BehaviorEngine::new(self.cfg.clone(), layout)),
            Some(b) => {
                b.on_layout_change(layout, scroll_dy, map)?;
                self.stream.translate(0.0, -scroll_dy);
                let version = b.layout().layout_version;
                for event in self.augment.on_layout_change(-scroll_dy, map, at) {
                    out.push(PipelineEvent::Augment { event, layout_version: version });
                }
            }
        }
        Ok(())
    }

    pub fn push_sample(&mut self, s: GazeSample, out: &mut Vec<PipelineEvent>) -> Result<(), PipelineError> {
        let clock = Clock::start();
        let mut closed = std::mem::take(&mut self.scratch);
        let drift = self.drift.as_ref();
        let pushed = self.stream.push(s, |s| drift.map_or(s, |p| correct_drift(&s, p)), &mut |f| closed.push(f));
        let res = pushed
            .map_err(PipelineError::from)
            .and_then(|_| closed.drain(..).try_for_each(|f| self.on_fixation(f, out)));
        closed.clear();
        self.scratch = closed;
        if let Some(d) = clock.elapsed() {
            self.latency.record(d);
        }
        res
    }

    /// Flushes the filter and closes any open fixation.
    pub fn finish(&mut self, out: &mut Vec<PipelineEvent>) -> Result<(), PipelineError> {
        let mut fixations = Vec::new();
        let drift = self.drift.as_ref();
        self.stream.finish(|s| drift.map_or(s, |p| correct_drift(&s, p)), &mut |f| fixations.push(f));
        fixations.into_iter().try_for_each(|f| self.on_fixation(f, out))
    }

    fn on_fixation(&mut self, fixation: Fixation, out: &mut Vec<PipelineEvent>) -> Result<(), PipelineError> {
        let Some(b) = &mut self.behavior else {
            out.push(PipelineEvent::Fixation(FixationRecord {
                fixation,
                line_id: None,
                word_id: None,
                layout_version: 0,
            }));
            return Ok(());
        };
        let version = b.layout().layout_version;
        let outcome = b.assess(&fixation, version)?;
        out.push(PipelineEvent::Fixation(FixationRecord {
            fixation,
            line_id: Some(outcome.line_id),
            word_id: outcome.word_id,
            layout_version: version,
        }));
        if let Some(event) = self.augment.on_fixation_for_magnifier(&fixation) {
            out.push(PipelineEvent::Augment { event, layout_version: version });
        }
        for event in outcome.events {
            let augments = self.augment.on_behavior(&event, version, b.layout(), &self.aug_cfg, &self.viewport);
            out.push(PipelineEvent::Behavior { event, layout_version: version });
            out.extend(augments.into_iter().map(|event| PipelineEvent::Augment { event, layout_version: version }));
        }
        Ok(())
    }
}
