//! Maps recognised behaviours to render directives for the reading UI.

use serde::{Deserialize, Serialize};
use tracing::warn;

use crate::behavior::{BehaviorEvent, BehaviorKind};
use crate::layout::{Background, IdMap, LineId, PageLayout, WordId};
use crate::types::{Fixation, Micros};

/// Magnifier goes below the word when its line starts in this top fraction of the viewport.
pub const MAGNIFIER_BELOW_FRACTION: f64 = 0.25;
pub const MAGNIFIER_DISMISS_MARGIN_PX: f64 = 20.0;
pub const SPEAK_DEBOUNCE_US: Micros = 2_000_000;
const MAGNIFIER_GAP_PX: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rgb {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl Rgb {
    pub const YELLOW: Rgb = Rgb { r: 255, g: 255, b: 0 };
    pub const BLUE: Rgb = Rgb { r: 0, g: 0, b: 255 };

    pub fn hex(&self) -> String {
        format!("#{:02X}{:02X}{:02X}", self.r, self.g, self.b)
    }
}

/// Hue/lightness colour with saturation pinned at 100%.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hsl {
    /// Degrees, 0-360.
    pub hue: f64,
    /// Percent, 0-100.
    pub lightness: f64,
}

impl Hsl {
    pub const SATURATION: f64 = 100.0;

    pub fn new(hue: f64, lightness: f64) -> Self {
        Self { hue: hue.rem_euclid(360.0), lightness: lightness.clamp(0.0, 100.0) }
    }

    pub fn to_rgb(self) -> Rgb {
        let l = self.lightness / 100.0;
        let s = Self::SATURATION / 100.0;
        let c = (1.0 - (2.0 * l - 1.0).abs()) * s;
        let h = self.hue.rem_euclid(360.0) / 60.0;
        let x = c * (1.0 - (h % 2.0 - 1.0).abs());
        let (r, g, b) = match h as u32 {
            0 => (c, x, 0.0),
            1 => (x, c, 0.0),
            2 => (0.0, c, x),
            3 => (0.0, x, c),
            4 => (x, 0.0, c),
            _ => (c, 0.0, x),
        };
        let m = l - c / 2.0;
        let q = |v: f64| ((v + m) * 255.0).round().clamp(0.0, 255.0) as u8;
        Rgb { r: q(r), g: q(g), b: q(b) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineSwitchMode {
    #[default]
    Highlight,
    Arrow,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DifficultWordMode {
    #[default]
    Magnify,
    Tts,
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentationConfig {
    pub ls_mode: LineSwitchMode,
    pub dw_mode: DifficultWordMode,
    /// Custom line colour; `None` uses the background's default.
    pub ls_color: Option<Hsl>,
    pub magnifier_scale: f64,
    pub background: Background,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        Self {
            ls_mode: LineSwitchMode::Highlight,
            dw_mode: DifficultWordMode::Magnify,
            ls_color: None,
            magnifier_scale: 4.0,
            background: Background::Light,
        }
    }
}

impl AugmentationConfig {
    pub fn line_color(&self) -> Rgb {
        if let Some(hsl) = self.ls_color {
            return hsl.to_rgb();
        }
        // light page: yellow highlight, blue arrow; dark page swaps them
        match (self.ls_mode, self.background) {
            (LineSwitchMode::Arrow, Background::Light) => Rgb::BLUE,
            (LineSwitchMode::Arrow, Background::Dark) => Rgb::YELLOW,
            (_, Background::Light) => Rgb::YELLOW,
            (_, Background::Dark) => Rgb::BLUE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub left: f64,
    pub top: f64,
    pub right: f64,
    pub bottom: f64,
}

impl Rect {
    pub fn contains(&self, x: f64, y: f64, margin: f64) -> bool {
        x >= self.left - margin && x <= self.right + margin && y >= self.top - margin && y <= self.bottom + margin
    }
}

/// Visible region of the page in screen pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Viewport {
    pub top: f64,
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentationKind {
    HighlightLine,
    ArrowLine,
    MagnifyWord,
    SpeakWord,
    DismissMagnifier,
    ClearLine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    Above,
    Below,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationEvent {
    pub kind: AugmentationKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line_id: Option<LineId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word_id: Option<WordId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub placement: Option<Placement>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<Rgb>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Rect>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    pub at: Micros,
}

impl AugmentationEvent {
    fn bare(kind: AugmentationKind, at: Micros) -> Self {
        Self { kind, line_id: None, word_id: None, placement: None, color: None, bounds: None, text: None, at }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct ActiveMagnifier {
    word_id: WordId,
    bounds: Rect,
    word_box: Rect,
}

/// Render-state machine: at most one line augmentation and one magnifier at a time.
#[derive(Debug, Clone, Default)]
pub struct AugmentationController {
    active_line: Option<(LineId, AugmentationKind)>,
    magnifier: Option<ActiveMagnifier>,
    last_spoken: Vec<(WordId, Micros)>,
}

impl AugmentationController {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn active_line(&self) -> Option<LineId> {
        self.active_line.map(|(l, _)| l)
    }

    pub fn magnifier_word(&self) -> Option<WordId> {
        self.magnifier.map(|m| m.word_id)
    }

    /// Render directives for one behaviour event detected against layout `event_version`.
    pub fn on_behavior(
        &mut self,
        ev: &BehaviorEvent,
        event_version: u64,
        layout: &PageLayout,
        cfg: &AugmentationConfig,
        viewport: &Viewport,
    ) -> Vec<AugmentationEvent> {
        if event_version != layout.layout_version {
            warn!(event_version, active = layout.layout_version, "dropping behaviour event for stale layout");
            return Vec::new();
        }
        match ev.kind {
            BehaviorKind::SwitchReturnSweep | BehaviorKind::Jump | BehaviorKind::Following => {
                self.show_line(ev.line_id, ev.at, cfg)
            }
            BehaviorKind::DifficultWord => match (cfg.dw_mode, ev.word_id) {
                (DifficultWordMode::Off, _) | (_, None) => Vec::new(),
                (DifficultWordMode::Magnify, Some(w)) => self.magnify(w, ev.at, layout, cfg, viewport),
                (DifficultWordMode::Tts, Some(w)) => self.speak(w, ev.at, layout),
            },
        }
    }

    fn show_line(&mut self, line: LineId, at: Micros, cfg: &AugmentationConfig) -> Vec<AugmentationEvent> {
        let kind = match cfg.ls_mode {
            LineSwitchMode::Off => return Vec::new(),
            LineSwitchMode::Highlight => AugmentationKind::HighlightLine,
            LineSwitchMode::Arrow => AugmentationKind::ArrowLine,
        };
        if self.active_line == Some((line, kind)) {
            return Vec::new();
        }
        let mut out = Vec::with_capacity(2);
        if let Some((old, _)) = self.active_line.take() {
            out.push(AugmentationEvent {
                line_id: Some(old),
                ..AugmentationEvent::bare(AugmentationKind::ClearLine, at)
            });
        }
        out.push(AugmentationEvent {
            line_id: Some(line),
            color: Some(cfg.line_color()),
            ..AugmentationEvent::bare(kind, at)
        });
        self.active_line = Some((line, kind));
        out
    }

    fn magnify(
        &mut self,
        word_id: WordId,
        at: Micros,
        layout: &PageLayout,
        cfg: &AugmentationConfig,
        viewport: &Viewport,
    ) -> Vec<AugmentationEvent> {
        let Some(word) = layout.word(word_id) else { return Vec::new() };
        let Some(line) = layout.line(word.line_id) else { return Vec::new() };
        if self.magnifier.is_some_and(|m| m.word_id == word_id) {
            return Vec::new();
        }
        let mut out = Vec::with_capacity(2);
        if self.magnifier.take().is_some() {
            out.push(AugmentationEvent::bare(AugmentationKind::DismissMagnifier, at));
        }
        let placement = if line.top - viewport.top < MAGNIFIER_BELOW_FRACTION * viewport.height {
            Placement::Below
        } else {
            Placement::Above
        };
        let width = (word.width() * cfg.magnifier_scale).min(viewport.width);
        let height = line.height() * cfg.magnifier_scale;
        let left = (word.center_x() - width / 2.0).clamp(0.0, (viewport.width - width).max(0.0));
        let (top, bottom) = match placement {
            Placement::Above => (line.top - MAGNIFIER_GAP_PX - height, line.top - MAGNIFIER_GAP_PX),
            Placement::Below => (line.bottom + MAGNIFIER_GAP_PX, line.bottom + MAGNIFIER_GAP_PX + height),
        };
        let bounds = Rect { left, top, right: left + width, bottom };
        self.magnifier = Some(ActiveMagnifier {
            word_id,
            bounds,
            word_box: Rect { left: word.left, top: line.top, right: word.right, bottom: line.bottom },
        });
        out.push(AugmentationEvent {
            line_id: Some(word.line_id),
            word_id: Some(word_id),
            placement: Some(placement),
            bounds: Some(bounds),
            text: Some(word.text.clone()),
            ..AugmentationEvent::bare(AugmentationKind::MagnifyWord, at)
        });
        out
    }

    fn speak(&mut self, word_id: WordId, at: Micros, layout: &PageLayout) -> Vec<AugmentationEvent> {
        let Some(word) = layout.word(word_id) else { return Vec::new() };
        if let Some((_, t)) = self.last_spoken.iter().find(|(w, _)| *w == word_id) {
            if at.saturating_sub(*t) < SPEAK_DEBOUNCE_US {
                return Vec::new();
            }
        }
        self.last_spoken.retain(|(w, t)| *w != word_id && at.saturating_sub(*t) < SPEAK_DEBOUNCE_US);
        self.last_spoken.push((word_id, at));
        vec![AugmentationEvent {
            line_id: Some(word.line_id),
            word_id: Some(word_id),
            text: Some(word.text.clone()),
            ..AugmentationEvent::bare(AugmentationKind::SpeakWord, at)
        }]
    }

    /// Dismisses the magnifier once gaze leaves both it and the source word.
    pub fn on_fixation_for_magnifier(&mut self, fix: &Fixation) -> Option<AugmentationEvent> {
        let m = self.magnifier?;
        let margin = MAGNIFIER_DISMISS_MARGIN_PX;
        if m.bounds.contains(fix.cx, fix.cy, margin) || m.word_box.contains(fix.cx, fix.cy, margin) {
            return None;
        }
        self.magnifier = None;
        Some(AugmentationEvent {
            word_id: Some(m.word_id),
            ..AugmentationEvent::bare(AugmentationKind::DismissMagnifier, fix.end())
        })
    }

    /// Follows a layout change; without an id map every augmentation is withdrawn.
    pub fn on_layout_change(&mut self, dy: f64, map: Option<&IdMap>, at: Micros) -> Vec<AugmentationEvent> {
        let mut out = Vec::new();
        match map {
            Some(map) => {
                if let Some((line, kind)) = self.active_line {
                    match map.line(line) {
                        Some(new) => self.active_line = Some((new, kind)),
                        None => {
                            self.active_line = None;
                            out.push(AugmentationEvent {
                                line_id: Some(line),
                                ..AugmentationEvent::bare(AugmentationKind::ClearLine, at)
                            });
                        }
                    }
                }
                if let Some(m) = &mut self.magnifier {
                    match map.word(m.word_id) {
                        Some(new) => {
                            m.word_id = new;
                            for r in [&mut m.bounds, &mut m.word_box] {
                                r.top += dy;
                                r.bottom += dy;
                            }
                        }
                        None => {
                            self.magnifier = None;
                            out.push(AugmentationEvent::bare(AugmentationKind::DismissMagnifier, at));
                        }
                    }
                }
            }
            None => {
                if let Some((line, _)) = self.active_line.take() {
                    out.push(AugmentationEvent {
                        line_id: Some(line),
                        ..AugmentationEvent::bare(AugmentationKind::ClearLine, at)
                    });
                }
                if self.magnifier.take().is_some() {
                    out.push(AugmentationEvent::bare(AugmentationKind::DismissMagnifier, at));
                }
            }
        }
        out
    }
}
