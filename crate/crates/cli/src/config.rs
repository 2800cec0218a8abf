//! TOML engine configuration shared by every subcommand.
//!
//! ```toml
//! [engine]
//! dw_first_fixation_us = 450000
//!
//! [augmentation]
//! ls_mode = "arrow"
//!
//! [geometry]
//! width_px = 1920
//! height_px = 1080
//! physical_width_cm = 53.1
//! physical_height_cm = 29.9
//! viewing_distance_cm = 60.0
//! ```
//!
//! Every table is optional; missing keys take the engine defaults.

use std::path::Path;

use anyhow::{Context, Result};
use gazeprompt_core::augmentation::AugmentationConfig;
use gazeprompt_core::session::SessionOptions;
use gazeprompt_core::{EngineConfig, ScreenGeometry};
use serde::Deserialize;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub engine: EngineConfig,
    pub augmentation: AugmentationConfig,
    /// Defaults to the 24" 1920x1200 study display at 65 cm.
    pub geometry: Option<ScreenGeometry>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.engine.validate()?;
        if let Some(g) = &cfg.geometry {
            g.validate()?;
        }
        Ok(cfg)
    }

    pub fn session_options(&self, session_id: impl Into<String>) -> SessionOptions {
        SessionOptions {
            session_id: session_id.into(),
            engine: self.engine.clone(),
            augmentation: self.augmentation.clone(),
            geometry: self.geometry.unwrap_or_else(ScreenGeometry::study_display),
        }
    }
}
