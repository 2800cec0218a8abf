//! Screen geometry and pixel/visual-angle conversion.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid geometry: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Horizontal,
    Vertical,
}

/// Physical description of the display the gaze stream is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScreenGeometry {
    pub width_px: u32,
    pub height_px: u32,
    pub physical_width_cm: f64,
    pub physical_height_cm: f64,
    pub viewing_distance_cm: f64,
}

impl ScreenGeometry {
    /// Builds a geometry from a panel diagonal in inches, assuming square pixels.
    pub fn from_diagonal(diagonal_in: f64, width_px: u32, height_px: u32, viewing_distance_cm: f64) -> Self {
        let diag_px = (f64::from(width_px).powi(2) + f64::from(height_px).powi(2)).sqrt();
        let cm_per_px = diagonal_in * 2.54 / diag_px;
        Self {
            width_px,
            height_px,
            physical_width_cm: f64::from(width_px) * cm_per_px,
            physical_height_cm: f64::from(height_px) * cm_per_px,
            viewing_distance_cm,
        }
    }

    /// 24" 1920x1200 panel viewed from 65 cm.
    pub fn study_display() -> Self {
        Self::from_diagonal(24.0, 1920, 1200, 65.0)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.width_px == 0 || self.height_px == 0 {
            return Err(GeometryError::Invalid("pixel dimensions must be positive".into()));
        }
        for (name, v) in [
            ("physical_width_cm", self.physical_width_cm),
            ("physical_height_cm", self.physical_height_cm),
            ("viewing_distance_cm", self.viewing_distance_cm),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(GeometryError::Invalid(format!("{name} must be positive, got {v}")));
            }
        }
        let px_aspect = f64::from(self.width_px) / f64::from(self.height_px);
        let cm_aspect = self.physical_width_cm / self.physical_height_cm;
        if ((px_aspect - cm_aspect) / px_aspect).abs() > 0.01 {
            return Err(GeometryError::Invalid(format!(
                "pixel aspect {px_aspect:.4} and physical aspect {cm_aspect:.4} disagree by more than 1%"
            )));
        }
        Ok(())
    }

    /// Centimetres covered by one pixel along `axis`.
    pub fn cm_per_px(&self, axis: Axis) -> f64 {
        match axis {
            Axis::Horizontal => self.physical_width_cm / f64::from(self.width_px),
            Axis::Vertical => self.physical_height_cm / f64::from(self.height_px),
        }
    }

    /// Angle subtended by a 2-D pixel offset, measured at the screen point straight ahead of the eye.
    pub fn offset_to_degrees(&self, dx_px: f64, dy_px: f64) -> f64 {
        let dx = dx_px * self.cm_per_px(Axis::Horizontal);
        let dy = dy_px * self.cm_per_px(Axis::Vertical);
        (dx.hypot(dy) / self.viewing_distance_cm).atan().to_degrees()
    }
}

fn check_distance(geom: &ScreenGeometry) -> Result<(), GeometryError> {
    if !(geom.viewing_distance_cm.is_finite() && geom.viewing_distance_cm > 0.0) {
        return Err(GeometryError::Invalid(format!(
            "viewing distance must be positive, got {}",
            geom.viewing_distance_cm
        )));
    }
    Ok(())
}

/// Visual angle in degrees of an on-screen offset. Sign follows the offset.
pub fn px_to_degrees(offset_px: f64, axis: Axis, geom: &ScreenGeometry) -> Result<f64, GeometryError> {
    check_distance(geom)?;
    let cm = offset_px * geom.cm_per_px(axis);
    Ok((cm / geom.viewing_distance_cm).atan().to_degrees())
}

/// Inverse of [`px_to_degrees`].
pub fn degrees_to_px(degrees: f64, axis: Axis, geom: &ScreenGeometry) -> Result<f64, GeometryError> {
    check_distance(geom)?;
    let cm = degrees.to_radians().tan() * geom.viewing_distance_cm;
    Ok(cm / geom.cm_per_px(axis))
}
