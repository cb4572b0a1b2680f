//! Element quality metrics and threshold reports.
//!
//! Hexahedra are checked with the scaled Jacobian and quadrilateral face
//! interior angles; tetrahedra with volumetric skew and triangular face
//! interior angles. Angles are computed in degrees.

mod metrics;
mod report;

pub use metrics::{
    quad_angles, scaled_jacobian_hex, tet_volume, tri_angles, vol_skew_tet, HEX_CORNER_EDGES,
    HEX_FACES, TET_FACES,
};
pub use report::{hex_part, quality_report, tet_part, PartQuality, QualityReport};

use serde::{Deserialize, Serialize};

/// Pass/fail thresholds.
///
/// Defaults: scaled Jacobian >= 0.6, quad angles within [45, 135] deg,
/// tri angles within [30, 120] deg. The volumetric skew cutoff is not a
/// published value; 0.95 is the configurable default.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct QualityThresholds {
    pub jacobian_min: f64,
    pub quad_angle_range: (f64, f64),
    pub tri_angle_range: (f64, f64),
    pub skew_max: f64,
}

impl Default for QualityThresholds {
    fn default() -> Self {
        Self {
            jacobian_min: 0.6,
            quad_angle_range: (45.0, 135.0),
            tri_angle_range: (30.0, 120.0),
            skew_max: 0.95,
        }
    }
}

impl QualityThresholds {
    pub fn validate(&self) -> Result<(), crate::error::MeshError> {
        let ok = self.jacobian_min > 0.0
            && self.jacobian_min <= 1.0
            && self.quad_angle_range.0 < self.quad_angle_range.1
            && self.tri_angle_range.0 < self.tri_angle_range.1
            && self.skew_max > 0.0
            && self.skew_max <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(crate::error::MeshError::InvalidParameter(
                "quality thresholds out of range".into(),
            ))
        }
    }
}
