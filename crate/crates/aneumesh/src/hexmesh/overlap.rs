//! Adjacent-ring overlap detection.
//!
//! Swept rings overlap where the centerline bends sharply relative to the
//! ring radius. A ring is safe when it stays strictly on its own side of
//! the neighboring slice plane: crossing the plane is an error, clearing
//! it by less than 10% of the slice spacing is a warning.

use crate::geometry::SliceProfile;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OverlapSeverity {
    /// Near-tangent rings (clearance below 10% of slice spacing).
    Warning,
    /// Rings cross; the sweep would self-intersect.
    Error,
}

#[derive(Debug, Clone, Serialize)]
pub struct OverlapIncident {
    pub slice_pair: (usize, usize),
    pub angle_index: usize,
    pub severity: OverlapSeverity,
    /// Signed clearance to the neighboring slice plane, as a fraction of
    /// the slice spacing (negative = crossed).
    pub clearance_fraction: f64,
}

/// Check every adjacent slice pair for ring crossings.
pub fn detect_overlap(profiles: &[SliceProfile]) -> Vec<OverlapIncident> {
    let mut incidents = Vec::new();
    for j in 0..profiles.len().saturating_sub(1) {
        let (a, b) = (&profiles[j], &profiles[j + 1]);
        let ta = a.normal.cross(&a.binormal);
        let tb = b.normal.cross(&b.binormal);
        let spacing = (b.center - a.center).norm();
        if spacing <= 0.0 {
            incidents.push(OverlapIncident {
                slice_pair: (j, j + 1),
                angle_index: 0,
                severity: OverlapSeverity::Error,
                clearance_fraction: -1.0,
            });
            continue;
        }
        for i in 0..a.n_theta().min(b.n_theta()) {
            // Ring a must stay behind plane b and ring b ahead of plane a.
            let d_ab = (a.point(i) - b.center).dot(&tb);
            let d_ba = (b.point(i) - a.center).dot(&ta);
            let clearance = (-d_ab / spacing).min(d_ba / spacing);
            if clearance <= 0.0 {
                incidents.push(OverlapIncident {
                    slice_pair: (j, j + 1),
                    angle_index: i,
                    severity: OverlapSeverity::Error,
                    clearance_fraction: clearance,
                });
            } else if clearance < 0.1 {
                incidents.push(OverlapIncident {
                    slice_pair: (j, j + 1),
                    angle_index: i,
                    severity: OverlapSeverity::Warning,
                    clearance_fraction: clearance,
                });
            }
        }
    }
    incidents
}
