//! Mesh-wide quality reports with failure counts and extrema per part.

use super::{quad_angles, scaled_jacobian_hex, tri_angles, vol_skew_tet, QualityThresholds};
use super::{HEX_FACES, TET_FACES};
use crate::geometry::Point;
use crate::par;
use serde::{Deserialize, Serialize};

/// Quality summary of one mesh part (wall or ILT). Metric fields that do
/// not apply to the part's element type are `None` and print as N/A.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartQuality {
    pub name: String,
    pub n_elements: usize,
    pub n_nodes: usize,
    pub jacobian_failures: Option<usize>,
    pub min_jacobian: Option<f64>,
    pub worst_jacobian_element: Option<usize>,
    pub skew_failures: Option<usize>,
    pub max_skew: Option<f64>,
    pub worst_skew_element: Option<usize>,
    pub angle_failures: usize,
    pub min_angle_deg: f64,
    pub max_angle_deg: f64,
    pub worst_angle_element: Option<usize>,
    pub degenerate_elements: usize,
    /// Per-element metric arrays (in-memory only).
    #[serde(skip)]
    pub jacobians: Vec<f64>,
    #[serde(skip)]
    pub skews: Vec<f64>,
    #[serde(skip)]
    pub angle_extrema: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QualityReport {
    pub thresholds: QualityThresholds,
    pub parts: Vec<PartQuality>,
}

impl QualityReport {
    /// Hard gate: no element anywhere below the Jacobian threshold.
    pub fn passes_jacobian_gate(&self) -> bool {
        self.parts
            .iter()
            .all(|p| p.jacobian_failures.unwrap_or(0) == 0)
    }

    /// Fraction of elements (over all parts) failing any soft criterion
    /// (angles or skew).
    pub fn warn_fraction(&self) -> f64 {
        let total: usize = self.parts.iter().map(|p| p.n_elements).sum();
        if total == 0 {
            return 0.0;
        }
        let warns: usize = self
            .parts
            .iter()
            .map(|p| p.angle_failures + p.skew_failures.unwrap_or(0))
            .sum();
        warns as f64 / total as f64
    }

    /// Human-readable table mirroring the per-part summary layout.
    pub fn to_table(&self) -> String {
        let fmt_opt_usize = |v: &Option<usize>| match v {
            Some(n) => n.to_string(),
            None => "N/A".to_string(),
        };
        let fmt_opt_f64 = |v: &Option<f64>| match v {
            Some(x) => format!("{x:.4}"),
            None => "N/A".to_string(),
        };
        let mut rows: Vec<(String, Vec<String>)> = vec![
            (
                "Part".into(),
                self.parts.iter().map(|p| p.name.clone()).collect(),
            ),
            (
                "No. of elements".into(),
                self.parts.iter().map(|p| p.n_elements.to_string()).collect(),
            ),
            (
                "No. of nodes".into(),
                self.parts.iter().map(|p| p.n_nodes.to_string()).collect(),
            ),
            (
                "No. of elements failed to Jacobian".into(),
                self.parts
                    .iter()
                    .map(|p| fmt_opt_usize(&p.jacobian_failures))
                    .collect(),
            ),
            (
                "Min. Jacobian".into(),
                self.parts
                    .iter()
                    .map(|p| fmt_opt_f64(&p.min_jacobian))
                    .collect(),
            ),
            (
                "No. of elements failed to volumetric skew".into(),
                self.parts
                    .iter()
                    .map(|p| fmt_opt_usize(&p.skew_failures))
                    .collect(),
            ),
            (
                "Max. vol. skew".into(),
                self.parts
                    .iter()
                    .map(|p| fmt_opt_f64(&p.max_skew))
                    .collect(),
            ),
            (
                "No. of elements failed to min/max angle".into(),
                self.parts
                    .iter()
                    .map(|p| p.angle_failures.to_string())
                    .collect(),
            ),
            (
                "Min angle (deg)".into(),
                self.parts
                    .iter()
                    .map(|p| format!("{:.2}", p.min_angle_deg))
                    .collect(),
            ),
            (
                "Max angle (deg)".into(),
                self.parts
                    .iter()
                    .map(|p| format!("{:.2}", p.max_angle_deg))
                    .collect(),
            ),
        ];
        let width = 44usize;
        let col = 14usize;
        let mut out = String::new();
        for (label, cells) in rows.drain(..) {
            out.push_str(&format!("{label:<width$}"));
            for c in cells {
                out.push_str(&format!("{c:>col$}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Audit a wall hex mesh and an optional ILT tet mesh against thresholds.
///
/// Hexes are checked against the scaled Jacobian and all six quad faces'
/// interior angles; tets against volumetric skew and all four tri faces'
/// interior angles. Element loops are data-parallel with deterministic
/// (ordered) reduction.
pub fn quality_report(
    wall: Option<(&[Point], &[[usize; 8]])>,
    ilt: Option<(&[Point], &[[usize; 4]])>,
    thresholds: &QualityThresholds,
) -> QualityReport {
    let mut parts = Vec::new();
    if let Some((nodes, hexes)) = wall {
        parts.push(hex_part("Wall", nodes, hexes, thresholds));
    }
    if let Some((nodes, tets)) = ilt {
        parts.push(tet_part("ILT", nodes, tets, thresholds));
    }
    QualityReport {
        thresholds: thresholds.clone(),
        parts,
    }
}

/// Quality of a hexahedral part.
pub fn hex_part(
    name: &str,
    nodes: &[Point],
    hexes: &[[usize; 8]],
    thresholds: &QualityThresholds,
) -> PartQuality {
    // (jacobian, angle extrema, degenerate)
    let per_element: Vec<(f64, (f64, f64), bool)> = par::map_slice(hexes, |h| {
        let corners: [Point; 8] = std::array::from_fn(|i| nodes[h[i]]);
        let jac = scaled_jacobian_hex(&corners);
        let mut min_a = f64::INFINITY;
        let mut max_a = f64::NEG_INFINITY;
        let mut degenerate = false;
        for face in HEX_FACES {
            let quad: [Point; 4] = std::array::from_fn(|i| corners[face[i]]);
            match quad_angles(&quad) {
                Some((lo, hi)) => {
                    min_a = min_a.min(lo);
                    max_a = max_a.max(hi);
                }
                None => degenerate = true,
            }
        }
        (jac, (min_a, max_a), degenerate)
    });

    let jacobians: Vec<f64> = per_element.iter().map(|e| e.0).collect();
    let angle_extrema: Vec<(f64, f64)> = per_element.iter().map(|e| e.1).collect();
    let degenerate_elements = per_element.iter().filter(|e| e.2).count();

    let (min_jac, worst_jac) = argmin(&jacobians);
    let (jac_fail, angle_fail, worst_angle) =
        count_failures(&jacobians, &angle_extrema, thresholds.jacobian_min, thresholds.quad_angle_range);
    let (min_a, max_a) = overall_angles(&angle_extrema);

    PartQuality {
        name: name.into(),
        n_elements: hexes.len(),
        n_nodes: nodes.len(),
        jacobian_failures: Some(jac_fail),
        min_jacobian: min_jac,
        worst_jacobian_element: worst_jac,
        skew_failures: None,
        max_skew: None,
        worst_skew_element: None,
        angle_failures: angle_fail,
        min_angle_deg: min_a,
        max_angle_deg: max_a,
        worst_angle_element: worst_angle,
        degenerate_elements,
        jacobians,
        skews: Vec::new(),
        angle_extrema,
    }
}

/// Quality of a tetrahedral part.
pub fn tet_part(
    name: &str,
    nodes: &[Point],
    tets: &[[usize; 4]],
    thresholds: &QualityThresholds,
) -> PartQuality {
    let per_element: Vec<(f64, (f64, f64), bool)> = par::map_slice(tets, |t| {
        let corners: [Point; 4] = std::array::from_fn(|i| nodes[t[i]]);
        let skew = vol_skew_tet(&corners);
        let mut min_a = f64::INFINITY;
        let mut max_a = f64::NEG_INFINITY;
        let mut degenerate = false;
        for face in TET_FACES {
            let tri: [Point; 3] = std::array::from_fn(|i| corners[face[i]]);
            match tri_angles(&tri) {
                Some((lo, hi)) => {
                    min_a = min_a.min(lo);
                    max_a = max_a.max(hi);
                }
                None => degenerate = true,
            }
        }
        (skew, (min_a, max_a), degenerate)
    });

    let skews: Vec<f64> = per_element.iter().map(|e| e.0).collect();
    let angle_extrema: Vec<(f64, f64)> = per_element.iter().map(|e| e.1).collect();
    let degenerate_elements = per_element.iter().filter(|e| e.2).count();

    let mut skew_fail = 0usize;
    let mut max_skew = f64::NEG_INFINITY;
    let mut worst_skew = None;
    for (i, &s) in skews.iter().enumerate() {
        if s > thresholds.skew_max {
            skew_fail += 1;
        }
        if s > max_skew {
            max_skew = s;
            worst_skew = Some(i);
        }
    }

    let mut angle_fail = 0usize;
    let mut worst_angle = None;
    let mut worst_margin = f64::NEG_INFINITY;
    let (lo_ok, hi_ok) = thresholds.tri_angle_range;
    for (i, &(lo, hi)) in angle_extrema.iter().enumerate() {
        if lo < lo_ok || hi > hi_ok {
            angle_fail += 1;
            let margin = (lo_ok - lo).max(hi - hi_ok);
            if margin > worst_margin {
                worst_margin = margin;
                worst_angle = Some(i);
            }
        }
    }
    let (min_a, max_a) = overall_angles(&angle_extrema);

    PartQuality {
        name: name.into(),
        n_elements: tets.len(),
        n_nodes: nodes.len(),
        jacobian_failures: None,
        min_jacobian: None,
        worst_jacobian_element: None,
        skew_failures: Some(skew_fail),
        max_skew: if skews.is_empty() { None } else { Some(max_skew) },
        worst_skew_element: worst_skew,
        angle_failures: angle_fail,
        min_angle_deg: min_a,
        max_angle_deg: max_a,
        worst_angle_element: worst_angle,
        degenerate_elements,
        jacobians: Vec::new(),
        skews,
        angle_extrema,
    }
}

fn argmin(values: &[f64]) -> (Option<f64>, Option<usize>) {
    let mut min = f64::INFINITY;
    let mut at = None;
    for (i, &v) in values.iter().enumerate() {
        if v < min {
            min = v;
            at = Some(i);
        }
    }
    (at.map(|_| min), at)
}

fn count_failures(
    jacobians: &[f64],
    angles: &[(f64, f64)],
    jac_min: f64,
    range: (f64, f64),
) -> (usize, usize, Option<usize>) {
    let jac_fail = jacobians.iter().filter(|&&j| j < jac_min).count();
    let mut angle_fail = 0usize;
    let mut worst = None;
    let mut worst_margin = f64::NEG_INFINITY;
    for (i, &(lo, hi)) in angles.iter().enumerate() {
        if lo < range.0 || hi > range.1 {
            angle_fail += 1;
            let margin = (range.0 - lo).max(hi - range.1);
            if margin > worst_margin {
                worst_margin = margin;
                worst = Some(i);
            }
        }
    }
    (jac_fail, angle_fail, worst)
}

fn overall_angles(extrema: &[(f64, f64)]) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &(lo, hi) in extrema {
        min = min.min(lo);
        max = max.max(hi);
    }
    if extrema.is_empty() {
        (0.0, 0.0)
    } else {
        (min, max)
    }
}
