//! Vessel surface ingestion, centerline extraction, and radial slice profiles.
//!
//! Everything downstream (the hexahedral wall sweep and the thrombus fill)
//! is driven by the data produced here: an ordered centerline with
//! rotation-minimizing frames, and per-slice radial profiles sampled by
//! ray casting in each frame plane.

pub mod centerline;
pub mod slice;
pub mod stl;
pub mod synth;

pub use centerline::extract_centerline;
pub use slice::{slice_profiles, smooth_profiles};
pub use stl::{load_stl, write_stl_ascii, write_stl_binary};
pub use synth::{perturb_surface, synth_aaa, SyntheticAaaSpec};

use crate::error::MeshError;
use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

pub type Point = Point3<f64>;
pub type Vec3 = Vector3<f64>;

/// Triangulated surface in mm. Indices into `vertices`.
#[derive(Debug, Clone, Default)]
pub struct TriSurface {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriSurface {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle_area(&self, t: &[usize; 3]) -> f64 {
        let a = self.vertices[t[0]];
        let b = self.vertices[t[1]];
        let c = self.vertices[t[2]];
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    /// Every triangle references valid vertices and has positive area.
    pub fn validate(&self) -> Result<(), MeshError> {
        if self.triangles.is_empty() {
            return Err(MeshError::EmptySurface("no triangles".into()));
        }
        for (i, t) in self.triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= self.vertices.len()) {
                return Err(MeshError::InvalidParameter(format!(
                    "triangle {i} references out-of-range vertex"
                )));
            }
            if self.triangle_area(t) <= 0.0 {
                return Err(MeshError::InvalidParameter(format!(
                    "triangle {i} has zero area"
                )));
            }
        }
        Ok(())
    }

    /// True when every edge is shared by exactly two triangles.
    pub fn is_watertight(&self) -> bool {
        let mut counts: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &self.triangles {
            for e in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                let key = (e.0.min(e.1), e.0.max(e.1));
                *counts.entry(key).or_insert(0) += 1;
            }
        }
        counts.values().all(|&c| c == 2)
    }

    /// Extent of the vertex set projected onto a unit axis.
    pub fn extent_along(&self, axis: &Vec3) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in &self.vertices {
            let s = v.coords.dot(axis);
            lo = lo.min(s);
            hi = hi.max(s);
        }
        (lo, hi)
    }
}

/// Ordered centerline points with per-point orthonormal frames.
///
/// `frames[i] = (normal, binormal)` spans the cross-section plane at
/// `points[i]`; `(tangent, normal, binormal)` is right-handed. Frames are
/// built by discrete parallel transport, so twist between consecutive
/// frames never exceeds the bend between consecutive tangents.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Centerline {
    pub points: Vec<Point>,
    pub tangents: Vec<Vec3>,
    pub frames: Vec<(Vec3, Vec3)>,
}

impl Centerline {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Polyline length of the centerline.
    pub fn arc_length(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1] - w[0]).norm())
            .sum()
    }
}

/// Radial profile of one cross-section slice.
///
/// `radii[k]` is the distance from `center` to the surface along the ray
/// at `angles[k]` within the frame plane. The frame is carried with the
/// profile so meshing does not need the centerline again.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SliceProfile {
    pub center: Point,
    pub normal: Vec3,
    pub binormal: Vec3,
    pub angles: Vec<f64>,
    pub radii: Vec<f64>,
}

impl SliceProfile {
    pub fn n_theta(&self) -> usize {
        self.angles.len()
    }

    /// Unit ray direction in the frame plane for angle index `k`.
    pub fn ray_dir(&self, k: usize) -> Vec3 {
        let a = self.angles[k];
        self.normal * a.cos() + self.binormal * a.sin()
    }

    /// Surface point at angle index `k`.
    pub fn point(&self, k: usize) -> Point {
        self.center + self.ray_dir(k) * self.radii[k]
    }

    /// Point at a prescribed radius along the ray at angle index `k`.
    pub fn point_at_radius(&self, k: usize, radius: f64) -> Point {
        self.center + self.ray_dir(k) * radius
    }

    pub fn mean_radius(&self) -> f64 {
        self.radii.iter().sum::<f64>() / self.radii.len() as f64
    }
}

/// Uniform angle samples spanning [0, 2pi).
pub fn uniform_angles(n_theta: usize) -> Vec<f64> {
    (0..n_theta)
        .map(|k| 2.0 * std::f64::consts::PI * k as f64 / n_theta as f64)
        .collect()
}
