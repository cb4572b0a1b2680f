//! Structured hexahedral wall meshing by ring sweeping.
//!
//! A multi-layer quadrilateral ring is built on every slice profile and
//! swept along the centerline. The lattice is indexed (slice j, angle i,
//! layer k) with k = 0 on the outer surface and k = n_layers on the inner
//! surface; node id = (j * n_theta + i) * (n_layers + 1) + k.
//!
//! Hex corner ordering: corners 0-3 form the lower-slice quad, 4-7 the
//! upper-slice quad with corner 4 above corner 0; the quads are ordered so
//! that (edge 0->1, edge 0->3, edge 0->4) is right-handed, giving positive
//! Jacobians on any non-overlapping sweep.

mod hex20;
mod overlap;
mod smooth;
mod surface;

pub use hex20::{promote_to_hex20, Hex20Mesh, HEX20_EDGES};
pub use overlap::{detect_overlap, OverlapIncident, OverlapSeverity};
pub use smooth::laplace_smooth_mesh;
pub use surface::{extract_surface, QuadSurface, WallSide};

use crate::error::MeshError;
use crate::geometry::{Point, SliceProfile};
use serde::{Deserialize, Serialize};

/// Wall meshing parameters. Defaults follow the reference workflow:
/// 1.5 mm wall, 2 layers through thickness, 0.75 mm elements.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct MeshParams {
    pub wall_thickness: f64,
    pub n_layers: usize,
    pub target_element_size: f64,
    /// Circumferential divisions; 0 = auto from target size.
    pub n_theta: usize,
    /// Axial divisions; 0 = auto from centerline length.
    pub n_axial: usize,
    /// Offset direction: true (default) grows the wall inward from the
    /// profile surface, false grows outward.
    pub grow_inward: bool,
}

impl Default for MeshParams {
    fn default() -> Self {
        Self {
            wall_thickness: 1.5,
            n_layers: 2,
            target_element_size: 0.75,
            n_theta: 0,
            n_axial: 0,
            grow_inward: true,
        }
    }
}

impl MeshParams {
    pub fn validate(&self) -> Result<(), MeshError> {
        if self.wall_thickness <= 0.0 {
            return Err(MeshError::InvalidParameter(
                "wall_thickness must be > 0".into(),
            ));
        }
        if self.n_layers < 1 {
            return Err(MeshError::InvalidParameter("n_layers must be >= 1".into()));
        }
        if self.target_element_size <= 0.0 && (self.n_theta == 0 || self.n_axial == 0) {
            return Err(MeshError::InvalidParameter(
                "target_element_size must be > 0 when counts are auto".into(),
            ));
        }
        Ok(())
    }

    /// Radial element size through the wall.
    pub fn radial_size(&self) -> f64 {
        self.wall_thickness / self.n_layers as f64
    }

    /// Resolve auto circumferential count from the mean profile radius.
    /// Round-half-up, minimum 8, forced even.
    pub fn resolve_n_theta(&self, mean_radius: f64) -> usize {
        if self.n_theta != 0 {
            return self.n_theta;
        }
        let raw = 2.0 * std::f64::consts::PI * mean_radius / self.target_element_size;
        let mut n = round_half_up(raw).max(8);
        if n % 2 == 1 {
            n += 1;
        }
        n
    }

    /// Resolve auto axial division count from the centerline length.
    /// Round-half-up, minimum 2.
    pub fn resolve_n_axial(&self, centerline_length: f64) -> usize {
        if self.n_axial != 0 {
            return self.n_axial;
        }
        round_half_up(centerline_length / self.target_element_size).max(2)
    }
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct NodeSets {
    pub inner_surface: Vec<usize>,
    pub outer_surface: Vec<usize>,
    pub top_ring: Vec<usize>,
    pub bottom_ring: Vec<usize>,
}

/// Structured multi-layer hexahedral wall mesh.
#[derive(Debug, Clone)]
pub struct HexWallMesh {
    pub nodes: Vec<Point>,
    pub hexes: Vec<[usize; 8]>,
    pub node_sets: NodeSets,
    /// Inner-surface quads (shared node ids), wound with outward normals
    /// pointing away from the solid (toward the lumen).
    pub inner_faces: Vec<[usize; 4]>,
    /// Outer-surface quads, normals pointing away from the vessel.
    pub outer_faces: Vec<[usize; 4]>,
    /// Lattice dimensions: axial node rings, circumferential divisions,
    /// layers through thickness.
    pub n_slices: usize,
    pub n_theta: usize,
    pub n_layers: usize,
    /// Per-slice (center, frame normal, frame binormal), kept for
    /// lattice-aware smoothing.
    pub slice_frames: Vec<(Point, crate::geometry::Vec3, crate::geometry::Vec3)>,
}

impl HexWallMesh {
    /// Lattice node id for (slice, angle index, layer).
    #[inline]
    pub fn node_id(&self, j: usize, i: usize, k: usize) -> usize {
        lattice_node_id(j, i % self.n_theta, k, self.n_theta, self.n_layers)
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.hexes.len()
    }
}

#[inline]
fn lattice_node_id(j: usize, i: usize, k: usize, n_theta: usize, n_layers: usize) -> usize {
    (j * n_theta + i) * (n_layers + 1) + k
}

/// Build one planar multi-layer ring of nodes for a slice profile.
///
/// The profile radii describe the surface the wall is offset from (the
/// outer surface when growing inward). Node (i, k) sits on the ray at
/// angle i, layer k = 0 on the outer surface through k = n_layers on the
/// inner surface.
pub fn build_ring(
    profile: &SliceProfile,
    params: &MeshParams,
    slice_index: usize,
) -> Result<Vec<Point>, MeshError> {
    params.validate()?;
    let dr = params.radial_size();
    let n_theta = profile.n_theta();
    let mut nodes = Vec::with_capacity(n_theta * (params.n_layers + 1));
    for i in 0..n_theta {
        for k in 0..=params.n_layers {
            let radius = if params.grow_inward {
                profile.radii[i] - k as f64 * dr
            } else {
                profile.radii[i] + (params.n_layers - k) as f64 * dr
            };
            if radius <= 0.0 {
                return Err(MeshError::WallSelfIntersection {
                    slice: slice_index,
                    angle_index: i,
                    inner_radius: radius,
                });
            }
            nodes.push(profile.point_at_radius(i, radius));
        }
    }
    Ok(nodes)
}

/// Sweep the ring along the profiles into a hexahedral wall mesh.
///
/// Fails if adjacent rings cross (see [`detect_overlap`]). The result is
/// bit-deterministic for identical inputs.
pub fn sweep(profiles: &[SliceProfile], params: &MeshParams) -> Result<HexWallMesh, MeshError> {
    params.validate()?;
    if profiles.len() < 2 {
        return Err(MeshError::InvalidParameter(
            "sweep needs at least 2 profiles".into(),
        ));
    }
    let n_theta = profiles[0].n_theta();
    if profiles.iter().any(|p| p.n_theta() != n_theta) {
        return Err(MeshError::InvalidParameter(
            "profiles must share n_theta".into(),
        ));
    }

    let incidents = detect_overlap(profiles);
    let crossings: Vec<(usize, usize)> = incidents
        .iter()
        .filter(|i| i.severity == OverlapSeverity::Error)
        .map(|i| i.slice_pair)
        .collect();
    if !crossings.is_empty() {
        let mut pairs = crossings;
        pairs.dedup();
        return Err(MeshError::RingOverlap { pairs });
    }

    let n_slices = profiles.len();
    let n_layers = params.n_layers;
    let mut nodes = Vec::with_capacity(n_slices * n_theta * (n_layers + 1));
    for (j, profile) in profiles.iter().enumerate() {
        nodes.extend(build_ring(profile, params, j)?);
    }

    let id = |j: usize, i: usize, k: usize| lattice_node_id(j, i % n_theta, k, n_theta, n_layers);
    let mut hexes = Vec::with_capacity((n_slices - 1) * n_theta * n_layers);
    for j in 0..n_slices - 1 {
        for i in 0..n_theta {
            for k in 0..n_layers {
                // Lower quad: (edge 0->1) radially outward, (edge 0->3)
                // circumferential, (edge 0->4) axial.
                hexes.push([
                    id(j, i, k + 1),
                    id(j, i, k),
                    id(j, i + 1, k),
                    id(j, i + 1, k + 1),
                    id(j + 1, i, k + 1),
                    id(j + 1, i, k),
                    id(j + 1, i + 1, k),
                    id(j + 1, i + 1, k + 1),
                ]);
            }
        }
    }

    let mut node_sets = NodeSets::default();
    for j in 0..n_slices {
        for i in 0..n_theta {
            node_sets.outer_surface.push(id(j, i, 0));
            node_sets.inner_surface.push(id(j, i, n_layers));
        }
    }
    for i in 0..n_theta {
        for k in 0..=n_layers {
            node_sets.bottom_ring.push(id(0, i, k));
            node_sets.top_ring.push(id(n_slices - 1, i, k));
        }
    }

    // Face windings: (u, v, t) = (radial out, circumferential, axial) is
    // right-handed, so (v, t) order gives +u normals and (t, v) gives -u.
    let mut inner_faces = Vec::with_capacity((n_slices - 1) * n_theta);
    let mut outer_faces = Vec::with_capacity((n_slices - 1) * n_theta);
    for j in 0..n_slices - 1 {
        for i in 0..n_theta {
            inner_faces.push([
                id(j, i, n_layers),
                id(j + 1, i, n_layers),
                id(j + 1, i + 1, n_layers),
                id(j, i + 1, n_layers),
            ]);
            outer_faces.push([id(j, i, 0), id(j, i + 1, 0), id(j + 1, i + 1, 0), id(j + 1, i, 0)]);
        }
    }

    let slice_frames = profiles
        .iter()
        .map(|p| (p.center, p.normal, p.binormal))
        .collect();

    Ok(HexWallMesh {
        nodes,
        hexes,
        node_sets,
        inner_faces,
        outer_faces,
        n_slices,
        n_theta,
        n_layers,
        slice_frames,
    })
}
