//! Boundary surface extraction from the wall mesh.

use super::HexWallMesh;
use crate::geometry::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WallSide {
    Inner,
    Outer,
}

/// Quadrilateral surface referencing the volume mesh's node ids (shared,
/// not copied), with outward-consistent winding (normals away from the
/// solid).
#[derive(Debug, Clone)]
pub struct QuadSurface {
    pub quads: Vec<[usize; 4]>,
}

impl QuadSurface {
    pub fn area(&self, nodes: &[Point]) -> f64 {
        self.quads
            .iter()
            .map(|q| {
                let [a, b, c, d] = q.map(|i| nodes[i]);
                0.5 * ((b - a).cross(&(c - a)).norm() + (c - a).cross(&(d - a)).norm())
            })
            .sum()
    }
}

pub fn extract_surface(mesh: &HexWallMesh, which: WallSide) -> QuadSurface {
    let quads = match which {
        WallSide::Inner => mesh.inner_faces.clone(),
        WallSide::Outer => mesh.outer_faces.clone(),
    };
    QuadSurface { quads }
}
