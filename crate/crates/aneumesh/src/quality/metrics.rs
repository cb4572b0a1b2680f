//! Per-element metric kernels.

use crate::geometry::Point;
use nalgebra::Matrix3;

/// Hex corner ordering: nodes 0-3 form the lower quad, 4-7 the upper quad
/// with node 4 above node 0. At every corner the three emanating edges
/// listed here form a right-handed triple on the reference cube.
pub const HEX_CORNER_EDGES: [[usize; 3]; 8] = [
    [1, 3, 4],
    [2, 0, 5],
    [3, 1, 6],
    [0, 2, 7],
    [7, 5, 0],
    [4, 6, 1],
    [5, 7, 2],
    [6, 4, 3],
];

/// The six quadrilateral faces of a hex in the corner ordering above.
pub const HEX_FACES: [[usize; 4]; 6] = [
    [0, 1, 2, 3],
    [4, 5, 6, 7],
    [0, 1, 5, 4],
    [1, 2, 6, 5],
    [2, 3, 7, 6],
    [3, 0, 4, 7],
];

/// The four triangular faces of a tet.
pub const TET_FACES: [[usize; 3]; 4] = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];

/// Scaled Jacobian of a hexahedron: at each corner, the determinant of the
/// three emanating unit edge vectors; the element value is the minimum
/// over the eight corners. 1 = orthogonal, <= 0 = degenerate or inverted.
/// A zero-length edge yields 0 (degenerate).
pub fn scaled_jacobian_hex(corners: &[Point; 8]) -> f64 {
    let mut min_det = f64::INFINITY;
    for (c, edges) in HEX_CORNER_EDGES.iter().enumerate() {
        let mut cols = [nalgebra::Vector3::zeros(); 3];
        for (k, &e) in edges.iter().enumerate() {
            let v = corners[e] - corners[c];
            let len = v.norm();
            if len == 0.0 {
                return 0.0;
            }
            cols[k] = v / len;
        }
        let det = Matrix3::from_columns(&cols).determinant();
        min_det = min_det.min(det);
    }
    min_det
}

/// Interior angle extrema of a quadrilateral (degrees), corners in
/// consecutive order. `None` if an edge is collapsed.
pub fn quad_angles(corners: &[Point; 4]) -> Option<(f64, f64)> {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for i in 0..4 {
        let prev = corners[(i + 3) % 4];
        let next = corners[(i + 1) % 4];
        let a = interior_angle(&corners[i], &prev, &next)?;
        min = min.min(a);
        max = max.max(a);
    }
    Some((min, max))
}

/// Interior angle extrema of a triangle (degrees). `None` if degenerate.
pub fn tri_angles(corners: &[Point; 3]) -> Option<(f64, f64)> {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for i in 0..3 {
        let a = interior_angle(&corners[i], &corners[(i + 1) % 3], &corners[(i + 2) % 3])?;
        min = min.min(a);
        max = max.max(a);
    }
    Some((min, max))
}

fn interior_angle(at: &Point, p: &Point, q: &Point) -> Option<f64> {
    let u = p - at;
    let v = q - at;
    let nu = u.norm();
    let nv = v.norm();
    if nu == 0.0 || nv == 0.0 {
        return None;
    }
    Some((u.dot(&v) / (nu * nv)).clamp(-1.0, 1.0).acos().to_degrees())
}

/// Volumetric skew of a tetrahedron: 1 - V / V_eq(R), where R is the
/// circumsphere radius and V_eq(R) = 8 R^3 / (9 sqrt(3)) is the volume of
/// the regular tet with the same circumradius. 0 = regular, 1 = flat.
/// Coplanar corners return exactly 1.
pub fn vol_skew_tet(corners: &[Point; 4]) -> f64 {
    let volume = tet_volume(corners).abs();
    if volume == 0.0 {
        return 1.0;
    }
    let Some(radius) = circumradius(corners) else {
        return 1.0;
    };
    let v_eq = 8.0 * radius.powi(3) / (9.0 * 3f64.sqrt());
    (1.0 - volume / v_eq).clamp(0.0, 1.0)
}

/// Signed volume of a tet (positive for right-handed ordering).
pub fn tet_volume(corners: &[Point; 4]) -> f64 {
    let a = corners[1] - corners[0];
    let b = corners[2] - corners[0];
    let c = corners[3] - corners[0];
    a.dot(&b.cross(&c)) / 6.0
}

/// Radius of the sphere through the four corners, `None` if they are
/// (numerically) coplanar.
fn circumradius(corners: &[Point; 4]) -> Option<f64> {
    let a = corners[0];
    let rows: Vec<_> = (1..4).map(|i| corners[i] - a).collect();
    let m = Matrix3::from_rows(&[
        rows[0].transpose(),
        rows[1].transpose(),
        rows[2].transpose(),
    ]);
    let rhs = nalgebra::Vector3::new(
        0.5 * rows[0].norm_squared(),
        0.5 * rows[1].norm_squared(),
        0.5 * rows[2].norm_squared(),
    );
    let center = m.lu().solve(&rhs)?;
    Some(center.norm())
}
