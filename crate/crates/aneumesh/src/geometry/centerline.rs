//! Centerline extraction by planar slicing.
//!
//! Planes orthogonal to a user-supplied axis hint cut the surface into
//! closed polygons; the area-weighted centroid of each polygon is a
//! centerline point. Frames are parallel-transported from the first slice
//! (rotation-minimizing), which keeps ring twist bounded by the bend of
//! the tangent itself.

use super::{Centerline, Point, TriSurface, Vec3};
use crate::error::MeshError;
use nalgebra::UnitQuaternion;
use std::collections::HashMap;

/// Vertices exactly on a slicing plane are nudged by +1e-9 mm along the
/// axis so every intersection point lies strictly inside a mesh edge.
const PLANE_EPS: f64 = 1e-9;

/// Extract `n_slices` centerline points between the surface's axial extremes.
///
/// Two-pass: centroids are first collected along the axis hint, a refined
/// axis is fit to the interior centroids (the end slices of a tilted
/// vessel cut through the caps and would drag the fit), then the surface
/// is re-sliced along the refined axis.
pub fn extract_centerline(
    surface: &TriSurface,
    axis_hint: &Vec3,
    n_slices: usize,
) -> Result<Centerline, MeshError> {
    if n_slices < 2 {
        return Err(MeshError::InvalidParameter("n_slices must be >= 2".into()));
    }
    let hint = axis_hint.normalize();
    let first_pass = slice_centroids(surface, &hint, n_slices)?;
    let axis = fit_direction(&first_pass, &hint);
    let points = slice_centroids(surface, &axis, n_slices)?;

    let tangents = polyline_tangents(&points);
    let frames = transported_frames(&tangents);
    Ok(Centerline {
        points,
        tangents,
        frames,
    })
}

/// Area-weighted slice-polygon centroids at `n_slices` stations along `axis`.
fn slice_centroids(
    surface: &TriSurface,
    axis: &Vec3,
    n_slices: usize,
) -> Result<Vec<Point>, MeshError> {
    let (lo, hi) = surface.extent_along(axis);
    let extent = hi - lo;
    if !(extent > 0.0) {
        return Err(MeshError::EmptySurface(
            "surface has zero extent along axis hint".into(),
        ));
    }
    let margin = 1e-6 * extent;
    let (u, v) = plane_basis(axis);
    let mut points = Vec::with_capacity(n_slices);
    for i in 0..n_slices {
        let s = lo + margin + (extent - 2.0 * margin) * i as f64 / (n_slices - 1) as f64;
        let polygon = slice_polygon(surface, axis, s, i)?;
        points.push(polygon_centroid(&polygon, axis, &u, &v));
    }
    Ok(points)
}

/// Dominant direction of the interior centroids (principal component),
/// oriented along the hint. The outer quarter of slices at each end is
/// dropped so cap-crossing slices do not bias the fit.
fn fit_direction(points: &[Point], hint: &Vec3) -> Vec3 {
    let trim = points.len() / 4;
    let interior = &points[trim..points.len() - trim];
    let n = interior.len() as f64;
    let mean = interior
        .iter()
        .fold(Vec3::zeros(), |acc, p| acc + p.coords)
        / n;
    let mut cov = nalgebra::Matrix3::<f64>::zeros();
    for p in interior {
        let d = p.coords - mean;
        cov += d * d.transpose();
    }
    let eig = cov.symmetric_eigen();
    let imax = eig.eigenvalues.imax();
    if eig.eigenvalues[imax] <= 0.0 {
        return *hint;
    }
    let dir: Vec3 = eig.eigenvectors.column(imax).into();
    let dir = dir.normalize();
    if dir.dot(hint) < 0.0 {
        -dir
    } else {
        dir
    }
}

/// Cut the surface with the plane dot(p, axis) = s; returns the single
/// closed polygon, ordered. `slice_index` is only used for error reporting.
pub(crate) fn slice_polygon(
    surface: &TriSurface,
    axis: &Vec3,
    s: f64,
    slice_index: usize,
) -> Result<Vec<Point>, MeshError> {
    let dist: Vec<f64> = surface
        .vertices
        .iter()
        .map(|p| {
            let d = p.coords.dot(axis) - s;
            if d.abs() < PLANE_EPS {
                PLANE_EPS
            } else {
                d
            }
        })
        .collect();

    type EdgeKey = (usize, usize);
    let edge_key = |a: usize, b: usize| -> EdgeKey { (a.min(b), a.max(b)) };
    let cross_point = |a: usize, b: usize| -> Point {
        let t = dist[a] / (dist[a] - dist[b]);
        surface.vertices[a] + (surface.vertices[b] - surface.vertices[a]) * t
    };

    // Each cut triangle contributes one segment whose endpoints live on two
    // of its edges; chaining by edge identity is exact (no coordinate hash).
    let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    let mut points: HashMap<EdgeKey, Point> = HashMap::new();
    for t in &surface.triangles {
        let mut crossing: Vec<EdgeKey> = Vec::with_capacity(2);
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            if dist[a].signum() != dist[b].signum() {
                let key = edge_key(a, b);
                points.entry(key).or_insert_with(|| cross_point(a, b));
                crossing.push(key);
            }
        }
        if crossing.len() == 2 {
            segments.push((crossing[0], crossing[1]));
        }
    }
    if segments.is_empty() {
        return Err(MeshError::MultiBranchSlice {
            slice: slice_index,
            loops: 0,
        });
    }

    let mut adjacency: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (i, (a, b)) in segments.iter().enumerate() {
        adjacency.entry(*a).or_default().push(i);
        adjacency.entry(*b).or_default().push(i);
    }
    if adjacency.values().any(|v| v.len() != 2) {
        return Err(MeshError::MultiBranchSlice {
            slice: slice_index,
            loops: 0,
        });
    }

    // Walk one loop from segment 0; it must consume every segment.
    let mut polygon = Vec::new();
    let mut used = vec![false; segments.len()];
    let mut current = 0usize;
    let mut entry = segments[0].0;
    loop {
        used[current] = true;
        let (a, b) = segments[current];
        let exit = if entry == a { b } else { a };
        polygon.push(points[&exit]);
        let next = adjacency[&exit]
            .iter()
            .copied()
            .find(|&i| !used[i] && i != current);
        match next {
            Some(i) => {
                current = i;
                entry = exit;
            }
            None => break,
        }
    }
    if used.iter().any(|&u| !u) {
        // Remaining segments form at least one more loop.
        return Err(MeshError::MultiBranchSlice {
            slice: slice_index,
            loops: 2,
        });
    }
    Ok(polygon)
}

/// Orthonormal basis spanning the plane perpendicular to `axis`.
fn plane_basis(axis: &Vec3) -> (Vec3, Vec3) {
    let pick = if axis.x.abs() < 0.9 {
        Vec3::x()
    } else {
        Vec3::y()
    };
    let u = (pick - axis * pick.dot(axis)).normalize();
    let v = axis.cross(&u);
    (u, v)
}

/// Area-weighted centroid of a planar closed polygon.
fn polygon_centroid(polygon: &[Point], axis: &Vec3, u: &Vec3, v: &Vec3) -> Point {
    let n = polygon.len();
    let xs: Vec<f64> = polygon.iter().map(|p| p.coords.dot(u)).collect();
    let ys: Vec<f64> = polygon.iter().map(|p| p.coords.dot(v)).collect();
    let mut area2 = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..n {
        let j = (i + 1) % n;
        let w = xs[i] * ys[j] - xs[j] * ys[i];
        area2 += w;
        cx += (xs[i] + xs[j]) * w;
        cy += (ys[i] + ys[j]) * w;
    }
    let (cx, cy) = if area2.abs() > 1e-30 {
        (cx / (3.0 * area2), cy / (3.0 * area2))
    } else {
        // Degenerate sliver polygon: fall back to the vertex mean.
        (
            xs.iter().sum::<f64>() / n as f64,
            ys.iter().sum::<f64>() / n as f64,
        )
    };
    let s = polygon.iter().map(|p| p.coords.dot(axis)).sum::<f64>() / n as f64;
    Point::origin() + u * cx + v * cy + axis * s
}

fn polyline_tangents(points: &[Point]) -> Vec<Vec3> {
    let n = points.len();
    (0..n)
        .map(|i| {
            let d = if i == 0 {
                points[1] - points[0]
            } else if i == n - 1 {
                points[n - 1] - points[n - 2]
            } else {
                points[i + 1] - points[i - 1]
            };
            d.normalize()
        })
        .collect()
}

/// Discrete parallel transport: rotate each frame by the minimal rotation
/// taking the previous tangent to the current one.
fn transported_frames(tangents: &[Vec3]) -> Vec<(Vec3, Vec3)> {
    let mut frames = Vec::with_capacity(tangents.len());
    let t0 = tangents[0];
    let pick = if t0.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let mut normal = (pick - t0 * pick.dot(&t0)).normalize();
    frames.push((normal, t0.cross(&normal)));
    for i in 1..tangents.len() {
        let rot = UnitQuaternion::rotation_between(&tangents[i - 1], &tangents[i])
            .unwrap_or_else(UnitQuaternion::identity);
        normal = rot * normal;
        // Guard against drift from the rotation chain.
        normal = (normal - tangents[i] * normal.dot(&tangents[i])).normalize();
        frames.push((normal, tangents[i].cross(&normal)));
    }
    frames
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::synth::{synth_aaa, SyntheticAaaSpec};
    use approx::assert_relative_eq;

    #[test]
    fn straight_cylinder_centerline_on_axis() {
        let spec = SyntheticAaaSpec {
            bulge_amplitude: 0.0,
            base_radius: 10.0,
            length: 100.0,
            ..Default::default()
        };
        let (wall, _) = synth_aaa(&spec).unwrap();
        let cl = extract_centerline(&wall, &Vec3::z(), 20).unwrap();
        assert_eq!(cl.len(), 20);
        for p in &cl.points {
            assert!(p.x.abs() < 1e-3 * 10.0 && p.y.abs() < 1e-3 * 10.0);
        }
    }

    #[test]
    fn axisymmetric_bulge_centerline_on_axis() {
        let spec = SyntheticAaaSpec::default();
        let (wall, _) = synth_aaa(&spec).unwrap();
        let cl = extract_centerline(&wall, &Vec3::z(), 30).unwrap();
        for p in &cl.points {
            assert!(p.x.abs() < 1e-3 * spec.base_radius);
            assert!(p.y.abs() < 1e-3 * spec.base_radius);
        }
    }

    #[test]
    fn tilted_cylinder_centerline_follows_true_axis() {
        // Cylinder along z, then rotated 30 degrees about y; hint stays z.
        let spec = SyntheticAaaSpec {
            bulge_amplitude: 0.0,
            base_radius: 10.0,
            length: 100.0,
            ..Default::default()
        };
        let (mut wall, _) = synth_aaa(&spec).unwrap();
        let rot = UnitQuaternion::from_axis_angle(
            &nalgebra::Unit::new_normalize(Vec3::y()),
            30f64.to_radians(),
        );
        for v in wall.vertices.iter_mut() {
            *v = rot * *v;
        }
        let cl = extract_centerline(&wall, &Vec3::z(), 15).unwrap();
        // Fit residual against the known rotated axis through the origin.
        let axis = rot * Vec3::z();
        for p in &cl.points {
            let along = p.coords.dot(&axis);
            let residual = (p.coords - axis * along).norm();
            assert!(residual < 0.01 * 10.0, "residual {residual}");
        }
    }

    #[test]
    fn frame_twist_bounded_by_tangent_bend() {
        let spec = SyntheticAaaSpec {
            asymmetry_offset: 4.0,
            ..Default::default()
        };
        let (wall, _) = synth_aaa(&spec).unwrap();
        let cl = extract_centerline(&wall, &Vec3::z(), 40).unwrap();
        for i in 1..cl.len() {
            let bend = cl.tangents[i - 1]
                .dot(&cl.tangents[i])
                .clamp(-1.0, 1.0)
                .acos();
            let twist = cl.frames[i - 1]
                .0
                .dot(&cl.frames[i].0)
                .clamp(-1.0, 1.0)
                .acos();
            assert!(twist <= bend + 1e-9, "twist {twist} > bend {bend}");
        }
    }

    #[test]
    fn frames_are_right_handed_orthonormal() {
        let spec = SyntheticAaaSpec::default();
        let (wall, _) = synth_aaa(&spec).unwrap();
        let cl = extract_centerline(&wall, &Vec3::z(), 10).unwrap();
        for i in 0..cl.len() {
            let t = cl.tangents[i];
            let (n, b) = cl.frames[i];
            assert_relative_eq!(n.norm(), 1.0, epsilon = 1e-12);
            assert_relative_eq!(n.dot(&t), 0.0, epsilon = 1e-12);
            assert_relative_eq!(b.dot(&t), 0.0, epsilon = 1e-12);
            assert_relative_eq!((n.cross(&b) - t).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn two_disjoint_tubes_is_multibranch_error() {
        let spec = SyntheticAaaSpec {
            bulge_amplitude: 0.0,
            base_radius: 5.0,
            lumen_radius: 2.0,
            length: 50.0,
            ..Default::default()
        };
        let (a, _) = synth_aaa(&spec).unwrap();
        let mut combined = a.clone();
        let offset = combined.vertices.len();
        for v in &a.vertices {
            combined.vertices.push(Point::new(v.x + 30.0, v.y, v.z));
        }
        for t in &a.triangles {
            combined
                .triangles
                .push([t[0] + offset, t[1] + offset, t[2] + offset]);
        }
        match extract_centerline(&combined, &Vec3::z(), 5) {
            Err(MeshError::MultiBranchSlice { .. }) => {}
            other => panic!("expected MultiBranchSlice, got {other:?}"),
        }
    }
}
