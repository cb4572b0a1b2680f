//! Radial profile sampling by ray casting, and Laplacian profile smoothing.

use super::{uniform_angles, Centerline, Point, SliceProfile, TriSurface, Vec3};
use crate::error::MeshError;
use crate::par;

/// Sample `n_theta` radii per centerline point by casting rays in the
/// frame plane and taking each ray's first surface intersection.
///
/// Slices are processed in parallel (with the `parallel` feature); output
/// order and values are independent of thread count.
pub fn slice_profiles(
    surface: &TriSurface,
    centerline: &Centerline,
    n_theta: usize,
) -> Result<Vec<SliceProfile>, MeshError> {
    if n_theta < 8 {
        return Err(MeshError::InvalidParameter("n_theta must be >= 8".into()));
    }
    let angles = uniform_angles(n_theta);

    let results: Vec<Result<SliceProfile, MeshError>> =
        par::map_indexed(centerline.len(), |slice| {
            let center = centerline.points[slice];
            let tangent = centerline.tangents[slice];
            let (normal, binormal) = centerline.frames[slice];

            // Only triangles straddling the slice plane can be hit by an
            // in-plane ray; prefilter with signed distances to the plane.
            let s0 = center.coords.dot(&tangent);
            let candidates: Vec<usize> = surface
                .triangles
                .iter()
                .enumerate()
                .filter(|(_, t)| {
                    let mut lo = f64::INFINITY;
                    let mut hi = f64::NEG_INFINITY;
                    for &v in t.iter() {
                        let d = surface.vertices[v].coords.dot(&tangent) - s0;
                        lo = lo.min(d);
                        hi = hi.max(d);
                    }
                    lo <= 1e-9 && hi >= -1e-9
                })
                .map(|(i, _)| i)
                .collect();

            let mut radii = Vec::with_capacity(n_theta);
            for (k, &a) in angles.iter().enumerate() {
                let dir = normal * a.cos() + binormal * a.sin();
                match first_hit(surface, &candidates, &center, &dir) {
                    Some(t) => radii.push(t),
                    None => {
                        return Err(MeshError::NonStarShapedSlice {
                            slice,
                            angle_deg: a.to_degrees(),
                        })
                    }
                }
                let _ = k;
            }
            Ok(SliceProfile {
                center,
                normal,
                binormal,
                angles: angles.clone(),
                radii,
            })
        });

    results.into_iter().collect()
}

/// Distance along `dir` to the first triangle intersection, if any.
fn first_hit(
    surface: &TriSurface,
    candidates: &[usize],
    origin: &Point,
    dir: &Vec3,
) -> Option<f64> {
    let mut best = f64::INFINITY;
    for &ti in candidates {
        let t = &surface.triangles[ti];
        if let Some(hit) = ray_triangle(
            origin,
            dir,
            &surface.vertices[t[0]],
            &surface.vertices[t[1]],
            &surface.vertices[t[2]],
        ) {
            if hit > 1e-9 && hit < best {
                best = hit;
            }
        }
    }
    best.is_finite().then_some(best)
}

/// Moller-Trumbore with a small boundary tolerance so rays grazing shared
/// edges still register on at least one of the incident triangles.
fn ray_triangle(origin: &Point, dir: &Vec3, a: &Point, b: &Point, c: &Point) -> Option<f64> {
    const EPS: f64 = 1e-12;
    let e1 = b - a;
    let e2 = c - a;
    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < EPS {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - a;
    let u = s.dot(&p) * inv;
    if !(-EPS..=1.0 + EPS).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = dir.dot(&q) * inv;
    if v < -EPS || u + v > 1.0 + EPS {
        return None;
    }
    let t = e2.dot(&q) * inv;
    (t > 0.0).then_some(t)
}

/// Result of profile smoothing.
#[derive(Debug, Clone)]
pub struct SmoothedProfiles {
    pub profiles: Vec<SliceProfile>,
    /// Signed change of enclosed cross-section area per slice (mm^2).
    pub area_change: Vec<f64>,
}

/// Laplace-smooth the radius field over the (theta, z) grid.
///
/// Each radius moves toward the mean of its four neighbors (wrap in theta,
/// clamp in z) by `lambda` per iteration; the first and last slices are
/// held fixed.
pub fn smooth_profiles(
    profiles: &[SliceProfile],
    iterations: usize,
    lambda: f64,
) -> Result<SmoothedProfiles, MeshError> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(MeshError::InvalidParameter(
            "lambda must be in (0, 1]".into(),
        ));
    }
    let n_slices = profiles.len();
    if n_slices < 2 {
        return Err(MeshError::InvalidParameter(
            "need at least 2 profiles".into(),
        ));
    }
    let n_theta = profiles[0].n_theta();
    if profiles.iter().any(|p| p.n_theta() != n_theta) {
        return Err(MeshError::InvalidParameter(
            "profiles must share n_theta".into(),
        ));
    }

    let enclosed_area = |radii: &[f64]| -> f64 {
        let dtheta = 2.0 * std::f64::consts::PI / n_theta as f64;
        0.5 * dtheta * radii.iter().map(|r| r * r).sum::<f64>()
    };

    let mut radii: Vec<Vec<f64>> = profiles.iter().map(|p| p.radii.clone()).collect();
    let initial_area: Vec<f64> = radii.iter().map(|r| enclosed_area(r)).collect();

    for _ in 0..iterations {
        let prev = radii.clone();
        for s in 1..n_slices - 1 {
            for i in 0..n_theta {
                let left = prev[s][(i + n_theta - 1) % n_theta];
                let right = prev[s][(i + 1) % n_theta];
                let below = prev[s - 1][i];
                let above = prev[s + 1][i];
                let mean = 0.25 * (left + right + below + above);
                radii[s][i] = (1.0 - lambda) * prev[s][i] + lambda * mean;
            }
        }
    }

    let area_change: Vec<f64> = radii
        .iter()
        .zip(initial_area.iter())
        .map(|(r, a0)| enclosed_area(r) - a0)
        .collect();
    let profiles = profiles
        .iter()
        .zip(radii)
        .map(|(p, r)| SliceProfile {
            radii: r,
            ..p.clone()
        })
        .collect();
    Ok(SmoothedProfiles {
        profiles,
        area_change,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::centerline::extract_centerline;
    use crate::geometry::synth::{synth_aaa, SyntheticAaaSpec};
    use approx::assert_relative_eq;

    fn cylinder_profiles(n_slices: usize, n_theta: usize) -> Vec<SliceProfile> {
        let spec = SyntheticAaaSpec {
            bulge_amplitude: 0.0,
            base_radius: 10.0,
            length: 100.0,
            ..Default::default()
        };
        let (wall, _) = synth_aaa(&spec).unwrap();
        let cl = extract_centerline(&wall, &Vec3::z(), n_slices).unwrap();
        slice_profiles(&wall, &cl, n_theta).unwrap()
    }

    #[test]
    fn cylinder_radii_all_ten() {
        for p in cylinder_profiles(10, 16) {
            for &r in &p.radii {
                assert_relative_eq!(r, 10.0, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn bulge_apex_radii_match_analytic_profile() {
        let spec = SyntheticAaaSpec::default();
        let (wall, _) = synth_aaa(&spec).unwrap();
        // Odd slice count puts one slice at the bulge center exactly.
        let cl = extract_centerline(&wall, &Vec3::z(), 51).unwrap();
        let profiles = slice_profiles(&wall, &cl, 32).unwrap();
        let apex = &profiles[25];
        let expected = spec.radius_at(apex.center.z);
        for &r in &apex.radii {
            // Tessellation chord error bounds the deviation.
            assert_relative_eq!(r, expected, max_relative = 2.0 / spec.n_theta_facets as f64);
        }
    }

    #[test]
    fn elliptic_section_matches_polar_ellipse() {
        // Scale a cylinder into an elliptic tube (semi-axes 10 and 15).
        let spec = SyntheticAaaSpec {
            bulge_amplitude: 0.0,
            base_radius: 10.0,
            length: 100.0,
            n_theta_facets: 256,
            ..Default::default()
        };
        let (mut wall, _) = synth_aaa(&spec).unwrap();
        for v in wall.vertices.iter_mut() {
            v.y *= 1.5;
        }
        let cl = extract_centerline(&wall, &Vec3::z(), 5).unwrap();
        let profiles = slice_profiles(&wall, &cl, 24).unwrap();
        let (a, b) = (10.0, 15.0);
        let p = &profiles[2];
        for k in 0..p.n_theta() {
            // The transported frame may be rotated relative to world x/y;
            // recover the polar angle from the actual ray direction.
            let dir = p.ray_dir(k);
            let theta = dir.y.atan2(dir.x);
            let expected = a * b
                / ((b * theta.cos()).powi(2) + (a * theta.sin()).powi(2)).sqrt();
            assert_relative_eq!(p.radii[k], expected, max_relative = 2.0 / 256.0);
        }
    }

    #[test]
    fn ray_missing_surface_is_star_shape_error() {
        // A centerline point far outside the tube cannot see it in all
        // directions.
        let spec = SyntheticAaaSpec {
            bulge_amplitude: 0.0,
            base_radius: 10.0,
            length: 100.0,
            ..Default::default()
        };
        let (wall, _) = synth_aaa(&spec).unwrap();
        let mut cl = extract_centerline(&wall, &Vec3::z(), 5).unwrap();
        cl.points[2] = Point::new(50.0, 0.0, cl.points[2].z);
        match slice_profiles(&wall, &cl, 16) {
            Err(MeshError::NonStarShapedSlice { slice: 2, .. }) => {}
            other => panic!("expected NonStarShapedSlice, got {other:?}"),
        }
    }

    #[test]
    fn smoothing_constant_profiles_is_fixed_point() {
        let profiles = cylinder_profiles(8, 16);
        let smoothed = smooth_profiles(&profiles, 10, 0.5).unwrap();
        for (p, q) in profiles.iter().zip(smoothed.profiles.iter()) {
            for (a, b) in p.radii.iter().zip(q.radii.iter()) {
                assert_relative_eq!(a, b, epsilon = 1e-9);
            }
        }
        for dc in smoothed.area_change {
            assert!(dc.abs() < 1e-9);
        }
    }

    #[test]
    fn spike_amplitude_decreases_monotonically() {
        let mut profiles = cylinder_profiles(9, 16);
        profiles[4].radii[3] += 2.0;
        let mut last = 2.0;
        let mut current = profiles;
        for _ in 0..10 {
            let out = smooth_profiles(&current, 1, 0.5).unwrap();
            current = out.profiles;
            let spike = current[4].radii[3] - 10.0;
            assert!(spike < last && spike > 0.0, "spike {spike} vs {last}");
            last = spike;
        }
    }

    #[test]
    fn lambda_zero_rejected() {
        let profiles = cylinder_profiles(4, 16);
        assert!(smooth_profiles(&profiles, 1, 0.0).is_err());
    }
}
