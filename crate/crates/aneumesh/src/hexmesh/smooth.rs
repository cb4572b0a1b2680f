//! Lattice-aware Laplace smoothing of a swept wall mesh.
//!
//! Nodes are smoothed in their slice frame's polar coordinates: the angular
//! deviation from the nominal lattice angle relaxes for every non-fixed
//! node, radii relax only for interior layers. Inner/outer surface nodes
//! therefore move only tangentially to their surface, preserving both
//! surface radii (and hence the wall thickness) exactly; top and bottom
//! rings stay fixed. After every iteration the minimum scaled Jacobian is
//! checked; an iteration that would reduce it below the pre-smoothing
//! value rolls back and smoothing stops.

use super::HexWallMesh;
use crate::error::MeshError;
use crate::geometry::Point;
use crate::par;
use crate::quality::scaled_jacobian_hex;

/// Smoothing outcome: the (possibly partially) smoothed mesh and the
/// number of iterations actually applied.
#[derive(Debug, Clone)]
pub struct SmoothOutcome {
    pub mesh: HexWallMesh,
    pub iterations_applied: usize,
    pub rolled_back: bool,
}

pub fn laplace_smooth_mesh(
    mesh: &HexWallMesh,
    iterations: usize,
    lambda: f64,
) -> Result<SmoothOutcome, MeshError> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(MeshError::InvalidParameter(
            "lambda must be in (0, 1]".into(),
        ));
    }
    let (ns, nt, nl) = (mesh.n_slices, mesh.n_theta, mesh.n_layers);
    let two_pi = 2.0 * std::f64::consts::PI;
    let nominal = |i: usize| two_pi * i as f64 / nt as f64;

    // Polar decomposition of every node in its slice frame.
    let mut radius = vec![0.0f64; mesh.nodes.len()];
    let mut dtheta = vec![0.0f64; mesh.nodes.len()];
    for j in 0..ns {
        let (c, n, b) = mesh.slice_frames[j];
        for i in 0..nt {
            for k in 0..=nl {
                let id = mesh.node_id(j, i, k);
                let d = mesh.nodes[id] - c;
                radius[id] = d.norm();
                let theta = d.dot(&b).atan2(d.dot(&n));
                let mut dev = theta - nominal(i);
                while dev > std::f64::consts::PI {
                    dev -= two_pi;
                }
                while dev < -std::f64::consts::PI {
                    dev += two_pi;
                }
                dtheta[id] = dev;
            }
        }
    }

    let min_jacobian = |nodes: &[Point]| -> (f64, usize) {
        let per: Vec<f64> = par::map_slice(&mesh.hexes, |h| {
            let corners: [Point; 8] = std::array::from_fn(|i| nodes[h[i]]);
            scaled_jacobian_hex(&corners)
        });
        let mut min = f64::INFINITY;
        let mut at = 0;
        for (e, &v) in per.iter().enumerate() {
            if v < min {
                min = v;
                at = e;
            }
        }
        (min, at)
    };

    let rebuild = |radius: &[f64], dtheta: &[f64]| -> Vec<Point> {
        let mut nodes = mesh.nodes.clone();
        for j in 1..ns - 1 {
            let (c, n, b) = mesh.slice_frames[j];
            for i in 0..nt {
                for k in 0..=nl {
                    let id = mesh.node_id(j, i, k);
                    let a = nominal(i) + dtheta[id];
                    nodes[id] = c + (n * a.cos() + b * a.sin()) * radius[id];
                }
            }
        }
        nodes
    };

    let (initial_min, _) = min_jacobian(&mesh.nodes);
    let mut result = mesh.clone();
    let mut applied = 0usize;
    let mut rolled_back = false;

    for iter in 0..iterations {
        let prev_r = radius.clone();
        let prev_t = dtheta.clone();
        for j in 1..ns - 1 {
            for i in 0..nt {
                for k in 0..=nl {
                    let id = mesh.node_id(j, i, k);
                    let mut neighbors = vec![
                        mesh.node_id(j, (i + 1) % nt, k),
                        mesh.node_id(j, (i + nt - 1) % nt, k),
                        mesh.node_id(j - 1, i, k),
                        mesh.node_id(j + 1, i, k),
                    ];
                    if k > 0 {
                        neighbors.push(mesh.node_id(j, i, k - 1));
                    }
                    if k < nl {
                        neighbors.push(mesh.node_id(j, i, k + 1));
                    }
                    let mean_t =
                        neighbors.iter().map(|&n| prev_t[n]).sum::<f64>() / neighbors.len() as f64;
                    dtheta[id] = (1.0 - lambda) * prev_t[id] + lambda * mean_t;
                    if k > 0 && k < nl {
                        let mean_r = neighbors.iter().map(|&n| prev_r[n]).sum::<f64>()
                            / neighbors.len() as f64;
                        radius[id] = (1.0 - lambda) * prev_r[id] + lambda * mean_r;
                    }
                }
            }
        }

        let nodes = rebuild(&radius, &dtheta);
        let (min_j, worst) = min_jacobian(&nodes);
        if min_j < initial_min - 1e-12 {
            if applied == 0 && min_j <= 0.0 {
                return Err(MeshError::SmoothingRollback {
                    iteration: iter,
                    element: worst,
                    jacobian: min_j,
                });
            }
            rolled_back = true;
            break;
        }
        result.nodes = nodes;
        applied += 1;
    }

    Ok(SmoothOutcome {
        mesh: result,
        iterations_applied: applied,
        rolled_back,
    })
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::super::{sweep, MeshParams};
    use super::*;

    #[test]
    fn perfect_cylinder_is_fixed_point() {
        let profiles = cylinder_profiles(10.0, 30.0, 11, 16);
        let mesh = sweep(&profiles, &MeshParams::default()).unwrap();
        let out = laplace_smooth_mesh(&mesh, 5, 0.5).unwrap();
        assert_eq!(out.iterations_applied, 5);
        for (a, b) in mesh.nodes.iter().zip(out.mesh.nodes.iter()) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn perturbed_interior_node_relaxes_monotonically() {
        let profiles = cylinder_profiles(10.0, 30.0, 11, 16);
        let mut mesh = sweep(&profiles, &MeshParams::default()).unwrap();
        // Perturb an interior-layer node tangentially by ~0.1 mm.
        let id = mesh.node_id(5, 3, 1);
        let home = mesh.nodes[id];
        let tangent = crate::geometry::Vec3::new(-home.y, home.x, 0.0).normalize();
        mesh.nodes[id] += tangent * 0.1;

        let mut current = mesh.clone();
        let mut last = 0.1;
        for _ in 0..6 {
            let out = laplace_smooth_mesh(&current, 1, 0.5).unwrap();
            current = out.mesh;
            let d = (current.nodes[id] - home).norm();
            assert!(d < last, "displacement {d} did not shrink from {last}");
            last = d;
        }
    }

    #[test]
    fn min_jacobian_never_degrades_on_bulged_tube() {
        let profiles = bulged_profiles(12.5, 15.0, 6.0, 50.0, 41, 32);
        let mesh = sweep(&profiles, &MeshParams::default()).unwrap();
        let before = mesh
            .hexes
            .iter()
            .map(|h| {
                let corners: [crate::geometry::Point; 8] =
                    std::array::from_fn(|i| mesh.nodes[h[i]]);
                scaled_jacobian_hex(&corners)
            })
            .fold(f64::INFINITY, f64::min);
        let out = laplace_smooth_mesh(&mesh, 10, 0.5).unwrap();
        let after = out
            .mesh
            .hexes
            .iter()
            .map(|h| {
                let corners: [crate::geometry::Point; 8] =
                    std::array::from_fn(|i| out.mesh.nodes[h[i]]);
                scaled_jacobian_hex(&corners)
            })
            .fold(f64::INFINITY, f64::min);
        assert!(after >= before - 1e-12, "min SJ degraded: {before} -> {after}");
    }

    #[test]
    fn lambda_out_of_range_rejected() {
        let profiles = cylinder_profiles(10.0, 30.0, 5, 12);
        let mesh = sweep(&profiles, &MeshParams::default()).unwrap();
        assert!(laplace_smooth_mesh(&mesh, 1, 0.0).is_err());
        assert!(laplace_smooth_mesh(&mesh, 1, 1.5).is_err());
    }
}
