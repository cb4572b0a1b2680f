//! Stress recovery, principal values, and percentile statistics.

use super::assemble::FeModel;
use super::element::{hex8_stress_bbar, tet4_stress};
use super::MaterialSpec;
use crate::error::FemError;
use crate::geometry::Point;
use crate::par;
use nalgebra::SVector;
use serde::Serialize;

/// Nodal stress field recovered by volume-weighted averaging of the
/// element-average stresses of adjacent elements.
#[derive(Debug, Clone)]
pub struct StressField {
    /// Per-node symmetric tensor (sxx, syy, szz, txy, tyz, tzx), MPa.
    pub tensor: Vec<[f64; 6]>,
    /// Per-node maximum principal stress, MPa.
    pub max_principal: Vec<f64>,
}

/// Largest eigenvalue of a symmetric 3x3 tensor given as
/// (sxx, syy, szz, txy, tyz, tzx), by the closed-form trigonometric
/// solution.
pub fn max_principal(s: &[f64; 6]) -> f64 {
    let [sxx, syy, szz, txy, tyz, tzx] = *s;
    let p1 = txy * txy + tyz * tyz + tzx * tzx;
    if p1 == 0.0 {
        return sxx.max(syy).max(szz);
    }
    let q = (sxx + syy + szz) / 3.0;
    let p2 = (sxx - q).powi(2) + (syy - q).powi(2) + (szz - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    // det((A - qI) / p) / 2
    let (bxx, byy, bzz) = ((sxx - q) / p, (syy - q) / p, (szz - q) / p);
    let (bxy, byz, bzx) = (txy / p, tyz / p, tzx / p);
    let det = bxx * (byy * bzz - byz * byz) - bxy * (bxy * bzz - byz * bzx)
        + bzx * (bxy * byz - byy * bzx);
    let r = (det / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    q + 2.0 * p * phi.cos()
}

/// Recover the nodal stress field from a converged displacement vector.
///
/// Element stresses are volume-averaged constants (B-bar-consistent for
/// hexes); nodes average adjacent elements weighted by element volume.
pub fn recover_stress(
    model: &FeModel,
    u: &[f64],
    wall_material: &MaterialSpec,
    ilt_material: Option<&MaterialSpec>,
) -> Result<StressField, FemError> {
    let n = model.nodes.len();
    let mut weighted = vec![[0.0f64; 6]; n];
    let mut weights = vec![0.0f64; n];

    let d_wall = super::element::elasticity_matrix(
        wall_material.youngs_modulus,
        wall_material.poisson_ratio,
    );
    let hex_results: Vec<Result<([f64; 6], f64), FemError>> =
        par::map_slice(&model.hexes, |h| {
            let corners: [Point; 8] = h.map(|n| model.nodes[n]);
            let mut ue = SVector::<f64, 24>::zeros();
            for (a, &node) in h.iter().enumerate() {
                for c in 0..3 {
                    ue[3 * a + c] = u[3 * node + c];
                }
            }
            let (sigma, vol) = hex8_stress_bbar(&corners, &d_wall, &ue, 0)?;
            Ok((std::array::from_fn(|i| sigma[i]), vol))
        });
    for (h, res) in model.hexes.iter().zip(hex_results) {
        let (sigma, vol) = res?;
        for &node in h {
            for i in 0..6 {
                weighted[node][i] += sigma[i] * vol;
            }
            weights[node] += vol;
        }
    }

    if !model.tets.is_empty() {
        let mat = ilt_material.ok_or_else(|| {
            FemError::InvalidInput("thrombus elements present but no thrombus material".into())
        })?;
        let d_ilt = super::element::elasticity_matrix(mat.youngs_modulus, mat.poisson_ratio);
        let tet_results: Vec<Result<([f64; 6], f64), FemError>> =
            par::map_slice(&model.tets, |t| {
                let corners: [Point; 4] = t.map(|n| model.nodes[n]);
                let mut ue = SVector::<f64, 12>::zeros();
                for (a, &node) in t.iter().enumerate() {
                    for c in 0..3 {
                        ue[3 * a + c] = u[3 * node + c];
                    }
                }
                let (sigma, vol) = tet4_stress(&corners, &d_ilt, &ue, 0)?;
                Ok((std::array::from_fn(|i| sigma[i]), vol))
            });
        for (t, res) in model.tets.iter().zip(tet_results) {
            let (sigma, vol) = res?;
            for &node in t {
                for i in 0..6 {
                    weighted[node][i] += sigma[i] * vol;
                }
                weights[node] += vol;
            }
        }
    }

    let tensor: Vec<[f64; 6]> = weighted
        .iter()
        .zip(&weights)
        .map(|(w, &wt)| {
            if wt > 0.0 {
                std::array::from_fn(|i| w[i] / wt)
            } else {
                [0.0; 6]
            }
        })
        .collect();
    let max_principal = tensor.iter().map(max_principal).collect();
    Ok(StressField {
        tensor,
        max_principal,
    })
}

/// Percentile statistics of the nodal maximum principal stress.
#[derive(Debug, Clone, Serialize)]
pub struct StressStats {
    pub peak_mpa: f64,
    pub p99_mpa: f64,
    /// Value at each integer percentile 0..=100 (linear interpolation
    /// between order statistics).
    pub percentile_curve: Vec<f64>,
}

/// Percentile by linear interpolation between order statistics of a
/// sorted slice: rank q maps to position q/100 * (n-1).
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = (q / 100.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = pos - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    }
}

pub fn stress_stats(values: &[f64]) -> Result<StressStats, FemError> {
    if values.is_empty() {
        return Err(FemError::InvalidInput("empty stress field".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let percentile_curve: Vec<f64> = (0..=100)
        .map(|q| percentile_sorted(&sorted, q as f64))
        .collect();
    Ok(StressStats {
        peak_mpa: *sorted.last().unwrap(),
        p99_mpa: percentile_sorted(&sorted, 99.0),
        percentile_curve,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeResult {
    pub point: [f64; 3],
    pub node: usize,
    pub distance_mm: f64,
    pub value_mpa: f64,
    /// False when the nearest node is farther than the reference element
    /// size (probe outside the meshed domain).
    pub in_domain: bool,
}

/// Nearest-node probe with auditability (node id + distance).
pub fn probe(
    nodes: &[Point],
    values: &[f64],
    points: &[Point],
    element_size: f64,
) -> Vec<ProbeResult> {
    points
        .iter()
        .map(|p| {
            let mut best = (usize::MAX, f64::INFINITY);
            for (i, n) in nodes.iter().enumerate() {
                let d = (n - p).norm();
                if d < best.1 {
                    best = (i, d);
                }
            }
            ProbeResult {
                point: [p.x, p.y, p.z],
                node: best.0,
                distance_mm: best.1,
                value_mpa: values[best.0],
                in_domain: best.1 <= element_size,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn hydrostatic_tensor_max_principal_is_pressure() {
        assert_relative_eq!(max_principal(&[2.5, 2.5, 2.5, 0.0, 0.0, 0.0]), 2.5);
    }

    #[test]
    fn pure_shear_max_principal_equals_tau() {
        assert_relative_eq!(
            max_principal(&[0.0, 0.0, 0.0, 0.7, 0.0, 0.0]),
            0.7,
            epsilon = 1e-12
        );
    }

    #[test]
    fn closed_form_matches_brute_force_on_random_tensors() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..1000 {
            let s: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let m = nalgebra::Matrix3::new(s[0], s[3], s[5], s[3], s[1], s[4], s[5], s[4], s[2]);
            let brute = m
                .symmetric_eigenvalues()
                .iter()
                .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            assert!(
                (max_principal(&s) - brute).abs() <= 1e-10,
                "closed form {} vs brute {}",
                max_principal(&s),
                brute
            );
        }
    }

    #[test]
    fn percentile_linear_interpolation_convention() {
        let vals: Vec<f64> = (1..=10).map(|v| v as f64).collect();
        let stats = stress_stats(&vals).unwrap();
        assert_relative_eq!(stats.percentile_curve[50], 5.5);
        assert_relative_eq!(stats.peak_mpa, 10.0);
        assert_relative_eq!(stats.percentile_curve[100], 10.0);
        assert_relative_eq!(stats.percentile_curve[0], 1.0);
        // Non-decreasing curve.
        assert!(stats
            .percentile_curve
            .windows(2)
            .all(|w| w[1] >= w[0] - 1e-15));
    }

    #[test]
    fn constant_field_percentiles_all_equal() {
        let stats = stress_stats(&vec![3.25; 57]).unwrap();
        assert!(stats.percentile_curve.iter().all(|&v| v == 3.25));
        assert_relative_eq!(stats.p99_mpa, 3.25);
    }

    #[test]
    fn probe_at_node_and_at_centroid() {
        let nodes = vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
            Point::new(0.0, 0.0, 1.0),
        ];
        let values = vec![10.0, 20.0, 30.0, 40.0];
        let exact = probe(&nodes, &values, &[nodes[2]], 1.0);
        assert_eq!(exact[0].node, 2);
        assert_eq!(exact[0].distance_mm, 0.0);
        assert_relative_eq!(exact[0].value_mpa, 30.0);

        let centroid = Point::new(0.25, 0.25, 0.25);
        let mid = probe(&nodes, &values, &[centroid], 1.0);
        assert!(mid[0].distance_mm > 0.0 && mid[0].in_domain);

        let far = probe(&nodes, &values, &[Point::new(10.0, 0.0, 0.0)], 1.0);
        assert!(!far[0].in_domain);
    }
}
