//! Element stiffness and stress kernels: 8-node hexes with the
//! mean-dilatation (B-bar) treatment of the volumetric strain, and
//! single-point 4-node tets.
//!
//! Strains use engineering shear ordering (exx, eyy, ezz, gxy, gyz, gzx).
//! Units: mm, MPa, N.

use crate::error::FemError;
use crate::geometry::Point;
use nalgebra::{Matrix3, SMatrix, SVector};

pub type Ke24 = SMatrix<f64, 24, 24>;
pub type Ke12 = SMatrix<f64, 12, 12>;
pub type Strain = SVector<f64, 6>;
pub type Stress = SVector<f64, 6>;

/// Isotropic elasticity matrix for engineering strains.
pub fn elasticity_matrix(e: f64, nu: f64) -> SMatrix<f64, 6, 6> {
    let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let mu = e / (2.0 * (1.0 + nu));
    let mut d = SMatrix::<f64, 6, 6>::zeros();
    for i in 0..3 {
        for j in 0..3 {
            d[(i, j)] = lambda;
        }
        d[(i, i)] = lambda + 2.0 * mu;
        d[(i + 3, i + 3)] = mu;
    }
    d
}

/// Local corner coordinates matching the mesh corner ordering
/// (0-3 lower quad, 4-7 upper, corner 4 above corner 0).
const HEX_XI: [[f64; 3]; 8] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0],
];

const GP: f64 = 0.577_350_269_189_625_8; // 1/sqrt(3)

/// Shape-function derivatives with respect to local coordinates at
/// (xi, eta, zeta); rows are nodes, columns are d/dxi, d/deta, d/dzeta.
fn hex_dn_local(xi: f64, eta: f64, zeta: f64) -> SMatrix<f64, 8, 3> {
    let mut dn = SMatrix::<f64, 8, 3>::zeros();
    for a in 0..8 {
        let [xa, ya, za] = HEX_XI[a];
        dn[(a, 0)] = 0.125 * xa * (1.0 + ya * eta) * (1.0 + za * zeta);
        dn[(a, 1)] = 0.125 * ya * (1.0 + xa * xi) * (1.0 + za * zeta);
        dn[(a, 2)] = 0.125 * za * (1.0 + xa * xi) * (1.0 + ya * eta);
    }
    dn
}

/// Per-Gauss-point spatial gradients and integration weights.
struct HexQuadrature {
    /// grads[g][(a, i)] = dN_a/dx_i at Gauss point g.
    grads: Vec<SMatrix<f64, 8, 3>>,
    /// w * det(J) per Gauss point.
    wdet: Vec<f64>,
    volume: f64,
    /// Volume-averaged gradients (the mean-dilatation operator).
    mean_grad: SMatrix<f64, 8, 3>,
}

fn hex_quadrature(corners: &[Point; 8], element: usize) -> Result<HexQuadrature, FemError> {
    let mut grads = Vec::with_capacity(8);
    let mut wdet = Vec::with_capacity(8);
    let mut volume = 0.0;
    let mut mean_grad = SMatrix::<f64, 8, 3>::zeros();
    for &zeta in &[-GP, GP] {
        for &eta in &[-GP, GP] {
            for &xi in &[-GP, GP] {
                let dn = hex_dn_local(xi, eta, zeta);
                // J[i][j] = dx_i/dxi_j.
                let mut j = Matrix3::<f64>::zeros();
                for a in 0..8 {
                    for r in 0..3 {
                        for c in 0..3 {
                            j[(r, c)] += corners[a][r] * dn[(a, c)];
                        }
                    }
                }
                let det = j.determinant();
                if det <= 0.0 {
                    return Err(FemError::NonPositiveJacobian { element });
                }
                let jinv = j.try_inverse().ok_or(FemError::NonPositiveJacobian { element })?;
                // dN/dx = dN/dxi * J^-1 (row convention).
                let g = dn * jinv;
                mean_grad += g * det;
                grads.push(g);
                wdet.push(det);
                volume += det;
            }
        }
    }
    mean_grad /= volume;
    Ok(HexQuadrature {
        grads,
        wdet,
        volume,
        mean_grad,
    })
}

/// Strain-displacement matrix at one point from nodal gradients, with the
/// volumetric part optionally replaced by the element mean (B-bar).
fn b_matrix(g: &SMatrix<f64, 8, 3>, mean: Option<&SMatrix<f64, 8, 3>>) -> SMatrix<f64, 6, 24> {
    let mut b = SMatrix::<f64, 6, 24>::zeros();
    for a in 0..8 {
        let (gx, gy, gz) = (g[(a, 0)], g[(a, 1)], g[(a, 2)]);
        let col = 3 * a;
        b[(0, col)] = gx;
        b[(1, col + 1)] = gy;
        b[(2, col + 2)] = gz;
        b[(3, col)] = gy;
        b[(3, col + 1)] = gx;
        b[(4, col + 1)] = gz;
        b[(4, col + 2)] = gy;
        b[(5, col)] = gz;
        b[(5, col + 2)] = gx;
        if let Some(m) = mean {
            // Replace the volumetric column third with the element mean.
            let (mx, my, mz) = (m[(a, 0)], m[(a, 1)], m[(a, 2)]);
            for row in 0..3 {
                b[(row, col)] += (mx - gx) / 3.0;
                b[(row, col + 1)] += (my - gy) / 3.0;
                b[(row, col + 2)] += (mz - gz) / 3.0;
            }
        }
    }
    b
}

/// Hex8 stiffness with 2x2x2 Gauss quadrature and mean-dilatation B-bar.
pub fn hex8_stiffness_bbar(
    corners: &[Point; 8],
    d: &SMatrix<f64, 6, 6>,
    element: usize,
) -> Result<Ke24, FemError> {
    hex8_stiffness_impl(corners, d, element, true)
}

/// Plain displacement-based hex8 (volumetrically locking at high nu);
/// kept as the side-by-side oracle for the B-bar treatment.
pub fn hex8_stiffness_plain(
    corners: &[Point; 8],
    d: &SMatrix<f64, 6, 6>,
    element: usize,
) -> Result<Ke24, FemError> {
    hex8_stiffness_impl(corners, d, element, false)
}

fn hex8_stiffness_impl(
    corners: &[Point; 8],
    d: &SMatrix<f64, 6, 6>,
    element: usize,
    bbar: bool,
) -> Result<Ke24, FemError> {
    let q = hex_quadrature(corners, element)?;
    let mean = if bbar { Some(&q.mean_grad) } else { None };
    let mut ke = Ke24::zeros();
    for (g, &w) in q.grads.iter().zip(&q.wdet) {
        let b = b_matrix(g, mean);
        ke += b.transpose() * d * b * w;
    }
    // The triple product is only symmetric to roundoff; symmetrize
    // exactly so downstream sweeps see a bit-symmetric operator.
    ke = (ke + ke.transpose()) * 0.5;
    Ok(ke)
}

/// Volume-averaged element stress (B-bar-consistent): sigma = D * mean
/// strain over the Gauss points.
pub fn hex8_stress_bbar(
    corners: &[Point; 8],
    d: &SMatrix<f64, 6, 6>,
    ue: &SVector<f64, 24>,
    element: usize,
) -> Result<(Stress, f64), FemError> {
    let q = hex_quadrature(corners, element)?;
    let mut strain = Strain::zeros();
    for (g, &w) in q.grads.iter().zip(&q.wdet) {
        let b = b_matrix(g, Some(&q.mean_grad));
        strain += b * ue * w;
    }
    strain /= q.volume;
    Ok((d * strain, q.volume))
}

pub fn hex8_volume(corners: &[Point; 8]) -> Result<f64, FemError> {
    Ok(hex_quadrature(corners, 0)?.volume)
}

/// Constant-strain tet gradients and volume.
fn tet_grads(corners: &[Point; 4], element: usize) -> Result<(SMatrix<f64, 4, 3>, f64), FemError> {
    let d3 = Matrix3::from_columns(&[
        corners[1] - corners[0],
        corners[2] - corners[0],
        corners[3] - corners[0],
    ]);
    let vol = d3.determinant() / 6.0;
    if vol <= 0.0 {
        return Err(FemError::NonPositiveJacobian { element });
    }
    let inv = d3.try_inverse().ok_or(FemError::NonPositiveJacobian { element })?;
    let mut g = SMatrix::<f64, 4, 3>::zeros();
    for i in 0..3 {
        for c in 0..3 {
            g[(i + 1, c)] = inv[(i, c)];
            g[(0, c)] -= inv[(i, c)];
        }
    }
    Ok((g, vol))
}

fn tet_b(g: &SMatrix<f64, 4, 3>) -> SMatrix<f64, 6, 12> {
    let mut b = SMatrix::<f64, 6, 12>::zeros();
    for a in 0..4 {
        let (gx, gy, gz) = (g[(a, 0)], g[(a, 1)], g[(a, 2)]);
        let col = 3 * a;
        b[(0, col)] = gx;
        b[(1, col + 1)] = gy;
        b[(2, col + 2)] = gz;
        b[(3, col)] = gy;
        b[(3, col + 1)] = gx;
        b[(4, col + 1)] = gz;
        b[(4, col + 2)] = gy;
        b[(5, col)] = gz;
        b[(5, col + 2)] = gx;
    }
    b
}

/// Tet4 stiffness (exact single-point integration of the constant field).
pub fn tet4_stiffness(
    corners: &[Point; 4],
    d: &SMatrix<f64, 6, 6>,
    element: usize,
) -> Result<Ke12, FemError> {
    let (g, vol) = tet_grads(corners, element)?;
    let b = tet_b(&g);
    let ke = b.transpose() * d * b * vol;
    Ok((ke + ke.transpose()) * 0.5)
}

pub fn tet4_stress(
    corners: &[Point; 4],
    d: &SMatrix<f64, 6, 6>,
    ue: &SVector<f64, 12>,
    element: usize,
) -> Result<(Stress, f64), FemError> {
    let (g, vol) = tet_grads(corners, element)?;
    Ok((d * (tet_b(&g) * ue), vol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_cube() -> [Point; 8] {
        [
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(1.0, 1.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
            Point::new(0.0, 0.0, 1.0),
            Point::new(1.0, 0.0, 1.0),
            Point::new(1.0, 1.0, 1.0),
            Point::new(0.0, 1.0, 1.0),
        ]
    }

    fn linear_field(p: &Point) -> SVector<f64, 3> {
        // u = A x + c with an arbitrary (non-symmetric) A.
        SVector::<f64, 3>::new(
            0.01 * p.x + 0.002 * p.y - 0.004 * p.z + 0.1,
            -0.003 * p.x + 0.006 * p.y + 0.001 * p.z - 0.2,
            0.005 * p.x - 0.002 * p.y + 0.008 * p.z + 0.05,
        )
    }

    fn linear_field_strain() -> Strain {
        // Symmetric part of A, engineering shears.
        Strain::from_column_slice(&[
            0.01,
            0.006,
            0.008,
            0.002 - 0.003,
            0.001 - 0.002,
            -0.004 + 0.005,
        ])
    }

    #[test]
    fn cube_volume_and_jacobian() {
        assert_relative_eq!(hex8_volume(&unit_cube()).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn stiffness_symmetric_with_zero_rowsums() {
        let d = elasticity_matrix(1.0, 0.3);
        let ke = hex8_stiffness_bbar(&unit_cube(), &d, 0).unwrap();
        for i in 0..24 {
            for j in 0..24 {
                assert_relative_eq!(ke[(i, j)], ke[(j, i)], epsilon = 1e-12);
            }
            // Translation nullspace: rows sum to zero per component.
            for c in 0..3 {
                let s: f64 = (0..8).map(|a| ke[(i, 3 * a + c)]).sum();
                assert_relative_eq!(s, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn free_cube_has_exactly_six_zero_eigenvalues() {
        let d = elasticity_matrix(1.0, 0.3);
        let ke = hex8_stiffness_bbar(&unit_cube(), &d, 0).unwrap();
        let eig = ke.symmetric_eigenvalues();
        let mut vals: Vec<f64> = eig.iter().copied().collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for v in &vals[..6] {
            assert!(v.abs() < 1e-10, "rigid mode eigenvalue {v}");
        }
        assert!(vals[6] > 1e-6, "first elastic eigenvalue {}", vals[6]);
    }

    #[test]
    fn distorted_hex_reproduces_linear_field_stress() {
        // Single-element patch check: impose a linear displacement field
        // on a distorted hex; the recovered stress must equal D * strain
        // of the field exactly (both plain and B-bar are linear-exact).
        let mut corners = unit_cube();
        let shifts = [
            [0.02, -0.01, 0.03],
            [-0.03, 0.02, 0.01],
            [0.01, 0.03, -0.02],
            [-0.02, -0.03, 0.02],
            [0.03, 0.01, -0.01],
            [0.02, -0.02, -0.03],
            [-0.01, 0.02, 0.02],
            [0.01, -0.01, 0.01],
        ];
        for (c, s) in corners.iter_mut().zip(shifts) {
            c.x += s[0];
            c.y += s[1];
            c.z += s[2];
        }
        let d = elasticity_matrix(2.5, 0.49);
        let mut ue = SVector::<f64, 24>::zeros();
        for a in 0..8 {
            let u = linear_field(&corners[a]);
            for c in 0..3 {
                ue[3 * a + c] = u[c];
            }
        }
        let (sigma, _) = hex8_stress_bbar(&corners, &d, &ue, 0).unwrap();
        let expect = d * linear_field_strain();
        for i in 0..6 {
            assert_relative_eq!(sigma[i], expect[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn inverted_hex_rejected() {
        let mut corners = unit_cube();
        corners.swap(0, 1);
        corners.swap(4, 5);
        match hex8_stiffness_bbar(&corners, &elasticity_matrix(1.0, 0.3), 7) {
            Err(FemError::NonPositiveJacobian { element: 7 }) => {}
            other => panic!("expected NonPositiveJacobian, got {other:?}"),
        }
    }

    #[test]
    fn tet_stiffness_matches_linear_field() {
        let corners = [
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.2, 0.1, 0.0),
            Point::new(0.2, 1.1, 0.1),
            Point::new(0.1, 0.2, 0.9),
        ];
        let d = elasticity_matrix(1.5, 0.45);
        let mut ue = SVector::<f64, 12>::zeros();
        for a in 0..4 {
            let u = linear_field(&corners[a]);
            for c in 0..3 {
                ue[3 * a + c] = u[c];
            }
        }
        let (sigma, vol) = tet4_stress(&corners, &d, &ue, 0).unwrap();
        let expect = d * linear_field_strain();
        for i in 0..6 {
            assert_relative_eq!(sigma[i], expect[i], epsilon = 1e-12);
        }
        assert!(vol > 0.0);

        // Stiffness symmetric, translations in the nullspace.
        let ke = tet4_stiffness(&corners, &d, 0).unwrap();
        for i in 0..12 {
            for c in 0..3 {
                let s: f64 = (0..4).map(|a| ke[(i, 3 * a + c)]).sum();
                assert_relative_eq!(s, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn negative_tet_rejected() {
        let corners = [
            Point::new(0.0, 0.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(0.0, 0.0, 1.0),
        ];
        assert!(tet4_stiffness(&corners, &elasticity_matrix(1.0, 0.3), 3).is_err());
    }

    #[test]
    fn bbar_softens_volumetric_response_at_high_nu() {
        // A mode with spatially varying volumetric strain (u_x = x*y, so
        // div u = y): the B-bar element replaces the pointwise volumetric
        // strain with its element mean, so its strain energy is strictly
        // lower than the plain element's. Linear fields would tie (both
        // formulations are linear-exact), so the mode must be bilinear.
        let d = elasticity_matrix(1.0, 0.49);
        let corners = unit_cube();
        let kb = hex8_stiffness_bbar(&corners, &d, 0).unwrap();
        let kp = hex8_stiffness_plain(&corners, &d, 0).unwrap();
        let mut mode = SVector::<f64, 24>::zeros();
        for a in 0..8 {
            mode[3 * a] = corners[a].x * corners[a].y;
        }
        let eb = (mode.transpose() * kb * mode)[0];
        let ep = (mode.transpose() * kp * mode)[0];
        assert!(eb < ep, "B-bar not softer: {eb} vs {ep}");
        // And never softer on a pure linear field (both exact).
        let mut lin = SVector::<f64, 24>::zeros();
        for a in 0..8 {
            lin[3 * a] = 0.01 * corners[a].x;
        }
        let el = (lin.transpose() * kb * lin)[0];
        let epl = (lin.transpose() * kp * lin)[0];
        assert_relative_eq!(el, epl, epsilon = 1e-12);
    }
}
