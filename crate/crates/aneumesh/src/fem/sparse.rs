//! Sparse symmetric linear algebra: CSR storage and a conjugate-gradient
//! solver with an SSOR preconditioner.
//!
//! The matrix is stored fully (both triangles) so row sweeps see the
//! whole stencil. Matrix-vector products are row-parallel and
//! deterministic; dot products and the SSOR sweeps run sequentially so
//! results do not depend on the thread count.

use crate::error::FemError;
use crate::par;

/// Compressed sparse row matrix with 32-bit column indices.
#[derive(Debug, Clone)]
pub struct Csr {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
    /// Position of the diagonal entry within each row.
    pub diag_pos: Vec<usize>,
}

impl Csr {
    /// Build a zero matrix from per-row sorted column index lists.
    /// Every row must contain its own diagonal.
    pub fn from_pattern(rows: Vec<Vec<u32>>) -> Self {
        let n = rows.len();
        let mut indptr = Vec::with_capacity(n + 1);
        indptr.push(0usize);
        let nnz: usize = rows.iter().map(|r| r.len()).sum();
        let mut indices = Vec::with_capacity(nnz);
        let mut diag_pos = Vec::with_capacity(n);
        for (i, row) in rows.iter().enumerate() {
            debug_assert!(row.windows(2).all(|w| w[0] < w[1]), "row not sorted");
            let d = row
                .binary_search(&(i as u32))
                .expect("pattern row missing diagonal");
            diag_pos.push(indptr[i] + d);
            indices.extend_from_slice(row);
            indptr.push(indices.len());
        }
        let values = vec![0.0; indices.len()];
        Csr {
            n,
            indptr,
            indices,
            values,
            diag_pos,
        }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    /// Position of entry (row, col), if present.
    #[inline]
    pub fn find(&self, row: usize, col: usize) -> Option<usize> {
        let lo = self.indptr[row];
        let hi = self.indptr[row + 1];
        self.indices[lo..hi]
            .binary_search(&(col as u32))
            .ok()
            .map(|k| lo + k)
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, v: f64) {
        let pos = self
            .find(row, col)
            .expect("entry outside the assembled pattern");
        self.values[pos] += v;
    }

    /// y = A x (row-parallel, deterministic).
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        par::map_indexed(self.n, |i| {
            let mut sum = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                sum += self.values[k] * x[self.indices[k] as usize];
            }
            sum
        })
    }

    /// Largest |a_ij - a_ji| relative to the largest diagonal entry;
    /// 0 for a symmetric matrix.
    pub fn asymmetry(&self) -> f64 {
        let scale = self
            .diag_pos
            .iter()
            .map(|&p| self.values[p].abs())
            .fold(0.0f64, f64::max)
            .max(1e-300);
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for k in self.indptr[i]..self.indptr[i + 1] {
                let j = self.indices[k] as usize;
                if j <= i {
                    continue;
                }
                let vij = self.values[k];
                let vji = self.find(j, i).map(|p| self.values[p]).unwrap_or(0.0);
                worst = worst.max((vij - vji).abs() / scale);
            }
        }
        worst
    }
}

/// Saved entries for restoring a matrix after Dirichlet elimination.
pub struct DirichletBackup {
    entries: Vec<(usize, f64)>,
}

/// Eliminate fixed dofs in place: fixed rows and columns are zeroed and
/// the fixed diagonal set to 1, preserving symmetry. Returns a backup so
/// the pristine matrix can be restored for reaction recovery.
pub fn apply_dirichlet(a: &mut Csr, fixed: &[bool]) -> DirichletBackup {
    let mut entries = Vec::new();
    for i in 0..a.n {
        for k in a.indptr[i]..a.indptr[i + 1] {
            let j = a.indices[k] as usize;
            if fixed[i] || fixed[j] {
                entries.push((k, a.values[k]));
                a.values[k] = if i == j { 1.0 } else { 0.0 };
            }
        }
    }
    DirichletBackup { entries }
}

pub fn restore_dirichlet(a: &mut Csr, backup: DirichletBackup) {
    for (k, v) in backup.entries {
        a.values[k] = v;
    }
}

#[derive(Debug, Clone)]
pub struct SolveLog {
    pub iterations: usize,
    /// Final true relative residual ||Ax - b|| / ||b||.
    pub residual: f64,
    pub history: Vec<f64>,
}

/// SSOR application: solve M z = r with
/// M = (D + wL) D^-1 (D + wU) / (w (2 - w)).
fn ssor_apply(a: &Csr, omega: f64, r: &[f64], w: &mut [f64], z: &mut [f64]) {
    let scale = omega * (2.0 - omega);
    // Forward: (D + wL) w = scale * r.
    for i in 0..a.n {
        let mut sum = scale * r[i];
        let lo = a.indptr[i];
        for k in lo..a.diag_pos[i] {
            sum -= omega * a.values[k] * w[a.indices[k] as usize];
        }
        w[i] = sum / a.values[a.diag_pos[i]];
    }
    // Backward: (D + wU) z = D w.
    for i in (0..a.n).rev() {
        let di = a.values[a.diag_pos[i]];
        let mut sum = di * w[i];
        for k in a.diag_pos[i] + 1..a.indptr[i + 1] {
            sum -= omega * a.values[k] * z[a.indices[k] as usize];
        }
        z[i] = sum / di;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Preconditioned conjugate gradients with SSOR preconditioning.
///
/// Converges when the recomputed true relative residual drops below
/// `tol`. Fails with the residual history tail on stagnation, and with a
/// rigid-mode error when a search direction has non-positive curvature
/// (the boundary conditions left the operator singular).
pub fn pcg_ssor(
    a: &Csr,
    b: &[f64],
    x0: Option<&[f64]>,
    omega: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveLog), FemError> {
    let n = a.n;
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((
            vec![0.0; n],
            SolveLog {
                iterations: 0,
                residual: 0.0,
                history: vec![],
            },
        ));
    }
    for i in 0..n {
        if a.values[a.diag_pos[i]] <= 0.0 {
            return Err(FemError::RigidModes(format!(
                "non-positive diagonal at dof {i}"
            )));
        }
    }

    let mut x = match x0 {
        Some(x0) => x0.to_vec(),
        None => vec![0.0; n],
    };
    let ax = a.matvec(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut z = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    ssor_apply(a, omega, &r, &mut scratch, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut history = Vec::new();

    for iter in 0..max_iter {
        let ap = a.matvec(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(FemError::RigidModes(format!(
                "non-positive curvature at iteration {iter} (p.Ap = {pap:.3e})"
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = norm(&r) / bnorm;
        history.push(rel);
        if rel <= tol {
            // Recompute the true residual; the recursive one can drift.
            let ax = a.matvec(&x);
            let true_rel = b
                .iter()
                .zip(&ax)
                .map(|(bi, ai)| (bi - ai) * (bi - ai))
                .sum::<f64>()
                .sqrt()
                / bnorm;
            if true_rel <= tol {
                return Ok((
                    x,
                    SolveLog {
                        iterations: iter + 1,
                        residual: true_rel,
                        history,
                    },
                ));
            }
            // Restart from the true residual.
            r = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        }
        ssor_apply(a, omega, &r, &mut scratch, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }

    let tail: Vec<f64> = history.iter().rev().take(5).rev().copied().collect();
    Err(FemError::NonConvergence {
        iterations: max_iter,
        residual: *history.last().unwrap_or(&f64::INFINITY),
        history_tail: tail,
    })
}

/// Solve K u = f with prescribed values on fixed dofs (symmetric
/// elimination). The matrix is modified in place for the solve and
/// restored before returning, so reactions can be recovered from the
/// pristine operator afterwards.
#[allow(clippy::too_many_arguments)]
pub fn solve_dirichlet(
    k: &mut Csr,
    f: &[f64],
    fixed: &[bool],
    prescribed: &[f64],
    omega: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveLog), FemError> {
    if !fixed.iter().any(|&b| b) {
        return Err(FemError::RigidModes("no fixed dofs".into()));
    }
    let n = k.n;
    // Move the prescribed-value coupling to the right-hand side.
    let mut up = vec![0.0; n];
    for i in 0..n {
        if fixed[i] {
            up[i] = prescribed[i];
        }
    }
    let kup = k.matvec(&up);
    let rhs: Vec<f64> = (0..n)
        .map(|i| if fixed[i] { up[i] } else { f[i] - kup[i] })
        .collect();
    let backup = apply_dirichlet(k, fixed);
    let result = pcg_ssor(k, &rhs, None, omega, tol, max_iter);
    restore_dirichlet(k, backup);
    let (mut u, log) = result?;
    // Enforce prescribed values exactly (the identity rows solve them to
    // solver tolerance only).
    for i in 0..n {
        if fixed[i] {
            u[i] = up[i];
        }
    }
    Ok((u, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Dense helper for small oracle systems.
    fn csr_from_dense(m: &[Vec<f64>]) -> Csr {
        let n = m.len();
        let rows: Vec<Vec<u32>> = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| m[i][j] != 0.0 || i == j)
                    .map(|j| j as u32)
                    .collect()
            })
            .collect();
        let mut a = Csr::from_pattern(rows);
        for i in 0..n {
            for j in 0..n {
                if m[i][j] != 0.0 {
                    a.add(i, j, m[i][j]);
                }
            }
        }
        a
    }

    /// 1D Laplacian (tridiagonal), SPD with known solution behavior.
    fn laplacian(n: usize) -> Csr {
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            m[i][i] = 2.0;
            if i > 0 {
                m[i][i - 1] = -1.0;
            }
            if i + 1 < n {
                m[i][i + 1] = -1.0;
            }
        }
        csr_from_dense(&m)
    }

    #[test]
    fn matvec_matches_dense_oracle() {
        let m = vec![
            vec![4.0, -1.0, 0.0],
            vec![-1.0, 4.0, -2.0],
            vec![0.0, -2.0, 5.0],
        ];
        let a = csr_from_dense(&m);
        let x = [1.0, 2.0, 3.0];
        let y = a.matvec(&x);
        for i in 0..3 {
            let expect: f64 = (0..3).map(|j| m[i][j] * x[j]).sum();
            assert_relative_eq!(y[i], expect, epsilon = 1e-14);
        }
    }

    #[test]
    fn pcg_solves_laplacian_to_tolerance() {
        let n = 200;
        let a = laplacian(n);
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.1).sin()).collect();
        let (x, log) = pcg_ssor(&a, &b, None, 1.2, 1e-10, 10_000).unwrap();
        let ax = a.matvec(&x);
        let res: f64 = ax
            .iter()
            .zip(&b)
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt();
        let bn: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(res / bn <= 1e-10, "residual {}", res / bn);
        assert!(log.residual <= 1e-10);
    }

    #[test]
    fn zero_rhs_gives_zero_solution() {
        let a = laplacian(10);
        let (x, log) = pcg_ssor(&a, &vec![0.0; 10], None, 1.2, 1e-10, 100).unwrap();
        assert!(x.iter().all(|&v| v == 0.0));
        assert_eq!(log.iterations, 0);
    }

    #[test]
    fn singular_system_reports_rigid_modes() {
        // Singular: graph Laplacian with free ends (constant nullspace).
        let n = 10;
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n - 1 {
            m[i][i] += 1.0;
            m[i + 1][i + 1] += 1.0;
            m[i][i + 1] -= 1.0;
            m[i + 1][i] -= 1.0;
        }
        let a = csr_from_dense(&m);
        let b = vec![1.0; n]; // in the range complement
        match pcg_ssor(&a, &b, None, 1.0, 1e-10, 1000) {
            Err(FemError::RigidModes(_)) | Err(FemError::NonConvergence { .. }) => {}
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn dirichlet_roundtrip_restores_matrix() {
        let mut a = laplacian(6);
        let orig = a.values.clone();
        let fixed = vec![true, false, false, false, false, true];
        let backup = apply_dirichlet(&mut a, &fixed);
        // Fixed rows are identity rows.
        assert_relative_eq!(a.values[a.diag_pos[0]], 1.0);
        let y = a.matvec(&[1.0, 0.0, 0.0, 0.0, 0.0, 2.0]);
        assert_relative_eq!(y[0], 1.0);
        assert_relative_eq!(y[5], 2.0);
        assert_relative_eq!(y[1], 0.0); // column eliminated
        restore_dirichlet(&mut a, backup);
        assert_eq!(a.values, orig);
    }

    #[test]
    fn symmetric_matrix_reports_zero_asymmetry() {
        let a = laplacian(15);
        assert_eq!(a.asymmetry(), 0.0);
    }
}
