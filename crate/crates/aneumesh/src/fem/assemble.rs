//! Model merging, global stiffness assembly, pressure loads, and
//! boundary-condition bookkeeping.

use super::element::{hex8_stiffness_bbar, tet4_stiffness, Ke24};
use super::sparse::Csr;
use super::{BcSpec, MaterialSpec};
use crate::error::FemError;
use crate::geometry::{Point, Vec3};
use crate::hexmesh::HexWallMesh;
use crate::par;
use crate::tetfill::{boundary_triangles, TetFillMesh};
use nalgebra::SMatrix;
use std::collections::HashSet;

/// Merged finite-element model: wall nodes keep their ids, thrombus
/// interface nodes are identified with wall inner-surface nodes, and the
/// remaining thrombus nodes are appended.
#[derive(Debug, Clone)]
pub struct FeModel {
    pub nodes: Vec<Point>,
    /// Wall elements (global ids = wall mesh ids).
    pub hexes: Vec<[usize; 8]>,
    /// Thrombus elements remapped to global ids (empty without ILT).
    pub tets: Vec<[usize; 4]>,
    /// Thrombus local node id -> global node id (empty without ILT).
    pub ilt_node_map: Vec<usize>,
    /// Load surfaces (global ids): wall inner quads, and the thrombus
    /// lumen triangles when an ILT is present.
    pub inner_quads: Vec<[usize; 4]>,
    pub lumen_tris: Vec<[usize; 3]>,
    pub n_wall_nodes: usize,
    pub fixed_nodes: Vec<usize>,
}

impl FeModel {
    pub fn new(wall: &HexWallMesh, ilt: Option<&TetFillMesh>, bcs: &BcSpec) -> Self {
        let n_wall_nodes = wall.nodes.len();
        let mut nodes = wall.nodes.clone();
        let mut tets = Vec::new();
        let mut ilt_node_map = Vec::new();
        let mut lumen_tris = Vec::new();

        if let Some(ilt) = ilt {
            let mut map = vec![usize::MAX; ilt.nodes.len()];
            for &(ilt_id, wall_id) in &ilt.interface_pairs {
                map[ilt_id] = wall_id;
            }
            for (i, p) in ilt.nodes.iter().enumerate() {
                if map[i] == usize::MAX {
                    map[i] = nodes.len();
                    nodes.push(*p);
                }
            }
            tets = ilt
                .tets
                .iter()
                .map(|t| t.map(|n| map[n]))
                .collect();
            let lumen: HashSet<usize> = ilt.node_sets.lumen_surface.iter().copied().collect();
            lumen_tris = boundary_triangles(&ilt.tets)
                .into_iter()
                .filter(|tri| tri.iter().all(|n| lumen.contains(n)))
                .map(|tri| tri.map(|n| map[n]))
                .collect();
            ilt_node_map = map;
        }

        let mut fixed: Vec<usize> = Vec::new();
        if bcs.fix_top_ring {
            fixed.extend(&wall.node_sets.top_ring);
        }
        if bcs.fix_bottom_ring {
            fixed.extend(&wall.node_sets.bottom_ring);
        }
        if let Some(ilt) = ilt {
            if bcs.fix_ilt_caps {
                for set in [&ilt.node_sets.top_cap, &ilt.node_sets.bottom_cap] {
                    fixed.extend(set.iter().map(|&n| ilt_node_map[n]));
                }
            }
        }
        fixed.sort_unstable();
        fixed.dedup();

        FeModel {
            nodes,
            hexes: wall.hexes.clone(),
            tets,
            ilt_node_map,
            inner_quads: wall.inner_faces.clone(),
            lumen_tris,
            n_wall_nodes,
            fixed_nodes: fixed,
        }
    }

    pub fn n_dofs(&self) -> usize {
        3 * self.nodes.len()
    }

    /// Per-dof fixed mask from the fixed node list.
    pub fn fixed_dofs(&self) -> Vec<bool> {
        let mut fixed = vec![false; self.n_dofs()];
        for &n in &self.fixed_nodes {
            for c in 0..3 {
                fixed[3 * n + c] = true;
            }
        }
        fixed
    }
}

/// Node adjacency (sorted, self included) from element connectivity.
fn node_adjacency(n_nodes: usize, hexes: &[[usize; 8]], tets: &[[usize; 4]]) -> Vec<Vec<u32>> {
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n_nodes];
    let mut insert = |conn: &[usize]| {
        for &a in conn {
            for &b in conn {
                adj[a].push(b as u32);
            }
        }
    };
    for h in hexes {
        insert(h);
    }
    for t in tets {
        insert(t);
    }
    for (i, row) in adj.iter_mut().enumerate() {
        row.push(i as u32);
        row.sort_unstable();
        row.dedup();
    }
    adj
}

/// Expand node adjacency into a 3-dof-per-node CSR pattern.
fn dof_pattern(adj: Vec<Vec<u32>>) -> Csr {
    let rows: Vec<Vec<u32>> = adj
        .iter()
        .flat_map(|row| {
            (0..3).map(move |_| {
                let mut cols = Vec::with_capacity(row.len() * 3);
                for &n in row {
                    for c in 0..3u32 {
                        cols.push(3 * n + c);
                    }
                }
                cols
            })
        })
        .collect();
    Csr::from_pattern(rows)
}

/// Scatter a dense element matrix into the global CSR.
fn scatter(k: &mut Csr, conn: &[usize], ke: &[f64], ndof: usize) {
    for (ar, &na) in conn.iter().enumerate() {
        for r in 0..3 {
            let row = 3 * na + r;
            let lo = k.indptr[row];
            let hi = k.indptr[row + 1];
            let cols = &k.indices[lo..hi];
            for (bc, &nb) in conn.iter().enumerate() {
                // One binary search per node block, then offsets.
                let base = lo + cols.binary_search(&(3 * nb as u32)).unwrap();
                for c in 0..3 {
                    k.values[base + c] += ke[(3 * ar + r) * ndof + 3 * bc + c];
                }
            }
        }
    }
}

const CHUNK: usize = 4096;

/// Assemble the global stiffness: hexes with B-bar mean dilatation, tets
/// with single-point integration. Element matrices are computed in
/// parallel per chunk; the scatter is sequential and ordered, so the
/// result is deterministic and independent of the thread count.
pub fn assemble(
    model: &FeModel,
    wall_material: &MaterialSpec,
    ilt_material: Option<&MaterialSpec>,
) -> Result<Csr, FemError> {
    wall_material.validate()?;
    if !model.tets.is_empty() {
        match ilt_material {
            Some(m) => m.validate()?,
            None => {
                return Err(FemError::InvalidInput(
                    "thrombus elements present but no thrombus material given".into(),
                ))
            }
        }
    }

    let adj = node_adjacency(model.nodes.len(), &model.hexes, &model.tets);
    let mut k = dof_pattern(adj);

    let d_wall = super::element::elasticity_matrix(
        wall_material.youngs_modulus,
        wall_material.poisson_ratio,
    );
    for (chunk_start, chunk) in model
        .hexes
        .chunks(CHUNK)
        .enumerate()
        .map(|(i, c)| (i * CHUNK, c))
    {
        let kes: Vec<Result<Ke24, FemError>> = par::map_slice(chunk, |h| {
            let corners: [Point; 8] = h.map(|n| model.nodes[n]);
            // Element id recovered from the pointer offset below; the
            // kernel only uses it for error reporting.
            hex8_stiffness_bbar(&corners, &d_wall, 0)
        });
        for (off, (h, ke)) in chunk.iter().zip(kes).enumerate() {
            let ke = ke.map_err(|_| FemError::NonPositiveJacobian {
                element: chunk_start + off,
            })?;
            scatter(&mut k, h, ke.as_slice(), 24);
        }
    }

    if let Some(mat) = ilt_material {
        let d_ilt = super::element::elasticity_matrix(mat.youngs_modulus, mat.poisson_ratio);
        for (chunk_start, chunk) in model
            .tets
            .chunks(CHUNK)
            .enumerate()
            .map(|(i, c)| (i * CHUNK, c))
        {
            let kes: Vec<Result<SMatrix<f64, 12, 12>, FemError>> = par::map_slice(chunk, |t| {
                let corners: [Point; 4] = t.map(|n| model.nodes[n]);
                tet4_stiffness(&corners, &d_ilt, 0)
            });
            for (off, (t, ke)) in chunk.iter().zip(kes).enumerate() {
                let ke = ke.map_err(|_| FemError::NonPositiveJacobian {
                    element: model.hexes.len() + chunk_start + off,
                })?;
                scatter(&mut k, t, ke.as_slice(), 12);
            }
        }
    }

    Ok(k)
}

/// Consistent nodal loads for pressure on quad faces wound with normals
/// pointing away from the solid: f = -p * integral(N n dA).
pub fn pressure_loads_quads(
    nodes: &[Point],
    quads: &[[usize; 4]],
    pressure_mpa: f64,
    forces: &mut [f64],
) {
    const G: f64 = 0.577_350_269_189_625_8;
    for q in quads {
        let x: [Point; 4] = q.map(|n| nodes[n]);
        for &eta in &[-G, G] {
            for &xi in &[-G, G] {
                let n_shape = [
                    0.25 * (1.0 - xi) * (1.0 - eta),
                    0.25 * (1.0 + xi) * (1.0 - eta),
                    0.25 * (1.0 + xi) * (1.0 + eta),
                    0.25 * (1.0 - xi) * (1.0 + eta),
                ];
                let dxi = [
                    -0.25 * (1.0 - eta),
                    0.25 * (1.0 - eta),
                    0.25 * (1.0 + eta),
                    -0.25 * (1.0 + eta),
                ];
                let deta = [
                    -0.25 * (1.0 - xi),
                    -0.25 * (1.0 + xi),
                    0.25 * (1.0 + xi),
                    0.25 * (1.0 - xi),
                ];
                let mut t_xi = Vec3::zeros();
                let mut t_eta = Vec3::zeros();
                for a in 0..4 {
                    t_xi += x[a].coords * dxi[a];
                    t_eta += x[a].coords * deta[a];
                }
                let normal = t_xi.cross(&t_eta); // area-weighted
                for a in 0..4 {
                    let f = normal * (-pressure_mpa * n_shape[a]);
                    for c in 0..3 {
                        forces[3 * q[a] + c] += f[c];
                    }
                }
            }
        }
    }
}

/// Consistent nodal loads for pressure on triangle faces (normals away
/// from the solid): each node takes a third of -p * A * n.
pub fn pressure_loads_tris(
    nodes: &[Point],
    tris: &[[usize; 3]],
    pressure_mpa: f64,
    forces: &mut [f64],
) {
    for t in tris {
        let [a, b, c] = t.map(|n| nodes[n]);
        let area_normal = (b - a).cross(&(c - a)) * 0.5;
        let f = area_normal * (-pressure_mpa / 3.0);
        for &n in t {
            for i in 0..3 {
                forces[3 * n + i] += f[i];
            }
        }
    }
}

/// Net force vector of a load vector (N).
pub fn net_force(forces: &[f64]) -> Vec3 {
    let mut net = Vec3::zeros();
    for chunk in forces.chunks_exact(3) {
        net += Vec3::new(chunk[0], chunk[1], chunk[2]);
    }
    net
}

/// Pressure load on a closed quad surface, verifying the closed-surface
/// identity (net force ~ 0); a nonzero net force means inconsistent
/// winding.
pub fn apply_pressure_closed(
    nodes: &[Point],
    quads: &[[usize; 4]],
    pressure_mpa: f64,
    n_dofs: usize,
) -> Result<Vec<f64>, FemError> {
    let mut forces = vec![0.0; n_dofs];
    pressure_loads_quads(nodes, quads, pressure_mpa, &mut forces);
    let net = net_force(&forces).norm();
    let gross: f64 = forces.iter().map(|f| f.abs()).sum();
    if gross > 0.0 && net > 1e-9 * gross {
        return Err(FemError::InconsistentWinding { net });
    }
    Ok(forces)
}
