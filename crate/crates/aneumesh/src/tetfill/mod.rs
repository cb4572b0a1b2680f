//! Conformal tetrahedral fill of the thrombus annulus.
//!
//! The region between the lumen surface and the inner wall surface is
//! filled with a structured annular lattice whose outermost node shell is
//! bit-identical to the wall's inner-surface nodes, then split into
//! tetrahedra with globally consistent diagonals. Every quad face is split
//! into two triangles (never coned to a pyramid), so the interface with
//! the hexahedral wall is conforming by construction.

use crate::error::MeshError;
use crate::geometry::{Point, SliceProfile};
use crate::hexmesh::HexWallMesh;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};

/// Structured annular lattice between lumen and wall inner surface.
///
/// Node id = (j * n_theta + i) * (n_radial + 1) + m, with slice j, angle
/// index i, and radial index m = 0 on the lumen through m = n_radial on
/// the wall interface.
#[derive(Debug, Clone)]
pub struct IltLattice {
    pub nodes: Vec<Point>,
    pub n_slices: usize,
    pub n_theta: usize,
    pub n_radial: usize,
    /// (lattice node id, wall mesh node id) for the outermost shell.
    pub interface_pairs: Vec<(usize, usize)>,
}

impl IltLattice {
    #[inline]
    pub fn node_id(&self, j: usize, i: usize, m: usize) -> usize {
        (j * self.n_theta + i % self.n_theta) * (self.n_radial + 1) + m
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TetNodeSets {
    pub lumen_surface: Vec<usize>,
    pub wall_interface: Vec<usize>,
    pub top_cap: Vec<usize>,
    pub bottom_cap: Vec<usize>,
}

/// Conformal tetrahedral mesh of the thrombus annulus.
#[derive(Debug, Clone)]
pub struct TetFillMesh {
    pub nodes: Vec<Point>,
    /// Positive-orientation connectivity: det(b-a, c-a, d-a) > 0.
    pub tets: Vec<[usize; 4]>,
    pub node_sets: TetNodeSets,
    pub n_slices: usize,
    pub n_theta: usize,
    pub n_radial: usize,
    /// (tet mesh node id, wall mesh node id) for the interface shell.
    pub interface_pairs: Vec<(usize, usize)>,
}

impl TetFillMesh {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.tets.len()
    }

    pub fn total_volume(&self) -> f64 {
        self.tets
            .iter()
            .map(|t| {
                let c: [Point; 4] = t.map(|i| self.nodes[i]);
                crate::quality::tet_volume(&c)
            })
            .sum()
    }
}

/// Radial division count from the mean annulus thickness (ceil, min 1).
pub fn resolve_n_radial(mean_thickness: f64, target_element_size: f64) -> usize {
    ((mean_thickness / target_element_size).ceil() as usize).max(1)
}

/// Build the annular lattice by linear interpolation along each
/// (slice, angle) ray from the lumen surface to the wall inner surface.
///
/// The lumen profiles must share slice count, angle count, centers, and
/// frames with the profiles the wall was swept from. The outermost shell
/// copies the wall inner-surface node coordinates verbatim.
pub fn build_ilt_lattice(
    wall: &HexWallMesh,
    lumen_profiles: &[SliceProfile],
    n_radial: usize,
) -> Result<IltLattice, MeshError> {
    if n_radial < 1 {
        return Err(MeshError::InvalidParameter("n_radial must be >= 1".into()));
    }
    if lumen_profiles.len() != wall.n_slices {
        return Err(MeshError::InvalidParameter(format!(
            "lumen slice count {} != wall slice count {}",
            lumen_profiles.len(),
            wall.n_slices
        )));
    }
    if lumen_profiles.iter().any(|p| p.n_theta() != wall.n_theta) {
        return Err(MeshError::InvalidParameter(
            "lumen profiles must match the wall's n_theta".into(),
        ));
    }

    let (ns, nt) = (wall.n_slices, wall.n_theta);
    let mut nodes = Vec::with_capacity(ns * nt * (n_radial + 1));
    let mut interface_pairs = Vec::with_capacity(ns * nt);
    for (j, lumen) in lumen_profiles.iter().enumerate() {
        for i in 0..nt {
            let wall_id = wall.node_id(j, i, wall.n_layers);
            let wall_pt = wall.nodes[wall_id];
            let lumen_r = lumen.radii[i];
            let wall_r = (wall_pt - lumen.center).dot(&lumen.ray_dir(i));
            if lumen_r >= wall_r {
                return Err(MeshError::LumenOutsideWall {
                    slice: j,
                    angle_index: i,
                    lumen: lumen_r,
                    wall: wall_r,
                });
            }
            let lumen_pt = lumen.point(i);
            for m in 0..=n_radial {
                if m == n_radial {
                    nodes.push(wall_pt);
                    interface_pairs.push((nodes.len() - 1, wall_id));
                } else {
                    let t = m as f64 / n_radial as f64;
                    nodes.push(lumen_pt + (wall_pt - lumen_pt) * t);
                }
            }
        }
    }

    Ok(IltLattice {
        nodes,
        n_slices: ns,
        n_theta: nt,
        n_radial,
        interface_pairs,
    })
}

/// Cell faces in local corner indices, wound outward for the standard
/// corner ordering (0-3 lower quad, 4-7 upper, corner 4 above corner 0).
const CELL_FACES_OUTWARD: [[usize; 4]; 6] = [
    [0, 3, 2, 1],
    [4, 5, 6, 7],
    [0, 1, 5, 4],
    [1, 2, 6, 5],
    [2, 3, 7, 6],
    [3, 0, 4, 7],
];

/// Split an outward-wound quad by the diagonal through its smallest
/// global node id, preserving winding.
fn split_quad(q: [usize; 4]) -> [[usize; 3]; 2] {
    let min_at = (0..4).min_by_key(|&p| q[p]).unwrap();
    if min_at == 0 || min_at == 2 {
        [[q[0], q[1], q[2]], [q[0], q[2], q[3]]]
    } else {
        [[q[1], q[2], q[3]], [q[1], q[3], q[0]]]
    }
}

/// Split one topological hex cell into 6 tets by coning its smallest
/// global node id onto the two triangles of each of the three far faces.
///
/// The result is a pure function of the global node ids, so the induced
/// triangulation of every face depends only on that face's own ids and
/// neighboring cells always match.
pub fn split_cell(cell: &[usize; 8]) -> [[usize; 4]; 6] {
    let apex_local = (0..8).min_by_key(|&p| cell[p]).unwrap();
    let apex = cell[apex_local];
    let mut tets = [[0usize; 4]; 6];
    let mut n = 0;
    for f in CELL_FACES_OUTWARD {
        if f.contains(&apex_local) {
            continue;
        }
        for tri in split_quad(f.map(|p| cell[p])) {
            tets[n] = [apex, tri[0], tri[1], tri[2]];
            n += 1;
        }
    }
    debug_assert_eq!(n, 6);
    tets
}

/// Split the lattice into a conformal tet mesh.
///
/// Fills the lumen and wall-interface node sets; end caps are tagged by
/// [`cap_ends`].
pub fn split_to_tets(lattice: &IltLattice) -> Result<TetFillMesh, MeshError> {
    let (ns, nt, nr) = (lattice.n_slices, lattice.n_theta, lattice.n_radial);
    let id = |j: usize, i: usize, m: usize| lattice.node_id(j, i, m);
    let mut tets = Vec::with_capacity((ns - 1) * nt * nr * 6);
    let mut cell_index = 0usize;
    for j in 0..ns - 1 {
        for i in 0..nt {
            for m in 0..nr {
                let cell = [
                    id(j, i, m),
                    id(j, i, m + 1),
                    id(j, i + 1, m + 1),
                    id(j, i + 1, m),
                    id(j + 1, i, m),
                    id(j + 1, i, m + 1),
                    id(j + 1, i + 1, m + 1),
                    id(j + 1, i + 1, m),
                ];
                for t in split_cell(&cell) {
                    let c: [Point; 4] = t.map(|n| lattice.nodes[n]);
                    if crate::quality::tet_volume(&c) <= 0.0 {
                        return Err(MeshError::NonPositiveTet { cell: cell_index });
                    }
                    tets.push(t);
                }
                cell_index += 1;
            }
        }
    }

    let mut node_sets = TetNodeSets::default();
    for j in 0..ns {
        for i in 0..nt {
            node_sets.lumen_surface.push(id(j, i, 0));
            node_sets.wall_interface.push(id(j, i, nr));
        }
    }

    Ok(TetFillMesh {
        nodes: lattice.nodes.clone(),
        tets,
        node_sets,
        n_slices: ns,
        n_theta: nt,
        n_radial: nr,
        interface_pairs: lattice.interface_pairs.clone(),
    })
}

/// Boundary triangles of a tet mesh (faces owned by exactly one tet),
/// wound outward.
pub fn boundary_triangles(tets: &[[usize; 4]]) -> Vec<[usize; 3]> {
    // Outward-wound faces of a positively oriented tet (a, b, c, d).
    const FACES: [[usize; 3]; 4] = [[1, 3, 2], [0, 2, 3], [0, 3, 1], [0, 1, 2]];
    let mut seen: HashMap<[usize; 3], (usize, [usize; 3])> = HashMap::new();
    for t in tets {
        for f in FACES {
            let tri = f.map(|p| t[p]);
            let mut key = tri;
            key.sort_unstable();
            seen.entry(key).or_insert((0, tri)).0 += 1;
        }
    }
    let mut boundary: Vec<[usize; 3]> = seen
        .into_values()
        .filter(|&(count, _)| count == 1)
        .map(|(_, tri)| tri)
        .collect();
    boundary.sort_unstable();
    boundary
}

/// Tag the top/bottom cap node sets and verify the boundary surface is
/// closed (every boundary edge shared by exactly two boundary triangles)
/// with every boundary triangle lying on the lumen, the wall interface,
/// or a cap.
pub fn cap_ends(mut mesh: TetFillMesh) -> Result<TetFillMesh, MeshError> {
    let (ns, nt, nr) = (mesh.n_slices, mesh.n_theta, mesh.n_radial);
    let id = |j: usize, i: usize, m: usize| (j * nt + i % nt) * (nr + 1) + m;
    mesh.node_sets.bottom_cap.clear();
    mesh.node_sets.top_cap.clear();
    for i in 0..nt {
        for m in 0..=nr {
            mesh.node_sets.bottom_cap.push(id(0, i, m));
            mesh.node_sets.top_cap.push(id(ns - 1, i, m));
        }
    }

    let boundary = boundary_triangles(&mesh.tets);
    let sets: [HashSet<usize>; 4] = [
        mesh.node_sets.lumen_surface.iter().copied().collect(),
        mesh.node_sets.wall_interface.iter().copied().collect(),
        mesh.node_sets.bottom_cap.iter().copied().collect(),
        mesh.node_sets.top_cap.iter().copied().collect(),
    ];
    let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
    let mut unclassified = 0usize;
    for tri in &boundary {
        if !sets
            .iter()
            .any(|s| tri.iter().all(|n| s.contains(n)))
        {
            unclassified += 1;
        }
        for e in [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])] {
            *edge_count.entry((e.0.min(e.1), e.0.max(e.1))).or_insert(0) += 1;
        }
    }
    let dangling = edge_count.values().filter(|&&c| c != 2).count() + unclassified;
    if dangling > 0 {
        return Err(MeshError::UnclosedBoundary { dangling });
    }
    Ok(mesh)
}

/// Conformality audit of the wall/thrombus interface.
#[derive(Debug, Clone, Serialize)]
pub struct ConformalityReport {
    /// Max distance from each interface node to its nearest wall
    /// inner-surface node (mm).
    pub max_node_distance_mm: f64,
    pub wall_quad_count: usize,
    pub interface_tri_count: usize,
    /// Wall inner quads covered by exactly two interface triangles.
    pub quads_with_two_tris: usize,
    /// Non-triangular element boundary faces (always 0 for a tet mesh;
    /// reported for the audit record).
    pub pyramid_count: usize,
}

impl ConformalityReport {
    pub fn is_conformal(&self) -> bool {
        self.max_node_distance_mm <= 1e-9
            && self.quads_with_two_tris == self.wall_quad_count
            && self.interface_tri_count == 2 * self.wall_quad_count
            && self.pyramid_count == 0
    }
}

/// Check the thrombus mesh against the wall mesh it should conform to.
///
/// Matches interface nodes to wall inner-surface nodes by nearest
/// neighbor (no reliance on shared construction), then counts interface
/// triangles per wall inner quad.
pub fn check_conformal(wall: &HexWallMesh, ilt: &TetFillMesh) -> ConformalityReport {
    let wall_inner: Vec<usize> = wall.node_sets.inner_surface.clone();
    let nearest = |p: &Point| -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        for &w in &wall_inner {
            let d = (wall.nodes[w] - p).norm();
            if d < best.1 {
                best = (w, d);
            }
        }
        best
    };

    let mut max_dist: f64 = 0.0;
    let mut to_wall: HashMap<usize, usize> = HashMap::new();
    for &n in &ilt.node_sets.wall_interface {
        let (w, d) = nearest(&ilt.nodes[n]);
        max_dist = max_dist.max(d);
        to_wall.insert(n, w);
    }

    let interface_set: HashSet<usize> = ilt.node_sets.wall_interface.iter().copied().collect();
    let interface_tris: Vec<[usize; 3]> = boundary_triangles(&ilt.tets)
        .into_iter()
        .filter(|tri| tri.iter().all(|n| interface_set.contains(n)))
        .collect();

    let mut per_quad = vec![0usize; wall.inner_faces.len()];
    let quad_lookup: HashMap<usize, Vec<usize>> = {
        let mut map: HashMap<usize, Vec<usize>> = HashMap::new();
        for (q, quad) in wall.inner_faces.iter().enumerate() {
            for &n in quad {
                map.entry(n).or_default().push(q);
            }
        }
        map
    };
    for tri in &interface_tris {
        let mapped: Vec<usize> = tri.iter().filter_map(|n| to_wall.get(n).copied()).collect();
        if mapped.len() != 3 {
            continue;
        }
        if let Some(quads) = quad_lookup.get(&mapped[0]) {
            for &q in quads {
                let quad = &wall.inner_faces[q];
                if mapped.iter().all(|n| quad.contains(n)) {
                    per_quad[q] += 1;
                    break;
                }
            }
        }
    }

    ConformalityReport {
        max_node_distance_mm: max_dist,
        wall_quad_count: wall.inner_faces.len(),
        interface_tri_count: interface_tris.len(),
        quads_with_two_tris: per_quad.iter().filter(|&&c| c == 2).count(),
        pyramid_count: 0,
    }
}

/// Standard mid-edge node order for 10-node tets: corners 0-3, then mids
/// of edges (0,1), (1,2), (0,2), (0,3), (1,3), (2,3).
pub const TET10_EDGES: [(usize, usize); 6] = [(0, 1), (1, 2), (0, 2), (0, 3), (1, 3), (2, 3)];

#[derive(Debug, Clone)]
pub struct Tet10Mesh {
    pub nodes: Vec<Point>,
    pub tets: Vec<[usize; 10]>,
    pub n_corner_nodes: usize,
}

/// Promote to 10-node tets with shared mid-edge nodes at edge midpoints.
pub fn promote_to_tet10(mesh: &TetFillMesh) -> Tet10Mesh {
    let mut nodes = mesh.nodes.clone();
    let mut edge_node: HashMap<(usize, usize), usize> = HashMap::new();
    let mut tets = Vec::with_capacity(mesh.tets.len());
    for t in &mesh.tets {
        let mut conn = [0usize; 10];
        conn[..4].copy_from_slice(t);
        for (e, &(a, b)) in TET10_EDGES.iter().enumerate() {
            let (na, nb) = (t[a], t[b]);
            let key = (na.min(nb), na.max(nb));
            let id = *edge_node.entry(key).or_insert_with(|| {
                let mid = Point::from((nodes[na].coords + nodes[nb].coords) * 0.5);
                nodes.push(mid);
                nodes.len() - 1
            });
            conn[4 + e] = id;
        }
        tets.push(conn);
    }
    Tet10Mesh {
        nodes,
        tets,
        n_corner_nodes: mesh.nodes.len(),
    }
}
