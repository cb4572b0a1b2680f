//! Promotion of 8-node hexes to 20-node hexes (export path).

use super::HexWallMesh;
use crate::geometry::Point;
use std::collections::HashMap;

/// Edge order for the 20-node connectivity: corners 0-7 first, then
/// mid-edge nodes of the lower quad, the upper quad, and the four
/// vertical edges, in this order.
pub const HEX20_EDGES: [(usize, usize); 12] = [
    (0, 1),
    (1, 2),
    (2, 3),
    (3, 0),
    (4, 5),
    (5, 6),
    (6, 7),
    (7, 4),
    (0, 4),
    (1, 5),
    (2, 6),
    (3, 7),
];

#[derive(Debug, Clone)]
pub struct Hex20Mesh {
    /// Corner nodes first (same ids as the source mesh), then one
    /// mid-edge node per unique edge at the geometric edge midpoint.
    pub nodes: Vec<Point>,
    pub hexes: Vec<[usize; 20]>,
    pub n_corner_nodes: usize,
}

/// Insert shared mid-edge nodes at edge midpoints.
pub fn promote_to_hex20(mesh: &HexWallMesh) -> Hex20Mesh {
    let mut nodes = mesh.nodes.clone();
    let mut edge_node: HashMap<(usize, usize), usize> = HashMap::new();
    let mut hexes = Vec::with_capacity(mesh.hexes.len());
    for h in &mesh.hexes {
        let mut conn = [0usize; 20];
        conn[..8].copy_from_slice(h);
        for (e, &(a, b)) in HEX20_EDGES.iter().enumerate() {
            let (na, nb) = (h[a], h[b]);
            let key = (na.min(nb), na.max(nb));
            let id = *edge_node.entry(key).or_insert_with(|| {
                let mid = Point::from((nodes[na].coords + nodes[nb].coords) * 0.5);
                nodes.push(mid);
                nodes.len() - 1
            });
            conn[8 + e] = id;
        }
        hexes.push(conn);
    }
    Hex20Mesh {
        nodes,
        hexes,
        n_corner_nodes: mesh.nodes.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::super::testutil::cylinder_profiles;
    use super::super::{sweep, MeshParams, NodeSets};
    use super::*;
    use crate::geometry::Vec3;
    use std::collections::HashSet;

    fn single_cube_mesh() -> HexWallMesh {
        let nodes = vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(1.0, 1.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
            Point::new(0.0, 0.0, 1.0),
            Point::new(1.0, 0.0, 1.0),
            Point::new(1.0, 1.0, 1.0),
            Point::new(0.0, 1.0, 1.0),
        ];
        HexWallMesh {
            nodes,
            hexes: vec![[0, 1, 2, 3, 4, 5, 6, 7]],
            node_sets: NodeSets::default(),
            inner_faces: vec![],
            outer_faces: vec![],
            n_slices: 2,
            n_theta: 1,
            n_layers: 1,
            slice_frames: vec![
                (Point::origin(), Vec3::x(), Vec3::y()),
                (Point::new(0.0, 0.0, 1.0), Vec3::x(), Vec3::y()),
            ],
        }
    }

    #[test]
    fn single_cube_promotes_to_20_nodes() {
        let h20 = promote_to_hex20(&single_cube_mesh());
        assert_eq!(h20.nodes.len(), 20);
        assert_eq!(h20.n_corner_nodes, 8);
        // Each mid-edge node is the midpoint of its edge.
        let h = &h20.hexes[0];
        for (e, &(a, b)) in HEX20_EDGES.iter().enumerate() {
            let mid = h20.nodes[h[8 + e]];
            let expect = (h20.nodes[h[a]].coords + h20.nodes[h[b]].coords) * 0.5;
            assert!((mid.coords - expect).norm() < 1e-15);
        }
    }

    #[test]
    fn shared_face_midedges_not_duplicated() {
        // Two cubes stacked in z share 4 mid-edge nodes.
        let mut mesh = single_cube_mesh();
        for z in [2.0] {
            for (x, y) in [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)] {
                mesh.nodes.push(Point::new(x, y, z));
            }
        }
        mesh.hexes.push([4, 5, 6, 7, 8, 9, 10, 11]);
        let h20 = promote_to_hex20(&mesh);
        // 12 corners + 20 unique edges.
        assert_eq!(h20.nodes.len(), 12 + 20);
    }

    #[test]
    fn cylinder_node_count_matches_unique_edge_enumeration() {
        let profiles = cylinder_profiles(10.0, 20.0, 6, 12);
        let mesh = sweep(&profiles, &MeshParams::default()).unwrap();
        let h20 = promote_to_hex20(&mesh);
        // Independent oracle: enumerate unique edges by hashing.
        let mut edges: HashSet<(usize, usize)> = HashSet::new();
        for h in &mesh.hexes {
            for &(a, b) in HEX20_EDGES.iter() {
                let (na, nb) = (h[a], h[b]);
                edges.insert((na.min(nb), na.max(nb)));
            }
        }
        assert_eq!(h20.nodes.len(), mesh.nodes.len() + edges.len());
    }
}
