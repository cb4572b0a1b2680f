//! File emission and ingestion: VTK legacy ASCII, solver-exchange INP,
//! and JSON reports.
//!
//! Combined wall + thrombus exports use a stable id mapping: wall nodes
//! keep their mesh ids, interface nodes reuse the matching wall id, and
//! the remaining thrombus nodes are appended in thrombus-local order
//! (the same mapping the solver model uses).

pub mod inp;
pub mod vtk;

pub use inp::{read_inp, write_inp, ElementBlock, InpMesh};
pub use vtk::{read_vtk, write_vtk, CellBlock, PointScalars, VtkMesh};
pub use vtk::{VTK_HEX20, VTK_HEX8, VTK_TET4};

use crate::error::MeshError;
use crate::fem::{FeModel, StressField};
use crate::hexmesh::{Hex20Mesh, HexWallMesh};
use crate::tetfill::TetFillMesh;
use std::path::Path;

/// Wall mesh as VTK (cell type 12).
pub fn export_wall_vtk(mesh: &HexWallMesh, path: &Path) -> Result<(), MeshError> {
    write_vtk(
        path,
        "wall hex mesh",
        &mesh.nodes,
        &[CellBlock::hexes(&mesh.hexes)],
        &[],
    )
}

/// Wall mesh as INP with the four wall node sets.
pub fn export_wall_inp(mesh: &HexWallMesh, path: &Path) -> Result<(), MeshError> {
    let flat: Vec<usize> = mesh.hexes.iter().flatten().copied().collect();
    write_inp(
        path,
        "wall hex mesh",
        &mesh.nodes,
        &[ElementBlock {
            element_type: "C3D8",
            elset: "WALL",
            nodes_per_element: 8,
            connectivity: &flat,
        }],
        &[
            ("INNER_SURFACE", &mesh.node_sets.inner_surface),
            ("OUTER_SURFACE", &mesh.node_sets.outer_surface),
            ("TOP_RING", &mesh.node_sets.top_ring),
            ("BOTTOM_RING", &mesh.node_sets.bottom_ring),
        ],
    )
}

/// 20-node wall mesh as VTK (cell type 25).
pub fn export_hex20_vtk(mesh: &Hex20Mesh, path: &Path) -> Result<(), MeshError> {
    write_vtk(
        path,
        "wall hex20 mesh",
        &mesh.nodes,
        &[CellBlock::hex20s(&mesh.hexes)],
        &[],
    )
}

/// 20-node wall mesh as INP. Node sets refer to corner nodes, whose ids
/// are unchanged by the promotion.
pub fn export_hex20_inp(
    mesh: &Hex20Mesh,
    sets: &crate::hexmesh::NodeSets,
    path: &Path,
) -> Result<(), MeshError> {
    let flat: Vec<usize> = mesh.hexes.iter().flatten().copied().collect();
    write_inp(
        path,
        "wall hex20 mesh",
        &mesh.nodes,
        &[ElementBlock {
            element_type: "C3D20",
            elset: "WALL",
            nodes_per_element: 20,
            connectivity: &flat,
        }],
        &[
            ("INNER_SURFACE", &sets.inner_surface),
            ("OUTER_SURFACE", &sets.outer_surface),
            ("TOP_RING", &sets.top_ring),
            ("BOTTOM_RING", &sets.bottom_ring),
        ],
    )
}

/// Thrombus tet mesh as VTK (cell type 10).
pub fn export_ilt_vtk(mesh: &TetFillMesh, path: &Path) -> Result<(), MeshError> {
    write_vtk(
        path,
        "thrombus tet mesh",
        &mesh.nodes,
        &[CellBlock::tets(&mesh.tets)],
        &[],
    )
}

/// Thrombus tet mesh as INP with the four thrombus node sets.
pub fn export_ilt_inp(mesh: &TetFillMesh, path: &Path) -> Result<(), MeshError> {
    let flat: Vec<usize> = mesh.tets.iter().flatten().copied().collect();
    write_inp(
        path,
        "thrombus tet mesh",
        &mesh.nodes,
        &[ElementBlock {
            element_type: "C3D4",
            elset: "ILT",
            nodes_per_element: 4,
            connectivity: &flat,
        }],
        &[
            ("LUMEN_SURFACE", &mesh.node_sets.lumen_surface),
            ("WALL_INTERFACE", &mesh.node_sets.wall_interface),
            ("TOP_CAP", &mesh.node_sets.top_cap),
            ("BOTTOM_CAP", &mesh.node_sets.bottom_cap),
        ],
    )
}

/// Node sets of a combined model, with thrombus-local ids mapped to the
/// merged table.
fn combined_sets<'a>(
    wall: &'a HexWallMesh,
    ilt: Option<&TetFillMesh>,
    model: &FeModel,
) -> Vec<(&'static str, Vec<usize>)> {
    let mut sets: Vec<(&'static str, Vec<usize>)> = vec![
        ("INNER_SURFACE", wall.node_sets.inner_surface.clone()),
        ("OUTER_SURFACE", wall.node_sets.outer_surface.clone()),
        ("TOP_RING", wall.node_sets.top_ring.clone()),
        ("BOTTOM_RING", wall.node_sets.bottom_ring.clone()),
    ];
    if let Some(ilt) = ilt {
        let map = |ids: &[usize]| -> Vec<usize> {
            ids.iter().map(|&i| model.ilt_node_map[i]).collect()
        };
        sets.push(("LUMEN_SURFACE", map(&ilt.node_sets.lumen_surface)));
        sets.push(("WALL_INTERFACE", map(&ilt.node_sets.wall_interface)));
        sets.push(("TOP_CAP", map(&ilt.node_sets.top_cap)));
        sets.push(("BOTTOM_CAP", map(&ilt.node_sets.bottom_cap)));
    }
    sets
}

/// Combined wall + thrombus INP with all node sets on the merged table.
pub fn export_combined_inp(
    wall: &HexWallMesh,
    ilt: Option<&TetFillMesh>,
    model: &FeModel,
    path: &Path,
) -> Result<(), MeshError> {
    let hex_flat: Vec<usize> = model.hexes.iter().flatten().copied().collect();
    let tet_flat: Vec<usize> = model.tets.iter().flatten().copied().collect();
    let mut blocks = vec![ElementBlock {
        element_type: "C3D8",
        elset: "WALL",
        nodes_per_element: 8,
        connectivity: &hex_flat,
    }];
    if !tet_flat.is_empty() {
        blocks.push(ElementBlock {
            element_type: "C3D4",
            elset: "ILT",
            nodes_per_element: 4,
            connectivity: &tet_flat,
        });
    }
    let sets = combined_sets(wall, ilt, model);
    let set_refs: Vec<(&str, &[usize])> =
        sets.iter().map(|(n, v)| (*n, v.as_slice())).collect();
    write_inp(path, "combined wall + thrombus", &model.nodes, &blocks, &set_refs)
}

/// Combined wall + thrombus VTK (cell types 12 and 10).
pub fn export_combined_vtk(model: &FeModel, path: &Path) -> Result<(), MeshError> {
    let mut blocks = vec![CellBlock::hexes(&model.hexes)];
    if !model.tets.is_empty() {
        blocks.push(CellBlock::tets(&model.tets));
    }
    write_vtk(path, "combined wall + thrombus", &model.nodes, &blocks, &[])
}

/// Stress field on the solved model as VTK point data
/// (`max_principal_stress_MPa`, plus the six tensor components when
/// `include_tensor` is set).
pub fn export_stress_vtk(
    model: &FeModel,
    field: &StressField,
    include_tensor: bool,
    path: &Path,
) -> Result<(), MeshError> {
    let mut blocks = vec![CellBlock::hexes(&model.hexes)];
    if !model.tets.is_empty() {
        blocks.push(CellBlock::tets(&model.tets));
    }
    let mut scalars = vec![PointScalars {
        name: "max_principal_stress_MPa",
        values: &field.max_principal,
    }];
    let components: Vec<Vec<f64>>;
    if include_tensor {
        components = (0..6)
            .map(|c| field.tensor.iter().map(|t| t[c]).collect())
            .collect();
        let names = [
            "stress_xx_MPa",
            "stress_yy_MPa",
            "stress_zz_MPa",
            "stress_xy_MPa",
            "stress_yz_MPa",
            "stress_zx_MPa",
        ];
        for (name, values) in names.iter().zip(&components) {
            scalars.push(PointScalars { name, values });
        }
    }
    write_vtk(path, "wall stress field", &model.nodes, &blocks, &scalars)
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), MeshError> {
    let mut body = serde_json::to_string_pretty(value)
        .map_err(|e| MeshError::InvalidParameter(format!("JSON serialization: {e}")))?;
    body.push('\n');
    std::fs::write(path, body)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::BcSpec;
    use crate::geometry::Point;
    use crate::hexmesh::{sweep, MeshParams};
    use crate::tetfill::{build_ilt_lattice, cap_ends, check_conformal, split_to_tets};

    fn small_wall_and_ilt() -> (HexWallMesh, TetFillMesh) {
        let profiles = crate::hexmesh::testutil::cylinder_profiles(6.0, 10.0, 5, 12);
        let params = MeshParams {
            n_theta: 12,
            n_axial: 4,
            ..MeshParams::default()
        };
        let wall = sweep(&profiles, &params).unwrap();
        let lumen = crate::hexmesh::testutil::cylinder_profiles(2.0, 10.0, 5, 12);
        let lattice = build_ilt_lattice(&wall, &lumen, 3).unwrap();
        let ilt = cap_ends(split_to_tets(&lattice).unwrap()).unwrap();
        (wall, ilt)
    }

    #[test]
    fn wall_exports_round_trip() {
        let (wall, _) = small_wall_and_ilt();
        let dir = tempfile::tempdir().unwrap();
        let vtk_path = dir.path().join("wall.vtk");
        let inp_path = dir.path().join("wall.inp");
        export_wall_vtk(&wall, &vtk_path).unwrap();
        export_wall_inp(&wall, &inp_path).unwrap();

        let v = read_vtk(&vtk_path).unwrap();
        assert_eq!(v.points, wall.nodes);
        assert_eq!(v.hexes, wall.hexes);

        let i = read_inp(&inp_path).unwrap();
        assert_eq!(i.nodes, wall.nodes);
        assert_eq!(i.hexes, wall.hexes);
        let sets: std::collections::HashMap<_, _> = i.node_sets.into_iter().collect();
        assert_eq!(sets["INNER_SURFACE"], wall.node_sets.inner_surface);
        assert_eq!(sets["TOP_RING"], wall.node_sets.top_ring);
    }

    #[test]
    fn combined_export_has_stable_id_mapping() {
        let (wall, ilt) = small_wall_and_ilt();
        assert!(check_conformal(&wall, &ilt).is_conformal());
        let model = FeModel::new(&wall, Some(&ilt), &BcSpec::default());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("combined.inp");
        export_combined_inp(&wall, Some(&ilt), &model, &path).unwrap();
        let back = read_inp(&path).unwrap();
        assert_eq!(back.nodes, model.nodes);
        // Wall nodes keep their ids: the merged table starts with them.
        assert_eq!(&back.nodes[..wall.nodes.len()], wall.nodes.as_slice());
        let sets: std::collections::HashMap<_, _> = back.node_sets.into_iter().collect();
        // Interface nodes resolve to wall ids (below n_wall_nodes).
        assert!(sets["WALL_INTERFACE"]
            .iter()
            .all(|&n| n < model.n_wall_nodes));
        assert_eq!(sets["WALL_INTERFACE"].len(), ilt.node_sets.wall_interface.len());
        // Lumen nodes are appended past the wall table.
        assert!(sets["LUMEN_SURFACE"]
            .iter()
            .all(|&n| n >= model.n_wall_nodes));
        assert_eq!(back.hexes, model.hexes);
        assert_eq!(back.tets, model.tets);
    }

    #[test]
    fn hex20_vtk_export_reads_back_corners() {
        let (wall, _) = small_wall_and_ilt();
        let h20 = crate::hexmesh::promote_to_hex20(&wall);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("wall20.vtk");
        export_hex20_vtk(&h20, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("\n25\n"));
        let back = read_vtk(&path).unwrap();
        // Corner-only read: first 8 ids of each hex20 are the corners.
        assert_eq!(back.hexes, wall.hexes);
        assert_eq!(back.points.len(), h20.nodes.len());
    }

    #[test]
    fn stress_vtk_carries_point_data() {
        let (wall, _) = small_wall_and_ilt();
        let model = FeModel::new(&wall, None, &BcSpec::default());
        let n = model.nodes.len();
        let field = StressField {
            tensor: vec![[0.1, 0.0, 0.0, 0.0, 0.0, 0.0]; n],
            max_principal: (0..n).map(|i| i as f64 * 0.001).collect(),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stress.vtk");
        export_stress_vtk(&model, &field, true, &path).unwrap();
        let back = read_vtk(&path).unwrap();
        let names: Vec<&str> = back.point_scalars.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names[0], "max_principal_stress_MPa");
        assert!(names.contains(&"stress_zx_MPa"));
        assert_eq!(back.point_scalars[0].1, field.max_principal);
    }

    #[test]
    fn json_writer_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.json");
        let b = dir.path().join("b.json");
        let value = serde_json::json!({"peak_mpa": 0.27, "p99_mpa": 0.2557});
        write_json(&a, &value).unwrap();
        write_json(&b, &value).unwrap();
        assert_eq!(
            std::fs::read(&a).unwrap(),
            std::fs::read(&b).unwrap()
        );
        let _p: Point = Point::new(0.0, 0.0, 0.0); // keep import used in all cfgs
    }
}
