//! VTK legacy ASCII (DataFile Version 3.0) unstructured-grid writer and
//! a minimal reader for round trips and standalone audits.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! written file is a pure function of the in-memory mesh and re-reading
//! reproduces every coordinate bit-exactly.

use crate::error::MeshError;
use crate::geometry::Point;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

pub const VTK_TET4: u8 = 10;
pub const VTK_HEX8: u8 = 12;
pub const VTK_HEX20: u8 = 25;

/// One cell block: all cells share a VTK type and node count.
#[derive(Debug, Clone)]
pub struct CellBlock {
    pub vtk_type: u8,
    pub nodes_per_cell: usize,
    /// Flat connectivity, `nodes_per_cell` ids per cell.
    pub connectivity: Vec<usize>,
}

impl CellBlock {
    pub fn hexes(hexes: &[[usize; 8]]) -> Self {
        Self {
            vtk_type: VTK_HEX8,
            nodes_per_cell: 8,
            connectivity: hexes.iter().flatten().copied().collect(),
        }
    }

    pub fn hex20s(hexes: &[[usize; 20]]) -> Self {
        Self {
            vtk_type: VTK_HEX20,
            nodes_per_cell: 20,
            connectivity: hexes.iter().flatten().copied().collect(),
        }
    }

    pub fn tets(tets: &[[usize; 4]]) -> Self {
        Self {
            vtk_type: VTK_TET4,
            nodes_per_cell: 4,
            connectivity: tets.iter().flatten().copied().collect(),
        }
    }

    pub fn n_cells(&self) -> usize {
        self.connectivity.len() / self.nodes_per_cell
    }
}

/// Named per-point scalar field.
pub struct PointScalars<'a> {
    pub name: &'a str,
    pub values: &'a [f64],
}

/// Render a legacy ASCII unstructured grid to a string.
///
/// Deterministic: same inputs give the identical byte sequence.
pub fn render_vtk(
    title: &str,
    points: &[Point],
    blocks: &[CellBlock],
    point_scalars: &[PointScalars<'_>],
) -> String {
    let n_cells: usize = blocks.iter().map(CellBlock::n_cells).sum();
    let list_len: usize = blocks
        .iter()
        .map(|b| b.n_cells() * (b.nodes_per_cell + 1))
        .sum();
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(s, "{title}");
    s.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {} double", points.len());
    for p in points {
        let _ = writeln!(s, "{} {} {}", p.x, p.y, p.z);
    }
    let _ = writeln!(s, "CELLS {n_cells} {list_len}");
    for b in blocks {
        for cell in b.connectivity.chunks_exact(b.nodes_per_cell) {
            let _ = write!(s, "{}", b.nodes_per_cell);
            for &n in cell {
                let _ = write!(s, " {n}");
            }
            s.push('\n');
        }
    }
    let _ = writeln!(s, "CELL_TYPES {n_cells}");
    for b in blocks {
        for _ in 0..b.n_cells() {
            let _ = writeln!(s, "{}", b.vtk_type);
        }
    }
    if !point_scalars.is_empty() {
        let _ = writeln!(s, "POINT_DATA {}", points.len());
        for f in point_scalars {
            assert_eq!(f.values.len(), points.len(), "scalar field length");
            let _ = writeln!(s, "SCALARS {} double 1", f.name);
            s.push_str("LOOKUP_TABLE default\n");
            for v in f.values {
                let _ = writeln!(s, "{v}");
            }
        }
    }
    s
}

pub fn write_vtk(
    path: &Path,
    title: &str,
    points: &[Point],
    blocks: &[CellBlock],
    point_scalars: &[PointScalars<'_>],
) -> Result<(), MeshError> {
    let body = render_vtk(title, points, blocks, point_scalars);
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(body.as_bytes())?;
    f.flush()?;
    Ok(())
}

/// Mesh read back from a legacy ASCII VTK file.
#[derive(Debug, Clone, Default)]
pub struct VtkMesh {
    pub points: Vec<Point>,
    pub hexes: Vec<[usize; 8]>,
    pub tets: Vec<[usize; 4]>,
    pub point_scalars: Vec<(String, Vec<f64>)>,
}

/// Minimal legacy ASCII reader: POINTS, CELLS, CELL_TYPES, and scalar
/// POINT_DATA. Hex20 cells are read corner-only (first 8 ids); other
/// cell types are rejected.
pub fn read_vtk(path: &Path) -> Result<VtkMesh, MeshError> {
    let text = std::fs::read_to_string(path)?;
    let mut tokens = text.split_whitespace().peekable();
    let err = |m: &str| MeshError::InvalidParameter(format!("{}: {m}", path.display()));

    // Header: magic comment line, title line, ASCII, DATASET kind.
    let mut lines = text.lines();
    let magic = lines.next().unwrap_or("");
    if !magic.starts_with("# vtk DataFile") {
        return Err(err("not a legacy VTK file"));
    }
    // Skip the four header lines' tokens by scanning for POINTS.
    let mut points = Vec::new();
    let mut cells: Vec<Vec<usize>> = Vec::new();
    let mut types: Vec<u8> = Vec::new();
    let mut point_scalars = Vec::new();
    while let Some(tok) = tokens.next() {
        match tok {
            "ASCII" | "BINARY" => {
                if tok == "BINARY" {
                    return Err(err("binary VTK not supported"));
                }
            }
            "POINTS" => {
                let n: usize = next_parse(&mut tokens).ok_or_else(|| err("bad POINTS count"))?;
                let _dtype = tokens.next();
                points.reserve(n);
                for _ in 0..n {
                    let x: f64 = next_parse(&mut tokens).ok_or_else(|| err("bad coordinate"))?;
                    let y: f64 = next_parse(&mut tokens).ok_or_else(|| err("bad coordinate"))?;
                    let z: f64 = next_parse(&mut tokens).ok_or_else(|| err("bad coordinate"))?;
                    points.push(Point::new(x, y, z));
                }
            }
            "CELLS" => {
                let n: usize = next_parse(&mut tokens).ok_or_else(|| err("bad CELLS count"))?;
                let _total: usize =
                    next_parse(&mut tokens).ok_or_else(|| err("bad CELLS list size"))?;
                for _ in 0..n {
                    let k: usize = next_parse(&mut tokens).ok_or_else(|| err("bad cell size"))?;
                    let mut cell = Vec::with_capacity(k);
                    for _ in 0..k {
                        cell.push(next_parse(&mut tokens).ok_or_else(|| err("bad cell node"))?);
                    }
                    cells.push(cell);
                }
            }
            "CELL_TYPES" => {
                let n: usize = next_parse(&mut tokens).ok_or_else(|| err("bad CELL_TYPES"))?;
                for _ in 0..n {
                    types.push(next_parse(&mut tokens).ok_or_else(|| err("bad cell type"))?);
                }
            }
            "POINT_DATA" => {
                let _n: usize = next_parse(&mut tokens).ok_or_else(|| err("bad POINT_DATA"))?;
            }
            "SCALARS" => {
                let name = tokens.next().ok_or_else(|| err("missing scalar name"))?;
                let _dtype = tokens.next();
                // Optional component count, then LOOKUP_TABLE <name>.
                if tokens.peek() != Some(&"LOOKUP_TABLE") {
                    let _ncomp = tokens.next();
                }
                if tokens.next() != Some("LOOKUP_TABLE") {
                    return Err(err("expected LOOKUP_TABLE"));
                }
                let _table = tokens.next();
                let mut vals = Vec::with_capacity(points.len());
                for _ in 0..points.len() {
                    vals.push(next_parse(&mut tokens).ok_or_else(|| err("bad scalar value"))?);
                }
                point_scalars.push((name.to_string(), vals));
            }
            _ => {}
        }
    }
    if cells.len() != types.len() {
        return Err(err("CELLS and CELL_TYPES disagree"));
    }
    let mut mesh = VtkMesh {
        points,
        point_scalars,
        ..Default::default()
    };
    for (cell, &t) in cells.iter().zip(&types) {
        match t {
            VTK_TET4 if cell.len() == 4 => mesh.tets.push(std::array::from_fn(|i| cell[i])),
            VTK_HEX8 if cell.len() == 8 => mesh.hexes.push(std::array::from_fn(|i| cell[i])),
            VTK_HEX20 if cell.len() == 20 => mesh.hexes.push(std::array::from_fn(|i| cell[i])),
            other => {
                return Err(err(&format!(
                    "unsupported cell type {other} with {} nodes",
                    cell.len()
                )))
            }
        }
    }
    Ok(mesh)
}

fn next_parse<'a, T: std::str::FromStr, I: Iterator<Item = &'a str>>(it: &mut I) -> Option<T> {
    it.next().and_then(|t| t.parse().ok())
}
