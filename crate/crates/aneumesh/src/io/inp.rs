//! Solver-exchange INP writer and a minimal reader (node / element /
//! node-set blocks, 1-based ids).

use crate::error::MeshError;
use crate::geometry::Point;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

/// One element block sharing a type keyword and element set name.
pub struct ElementBlock<'a> {
    /// Solver element keyword, e.g. "C3D8", "C3D4", "C3D20".
    pub element_type: &'a str,
    pub elset: &'a str,
    pub nodes_per_element: usize,
    pub connectivity: &'a [usize],
}

impl<'a> ElementBlock<'a> {
    pub fn n_elements(&self) -> usize {
        self.connectivity.len() / self.nodes_per_element
    }
}

/// Render an INP deck. Node and element ids are 1-based and sequential;
/// element ids continue across blocks. Node sets list 16 ids per line.
pub fn render_inp(
    heading: &str,
    nodes: &[Point],
    blocks: &[ElementBlock<'_>],
    node_sets: &[(&str, &[usize])],
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "*HEADING\n{heading}");
    s.push_str("*NODE\n");
    for (i, p) in nodes.iter().enumerate() {
        let _ = writeln!(s, "{}, {}, {}, {}", i + 1, p.x, p.y, p.z);
    }
    let mut eid = 1usize;
    for b in blocks {
        let _ = writeln!(s, "*ELEMENT, TYPE={}, ELSET={}", b.element_type, b.elset);
        for el in b.connectivity.chunks_exact(b.nodes_per_element) {
            let _ = write!(s, "{eid}");
            for &n in el {
                let _ = write!(s, ", {}", n + 1);
            }
            s.push('\n');
            eid += 1;
        }
    }
    for (name, ids) in node_sets {
        let _ = writeln!(s, "*NSET, NSET={name}");
        for chunk in ids.chunks(16) {
            let line: Vec<String> = chunk.iter().map(|&n| (n + 1).to_string()).collect();
            let _ = writeln!(s, "{}", line.join(", "));
        }
    }
    s
}

pub fn write_inp(
    path: &Path,
    heading: &str,
    nodes: &[Point],
    blocks: &[ElementBlock<'_>],
    node_sets: &[(&str, &[usize])],
) -> Result<(), MeshError> {
    let body = render_inp(heading, nodes, blocks, node_sets);
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(body.as_bytes())?;
    f.flush()?;
    Ok(())
}

/// Mesh read back from an INP deck (0-based ids after import).
#[derive(Debug, Clone, Default)]
pub struct InpMesh {
    pub nodes: Vec<Point>,
    pub hexes: Vec<[usize; 8]>,
    pub tets: Vec<[usize; 4]>,
    pub node_sets: Vec<(String, Vec<usize>)>,
}

/// Minimal INP reader: *NODE, *ELEMENT (C3D8 / C3D4; C3D20 corner-only),
/// *NSET blocks. Node ids may be sparse; they are remapped to dense
/// 0-based ids in first-seen order.
pub fn read_inp(path: &Path) -> Result<InpMesh, MeshError> {
    let text = std::fs::read_to_string(path)?;
    let err = |m: String| MeshError::InvalidParameter(format!("{}: {m}", path.display()));
    let mut mesh = InpMesh::default();
    let mut id_map = std::collections::HashMap::new();

    #[derive(PartialEq)]
    enum Section {
        None,
        Node,
        Element { nodes_per: usize, corners: usize },
        Nset(usize),
    }
    let mut section = Section::None;
    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with("**") {
            continue;
        }
        if let Some(rest) = line.strip_prefix('*') {
            let upper = rest.to_ascii_uppercase();
            section = if upper.starts_with("NODE") {
                Section::Node
            } else if upper.starts_with("ELEMENT") {
                let etype = upper
                    .split(',')
                    .find_map(|p| p.trim().strip_prefix("TYPE=").map(str::to_string))
                    .ok_or_else(|| err("*ELEMENT without TYPE=".into()))?;
                match etype.as_str() {
                    "C3D8" | "C3D8R" | "C3D8H" => Section::Element {
                        nodes_per: 8,
                        corners: 8,
                    },
                    "C3D4" => Section::Element {
                        nodes_per: 4,
                        corners: 4,
                    },
                    "C3D20" | "C3D20R" | "C3D20RH" => Section::Element {
                        nodes_per: 20,
                        corners: 8,
                    },
                    other => return Err(err(format!("unsupported element type {other}"))),
                }
            } else if let Some(name) = upper
                .split(',')
                .find_map(|p| p.trim().strip_prefix("NSET=").map(str::to_string))
            {
                mesh.node_sets.push((name, Vec::new()));
                Section::Nset(mesh.node_sets.len() - 1)
            } else {
                Section::None
            };
            continue;
        }
        let fields: Vec<&str> = line
            .split(',')
            .map(str::trim)
            .filter(|f| !f.is_empty())
            .collect();
        match &section {
            Section::Node => {
                if fields.len() < 4 {
                    return Err(err(format!("bad node line: {line}")));
                }
                let id: usize = fields[0].parse().map_err(|_| err("bad node id".into()))?;
                let xyz: Result<Vec<f64>, _> = fields[1..4].iter().map(|f| f.parse()).collect();
                let xyz = xyz.map_err(|_| err("bad node coordinate".into()))?;
                id_map.insert(id, mesh.nodes.len());
                mesh.nodes.push(Point::new(xyz[0], xyz[1], xyz[2]));
            }
            Section::Element { nodes_per, corners } => {
                if fields.len() != nodes_per + 1 {
                    return Err(err(format!("bad element line: {line}")));
                }
                let ids: Result<Vec<usize>, _> =
                    fields[1..=*corners].iter().map(|f| f.parse()).collect();
                let ids = ids.map_err(|_| err("bad element node id".into()))?;
                let mapped: Result<Vec<usize>, MeshError> = ids
                    .iter()
                    .map(|id| {
                        id_map
                            .get(id)
                            .copied()
                            .ok_or_else(|| err(format!("element references unknown node {id}")))
                    })
                    .collect();
                let mapped = mapped?;
                match corners {
                    8 => mesh.hexes.push(std::array::from_fn(|i| mapped[i])),
                    4 => mesh.tets.push(std::array::from_fn(|i| mapped[i])),
                    _ => unreachable!(),
                }
            }
            Section::Nset(idx) => {
                for f in fields {
                    let id: usize = f.parse().map_err(|_| err("bad node-set id".into()))?;
                    let mapped = *id_map
                        .get(&id)
                        .ok_or_else(|| err(format!("node set references unknown node {id}")))?;
                    mesh.node_sets[*idx].1.push(mapped);
                }
            }
            Section::None => {}
        }
    }
    Ok(mesh)
}
