//! STL reading and writing (binary and ASCII).
//!
//! Binary coordinates are stored as little-endian f32 per the format, so a
//! binary write/read cycle is bit-exact at f32 precision. ASCII output uses
//! 17 significant digits, which round-trips f64 exactly.

use super::{Point, TriSurface, Vec3};
use crate::error::MeshError;
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

/// Default vertex merge tolerance in mm.
pub const MERGE_TOLERANCE: f64 = 1e-6;

/// Result of loading an STL file.
#[derive(Debug, Clone)]
pub struct StlImport {
    pub surface: TriSurface,
    /// Zero-area facets dropped during import.
    pub dropped_degenerate: usize,
}

/// Load a binary or ASCII STL file, merging duplicate vertices within
/// [`MERGE_TOLERANCE`].
pub fn load_stl(path: &Path) -> Result<StlImport, MeshError> {
    let mut file = File::open(path)?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)?;
    if bytes.is_empty() {
        return Err(MeshError::StlParse {
            offset: 0,
            message: "empty file".into(),
        });
    }
    let facets = if looks_binary(&bytes) {
        parse_binary(&bytes)?
    } else {
        parse_ascii(&bytes)?
    };
    if facets.is_empty() {
        return Err(MeshError::EmptySurface(format!(
            "{} contains no facets",
            path.display()
        )));
    }
    Ok(build_surface(&facets, MERGE_TOLERANCE))
}

fn looks_binary(bytes: &[u8]) -> bool {
    if bytes.len() < 84 {
        return false;
    }
    let count = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    // A binary file's length is fully determined by its facet count.
    bytes.len() == 84 + 50 * count
}

fn parse_binary(bytes: &[u8]) -> Result<Vec<[Point; 3]>, MeshError> {
    let count = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    if count == 0 {
        return Err(MeshError::EmptySurface(
            "binary STL declares zero facets".into(),
        ));
    }
    let mut facets = Vec::with_capacity(count);
    for f in 0..count {
        let base = 84 + 50 * f;
        let mut pts = [Point::origin(); 3];
        for (v, pt) in pts.iter_mut().enumerate() {
            // Skip the 12-byte normal, 12 bytes per vertex.
            let off = base + 12 + 12 * v;
            let x = f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
            let y = f32::from_le_bytes(bytes[off + 4..off + 8].try_into().unwrap());
            let z = f32::from_le_bytes(bytes[off + 8..off + 12].try_into().unwrap());
            if !(x.is_finite() && y.is_finite() && z.is_finite()) {
                return Err(MeshError::StlParse {
                    offset: off as u64,
                    message: format!("non-finite vertex in facet {f}"),
                });
            }
            *pt = Point::new(x as f64, y as f64, z as f64);
        }
        facets.push(pts);
    }
    Ok(facets)
}

fn parse_ascii(bytes: &[u8]) -> Result<Vec<[Point; 3]>, MeshError> {
    let reader = BufReader::new(bytes);
    let mut facets = Vec::new();
    let mut current: Vec<Point> = Vec::with_capacity(3);
    let mut offset: u64 = 0;
    for line in reader.lines() {
        let line = line.map_err(|e| MeshError::StlParse {
            offset,
            message: e.to_string(),
        })?;
        let line_len = line.len() as u64 + 1;
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix("vertex") {
            let coords: Vec<f64> = rest
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|_| MeshError::StlParse {
                        offset,
                        message: format!("bad coordinate token '{tok}'"),
                    })
                })
                .collect::<Result<_, _>>()?;
            if coords.len() != 3 {
                return Err(MeshError::StlParse {
                    offset,
                    message: format!("expected 3 coordinates, got {}", coords.len()),
                });
            }
            current.push(Point::new(coords[0], coords[1], coords[2]));
        } else if trimmed.starts_with("endfacet") {
            if current.len() != 3 {
                return Err(MeshError::StlParse {
                    offset,
                    message: format!("facet closed with {} vertices", current.len()),
                });
            }
            facets.push([current[0], current[1], current[2]]);
            current.clear();
        }
        offset += line_len;
    }
    if !current.is_empty() {
        return Err(MeshError::StlParse {
            offset,
            message: "truncated facet at end of file".into(),
        });
    }
    Ok(facets)
}

/// Merge facet soup into an indexed surface using a spatial hash.
fn build_surface(facets: &[[Point; 3]], tol: f64) -> StlImport {
    let mut grid: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    let mut vertices: Vec<Point> = Vec::new();
    let mut triangles = Vec::with_capacity(facets.len());
    let mut dropped = 0usize;

    let cell = |x: f64| (x / tol).floor() as i64;
    let mut index_of = |p: Point, vertices: &mut Vec<Point>| -> usize {
        let (cx, cy, cz) = (cell(p.x), cell(p.y), cell(p.z));
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = grid.get(&(cx + dx, cy + dy, cz + dz)) {
                        for &id in ids {
                            if (vertices[id] - p).norm() <= tol {
                                return id;
                            }
                        }
                    }
                }
            }
        }
        let id = vertices.len();
        vertices.push(p);
        grid.entry((cx, cy, cz)).or_default().push(id);
        id
    };

    for f in facets {
        let i0 = index_of(f[0], &mut vertices);
        let i1 = index_of(f[1], &mut vertices);
        let i2 = index_of(f[2], &mut vertices);
        if i0 == i1 || i1 == i2 || i0 == i2 {
            dropped += 1;
            continue;
        }
        let area = 0.5
            * (vertices[i1] - vertices[i0])
                .cross(&(vertices[i2] - vertices[i0]))
                .norm();
        if area <= 0.0 {
            dropped += 1;
            continue;
        }
        triangles.push([i0, i1, i2]);
    }

    StlImport {
        surface: TriSurface {
            vertices,
            triangles,
        },
        dropped_degenerate: dropped,
    }
}

fn facet_normal(surface: &TriSurface, t: &[usize; 3]) -> Vec3 {
    let a = surface.vertices[t[0]];
    let n = (surface.vertices[t[1]] - a).cross(&(surface.vertices[t[2]] - a));
    let len = n.norm();
    if len > 0.0 {
        n / len
    } else {
        Vec3::zeros()
    }
}

/// Write binary STL (little-endian f32 coordinates).
pub fn write_stl_binary(surface: &TriSurface, path: &Path) -> Result<(), MeshError> {
    let mut w = BufWriter::new(File::create(path)?);
    let mut header = [0u8; 80];
    let tag = b"aneumesh binary stl";
    header[..tag.len()].copy_from_slice(tag);
    w.write_all(&header)?;
    w.write_all(&(surface.triangles.len() as u32).to_le_bytes())?;
    for t in &surface.triangles {
        let n = facet_normal(surface, t);
        for c in [n.x, n.y, n.z] {
            w.write_all(&(c as f32).to_le_bytes())?;
        }
        for &vi in t {
            let v = surface.vertices[vi];
            for c in [v.x, v.y, v.z] {
                w.write_all(&(c as f32).to_le_bytes())?;
            }
        }
        w.write_all(&0u16.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Write ASCII STL with f64 round-trip precision.
pub fn write_stl_ascii(surface: &TriSurface, name: &str, path: &Path) -> Result<(), MeshError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "solid {name}")?;
    for t in &surface.triangles {
        let n = facet_normal(surface, t);
        writeln!(w, "  facet normal {:.9e} {:.9e} {:.9e}", n.x, n.y, n.z)?;
        writeln!(w, "    outer loop")?;
        for &vi in t {
            let v = surface.vertices[vi];
            writeln!(w, "      vertex {:.16e} {:.16e} {:.16e}", v.x, v.y, v.z)?;
        }
        writeln!(w, "    endloop")?;
        writeln!(w, "  endfacet")?;
    }
    writeln!(w, "endsolid {name}")?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn unit_cube_ascii() -> String {
        // 12 facets, duplicated corner coordinates merge to 8 vertices.
        let v = |x: f64, y: f64, z: f64| format!("vertex {x} {y} {z}");
        let facet = |a: (f64, f64, f64), b: (f64, f64, f64), c: (f64, f64, f64)| {
            format!(
                "facet normal 0 0 0\nouter loop\n{}\n{}\n{}\nendloop\nendfacet\n",
                v(a.0, a.1, a.2),
                v(b.0, b.1, b.2),
                v(c.0, c.1, c.2)
            )
        };
        let p = |i: usize| {
            (
                (i & 1) as f64,
                ((i >> 1) & 1) as f64,
                ((i >> 2) & 1) as f64,
            )
        };
        let quads = [
            [0, 2, 3, 1], // z=0
            [4, 5, 7, 6], // z=1
            [0, 1, 5, 4], // y=0
            [2, 6, 7, 3], // y=1
            [0, 4, 6, 2], // x=0
            [1, 3, 7, 5], // x=1
        ];
        let mut s = String::from("solid cube\n");
        for q in quads {
            s += &facet(p(q[0]), p(q[1]), p(q[2]));
            s += &facet(p(q[0]), p(q[2]), p(q[3]));
        }
        s += "endsolid cube\n";
        s
    }

    #[test]
    fn ascii_unit_cube_merges_to_8_vertices() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("cube.stl");
        std::fs::write(&path, unit_cube_ascii()).unwrap();
        let import = load_stl(&path).unwrap();
        assert_eq!(import.surface.vertices.len(), 8);
        assert_eq!(import.surface.triangles.len(), 12);
        assert_eq!(import.dropped_degenerate, 0);
        assert!(import.surface.is_watertight());
    }

    #[test]
    fn binary_zero_facets_is_empty_surface_error() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("empty.stl");
        let mut bytes = vec![0u8; 84];
        bytes[80..84].copy_from_slice(&0u32.to_le_bytes());
        std::fs::write(&path, bytes).unwrap();
        match load_stl(&path) {
            Err(MeshError::EmptySurface(_)) => {}
            other => panic!("expected EmptySurface, got {other:?}"),
        }
    }

    #[test]
    fn malformed_ascii_reports_offset() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.stl");
        std::fs::write(
            &path,
            "solid x\nfacet normal 0 0 0\nouter loop\nvertex 0 0 zzz\n",
        )
        .unwrap();
        match load_stl(&path) {
            Err(MeshError::StlParse { offset, .. }) => assert!(offset > 0),
            other => panic!("expected StlParse, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_facets_dropped_with_count() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("degen.stl");
        let mut s = unit_cube_ascii();
        s = s.replace(
            "endsolid cube\n",
            "facet normal 0 0 0\nouter loop\nvertex 0 0 0\nvertex 0 0 0\nvertex 1 1 1\nendloop\nendfacet\nendsolid cube\n",
        );
        std::fs::write(&path, s).unwrap();
        let import = load_stl(&path).unwrap();
        assert_eq!(import.dropped_degenerate, 1);
        assert_eq!(import.surface.triangles.len(), 12);
    }

    #[test]
    fn binary_round_trip_is_f32_bit_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("rt.stl");
        let surface = TriSurface {
            vertices: vec![
                Point::new(0.1234567, 1.5, -2.25),
                Point::new(3.0, 0.0, 0.5),
                Point::new(0.0, 2.0, 1.0),
            ],
            triangles: vec![[0, 1, 2]],
        };
        write_stl_binary(&surface, &path).unwrap();
        let a = load_stl(&path).unwrap().surface;
        let path2 = dir.path().join("rt2.stl");
        write_stl_binary(&a, &path2).unwrap();
        let b1 = std::fs::read(&path).unwrap();
        let b2 = std::fs::read(&path2).unwrap();
        assert_eq!(b1, b2);
        // And the quantized coordinates match f32 rounding of the input.
        for (v, orig) in a.vertices.iter().zip(surface.vertices.iter()) {
            assert_eq!(v.x, orig.x as f32 as f64);
            assert_eq!(v.y, orig.y as f32 as f64);
            assert_eq!(v.z, orig.z as f32 as f64);
        }
    }
}
