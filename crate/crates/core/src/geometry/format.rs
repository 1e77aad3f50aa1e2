//! Plain-text mesh exchange format.
//!
//! Layout: a header line `V F level`, then `V` vertex lines `x y z w`
//! (position and lumped weight), then `F` triangle lines `i j k area`.
//! Reals carry 17 significant digits so positions round-trip bit-exactly.
//!
//! Import only accepts meshes whose triangles are in canonical subdivision
//! order (the order `export_mesh` writes); that is what lets the reader
//! rebuild the point-location hierarchy without storing it.

use std::io::{BufRead, Write};

use super::SphereMesh;
use crate::{Error, Result, Vec3};

pub fn export_mesh(mesh: &SphereMesh, out: &mut impl Write) -> Result<()> {
    writeln!(
        out,
        "{} {} {}",
        mesh.n_vertices(),
        mesh.triangles().len(),
        mesh.subdivision_level()
    )?;
    for (v, &p) in mesh.vertices().iter().enumerate() {
        writeln!(
            out,
            "{:.16e} {:.16e} {:.16e} {:.16e}",
            p.x,
            p.y,
            p.z,
            mesh.vertex_weights()[v]
        )?;
    }
    for (t, tri) in mesh.triangles().iter().enumerate() {
        writeln!(
            out,
            "{} {} {} {:.16e}",
            tri[0],
            tri[1],
            tri[2],
            mesh.triangle_areas()[t]
        )?;
    }
    Ok(())
}

pub fn import_mesh(input: impl BufRead) -> Result<SphereMesh> {
    let mut lines = input.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Parse("empty mesh file".into()))?;
    let header = header?;
    let mut it = header.split_whitespace();
    let nv: usize = parse_token(it.next(), 1, "vertex count")?;
    let nf: usize = parse_token(it.next(), 1, "face count")?;
    let level: u32 = parse_token(it.next(), 1, "subdivision level")?;
    if level > super::MAX_LEVEL {
        return Err(Error::Parse(format!(
            "subdivision level {level} out of range"
        )));
    }
    let scale = 4usize.pow(level);
    if nv != 10 * scale + 2 || nf != 20 * scale {
        return Err(Error::Parse(format!(
            "header {nv} {nf} {level} is not an icosphere signature"
        )));
    }

    let mut vertices = Vec::with_capacity(nv);
    let mut weights = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (no, line) = lines
            .next()
            .ok_or_else(|| Error::Parse("truncated vertex block".into()))?;
        let line = line?;
        let vals = parse_floats(&line, 4, no + 1)?;
        vertices.push(Vec3::new(vals[0], vals[1], vals[2]));
        weights.push(vals[3]);
    }

    let mut triangles = Vec::with_capacity(nf);
    let mut areas = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (no, line) = lines
            .next()
            .ok_or_else(|| Error::Parse("truncated triangle block".into()))?;
        let line = line?;
        let mut it = line.split_whitespace();
        let i: u32 = parse_token(it.next(), no + 1, "triangle index")?;
        let j: u32 = parse_token(it.next(), no + 1, "triangle index")?;
        let k: u32 = parse_token(it.next(), no + 1, "triangle index")?;
        let area: f64 = parse_token(it.next(), no + 1, "triangle area")?;
        for idx in [i, j, k] {
            if idx as usize >= nv {
                return Err(Error::Parse(format!(
                    "line {}: vertex index {idx} out of range",
                    no + 1
                )));
            }
        }
        triangles.push([i, j, k]);
        areas.push(area);
    }

    let level_triangles = rebuild_hierarchy(&vertices, triangles, level)?;
    let mesh = SphereMesh::from_parts(vertices, level_triangles, level)?;

    // The stored measure columns are redundant; recomputation is the source
    // of truth, and disagreement means the file was edited inconsistently.
    for (t, &a) in areas.iter().enumerate() {
        if (a - mesh.triangle_areas()[t]).abs() > 1e-9 {
            return Err(Error::Parse(format!(
                "triangle {t}: stored area {a} disagrees with geometry"
            )));
        }
    }
    for (v, &w) in weights.iter().enumerate() {
        if (w - mesh.vertex_weights()[v]).abs() > 1e-9 {
            return Err(Error::Parse(format!(
                "vertex {v}: stored weight {w} disagrees with geometry"
            )));
        }
    }
    Ok(mesh)
}

/// Reconstructs the coarser subdivision levels from canonical child order:
/// the children of parent `t` are `4t..4t+4`, corner children first.
fn rebuild_hierarchy(
    vertices: &[Vec3],
    finest: Vec<[u32; 3]>,
    level: u32,
) -> Result<Vec<Vec<[u32; 3]>>> {
    let mut levels = vec![finest];
    for _ in 0..level {
        let child = levels.last().unwrap();
        let mut parent = Vec::with_capacity(child.len() / 4);
        for t in 0..child.len() / 4 {
            let c0 = child[4 * t];
            let c1 = child[4 * t + 1];
            let c2 = child[4 * t + 2];
            let c3 = child[4 * t + 3];
            // Corner children share midpoints with the central child.
            let consistent =
                c0[1] == c1[0] && c1[2] == c2[1] && c2[0] == c0[2] && c3 == [c0[1], c1[2], c2[0]];
            if !consistent {
                return Err(Error::Parse(format!(
                    "triangles around parent {t} are not in canonical subdivision order"
                )));
            }
            let tri = [c0[0], c1[1], c2[2]];
            for (corner_a, corner_b, mid) in [
                (tri[0], tri[1], c0[1]),
                (tri[1], tri[2], c1[2]),
                (tri[2], tri[0], c2[0]),
            ] {
                let expect =
                    (vertices[corner_a as usize] + vertices[corner_b as usize]).normalized();
                if (expect - vertices[mid as usize]).norm() > 1e-12 {
                    return Err(Error::Parse(format!(
                        "vertex {mid} is not the midpoint of edge ({corner_a},{corner_b})"
                    )));
                }
            }
            parent.push(tri);
        }
        levels.push(parent);
    }
    levels.reverse();
    Ok(levels)
}

fn parse_token<T: std::str::FromStr>(token: Option<&str>, line: usize, what: &str) -> Result<T> {
    token
        .ok_or_else(|| Error::Parse(format!("line {line}: missing {what}")))?
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: malformed {what}")))
}

fn parse_floats(line: &str, n: usize, line_no: usize) -> Result<Vec<f64>> {
    let vals: std::result::Result<Vec<f64>, _> = line.split_whitespace().map(str::parse).collect();
    let vals = vals.map_err(|_| Error::Parse(format!("line {line_no}: malformed real")))?;
    if vals.len() != n {
        return Err(Error::Parse(format!(
            "line {line_no}: expected {n} fields, found {}",
            vals.len()
        )));
    }
    Ok(vals)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let mesh = SphereMesh::build_icosphere(2).unwrap();
        let mut buf = Vec::new();
        export_mesh(&mesh, &mut buf).unwrap();
        let back = import_mesh(buf.as_slice()).unwrap();
        assert_eq!(back.n_vertices(), mesh.n_vertices());
        assert_eq!(back.triangles(), mesh.triangles());
        for v in 0..mesh.n_vertices() {
            assert_eq!(back.vertex(v), mesh.vertex(v));
        }
        // Re-export must reproduce the identical byte stream.
        let mut buf2 = Vec::new();
        export_mesh(&back, &mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn import_rejects_malformed_header() {
        assert!(import_mesh("12 20\n".as_bytes()).is_err());
        assert!(import_mesh("13 20 0\n".as_bytes()).is_err());
    }

    #[test]
    fn import_rejects_tampered_geometry() {
        let mesh = SphereMesh::build_icosphere(1).unwrap();
        let mut buf = Vec::new();
        export_mesh(&mesh, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        // Swap two triangle lines: breaks canonical subdivision order.
        let mut lines: Vec<&str> = text.lines().collect();
        lines.swap(43, 44);
        let swapped = lines.join("\n");
        assert!(import_mesh(swapped.as_bytes()).is_err());
    }

    #[test]
    fn import_rejects_edited_weight() {
        let mesh = SphereMesh::build_icosphere(1).unwrap();
        let mut buf = Vec::new();
        export_mesh(&mesh, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        // Vertex 0 line: zero out the weight column.
        let mut fields: Vec<String> = lines[1].split_whitespace().map(String::from).collect();
        fields[3] = "0.0".into();
        lines[1] = fields.join(" ");
        let edited = lines.join("\n");
        assert!(import_mesh(edited.as_bytes()).is_err());
    }
}
