//! Line-oriented `pmesh` text format.
//!
//! ```text
//! pmesh 1
//! <nv> <nc>
//! x y            # nv vertex lines
//! k i1 ... ik    # nc cell lines, 0-based counterclockwise vertex indices
//! ```
//!
//! Tokens are whitespace separated; `#` starts a comment that runs to the end
//! of the line; blank lines are ignored.

use std::fmt::Write as _;
use std::path::Path;

use super::{MeshError, MeshFamily, Point2, PolygonalMesh};

pub fn load_mesh(path: impl AsRef<Path>) -> Result<PolygonalMesh, MeshError> {
    let text = std::fs::read_to_string(path)?;
    parse_mesh(&text)
}

pub fn parse_mesh(text: &str) -> Result<PolygonalMesh, MeshError> {
    let mut lines = text.lines().enumerate().filter_map(|(i, raw)| {
        let content = raw.split('#').next().unwrap_or("").trim();
        (!content.is_empty()).then(|| (i + 1, content))
    });
    let err = |line: usize, message: String| MeshError::Parse { line, message };

    let (line, header) = lines.next().ok_or_else(|| err(1, "empty mesh file".into()))?;
    let header: Vec<&str> = header.split_whitespace().collect();
    if header != ["pmesh", "1"] {
        return Err(err(line, format!("expected `pmesh 1`, found `{}`", header.join(" "))));
    }

    let (line, counts) = lines
        .next()
        .ok_or_else(|| err(line + 1, "missing `<nv> <nc>` line".into()))?;
    let counts = parse_usizes(counts).map_err(|m| err(line, m))?;
    let [nv, nc] = counts[..] else {
        return Err(err(line, "expected two counts `<nv> <nc>`".into()));
    };

    let mut vertices = Vec::with_capacity(nv);
    let mut last = line;
    for _ in 0..nv {
        let (line, content) = lines
            .next()
            .ok_or_else(|| err(last + 1, format!("expected {nv} vertex lines")))?;
        last = line;
        let coords: Vec<f64> = content
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| err(line, format!("bad coordinate `{t}`: {e}"))))
            .collect::<Result<_, _>>()?;
        let [x, y] = coords[..] else {
            return Err(err(line, "expected `x y`".into()));
        };
        if !(x.is_finite() && y.is_finite()) {
            return Err(err(line, "non-finite coordinate".into()));
        }
        vertices.push(Point2::new(x, y));
    }

    let mut cells = Vec::with_capacity(nc);
    for c in 0..nc {
        let (line, content) = lines
            .next()
            .ok_or_else(|| err(last + 1, format!("expected {nc} cell lines")))?;
        last = line;
        let nums = parse_usizes(content).map_err(|m| err(line, format!("cell {c}: {m}")))?;
        let (&k, idx) = nums
            .split_first()
            .ok_or_else(|| err(line, format!("cell {c}: empty line")))?;
        if k != idx.len() {
            return Err(err(
                line,
                format!("cell {c}: declares {k} vertices but lists {}", idx.len()),
            ));
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= nv) {
            return Err(err(
                line,
                format!("cell {c}: vertex index {bad} out of range (nv = {nv})"),
            ));
        }
        cells.push(idx.to_vec());
    }
    if let Some((line, _)) = lines.next() {
        return Err(err(line, "unexpected trailing content".into()));
    }

    let (mesh, flipped) =
        PolygonalMesh::from_parts_reporting(vertices, cells, MeshFamily::External)?;
    if !flipped.is_empty() {
        log::warn!("corrected orientation of {} clockwise cell(s)", flipped.len());
    }
    Ok(mesh)
}

fn parse_usizes(s: &str) -> Result<Vec<usize>, String> {
    s.split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|e| format!("bad integer `{t}`: {e}")))
        .collect()
}

/// Serialises a mesh; coordinates use the shortest round-trip representation.
pub fn write_mesh(mesh: &PolygonalMesh) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "pmesh 1");
    let _ = writeln!(out, "# family: {}", mesh.family());
    let _ = writeln!(out, "{} {}", mesh.num_vertices(), mesh.num_cells());
    for p in mesh.vertices() {
        let _ = writeln!(out, "{:?} {:?}", p.x, p.y);
    }
    for cell in mesh.cells() {
        let _ = write!(out, "{}", cell.len());
        for v in cell {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    out
}

pub fn save_mesh(mesh: &PolygonalMesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    std::fs::write(path, write_mesh(mesh))?;
    Ok(())
}
