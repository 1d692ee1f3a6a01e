use std::collections::BTreeMap;
use std::fmt;

use super::geometry::signed_area;
use super::Point2;

/// Domain the cells are expected to tile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// `[0, 1]^2`: area and Euler characteristic are checked.
    UnitSquare,
    /// Unknown domain: only local (cell and edge) checks.
    Any,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonFiniteVertex { vertex: usize },
    TooFewVertices { cell: usize },
    IndexOutOfRange { cell: usize, index: usize },
    RepeatedVertex { cell: usize, vertex: usize },
    NonSimple { cell: usize },
    NonPositiveArea { cell: usize, area: f64 },
    EdgeIncidence { edge: [usize; 2], count: usize },
    EdgeSameDirection { edge: [usize; 2] },
    UnusedVertex { vertex: usize },
    AreaMismatch { expected: f64, actual: f64 },
    Euler { vertices: usize, edges: usize, faces: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFiniteVertex { vertex } => write!(f, "vertex {vertex} is not finite"),
            Violation::TooFewVertices { cell } => write!(f, "cell {cell} has fewer than 3 vertices"),
            Violation::IndexOutOfRange { cell, index } => {
                write!(f, "cell {cell} references missing vertex {index}")
            }
            Violation::RepeatedVertex { cell, vertex } => {
                write!(f, "cell {cell} repeats vertex {vertex}")
            }
            Violation::NonSimple { cell } => write!(f, "cell {cell} self-intersects"),
            Violation::NonPositiveArea { cell, area } => {
                write!(f, "cell {cell} has non-positive area {area:e}")
            }
            Violation::EdgeIncidence { edge, count } => {
                write!(f, "edge {edge:?} is shared by {count} cells")
            }
            Violation::EdgeSameDirection { edge } => {
                write!(f, "edge {edge:?} is traversed in the same direction by both cells")
            }
            Violation::UnusedVertex { vertex } => write!(f, "vertex {vertex} belongs to no cell"),
            Violation::AreaMismatch { expected, actual } => {
                write!(f, "cell areas sum to {actual} instead of {expected}")
            }
            Violation::Euler {
                vertices,
                edges,
                faces,
            } => write!(f, "Euler check failed: V - E + F = {vertices} - {edges} + {faces} != 1"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub first_violation: Option<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.first_violation.is_none()
    }
}

pub(super) fn check_indices(vertices: &[Point2], cells: &[Vec<usize>]) -> Result<(), Violation> {
    if let Some(v) = vertices.iter().position(|p| !p.is_finite()) {
        return Err(Violation::NonFiniteVertex { vertex: v });
    }
    for (c, cell) in cells.iter().enumerate() {
        if cell.len() < 3 {
            return Err(Violation::TooFewVertices { cell: c });
        }
        if let Some(&index) = cell.iter().find(|&&v| v >= vertices.len()) {
            return Err(Violation::IndexOutOfRange { cell: c, index });
        }
        let mut sorted = cell.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Violation::RepeatedVertex {
                cell: c,
                vertex: w[0],
            });
        }
    }
    Ok(())
}

fn segments_touch(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let o = |p: Point2, q: Point2, r: Point2| (q - p).cross(r - p);
    let on = |p: Point2, q: Point2, r: Point2| {
        r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    let (d1, d2, d3, d4) = (o(c, d, a), o(c, d, b), o(a, b, c), o(a, b, d));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on(c, d, a))
        || (d2 == 0.0 && on(c, d, b))
        || (d3 == 0.0 && on(a, b, c))
        || (d4 == 0.0 && on(a, b, d))
}

fn is_simple(ring: &[Point2]) -> bool {
    let n = ring.len();
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        // Adjacent edge folding back onto this one.
        let c = ring[(i + 2) % n];
        if (b - a).cross(c - b) == 0.0 && (b - a).dot(c - b) < 0.0 {
            return false;
        }
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_touch(a, b, ring[j], ring[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

/// Checks every mesh invariant and reports the first violation found.
///
/// Cells are expected counterclockwise. Checks, in order: finite vertices,
/// valid cycles, simple cells with positive area, edge incidence (one cell
/// on the boundary, two opposite-directed cells in the interior), no unused
/// vertices, and for the unit square the area sum and `V - E + F = 1`.
pub fn validate_mesh(vertices: &[Point2], cells: &[Vec<usize>], domain: Domain) -> ValidationReport {
    let fail = |v| ValidationReport {
        first_violation: Some(v),
    };
    if let Err(v) = check_indices(vertices, cells) {
        return fail(v);
    }

    let mut total_area = 0.0;
    for (c, cell) in cells.iter().enumerate() {
        let ring: Vec<Point2> = cell.iter().map(|&v| vertices[v]).collect();
        if !is_simple(&ring) {
            return fail(Violation::NonSimple { cell: c });
        }
        let area = signed_area(&ring);
        if area <= 0.0 {
            return fail(Violation::NonPositiveArea { cell: c, area });
        }
        total_area += area;
    }

    // (forward count, backward count) per undirected edge.
    let mut incidence: BTreeMap<(usize, usize), (usize, usize)> = BTreeMap::new();
    let mut used = vec![false; vertices.len()];
    for cell in cells {
        let k = cell.len();
        for i in 0..k {
            let (a, b) = (cell[i], cell[(i + 1) % k]);
            used[a] = true;
            let entry = incidence.entry((a.min(b), a.max(b))).or_default();
            if a < b {
                entry.0 += 1;
            } else {
                entry.1 += 1;
            }
        }
    }
    for (&(a, b), &(fwd, bwd)) in &incidence {
        let count = fwd + bwd;
        if count > 2 {
            return fail(Violation::EdgeIncidence {
                edge: [a, b],
                count,
            });
        }
        if fwd == 2 || bwd == 2 {
            return fail(Violation::EdgeSameDirection { edge: [a, b] });
        }
    }
    if let Some(v) = used.iter().position(|&u| !u) {
        return fail(Violation::UnusedVertex { vertex: v });
    }

    if domain == Domain::UnitSquare {
        if (total_area - 1.0).abs() > 1e-10 {
            return fail(Violation::AreaMismatch {
                expected: 1.0,
                actual: total_area,
            });
        }
        // Boundary edges must lie on the square's sides; anything else is a
        // dangling edge or a hole.
        for (&(a, b), &(fwd, bwd)) in &incidence {
            if fwd + bwd == 1 && !on_square_side(vertices[a], vertices[b]) {
                return fail(Violation::EdgeIncidence {
                    edge: [a, b],
                    count: 1,
                });
            }
        }
        let (v, e, f) = (vertices.len(), incidence.len(), cells.len());
        if v as i64 - e as i64 + f as i64 != 1 {
            return fail(Violation::Euler {
                vertices: v,
                edges: e,
                faces: f,
            });
        }
    }
    ValidationReport {
        first_violation: None,
    }
}

fn on_square_side(a: Point2, b: Point2) -> bool {
    const TOL: f64 = 1e-12;
    let same = |u: f64, w: f64, s: f64| (u - s).abs() < TOL && (w - s).abs() < TOL;
    same(a.x, b.x, 0.0) || same(a.x, b.x, 1.0) || same(a.y, b.y, 0.0) || same(a.y, b.y, 1.0)
}
