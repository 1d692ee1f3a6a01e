//! Polygonal meshes of planar domains.
//!
//! A [`PolygonalMesh`] is immutable once built: construction orients every
//! cell counterclockwise, validates the tiling and caches per-cell geometry
//! (area, centroid, ear-clip triangulation) together with the edge list and
//! the vertex-to-cell adjacency used for patches.

mod generate;
mod geometry;
mod io;
mod patch;
mod validate;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use thiserror::Error;

pub use generate::generate_mesh;
pub use geometry::{
    ear_clip, outward_normal, polygon_diameter, ring_centroid, signed_area, GeometryError,
};
pub use io::{load_mesh, parse_mesh, save_mesh, write_mesh};
pub use patch::{ElementPatch, PatchKind};
pub use validate::{validate_mesh, Domain, ValidationReport, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 2D cross product.
    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

/// The benchmark mesh families on the unit square, plus meshes read from disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MeshFamily {
    TriS,
    QuadS,
    HexS,
    ConcS,
    TriU,
    QuadU,
    PolyU,
    ConcU,
    External,
}

impl MeshFamily {
    /// The eight generated families, structured first.
    pub const GENERATED: [MeshFamily; 8] = [
        MeshFamily::TriS,
        MeshFamily::QuadS,
        MeshFamily::HexS,
        MeshFamily::ConcS,
        MeshFamily::TriU,
        MeshFamily::QuadU,
        MeshFamily::PolyU,
        MeshFamily::ConcU,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MeshFamily::TriS => "tri-s",
            MeshFamily::QuadS => "quad-s",
            MeshFamily::HexS => "hex-s",
            MeshFamily::ConcS => "conc-s",
            MeshFamily::TriU => "tri-u",
            MeshFamily::QuadU => "quad-u",
            MeshFamily::PolyU => "poly-u",
            MeshFamily::ConcU => "conc-u",
            MeshFamily::External => "external",
        }
    }

    pub fn is_structured(self) -> bool {
        matches!(
            self,
            MeshFamily::TriS | MeshFamily::QuadS | MeshFamily::HexS | MeshFamily::ConcS
        )
    }
}

impl fmt::Display for MeshFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MeshFamily {
    type Err = MeshError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        Ok(match key.as_str() {
            "tris" => MeshFamily::TriS,
            "quads" => MeshFamily::QuadS,
            "hexs" => MeshFamily::HexS,
            "concs" => MeshFamily::ConcS,
            "triu" => MeshFamily::TriU,
            "quadu" => MeshFamily::QuadU,
            "polyu" => MeshFamily::PolyU,
            "concu" => MeshFamily::ConcU,
            "external" => MeshFamily::External,
            _ => return Err(MeshError::UnsupportedFamily(s.to_string())),
        })
    }
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("unsupported mesh family `{0}`")]
    UnsupportedFamily(String),

    #[error("mesh generation failed for {family} (n = {subdivisions}): {reason}")]
    Generation {
        family: MeshFamily,
        subdivisions: usize,
        reason: String,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid mesh: {0}")]
    Invalid(Violation),

    #[error("cell {cell}: {reason}")]
    Geometry { cell: usize, reason: GeometryError },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A unique mesh edge, stored with `vertices[0] < vertices[1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub vertices: [usize; 2],
    /// First incident cell, and the second one for interior edges.
    pub cells: (usize, Option<usize>),
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.cells.1.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct PolygonalMesh {
    vertices: Vec<Point2>,
    cells: Vec<Vec<usize>>,
    family: MeshFamily,
    boundary_vertex: Vec<bool>,
    edges: Vec<Edge>,
    vertex_cells: Vec<Vec<usize>>,
    areas: Vec<f64>,
    centroids: Vec<Point2>,
    triangles: Vec<Vec<[usize; 3]>>,
    average_edge_length: f64,
}

impl PolygonalMesh {
    /// Builds and validates a mesh. Clockwise cells are reversed (with a
    /// warning); boundary flags are derived from edge incidence.
    pub fn from_parts(
        vertices: Vec<Point2>,
        cells: Vec<Vec<usize>>,
        family: MeshFamily,
    ) -> Result<Self, MeshError> {
        let (mesh, _) = Self::from_parts_reporting(vertices, cells, family)?;
        Ok(mesh)
    }

    /// Like [`from_parts`](Self::from_parts), also returning the indices of
    /// cells whose orientation was flipped.
    pub fn from_parts_reporting(
        vertices: Vec<Point2>,
        mut cells: Vec<Vec<usize>>,
        family: MeshFamily,
    ) -> Result<(Self, Vec<usize>), MeshError> {
        validate::check_indices(&vertices, &cells).map_err(MeshError::Invalid)?;

        let mut flipped = Vec::new();
        for (c, cell) in cells.iter_mut().enumerate() {
            let ring: Vec<Point2> = cell.iter().map(|&v| vertices[v]).collect();
            if signed_area(&ring) < 0.0 {
                log::warn!("cell {c} is clockwise; reversing its vertex order");
                cell.reverse();
                flipped.push(c);
            }
        }

        let domain = match family {
            MeshFamily::External => Domain::Any,
            _ => Domain::UnitSquare,
        };
        let report = validate_mesh(&vertices, &cells, domain);
        if let Some(violation) = report.first_violation {
            return Err(MeshError::Invalid(violation));
        }

        let mut areas = Vec::with_capacity(cells.len());
        let mut centroids = Vec::with_capacity(cells.len());
        let mut triangles = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            let ring: Vec<Point2> = cell.iter().map(|&v| vertices[v]).collect();
            areas.push(signed_area(&ring));
            centroids.push(ring_centroid(&ring));
            let local = ear_clip(&ring).map_err(|reason| MeshError::Geometry { cell: c, reason })?;
            triangles.push(
                local
                    .into_iter()
                    .map(|[a, b, d]| [cell[a], cell[b], cell[d]])
                    .collect(),
            );
        }

        let edges = collect_edges(&cells);
        let mut boundary_vertex = vec![false; vertices.len()];
        for e in edges.iter().filter(|e| e.is_boundary()) {
            boundary_vertex[e.vertices[0]] = true;
            boundary_vertex[e.vertices[1]] = true;
        }

        let mut vertex_cells = vec![Vec::new(); vertices.len()];
        for (c, cell) in cells.iter().enumerate() {
            for &v in cell {
                vertex_cells[v].push(c);
            }
        }

        let average_edge_length = edges
            .iter()
            .map(|e| vertices[e.vertices[0]].distance(vertices[e.vertices[1]]))
            .sum::<f64>()
            / edges.len() as f64;

        let mesh = Self {
            vertices,
            cells,
            family,
            boundary_vertex,
            edges,
            vertex_cells,
            areas,
            centroids,
            triangles,
            average_edge_length,
        };
        Ok((mesh, flipped))
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Point2 {
        self.vertices[v]
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    /// Counterclockwise vertex cycle of a cell.
    pub fn cell(&self, c: usize) -> &[usize] {
        &self.cells[c]
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn family(&self) -> MeshFamily {
        self.family
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    pub fn boundary_vertex_flags(&self) -> &[bool] {
        &self.boundary_vertex
    }

    pub fn cells_around_vertex(&self, v: usize) -> &[usize] {
        &self.vertex_cells[v]
    }

    pub fn cell_points(&self, c: usize) -> Vec<Point2> {
        self.cells[c].iter().map(|&v| self.vertices[v]).collect()
    }

    /// Shoelace area of a cell (strictly positive).
    pub fn polygon_area(&self, c: usize) -> f64 {
        self.areas[c]
    }

    /// Area-weighted centroid; correct for concave cells.
    pub fn polygon_centroid(&self, c: usize) -> Point2 {
        self.centroids[c]
    }

    /// Unit outward normal of local edge `edge`, which runs from local vertex
    /// `edge` to `edge + 1` (cyclically).
    pub fn edge_outward_normal(&self, c: usize, edge: usize) -> Result<Point2, MeshError> {
        let cell = &self.cells[c];
        let a = self.vertices[cell[edge % cell.len()]];
        let b = self.vertices[cell[(edge + 1) % cell.len()]];
        outward_normal(a, b).map_err(|reason| MeshError::Geometry { cell: c, reason })
    }

    /// Ear-clip triangulation of a cell, as global vertex-index triangles.
    pub fn triangulate_polygon(&self, c: usize) -> &[[usize; 3]] {
        &self.triangles[c]
    }

    pub fn cell_diameter(&self, c: usize) -> f64 {
        polygon_diameter(&self.cell_points(c))
    }

    /// Arithmetic mean of the lengths of the unique edges.
    pub fn average_edge_length(&self) -> f64 {
        self.average_edge_length
    }

    /// Whether any vertex of the cell lies on the domain boundary.
    pub fn touches_boundary(&self, c: usize) -> bool {
        self.cells[c].iter().any(|&v| self.boundary_vertex[v])
    }

    /// Re-checks every mesh invariant.
    pub fn validate(&self) -> ValidationReport {
        let domain = match self.family {
            MeshFamily::External => Domain::Any,
            _ => Domain::UnitSquare,
        };
        validate_mesh(&self.vertices, &self.cells, domain)
    }

    /// Same connectivity with every vertex moved by `offset`; the result is
    /// tagged [`MeshFamily::External`] since it no longer covers the unit square.
    pub fn translated(&self, offset: Point2) -> Result<Self, MeshError> {
        let vertices = self.vertices.iter().map(|&p| p + offset).collect();
        Self::from_parts(vertices, self.cells.clone(), MeshFamily::External)
    }
}

pub(crate) fn collect_edges(cells: &[Vec<usize>]) -> Vec<Edge> {
    let mut map: BTreeMap<(usize, usize), (usize, Option<usize>)> = BTreeMap::new();
    for (c, cell) in cells.iter().enumerate() {
        let k = cell.len();
        for i in 0..k {
            let (a, b) = (cell[i], cell[(i + 1) % k]);
            let key = (a.min(b), a.max(b));
            map.entry(key)
                .and_modify(|e| {
                    if e.1.is_none() {
                        e.1 = Some(c)
                    }
                })
                .or_insert((c, None));
        }
    }
    map.into_iter()
        .map(|((a, b), cells)| Edge {
            vertices: [a, b],
            cells,
        })
        .collect()
}
