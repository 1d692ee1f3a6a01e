//! Degree-5 quadrature on triangles and on polygons via their ear-clip
//! triangulation.

use crate::mesh::{Point2, PolygonalMesh};

const SQRT15: f64 = 3.872_983_346_207_417;

/// Seven-point rule exact for polynomials of degree 5 on a triangle, as
/// barycentric coordinates and weights relative to the triangle area.
const RULE: [([f64; 3], f64); 7] = {
    let a1 = (6.0 - SQRT15) / 21.0;
    let b1 = 1.0 - 2.0 * a1;
    let w1 = (155.0 - SQRT15) / 1200.0;
    let a2 = (6.0 + SQRT15) / 21.0;
    let b2 = 1.0 - 2.0 * a2;
    let w2 = (155.0 + SQRT15) / 1200.0;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 9.0 / 40.0),
        ([a1, a1, b1], w1),
        ([a1, b1, a1], w1),
        ([b1, a1, a1], w1),
        ([a2, a2, b2], w2),
        ([a2, b2, a2], w2),
        ([b2, a2, a2], w2),
    ]
};

/// Quadrature points and absolute weights on one triangle.
pub fn triangle_points(a: Point2, b: Point2, c: Point2) -> impl Iterator<Item = (Point2, f64)> {
    let area = 0.5 * (b - a).cross(c - a);
    RULE.iter().map(move |&([la, lb, lc], w)| {
        (
            Point2::new(la * a.x + lb * b.x + lc * c.x, la * a.y + lb * b.y + lc * c.y),
            w * area,
        )
    })
}

/// Quadrature points and weights covering one mesh cell.
pub fn cell_points(mesh: &PolygonalMesh, cell: usize) -> Vec<(Point2, f64)> {
    mesh.triangulate_polygon(cell)
        .iter()
        .flat_map(|t| triangle_points(mesh.vertex(t[0]), mesh.vertex(t[1]), mesh.vertex(t[2])))
        .collect()
}

/// Integral of a scalar function over a cell.
pub fn polygon_quadrature(mesh: &PolygonalMesh, cell: usize, f: impl Fn(Point2) -> f64) -> f64 {
    cell_points(mesh, cell).into_iter().map(|(p, w)| w * f(p)).sum()
}

/// Two-point Gauss rule on the segment `a -> b` (exact to degree 3), with
/// absolute weights.
pub fn segment_points(a: Point2, b: Point2) -> [(Point2, f64); 2] {
    let half = 0.5 * a.distance(b);
    let g = 0.5 / 3f64.sqrt();
    let at = |t: f64| a + (b - a) * t;
    [(at(0.5 - g), half), (at(0.5 + g), half)]
}
