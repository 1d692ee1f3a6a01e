use thiserror::Error;

use super::Point2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("zero-length edge")]
    ZeroLengthEdge,
    #[error("polygon is not simple (no ear found with {remaining} vertices left)")]
    NonSimple { remaining: usize },
    #[error("polygon has fewer than 3 vertices")]
    TooFewVertices,
}

/// Shoelace signed area; positive for counterclockwise rings.
pub fn signed_area(ring: &[Point2]) -> f64 {
    let n = ring.len();
    if n < 3 {
        return 0.0;
    }
    // Shift to the first vertex to limit cancellation for far-off polygons.
    let o = ring[0];
    let mut twice = 0.0;
    for i in 1..n - 1 {
        twice += (ring[i] - o).cross(ring[i + 1] - o);
    }
    0.5 * twice
}

/// Area-weighted centroid of a simple polygon.
pub fn ring_centroid(ring: &[Point2]) -> Point2 {
    let n = ring.len();
    let o = ring[0];
    let (mut a2, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for i in 1..n - 1 {
        let p = ring[i] - o;
        let q = ring[i + 1] - o;
        let w = p.cross(q);
        a2 += w;
        cx += w * (p.x + q.x);
        cy += w * (p.y + q.y);
    }
    Point2::new(o.x + cx / (3.0 * a2), o.y + cy / (3.0 * a2))
}

/// Unit normal to the right of the directed edge `a -> b`, i.e. outward for
/// a counterclockwise polygon.
pub fn outward_normal(a: Point2, b: Point2) -> Result<Point2, GeometryError> {
    let t = b - a;
    let len = t.norm();
    if len == 0.0 || !len.is_finite() {
        return Err(GeometryError::ZeroLengthEdge);
    }
    Ok(Point2::new(t.y / len, -t.x / len))
}

/// Largest vertex-to-vertex distance.
pub fn polygon_diameter(points: &[Point2]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, &p) in points.iter().enumerate() {
        for &q in &points[i + 1..] {
            d = d.max(p.distance(q));
        }
    }
    d
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

/// Ear-clipping triangulation of a simple counterclockwise polygon.
///
/// Returns local-index triangles, all counterclockwise. Vertices with a
/// straight angle are dropped without emitting a degenerate triangle, so the
/// triangle areas always sum to the polygon area.
pub fn ear_clip(ring: &[Point2]) -> Result<Vec<[usize; 3]>, GeometryError> {
    let n = ring.len();
    if n < 3 {
        return Err(GeometryError::TooFewVertices);
    }
    let area = signed_area(ring);
    if area <= 0.0 {
        return Err(GeometryError::NonSimple { remaining: n });
    }
    let scale = polygon_diameter(ring);
    let eps = 1e-13 * scale * scale;

    let mut remaining: Vec<usize> = (0..n).collect();
    let mut triangles = Vec::with_capacity(n - 2);

    while remaining.len() > 3 {
        let m = remaining.len();
        let mut clipped = false;
        for i in 0..m {
            let ia = remaining[(i + m - 1) % m];
            let ib = remaining[i];
            let ic = remaining[(i + 1) % m];
            let (a, b, c) = (ring[ia], ring[ib], ring[ic]);
            if orient(a, b, c) <= eps {
                continue;
            }
            let blocked = remaining.iter().any(|&j| {
                if j == ia || j == ib || j == ic {
                    return false;
                }
                let p = ring[j];
                orient(a, b, p) >= -eps && orient(b, c, p) >= -eps && orient(c, a, p) >= -eps
            });
            if !blocked {
                triangles.push([ia, ib, ic]);
                remaining.remove(i);
                clipped = true;
                break;
            }
        }
        if clipped {
            continue;
        }
        // No strictly convex ear: drop a straight-angle vertex if there is one.
        let straight = (0..m).find(|&i| {
            let a = ring[remaining[(i + m - 1) % m]];
            let b = ring[remaining[i]];
            let c = ring[remaining[(i + 1) % m]];
            orient(a, b, c).abs() <= eps && (b - a).dot(c - b) > 0.0
        });
        match straight {
            Some(i) => {
                remaining.remove(i);
            }
            None => return Err(GeometryError::NonSimple { remaining: m }),
        }
    }

    let (a, b, c) = (remaining[0], remaining[1], remaining[2]);
    if orient(ring[a], ring[b], ring[c]) > eps {
        triangles.push([a, b, c]);
    }
    let sum: f64 = triangles
        .iter()
        .map(|t| 0.5 * orient(ring[t[0]], ring[t[1]], ring[t[2]]))
        .sum();
    if triangles.is_empty() || (sum - area).abs() > 1e-10 * area {
        return Err(GeometryError::NonSimple { remaining: 3 });
    }
    Ok(triangles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(coords: &[(f64, f64)]) -> Vec<Point2> {
        coords.iter().map(|&(x, y)| Point2::new(x, y)).collect()
    }

    fn tri_area(a: Point2, b: Point2, c: Point2) -> f64 {
        0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y))
    }

    fn triangulated_area(ring: &[Point2]) -> f64 {
        ear_clip(ring)
            .unwrap()
            .iter()
            .map(|t| tri_area(ring[t[0]], ring[t[1]], ring[t[2]]))
            .sum()
    }

    #[test]
    fn concave_quad_area_matches_manual_split() {
        // Split along the diagonal from the reflex vertex (1, 0.5) to (0, 0).
        let s = 0.4;
        let ring = pts(&[(0.0, 0.0), (2.0 * s, 0.0), (1.0 * s, 0.5 * s), (0.0, 2.0 * s)]);
        let manual = tri_area(ring[0], ring[1], ring[2]) + tri_area(ring[0], ring[2], ring[3]);
        assert!((manual - 1.5 * s * s).abs() < 1e-15);
        assert!((signed_area(&ring) - manual).abs() < 1e-15);
        assert!((triangulated_area(&ring) - manual).abs() < 1e-15);
    }

    #[test]
    fn l_shape_centroid_matches_triangle_weighting() {
        let s = 0.5;
        let ring = pts(&[
            (0.0, 0.0),
            (2.0 * s, 0.0),
            (2.0 * s, 1.0 * s),
            (1.0 * s, 1.0 * s),
            (1.0 * s, 2.0 * s),
            (0.0, 2.0 * s),
        ]);
        // Three unit squares (scaled): centroids (0.5,0.5), (1.5,0.5), (0.5,1.5).
        let expected = Point2::new(2.5 / 3.0 * s, 2.5 / 3.0 * s);
        let c = ring_centroid(&ring);
        assert!(c.distance(expected) < 1e-15);

        let tris = ear_clip(&ring).unwrap();
        let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
        for t in &tris {
            let (p, q, r) = (ring[t[0]], ring[t[1]], ring[t[2]]);
            let w = tri_area(p, q, r);
            a += w;
            cx += w * (p.x + q.x + r.x) / 3.0;
            cy += w * (p.y + q.y + r.y) / 3.0;
        }
        assert!(Point2::new(cx / a, cy / a).distance(c) < 1e-15);
    }

    #[test]
    fn convex_quad_gives_two_triangles() {
        let ring = pts(&[(0.0, 0.0), (1.0, 0.1), (0.9, 1.0), (0.1, 0.8)]);
        let t = ear_clip(&ring).unwrap();
        assert_eq!(t.len(), 2);
        assert!((triangulated_area(&ring) - signed_area(&ring)).abs() < 1e-15);
    }

    #[test]
    fn concave_hexagon_area_sum() {
        let ring = pts(&[
            (0.0, 0.0),
            (0.5, 0.0),
            (0.4, 0.3),
            (0.6, 0.6),
            (0.5, 1.0),
            (0.0, 1.0),
        ]);
        let t = ear_clip(&ring).unwrap();
        assert_eq!(t.len(), 4);
        assert!((triangulated_area(&ring) - signed_area(&ring)).abs() < 1e-15);
    }

    #[test]
    fn straight_angles_are_skipped() {
        let ring = pts(&[(0.0, 0.0), (0.5, 0.0), (1.0, 0.0), (1.0, 1.0), (0.5, 1.0), (0.0, 1.0)]);
        let t = ear_clip(&ring).unwrap();
        assert!(t.iter().all(|t| tri_area(ring[t[0]], ring[t[1]], ring[t[2]]) > 0.0));
        assert!((triangulated_area(&ring) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bow_tie_is_rejected() {
        let ring = pts(&[(0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (0.0, 1.0)]);
        assert!(ear_clip(&ring).is_err());
    }

    #[test]
    fn normals() {
        let n = outward_normal(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((n.x - r).abs() < 1e-15 && (n.y + r).abs() < 1e-15);
        assert_eq!(
            outward_normal(Point2::new(0.2, 0.2), Point2::new(0.2, 0.2)),
            Err(GeometryError::ZeroLengthEdge)
        );
    }

    /// Random star-shaped polygon: sorted angles with random radii.
    fn star_polygon() -> impl Strategy<Value = Vec<Point2>> {
        (3usize..14).prop_flat_map(|n| {
            (
                // Gaps below half a turn keep the ring simple.
                proptest::collection::vec(0.6f64..1.0, n),
                proptest::collection::vec(0.2f64..1.0, n),
                (-5.0f64..5.0, -5.0f64..5.0),
            )
                .prop_map(|(gaps, radii, (cx, cy))| {
                    let total: f64 = gaps.iter().sum();
                    let mut angle = 0.0;
                    gaps.iter()
                        .zip(&radii)
                        .map(|(g, r)| {
                            angle += g / total * std::f64::consts::TAU;
                            Point2::new(cx + r * angle.cos(), cy + r * angle.sin())
                        })
                        .collect()
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn ear_clip_area_sum_matches_shoelace(ring in star_polygon()) {
            let area = signed_area(&ring);
            prop_assume!(area > 1e-6);
            let sum = triangulated_area(&ring);
            prop_assert!((sum - area).abs() <= 1e-12 * area);
        }

        #[test]
        fn closed_polygon_normals_integrate_to_zero(ring in star_polygon()) {
            prop_assume!(signed_area(&ring) > 1e-6);
            let n = ring.len();
            let mut acc = Point2::default();
            let mut perimeter = 0.0;
            for i in 0..n {
                let (a, b) = (ring[i], ring[(i + 1) % n]);
                let len = a.distance(b);
                acc = acc + outward_normal(a, b).unwrap() * len;
                perimeter += len;
            }
            prop_assert!(acc.norm() <= 1e-12 * perimeter);
        }
    }
}
