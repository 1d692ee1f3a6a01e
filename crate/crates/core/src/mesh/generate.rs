//! Generators for the eight benchmark mesh families on `[0, 1]^2`.
//!
//! `subdivisions` sets the resolution: structured families use an `n x n`
//! layout, unstructured ones aim for a comparable cell size. Unstructured
//! families draw from a ChaCha8 stream seeded with `seed`, so output is
//! reproducible across platforms; structured families ignore the seed.

use std::collections::BTreeMap;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spade::{DelaunayTriangulation, Triangulation};

use super::geometry::{ring_centroid, signed_area};
use super::{MeshError, MeshFamily, Point2, PolygonalMesh};

/// Maximum interior-vertex jitter of QuadU, per coordinate, in grid spacings.
/// The resulting displacement never exceeds `0.25 h`.
const QUAD_U_JITTER: f64 = 0.175;
/// Inward offset of the ConcS edge midpoints, in grid spacings.
const CONC_S_DENT: f64 = 0.3;
/// Zig-zag amplitude of the ConcU cut, relative to the cell width.
const CONC_U_ZIGZAG: f64 = 0.15;
const LLOYD_ITERATIONS: usize = 20;

pub fn generate_mesh(
    family: MeshFamily,
    subdivisions: usize,
    seed: u64,
) -> Result<PolygonalMesh, MeshError> {
    let fail = |reason: String| MeshError::Generation {
        family,
        subdivisions,
        reason,
    };
    if subdivisions == 0 {
        return Err(fail("subdivisions must be at least 1".into()));
    }
    let n = subdivisions;
    let (vertices, cells) = match family {
        MeshFamily::TriS => tri_structured(n),
        MeshFamily::QuadS => quad_grid(n, None),
        MeshFamily::HexS => hex_structured(n),
        MeshFamily::ConcS => concave_structured(n),
        MeshFamily::TriU => delaunay_poisson(n, seed).map_err(fail)?,
        MeshFamily::QuadU => quad_grid(n, Some(seed)),
        MeshFamily::PolyU => voronoi_lloyd(n, seed).map_err(fail)?,
        MeshFamily::ConcU => concave_unstructured(n, seed),
        MeshFamily::External => {
            return Err(MeshError::UnsupportedFamily(
                "external meshes are loaded, not generated".into(),
            ))
        }
    };
    PolygonalMesh::from_parts(vertices, cells, family).map_err(|e| fail(e.to_string()))
}

fn grid_index(n: usize, i: usize, j: usize) -> usize {
    j * (n + 1) + i
}

fn grid_vertices(n: usize, seed: Option<u64>) -> Vec<Point2> {
    let h = 1.0 / n as f64;
    let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
    let mut v = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            let mut p = Point2::new(i as f64 * h, j as f64 * h);
            if let Some(rng) = rng.as_mut() {
                // Draw for every vertex so the stream does not depend on n's parity.
                let dx = rng.random_range(-QUAD_U_JITTER..=QUAD_U_JITTER) * h;
                let dy = rng.random_range(-QUAD_U_JITTER..=QUAD_U_JITTER) * h;
                if i > 0 && i < n && j > 0 && j < n {
                    p = p + Point2::new(dx, dy);
                }
            }
            v.push(p);
        }
    }
    // Exact unit-square corners and sides regardless of rounding in i * h.
    for j in 0..=n {
        v[grid_index(n, n, j)].x = 1.0;
        v[grid_index(n, j, n)].y = 1.0;
    }
    v
}

fn quad_grid(n: usize, seed: Option<u64>) -> (Vec<Point2>, Vec<Vec<usize>>) {
    let v = grid_vertices(n, seed);
    let mut cells = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            cells.push(vec![
                grid_index(n, i, j),
                grid_index(n, i + 1, j),
                grid_index(n, i + 1, j + 1),
                grid_index(n, i, j + 1),
            ]);
        }
    }
    (v, cells)
}

fn tri_structured(n: usize) -> (Vec<Point2>, Vec<Vec<usize>>) {
    let v = grid_vertices(n, None);
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b) = (grid_index(n, i, j), grid_index(n, i + 1, j));
            let (c, d) = (grid_index(n, i + 1, j + 1), grid_index(n, i, j + 1));
            cells.push(vec![a, b, c]);
            cells.push(vec![a, c, d]);
        }
    }
    (v, cells)
}

/// Hexagonal tiling laid out as a staggered brick wall: `n` rows of height
/// `h = 1/n`, bricks of width `h`, odd rows offset by half a brick. Every
/// brick gets the midpoints of its top and bottom sides as extra vertices,
/// and vertices on interior rows are raised or lowered by `h/6` so that each
/// full brick becomes a convex hexagon. Cells on the square's sides keep
/// straight edges there and become quadrilaterals or flat-sided hexagons.
fn hex_structured(n: usize) -> (Vec<Point2>, Vec<Vec<usize>>) {
    let h = 1.0 / n as f64;
    let half = 2 * n;
    let delta = h / 6.0;
    let index = |j: usize, m: usize| j * (half + 1) + m;

    let mut v = Vec::with_capacity((n + 1) * (half + 1));
    for j in 0..=n {
        for m in 0..=half {
            let x = if m == half { 1.0 } else { m as f64 * 0.5 * h };
            let mut y = if j == n { 1.0 } else { j as f64 * h };
            if j > 0 && j < n && m > 0 && m < half {
                // Brick corner of the row above: raise; of the row below: lower.
                y += if m % 2 == j % 2 { delta } else { -delta };
            }
            v.push(Point2::new(x, y));
        }
    }

    let mut cells = Vec::new();
    for j in 0..n {
        let mut spans = Vec::new();
        if j % 2 == 0 {
            spans.extend((0..n).map(|k| (2 * k, 2 * k + 2)));
        } else {
            spans.push((0, 1));
            spans.extend((0..n - 1).map(|k| (2 * k + 1, 2 * k + 3)));
            spans.push((half - 1, half));
        }
        for (m0, m1) in spans {
            let mut cell: Vec<usize> = (m0..=m1).map(|m| index(j, m)).collect();
            cell.extend((m0..=m1).rev().map(|m| index(j + 1, m)));
            cells.push(cell);
        }
    }
    (v, cells)
}

/// Uniform grid in which every cell with `i + j` even has the midpoint of its
/// top side pushed down into it. Those cells become concave pentagons
/// (chevrons); the cell above receives the same vertex as an outward bump
/// and stays convex.
fn concave_structured(n: usize) -> (Vec<Point2>, Vec<Vec<usize>>) {
    let h = 1.0 / n as f64;
    let mut v = grid_vertices(n, None);
    let mut dent = BTreeMap::new();
    for j in 0..n.saturating_sub(1) {
        for i in 0..n {
            if (i + j) % 2 == 0 {
                let x = (i as f64 + 0.5) * h;
                let y = (j + 1) as f64 * h - CONC_S_DENT * h;
                dent.insert((i, j + 1), v.len());
                v.push(Point2::new(x, y));
            }
        }
    }
    let mut cells = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let mut cell = vec![grid_index(n, i, j)];
            if let Some(&m) = dent.get(&(i, j)) {
                cell.push(m);
            }
            cell.push(grid_index(n, i + 1, j));
            cell.push(grid_index(n, i + 1, j + 1));
            if let Some(&m) = dent.get(&(i, j + 1)) {
                cell.push(m);
            }
            cell.push(grid_index(n, i, j + 1));
            cells.push(cell);
        }
    }
    (v, cells)
}

/// QuadU cells cut in two from the bottom-side midpoint to the top-side
/// midpoint along a zig-zag with two interior kinks. Each half is a hexagon
/// with one reflex vertex.
fn concave_unstructured(n: usize, seed: u64) -> (Vec<Point2>, Vec<Vec<usize>>) {
    let (mut v, quads) = quad_grid(n, Some(seed));
    let mut midpoints: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut midpoint = |v: &mut Vec<Point2>, a: usize, b: usize| {
        *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
            v.push((v[a] + v[b]) * 0.5);
            v.len() - 1
        })
    };

    let mut cells = Vec::with_capacity(2 * quads.len());
    for q in quads {
        let [a, b, c, d] = [q[0], q[1], q[2], q[3]];
        let mb = midpoint(&mut v, a, b);
        let mt = midpoint(&mut v, d, c);
        let ml = (v[a] + v[d]) * 0.5;
        let mr = (v[b] + v[c]) * 0.5;
        let across = mr - ml;
        let shift = across * CONC_U_ZIGZAG;
        let up = v[mt] - v[mb];
        let p1 = v[mb] + up * (1.0 / 3.0) - shift;
        let p2 = v[mb] + up * (2.0 / 3.0) + shift;
        let (i1, i2) = (v.len(), v.len() + 1);
        v.push(p1);
        v.push(p2);
        cells.push(vec![a, mb, i1, i2, mt, d]);
        cells.push(vec![mb, b, c, mt, i2, i1]);
    }
    (v, cells)
}

fn square_boundary_points(n: usize) -> Vec<Point2> {
    let h = 1.0 / n as f64;
    let mut pts = Vec::with_capacity(4 * n);
    for k in 0..n {
        let t = k as f64 * h;
        pts.push(Point2::new(t, 0.0));
        pts.push(Point2::new(1.0, t));
        pts.push(Point2::new(1.0 - t, 1.0));
        pts.push(Point2::new(0.0, 1.0 - t));
    }
    pts
}

/// Bucket grid for minimum-distance queries during dart throwing.
struct DiskGrid {
    cell: f64,
    dim: usize,
    buckets: Vec<Vec<Point2>>,
}

impl DiskGrid {
    fn new(radius: f64) -> Self {
        let dim = (1.0 / radius).ceil() as usize + 1;
        Self {
            cell: 1.0 / (dim - 1) as f64,
            dim,
            buckets: vec![Vec::new(); dim * dim],
        }
    }

    fn key(&self, p: Point2) -> (usize, usize) {
        let clamp = |t: f64| ((t / self.cell).floor().max(0.0) as usize).min(self.dim - 1);
        (clamp(p.x), clamp(p.y))
    }

    fn insert(&mut self, p: Point2) {
        let (i, j) = self.key(p);
        self.buckets[j * self.dim + i].push(p);
    }

    fn is_free(&self, p: Point2, radius: f64) -> bool {
        let (i, j) = self.key(p);
        for jj in j.saturating_sub(1)..=(j + 1).min(self.dim - 1) {
            for ii in i.saturating_sub(1)..=(i + 1).min(self.dim - 1) {
                if self.buckets[jj * self.dim + ii]
                    .iter()
                    .any(|q| q.distance(p) < radius)
                {
                    return false;
                }
            }
        }
        true
    }
}

/// Delaunay triangulation of `n` evenly spaced points per side plus interior
/// points from seeded dart throwing with minimum spacing `0.75 h`.
fn delaunay_poisson(n: usize, seed: u64) -> Result<(Vec<Point2>, Vec<Vec<usize>>), String> {
    let h = 1.0 / n as f64;
    let radius = 0.75 * h;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = square_boundary_points(n);
    let mut grid = DiskGrid::new(radius);
    for &p in &points {
        grid.insert(p);
    }
    let margin = 0.5 * radius;
    let attempts = 40 * (n + 1) * (n + 1);
    for _ in 0..attempts {
        let p = Point2::new(
            rng.random_range(margin..1.0 - margin),
            rng.random_range(margin..1.0 - margin),
        );
        if grid.is_free(p, radius) {
            grid.insert(p);
            points.push(p);
        }
    }

    let mut tri: DelaunayTriangulation<spade::Point2<f64>> = DelaunayTriangulation::new();
    let mut handle_to_index = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        let handle = tri
            .insert(spade::Point2::new(p.x, p.y))
            .map_err(|e| format!("delaunay insertion failed: {e:?}"))?;
        handle_to_index.insert(handle.index(), i);
    }
    if handle_to_index.len() != points.len() {
        return Err("duplicate points in Delaunay input".into());
    }
    let mut cells = Vec::with_capacity(tri.num_inner_faces());
    for face in tri.inner_faces() {
        let mut cell: Vec<usize> = face
            .vertices()
            .iter()
            .map(|v| handle_to_index[&v.fix().index()])
            .collect();
        let ring: Vec<Point2> = cell.iter().map(|&i| points[i]).collect();
        if signed_area(&ring) < 0.0 {
            cell.reverse();
        }
        cells.push(cell);
    }
    Ok((points, cells))
}

/// Bounded Voronoi cells of `seeds` inside the unit square: each seed is
/// mirrored across the four sides, so the bisectors with its own mirrors are
/// exactly the square's sides. Returns one counterclockwise ring of Delaunay
/// face ids per seed, plus the circumcentre of each face id.
fn clipped_voronoi(seeds: &[Point2]) -> Result<(Vec<Vec<usize>>, BTreeMap<usize, Point2>), String> {
    let mut tri: DelaunayTriangulation<spade::Point2<f64>> = DelaunayTriangulation::new();
    let mut handles = Vec::with_capacity(seeds.len());
    let insert = |tri: &mut DelaunayTriangulation<spade::Point2<f64>>, p: Point2| {
        tri.insert(spade::Point2::new(p.x, p.y))
            .map_err(|e| format!("delaunay insertion failed: {e:?}"))
    };
    for &p in seeds {
        handles.push(insert(&mut tri, p)?);
    }
    for &p in seeds {
        for m in [
            Point2::new(-p.x, p.y),
            Point2::new(2.0 - p.x, p.y),
            Point2::new(p.x, -p.y),
            Point2::new(p.x, 2.0 - p.y),
        ] {
            insert(&mut tri, m)?;
        }
    }
    if tri.num_vertices() != 5 * seeds.len() {
        return Err("coincident seeds".into());
    }

    let mut centers = BTreeMap::new();
    let mut rings = Vec::with_capacity(seeds.len());
    for (s, &handle) in handles.iter().enumerate() {
        let mut ring = Vec::new();
        for edge in tri.vertex(handle).out_edges() {
            let face = edge
                .face()
                .as_inner()
                .ok_or_else(|| format!("seed {s} lies on the hull"))?;
            let id = face.fix().index();
            centers.entry(id).or_insert_with(|| {
                let c = face.circumcenter();
                Point2::new(c.x, c.y)
            });
            ring.push(id);
        }
        rings.push(ring);
    }
    Ok((rings, centers))
}

fn snap_to_square(p: Point2) -> Point2 {
    const TOL: f64 = 1e-10;
    let snap = |t: f64| {
        if t.abs() < TOL {
            0.0
        } else if (t - 1.0).abs() < TOL {
            1.0
        } else {
            t.clamp(0.0, 1.0)
        }
    };
    Point2::new(snap(p.x), snap(p.y))
}

fn find(parent: &mut BTreeMap<usize, usize>, x: usize) -> usize {
    let mut root = x;
    while let Some(&p) = parent.get(&root) {
        if p == root {
            break;
        }
        root = p;
    }
    let mut cur = x;
    while cur != root {
        let next = parent[&cur];
        parent.insert(cur, root);
        cur = next;
    }
    root
}

/// Voronoi tessellation of `n^2` seeded random points after Lloyd relaxation.
fn voronoi_lloyd(n: usize, seed: u64) -> Result<(Vec<Point2>, Vec<Vec<usize>>), String> {
    let count = n * n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seeds: Vec<Point2> = (0..count)
        .map(|_| Point2::new(rng.random_range(0.01..0.99), rng.random_range(0.01..0.99)))
        .collect();

    for _ in 0..LLOYD_ITERATIONS {
        let (rings, centers) = clipped_voronoi(&seeds)?;
        for (s, ring) in rings.iter().enumerate() {
            let pts: Vec<Point2> = ring.iter().map(|id| snap_to_square(centers[id])).collect();
            if signed_area(&pts) > 0.0 {
                seeds[s] = ring_centroid(&pts);
            }
        }
    }

    let (rings, centers) = clipped_voronoi(&seeds)?;
    // Merge Voronoi vertices closer than a tiny fraction of the cell size
    // (near-cocircular seeds produce almost-degenerate edges).
    let tol = 1e-9 / n as f64;
    let mut parent: BTreeMap<usize, usize> = centers.keys().map(|&k| (k, k)).collect();
    for ring in &rings {
        let k = ring.len();
        for i in 0..k {
            let (a, b) = (ring[i], ring[(i + 1) % k]);
            let (pa, pb) = (snap_to_square(centers[&a]), snap_to_square(centers[&b]));
            if pa.distance(pb) < tol {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent.insert(ra.max(rb), ra.min(rb));
                }
            }
        }
    }

    let mut index_of = BTreeMap::new();
    let mut vertices = Vec::new();
    let mut cells = Vec::with_capacity(rings.len());
    for ring in &rings {
        let mut cell: Vec<usize> = Vec::with_capacity(ring.len());
        for &id in ring {
            let root = find(&mut parent, id);
            let v = *index_of.entry(root).or_insert_with(|| {
                vertices.push(snap_to_square(centers[&root]));
                vertices.len() - 1
            });
            if cell.last() != Some(&v) {
                cell.push(v);
            }
        }
        while cell.len() > 1 && cell.first() == cell.last() {
            cell.pop();
        }
        if cell.len() < 3 {
            return Err("degenerate Voronoi cell".into());
        }
        cells.push(cell);
    }
    Ok((vertices, cells))
}
