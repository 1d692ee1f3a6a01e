//! Recovery by compatibility in patches.
//!
//! For each cell a linear, self-equilibrated stress field is found by
//! minimising the complementary energy over a patch of cells, with the
//! displacement trace of the discrete solution acting on the outer patch
//! boundary. A particular solution balances the (cell-wise constant) body
//! force, so every recovered field satisfies `div sigma + b = 0` exactly
//! inside its cell.

use std::collections::BTreeMap;

use nalgebra::{Matrix3, SMatrix, SVector, Vector3};
use rayon::prelude::*;

use crate::material::LameMaterial;
use crate::mesh::{ElementPatch, PatchKind, Point2, PolygonalMesh};
use crate::quadrature::{cell_points, segment_points};
use crate::vem::{BodyForce, DisplacementField};
use crate::{Error, Result, Stress};

/// Three stress components by seven modes.
pub type ModeMatrix = SMatrix<f64, 3, 7>;
pub type PatchMatrix = SMatrix<f64, 7, 7>;
pub type ModeCoefficients = SVector<f64, 7>;

/// Largest tolerated condition number of a patch matrix.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RecoveryKind {
    Rcp0,
    Rcp1,
}

impl RecoveryKind {
    pub fn patch_kind(self) -> PatchKind {
        match self {
            RecoveryKind::Rcp0 => PatchKind::Patch0,
            RecoveryKind::Rcp1 => PatchKind::Patch1,
        }
    }
}

/// Linear self-equilibrated stress modes in coordinates centred on a patch
/// and scaled by its diameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StressModeBasis {
    pub center: Point2,
    pub scale: f64,
}

impl StressModeBasis {
    /// Area-weighted centroid and vertex diameter of the patch.
    pub fn for_patch(mesh: &PolygonalMesh, patch: &ElementPatch) -> Self {
        let (mut area, mut cx, mut cy) = (0.0, 0.0, 0.0);
        for &c in &patch.member_cells {
            let a = mesh.polygon_area(c);
            let p = mesh.polygon_centroid(c);
            area += a;
            cx += a * p.x;
            cy += a * p.y;
        }
        let mut verts: Vec<usize> = patch
            .member_cells
            .iter()
            .flat_map(|&c| mesh.cell(c).iter().copied())
            .collect();
        verts.sort_unstable();
        verts.dedup();
        let points: Vec<Point2> = verts.iter().map(|&v| mesh.vertex(v)).collect();
        Self {
            center: Point2::new(cx / area, cy / area),
            scale: crate::mesh::polygon_diameter(&points),
        }
    }

    pub fn local(&self, p: Point2) -> (f64, f64) {
        ((p.x - self.center.x) / self.scale, (p.y - self.center.y) / self.scale)
    }
}

/// The mode matrix at `p`.
pub fn stress_modes_at(basis: &StressModeBasis, p: Point2) -> ModeMatrix {
    let (x, y) = basis.local(p);
    #[rustfmt::skip]
    let m = ModeMatrix::from_row_slice(&[
        1.0, 0.0, 0.0, y, 0.0, x, 0.0,
        0.0, 1.0, 0.0, 0.0, x, 0.0, y,
        0.0, 0.0, 1.0, 0.0, 0.0, -y, -x,
    ]);
    m
}

/// Stress balancing a body force within one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParticularStress {
    /// `(-b_x (x - x_0), -b_y (y - y_0), 0)` for the constant force `b`
    /// sampled at `origin`.
    Sampled { force: [f64; 2], origin: Point2 },
    /// `(-(I_x(x) - I_x(x_0)), -(I_y(x) - I_y(x_0)), 0)` from the closed-form
    /// antiderivatives of the body force.
    Antiderivative { origin: Point2 },
}

impl ParticularStress {
    pub fn evaluate(&self, p: Point2, body_force: Option<&dyn BodyForce>) -> Stress {
        match *self {
            ParticularStress::Sampled { force, origin } => {
                Stress::new(-force[0] * (p.x - origin.x), -force[1] * (p.y - origin.y), 0.0)
            }
            ParticularStress::Antiderivative { origin } => {
                let b = body_force.expect("antiderivative particular stress needs its body force");
                let at = b.antiderivative(p).expect("body force lost its antiderivative");
                let at0 = b.antiderivative(origin).expect("body force lost its antiderivative");
                Stress::new(-(at[0] - at0[0]), -(at[1] - at0[1]), 0.0)
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ParticularStress::Sampled { force: [0.0, 0.0], .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParticularSolution {
    /// Constant body force per cell, sampled at the centroid.
    #[default]
    CellSample,
    /// Use [`BodyForce::antiderivative`] when it returns a value, otherwise
    /// fall back to the cell sample.
    Antiderivative,
}

/// Particular stress of one cell, vanishing at `origin`. The body force is
/// sampled at the cell centroid.
pub fn particular_solution(
    mesh: &PolygonalMesh,
    cell: usize,
    body_force: &dyn BodyForce,
    mode: ParticularSolution,
    origin: Point2,
) -> ParticularStress {
    let centroid = mesh.polygon_centroid(cell);
    if mode == ParticularSolution::Antiderivative && body_force.antiderivative(centroid).is_some() {
        return ParticularStress::Antiderivative { origin };
    }
    ParticularStress::Sampled {
        force: body_force.value(centroid),
        origin,
    }
}

fn compliance(material: &LameMaterial) -> Matrix3<f64> {
    material.compliance_matrix()
}

/// `sum over member cells of int P^T C^{-1} P`.
pub fn compute_h(
    mesh: &PolygonalMesh,
    patch: &ElementPatch,
    basis: &StressModeBasis,
    material: &LameMaterial,
) -> PatchMatrix {
    let s = compliance(material);
    let mut h = PatchMatrix::zeros();
    for &c in &patch.member_cells {
        for (p, w) in cell_points(mesh, c) {
            let m = stress_modes_at(basis, p);
            h += m.transpose() * s * m * w;
        }
    }
    (h + h.transpose()) * 0.5
}

/// Edges of the patch that belong to exactly one member cell, directed
/// along that cell's counterclockwise orientation.
fn outer_edges(mesh: &PolygonalMesh, patch: &ElementPatch) -> Vec<(usize, usize)> {
    let mut count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for &c in &patch.member_cells {
        let verts = mesh.cell(c);
        for i in 0..verts.len() {
            let (a, b) = (verts[i], verts[(i + 1) % verts.len()]);
            *count.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    let mut out = Vec::new();
    for &c in &patch.member_cells {
        let verts = mesh.cell(c);
        for i in 0..verts.len() {
            let (a, b) = (verts[i], verts[(i + 1) % verts.len()]);
            if count[&(a.min(b), a.max(b))] == 1 {
                out.push((a, b));
            }
        }
    }
    out
}

/// Right-hand side `int_{outer boundary} P^T N^T u - sum int P^T C^{-1} sigma_p`.
#[allow(clippy::too_many_arguments)]
pub fn compute_g(
    mesh: &PolygonalMesh,
    patch: &ElementPatch,
    basis: &StressModeBasis,
    material: &LameMaterial,
    u: &DisplacementField,
    particular: &[ParticularStress],
    body_force: Option<&dyn BodyForce>,
) -> Result<ModeCoefficients> {
    let mut g = ModeCoefficients::zeros();
    for (a, b) in outer_edges(mesh, patch) {
        let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
        let n = crate::mesh::outward_normal(pa, pb).map_err(|e| {
            Error::InvalidInput(format!("patch around cell {}: {e}", patch.central_cell))
        })?;
        let (ua, ub) = (u.vertex(a), u.vertex(b));
        let len = pa.distance(pb);
        for (p, w) in segment_points(pa, pb) {
            let t = p.distance(pa) / len;
            let ux = ua[0] + t * (ub[0] - ua[0]);
            let uy = ua[1] + t * (ub[1] - ua[1]);
            let traction_work = Vector3::new(n.x * ux, n.y * uy, n.y * ux + n.x * uy);
            g += stress_modes_at(basis, p).transpose() * traction_work * w;
        }
    }
    let s = compliance(material);
    for (&c, sp) in patch.member_cells.iter().zip(particular) {
        if sp.is_zero() {
            continue;
        }
        for (p, w) in cell_points(mesh, c) {
            g -= stress_modes_at(basis, p).transpose() * (s * sp.evaluate(p, body_force)) * w;
        }
    }
    Ok(g)
}

/// Ratio of the extreme eigenvalues of a symmetric matrix; infinite when it
/// is not positive definite.
pub fn condition_number(h: &PatchMatrix) -> f64 {
    let eig = h.symmetric_eigenvalues();
    let (min, max) = (eig.min(), eig.max());
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solves `H beta = g` by Cholesky with one step of iterative refinement.
pub fn solve_patch(h: &PatchMatrix, g: &ModeCoefficients, cell: usize) -> Result<ModeCoefficients> {
    let condition = condition_number(h);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditionedPatch { cell, condition });
    }
    let chol = h
        .cholesky()
        .ok_or(Error::IllConditionedPatch { cell, condition })?;
    let mut beta = chol.solve(g);
    let r = g - h * beta;
    beta += chol.solve(&r);
    let residual = (g - h * beta).norm();
    if !beta.iter().all(|b| b.is_finite()) || residual > 1e-12 * g.norm() {
        return Err(Error::SolverBreakdown {
            reason: format!("patch system of cell {cell}"),
            residual,
        });
    }
    Ok(beta)
}

/// Recovered stress of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRecovery {
    pub basis: StressModeBasis,
    pub beta: ModeCoefficients,
    pub particular: ParticularStress,
    pub patch_kind: PatchKind,
    /// True when the requested patch was ill-conditioned and the cell alone
    /// was used instead.
    pub fell_back: bool,
}

impl CellRecovery {
    pub fn evaluate(&self, p: Point2, body_force: Option<&dyn BodyForce>) -> Stress {
        stress_modes_at(&self.basis, p) * self.beta + self.particular.evaluate(p, body_force)
    }
}

/// Piecewise-linear (plus particular part) stress field, one patch solution
/// per cell.
#[derive(Clone)]
pub struct RecoveredStressField<'b> {
    pub kind: RecoveryKind,
    cells: Vec<CellRecovery>,
    body_force: Option<&'b dyn BodyForce>,
}

impl std::fmt::Debug for RecoveredStressField<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RecoveredStressField")
            .field("kind", &self.kind)
            .field("cells", &self.cells)
            .finish_non_exhaustive()
    }
}

impl RecoveredStressField<'_> {
    pub fn cell(&self, c: usize) -> &CellRecovery {
        &self.cells[c]
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    /// Cells whose `Patch1` recovery fell back to the single cell.
    pub fn fallback_cells(&self) -> Vec<usize> {
        (0..self.cells.len()).filter(|&c| self.cells[c].fell_back).collect()
    }

    pub fn evaluate(&self, cell: usize, p: Point2) -> Stress {
        self.cells[cell].evaluate(p, self.body_force)
    }
}

/// `P(p) beta + sigma_p(p)` for the patch centred on `cell`.
pub fn evaluate_recovered_stress(field: &RecoveredStressField<'_>, cell: usize, p: Point2) -> Stress {
    field.evaluate(cell, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RecoveryOptions {
    pub particular: ParticularSolution,
}

fn recover_on_patch(
    mesh: &PolygonalMesh,
    material: &LameMaterial,
    u: &DisplacementField,
    body_force: &dyn BodyForce,
    options: &RecoveryOptions,
    patch: &ElementPatch,
) -> Result<CellRecovery> {
    let basis = StressModeBasis::for_patch(mesh, patch);
    let particular: Vec<ParticularStress> = patch
        .member_cells
        .iter()
        .map(|&c| particular_solution(mesh, c, body_force, options.particular, basis.center))
        .collect();
    let h = compute_h(mesh, patch, &basis, material);
    let g = compute_g(mesh, patch, &basis, material, u, &particular, Some(body_force))?;
    let beta = solve_patch(&h, &g, patch.central_cell)?;
    let own = patch
        .member_cells
        .binary_search(&patch.central_cell)
        .expect("patch contains its central cell");
    Ok(CellRecovery {
        basis,
        beta,
        particular: particular[own],
        patch_kind: patch.kind,
        fell_back: false,
    })
}

/// Recovers a stress field for every cell. A failed `Patch1` solve retries
/// with the cell alone and flags the cell; a failure on the single cell is
/// an error.
pub fn recover_field<'b>(
    mesh: &PolygonalMesh,
    material: &LameMaterial,
    u: &DisplacementField,
    body_force: &'b dyn BodyForce,
    kind: RecoveryKind,
    options: &RecoveryOptions,
) -> Result<RecoveredStressField<'b>> {
    let results: Vec<Result<CellRecovery>> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let patch = mesh.build_patch(c, kind.patch_kind());
            match recover_on_patch(mesh, material, u, body_force, options, &patch) {
                Err(Error::IllConditionedPatch { .. }) | Err(Error::SolverBreakdown { .. })
                    if kind == RecoveryKind::Rcp1 =>
                {
                    let single = mesh.build_patch(c, PatchKind::Patch0);
                    let mut r = recover_on_patch(mesh, material, u, body_force, options, &single)?;
                    r.fell_back = true;
                    Ok(r)
                }
                other => other,
            }
        })
        .collect();

    let mut cells = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(cell) => cells.push(cell),
            Err(e) => failures.push(e),
        }
    }
    if let Some(first) = failures.into_iter().next() {
        return Err(first);
    }
    let fallbacks = cells.iter().filter(|c| c.fell_back).count();
    if fallbacks > 0 {
        log::warn!("{fallbacks} cells fell back from Patch1 to Patch0");
    }
    let uses_antiderivative = cells
        .iter()
        .any(|c| matches!(c.particular, ParticularStress::Antiderivative { .. }));
    Ok(RecoveredStressField {
        kind,
        cells,
        body_force: uses_antiderivative.then_some(body_force),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_mesh, MeshFamily};
    use crate::vem::{solve_dirichlet_problem, vem_stresses, NoBodyForce, VemOptions};
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_basis() -> StressModeBasis {
        StressModeBasis {
            center: Point2::new(0.0, 0.0),
            scale: 1.0,
        }
    }

    /// Central-difference divergence of a stress field.
    fn divergence(f: impl Fn(Point2) -> Stress, p: Point2, h: f64) -> [f64; 2] {
        let dx = (f(Point2::new(p.x + h, p.y)) - f(Point2::new(p.x - h, p.y))) / (2.0 * h);
        let dy = (f(Point2::new(p.x, p.y + h)) - f(Point2::new(p.x, p.y - h))) / (2.0 * h);
        [dx[0] + dy[2], dx[2] + dy[1]]
    }

    fn random_point_in_cell(mesh: &PolygonalMesh, c: usize, rng: &mut ChaCha8Rng) -> Point2 {
        let tris = mesh.triangulate_polygon(c);
        let t = tris[rng.random_range(0..tris.len())];
        let (mut a, mut b) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
        if a + b > 1.0 {
            a = 1.0 - a;
            b = 1.0 - b;
        }
        let (p0, p1, p2) = (mesh.vertex(t[0]), mesh.vertex(t[1]), mesh.vertex(t[2]));
        p0 + (p1 - p0) * a + (p2 - p0) * b
    }

    #[test]
    fn modes_at_center_and_column_pattern() {
        let basis = StressModeBasis {
            center: Point2::new(3.0, -1.0),
            scale: 2.0,
        };
        let m = stress_modes_at(&basis, basis.center);
        let mut expected = ModeMatrix::zeros();
        expected.fixed_view_mut::<3, 3>(0, 0).fill_with_identity();
        assert_eq!(m, expected);
        // local (1, 2)
        let m = stress_modes_at(&basis, Point2::new(5.0, 3.0));
        assert_eq!(m.column(5).as_slice(), &[1.0, 0.0, -2.0]);
        assert_eq!(m.column(3).as_slice(), &[2.0, 0.0, 0.0]);
        assert_eq!(m.column(6).as_slice(), &[0.0, 2.0, -1.0]);
    }

    #[test]
    fn modes_are_divergence_free() {
        let basis = StressModeBasis {
            center: Point2::new(0.4, 0.6),
            scale: 0.3,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let p = Point2::new(rng.random_range(-1.0..2.0), rng.random_range(-1.0..2.0));
            for k in 0..7 {
                let col = |q: Point2| -> Stress { stress_modes_at(&basis, q).column(k).into() };
                let [dx, dy] = divergence(col, p, 1e-4);
                assert!(dx.abs() < 1e-8 && dy.abs() < 1e-8);
            }
        }
    }

    #[test]
    fn particular_stress_cases() {
        let m = generate_mesh(MeshFamily::QuadS, 2, 0).unwrap();
        assert!(particular_solution(&m, 0, &NoBodyForce, ParticularSolution::CellSample, Point2::default()).is_zero());
        let sp = ParticularStress::Sampled {
            force: [1.0, 0.0],
            origin: Point2::new(0.0, 0.0),
        };
        assert_eq!(sp.evaluate(Point2::new(0.3, 0.7), None), Stress::new(-0.3, 0.0, 0.0));

        let pi = std::f64::consts::PI;
        let b = move |p: Point2| {
            let v = pi * pi * (4.0 * (pi * p.x).sin() * (pi * p.y).sin() - 2.0 * (pi * p.x).cos() * (pi * p.y).cos());
            [v, v]
        };
        let mesh = generate_mesh(MeshFamily::PolyU, 4, 2).unwrap();
        for c in 0..mesh.num_cells() {
            let sp = particular_solution(&mesh, c, &b, ParticularSolution::CellSample, mesh.polygon_centroid(c));
            let x = mesh.polygon_centroid(c);
            let [dx, dy] = divergence(|q| sp.evaluate(q, None), x, 1e-3);
            let [bx, by] = b(x);
            assert!((dx + bx).abs() < 1e-10 && (dy + by).abs() < 1e-10);
        }
    }

    struct Affine;
    impl BodyForce for Affine {
        fn value(&self, p: Point2) -> [f64; 2] {
            [p.y, 2.0 * p.x]
        }
        fn antiderivative(&self, p: Point2) -> Option<[f64; 2]> {
            Some([p.x * p.y, 2.0 * p.x * p.y])
        }
    }

    #[test]
    fn antiderivative_hook_balances_exactly() {
        let mesh = generate_mesh(MeshFamily::HexS, 2, 0).unwrap();
        let sp = particular_solution(&mesh, 1, &Affine, ParticularSolution::Antiderivative, Point2::default());
        assert!(matches!(sp, ParticularStress::Antiderivative { .. }));
        let p = Point2::new(0.3, 0.8);
        let [dx, dy] = divergence(|q| sp.evaluate(q, Some(&Affine)), p, 1e-4);
        assert!((dx + 0.8).abs() < 1e-9 && (dy + 0.6).abs() < 1e-9);
        let sampled = particular_solution(&mesh, 1, &Affine, ParticularSolution::CellSample, Point2::default());
        assert!(matches!(sampled, ParticularStress::Sampled { .. }));
    }

    #[test]
    fn h_for_unit_square() {
        let m = generate_mesh(MeshFamily::QuadS, 1, 0).unwrap();
        let mat = LameMaterial::default();
        let patch = m.build_patch(0, PatchKind::Patch0);
        let basis = StressModeBasis::for_patch(&m, &patch);
        assert!(basis.center.distance(Point2::new(0.5, 0.5)) < 1e-15);
        assert!((basis.scale - 2f64.sqrt()).abs() < 1e-15);
        let h = compute_h(&m, &patch, &basis, &mat);
        let block = h.fixed_view::<3, 3>(0, 0).into_owned();
        assert!((block - mat.compliance_matrix()).abs().max() < 1e-14);
        assert!((h - h.transpose()).abs().max() < 1e-13);
        assert!(condition_number(&h) < 1e3);
    }

    #[test]
    fn h_matches_refined_quadrature() {
        let mat = LameMaterial::new(2.0, 0.5).unwrap();
        let m = generate_mesh(MeshFamily::ConcU, 3, 4).unwrap();
        let patch = m.build_patch(4, PatchKind::Patch1);
        let basis = StressModeBasis::for_patch(&m, &patch);
        let h = compute_h(&m, &patch, &basis, &mat);
        let s = mat.compliance_matrix();
        // Split each ear-clip triangle into four and integrate with the same rule.
        let mut brute = PatchMatrix::zeros();
        for &c in &patch.member_cells {
            for t in m.triangulate_polygon(c) {
                let (a, b, cc) = (m.vertex(t[0]), m.vertex(t[1]), m.vertex(t[2]));
                let (ab, bc, ca) = ((a + b) * 0.5, (b + cc) * 0.5, (cc + a) * 0.5);
                for (p, q, r) in [(a, ab, ca), (ab, b, bc), (ca, bc, cc), (ab, bc, ca)] {
                    for (x, w) in crate::quadrature::triangle_points(p, q, r) {
                        let pm = stress_modes_at(&basis, x);
                        brute += pm.transpose() * s * pm * w;
                    }
                }
            }
        }
        assert!((h - brute).abs().max() <= 1e-12 * brute.abs().max());
    }

    #[test]
    fn g_vanishes_for_rigid_translation_and_zero_data() {
        let m = generate_mesh(MeshFamily::PolyU, 4, 0).unwrap();
        let mat = LameMaterial::default();
        for c in [0, 5, 9] {
            let patch = m.build_patch(c, PatchKind::Patch1);
            let basis = StressModeBasis::for_patch(&m, &patch);
            let none: Vec<ParticularStress> = patch
                .member_cells
                .iter()
                .map(|&k| particular_solution(&m, k, &NoBodyForce, ParticularSolution::CellSample, basis.center))
                .collect();
            let zero = DisplacementField::interpolate(&m, |_| [0.0, 0.0]);
            let g = compute_g(&m, &patch, &basis, &mat, &zero, &none, None).unwrap();
            assert_eq!(g, ModeCoefficients::zeros());
            let shift = DisplacementField::interpolate(&m, |_| [1.0, 0.0]);
            let g = compute_g(&m, &patch, &basis, &mat, &shift, &none, None).unwrap();
            assert!(g.amax() < 1e-14);
        }
    }

    #[test]
    fn solve_patch_zero_rhs() {
        let h = PatchMatrix::identity() * 2.0;
        assert_eq!(solve_patch(&h, &ModeCoefficients::zeros(), 0).unwrap(), ModeCoefficients::zeros());
        let mut bad = PatchMatrix::identity();
        bad[(6, 6)] = 1e-14;
        assert!(matches!(
            solve_patch(&bad, &ModeCoefficients::zeros(), 3),
            Err(Error::IllConditionedPatch { cell: 3, .. })
        ));
    }

    fn recover_exact(
        mesh: &PolygonalMesh,
        mat: &LameMaterial,
        u: impl Fn(Point2) -> [f64; 2],
        kind: RecoveryKind,
    ) -> RecoveredStressField<'static> {
        let field = DisplacementField::interpolate(mesh, u);
        recover_field(mesh, mat, &field, &NoBodyForce, kind, &RecoveryOptions::default()).unwrap()
    }

    #[test]
    fn constant_stress_round_trip() {
        let mat = LameMaterial::new(1.5, 0.75).unwrap();
        let u = |p: Point2| [0.2 * p.x - 0.1 * p.y, 0.3 * p.x + 0.05 * p.y];
        let exact = mat.elastic_matrix() * Vector3::new(0.2, 0.05, 0.2);
        for family in MeshFamily::GENERATED {
            let m = generate_mesh(family, 3, 6).unwrap();
            for kind in [RecoveryKind::Rcp0, RecoveryKind::Rcp1] {
                let f = recover_exact(&m, &mat, u, kind);
                for c in 0..m.num_cells() {
                    let beta = f.cell(c).beta;
                    assert!((beta.fixed_rows::<3>(0) - exact).amax() < 1e-9, "{family}");
                    assert!(beta.fixed_rows::<4>(3).amax() < 1e-9, "{family}");
                }
            }
        }
    }

    #[test]
    fn linear_stress_in_span_is_reproduced() {
        // u = (x^2 - y^2, -2xy) with lambda = 0, mu = 1 gives sigma = (4x, -4x, -4y),
        // which is divergence-free and linear.
        let mat = LameMaterial::new(0.0, 1.0).unwrap();
        let u = |p: Point2| [p.x * p.x - p.y * p.y, -2.0 * p.x * p.y];
        let exact = |p: Point2| Stress::new(4.0 * p.x, -4.0 * p.x, -4.0 * p.y);
        // The trace is quadratic, so g is integrated from the exact field.
        let m = generate_mesh(MeshFamily::QuadS, 1, 0).unwrap();
        let patch = m.build_patch(0, PatchKind::Patch0);
        let basis = StressModeBasis::for_patch(&m, &patch);
        let h = compute_h(&m, &patch, &basis, &mat);
        // g from the exact trace with a 5-point Gauss rule per edge.
        let gl = [
            (0.0, 128.0 / 225.0),
            (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
            (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
            (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
            (0.906_179_845_938_664, 0.236_926_885_056_189_1),
        ];
        let verts = m.cell(0);
        let mut g = ModeCoefficients::zeros();
        for i in 0..verts.len() {
            let (a, b) = (m.vertex(verts[i]), m.vertex(verts[(i + 1) % verts.len()]));
            let n = crate::mesh::outward_normal(a, b).unwrap();
            let half = 0.5 * a.distance(b);
            for (t, w) in gl {
                let p = (a + b) * 0.5 + (b - a) * (0.5 * t);
                let [ux, uy] = u(p);
                let tw = Vector3::new(n.x * ux, n.y * uy, n.y * ux + n.x * uy);
                g += stress_modes_at(&basis, p).transpose() * tw * (w * half);
            }
        }
        let beta = solve_patch(&h, &g, 0).unwrap();
        let cell = CellRecovery {
            basis,
            beta,
            particular: ParticularStress::Sampled {
                force: [0.0, 0.0],
                origin: basis.center,
            },
            patch_kind: PatchKind::Patch0,
            fell_back: false,
        };
        for p in [Point2::new(0.1, 0.2), Point2::new(0.9, 0.4), Point2::new(0.5, 0.5)] {
            assert!((cell.evaluate(p, None) - exact(p)).amax() < 1e-9);
        }
    }

    #[test]
    fn rcp0_on_triangles_matches_vem_stress() {
        let mat = LameMaterial::default();
        let m = generate_mesh(MeshFamily::TriU, 4, 3).unwrap();
        let u = solve_dirichlet_problem(&m, &mat, &NoBodyForce, |p| [p.x * p.y, p.x.sin()], &VemOptions::default())
            .unwrap();
        let vem = vem_stresses(&m, &mat, &u).unwrap();
        let f = recover_field(&m, &mat, &u, &NoBodyForce, RecoveryKind::Rcp0, &RecoveryOptions::default()).unwrap();
        for c in 0..m.num_cells() {
            let beta = f.cell(c).beta;
            assert!((beta.fixed_rows::<3>(0) - vem[c]).amax() < 1e-10);
            assert!(beta.fixed_rows::<4>(3).amax() < 1e-10);
        }
    }

    #[test]
    fn recovered_field_is_equilibrated() {
        let mat = LameMaterial::default();
        let b = |p: Point2| [1.0 + p.x * p.y, (3.0 * p.x).cos()];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for family in [MeshFamily::HexS, MeshFamily::ConcU, MeshFamily::TriS] {
            let m = generate_mesh(family, 4, 1).unwrap();
            let u = solve_dirichlet_problem(&m, &mat, &b, |_| [0.0, 0.0], &VemOptions::default()).unwrap();
            for kind in [RecoveryKind::Rcp0, RecoveryKind::Rcp1] {
                let f = recover_field(&m, &mat, &u, &b, kind, &RecoveryOptions::default()).unwrap();
                for c in 0..m.num_cells() {
                    let [bx, by] = b(m.polygon_centroid(c));
                    for _ in 0..5 {
                        let p = random_point_in_cell(&m, c, &mut rng);
                        let [dx, dy] = divergence(|q| f.evaluate(c, q), p, 1e-5);
                        assert!((dx + bx).abs() < 1e-8 && (dy + by).abs() < 1e-8);
                    }
                }
            }
        }
    }

    #[test]
    fn patch_kinds_are_labelled() {
        let m = generate_mesh(MeshFamily::QuadS, 3, 0).unwrap();
        let f = recover_exact(&m, &LameMaterial::default(), |p| [p.x, 0.0], RecoveryKind::Rcp1);
        assert_eq!(f.cell(4).patch_kind, PatchKind::Patch1);
        assert_eq!(f.cell(0).patch_kind, PatchKind::Patch1B);
        assert!(f.fallback_cells().is_empty());
        let f = recover_exact(&m, &LameMaterial::default(), |p| [p.x, 0.0], RecoveryKind::Rcp0);
        assert_eq!(f.cell(4).patch_kind, PatchKind::Patch0);
    }

    #[test]
    fn recovery_is_translation_invariant() {
        let mat = LameMaterial::default();
        let m = generate_mesh(MeshFamily::PolyU, 4, 5).unwrap();
        let offset = Point2::new(100.0, 100.0);
        let far = m.translated(offset).unwrap();
        let u = |p: Point2| [(2.0 * p.x).sin() * p.y, p.x * p.x];
        let a = recover_exact(&m, &mat, u, RecoveryKind::Rcp1);
        // Same nodal values on the shifted mesh.
        let values = DisplacementField::interpolate(&m, u);
        let b = recover_field(&far, &mat, &values, &NoBodyForce, RecoveryKind::Rcp1, &RecoveryOptions::default())
            .unwrap();
        for c in 0..m.num_cells() {
            let p = m.polygon_centroid(c);
            let q = m.vertex(m.cell(c)[0]);
            for x in [p, q] {
                assert!((a.evaluate(c, x) - b.evaluate(c, x + offset)).amax() < 1e-8);
            }
        }
    }

    #[test]
    fn evaluate_first_mode() {
        let cell = CellRecovery {
            basis: unit_basis(),
            beta: ModeCoefficients::from_column_slice(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
            particular: ParticularStress::Sampled {
                force: [0.0, 0.0],
                origin: Point2::default(),
            },
            patch_kind: PatchKind::Patch0,
            fell_back: false,
        };
        let field = RecoveredStressField {
            kind: RecoveryKind::Rcp0,
            cells: vec![cell],
            body_force: None,
        };
        for p in [Point2::new(0.0, 0.0), Point2::new(3.0, -2.0)] {
            assert_eq!(evaluate_recovered_stress(&field, 0, p), Stress::new(1.0, 0.0, 0.0));
        }
    }
}
