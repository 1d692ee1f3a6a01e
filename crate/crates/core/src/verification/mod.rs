//! Manufactured solutions, the energy error norm and convergence studies.

mod cases;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

pub use cases::{
    consistency_residuals, manufactured_case, ConsistencyResiduals, ManufacturedCase, TestId,
};
pub use crate::quadrature::polygon_quadrature;

use crate::material::LameMaterial;
use crate::mesh::{generate_mesh, MeshFamily, Point2, PolygonalMesh};
use crate::rcp::{recover_field, RecoveredStressField, RecoveryKind, RecoveryOptions};
use crate::vem::{solve_dirichlet_problem, vem_stresses, DisplacementField, VemOptions};
use crate::{Error, Result, Stress};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StressMethod {
    /// Projected, cell-wise constant stress.
    Vem,
    Rcp0,
    Rcp1,
}

impl StressMethod {
    pub const ALL: [StressMethod; 3] = [StressMethod::Vem, StressMethod::Rcp0, StressMethod::Rcp1];

    pub fn name(self) -> &'static str {
        match self {
            StressMethod::Vem => "vem",
            StressMethod::Rcp0 => "rcp0",
            StressMethod::Rcp1 => "rcp1",
        }
    }

    fn index(self) -> usize {
        self as usize
    }

    pub fn recovery_kind(self) -> Option<RecoveryKind> {
        match self {
            StressMethod::Vem => None,
            StressMethod::Rcp0 => Some(RecoveryKind::Rcp0),
            StressMethod::Rcp1 => Some(RecoveryKind::Rcp1),
        }
    }
}

impl fmt::Display for StressMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StressMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "vem" => Ok(StressMethod::Vem),
            "rcp0" => Ok(StressMethod::Rcp0),
            "rcp1" => Ok(StressMethod::Rcp1),
            _ => Err(Error::InvalidInput(format!("unknown stress method `{s}`"))),
        }
    }
}

/// `sum over cells of int (sigma_ex - sigma*)^T C^{-1} (sigma_ex - sigma*)`,
/// without a square root.
pub fn energy_error_norm(
    mesh: &PolygonalMesh,
    material: &LameMaterial,
    exact: &(dyn Fn(Point2) -> Stress + Sync),
    approx: &(dyn Fn(usize, Point2) -> Stress + Sync),
) -> f64 {
    let s = material.compliance_matrix();
    let per_cell: Vec<f64> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            polygon_quadrature(mesh, c, |p| {
                let e = exact(p) - approx(c, p);
                e.dot(&(s * e))
            })
        })
        .collect();
    per_cell.iter().sum()
}

/// Discrete solution and recovered stresses of one mesh.
#[derive(Debug)]
pub struct LevelSolution<'a> {
    pub displacement: DisplacementField,
    pub vem_stress: Vec<Stress>,
    pub rcp0: Option<RecoveredStressField<'a>>,
    pub rcp1: Option<RecoveredStressField<'a>>,
}

impl LevelSolution<'_> {
    /// Stress of `method` at `p` in `cell`, if that method was computed.
    pub fn stress(&self, method: StressMethod, cell: usize, p: Point2) -> Option<Stress> {
        match method {
            StressMethod::Vem => Some(self.vem_stress[cell]),
            StressMethod::Rcp0 => self.rcp0.as_ref().map(|f| f.evaluate(cell, p)),
            StressMethod::Rcp1 => self.rcp1.as_ref().map(|f| f.evaluate(cell, p)),
        }
    }

    fn has(&self, method: StressMethod) -> bool {
        match method {
            StressMethod::Vem => true,
            StressMethod::Rcp0 => self.rcp0.is_some(),
            StressMethod::Rcp1 => self.rcp1.is_some(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StudyOptions {
    pub vem: VemOptions,
    pub recovery: RecoveryOptions,
}

/// Solves the case on `mesh` with its exact displacement prescribed on the
/// boundary, then recovers the requested stress fields.
pub fn solve_level<'a>(
    mesh: &PolygonalMesh,
    case: &'a ManufacturedCase,
    methods: &[StressMethod],
    options: &StudyOptions,
) -> Result<LevelSolution<'a>> {
    let displacement = solve_dirichlet_problem(
        mesh,
        &case.material,
        case,
        |p| case.displacement(p),
        &options.vem,
    )?;
    let vem_stress = vem_stresses(mesh, &case.material, &displacement)?;
    let recover = |kind: RecoveryKind| -> Result<Option<RecoveredStressField<'a>>> {
        let wanted = methods.iter().any(|m| m.recovery_kind() == Some(kind));
        if !wanted {
            return Ok(None);
        }
        recover_field(mesh, &case.material, &displacement, case, kind, &options.recovery).map(Some)
    };
    let rcp0 = recover(RecoveryKind::Rcp0)?;
    let rcp1 = recover(RecoveryKind::Rcp1)?;
    Ok(LevelSolution {
        displacement,
        vem_stress,
        rcp0,
        rcp1,
    })
}

/// Energy error of each computed method, indexed like [`StressMethod::ALL`].
pub fn level_errors(
    mesh: &PolygonalMesh,
    case: &ManufacturedCase,
    solution: &LevelSolution<'_>,
) -> [Option<f64>; 3] {
    StressMethod::ALL.map(|m| {
        solution.has(m).then(|| {
            energy_error_norm(mesh, &case.material, &|p| case.stress(p), &|c, p| {
                solution.stress(m, c, p).expect("method was computed")
            })
        })
    })
}

/// One row of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub test: TestId,
    pub family: MeshFamily,
    pub level: usize,
    /// Average edge length.
    pub h_e: f64,
    pub dofs: usize,
    /// Indexed like [`StressMethod::ALL`]; `None` for methods not run.
    pub errors: [Option<f64>; 3],
    /// Wall time in seconds.
    pub time_s: f64,
}

impl ConvergenceRecord {
    pub fn error(&self, method: StressMethod) -> Option<f64> {
        self.errors[method.index()]
    }
}

/// Solves and measures one mesh.
pub fn evaluate_level(
    case: &ManufacturedCase,
    mesh: &PolygonalMesh,
    level: usize,
    methods: &[StressMethod],
    options: &StudyOptions,
) -> Result<ConvergenceRecord> {
    let start = Instant::now();
    let solution = solve_level(mesh, case, methods, options)?;
    let mut errors = level_errors(mesh, case, &solution);
    for m in StressMethod::ALL {
        if !methods.contains(&m) {
            errors[m.index()] = None;
        }
    }
    Ok(ConvergenceRecord {
        test: case.id,
        family: mesh.family(),
        level,
        h_e: mesh.average_edge_length(),
        dofs: 2 * mesh.num_vertices(),
        errors,
        time_s: start.elapsed().as_secs_f64(),
    })
}

/// A sequence of generated meshes of one family.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyPlan {
    pub test: TestId,
    pub family: MeshFamily,
    /// Subdivisions per side, one entry per level.
    pub subdivisions: Vec<usize>,
    pub seed: u64,
    pub material: LameMaterial,
    pub methods: Vec<StressMethod>,
    pub options: StudyOptions,
}

impl StudyPlan {
    /// Levels `0..levels` with `base * 2^level` subdivisions.
    pub fn doubling(test: TestId, family: MeshFamily, base: usize, levels: usize) -> Self {
        Self {
            test,
            family,
            subdivisions: (0..levels).map(|l| base << l).collect(),
            seed: 0,
            material: LameMaterial::default(),
            methods: StressMethod::ALL.to_vec(),
            options: StudyOptions::default(),
        }
    }
}

/// Runs every level in order; a failing level yields its error and the
/// study moves on.
pub fn run_convergence_study(plan: &StudyPlan) -> Vec<Result<ConvergenceRecord>> {
    let case = manufactured_case(plan.test, plan.material);
    plan.subdivisions
        .iter()
        .enumerate()
        .map(|(level, &n)| {
            let start = Instant::now();
            let mesh = generate_mesh(plan.family, n, plan.seed)?;
            let mut record = evaluate_level(&case, &mesh, level, &plan.methods, &plan.options)?;
            record.time_s = start.elapsed().as_secs_f64();
            Ok(record)
        })
        .collect()
}

/// Outcome of the constant-stress patch test on one mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchTestResult {
    /// Largest nodal displacement error relative to the largest exact value.
    pub displacement_error: f64,
    /// Energy error of each method, ordered like [`StressMethod::ALL`].
    pub errors: [f64; 3],
}

impl PatchTestResult {
    pub fn passes(&self, displacement_tol: f64, energy_tol: f64) -> bool {
        self.displacement_error <= displacement_tol && self.errors.iter().all(|&e| e <= energy_tol)
    }
}

/// Prescribes a linear displacement on the boundary with zero body force
/// and measures how well each method reproduces it.
pub fn patch_test(mesh: &PolygonalMesh, material: &LameMaterial) -> Result<PatchTestResult> {
    let u = |p: Point2| [0.1 + 0.5 * p.x - 0.2 * p.y, -0.3 + 0.25 * p.x + 0.4 * p.y];
    let exact = material.elastic_matrix() * nalgebra::Vector3::new(0.5, 0.4, 0.05);
    let no_force = crate::vem::NoBodyForce;
    let d = solve_dirichlet_problem(mesh, material, &no_force, u, &VemOptions::default())?;
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for v in 0..mesh.num_vertices() {
        let e = u(mesh.vertex(v));
        let h = d.vertex(v);
        worst = worst.max((e[0] - h[0]).abs()).max((e[1] - h[1]).abs());
        scale = scale.max(e[0].abs()).max(e[1].abs());
    }
    let vem = vem_stresses(mesh, material, &d)?;
    let mut errors = [energy_error_norm(mesh, material, &|_| exact, &|c, _| vem[c]), 0.0, 0.0];
    for (slot, kind) in [(1, RecoveryKind::Rcp0), (2, RecoveryKind::Rcp1)] {
        let f = recover_field(mesh, material, &d, &no_force, kind, &RecoveryOptions::default())?;
        errors[slot] = energy_error_norm(mesh, material, &|_| exact, &|c, p| f.evaluate(c, p));
    }
    Ok(PatchTestResult {
        displacement_error: worst / scale,
        errors,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    /// Least-squares slope of `log E` against `log h`.
    pub slope: f64,
    /// False when the error does not decrease strictly with `h`.
    pub monotone: bool,
}

/// Observed convergence rate of `method` over `records`.
pub fn observed_rate(records: &[ConvergenceRecord], method: StressMethod) -> Result<RateEstimate> {
    let mut data: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| r.error(method).map(|e| (r.h_e, e)))
        .collect();
    if data.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "at least two records with {method} errors are needed"
        )));
    }
    if data.iter().any(|&(h, e)| !(h > 0.0) || !(e > 0.0)) {
        return Err(Error::InvalidInput("rates need positive h and errors".into()));
    }
    data.sort_by(|a, b| b.0.total_cmp(&a.0));
    let monotone = data.windows(2).all(|w| w[1].0 < w[0].0 && w[1].1 < w[0].1);
    if !monotone {
        log::warn!("{method} errors are not monotone in h");
    }
    let n = data.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = data.iter().map(|&(h, e)| (h.ln(), e.ln())).unzip();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(RateEstimate {
        slope: sxy / sxx,
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(hs: &[f64], f: impl Fn(f64) -> f64) -> Vec<ConvergenceRecord> {
        hs.iter()
            .enumerate()
            .map(|(level, &h)| ConvergenceRecord {
                test: TestId::A,
                family: MeshFamily::QuadS,
                level,
                h_e: h,
                dofs: 0,
                errors: [Some(f(h)), None, Some(2.0 * f(h))],
                time_s: 0.0,
            })
            .collect()
    }

    #[test]
    fn rates_of_synthetic_data() {
        let hs = [0.5, 0.25, 0.125, 0.0625];
        let r = observed_rate(&synthetic(&hs, |h| h * h), StressMethod::Vem).unwrap();
        assert!((r.slope - 2.0).abs() < 1e-12 && r.monotone);
        let r = observed_rate(&synthetic(&hs, |h| 3.0 * h.powi(4)), StressMethod::Rcp1).unwrap();
        assert!((r.slope - 4.0).abs() < 1e-12);
        assert!(observed_rate(&synthetic(&hs, |h| h), StressMethod::Rcp0).is_err());
        assert!(observed_rate(&synthetic(&hs[..1], |h| h), StressMethod::Vem).is_err());
        let bumpy = synthetic(&hs, |h| if h == 0.125 { 1.0 } else { h });
        assert!(!observed_rate(&bumpy, StressMethod::Vem).unwrap().monotone);
    }

    #[test]
    fn exact_stress_has_zero_error() {
        for id in TestId::ALL {
            let case = manufactured_case(id, LameMaterial::default());
            for family in MeshFamily::GENERATED {
                let m = generate_mesh(family, 4, 0).unwrap();
                let e = energy_error_norm(&m, &case.material, &|p| case.stress(p), &|_, p| case.stress(p));
                assert!(e.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn error_of_zero_approximation() {
        // eps_y = -eps_x, so the energy density is 4 mu eps_x^2 + mu gamma^2
        // = 36 (x^2 + y^2)^2, whose integral over the square is 112/5.
        let case = manufactured_case(TestId::A, LameMaterial::default());
        let m = generate_mesh(MeshFamily::HexS, 3, 0).unwrap();
        let e = energy_error_norm(&m, &case.material, &|p| case.stress(p), &|_, _| Stress::zeros());
        assert!((e - 112.0 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn error_is_independent_of_triangulation() {
        // Polynomial integrand of degree 4, integrated exactly by either split.
        let case = manufactured_case(TestId::A, LameMaterial::default());
        let m = generate_mesh(MeshFamily::ConcU, 4, 2).unwrap();
        // Rotating each cell's vertex list changes where ear clipping starts.
        let rotated_cells: Vec<Vec<usize>> = m
            .cells()
            .iter()
            .map(|c| {
                let mut c = c.clone();
                c.rotate_left(2);
                c
            })
            .collect();
        let r = PolygonalMesh::from_parts(m.vertices().to_vec(), rotated_cells, MeshFamily::ConcU).unwrap();
        let approx = |c: usize, p: Point2| Stress::new(c as f64 * 0.01, p.x, -p.y);
        let e1 = energy_error_norm(&m, &case.material, &|p| case.stress(p), &approx);
        let e2 = energy_error_norm(&r, &case.material, &|p| case.stress(p), &approx);
        assert!((e1 - e2).abs() <= 1e-10 * e1);
    }

    #[test]
    fn patch_test_errors_vanish() {
        let mat = LameMaterial::new(1.2, 0.9).unwrap();
        for family in MeshFamily::GENERATED {
            let m = generate_mesh(family, 3, 0).unwrap();
            let r = patch_test(&m, &mat).unwrap();
            assert!(r.passes(1e-10, 1e-18), "{family}: {r:?}");
        }
    }

    #[test]
    fn test_a_quad_study_converges() {
        let plan = StudyPlan::doubling(TestId::A, MeshFamily::QuadS, 4, 4);
        let records: Vec<ConvergenceRecord> = run_convergence_study(&plan)
            .into_iter()
            .collect::<Result<_>>()
            .unwrap();
        assert_eq!(records.len(), 4);
        for w in records.windows(2) {
            assert!(w[1].h_e < w[0].h_e);
            for m in StressMethod::ALL {
                assert!(w[1].error(m).unwrap() < w[0].error(m).unwrap(), "{m}");
            }
        }
        let rate = observed_rate(&records, StressMethod::Vem).unwrap();
        assert!((rate.slope - 2.0).abs() < 0.3, "{rate:?}");
    }

    #[test]
    fn study_continues_past_failures() {
        let mut plan = StudyPlan::doubling(TestId::B, MeshFamily::TriS, 2, 2);
        plan.subdivisions.insert(1, 0);
        let out = run_convergence_study(&plan);
        assert_eq!(out.len(), 3);
        assert!(out[0].is_ok() && out[1].is_err() && out[2].is_ok());
    }

    #[test]
    fn method_subset() {
        let mut plan = StudyPlan::doubling(TestId::B, MeshFamily::QuadU, 4, 1);
        plan.methods = vec![StressMethod::Rcp0];
        let r = run_convergence_study(&plan).remove(0).unwrap();
        assert!(r.error(StressMethod::Vem).is_none());
        assert!(r.error(StressMethod::Rcp0).is_some());
        assert!(r.error(StressMethod::Rcp1).is_none());
    }

    #[test]
    fn method_names() {
        for m in StressMethod::ALL {
            assert_eq!(m.name().parse::<StressMethod>().unwrap(), m);
        }
        assert!("spr".parse::<StressMethod>().is_err());
    }
}
