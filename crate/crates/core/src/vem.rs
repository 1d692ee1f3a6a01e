//! First-order virtual element discretisation of plane elasticity.
//!
//! Local degrees of freedom are the vertex displacements of a cell, ordered
//! `(u_1, v_1, u_2, v_2, ...)` along its counterclockwise cycle; global ones
//! are `(u, v)` per mesh vertex. The virtual shape functions are never
//! evaluated: only their traces, which are linear on each edge, enter the
//! boundary integral defining the strain projector.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rayon::prelude::*;

use crate::linalg::{norm2, CsrMatrix, SkylineCholesky, TripletBuilder};
use crate::material::{ElasticMatrix, LameMaterial};
use crate::mesh::{Point2, PolygonalMesh};
use crate::{Error, Result, Stress};

/// A body force field `b(x, y)`.
pub trait BodyForce: Sync {
    fn value(&self, p: Point2) -> [f64; 2];

    /// Closed-form antiderivatives `(I_x(b_x), I_y(b_y))` with
    /// `d/dx I_x(b_x) = b_x` and `d/dy I_y(b_y) = b_y`, when known.
    fn antiderivative(&self, _p: Point2) -> Option<[f64; 2]> {
        None
    }
}

impl<F> BodyForce for F
where
    F: Fn(Point2) -> [f64; 2] + Sync,
{
    fn value(&self, p: Point2) -> [f64; 2] {
        self(p)
    }
}

/// Zero body force.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoBodyForce;

impl BodyForce for NoBodyForce {
    fn value(&self, _p: Point2) -> [f64; 2] {
        [0.0, 0.0]
    }

    fn antiderivative(&self, _p: Point2) -> Option<[f64; 2]> {
        Some([0.0, 0.0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VemOptions {
    /// Multiplier on the stabilisation scale `tau_E = trace(K_c) / 2`.
    pub stabilization_scale: f64,
}

impl Default for VemOptions {
    fn default() -> Self {
        Self {
            stabilization_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ElementOperators {
    pub cell: usize,
    pub area: f64,
    /// `int_E (N^P)^T N^P`, i.e. `|E| I` at first order.
    pub g: Matrix3<f64>,
    /// `3 x 2n` boundary matrix.
    pub b: DMatrix<f64>,
    /// `3 x 2n` strain projector `G^{-1} B`.
    pub pi_m: DMatrix<f64>,
    pub kc: DMatrix<f64>,
    pub ks: DMatrix<f64>,
    pub k: DMatrix<f64>,
}

pub fn compute_g(mesh: &PolygonalMesh, cell: usize) -> Matrix3<f64> {
    Matrix3::identity() * mesh.polygon_area(cell)
}

/// Exact boundary integral `int_dE (N_E N^P)^T N^V`. Each edge contributes
/// `|e|/2 N_E^T` to the columns of both of its endpoints.
pub fn compute_b(mesh: &PolygonalMesh, cell: usize) -> Result<DMatrix<f64>> {
    let verts = mesh.cell(cell);
    let n = verts.len();
    let mut b = DMatrix::zeros(3, 2 * n);
    for e in 0..n {
        let normal = mesh.edge_outward_normal(cell, e)?;
        let len = mesh.vertex(verts[e]).distance(mesh.vertex(verts[(e + 1) % n]));
        let w = 0.5 * len;
        for local in [e, (e + 1) % n] {
            b[(0, 2 * local)] += w * normal.x;
            b[(2, 2 * local)] += w * normal.y;
            b[(1, 2 * local + 1)] += w * normal.y;
            b[(2, 2 * local + 1)] += w * normal.x;
        }
    }
    Ok(b)
}

/// Solves `G X = B` column-wise.
pub fn compute_pi_m(g: &Matrix3<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = g
        .cholesky()
        .ok_or_else(|| Error::InvalidInput("projector matrix G is not positive definite".into()))?;
    let mut pi = b.clone();
    for mut col in pi.column_iter_mut() {
        let x = chol.solve(&Vector3::new(col[0], col[1], col[2]));
        col.copy_from(&x);
    }
    Ok(pi)
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// `|E| Pi^T C Pi`; rank 3.
pub fn consistency_stiffness(pi_m: &DMatrix<f64>, c: &ElasticMatrix, area: f64) -> DMatrix<f64> {
    let c = DMatrix::from_column_slice(3, 3, c.as_slice());
    symmetrize(pi_m.transpose() * c * pi_m * area)
}

/// Vertex samples of the six linear vector fields, in local coordinates
/// centred at the cell centroid and scaled by its diameter.
fn linear_field_samples(mesh: &PolygonalMesh, cell: usize) -> DMatrix<f64> {
    let verts = mesh.cell(cell);
    let c = mesh.polygon_centroid(cell);
    let d = mesh.cell_diameter(cell);
    let mut m = DMatrix::zeros(2 * verts.len(), 6);
    for (i, &v) in verts.iter().enumerate() {
        let p = mesh.vertex(v);
        let (xi, eta) = ((p.x - c.x) / d, (p.y - c.y) / d);
        let (ru, rv) = (2 * i, 2 * i + 1);
        m[(ru, 0)] = 1.0;
        m[(rv, 1)] = 1.0;
        m[(ru, 2)] = -eta;
        m[(rv, 2)] = xi;
        m[(ru, 3)] = xi;
        m[(rv, 4)] = eta;
        m[(ru, 5)] = eta;
        m[(rv, 5)] = xi;
    }
    m
}

/// `tau (I - P)^T (I - P)` with `P` the least-squares projector of the dof
/// space onto vertex samples of linear displacement fields, and
/// `tau = scale * trace(K_c) / 2`. Vanishes on every linear field.
pub fn stabilization_stiffness(
    mesh: &PolygonalMesh,
    cell: usize,
    kc: &DMatrix<f64>,
    scale: f64,
) -> Result<DMatrix<f64>> {
    let samples = linear_field_samples(mesh, cell);
    let dofs = samples.nrows();
    let qr = samples.qr();
    let r = qr.r();
    let rmax = r.diagonal().amax();
    if r.diagonal().iter().any(|d| d.abs() <= 1e-10 * rmax) {
        return Err(Error::DegenerateCell {
            cell,
            reason: "vertex samples of linear fields are rank deficient".into(),
        });
    }
    let q = qr.q();
    let complement = DMatrix::identity(dofs, dofs) - &q * q.transpose();
    let tau = 0.5 * kc.trace() * scale;
    Ok(symmetrize(complement.transpose() * complement * tau))
}

pub fn element_operators(
    mesh: &PolygonalMesh,
    cell: usize,
    material: &LameMaterial,
    options: &VemOptions,
) -> Result<ElementOperators> {
    let area = mesh.polygon_area(cell);
    let g = compute_g(mesh, cell);
    let b = compute_b(mesh, cell)?;
    let pi_m = compute_pi_m(&g, &b).map_err(|_| Error::DegenerateCell {
        cell,
        reason: "singular projector matrix".into(),
    })?;
    let kc = consistency_stiffness(&pi_m, &material.elastic_matrix(), area);
    let ks = stabilization_stiffness(mesh, cell, &kc, options.stabilization_scale)?;
    let k = &kc + &ks;
    Ok(ElementOperators {
        cell,
        area,
        g,
        b,
        pi_m,
        kc,
        ks,
        k,
    })
}

/// Body force sampled at the centroid, split equally over the vertices.
pub fn element_load_vector(
    mesh: &PolygonalMesh,
    cell: usize,
    body_force: &dyn BodyForce,
) -> DVector<f64> {
    let n = mesh.cell(cell).len();
    let [bx, by] = body_force.value(mesh.polygon_centroid(cell));
    let share = mesh.polygon_area(cell) / n as f64;
    let mut f = DVector::zeros(2 * n);
    for i in 0..n {
        f[2 * i] = share * bx;
        f[2 * i + 1] = share * by;
    }
    f
}

fn local_to_global(mesh: &PolygonalMesh, cell: usize) -> Vec<usize> {
    mesh.cell(cell)
        .iter()
        .flat_map(|&v| [2 * v, 2 * v + 1])
        .collect()
}

/// Assembled stiffness and load, before boundary conditions.
#[derive(Debug, Clone)]
pub struct GlobalSystem {
    pub stiffness: CsrMatrix,
    pub load: Vec<f64>,
    boundary_vertex: Vec<bool>,
}

impl GlobalSystem {
    pub fn num_dofs(&self) -> usize {
        self.load.len()
    }
}

pub fn assemble_global(
    mesh: &PolygonalMesh,
    material: &LameMaterial,
    body_force: &dyn BodyForce,
    options: &VemOptions,
) -> Result<GlobalSystem> {
    let ops: Vec<ElementOperators> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| element_operators(mesh, c, material, options))
        .collect::<Result<_>>()?;

    let ndofs = 2 * mesh.num_vertices();
    let mut triplets = TripletBuilder::new(ndofs);
    let mut load = vec![0.0; ndofs];
    // Fixed cell order keeps the floating-point sums reproducible.
    for (c, op) in ops.iter().enumerate() {
        let dofs = local_to_global(mesh, c);
        for (i, &gi) in dofs.iter().enumerate() {
            for (j, &gj) in dofs.iter().enumerate() {
                triplets.push(gi, gj, op.k[(i, j)]);
            }
        }
        let f = element_load_vector(mesh, c, body_force);
        for (i, &gi) in dofs.iter().enumerate() {
            load[gi] += f[i];
        }
    }
    Ok(GlobalSystem {
        stiffness: triplets.build(),
        load,
        boundary_vertex: mesh.boundary_vertex_flags().to_vec(),
    })
}

/// System restricted to the free dofs after strong elimination of the
/// prescribed ones.
#[derive(Debug, Clone)]
pub struct ConstrainedSystem {
    pub free_dofs: Vec<usize>,
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    prescribed: Vec<Option<f64>>,
}

/// Eliminates the prescribed vertex displacements. Every boundary vertex
/// must be prescribed; interior vertices may be as well.
pub fn apply_dirichlet(
    system: &GlobalSystem,
    boundary_values: &BTreeMap<usize, [f64; 2]>,
) -> Result<ConstrainedSystem> {
    if boundary_values.is_empty() {
        return Err(Error::Unconstrained);
    }
    if let Some(v) = system
        .boundary_vertex
        .iter()
        .enumerate()
        .find(|&(v, &b)| b && !boundary_values.contains_key(&v))
        .map(|(v, _)| v)
    {
        return Err(Error::MissingBoundaryValue(v));
    }
    let ndofs = system.num_dofs();
    let mut prescribed = vec![None; ndofs];
    for (&v, &[u, w]) in boundary_values {
        if 2 * v + 1 >= ndofs {
            return Err(Error::InvalidInput(format!("prescribed vertex {v} does not exist")));
        }
        prescribed[2 * v] = Some(u);
        prescribed[2 * v + 1] = Some(w);
    }
    let free_dofs: Vec<usize> = (0..ndofs).filter(|&d| prescribed[d].is_none()).collect();
    let rhs = free_dofs
        .iter()
        .map(|&i| {
            let lifted: f64 = system
                .stiffness
                .row(i)
                .filter_map(|(j, k)| prescribed[j].map(|u| k * u))
                .sum();
            system.load[i] - lifted
        })
        .collect();
    Ok(ConstrainedSystem {
        matrix: system.stiffness.submatrix(&free_dofs),
        free_dofs,
        rhs,
        prescribed,
    })
}

/// Global nodal displacements.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    dofs: Vec<f64>,
}

impl DisplacementField {
    pub fn from_dofs(dofs: Vec<f64>) -> Self {
        Self { dofs }
    }

    /// Samples a displacement function at the mesh vertices.
    pub fn interpolate(mesh: &PolygonalMesh, u: impl Fn(Point2) -> [f64; 2]) -> Self {
        Self {
            dofs: mesh.vertices().iter().flat_map(|&p| u(p)).collect(),
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.dofs
    }

    pub fn vertex(&self, v: usize) -> [f64; 2] {
        [self.dofs[2 * v], self.dofs[2 * v + 1]]
    }

    pub fn cell_dofs(&self, mesh: &PolygonalMesh, cell: usize) -> DVector<f64> {
        DVector::from_iterator(
            2 * mesh.cell(cell).len(),
            mesh.cell(cell).iter().flat_map(|&v| self.vertex(v)),
        )
    }
}

/// Direct solve of the constrained system; checks the relative residual.
pub fn solve_system(system: &ConstrainedSystem) -> Result<DisplacementField> {
    let mut dofs: Vec<f64> = system.prescribed.iter().map(|p| p.unwrap_or(0.0)).collect();
    if system.free_dofs.is_empty() {
        return Ok(DisplacementField { dofs });
    }
    let rhs_norm = norm2(&system.rhs);
    if rhs_norm == 0.0 {
        return Ok(DisplacementField { dofs });
    }
    let chol = SkylineCholesky::factor(&system.matrix)?;
    let x = chol.solve(&system.rhs);
    let ax = system.matrix.mul_vec(&x);
    let r: Vec<f64> = ax.iter().zip(&system.rhs).map(|(a, b)| a - b).collect();
    let residual = norm2(&r) / rhs_norm;
    if !(residual <= 1e-10) {
        return Err(Error::SolverBreakdown {
            reason: "residual above tolerance".into(),
            residual,
        });
    }
    for (&d, &v) in system.free_dofs.iter().zip(&x) {
        dofs[d] = v;
    }
    Ok(DisplacementField { dofs })
}

/// Assembles, constrains every boundary vertex with `boundary` and solves.
pub fn solve_dirichlet_problem(
    mesh: &PolygonalMesh,
    material: &LameMaterial,
    body_force: &dyn BodyForce,
    boundary: impl Fn(Point2) -> [f64; 2],
    options: &VemOptions,
) -> Result<DisplacementField> {
    let system = assemble_global(mesh, material, body_force, options)?;
    let values: BTreeMap<usize, [f64; 2]> = (0..mesh.num_vertices())
        .filter(|&v| mesh.is_boundary_vertex(v))
        .map(|v| (v, boundary(mesh.vertex(v))))
        .collect();
    solve_system(&apply_dirichlet(&system, &values)?)
}

/// Constant projected stress `C Pi_m u` of one cell.
pub fn element_stress_vem(pi_m: &DMatrix<f64>, c: &ElasticMatrix, local_dofs: &DVector<f64>) -> Stress {
    let strain = pi_m * local_dofs;
    c * Vector3::new(strain[0], strain[1], strain[2])
}

/// Projected stress of every cell.
pub fn vem_stresses(
    mesh: &PolygonalMesh,
    material: &LameMaterial,
    u: &DisplacementField,
) -> Result<Vec<Stress>> {
    let c = material.elastic_matrix();
    (0..mesh.num_cells())
        .into_par_iter()
        .map(|cell| {
            let pi = compute_pi_m(&compute_g(mesh, cell), &compute_b(mesh, cell)?)?;
            Ok(element_stress_vem(&pi, &c, &u.cell_dofs(mesh, cell)))
        })
        .collect()
}
