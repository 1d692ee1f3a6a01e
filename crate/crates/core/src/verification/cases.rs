use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;

use crate::material::LameMaterial;
use crate::mesh::Point2;
use crate::vem::BodyForce;
use crate::{Error, Result, Stress};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TestId {
    /// Harmonic cubic displacement with zero body force.
    A,
    /// `u_x = u_y = sin(pi x) sin(pi y)`.
    B,
    /// `u_x = x y sin(pi x) sin(pi y)`, `u_y = 0`.
    C,
}

impl TestId {
    pub const ALL: [TestId; 3] = [TestId::A, TestId::B, TestId::C];

    pub fn name(self) -> &'static str {
        match self {
            TestId::A => "a",
            TestId::B => "b",
            TestId::C => "c",
        }
    }
}

impl fmt::Display for TestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" => Ok(TestId::A),
            "b" => Ok(TestId::B),
            "c" => Ok(TestId::C),
            _ => Err(Error::UnknownCase(s.to_string())),
        }
    }
}

/// Closed-form displacement, strain, stress and body force of a
/// manufactured solution on the unit square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedCase {
    pub id: TestId,
    pub material: LameMaterial,
}

pub fn manufactured_case(id: TestId, material: LameMaterial) -> ManufacturedCase {
    ManufacturedCase { id, material }
}

struct Trig {
    sx: f64,
    cx: f64,
    sy: f64,
    cy: f64,
}

fn trig(p: Point2) -> Trig {
    let (sx, cx) = (PI * p.x).sin_cos();
    let (sy, cy) = (PI * p.y).sin_cos();
    Trig { sx, cx, sy, cy }
}

impl ManufacturedCase {
    pub fn new(id: TestId, material: LameMaterial) -> Self {
        Self { id, material }
    }

    pub fn displacement(&self, p: Point2) -> [f64; 2] {
        let (x, y) = (p.x, p.y);
        match self.id {
            TestId::A => [x.powi(3) - 3.0 * x * y * y, y.powi(3) - 3.0 * x * x * y],
            TestId::B => {
                let t = trig(p);
                [t.sx * t.sy, t.sx * t.sy]
            }
            TestId::C => {
                let t = trig(p);
                [x * y * t.sx * t.sy, 0.0]
            }
        }
    }

    /// Engineering strain `(eps_x, eps_y, gamma_xy)`.
    pub fn strain(&self, p: Point2) -> Vector3<f64> {
        let (x, y) = (p.x, p.y);
        match self.id {
            TestId::A => Vector3::new(
                3.0 * x * x - 3.0 * y * y,
                3.0 * y * y - 3.0 * x * x,
                -12.0 * x * y,
            ),
            TestId::B => {
                let t = trig(p);
                let ex = PI * t.cx * t.sy;
                let ey = PI * t.sx * t.cy;
                Vector3::new(ex, ey, ex + ey)
            }
            TestId::C => {
                let t = trig(p);
                let fx = y * t.sy * (t.sx + PI * x * t.cx);
                let fy = x * t.sx * (t.sy + PI * y * t.cy);
                Vector3::new(fx, 0.0, fy)
            }
        }
    }

    pub fn stress(&self, p: Point2) -> Stress {
        self.material.elastic_matrix() * self.strain(p)
    }

    pub fn body_force(&self, p: Point2) -> [f64; 2] {
        let (l, m) = (self.material.lambda(), self.material.mu());
        let (x, y) = (p.x, p.y);
        match self.id {
            TestId::A => [0.0, 0.0],
            TestId::B => {
                let t = trig(p);
                let v = PI * PI * ((l + 3.0 * m) * t.sx * t.sy - (l + m) * t.cx * t.cy);
                [v, v]
            }
            TestId::C => {
                let t = trig(p);
                let fxx = y * t.sy * (2.0 * PI * t.cx - PI * PI * x * t.sx);
                let fyy = x * t.sx * (2.0 * PI * t.cy - PI * PI * y * t.sy);
                let fxy = (t.sy + PI * y * t.cy) * (t.sx + PI * x * t.cx);
                [-((l + 2.0 * m) * fxx + m * fyy), -(l + m) * fxy]
            }
        }
    }

    /// `(int b_x dx, int b_y dy)`.
    pub fn body_force_antiderivative(&self, p: Point2) -> [f64; 2] {
        let (l, m) = (self.material.lambda(), self.material.mu());
        let (x, y) = (p.x, p.y);
        match self.id {
            TestId::A => [0.0, 0.0],
            TestId::B => {
                let t = trig(p);
                [
                    -PI * ((l + 3.0 * m) * t.cx * t.sy + (l + m) * t.sx * t.cy),
                    -PI * ((l + 3.0 * m) * t.sx * t.cy + (l + m) * t.cx * t.sy),
                ]
            }
            TestId::C => {
                let t = trig(p);
                let fx = y * t.sy * (t.sx + PI * x * t.cx);
                // int x sin(pi x) dx
                let x_sx = -x * t.cx / PI + t.sx / (PI * PI);
                let g = 2.0 * PI * t.cy - PI * PI * y * t.sy;
                [-((l + 2.0 * m) * fx + m * g * x_sx), -(l + m) * fx]
            }
        }
    }
}

impl BodyForce for ManufacturedCase {
    fn value(&self, p: Point2) -> [f64; 2] {
        self.body_force(p)
    }

    fn antiderivative(&self, p: Point2) -> Option<[f64; 2]> {
        Some(self.body_force_antiderivative(p))
    }
}

/// Largest finite-difference residuals of a case's internal consistency.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConsistencyResiduals {
    /// `eps - sym grad u`
    pub strain: f64,
    /// `sigma - C eps_fd`
    pub stress: f64,
    /// `b + div sigma`
    pub equilibrium: f64,
}

/// Central-difference check of strain, stress and body force at `points`.
pub fn consistency_residuals(case: &ManufacturedCase, points: &[Point2]) -> ConsistencyResiduals {
    let h = 1e-5;
    let dx = Point2::new(h, 0.0);
    let dy = Point2::new(0.0, h);
    let c = case.material.elastic_matrix();
    let mut r = ConsistencyResiduals::default();
    for &p in points {
        let (ue, uw) = (case.displacement(p + dx), case.displacement(p - dx));
        let (un, us) = (case.displacement(p + dy), case.displacement(p - dy));
        let du_dx = [(ue[0] - uw[0]) / (2.0 * h), (ue[1] - uw[1]) / (2.0 * h)];
        let du_dy = [(un[0] - us[0]) / (2.0 * h), (un[1] - us[1]) / (2.0 * h)];
        let fd_strain = Vector3::new(du_dx[0], du_dy[1], du_dy[0] + du_dx[1]);
        r.strain = r.strain.max((case.strain(p) - fd_strain).amax());
        r.stress = r.stress.max((case.stress(p) - c * fd_strain).amax());

        let ds_dx = (case.stress(p + dx) - case.stress(p - dx)) / (2.0 * h);
        let ds_dy = (case.stress(p + dy) - case.stress(p - dy)) / (2.0 * h);
        let b = case.body_force(p);
        let res_x = b[0] + ds_dx[0] + ds_dy[2];
        let res_y = b[1] + ds_dx[2] + ds_dy[1];
        r.equilibrium = r.equilibrium.max(res_x.abs()).max(res_y.abs());
    }
    r
}
