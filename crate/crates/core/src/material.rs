//! Isotropic linear elasticity under plane strain.

use nalgebra::Matrix3;

use crate::{Error, Result, Stress};

/// Lamé parameters of a homogeneous isotropic material.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LameMaterial {
    lambda: f64,
    mu: f64,
}

/// Plane-strain stiffness acting on engineering strains `(eps_x, eps_y, gamma_xy)`.
pub type ElasticMatrix = Matrix3<f64>;

impl LameMaterial {
    /// Requires `mu > 0` and `lambda + mu > 0`, i.e. a positive-definite
    /// plane-strain elastic matrix.
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        if !(lambda.is_finite() && mu.is_finite()) {
            return Err(Error::Material(format!("non-finite Lamé constants ({lambda}, {mu})")));
        }
        if mu <= 0.0 || lambda + mu <= 0.0 {
            return Err(Error::Material(format!(
                "elastic matrix is not positive definite for lambda = {lambda}, mu = {mu}"
            )));
        }
        Ok(Self { lambda, mu })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Poisson ratio `lambda / (2 (lambda + mu))`.
    pub fn poisson_ratio(&self) -> f64 {
        self.lambda / (2.0 * (self.lambda + self.mu))
    }

    pub fn elastic_matrix(&self) -> ElasticMatrix {
        let (l, m) = (self.lambda, self.mu);
        Matrix3::new(
            l + 2.0 * m, l, 0.0,
            l, l + 2.0 * m, 0.0,
            0.0, 0.0, m,
        )
    }

    /// Closed-form inverse of [`elastic_matrix`](Self::elastic_matrix).
    pub fn compliance_matrix(&self) -> Matrix3<f64> {
        let (l, m) = (self.lambda, self.mu);
        let a = l + 2.0 * m;
        // det of the normal block: (a - l)(a + l) = 4 mu (lambda + mu) > 0
        let det = 4.0 * m * (l + m);
        Matrix3::new(
            a / det, -l / det, 0.0,
            -l / det, a / det, 0.0,
            0.0, 0.0, 1.0 / m,
        )
    }

    /// Von Mises equivalent stress with the plane-strain out-of-plane
    /// component `sigma_z = nu (sigma_x + sigma_y)`.
    pub fn von_mises(&self, stress: &Stress) -> f64 {
        let (sx, sy, txy) = (stress[0], stress[1], stress[2]);
        let sz = self.poisson_ratio() * (sx + sy);
        let j = sx * sx + sy * sy + sz * sz - sx * sy - sy * sz - sz * sx + 3.0 * txy * txy;
        j.max(0.0).sqrt()
    }
}

impl Default for LameMaterial {
    /// `lambda = mu = 1`.
    fn default() -> Self {
        Self {
            lambda: 1.0,
            mu: 1.0,
        }
    }
}
