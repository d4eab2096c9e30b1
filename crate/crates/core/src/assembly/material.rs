//! Isotropic material parameters and the shell constitutive law.

use crate::error::{Error, Result};
use crate::geometry::SurfaceFrame;
use nalgebra::{Matrix2, Matrix3, SMatrix};

/// Shear correction factor.
pub const SHEAR_CORRECTION: f64 = 5.0 / 6.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    pub young: f64,
    pub poisson: f64,
    pub density: f64,
    pub thickness: f64,
    pub shear_correction: f64,
}

impl MaterialParams {
    pub fn new(young: f64, poisson: f64, density: f64, thickness: f64) -> Result<Self> {
        if !(young > 0.0) || !(poisson > -1.0 && poisson < 0.5) || !(density > 0.0) || !(thickness > 0.0) {
            return Err(Error::Config(format!(
                "invalid material: E = {young}, nu = {poisson}, rho = {density}, tau = {thickness}"
            )));
        }
        Ok(Self { young, poisson, density, thickness, shear_correction: SHEAR_CORRECTION })
    }

    /// Plane-stress first Lamé parameter `Eν / (1 - ν²)`.
    pub fn lambda(&self) -> f64 {
        self.young * self.poisson / (1.0 - self.poisson * self.poisson)
    }

    pub fn mu(&self) -> f64 {
        self.young / (2.0 * (1.0 + self.poisson))
    }

    /// Translational inertia per unit area `τρ`.
    pub fn rho_u(&self) -> f64 {
        self.thickness * self.density
    }

    /// Rotational inertia per unit area `τ³ρ/12`.
    pub fn rho_theta(&self) -> f64 {
        self.thickness.powi(3) * self.density / 12.0
    }
}

/// Contravariant components `E^{αβγδ}` of the shell elasticity tensor.
pub fn shell_elasticity(a_con: &Matrix2<f64>, lambda: f64, mu: f64) -> [[[[f64; 2]; 2]; 2]; 2] {
    let c = 2.0 * lambda * mu / (lambda + 2.0 * mu);
    let mut e = [[[[0.0; 2]; 2]; 2]; 2];
    for (a, ea) in e.iter_mut().enumerate() {
        for (b, eb) in ea.iter_mut().enumerate() {
            for (g, eg) in eb.iter_mut().enumerate() {
                for (d, v) in eg.iter_mut().enumerate() {
                    *v = c * a_con[(a, b)] * a_con[(g, d)]
                        + mu * (a_con[(a, g)] * a_con[(b, d)] + a_con[(a, d)] * a_con[(b, g)]);
                }
            }
        }
    }
    e
}

const VOIGT: [(usize, usize); 3] = [(0, 0), (1, 1), (0, 1)];

/// Elasticity tensor in Voigt form acting on `[e11, e22, 2 e12]`.
pub fn voigt(e: &[[[[f64; 2]; 2]; 2]; 2]) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| {
        let (a, b) = VOIGT[i];
        let (g, d) = VOIGT[j];
        e[a][b][g][d]
    })
}

/// Block-diagonal constitutive matrix acting on the strain vector
/// `[ε11, ε22, 2ε12, κ11, κ22, 2κ12, γ1, γ2]`.
pub fn constitutive_matrix(frame: &SurfaceFrame, mat: &MaterialParams) -> SMatrix<f64, 8, 8> {
    let ev = voigt(&shell_elasticity(&frame.a_con, mat.lambda(), mat.mu()));
    let tau = mat.thickness;
    let mut d = SMatrix::<f64, 8, 8>::zeros();
    d.fixed_view_mut::<3, 3>(0, 0).copy_from(&(ev * tau));
    d.fixed_view_mut::<3, 3>(3, 3).copy_from(&(ev * (tau.powi(3) / 12.0)));
    d.fixed_view_mut::<2, 2>(6, 6).copy_from(&(frame.a_con * (mat.mu() * mat.shear_correction * tau)));
    d
}
