//! Generalized membrane, bending, shear and higher-order strains.

use crate::geometry::{SurfaceFrame, V3};
use nalgebra::{Matrix2, SMatrix};

/// Displacement and covariant rotation components with their first parametric derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldJet {
    pub u: V3,
    /// `du[β] = u_,β`.
    pub du: [V3; 2],
    /// Covariant rotation components `θ_α = θ · a_α`.
    pub theta: [f64; 2],
    /// `dtheta[α][β] = θ_α,β`.
    pub dtheta: [[f64; 2]; 2],
}

impl FieldJet {
    pub fn zero() -> Self {
        Self { u: V3::zeros(), du: [V3::zeros(); 2], theta: [0.0; 2], dtheta: [[0.0; 2]; 2] }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            u: self.u * s,
            du: [self.du[0] * s, self.du[1] * s],
            theta: [self.theta[0] * s, self.theta[1] * s],
            dtheta: [[self.dtheta[0][0] * s, self.dtheta[0][1] * s], [self.dtheta[1][0] * s, self.dtheta[1][1] * s]],
        }
    }

    /// Ambient rotation vector `θ = θ_γ a^γ`.
    pub fn theta_vector(&self, f: &SurfaceFrame) -> V3 {
        f.a_up[0] * self.theta[0] + f.a_up[1] * self.theta[1]
    }

    /// `θ_,β = θ_γ,β a^γ + θ_γ a^γ_,β`.
    pub fn theta_vector_derivative(&self, f: &SurfaceFrame, beta: usize) -> V3 {
        (0..2).map(|g| f.a_up[g] * self.dtheta[g][beta] + f.da_up[g][beta] * self.theta[g]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralizedStrains {
    pub membrane: Matrix2<f64>,
    pub bending: Matrix2<f64>,
    pub shear: [f64; 2],
    /// Quadratic-in-thickness term; not used by the bilinear forms.
    pub higher: Matrix2<f64>,
}

impl GeneralizedStrains {
    /// `[ε11, ε22, 2ε12, κ11, κ22, 2κ12, γ1, γ2]`.
    pub fn voigt(&self) -> SMatrix<f64, 8, 1> {
        SMatrix::<f64, 8, 1>::from_column_slice(&[
            self.membrane[(0, 0)],
            self.membrane[(1, 1)],
            2.0 * self.membrane[(0, 1)],
            self.bending[(0, 0)],
            self.bending[(1, 1)],
            2.0 * self.bending[(0, 1)],
            self.shear[0],
            self.shear[1],
        ])
    }
}

pub fn strains(f: &SurfaceFrame, x: &FieldJet) -> GeneralizedStrains {
    let theta = x.theta_vector(f);
    let dtheta = [x.theta_vector_derivative(f, 0), x.theta_vector_derivative(f, 1)];
    let mut membrane = Matrix2::zeros();
    let mut bending = Matrix2::zeros();
    let mut higher = Matrix2::zeros();
    for a in 0..2 {
        for b in 0..2 {
            membrane[(a, b)] = 0.5 * (f.a[a].dot(&x.du[b]) + f.a[b].dot(&x.du[a]));
            bending[(a, b)] = 0.5
                * ((x.dtheta[a][b] + x.dtheta[b][a]) - (f.da[a][b].dot(&theta) + f.da[b][a].dot(&theta))
                    + (f.da3[a].dot(&x.du[b]) + f.da3[b].dot(&x.du[a])));
            higher[(a, b)] = 0.5 * (f.da3[a].dot(&dtheta[b]) + f.da3[b].dot(&dtheta[a]));
        }
    }
    let shear = [f.a3.dot(&x.du[0]) + x.theta[0], f.a3.dot(&x.du[1]) + x.theta[1]];
    GeneralizedStrains { membrane, bending, shear, higher }
}

/// Strain-displacement matrix of one scalar basis function (value `n`, gradient `dn`):
/// column `k` holds the strain vector of the unit field in DOF component `k`
/// (`u1, u2, u3, θ1, θ2`).
pub fn b_matrix(f: &SurfaceFrame, n: f64, dn: [f64; 2]) -> SMatrix<f64, 8, 5> {
    let mut b = SMatrix::<f64, 8, 5>::zeros();
    for k in 0..5 {
        let mut x = FieldJet::zero();
        if k < 3 {
            x.u[k] = n;
            x.du[0][k] = dn[0];
            x.du[1][k] = dn[1];
        } else {
            let a = k - 3;
            x.theta[a] = n;
            x.dtheta[a] = dn;
        }
        b.set_column(k, &strains(f, &x).voigt());
    }
    b
}
