//! Mid-surface charts and their pointwise differential geometry.

use crate::error::{Error, Result};
use nalgebra::{Matrix2, Matrix3, Matrix3x2, Vector3};

pub type V3 = Vector3<f64>;

/// Parameterization of the mid-surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurfaceChart {
    /// `F(ξ) = (ξ1, ξ2, 0)`.
    FlatPlate,
    /// Flat plate rotated counterclockwise about `e3` by `angle` radians.
    RotatedPlate { angle: f64 },
    /// `F(ξ) = (ξ1 - 1/2, R sin(ξ2 - 1/2), R cos(ξ2 - 1/2))`.
    Cylinder { radius: f64 },
    /// `F(ξ) = ξ1 a1 + ξ2 a2`, a (possibly skewed) planar chart.
    Affine { a1: [f64; 3], a2: [f64; 3] },
}

/// Chart value with first and second parametric derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartJet {
    pub x: V3,
    pub d: [V3; 2],
    /// `[F_,11, F_,12, F_,22]`.
    pub dd: [V3; 3],
}

impl SurfaceChart {
    /// Skewed planar chart with `|a1| = 1`, `|a2| = ratio` and angle `angle` between them.
    pub fn skewed(ratio: f64, angle: f64) -> Self {
        SurfaceChart::Affine { a1: [1.0, 0.0, 0.0], a2: [ratio * angle.cos(), ratio * angle.sin(), 0.0] }
    }

    pub fn eval(&self, xi: [f64; 2]) -> ChartJet {
        let z = V3::zeros();
        match *self {
            SurfaceChart::FlatPlate => ChartJet { x: V3::new(xi[0], xi[1], 0.0), d: [V3::x(), V3::y()], dd: [z; 3] },
            SurfaceChart::RotatedPlate { angle } => {
                let (s, c) = angle.sin_cos();
                ChartJet {
                    x: V3::new(c * xi[0] - s * xi[1], s * xi[0] + c * xi[1], 0.0),
                    d: [V3::new(c, s, 0.0), V3::new(-s, c, 0.0)],
                    dd: [z; 3],
                }
            }
            SurfaceChart::Cylinder { radius: r } => {
                let (s, c) = (xi[1] - 0.5).sin_cos();
                ChartJet {
                    x: V3::new(xi[0] - 0.5, r * s, r * c),
                    d: [V3::x(), V3::new(0.0, r * c, -r * s)],
                    dd: [z, z, V3::new(0.0, -r * s, -r * c)],
                }
            }
            SurfaceChart::Affine { a1, a2 } => {
                let a1 = V3::from(a1);
                let a2 = V3::from(a2);
                ChartJet { x: a1 * xi[0] + a2 * xi[1], d: [a1, a2], dd: [z; 3] }
            }
        }
    }

    pub fn point(&self, xi: [f64; 2]) -> V3 {
        self.eval(xi).x
    }
}

/// Pointwise geometric quantities of the mid-surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceFrame {
    pub x: V3,
    /// Covariant tangent vectors `a_α`.
    pub a: [V3; 2],
    /// Unit normal.
    pub a3: V3,
    /// Contravariant vectors `a^α`.
    pub a_up: [V3; 2],
    pub a_cov: Matrix2<f64>,
    pub a_con: Matrix2<f64>,
    pub det_a: f64,
    /// Second fundamental form `b_αβ = a_α,β · a3`.
    pub b: Matrix2<f64>,
    /// `da[α][β] = a_α,β`.
    pub da: [[V3; 2]; 2],
    /// `da3[α] = a3,α`.
    pub da3: [V3; 2],
    /// `da_up[α][β] = a^α,β`.
    pub da_up: [[V3; 2]; 2],
}

impl SurfaceFrame {
    pub fn sqrt_a(&self) -> f64 {
        self.det_a.sqrt()
    }

    /// `Q = [a^1, a^2]`, mapping covariant rotation components to the ambient vector.
    pub fn q_mat(&self) -> Matrix3x2<f64> {
        Matrix3x2::from_columns(&self.a_up)
    }

    /// Christoffel symbols `Γ^γ_αβ = a_α,β · a^γ`, indexed `[γ][α][β]`.
    pub fn christoffel(&self) -> [[[f64; 2]; 2]; 2] {
        let mut g = [[[0.0; 2]; 2]; 2];
        for (c, gc) in g.iter_mut().enumerate() {
            for (al, row) in gc.iter_mut().enumerate() {
                for (be, v) in row.iter_mut().enumerate() {
                    *v = self.da[al][be].dot(&self.a_up[c]);
                }
            }
        }
        g
    }
}

pub fn frame_at(chart: &SurfaceChart, xi: [f64; 2]) -> Result<SurfaceFrame> {
    frame_from_jet(&chart.eval(xi), xi)
}

fn frame_from_jet(j: &ChartJet, xi: [f64; 2]) -> Result<SurfaceFrame> {
    let a = j.d;
    let da = [[j.dd[0], j.dd[1]], [j.dd[1], j.dd[2]]];
    let n = a[0].cross(&a[1]);
    let nn = n.norm();
    if nn < 1e-14 {
        return Err(Error::SingularChart(xi[0], xi[1]));
    }
    let a3 = n / nn;
    let mut da3 = [V3::zeros(); 2];
    for (b, d3) in da3.iter_mut().enumerate() {
        let dn = da[0][b].cross(&a[1]) + a[0].cross(&da[1][b]);
        *d3 = (dn - a3 * a3.dot(&dn)) / nn;
    }
    let a_cov = Matrix2::new(a[0].dot(&a[0]), a[0].dot(&a[1]), a[1].dot(&a[0]), a[1].dot(&a[1]));
    let det_a = a_cov.determinant();
    let a_con = Matrix2::new(a_cov[(1, 1)], -a_cov[(0, 1)], -a_cov[(1, 0)], a_cov[(0, 0)]) / det_a;
    let a_up = [a[0] * a_con[(0, 0)] + a[1] * a_con[(0, 1)], a[0] * a_con[(1, 0)] + a[1] * a_con[(1, 1)]];
    let mut b = Matrix2::zeros();
    for al in 0..2 {
        for be in 0..2 {
            b[(al, be)] = da[al][be].dot(&a3);
        }
    }
    let mut da_up = [[V3::zeros(); 2]; 2];
    for be in 0..2 {
        let mut d_cov = Matrix2::zeros();
        for g in 0..2 {
            for d in 0..2 {
                d_cov[(g, d)] = da[g][be].dot(&a[d]) + a[g].dot(&da[d][be]);
            }
        }
        let d_con = -a_con * d_cov * a_con;
        for al in 0..2 {
            let mut v = V3::zeros();
            for g in 0..2 {
                v += a[g] * d_con[(al, g)] + da[g][be] * a_con[(al, g)];
            }
            da_up[al][be] = v;
        }
    }
    Ok(SurfaceFrame { x: j.x, a, a3, a_up, a_cov, a_con, det_a, b, da, da3, da_up })
}

/// Extremal normal curvatures: roots of `det(b - κ a_cov) = 0`.
pub fn principal_curvatures(frame: &SurfaceFrame) -> (f64, f64) {
    principal_curvatures_of(&frame.a_cov, &frame.b)
}

pub fn principal_curvatures_of(a_cov: &Matrix2<f64>, b: &Matrix2<f64>) -> (f64, f64) {
    let inv = a_cov.try_inverse().expect("metric must be invertible");
    let m = inv * b;
    let tr = m.trace();
    let det = m.determinant();
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    (0.5 * tr - disc, 0.5 * tr + disc)
}

/// Slenderness ratios of a shell of thickness `tau` and characteristic length `length`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slenderness {
    /// `R_min / τ`; infinite for flat charts.
    pub eta: f64,
    /// `L / τ`.
    pub zeta: f64,
    /// Smallest radius of curvature over the samples.
    pub r_min: f64,
    /// False when `η ≤ 0.5`, outside the range of validity of the shell model.
    pub valid: bool,
}

/// Slenderness ratios, with `R_min` taken over a sample lattice of the unit parameter square.
pub fn slenderness(chart: &SurfaceChart, tau: f64, length: f64) -> Result<Slenderness> {
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("thickness must be positive, got {tau}")));
    }
    let n = 11;
    let mut kmax: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let xi = [i as f64 / (n - 1) as f64, j as f64 / (n - 1) as f64];
            let (k1, k2) = principal_curvatures(&frame_at(chart, xi)?);
            kmax = kmax.max(k1.abs()).max(k2.abs());
        }
    }
    let r_min = if kmax > 0.0 { 1.0 / kmax } else { f64::INFINITY };
    let eta = r_min / tau;
    let valid = eta > 0.5;
    if !valid {
        log::warn!("slenderness eta = {eta} <= 0.5: shell model assumptions violated");
    }
    Ok(Slenderness { eta, zeta: length / tau, r_min, valid })
}

/// Covariant basis of the canonical extension `G(ξ, ξ3) = F(ξ) + ξ3 a3(ξ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeFrame {
    pub g: [V3; 3],
    pub xi3: f64,
    /// `det[g1, g2, g3]`, i.e. `√g`.
    pub det_g: f64,
}

impl VolumeFrame {
    pub fn sqrt_g(&self) -> f64 {
        self.det_g
    }

    pub fn metric(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.g[i].dot(&self.g[j]))
    }
}

pub fn volume_frame_at(chart: &SurfaceChart, xi: [f64; 2], xi3: f64, tau: f64) -> Result<VolumeFrame> {
    if xi3.abs() > 0.5 * tau * (1.0 + 1e-12) {
        return Err(Error::Domain(format!("|ξ3| = {} exceeds τ/2 = {}", xi3.abs(), 0.5 * tau)));
    }
    let f = frame_at(chart, xi)?;
    Ok(volume_frame_from(&f, xi3))
}

pub fn volume_frame_from(f: &SurfaceFrame, xi3: f64) -> VolumeFrame {
    let g = [f.a[0] + f.da3[0] * xi3, f.a[1] + f.da3[1] * xi3, f.a3];
    let det_g = g[0].cross(&g[1]).dot(&g[2]);
    VolumeFrame { g, xi3, det_g }
}

/// Sufficient condition for positive row sums of the lumped rotational mass:
/// `min |a_i| / max |a_i| - cos∠(a1, a2)`, minimized over the samples.
pub fn pd_condition_margin(chart: &SurfaceChart, samples: &[[f64; 2]]) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for &xi in samples {
        let j = chart.eval(xi);
        let (n1, n2) = (j.d[0].norm(), j.d[1].norm());
        let cos = j.d[0].dot(&j.d[1]) / (n1 * n2);
        worst = worst.min(n1.min(n2) / n1.max(n2) - cos);
    }
    Ok(worst)
}
