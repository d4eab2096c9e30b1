//! Closed-form fields and data of the example problems.

use crate::assembly::FieldJet;
use crate::dynamics::ExactSolution;
use crate::geometry::{SurfaceFrame, V3};
use crate::jet::Jet;
use std::f64::consts::PI;

/// Spatial profile `w` of a manufactured transverse displacement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    /// `a0 w1 w2 cos(4π n0 (x1² + x2²))`, `w_α = e^{(2x_α−1)/b0} + e^{(−2x_α−1)/b0}`.
    TrimmedPlate { a0: f64, b0: f64, n0: f64 },
    /// `a0 e^{1−R²} cos(2π n0 R)` with a rotated superellipse radius `R` of half-width `a`.
    Cutout { a0: f64, a: f64, n0: f64, n: i32 },
    /// `a0 w1 w2 wn` in window-centered coordinates `y = ξ − ½`.
    Window { a0: f64, a: f64, b: f64, beta: f64, n0: f64, n: i32 },
}

impl Profile {
    pub fn trimmed_plate() -> Self {
        Profile::TrimmedPlate { a0: 0.1, b0: 0.3, n0: 5.0 }
    }

    pub fn cutout() -> Self {
        Profile::Cutout { a0: 0.1, a: 0.2, n0: 4.0, n: 6 }
    }

    pub fn window() -> Self {
        Profile::Window { a0: 0.1, a: 0.15, b: 0.2, beta: 10.0, n0: 3.0, n: 6 }
    }

    /// `w` with gradient and Hessian in the parametric coordinates.
    pub fn w(&self, xi: [f64; 2]) -> Jet {
        let [x1, x2] = Jet::vars(xi);
        match *self {
            Profile::TrimmedPlate { a0, b0, n0 } => {
                let wa = |x: Jet| ((x * 2.0 - 1.0) / b0).exp() + ((x * -2.0 - 1.0) / b0).exp();
                let wn = ((x1 * x1 + x2 * x2) * (4.0 * PI * n0)).cos();
                wa(x1) * wa(x2) * wn * a0
            }
            Profile::Cutout { a0, a, n0, n } => {
                let r = superellipse((x1 + x2) / a, (x1 - x2) / a, n);
                (1.0 - r * r).exp() * (r * (2.0 * PI * n0)).cos() * a0
            }
            Profile::Window { a0, a, b, beta, n0, n } => {
                let (y1, y2) = (x1 - 0.5, x2 - 0.5);
                let w1 = (1.0 - (y1 / a) * (y1 / a)).exp();
                let w2 = (1.0 + ((y2 / a - 1.0) * beta).exp()).recip() * (1.0 + ((y2 / -a - 1.0) * beta).exp()).recip();
                let r = superellipse(y1 / a + y2 / b, y1 / a - y2 / b, n);
                w1 * w2 * (r * (2.0 * PI * n0)).cos() * a0
            }
        }
    }
}

/// `(½ [s^n + d^n])^{1/n}` for even `n`.
fn superellipse(s: Jet, d: Jet, n: i32) -> Jet {
    ((s.powi(n) + d.powi(n)) * 0.5).powf(1.0 / n as f64)
}

/// `u = w φ e3`, `θ = −Σ (a3·u_,α) a^α`, `φ = sin ωt`.
///
/// On flat charts `a3 = e3` and `θ_α = −w_,α φ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedSolution {
    pub profile: Profile,
    pub omega: f64,
}

impl ExactSolution for ManufacturedSolution {
    fn spatial(&self, xi: [f64; 2], frame: &SurfaceFrame) -> FieldJet {
        let w = self.profile.w(xi);
        let e3 = V3::z();
        let c = frame.a3.dot(&e3);
        let dc = [frame.da3[0].dot(&e3), frame.da3[1].dot(&e3)];
        let mut f = FieldJet::zero();
        f.u = e3 * w.v;
        f.du = [e3 * w.d[0], e3 * w.d[1]];
        for al in 0..2 {
            f.theta[al] = -c * w.d[al];
            for be in 0..2 {
                f.dtheta[al][be] = -(dc[be] * w.d[al] + c * w.h[al][be]);
            }
        }
        f
    }

    fn phi(&self, t: f64) -> [f64; 3] {
        let (s, c) = (self.omega * t).sin_cos();
        [s, self.omega * c, -self.omega * self.omega * s]
    }
}

/// Prescribed loads and initial velocity of the rotated plate, in physical coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatedPlateData {
    pub f0: f64,
    pub m0: f64,
    pub h0: f64,
    pub b0: f64,
    pub n0: f64,
    pub v0: f64,
    pub omega: f64,
}

impl RotatedPlateData {
    pub fn new(omega: f64) -> Self {
        Self { f0: 0.1, m0: 0.1, h0: 0.1, b0: 6.0, n0: 28.0, v0: 7.74e-5, omega }
    }

    fn g(&self, x1: f64) -> f64 {
        let k = PI * self.n0;
        -(self.b0 * x1).exp() * (self.b0 * (k * x1).sin() - k * (k * x1).cos()) / (self.b0 * self.b0 + k * k)
    }

    /// Spatial parts of `(f, m)`.
    pub fn body(&self, x: V3) -> (V3, V3) {
        let k = PI * self.n0;
        let f = self.f0 * (self.b0 * x[0]).exp() * (k * x[0]).sin();
        (V3::new(0.0, 0.0, f), V3::new(self.m0 * self.g(x[0]), 0.0, 0.0))
    }

    /// Spatial part of the traction `h` for the outward unit normal `r`.
    pub fn traction(&self, x: V3, r: V3) -> V3 {
        V3::new(0.0, 0.0, self.h0 * self.g(x[0]) * r[0])
    }

    pub fn initial_velocity(&self, x: V3) -> V3 {
        let k = PI * self.n0;
        V3::new(0.0, 0.0, self.v0 * (self.b0 * x[0]).exp() * (k * x[0]).sin())
    }

    pub fn phi(&self, t: f64) -> f64 {
        (self.omega * t).sin()
    }
}
