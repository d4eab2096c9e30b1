//! Geometry, boundary conditions and data of the four example problems.

use super::config::{ExampleId, ExperimentConfig};
use super::manufactured::{ManufacturedSolution, Profile, RotatedPlateData};
use crate::assembly::{DirichletSpec, MaterialParams};
use crate::error::Result;
use crate::geometry::SurfaceChart;
use crate::splines::{KnotVector, SplineSpace1D, TensorSplineSpace};
use crate::trimming::{rounded_rectangle, TrimRegion};

/// Loading of a problem.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemData {
    Manufactured(ManufacturedSolution),
    Prescribed(RotatedPlateData),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub example: ExampleId,
    pub chart: SurfaceChart,
    pub region: TrimRegion,
    pub space: TensorSplineSpace,
    pub dirichlet: DirichletSpec,
    pub material: MaterialParams,
    pub data: ProblemData,
}

/// Window corner radius and polygonalization tolerance of the fuselage example.
pub const WINDOW_CORNER_RADIUS: f64 = 0.08;
pub const WINDOW_ARC_TOL: f64 = 1e-4 * WINDOW_CORNER_RADIUS;

fn space_from(p: usize, b1: &[f64], b2: &[f64]) -> Result<TensorSplineSpace> {
    Ok(TensorSplineSpace::new(
        SplineSpace1D::new(KnotVector::from_breakpoints(p, b1)?),
        SplineSpace1D::new(KnotVector::from_breakpoints(p, b2)?),
    ))
}

fn uniform(lo: f64, h: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| lo + i as f64 * h).collect()
}

/// Breakpoints on `[lo, hi]` with `n` elements around a hole `[c0, c1]` whose
/// sides lie `δ = ε h_in` inside the elements spanning the hole, so that the
/// cut elements keep a fraction `ε`. With `fitted` the hole sides are grid lines.
pub fn hole_breakpoints(lo: f64, hi: f64, c0: f64, c1: f64, n: usize, eps: f64, fitted: bool) -> Vec<f64> {
    let h = (hi - lo) / n as f64;
    let n_in = (((c1 - c0) / h).round() as usize).clamp(1, n - 2);
    let n_left = (n - n_in) / 2;
    let n_right = n - n_in - n_left;
    let e = if fitted { 0.0 } else { eps };
    let h_in = (c1 - c0) / (n_in as f64 - 2.0 * e);
    let (g0, g1) = (c0 - e * h_in, c1 + e * h_in);
    let mut b = Vec::with_capacity(n + 1);
    for i in 0..n_left {
        b.push(lo + (g0 - lo) * i as f64 / n_left as f64);
    }
    for i in 0..n_in {
        b.push(g0 + (g1 - g0) * i as f64 / n_in as f64);
    }
    for i in 0..=n_right {
        b.push(g1 + (hi - g1) * i as f64 / n_right as f64);
    }
    b
}

/// Builds the geometry, grid, boundary conditions and data of `cfg`'s example.
pub fn build_example(cfg: &ExperimentConfig) -> Result<Problem> {
    let n = cfg.elements;
    let p = cfg.p;
    let eps = cfg.trim_eps();
    let material = MaterialParams::new(cfg.young, cfg.poisson, cfg.density, cfg.tau)?;
    let wave = (cfg.young / cfg.density).sqrt();
    let length = 1.0;
    match cfg.example {
        ExampleId::PlateTrimmed => {
            let (lo, h) = if cfg.fitted {
                (-0.5, 1.0 / n as f64)
            } else {
                let h = 1.0 / (n as f64 - 2.0 + 2.0 * eps);
                (-0.5 - (1.0 - eps) * h, h)
            };
            let b = uniform(lo, h, n);
            Ok(Problem {
                example: cfg.example,
                chart: SurfaceChart::FlatPlate,
                region: TrimRegion::rectangle([-0.5, -0.5], [0.5, 0.5], [!cfg.fitted; 4])?,
                space: space_from(p, &b, &b)?,
                dirichlet: DirichletSpec::none(),
                material,
                data: ProblemData::Manufactured(ManufacturedSolution {
                    profile: Profile::trimmed_plate(),
                    omega: wave / (10.0 * length),
                }),
            })
        }
        ExampleId::RotatedPlate => {
            let h = if cfg.fitted { 1.0 / n as f64 } else { 1.0 / (n as f64 - 1.0 + eps) };
            let b1 = uniform(-0.5, h, n);
            let b2 = uniform(0.5 - n as f64 * h, h, n);
            let t = !cfg.fitted;
            Ok(Problem {
                example: cfg.example,
                chart: SurfaceChart::RotatedPlate { angle: std::f64::consts::FRAC_PI_4 },
                region: TrimRegion::rectangle([-0.5, -0.5], [0.5, 0.5], [t, t, false, false])?,
                space: space_from(p, &b1, &b2)?,
                dirichlet: DirichletSpec::clamped([false, false, true, true]),
                material,
                data: ProblemData::Prescribed(RotatedPlateData::new(wave / (10.0 * length))),
            })
        }
        ExampleId::PlateCutout => {
            let a = 0.2;
            let b = hole_breakpoints(-0.5, 0.5, -a, a, n, eps, cfg.fitted);
            let hole = [[-a, -a], [a, -a], [a, a], [-a, a]];
            Ok(Problem {
                example: cfg.example,
                chart: SurfaceChart::FlatPlate,
                region: TrimRegion::rectangle_with_hole([-0.5, -0.5], [0.5, 0.5], [false; 4], &hole)?,
                space: space_from(p, &b, &b)?,
                dirichlet: DirichletSpec::clamped([true; 4]),
                material,
                data: ProblemData::Manufactured(ManufacturedSolution {
                    profile: Profile::cutout(),
                    omega: wave / (2.0 * length),
                }),
            })
        }
        ExampleId::FuselageWindow => {
            let (a, bb) = (0.15, 0.2);
            let (x0, x1, y0, y1) = (0.5 - a, 0.5 + a, 0.5 - bb, 0.5 + bb);
            let b1 = hole_breakpoints(0.0, 1.0, x0, x1, n, eps, cfg.fitted);
            let b2 = hole_breakpoints(0.0, 1.0, y0, y1, n, eps, cfg.fitted);
            let hole = rounded_rectangle(x0, x1, y0, y1, WINDOW_CORNER_RADIUS, WINDOW_ARC_TOL);
            Ok(Problem {
                example: cfg.example,
                chart: SurfaceChart::Cylinder { radius: 1.0 },
                region: TrimRegion::rectangle_with_hole([0.0, 0.0], [1.0, 1.0], [false; 4], &hole)?,
                space: space_from(p, &b1, &b2)?,
                dirichlet: DirichletSpec::clamped([true; 4]),
                material,
                data: ProblemData::Manufactured(ManufacturedSolution {
                    profile: Profile::window(),
                    omega: wave / (10.0 * length),
                }),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trimming::{classify_elements, ElementStatus};
    use approx::assert_relative_eq;

    fn cfg(example: ExampleId, eps: f64) -> ExperimentConfig {
        ExperimentConfig { example, eps: Some(eps), p: 2, elements: 16, ..Default::default() }
    }

    #[test]
    fn trimmed_plate_edge_fraction_is_eps() {
        let pb = build_example(&cfg(ExampleId::PlateTrimmed, 0.01)).unwrap();
        match pb.data {
            ProblemData::Manufactured(s) => assert_relative_eq!(s.omega, 0.1),
            _ => panic!(),
        }
        let mesh = classify_elements(&pb.space, &pb.region, 3);
        let e = mesh.element_index((0, 5));
        assert_relative_eq!(mesh.fraction(e), 0.01, max_relative = 1e-9);
        assert_eq!(mesh.status(mesh.element_index((5, 5))), ElementStatus::Inside);
        assert_relative_eq!(mesh.fraction(mesh.element_index((15, 15))), 1e-4, max_relative = 1e-8);
    }

    #[test]
    fn rotated_plate_layout() {
        let pb = build_example(&cfg(ExampleId::RotatedPlate, 1e-3)).unwrap();
        let (lo, hi) = pb.space.domain();
        assert_eq!(lo[0], -0.5);
        assert_eq!(hi[1], 0.5);
        let mesh = classify_elements(&pb.space, &pb.region, 3);
        assert_relative_eq!(mesh.fraction(mesh.element_index((15, 7))), 1e-3, max_relative = 1e-9);
        assert_relative_eq!(mesh.fraction(mesh.element_index((7, 0))), 1e-3, max_relative = 1e-9);
        match pb.data {
            ProblemData::Prescribed(d) => assert_eq!(d.v0, 7.74e-5),
            _ => panic!(),
        }
    }

    #[test]
    fn hole_sides_leave_eps_fractions() {
        let b = hole_breakpoints(-0.5, 0.5, -0.2, 0.2, 16, 1e-3, false);
        assert_eq!(b.len(), 17);
        assert_eq!(b[0], -0.5);
        assert_relative_eq!(b[16], 0.5);
        assert!(b.windows(2).all(|w| w[1] > w[0]));
        let pb = build_example(&cfg(ExampleId::PlateCutout, 1e-3)).unwrap();
        let mesh = classify_elements(&pb.space, &pb.region, 3);
        assert_relative_eq!(mesh.fraction(mesh.element_index((5, 8))), 1e-3, max_relative = 1e-8);
        assert_eq!(mesh.status(mesh.element_index((8, 8))), ElementStatus::Outside);
        let fitted = hole_breakpoints(-0.5, 0.5, -0.2, 0.2, 16, 1e-3, true);
        assert!(fitted.iter().any(|&x| (x - 0.2).abs() < 1e-15));
    }

    #[test]
    fn window_geometry() {
        let pb = build_example(&cfg(ExampleId::FuselageWindow, 1e-2)).unwrap();
        let window = 0.3 * 0.4 - (4.0 - std::f64::consts::PI) * WINDOW_CORNER_RADIUS.powi(2);
        // chords cut each arc by at most the sagitta tolerance
        let chord_loss = WINDOW_ARC_TOL * 2.0 * std::f64::consts::PI * WINDOW_CORNER_RADIUS;
        let excess = pb.region.area() - (1.0 - window);
        assert!(excess >= 0.0 && excess <= chord_loss, "{excess}");
        assert_eq!(pb.dirichlet, DirichletSpec::clamped([true; 4]));
        match pb.data {
            ProblemData::Manufactured(s) => assert_relative_eq!(s.omega, 0.1),
            _ => panic!(),
        }
    }

    #[test]
    fn builders_are_pure() {
        for ex in ExampleId::ALL {
            let c = cfg(ex, 1e-4);
            assert_eq!(build_example(&c).unwrap(), build_example(&c).unwrap());
        }
    }
}
