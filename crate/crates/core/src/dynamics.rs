//! Time integration of `M ü + K u = F(t)` and error norms against exact fields.

use crate::assembly::{field_from_basis, Discretization, FieldJet, FieldValue, ShellSystem};
use crate::error::{Error, Result};
use crate::geometry::{frame_at, SurfaceFrame};
use crate::sparse::{dot, CsrMatrix, SkylineCholesky};
use crate::spectrum::LumpedMass;
use crate::trimming::ElementStatus;
use nalgebra::Vector2;
use rayon::prelude::*;
use std::time::{Duration, Instant};

/// Divergence threshold factor on the mass norm of `d`.
pub const DIVERGENCE_FACTOR: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Explicit central differences.
    CentralDifference,
    /// Implicit average acceleration (`β = 1/4`, `γ = 1/2`).
    Newmark,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::CentralDifference => "central_difference",
            Scheme::Newmark => "newmark",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "central_difference" => Ok(Scheme::CentralDifference),
            "newmark" => Ok(Scheme::Newmark),
            _ => Err(Error::Config(format!("unknown time scheme '{s}'"))),
        }
    }
}

/// Mass operator used by an integrator.
#[derive(Debug, Clone)]
pub enum Mass {
    Lumped(LumpedMass),
    Consistent(CsrMatrix),
}

impl Mass {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Mass::Lumped(l) => x.iter().zip(&l.diag).map(|(a, d)| a * d).collect(),
            Mass::Consistent(m) => m.mul_vec(x),
        }
    }

    /// `√(xᵀMx)`, the L² size of the discrete field; used by the divergence detector.
    pub fn norm(&self, x: &[f64]) -> f64 {
        dot(x, &self.apply(x)).max(0.0).sqrt()
    }

    pub fn to_csr(&self) -> CsrMatrix {
        match self {
            Mass::Lumped(l) => l.to_csr(),
            Mass::Consistent(m) => m.clone(),
        }
    }

    fn solver(&self) -> Result<MassSolver<'_>> {
        Ok(match self {
            Mass::Lumped(l) => MassSolver::Diagonal(&l.diag),
            Mass::Consistent(m) => MassSolver::Factor(SkylineCholesky::factor(m)?),
        })
    }
}

enum MassSolver<'a> {
    Diagonal(&'a [f64]),
    Factor(SkylineCholesky),
}

impl MassSolver<'_> {
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        match self {
            MassSolver::Diagonal(d) => b.iter().zip(d.iter()).map(|(x, m)| x / m).collect(),
            MassSolver::Factor(c) => c.solve(b),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynState {
    pub t: f64,
    pub d: Vec<f64>,
    pub v: Vec<f64>,
    pub a: Vec<f64>,
}

impl DynState {
    /// State at rest.
    pub fn zeros(n: usize, t: f64) -> Self {
        Self { t, d: vec![0.0; n], v: vec![0.0; n], a: vec![0.0; n] }
    }
}

/// Summary of one integration.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub final_state: DynState,
    pub steps: usize,
    pub dt: f64,
    pub wall_time: Duration,
}

/// Error norms of one time sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSample {
    pub t: f64,
    pub l2_u: f64,
    pub linf_u: f64,
    pub l2_theta: f64,
    pub linf_theta: f64,
}

/// Error history, snapshots and timings of a run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub errors: Vec<ErrorSample>,
    /// `(t, full-numbering coefficients)`.
    pub snapshots: Vec<(f64, Vec<f64>)>,
    pub steps: usize,
    pub dt: f64,
    pub wall_time: Duration,
}

/// Observer called after the initial state and after every step.
pub type Monitor<'a> = dyn FnMut(usize, &DynState) -> Result<()> + 'a;

/// Number of steps and the uniform step that lands exactly on `t1`.
pub fn step_plan(t0: f64, t1: f64, dt: f64) -> (usize, f64) {
    let span = t1 - t0;
    if span <= 0.0 {
        return (0, dt);
    }
    let n = ((span / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    (n, span / n as f64)
}

fn consistent_start(k: &CsrMatrix, solver: &MassSolver<'_>, force: &dyn Fn(f64) -> Vec<f64>, state: &mut DynState) {
    let f = force(state.t);
    let kd = k.mul_vec(&state.d);
    let r: Vec<f64> = f.iter().zip(&kd).map(|(a, b)| a - b).collect();
    state.a = solver.solve(&r);
}

/// Explicit central differences with a consistent start `a₀ = M⁻¹(F(t₀) − K d₀)`.
pub fn central_difference_run(
    k: &CsrMatrix,
    mass: &Mass,
    force: &dyn Fn(f64) -> Vec<f64>,
    state0: DynState,
    dt: f64,
    t1: f64,
    monitor: &mut Monitor<'_>,
) -> Result<Trajectory> {
    let start = Instant::now();
    let solver = mass.solver()?;
    let mut s = state0;
    consistent_start(k, &solver, force, &mut s);
    let limit = DIVERGENCE_FACTOR * (mass.norm(&s.d) + 1.0);
    let (n, h) = step_plan(s.t, t1, dt);
    let t0 = s.t;
    monitor(0, &s)?;
    let mut kd = vec![0.0; s.d.len()];
    for step in 1..=n {
        for i in 0..s.d.len() {
            s.d[i] += h * s.v[i] + 0.5 * h * h * s.a[i];
        }
        s.t = t0 + step as f64 * h;
        k.mul_vec_into(&s.d, &mut kd);
        let f = force(s.t);
        let r: Vec<f64> = f.iter().zip(&kd).map(|(a, b)| a - b).collect();
        let a_new = solver.solve(&r);
        for i in 0..s.v.len() {
            s.v[i] += 0.5 * h * (s.a[i] + a_new[i]);
        }
        s.a = a_new;
        if !(mass.norm(&s.d) <= limit) {
            return Err(Error::Unstable { step, t: s.t });
        }
        monitor(step, &s)?;
    }
    Ok(Trajectory { final_state: s, steps: n, dt: h, wall_time: start.elapsed() })
}

/// Average-acceleration Newmark; `K + M/(βΔt²)` is factorized once.
pub fn newmark_run(
    k: &CsrMatrix,
    mass: &Mass,
    force: &dyn Fn(f64) -> Vec<f64>,
    state0: DynState,
    dt: f64,
    t1: f64,
    monitor: &mut Monitor<'_>,
) -> Result<Trajectory> {
    let start = Instant::now();
    let beta = 0.25;
    let gamma = 0.5;
    let solver = mass.solver()?;
    let mut s = state0;
    consistent_start(k, &solver, force, &mut s);
    let limit = DIVERGENCE_FACTOR * (mass.norm(&s.d) + 1.0);
    let (n, h) = step_plan(s.t, t1, dt);
    let c = 1.0 / (beta * h * h);
    let mcsr = mass.to_csr();
    let keff = k.add_scaled(&mcsr, c);
    let factor = SkylineCholesky::factor(&keff)?;
    let t0 = s.t;
    monitor(0, &s)?;
    for step in 1..=n {
        let len = s.d.len();
        let mut pred = vec![0.0; len];
        for i in 0..len {
            pred[i] = s.d[i] + h * s.v[i] + h * h * (0.5 - beta) * s.a[i];
        }
        s.t = t0 + step as f64 * h;
        let f = force(s.t);
        let mp = mcsr.mul_vec(&pred);
        let rhs: Vec<f64> = f.iter().zip(&mp).map(|(a, b)| a + c * b).collect();
        let d_new = factor.solve(&rhs);
        for i in 0..len {
            let a_new = c * (d_new[i] - pred[i]);
            s.v[i] += h * ((1.0 - gamma) * s.a[i] + gamma * a_new);
            s.a[i] = a_new;
        }
        s.d = d_new;
        if !(mass.norm(&s.d) <= limit) {
            return Err(Error::Unstable { step, t: s.t });
        }
        monitor(step, &s)?;
    }
    Ok(Trajectory { final_state: s, steps: n, dt: h, wall_time: start.elapsed() })
}

/// `½ vᵀMv + ½ dᵀKd`.
pub fn energy(k: &CsrMatrix, mass: &Mass, s: &DynState) -> f64 {
    0.5 * dot(&s.v, &mass.apply(&s.v)) + 0.5 * k.bilinear(&s.d, &s.d)
}

/// Exact fields of the form `w(ξ) φ(t)`.
pub trait ExactSolution: Sync {
    /// Spatial profile with first parametric derivatives.
    fn spatial(&self, xi: [f64; 2], frame: &SurfaceFrame) -> FieldJet;
    /// `φ, φ', φ''` at `t`.
    fn phi(&self, t: f64) -> [f64; 3];

    fn at(&self, xi: [f64; 2], frame: &SurfaceFrame, t: f64) -> FieldJet {
        self.spatial(xi, frame).scaled(self.phi(t)[0])
    }
}

/// The zero field, used to report response norms when no exact solution is known.
pub struct ZeroSolution;

impl ExactSolution for ZeroSolution {
    fn spatial(&self, _: [f64; 2], _: &SurfaceFrame) -> FieldJet {
        FieldJet::zero()
    }

    fn phi(&self, _: f64) -> [f64; 3] {
        [0.0; 3]
    }
}

/// Sampling points per direction for the maximum norm.
pub const LINF_GRID: usize = 5;

fn theta_norm(frame: &SurfaceFrame, th: [f64; 2]) -> f64 {
    let v = Vector2::new(th[0], th[1]);
    v.dot(&(frame.a_con * v)).max(0.0).sqrt()
}

/// Bounding box of `T ∩ S`, over which the L∞ lattice of element `e` is laid.
fn sample_box(disc: &Discretization, e: usize) -> ([f64; 2], [f64; 2]) {
    let (lo, hi) = disc.space.element_bounds(disc.space.element_of_index(e));
    if disc.mesh.status(e) != ElementStatus::Cut {
        return (lo, hi);
    }
    let mut b = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in disc.region.clip_rect(lo, hi).iter().flatten() {
        for d in 0..2 {
            b.0[d] = b.0[d].min(p[d]);
            b.1[d] = b.1[d].max(p[d]);
        }
    }
    if b.0[0] > b.1[0] {
        (lo, hi)
    } else {
        b
    }
}

/// L² (with `√a`) and sampled L∞ errors of the displacement and rotation fields.
///
/// `coeffs` are in the full numbering.
pub fn error_norms(disc: &Discretization, coeffs: &[f64], exact: &dyn ExactSolution, t: f64) -> Result<ErrorSample> {
    let m = disc.n_functions();
    let phi = exact.phi(t)[0];
    let active = disc.active_elements();
    let parts: Vec<Result<[f64; 4]>> = (0..active.len())
        .into_par_iter()
        .map(|k| {
            let e = active[k];
            let mut acc = [0.0; 4];
            for qp in disc.quad_points(k) {
                let h = field_from_basis(coeffs, &qp.basis, m);
                let x = exact.spatial(qp.xi, &qp.frame).scaled(phi);
                let du = (h.u - x.u).norm();
                let dt = theta_norm(&qp.frame, [h.theta[0] - x.theta[0], h.theta[1] - x.theta[1]]);
                acc[0] += du * du * qp.weight;
                acc[2] += dt * dt * qp.weight;
            }
            let (lo, hi) = sample_box(disc, e);
            for i in 0..LINF_GRID {
                for j in 0..LINF_GRID {
                    let xi = [
                        lo[0] + (i as f64 + 0.5) / LINF_GRID as f64 * (hi[0] - lo[0]),
                        lo[1] + (j as f64 + 0.5) / LINF_GRID as f64 * (hi[1] - lo[1]),
                    ];
                    if !disc.region.contains(xi) {
                        continue;
                    }
                    let frame = frame_at(&disc.chart, xi)?;
                    let h = disc.field_at(coeffs, e, xi)?;
                    let x = exact.spatial(xi, &frame).scaled(phi);
                    acc[1] = acc[1].max((h.u - x.u).norm());
                    acc[3] = acc[3].max(theta_norm(&frame, [h.theta[0] - x.theta[0], h.theta[1] - x.theta[1]]));
                }
            }
            Ok(acc)
        })
        .collect();
    let mut tot = [0.0; 4];
    for p in parts {
        let p = p?;
        tot[0] += p[0];
        tot[2] += p[2];
        tot[1] = tot[1].max(p[1]);
        tot[3] = tot[3].max(p[3]);
    }
    Ok(ErrorSample { t, l2_u: tot[0].sqrt(), linf_u: tot[1], l2_theta: tot[2].sqrt(), linf_theta: tot[3] })
}

/// Mass projection `M c = ∫ρ g·v_i` of a field onto the reduced space, using the run's mass variant.
pub fn project_with(disc: &Discretization, system: &ShellSystem, mass: &Mass, field: &FieldValue) -> Result<Vec<f64>> {
    let rhs = system.restrict(&disc.mass_action(field));
    if rhs.iter().all(|&v| v == 0.0) {
        return Ok(vec![0.0; rhs.len()]);
    }
    Ok(mass.solver()?.solve(&rhs))
}

/// Initial state from the exact solution: the projections of `u(·, t₀)` and `u̇(·, t₀)` with `mass`.
pub fn project_initial_state(
    disc: &Discretization,
    system: &ShellSystem,
    mass: &Mass,
    exact: &dyn ExactSolution,
    t0: f64,
) -> Result<DynState> {
    let [p0, p1, _] = exact.phi(t0);
    let proj = |s: f64| -> Result<Vec<f64>> {
        if s == 0.0 {
            return Ok(vec![0.0; system.n_dofs()]);
        }
        project_with(disc, system, mass, &|xi, f| {
            let j = exact.spatial(xi, f);
            (j.u * s, [j.theta[0] * s, j.theta[1] * s])
        })
    };
    let n = system.n_dofs();
    Ok(DynState { t: t0, d: proj(p0)?, v: proj(p1)?, a: vec![0.0; n] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{DirichletSpec, MaterialParams};
    use crate::geometry::{SurfaceChart, V3};
    use crate::sparse::norm;
    use crate::splines::TensorSplineSpace;
    use crate::trimming::TrimRegion;
    use approx::assert_relative_eq;

    fn sho(omega: f64) -> (CsrMatrix, Mass) {
        (CsrMatrix::from_diagonal(&[omega * omega]), Mass::Lumped(LumpedMass { diag: vec![1.0], stabilized: false }))
    }

    fn sho_error(scheme: Scheme, omega: f64, dt: f64) -> f64 {
        let (k, m) = sho(omega);
        let s0 = DynState { t: 0.0, d: vec![1.0], v: vec![0.0], a: vec![0.0] };
        let t1 = 10.0 / omega;
        let zero = |_: f64| vec![0.0];
        let run = match scheme {
            Scheme::CentralDifference => central_difference_run,
            Scheme::Newmark => newmark_run,
        };
        let tr = run(&k, &m, &zero, s0, dt, t1, &mut |_, _| Ok(())).unwrap();
        (tr.final_state.d[0] - (omega * tr.final_state.t).cos()).abs()
    }

    #[test]
    fn zero_data_gives_zero_trajectory() {
        let k = CsrMatrix::from_diagonal(&[2.0, 3.0]);
        let m = Mass::Consistent(CsrMatrix::identity(2));
        let zero = |_: f64| vec![0.0; 2];
        for run in [central_difference_run, newmark_run] {
            let tr = run(&k, &m, &zero, DynState::zeros(2, 0.0), 0.1, 5.0, &mut |_, s| {
                assert!(s.d.iter().all(|&x| x == 0.0));
                Ok(())
            })
            .unwrap();
            assert!(tr.final_state.v.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn second_order_on_oscillator() {
        let omega = 2.0;
        for scheme in [Scheme::CentralDifference, Scheme::Newmark] {
            let dt = 0.05;
            let e1 = sho_error(scheme, omega, dt);
            let e2 = sho_error(scheme, omega, dt / 2.0);
            let rate = (e1 / e2).log2();
            assert!((rate - 2.0).abs() <= 0.1, "{scheme:?} rate {rate}");
        }
    }

    #[test]
    fn stability_limits() {
        let omega = 3.0;
        let (k, m) = sho(omega);
        let dtc = 2.0 / omega;
        let zero = |_: f64| vec![0.0];
        let s0 = DynState { t: 0.0, d: vec![1.0], v: vec![0.0], a: vec![0.0] };
        let r = central_difference_run(&k, &m, &zero, s0.clone(), 1.01 * dtc, 5000.0 * dtc, &mut |_, _| Ok(()));
        assert!(matches!(r, Err(Error::Unstable { .. })));
        let r = newmark_run(&k, &m, &zero, s0, 100.0 * dtc, 1e5 * dtc, &mut |_, _| Ok(()));
        let s = r.unwrap().final_state;
        assert!(s.d[0].abs() <= 1.0 + 1e-9);
    }

    #[test]
    fn newmark_preserves_amplitude() {
        let omega = 1.0;
        let (k, m) = sho(omega);
        let period = 2.0 * std::f64::consts::PI / omega;
        let zero = |_: f64| vec![0.0];
        let s0 = DynState { t: 0.0, d: vec![1.0], v: vec![0.0], a: vec![0.0] };
        let e0 = energy(&k, &m, &DynState { a: vec![-1.0], ..s0.clone() });
        let tr = newmark_run(&k, &m, &zero, s0, period / 20.0, 100.0 * period, &mut |_, _| Ok(())).unwrap();
        assert_relative_eq!(energy(&k, &m, &tr.final_state), e0, max_relative = 1e-6);
    }

    /// Fixed-fixed spring chain with lumped unit masses.
    fn chain(n: usize) -> (CsrMatrix, Mass, f64) {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let k = CsrMatrix::from_triplets(n, n, &t);
        let lm = LumpedMass { diag: vec![1.0; n], stabilized: false };
        let w2 = *crate::spectrum::dense_generalized_eigenvalues(&k, crate::spectrum::MassOp::Lumped(&lm))
            .unwrap()
            .last()
            .unwrap();
        (k, Mass::Lumped(lm), 2.0 / w2.sqrt())
    }

    fn smooth_state(n: usize) -> DynState {
        let x = |i: usize| (i + 1) as f64 / (n + 1) as f64;
        DynState {
            t: 0.0,
            d: (0..n).map(|i| (std::f64::consts::PI * x(i)).sin()).collect(),
            v: (0..n).map(|i| 0.1 * (2.0 * std::f64::consts::PI * x(i)).sin()).collect(),
            a: vec![0.0; n],
        }
    }

    #[test]
    fn explicit_energy_stays_in_band() {
        let n = 30;
        let (k, m, dtc) = chain(n);
        let zero = |_: f64| vec![0.0; n];
        let s0 = smooth_state(n);
        let e0 = energy(&k, &m, &s0);
        let mut worst: f64 = 0.0;
        let dt = 0.5 * dtc;
        central_difference_run(&k, &m, &zero, s0, dt, 1000.0 * dt, &mut |_, s| {
            worst = worst.max((energy(&k, &m, s) - e0).abs() / e0);
            Ok(())
        })
        .unwrap();
        assert!(worst <= 0.05, "{worst}");
    }

    #[test]
    fn schemes_agree_at_small_steps() {
        let n = 30;
        let (k, m, dtc) = chain(n);
        let f = |t: f64| (0..n).map(|i| if i == 3 { t.sin() } else { 0.0 }).collect::<Vec<_>>();
        let s0 = smooth_state(n);
        let dt = 0.01 * dtc;
        let a = central_difference_run(&k, &m, &f, s0.clone(), dt, 100.0 * dt, &mut |_, _| Ok(())).unwrap();
        let b = newmark_run(&k, &m, &f, s0, dt, 100.0 * dt, &mut |_, _| Ok(())).unwrap();
        let diff: Vec<f64> = a.final_state.d.iter().zip(&b.final_state.d).map(|(x, y)| x - y).collect();
        assert!(norm(&diff) <= 1e-4 * norm(&b.final_state.d));
    }

    struct Offset(f64);

    impl ExactSolution for Offset {
        fn spatial(&self, _: [f64; 2], _: &SurfaceFrame) -> FieldJet {
            FieldJet { u: V3::new(0.0, 0.0, self.0), ..FieldJet::zero() }
        }

        fn phi(&self, _: f64) -> [f64; 3] {
            [1.0, 0.0, 0.0]
        }
    }

    fn unit_plate() -> Discretization {
        let space = TensorSplineSpace::uniform(2, [0.0, 0.0], [1.0, 1.0], [4, 4]).unwrap();
        let region = TrimRegion::rectangle([0.0, 0.0], [1.0, 1.0], [false; 4]).unwrap();
        let mat = MaterialParams::new(1.0, 0.25, 1.0, 0.1).unwrap();
        Discretization::new(space, SurfaceChart::FlatPlate, region, mat, 3, None).unwrap()
    }

    #[test]
    fn constant_offset_norms() {
        let d = unit_plate();
        let c = vec![0.0; d.n_dofs()];
        let e = error_norms(&d, &c, &Offset(0.3), 0.0).unwrap();
        assert_relative_eq!(e.l2_u, 0.3, max_relative = 1e-12);
        assert_relative_eq!(e.linf_u, 0.3, max_relative = 1e-12);
        assert_eq!(e.l2_theta, 0.0);
    }

    #[test]
    fn discrete_solution_has_zero_error() {
        let d = unit_plate();
        let sys = d.build_system(&DirichletSpec::none()).unwrap();
        let c: Vec<f64> = (0..d.n_dofs()).map(|i| ((i * 37 % 11) as f64) * 0.1).collect();
        struct Discrete<'a>(&'a Discretization, Vec<f64>);
        impl ExactSolution for Discrete<'_> {
            fn spatial(&self, xi: [f64; 2], _: &SurfaceFrame) -> FieldJet {
                let e = self.0.space.element_index(self.0.space.find_element(xi).unwrap());
                self.0.field_at(&self.1, e, xi).unwrap()
            }
            fn phi(&self, _: f64) -> [f64; 3] {
                [1.0, 0.0, 0.0]
            }
        }
        let ex = Discrete(&d, c.clone());
        let e = error_norms(&d, &c, &ex, 0.0).unwrap();
        let scale = c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for v in [e.l2_u, e.linf_u, e.l2_theta, e.linf_theta] {
            assert!(v <= 1e-14 * scale);
        }
        let s = project_initial_state(&d, &sys, &Mass::Consistent(sys.mass.clone()), &ex, 0.0).unwrap();
        for (a, b) in s.d.iter().zip(&sys.restrict(&c)) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(s.v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn step_plan_lands_on_final_time() {
        let (n, h) = step_plan(0.0, 1.0, 0.3);
        assert_eq!(n, 4);
        assert_relative_eq!(h, 0.25);
        assert_eq!(step_plan(0.0, 1.0, 0.25).0, 4);
    }
}
