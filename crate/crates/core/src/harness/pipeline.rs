//! End-to-end runs, spectra, parameter sweeps and refinement studies.

use super::config::{axis_key, DtPolicy, ExperimentConfig};
use super::examples::{build_example, Problem, ProblemData};
use super::output::{errors_csv, fmt_f, spectrum_csv, vtk_snapshot, write};
use crate::assembly::{Discretization, FieldJet, MassKind, ShellSystem};
use crate::dynamics::{
    central_difference_run, error_norms, newmark_run, project_initial_state, project_with, DynState, ErrorSample,
    ExactSolution, Mass, RunResult, Scheme, ZeroSolution,
};
use crate::error::{Error, Result};
use crate::geometry::SurfaceFrame;
use crate::spectrum::{
    critical_dt, dense_generalized_eigenvalues, max_generalized_eig_seeded, row_sum_lump, spectrum_report, InnerSolver,
    MassOp, SpectrumReport, DENSE_LIMIT,
};
use std::fmt::Write as _;

/// Problem, discretization and reduced system of one mass variant.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub problem: Problem,
    pub disc: Discretization,
    pub system: ShellSystem,
}

/// Builds the problem and the (stabilized if `cfg.mass_kind` asks for it) discrete system.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    prepare_kind(cfg, cfg.mass_kind)
}

pub fn prepare_kind(cfg: &ExperimentConfig, kind: MassKind) -> Result<Prepared> {
    cfg.validate()?;
    let problem = build_example(cfg)?;
    let gamma = kind.is_stabilized().then_some(cfg.gamma);
    let disc = Discretization::new(
        problem.space.clone(),
        problem.chart,
        problem.region.clone(),
        problem.material,
        cfg.quad(),
        gamma,
    )?;
    let system = disc.build_system(&problem.dirichlet)?;
    Ok(Prepared { problem, disc, system })
}

/// Mass operator of `kind` on an assembled system.
pub fn mass_of(system: &ShellSystem, kind: MassKind) -> Result<Mass> {
    Ok(if kind.is_lumped() {
        Mass::Lumped(row_sum_lump(&system.mass, kind.is_stabilized())?)
    } else {
        Mass::Consistent(system.mass.clone())
    })
}

/// Largest generalized eigenvalue of `(K, M)`: dense below [`DENSE_LIMIT`], power iteration above.
pub fn omega_max_sq(system: &ShellSystem, mass: &Mass, seed: u64) -> Result<f64> {
    let op = match mass {
        Mass::Lumped(l) => MassOp::Lumped(l),
        Mass::Consistent(m) => MassOp::Consistent(m),
    };
    if system.n_dofs() < DENSE_LIMIT {
        let ev = dense_generalized_eigenvalues(&system.stiffness, op)?;
        Ok(ev.last().copied().unwrap_or(0.0))
    } else {
        max_generalized_eig_seeded(&system.stiffness, op, 1e-8, InnerSolver::Cholesky, seed)
    }
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub kind: MassKind,
    pub scheme: Scheme,
    pub n_dofs: usize,
    pub result: RunResult,
    /// Central-difference critical step of the run's own mass.
    pub dt_crit: f64,
    pub omega_max_sq: f64,
    pub spectrum: Option<SpectrumReport>,
}

impl RunOutput {
    pub fn final_error(&self) -> Option<ErrorSample> {
        self.result.errors.last().copied()
    }
}

struct Scaled<'a>(&'a dyn ExactSolution, f64);

impl ExactSolution for Scaled<'_> {
    fn spatial(&self, xi: [f64; 2], f: &SurfaceFrame) -> FieldJet {
        self.0.spatial(xi, f)
    }

    fn phi(&self, _: f64) -> [f64; 3] {
        [self.1, 0.0, 0.0]
    }
}

/// Runs `cfg` and writes its outputs when `out.dir` is set.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let prep = prepare(cfg)?;
    let out = simulate(&prep, cfg, false)?;
    if let Some(dir) = &cfg.out_dir {
        write(&dir.join("config.resolved"), &cfg.to_text())?;
        write(&dir.join("errors.csv"), &errors_csv(&out.result.errors))?;
        let mut summary = String::from("mass_kind,scheme,n_dofs,steps,dt,dt_crit,omega_max_sq\n");
        let _ = writeln!(
            summary,
            "{},{},{},{},{},{},{}",
            out.kind.name(),
            out.scheme.name(),
            out.n_dofs,
            out.result.steps,
            fmt_f(out.result.dt),
            fmt_f(out.dt_crit),
            fmt_f(out.omega_max_sq)
        );
        write(&dir.join("summary.csv"), &summary)?;
        for (i, (t, c)) in out.result.snapshots.iter().enumerate() {
            write(&dir.join(format!("snapshot_{i}.vtk")), &vtk_snapshot(&prep.disc, c, cfg.vtk_n, *t)?)?;
        }
    }
    Ok(out)
}

type ForceFn<'a> = Box<dyn Fn(f64) -> Vec<f64> + 'a>;

/// Time integration of a prepared system following `cfg`.
pub fn simulate(prep: &Prepared, cfg: &ExperimentConfig, with_spectrum: bool) -> Result<RunOutput> {
    let kind = cfg.mass_kind;
    let scheme = cfg.scheme();
    let sys = &prep.system;
    let disc = &prep.disc;
    let mass = mass_of(sys, kind)?;
    let spectrum = if with_spectrum { Some(spectrum_report(sys, kind, cfg.min_eigs)?) } else { None };
    let own_wmax = match &spectrum {
        Some(s) => s.omega_max_sq,
        None => omega_max_sq(sys, &mass, cfg.seed)?,
    };
    let dt_crit = critical_dt(own_wmax, Scheme::CentralDifference);
    let dt = match cfg.dt_policy {
        DtPolicy::Fixed => cfg.dt.unwrap_or(f64::NAN),
        DtPolicy::Critical => {
            let c = critical_dt(own_wmax, scheme);
            if !c.is_finite() {
                return Err(Error::Config("time.dt_policy = critical has no bound for the Newmark scheme".into()));
            }
            cfg.safety * c
        }
        DtPolicy::LumpedCritical => {
            let w = if kind.is_lumped() {
                own_wmax
            } else {
                omega_max_sq(sys, &mass_of(sys, lumped_twin(kind))?, cfg.seed)?
            };
            cfg.safety * critical_dt(w, Scheme::CentralDifference)
        }
    };
    log::info!(
        "{} with {}: {} dofs, dt {dt:.4e} (own dt_c {dt_crit:.4e}), t1 {}",
        kind.name(),
        scheme.name(),
        sys.n_dofs(),
        cfg.t1
    );

    // initial data: L² projection with the consistent mass of the run's (possibly stabilized) space
    let l2 = Mass::Consistent(sys.mass.clone());
    let (exact, force, state0): (Box<dyn ExactSolution + '_>, ForceFn<'_>, DynState) = match &prep.problem.data {
        ProblemData::Manufactured(sol) => {
            let sol = *sol;
            let fa = sys.restrict(&disc.stiffness_action(&|xi, f| sol.spatial(xi, f)));
            let fb = sys.restrict(&disc.mass_action(&|xi, f| {
                let j = sol.spatial(xi, f);
                (j.u, j.theta)
            }));
            let force = move |t: f64| {
                let [p, _, pdd] = sol.phi(t);
                fa.iter().zip(&fb).map(|(a, b)| p * a + pdd * b).collect::<Vec<f64>>()
            };
            let s0 = project_initial_state(disc, sys, &l2, &sol, 0.0)?;
            (Box::new(sol), Box::new(force), s0)
        }
        ProblemData::Prescribed(data) => {
            let data = *data;
            let body = disc.assemble_body_load(&|_, f| data.body(f.x));
            let edge =
                disc.assemble_boundary_load(&|_, f, r| (data.traction(f.x, r), crate::geometry::V3::zeros()), true)?;
            let fl = sys.restrict(&body.iter().zip(&edge).map(|(a, b)| a + b).collect::<Vec<_>>());
            let force = move |t: f64| {
                let p = data.phi(t);
                fl.iter().map(|a| p * a).collect::<Vec<f64>>()
            };
            let v = project_with(disc, sys, &l2, &|_, f| (data.initial_velocity(f.x), [0.0; 2]))?;
            let n = sys.n_dofs();
            (Box::new(ZeroSolution), Box::new(force), DynState { t: 0.0, d: vec![0.0; n], v, a: vec![0.0; n] })
        }
    };

    let mut targets: Vec<f64> = cfg.snapshots.iter().map(|f| f * cfg.t1).collect();
    targets.sort_by(f64::total_cmp);
    let mut next_target = 0;
    let mut errors = Vec::new();
    let mut snapshots = Vec::new();
    let (n_steps, _) = crate::dynamics::step_plan(0.0, cfg.t1, dt);
    let mut first_err: Option<Error> = None;
    let mut monitor = |step: usize, s: &DynState| -> Result<()> {
        let full = sys.expand(&s.d);
        if step.is_multiple_of(cfg.error_every) || step == n_steps {
            match error_norms(disc, &full, exact.as_ref(), s.t) {
                Ok(e) => errors.push(e),
                Err(e) => first_err = Some(e),
            }
        }
        while next_target < targets.len() && s.t >= targets[next_target] - 1e-12 * cfg.t1 {
            snapshots.push((s.t, full.clone()));
            next_target += 1;
        }
        Ok(())
    };
    let traj = match scheme {
        Scheme::CentralDifference => {
            central_difference_run(&sys.stiffness, &mass, force.as_ref(), state0, dt, cfg.t1, &mut monitor)?
        }
        Scheme::Newmark => newmark_run(&sys.stiffness, &mass, force.as_ref(), state0, dt, cfg.t1, &mut monitor)?,
    };
    if let Some(e) = first_err {
        return Err(e);
    }
    Ok(RunOutput {
        kind,
        scheme,
        n_dofs: sys.n_dofs(),
        result: RunResult { errors, snapshots, steps: traj.steps, dt: traj.dt, wall_time: traj.wall_time },
        dt_crit,
        omega_max_sq: own_wmax,
        spectrum,
    })
}

fn lumped_twin(kind: MassKind) -> MassKind {
    if kind.is_stabilized() {
        MassKind::StabilizedLumped
    } else {
        MassKind::Lumped
    }
}

/// Spectra of all four mass variants; writes `spectrum.csv` when `out.dir` is set.
pub fn spectrum(cfg: &ExperimentConfig) -> Result<Vec<SpectrumReport>> {
    let plain = prepare_kind(cfg, MassKind::Consistent)?;
    let stab = prepare_kind(cfg, MassKind::StabilizedConsistent)?;
    let mut reports = Vec::new();
    for kind in MassKind::ALL {
        let prep = if kind.is_stabilized() { &stab } else { &plain };
        let r = spectrum_report(&prep.system, kind, cfg.min_eigs)?;
        log::info!("{}: omega_max^2 {:.4e}, dt_c {:.4e}", kind.name(), r.omega_max_sq, r.dt_crit);
        reports.push(r);
    }
    if let Some(dir) = &cfg.out_dir {
        write(&dir.join("config.resolved"), &cfg.to_text())?;
        write(&dir.join("spectrum.csv"), &spectrum_csv(&reports, cfg.min_eigs))?;
    }
    Ok(reports)
}

/// One `(axis value, mass kind)` outcome of a sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: String,
    pub kind: MassKind,
    /// `ok` or the error message.
    pub status: String,
    pub output: Option<RunOutput>,
}

/// Runs every combination of axis value and mass kind; failures are recorded per row.
pub fn sweep(cfg: &ExperimentConfig, axis: &str, values: &[String], kinds: &[MassKind]) -> Result<Vec<SweepRow>> {
    let key = axis_key(axis)?;
    let mut rows = Vec::new();
    for v in values {
        for &kind in kinds {
            let mut c = cfg.clone();
            c.out_dir = None;
            c.mass_kind = kind;
            let res = c.set(key, v).and_then(|_| c.validate()).and_then(|_| {
                let prep = prepare(&c)?;
                simulate(&prep, &c, true)
            });
            log::info!(
                "{key} = {v}, {}: {}",
                kind.name(),
                res.as_ref().map_or_else(|e| e.to_string(), |_| "ok".into())
            );
            rows.push(match res {
                Ok(o) => SweepRow { value: v.clone(), kind, status: "ok".into(), output: Some(o) },
                Err(e) => SweepRow { value: v.clone(), kind, status: e.to_string(), output: None },
            });
        }
    }
    if let Some(dir) = &cfg.out_dir {
        write(&dir.join("config.resolved"), &cfg.to_text())?;
        write(&dir.join("sweep.csv"), &sweep_csv(key, &rows))?;
    }
    Ok(rows)
}

pub fn sweep_csv(key: &str, rows: &[SweepRow]) -> String {
    let mut s = format!("{key},mass_kind,status,l2_u,linf_u,l2_theta,linf_theta,dt_crit,omega_max_sq,min_eig\n");
    for r in rows {
        let status = r.status.replace([',', '\n'], ";");
        let _ = write!(s, "{},{},{}", r.value, r.kind.name(), status);
        match &r.output {
            Some(o) => {
                let e = o.final_error();
                let f = |x: Option<f64>| x.map(fmt_f).unwrap_or_default();
                let min = o.spectrum.as_ref().and_then(|sp| sp.min_eigs.first().copied());
                let _ = writeln!(
                    s,
                    ",{},{},{},{},{},{},{}",
                    f(e.map(|e| e.l2_u)),
                    f(e.map(|e| e.linf_u)),
                    f(e.map(|e| e.l2_theta)),
                    f(e.map(|e| e.linf_theta)),
                    fmt_f(o.dt_crit),
                    fmt_f(o.omega_max_sq),
                    f(min)
                );
            }
            None => s.push_str(",,,,,,,\n"),
        }
    }
    s
}

/// Errors of one refinement level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub elements: usize,
    /// Mass projection of the spatial profile.
    pub projection: ErrorSample,
    /// Final-time error of the dynamic run.
    pub dynamic: ErrorSample,
}

/// Dyadic refinement from `disc.elements` over `levels` levels (manufactured examples only).
pub fn convergence(cfg: &ExperimentConfig, levels: usize) -> Result<Vec<ConvergenceRow>> {
    let mut rows = Vec::new();
    for l in 0..levels {
        let mut c = cfg.clone();
        c.out_dir = None;
        c.elements = cfg.elements << l;
        let prep = prepare(&c)?;
        let sol = match &prep.problem.data {
            ProblemData::Manufactured(s) => *s,
            ProblemData::Prescribed(_) => {
                return Err(Error::Unsupported("convergence studies need a manufactured solution".into()))
            }
        };
        let frozen = Scaled(&sol, 1.0);
        let proj = prep.disc.project(&prep.system, &|xi, f| {
            let j = sol.spatial(xi, f);
            (j.u, j.theta)
        })?;
        let projection = error_norms(&prep.disc, &prep.system.expand(&proj), &frozen, 0.0)?;
        let run = simulate(&prep, &c, false)?;
        let dynamic = run.final_error().ok_or_else(|| Error::Solver("run produced no error samples".into()))?;
        rows.push(ConvergenceRow { elements: c.elements, projection, dynamic });
    }
    if let Some(dir) = &cfg.out_dir {
        write(&dir.join("config.resolved"), &cfg.to_text())?;
        write(&dir.join("convergence.csv"), &convergence_csv(&rows))?;
    }
    Ok(rows)
}

/// `log2(e_{k-1} / e_k)` for consecutive dyadic levels.
pub fn rates(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut s = String::from(
        "elements,l2_u_projection,l2_theta_projection,l2_u_dynamic,l2_theta_dynamic,rate_u_projection,rate_u_dynamic\n",
    );
    let rp = rates(&rows.iter().map(|r| r.projection.l2_u).collect::<Vec<_>>());
    let rd = rates(&rows.iter().map(|r| r.dynamic.l2_u).collect::<Vec<_>>());
    for (i, r) in rows.iter().enumerate() {
        let rate = |v: &[f64]| if i == 0 { String::new() } else { fmt_f(v[i - 1]) };
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.elements,
            fmt_f(r.projection.l2_u),
            fmt_f(r.projection.l2_theta),
            fmt_f(r.dynamic.l2_u),
            fmt_f(r.dynamic.l2_theta),
            rate(&rp),
            rate(&rd)
        );
    }
    s
}
