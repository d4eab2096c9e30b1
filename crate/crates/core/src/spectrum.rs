//! Row-sum lumping, the positivity condition for lumped shell masses, and
//! generalized eigenvalue extraction for the pencil `(K, M)`.

use crate::assembly::{MassKind, ShellSystem};
use crate::dynamics::Scheme;
use crate::error::{Error, Result};
use crate::geometry::{pd_condition_margin, SurfaceChart};
use crate::sparse::{dot, pcg, CsrMatrix, SkylineCholesky};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Reduced systems below this size are handled by dense eigensolvers.
pub const DENSE_LIMIT: usize = 2500;
/// Relative threshold on the Jacobi-scaled stiffness spectrum identifying its null space.
pub const NULL_SPACE_RTOL: f64 = 1e-10;
/// Fallback null-space threshold relative to `ω_max²` for the iterative path.
pub const NULL_EIG_RTOL: f64 = 1e-8;

/// Diagonal row-sum mass.
#[derive(Debug, Clone, PartialEq)]
pub struct LumpedMass {
    pub diag: Vec<f64>,
    pub stabilized: bool,
}

impl LumpedMass {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn to_csr(&self) -> CsrMatrix {
        CsrMatrix::from_diagonal(&self.diag)
    }
}

/// `d_i = Σ_j m_ij`. Fails on the first nonpositive row sum.
pub fn row_sum_lump(m: &CsrMatrix, stabilized: bool) -> Result<LumpedMass> {
    let diag = m.row_sums();
    if let Some((dof, &value)) = diag.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        return Err(Error::IndefiniteLumpedMass { dof, value });
    }
    Ok(LumpedMass { diag, stabilized })
}

/// Whether `min‖a_i‖/max‖a_i‖ > cos∠(a_1, a_2)` holds at all samples, with the worst margin.
pub fn check_pd_condition(chart: &SurfaceChart, samples: &[[f64; 2]]) -> Result<(bool, f64)> {
    let margin = pd_condition_margin(chart, samples)?;
    Ok((margin > 0.0, margin))
}

/// Mass operator of a generalized eigenproblem.
#[derive(Debug, Clone, Copy)]
pub enum MassOp<'a> {
    Consistent(&'a CsrMatrix),
    Lumped(&'a LumpedMass),
}

impl MassOp<'_> {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            MassOp::Consistent(m) => m.mul_vec(x),
            MassOp::Lumped(l) => x.iter().zip(&l.diag).map(|(a, d)| a * d).collect(),
        }
    }

    fn dense(&self) -> DMatrix<f64> {
        match self {
            MassOp::Consistent(m) => m.to_dense(),
            MassOp::Lumped(l) => DMatrix::from_diagonal(&DVector::from_column_slice(&l.diag)),
        }
    }

    fn to_csr(self) -> CsrMatrix {
        match self {
            MassOp::Consistent(m) => (*m).clone(),
            MassOp::Lumped(l) => l.to_csr(),
        }
    }
}

/// Inner solver used by power iteration with a consistent mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerSolver {
    ConjugateGradient,
    Cholesky,
}

/// Largest eigenvalue of `M⁻¹K` by power iteration with conjugate-gradient inner solves.
pub fn max_generalized_eig(k: &CsrMatrix, m: MassOp<'_>, tol: f64) -> Result<f64> {
    max_generalized_eig_with(k, m, tol, InnerSolver::ConjugateGradient)
}

pub fn max_generalized_eig_with(k: &CsrMatrix, m: MassOp<'_>, tol: f64, inner: InnerSolver) -> Result<f64> {
    max_generalized_eig_seeded(k, m, tol, inner, 0x5eed)
}

/// Power iteration from a start vector drawn with `seed`.
pub fn max_generalized_eig_seeded(
    k: &CsrMatrix,
    m: MassOp<'_>,
    tol: f64,
    inner: InnerSolver,
    seed: u64,
) -> Result<f64> {
    let n = k.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    let chol = match (m, inner) {
        (MassOp::Consistent(mm), InnerSolver::Cholesky) => Some(SkylineCholesky::factor(mm)?),
        _ => None,
    };
    let solve = |b: &[f64], x0: &[f64]| -> Result<Vec<f64>> {
        match m {
            MassOp::Lumped(l) => Ok(b.iter().zip(&l.diag).map(|(a, d)| a / d).collect()),
            MassOp::Consistent(mm) => match &chol {
                Some(c) => Ok(c.solve(b)),
                None => pcg(mm, b, Some(x0), 1e-10, 10 * n).map(|r| r.0),
            },
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
    let mut lambda = 0.0;
    let maxit = 50_000;
    for _ in 0..maxit {
        let mx = m.apply(&x);
        let scale = dot(&x, &mx).sqrt();
        if !(scale > 0.0) {
            return Err(Error::Solver("power iteration collapsed to zero".into()));
        }
        x.iter_mut().for_each(|v| *v /= scale);
        let kx = k.mul_vec(&x);
        let new = dot(&x, &kx);
        let y = solve(&kx, &x)?;
        let converged = (new - lambda).abs() <= tol * new.abs();
        lambda = new;
        x = y;
        if converged {
            return Ok(lambda);
        }
    }
    Err(Error::Solver(format!("power iteration did not converge in {maxit} iterations")))
}

/// All eigenvalues of the pencil, ascending (dense).
pub fn dense_generalized_eigenvalues(k: &CsrMatrix, m: MassOp<'_>) -> Result<Vec<f64>> {
    let n = k.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let kd = k.to_dense();
    let c = match m {
        MassOp::Lumped(l) => {
            let s: Vec<f64> = l.diag.iter().map(|d| 1.0 / d.sqrt()).collect();
            DMatrix::from_fn(n, n, |i, j| kd[(i, j)] * s[i] * s[j])
        }
        MassOp::Consistent(_) => {
            // Jacobi scaling keeps tiny cut-cell masses representable in the factorization.
            let md = m.dense();
            let s: Vec<f64> = (0..n).map(|i| 1.0 / md[(i, i)].sqrt()).collect();
            let ms = DMatrix::from_fn(n, n, |i, j| md[(i, j)] * s[i] * s[j]);
            let ks = DMatrix::from_fn(n, n, |i, j| kd[(i, j)] * s[i] * s[j]);
            let l = ms.cholesky().ok_or_else(|| Error::Solver("mass matrix is not positive definite".into()))?.l();
            let y = l.solve_lower_triangular(&ks).ok_or_else(|| Error::Solver("singular mass factor".into()))?;
            let z =
                l.solve_lower_triangular(&y.transpose()).ok_or_else(|| Error::Solver("singular mass factor".into()))?;
            (&z + z.transpose()) * 0.5
        }
    };
    let mut ev: Vec<f64> = c.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// The `count` smallest eigenvalues of the pencil, null-space modes included.
pub fn min_generalized_eigs(k: &CsrMatrix, m: MassOp<'_>, count: usize) -> Result<Vec<f64>> {
    let n = k.nrows();
    if n < DENSE_LIMIT {
        let ev = dense_generalized_eigenvalues(k, m)?;
        return Ok(ev.into_iter().take(count).collect());
    }
    let wmax = max_generalized_eig_with(k, m, 1e-8, InnerSolver::Cholesky)?;
    subspace_min_eigs(k, m, count, wmax)
}

/// Dimension of the null space of `K`, read from the spectrum of `D^{-1/2} K D^{-1/2}`.
pub fn stiffness_null_dim(k: &CsrMatrix) -> usize {
    let n = k.nrows();
    let kd = k.to_dense();
    let s: Vec<f64> = (0..n)
        .map(|i| {
            let d = kd[(i, i)];
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let ks = DMatrix::from_fn(n, n, |i, j| kd[(i, j)] * s[i] * s[j]);
    let ev = ks.symmetric_eigenvalues();
    let top = ev.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    ev.iter().filter(|v| v.abs() < NULL_SPACE_RTOL * top).count()
}

/// Shift-invert subspace iteration for the smallest eigenvalues of large pencils.
fn subspace_min_eigs(k: &CsrMatrix, m: MassOp<'_>, count: usize, wmax: f64) -> Result<Vec<f64>> {
    let n = k.nrows();
    let shift = 1e-6 * wmax;
    let mcsr = m.to_csr();
    let a = k.add_scaled(&mcsr, shift);
    let chol = SkylineCholesky::factor(&a)?;
    let b = (count + 8).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x = DMatrix::from_fn(n, b, |_, _| rng.random_range(-1.0..1.0));
    let mut prev = vec![f64::INFINITY; count];
    for _ in 0..2000 {
        let mut y = DMatrix::zeros(n, b);
        for j in 0..b {
            let col: Vec<f64> = x.column(j).iter().copied().collect();
            let sol = chol.solve(&m.apply(&col));
            y.set_column(j, &DVector::from_vec(sol));
        }
        let mut ay = DMatrix::zeros(n, b);
        let mut my = DMatrix::zeros(n, b);
        for j in 0..b {
            let col: Vec<f64> = y.column(j).iter().copied().collect();
            ay.set_column(j, &DVector::from_vec(a.mul_vec(&col)));
            my.set_column(j, &DVector::from_vec(m.apply(&col)));
        }
        let ar = y.transpose() * &ay;
        let mr = y.transpose() * &my;
        let (vals, vecs) = small_pencil(&ar, &mr)?;
        x = &y * vecs;
        let cur: Vec<f64> = vals.iter().take(count).map(|v| v - shift).collect();
        let done = cur.iter().zip(&prev).all(|(c, p)| (c - p).abs() <= 1e-10 * (c.abs() + shift));
        prev = cur;
        if done {
            return Ok(prev);
        }
    }
    Err(Error::Solver("subspace iteration did not converge".into()))
}

fn small_pencil(a: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let l = m.clone().cholesky().ok_or_else(|| Error::Solver("Ritz basis lost rank".into()))?.l();
    let y = l.solve_lower_triangular(a).ok_or_else(|| Error::Solver("singular Ritz mass".into()))?;
    let c = l.solve_lower_triangular(&y.transpose()).ok_or_else(|| Error::Solver("singular Ritz mass".into()))?;
    let eig = nalgebra::SymmetricEigen::new((&c + c.transpose()) * 0.5);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let w = DMatrix::from_fn(c.nrows(), order.len(), |r, c2| eig.eigenvectors[(r, order[c2])]);
    let lt = l.transpose();
    let v = lt.solve_upper_triangular(&w).ok_or_else(|| Error::Solver("singular Ritz mass".into()))?;
    Ok((vals, v))
}

/// `Δt_c = C / ω_max` with `C = 2` for central differences; unbounded for average acceleration.
pub fn critical_dt(omega_max_sq: f64, scheme: Scheme) -> f64 {
    match scheme {
        Scheme::CentralDifference => 2.0 / omega_max_sq.sqrt(),
        Scheme::Newmark => f64::INFINITY,
    }
}

/// Extreme spectrum of one mass variant.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub mass_kind: MassKind,
    pub omega_max_sq: f64,
    /// Smallest eigenvalues after removing the stiffness null space.
    pub min_eigs: Vec<f64>,
    pub null_dim: usize,
    /// Central-difference critical step.
    pub dt_crit: f64,
}

/// Spectrum of `(K, M)` for the given mass variant on an assembled system.
///
/// For lumped variants the mass is the row-sum of the system's consistent mass.
pub fn spectrum_report(system: &ShellSystem, kind: MassKind, count: usize) -> Result<SpectrumReport> {
    let lumped;
    let m = if kind.is_lumped() {
        lumped = row_sum_lump(&system.mass, kind.is_stabilized())?;
        MassOp::Lumped(&lumped)
    } else {
        MassOp::Consistent(&system.mass)
    };
    let k = &system.stiffness;
    let n = k.nrows();
    let (omega_max_sq, null_dim, min_eigs) = if n < DENSE_LIMIT {
        let ev = dense_generalized_eigenvalues(k, m)?;
        let null_dim = stiffness_null_dim(k);
        let wmax = ev.last().copied().unwrap_or(0.0);
        (wmax, null_dim, ev.into_iter().skip(null_dim).take(count).collect())
    } else {
        let wmax = max_generalized_eig_with(k, m, 1e-8, InnerSolver::Cholesky)?;
        let ev = subspace_min_eigs(k, m, count + 8, wmax)?;
        let null_dim = ev.iter().filter(|&&v| v < NULL_EIG_RTOL * wmax).count();
        (wmax, null_dim, ev.into_iter().skip(null_dim).take(count).collect())
    };
    Ok(SpectrumReport {
        mass_kind: kind,
        omega_max_sq,
        min_eigs,
        null_dim,
        dt_crit: critical_dt(omega_max_sq, Scheme::CentralDifference),
    })
}
