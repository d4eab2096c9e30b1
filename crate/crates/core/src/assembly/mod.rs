//! Assembly of the five-field semi-discrete shell system.
//!
//! Degrees of freedom are sorted field by field (`u1, u2, u3, θ1, θ2`), each
//! field numbered like the tensor-product spline functions:
//! `dof = field * m + j`. Matrices are first assembled in this full numbering
//! and then restricted to the free degrees of freedom.

pub mod material;
pub mod strains;

pub use material::{constitutive_matrix, shell_elasticity, MaterialParams};
pub use strains::{b_matrix, strains, FieldJet, GeneralizedStrains};

use crate::error::{Error, Result};
use crate::geometry::{frame_at, SurfaceChart, SurfaceFrame, V3};
use crate::quadrature::gauss_interval;
use crate::sparse::{CsrMatrix, SkylineCholesky};
use crate::splines::{BasisValues, TensorSplineSpace};
use crate::stabilization::ExtensionMap;
use crate::trimming::{boundary_pieces, classify_elements, TrimRegion, TrimmedMesh};
use nalgebra::{DMatrix, SMatrix};
use rayon::prelude::*;
use std::collections::BTreeSet;

pub const N_FIELDS: usize = 5;

/// Mass-matrix variant of a run. Stabilized variants use the stabilized space
/// for every assembled operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MassKind {
    Consistent,
    Lumped,
    StabilizedConsistent,
    StabilizedLumped,
}

impl MassKind {
    pub const ALL: [MassKind; 4] =
        [MassKind::Consistent, MassKind::Lumped, MassKind::StabilizedConsistent, MassKind::StabilizedLumped];

    pub fn name(&self) -> &'static str {
        match self {
            MassKind::Consistent => "consistent",
            MassKind::Lumped => "lumped",
            MassKind::StabilizedConsistent => "stabilized_consistent",
            MassKind::StabilizedLumped => "stabilized_lumped",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| Error::Config(format!("unknown mass kind '{s}'")))
    }

    pub fn is_stabilized(&self) -> bool {
        matches!(self, MassKind::StabilizedConsistent | MassKind::StabilizedLumped)
    }

    pub fn is_lumped(&self) -> bool {
        matches!(self, MassKind::Lumped | MassKind::StabilizedLumped)
    }
}

impl std::fmt::Display for MassKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A quadrature point with cached geometry and basis data.
#[derive(Debug, Clone)]
pub struct QuadPoint {
    pub xi: [f64; 2],
    /// Parametric weight times `√a`.
    pub weight: f64,
    pub frame: SurfaceFrame,
    pub basis: BasisValues,
}

/// Homogeneous Dirichlet conditions on sides of the parametric rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DirichletSpec {
    /// Bottom, right, top, left.
    pub edges: [bool; 4],
    pub fields: [bool; N_FIELDS],
}

impl DirichletSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn clamped(edges: [bool; 4]) -> Self {
        Self { edges, fields: [true; N_FIELDS] }
    }
}

/// Consistent mass blocks: the scalar displacement block and the 2×2 rotation blocks.
#[derive(Debug, Clone)]
pub struct MassBlocks {
    pub mu: CsrMatrix,
    pub mtheta: [[CsrMatrix; 2]; 2],
}

/// Generalized body forces `(f, m)` as ambient vectors.
pub type BodyLoad<'a> = dyn Fn([f64; 2], &SurfaceFrame) -> (V3, V3) + Sync + 'a;
/// Boundary tractions `(h, n)`; the third argument is the physical outward unit normal.
pub type BoundaryLoad<'a> = dyn Fn([f64; 2], &SurfaceFrame, V3) -> (V3, V3) + Sync + 'a;
/// Field values (displacement, covariant rotation components) at a point.
pub type FieldValue<'a> = dyn Fn([f64; 2], &SurfaceFrame) -> (V3, [f64; 2]) + Sync + 'a;
/// Fields with first derivatives at a point.
pub type FieldJetFn<'a> = dyn Fn([f64; 2], &SurfaceFrame) -> FieldJet + Sync + 'a;

/// Spline space, geometry, trimming and (optional) stabilization of one run.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub space: TensorSplineSpace,
    pub chart: SurfaceChart,
    pub region: TrimRegion,
    pub mesh: TrimmedMesh,
    pub ext: ExtensionMap,
    pub material: MaterialParams,
    active: Vec<usize>,
    qpoints: Vec<Vec<QuadPoint>>,
}

impl Discretization {
    /// `gamma = Some(γ)` builds the stabilized space, `None` the plain trimmed one.
    pub fn new(
        space: TensorSplineSpace,
        chart: SurfaceChart,
        region: TrimRegion,
        material: MaterialParams,
        quad_order: usize,
        gamma: Option<f64>,
    ) -> Result<Self> {
        let mesh = classify_elements(&space, &region, quad_order);
        Self::from_mesh(space, chart, region, mesh, material, gamma)
    }

    pub fn from_mesh(
        space: TensorSplineSpace,
        chart: SurfaceChart,
        region: TrimRegion,
        mesh: TrimmedMesh,
        material: MaterialParams,
        gamma: Option<f64>,
    ) -> Result<Self> {
        let ext = match gamma {
            Some(g) => ExtensionMap::build(&space, &mesh, g)?,
            None => ExtensionMap::identity(&mesh),
        };
        let active = mesh.active_elements();
        let qpoints = active
            .par_iter()
            .map(|&e| -> Result<Vec<QuadPoint>> {
                let rule = mesh.rule(e);
                rule.points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(&xi, &w)| {
                        let frame = frame_at(&chart, xi)?;
                        let basis = ext.eval(&space, e, xi, 1)?;
                        Ok(QuadPoint { xi, weight: w * frame.sqrt_a(), frame, basis })
                    })
                    .collect()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { space, chart, region, mesh, ext, material, active, qpoints })
    }

    pub fn is_stabilized(&self) -> bool {
        !self.ext.is_identity()
    }

    pub fn n_functions(&self) -> usize {
        self.space.dim()
    }

    pub fn n_dofs(&self) -> usize {
        N_FIELDS * self.space.dim()
    }

    pub fn dof(&self, field: usize, j: usize) -> usize {
        field * self.space.dim() + j
    }

    pub fn active_elements(&self) -> &[usize] {
        &self.active
    }

    /// Cached quadrature of the `k`-th active element.
    pub fn quad_points(&self, k: usize) -> &[QuadPoint] {
        &self.qpoints[k]
    }

    /// Functions used on element `e` (those of its source element).
    pub fn element_functions(&self, e: usize) -> Vec<usize> {
        match self.ext.source(e) {
            Some(s) => self.space.active_functions(self.space.element_of_index(s)),
            None => Vec::new(),
        }
    }

    /// Functions with nonzero support on the (possibly stabilized) active mesh, sorted.
    pub fn supported_functions(&self) -> Vec<usize> {
        let mut set = BTreeSet::new();
        for &e in &self.active {
            set.extend(self.element_functions(e));
        }
        set.into_iter().collect()
    }

    /// Basis used on element `e` at `xi`, with first derivatives.
    pub fn basis(&self, e: usize, xi: [f64; 2]) -> Result<BasisValues> {
        self.ext.eval(&self.space, e, xi, 1)
    }

    fn scalar_pattern(&self) -> CsrMatrix {
        let m = self.n_functions();
        let mut t = Vec::new();
        for &e in &self.active {
            let f = self.element_functions(e);
            for &i in &f {
                for &j in &f {
                    t.push((i, j, 0.0));
                }
            }
        }
        CsrMatrix::from_triplets(m, m, &t)
    }

    fn field_pattern(&self, scalar: &CsrMatrix, coupled: impl Fn(usize, usize) -> bool) -> CsrMatrix {
        let m = self.n_functions();
        let mut t = Vec::new();
        for f in 0..N_FIELDS {
            for i in 0..m {
                let (cols, _) = scalar.row(i);
                for g in 0..N_FIELDS {
                    if coupled(f, g) {
                        for &j in cols {
                            t.push((f * m + i, g * m + j, 0.0));
                        }
                    }
                }
            }
        }
        CsrMatrix::from_triplets(N_FIELDS * m, N_FIELDS * m, &t)
    }

    /// Computes element contributions in parallel and scatters them in element order.
    fn assemble_into<F>(&self, mut target: CsrMatrix, element: F) -> CsrMatrix
    where
        F: Fn(usize) -> Vec<(usize, usize, f64)> + Sync,
    {
        let n = self.active.len();
        let chunk = 256;
        let mut start = 0;
        while start < n {
            let end = (start + chunk).min(n);
            let parts: Vec<Vec<(usize, usize, f64)>> = (start..end).into_par_iter().map(&element).collect();
            for part in parts {
                for (i, j, v) in part {
                    target.add_at(i, j, v);
                }
            }
            start = end;
        }
        target
    }

    pub fn assemble_mass_blocks(&self) -> MassBlocks {
        let pattern = self.scalar_pattern();
        let ru = self.material.rho_u();
        let rt = self.material.rho_theta();
        let scalar = |k: usize, coef: &(dyn Fn(&SurfaceFrame) -> f64 + Sync)| {
            let mut out = Vec::new();
            for qp in &self.qpoints[k] {
                let c = coef(&qp.frame) * qp.weight;
                let b = &qp.basis;
                for a in 0..b.len() {
                    for d in 0..b.len() {
                        out.push((b.indices[a], b.indices[d], c * b.values[a] * b.values[d]));
                    }
                }
            }
            out
        };
        let mu = self.assemble_into(pattern.clone(), |k| scalar(k, &|_| ru));
        let blk =
            |al: usize, be: usize| self.assemble_into(pattern.clone(), |k| scalar(k, &|f| rt * f.a_con[(al, be)]));
        MassBlocks { mu, mtheta: [[blk(0, 0), blk(0, 1)], [blk(1, 0), blk(1, 1)]] }
    }

    /// Full consistent mass `M = M_u ⊕ M_u ⊕ M_u ⊕ M_θ`.
    pub fn assemble_mass(&self) -> CsrMatrix {
        let blocks = self.assemble_mass_blocks();
        let m = self.n_functions();
        let mut t = Vec::new();
        for f in 0..3 {
            push_block(&mut t, &blocks.mu, f * m, f * m);
        }
        for al in 0..2 {
            for be in 0..2 {
                push_block(&mut t, &blocks.mtheta[al][be], (3 + al) * m, (3 + be) * m);
            }
        }
        CsrMatrix::from_triplets(N_FIELDS * m, N_FIELDS * m, &t)
    }

    pub fn assemble_stiffness(&self) -> CsrMatrix {
        let scalar = self.scalar_pattern();
        let pattern = self.field_pattern(&scalar, |_, _| true);
        let m = self.n_functions();
        let mat = self.material;
        self.assemble_into(pattern, |k| {
            let mut out = Vec::new();
            for qp in &self.qpoints[k] {
                let d = constitutive_matrix(&qp.frame, &mat);
                let b = &qp.basis;
                let bm: Vec<SMatrix<f64, 8, 5>> =
                    (0..b.len()).map(|a| b_matrix(&qp.frame, b.values[a], [b.d[0][a], b.d[1][a]])).collect();
                let db: Vec<SMatrix<f64, 8, 5>> = bm.iter().map(|x| d * x).collect();
                for a in 0..b.len() {
                    for c in 0..b.len() {
                        let ke = bm[a].transpose() * db[c] * qp.weight;
                        for f in 0..N_FIELDS {
                            for g in 0..N_FIELDS {
                                out.push((f * m + b.indices[a], g * m + b.indices[c], ke[(f, g)]));
                            }
                        }
                    }
                }
            }
            out
        })
    }

    /// Sums per-element vectors in element order.
    fn assemble_vector<F>(&self, element: F) -> Vec<f64>
    where
        F: Fn(usize) -> Vec<(usize, f64)> + Sync,
    {
        let parts: Vec<Vec<(usize, f64)>> = (0..self.active.len()).into_par_iter().map(&element).collect();
        let mut out = vec![0.0; self.n_dofs()];
        for part in parts {
            for (i, v) in part {
                out[i] += v;
            }
        }
        out
    }

    /// `F_i = ∫ (f · v_i + m · φ_i) √a dS`.
    pub fn assemble_body_load(&self, load: &BodyLoad) -> Vec<f64> {
        let m = self.n_functions();
        self.assemble_vector(|k| {
            let mut out = Vec::new();
            for qp in &self.qpoints[k] {
                let (f, mm) = load(qp.xi, &qp.frame);
                let gen = generalized(&qp.frame, f, mm);
                for (a, &j) in qp.basis.indices.iter().enumerate() {
                    let n = qp.basis.values[a] * qp.weight;
                    for (fld, g) in gen.iter().enumerate() {
                        out.push((fld * m + j, g * n));
                    }
                }
            }
            out
        })
    }

    /// `F_i = b(w, v_i)` for fields given by value.
    pub fn mass_action(&self, field: &FieldValue) -> Vec<f64> {
        let m = self.n_functions();
        let ru = self.material.rho_u();
        let rt = self.material.rho_theta();
        self.assemble_vector(|k| {
            let mut out = Vec::new();
            for qp in &self.qpoints[k] {
                let (u, th) = field(qp.xi, &qp.frame);
                let con = qp.frame.a_con * nalgebra::Vector2::new(th[0], th[1]);
                let gen = [ru * u[0], ru * u[1], ru * u[2], rt * con[0], rt * con[1]];
                for (a, &j) in qp.basis.indices.iter().enumerate() {
                    let n = qp.basis.values[a] * qp.weight;
                    for (fld, g) in gen.iter().enumerate() {
                        out.push((fld * m + j, g * n));
                    }
                }
            }
            out
        })
    }

    /// `F_i = a(w, v_i)` for fields given with first derivatives.
    pub fn stiffness_action(&self, field: &FieldJetFn) -> Vec<f64> {
        let m = self.n_functions();
        let mat = self.material;
        self.assemble_vector(|k| {
            let mut out = Vec::new();
            for qp in &self.qpoints[k] {
                let jet = field(qp.xi, &qp.frame);
                let stress = constitutive_matrix(&qp.frame, &mat) * strains(&qp.frame, &jet).voigt();
                let b = &qp.basis;
                for a in 0..b.len() {
                    let bm = b_matrix(&qp.frame, b.values[a], [b.d[0][a], b.d[1][a]]);
                    let r = bm.transpose() * stress * qp.weight;
                    for fld in 0..N_FIELDS {
                        out.push((fld * m + b.indices[a], r[fld]));
                    }
                }
            }
            out
        })
    }

    /// `F_i = ∫_{∂S_N} (h · v_i + n · φ_i) d∂S` over boundary edges (trimmed edges only if `trimmed_only`).
    /// The line element is the physical length of the mapped edge.
    pub fn assemble_boundary_load(&self, load: &BoundaryLoad, trimmed_only: bool) -> Result<Vec<f64>> {
        let m = self.n_functions();
        let q = self.mesh.quad_order();
        let mut out = vec![0.0; self.n_dofs()];
        for piece in boundary_pieces(&self.space, &self.region)? {
            if trimmed_only && !piece.trimmed {
                continue;
            }
            if !self.mesh.is_active(piece.element) {
                continue;
            }
            let d = [piece.b[0] - piece.a[0], piece.b[1] - piece.a[1]];
            let (ts, ws) = gauss_interval(q, 0.0, 1.0);
            for (t, w) in ts.iter().zip(&ws) {
                let xi = [piece.a[0] + t * d[0], piece.a[1] + t * d[1]];
                let frame = frame_at(&self.chart, xi)?;
                let tangent = frame.a[0] * d[0] + frame.a[1] * d[1];
                let ds = tangent.norm() * w;
                let normal = tangent.cross(&frame.a3).normalize();
                let (h, n) = load(xi, &frame, normal);
                let gen = generalized(&frame, h, n);
                let basis = self.basis(piece.element, xi)?;
                for (a, &j) in basis.indices.iter().enumerate() {
                    for (fld, g) in gen.iter().enumerate() {
                        out[fld * m + j] += g * basis.values[a] * ds;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Degrees of freedom eliminated by homogeneous Dirichlet conditions.
    pub fn dirichlet_dofs(&self, spec: &DirichletSpec) -> Result<Vec<usize>> {
        let (lo, hi) = self.space.domain();
        let [m1, m2] = self.space.dims();
        let mut funcs = BTreeSet::new();
        for (side, &on) in spec.edges.iter().enumerate() {
            if !on {
                continue;
            }
            let (dir, value) = match side {
                0 => (1, lo[1]),
                1 => (0, hi[0]),
                2 => (1, hi[1]),
                _ => (0, lo[0]),
            };
            let fitted = self
                .region
                .loops()
                .iter()
                .any(|l| l.edges().any(|(a, b, trimmed)| !trimmed && a[dir] == value && b[dir] == value));
            if !fitted {
                return Err(Error::Unsupported(format!(
                    "Dirichlet condition requested on side {side}, which is not a fitted edge of the domain"
                )));
            }
            let fixed = if value == lo[dir] { 0 } else { [m1, m2][dir] - 1 };
            for k in 0..[m2, m1][dir] {
                funcs.insert(if dir == 0 {
                    self.space.global_index(fixed, k)
                } else {
                    self.space.global_index(k, fixed)
                });
            }
        }
        let mut dofs = Vec::new();
        for (f, &on) in spec.fields.iter().enumerate() {
            if on {
                dofs.extend(funcs.iter().map(|&j| self.dof(f, j)));
            }
        }
        dofs.sort_unstable();
        Ok(dofs)
    }

    /// Supported degrees of freedom minus the Dirichlet ones.
    pub fn free_dofs(&self, dirichlet: &[usize]) -> Vec<usize> {
        let fixed: BTreeSet<usize> = dirichlet.iter().copied().collect();
        let funcs = self.supported_functions();
        let mut free = Vec::new();
        for f in 0..N_FIELDS {
            for &j in &funcs {
                let d = self.dof(f, j);
                if !fixed.contains(&d) {
                    free.push(d);
                }
            }
        }
        free.sort_unstable();
        free
    }

    /// Assembles mass and stiffness and restricts them to the free degrees of freedom.
    pub fn build_system(&self, dirichlet: &DirichletSpec) -> Result<ShellSystem> {
        let fixed = self.dirichlet_dofs(dirichlet)?;
        let free = self.free_dofs(&fixed);
        let mass_full = self.assemble_mass();
        let stiffness_full = self.assemble_stiffness();
        Ok(ShellSystem {
            n_full: self.n_dofs(),
            mass: mass_full.submatrix(&free),
            stiffness: stiffness_full.submatrix(&free),
            free,
            mass_full,
            stiffness_full,
        })
    }

    /// Discrete fields with first derivatives at `xi` in element `e`.
    pub fn field_at(&self, coeffs: &[f64], e: usize, xi: [f64; 2]) -> Result<FieldJet> {
        let b = self.basis(e, xi)?;
        Ok(field_from_basis(coeffs, &b, self.n_functions()))
    }

    /// Mass-weighted L² projection onto the free degrees of freedom of `system`,
    /// using its consistent mass.
    pub fn project(&self, system: &ShellSystem, field: &FieldValue) -> Result<Vec<f64>> {
        let rhs = system.restrict(&self.mass_action(field));
        if rhs.iter().all(|&v| v == 0.0) {
            return Ok(vec![0.0; rhs.len()]);
        }
        let chol = SkylineCholesky::factor(&system.mass)?;
        Ok(chol.solve(&rhs))
    }

    /// Integrates a scalar function of the point and frame over `S` (with `√a`).
    pub fn integrate(&self, f: &(dyn Fn(usize, &QuadPoint) -> f64 + Sync)) -> f64 {
        let parts: Vec<f64> = (0..self.active.len())
            .into_par_iter()
            .map(|k| self.qpoints[k].iter().map(|qp| f(self.active[k], qp) * qp.weight).sum())
            .collect();
        parts.iter().sum()
    }
}

fn push_block(t: &mut Vec<(usize, usize, f64)>, b: &CsrMatrix, r0: usize, c0: usize) {
    for i in 0..b.nrows() {
        let (c, v) = b.row(i);
        for (&j, &x) in c.iter().zip(v) {
            t.push((r0 + i, c0 + j, x));
        }
    }
}

/// Components of `(f, m)` paired with the five DOF test directions `e_k` and `a^α`.
fn generalized(frame: &SurfaceFrame, f: V3, m: V3) -> [f64; N_FIELDS] {
    [f[0], f[1], f[2], m.dot(&frame.a_up[0]), m.dot(&frame.a_up[1])]
}

pub fn field_from_basis(coeffs: &[f64], b: &BasisValues, m: usize) -> FieldJet {
    let mut x = FieldJet::zero();
    for (a, &j) in b.indices.iter().enumerate() {
        let (n, d1, d2) = (b.values[a], b.d[0][a], b.d[1][a]);
        for k in 0..3 {
            let c = coeffs[k * m + j];
            x.u[k] += c * n;
            x.du[0][k] += c * d1;
            x.du[1][k] += c * d2;
        }
        for al in 0..2 {
            let c = coeffs[(3 + al) * m + j];
            x.theta[al] += c * n;
            x.dtheta[al][0] += c * d1;
            x.dtheta[al][1] += c * d2;
        }
    }
    x
}

/// Mass and stiffness restricted to the free degrees of freedom.
#[derive(Debug, Clone)]
pub struct ShellSystem {
    pub n_full: usize,
    /// Full-numbering index of each reduced degree of freedom.
    pub free: Vec<usize>,
    pub mass: CsrMatrix,
    pub stiffness: CsrMatrix,
    pub mass_full: CsrMatrix,
    pub stiffness_full: CsrMatrix,
}

impl ShellSystem {
    pub fn n_dofs(&self) -> usize {
        self.free.len()
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| full[i]).collect()
    }

    pub fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_full];
        for (&i, &v) in self.free.iter().zip(reduced) {
            out[i] = v;
        }
        out
    }

    pub fn dense_mass(&self) -> DMatrix<f64> {
        self.mass.to_dense()
    }
}
