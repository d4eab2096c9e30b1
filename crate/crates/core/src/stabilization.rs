//! Polynomial-extension stabilization of small cut elements.
//!
//! On a small element `T` the basis functions are replaced by the polynomial
//! pieces of the functions active on a large neighbor `T'`, extrapolated onto
//! `T`. The resulting space is generally non-conforming. Functions that are not
//! active on any large element lose their support and are deactivated.

use crate::error::{Error, Result};
use crate::splines::{BasisValues, TensorSplineSpace};
use crate::trimming::TrimmedMesh;
use std::collections::BTreeSet;

/// Default threshold on the area fraction separating large from small elements.
pub const DEFAULT_GAMMA: f64 = 0.1;

/// Small-element to large-neighbor substitution plan.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionMap {
    gamma: f64,
    /// `source[e]` is the element whose polynomial pieces are used on `e`
    /// (`e` itself for large elements, `None` for outside elements).
    source: Vec<Option<usize>>,
    small: Vec<usize>,
    deactivated: Vec<usize>,
}

impl ExtensionMap {
    /// Builds the plan for all small elements of `mesh` with threshold `gamma`.
    pub fn build(space: &TensorSplineSpace, mesh: &TrimmedMesh, gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::Config(format!("gamma must lie in [0, 1], got {gamma}")));
        }
        let count = mesh.element_count();
        let mut source = vec![None; count];
        let mut small = Vec::new();
        for e in 0..count {
            if !mesh.is_active(e) {
                continue;
            }
            if mesh.fraction(e) >= gamma {
                source[e] = Some(e);
            } else {
                small.push(e);
            }
        }
        for &e in &small {
            source[e] = Some(select_neighbor(mesh, gamma, e)?);
        }
        let mut covered = BTreeSet::new();
        let mut all = BTreeSet::new();
        for e in 0..count {
            if !mesh.is_active(e) {
                continue;
            }
            let ep = mesh.element_pair(e);
            all.extend(space.active_functions(ep));
            if source[e] == Some(e) {
                covered.extend(space.active_functions(ep));
            }
        }
        let deactivated = all.difference(&covered).copied().collect();
        Ok(Self { gamma, source, small, deactivated })
    }

    /// The identity plan: every active element keeps its own basis.
    pub fn identity(mesh: &TrimmedMesh) -> Self {
        let source = (0..mesh.element_count()).map(|e| mesh.is_active(e).then_some(e)).collect();
        Self { gamma: 0.0, source, small: Vec::new(), deactivated: Vec::new() }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn small_elements(&self) -> &[usize] {
        &self.small
    }

    /// Element whose polynomials are evaluated on `e`.
    pub fn source(&self, e: usize) -> Option<usize> {
        self.source[e]
    }

    pub fn neighbor(&self, e: usize) -> Option<usize> {
        match self.source[e] {
            Some(s) if s != e => Some(s),
            _ => None,
        }
    }

    /// Global function indices whose support vanished (sorted).
    pub fn deactivated(&self) -> &[usize] {
        &self.deactivated
    }

    pub fn is_identity(&self) -> bool {
        self.small.is_empty()
    }

    /// Basis functions and derivatives used on element `e` at `xi`.
    pub fn eval(&self, space: &TensorSplineSpace, e: usize, xi: [f64; 2], order: usize) -> Result<BasisValues> {
        let s = self.source[e].ok_or_else(|| Error::Index(format!("element {e} is not active")))?;
        space.eval_on_element(space.element_of_index(s), xi, order)
    }
}

/// Large neighbor with the largest retained area. Face neighbors are searched
/// first; when none of them is large, diagonal neighbors are searched.
/// Ties go to the lowest element index.
pub fn select_neighbor(mesh: &TrimmedMesh, gamma: f64, e: usize) -> Result<usize> {
    let [n1, n2] = mesh.n_elements();
    let (i, j) = mesh.element_pair(e);
    let face: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
    let diag: [(isize, isize); 4] = [(-1, -1), (-1, 1), (1, -1), (1, 1)];
    for ring in [&face, &diag] {
        let mut best: Option<(usize, f64)> = None;
        for &(di, dj) in ring.iter() {
            let (a, b) = (i as isize + di, j as isize + dj);
            if a < 0 || b < 0 || a >= n1 as isize || b >= n2 as isize {
                continue;
            }
            let k = mesh.element_index((a as usize, b as usize));
            if !mesh.is_active(k) {
                continue;
            }
            let f = mesh.fraction(k);
            if f < gamma {
                continue;
            }
            best = match best {
                None => Some((k, f)),
                Some((bk, bf)) if f > bf || (f == bf && k < bk) => Some((k, f)),
                keep => keep,
            };
        }
        if let Some((k, _)) = best {
            return Ok(k);
        }
    }
    Err(Error::StabilizationInfeasible((i, j)))
}

/// Taylor expansion of one tensor-product function's polynomial piece on an element.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalPolynomial {
    pub center: [f64; 2],
    /// `coeffs[a][b]` multiplies `(x1 - c1)^a (x2 - c2)^b`.
    pub coeffs: Vec<Vec<f64>>,
}

impl LocalPolynomial {
    pub fn eval(&self, xi: [f64; 2]) -> f64 {
        let dx = xi[0] - self.center[0];
        let dy = xi[1] - self.center[1];
        let mut s = 0.0;
        for row in self.coeffs.iter().rev() {
            let mut r = 0.0;
            for c in row.iter().rev() {
                r = r * dy + c;
            }
            s = s * dx + r;
        }
        s
    }
}

/// Polynomial piece of global function `j` on element `e`, as Taylor coefficients at the element center.
pub fn extract_local_polynomial(space: &TensorSplineSpace, e: (usize, usize), j: usize) -> Result<LocalPolynomial> {
    let (j1, j2) = space.split_index(j);
    let mut taylor = [Vec::new(), Vec::new()];
    let mut center = [0.0; 2];
    for (d, (ed, jd)) in [(e.0, j1), (e.1, j2)].into_iter().enumerate() {
        let s = space.space(d);
        let p = s.degree();
        let first = s.first_active(ed);
        if jd < first || jd > first + p {
            return Err(Error::Index(format!("function {j} is not active on element {e:?}")));
        }
        let (lo, hi) = s.knots().element_bounds(ed);
        center[d] = 0.5 * (lo + hi);
        let (_, ders) = s.eval_on_element(ed, center[d], p)?;
        let mut fact = 1.0;
        taylor[d] = (0..=p)
            .map(|k| {
                if k > 0 {
                    fact *= k as f64;
                }
                ders[k][jd - first] / fact
            })
            .collect();
    }
    let coeffs = taylor[0].iter().map(|a| taylor[1].iter().map(|b| a * b).collect()).collect();
    Ok(LocalPolynomial { center, coeffs })
}
