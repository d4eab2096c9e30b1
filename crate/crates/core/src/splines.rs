//! Univariate and tensor-product B-spline spaces on the fictitious parametric domain.
//!
//! Basis evaluation uses the Cox-de Boor recursion in the triangular-table
//! form, which also yields derivatives. Every evaluation routine has a variant
//! that takes an explicit knot span; evaluating a span's polynomial piece at a
//! point outside that span yields its polynomial extension, which is what the
//! stabilization module relies on.
//!
//! Global indices of tensor-product functions are direction-1-major:
//! `global = i1 * m2 + i2`. Elements are numbered the same way.

use crate::error::{Error, Result};

/// Open knot vector of a given degree.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    values: Vec<f64>,
    degree: usize,
    /// Knot index `k` of each nonempty span `[t_k, t_{k+1})`, in increasing order.
    spans: Vec<usize>,
}

impl KnotVector {
    pub fn new(values: Vec<f64>, degree: usize) -> Result<Self> {
        if degree < 1 {
            return Err(Error::InvalidKnots("degree must be at least 1".into()));
        }
        let n = values.len();
        if n < 2 * (degree + 1) {
            return Err(Error::InvalidKnots(format!(
                "need at least {} knots for degree {degree}, got {n}",
                2 * (degree + 1)
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidKnots("non-finite knot".into()));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidKnots("knots must be nondecreasing".into()));
        }
        let first = values[0];
        let last = values[n - 1];
        if values[..=degree].iter().any(|&v| v != first) || values[n - degree - 1..].iter().any(|&v| v != last) {
            return Err(Error::InvalidKnots("knot vector must be open (end knots repeated p+1 times)".into()));
        }
        if values[degree + 1] == first || values[n - degree - 2] == last {
            return Err(Error::InvalidKnots("end knots repeated more than p+1 times".into()));
        }
        // interior multiplicity
        let mut i = degree + 1;
        while i < n - degree - 1 {
            let mut j = i;
            while j + 1 < n - degree - 1 && values[j + 1] == values[i] {
                j += 1;
            }
            if j - i + 1 > degree {
                return Err(Error::InvalidKnots(format!(
                    "interior knot {} has multiplicity {} > p",
                    values[i],
                    j - i + 1
                )));
            }
            i = j + 1;
        }
        let spans = (degree..n - degree - 1).filter(|&k| values[k] < values[k + 1]).collect();
        Ok(Self { values, degree, spans })
    }

    /// Open knot vector with maximal smoothness over the given breakpoints.
    pub fn from_breakpoints(degree: usize, breakpoints: &[f64]) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidKnots("need at least two breakpoints".into()));
        }
        let mut values = Vec::with_capacity(breakpoints.len() + 2 * degree);
        values.extend(std::iter::repeat_n(breakpoints[0], degree));
        values.extend_from_slice(breakpoints);
        values.extend(std::iter::repeat_n(breakpoints[breakpoints.len() - 1], degree));
        Self::new(values, degree)
    }

    /// Open uniform knot vector with `n_elements` equal spans on `[a, b]`.
    pub fn open_uniform(degree: usize, a: f64, b: f64, n_elements: usize) -> Result<Self> {
        if n_elements == 0 || b <= a {
            return Err(Error::InvalidKnots("empty interval".into()));
        }
        let h = (b - a) / n_elements as f64;
        let bps: Vec<f64> = (0..=n_elements).map(|i| if i == n_elements { b } else { a + h * i as f64 }).collect();
        Self::from_breakpoints(degree, &bps)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn first(&self) -> f64 {
        self.values[0]
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn n_elements(&self) -> usize {
        self.spans.len()
    }

    /// Distinct knot values.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.spans.iter().map(|&k| self.values[k]).collect();
        b.push(self.last());
        b
    }

    /// Bounds `[lo, hi]` of element `e`.
    pub fn element_bounds(&self, e: usize) -> (f64, f64) {
        let k = self.spans[e];
        (self.values[k], self.values[k + 1])
    }

    /// Knot index of the span of element `e`.
    pub fn element_span(&self, e: usize) -> usize {
        self.spans[e]
    }

    /// Element containing `x`: right limit at interior knots, left limit at the last knot.
    pub fn find_element(&self, x: f64) -> Result<usize> {
        if !(x >= self.first() && x <= self.last()) {
            return Err(Error::Domain(format!("x = {x} outside knot range [{}, {}]", self.first(), self.last())));
        }
        // largest element whose lower bound is <= x
        let pos = self.spans.partition_point(|&k| self.values[k] <= x).saturating_sub(1);
        Ok(pos)
    }
}

/// Univariate spline space over an open knot vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineSpace1D {
    knots: KnotVector,
    dim: usize,
}

impl SplineSpace1D {
    pub fn new(knots: KnotVector) -> Self {
        let dim = knots.values.len() - knots.degree - 1;
        Self { knots, dim }
    }

    pub fn uniform(degree: usize, a: f64, b: f64, n_elements: usize) -> Result<Self> {
        Ok(Self::new(KnotVector::open_uniform(degree, a, b, n_elements)?))
    }

    pub fn knots(&self) -> &KnotVector {
        &self.knots
    }

    pub fn degree(&self) -> usize {
        self.knots.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_elements(&self) -> usize {
        self.knots.n_elements()
    }

    /// Index of the first function active on element `e`.
    pub fn first_active(&self, e: usize) -> usize {
        self.knots.spans[e] - self.knots.degree
    }

    /// Values of the `p+1` functions active at `x`.
    pub fn eval_basis(&self, x: f64) -> Result<(usize, Vec<f64>)> {
        let (first, mut ders) = self.eval_basis_derivs(x, 0)?;
        Ok((first, ders.swap_remove(0)))
    }

    /// Values and derivatives up to `order` of the functions active at `x`.
    /// Row `k` of the result holds the `k`-th derivatives.
    pub fn eval_basis_derivs(&self, x: f64, order: usize) -> Result<(usize, Vec<Vec<f64>>)> {
        let e = self.knots.find_element(x)?;
        self.eval_on_element(e, x, order)
    }

    /// Evaluates the polynomial pieces of element `e` at `x`; `x` need not lie in `e`.
    pub fn eval_on_element(&self, e: usize, x: f64, order: usize) -> Result<(usize, Vec<Vec<f64>>)> {
        let p = self.knots.degree;
        if order > p {
            return Err(Error::UnsupportedOrder { order, degree: p });
        }
        if e >= self.n_elements() {
            return Err(Error::Index(format!("element {e} out of range")));
        }
        let span = self.knots.spans[e];
        Ok((span - p, ders_basis_funs(&self.knots.values, p, span, x, order)))
    }

    /// Greville abscissae; `sum_j greville[j] * B_j(x) = x`.
    pub fn greville(&self) -> Vec<f64> {
        let p = self.knots.degree;
        let t = &self.knots.values;
        (0..self.dim).map(|j| t[j + 1..=j + p].iter().sum::<f64>() / p as f64).collect()
    }

    /// Elements on which function `j` is nonzero.
    pub fn support_elements(&self, j: usize) -> std::ops::Range<usize> {
        let p = self.knots.degree;
        let lo = self.knots.spans.partition_point(|&k| k < j);
        let hi = self.knots.spans.partition_point(|&k| k <= j + p);
        lo..hi
    }
}

/// Cox-de Boor values and derivatives of the `p+1` functions of knot span `span`.
fn ders_basis_funs(t: &[f64], p: usize, span: usize, x: f64, n: usize) -> Vec<Vec<f64>> {
    let mut ndu = vec![vec![0.0; p + 1]; p + 1];
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    ndu[0][0] = 1.0;
    for j in 1..=p {
        left[j] = x - t[span + 1 - j];
        right[j] = t[span + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }
    let mut ders = vec![vec![0.0; p + 1]; n + 1];
    for j in 0..=p {
        ders[0][j] = ndu[j][p];
    }
    let mut a = [vec![0.0; p + 1], vec![0.0; p + 1]];
    for r in 0..=p {
        let (mut s1, mut s2) = (0usize, 1usize);
        a[0][0] = 1.0;
        for k in 1..=n {
            let mut d = 0.0;
            let rk = r as isize - k as isize;
            let pk = p - k;
            if r >= k {
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                d = a[s2][0] * ndu[rk as usize][pk];
            }
            let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2 = if r as isize - 1 <= pk as isize { k - 1 } else { p - r };
            for j in j1..=j2 {
                let idx = (rk + j as isize) as usize;
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                d += a[s2][j] * ndu[idx][pk];
            }
            if r <= pk {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            ders[k][r] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut fac = p as f64;
    for (k, row) in ders.iter_mut().enumerate().skip(1) {
        for v in row.iter_mut() {
            *v *= fac;
        }
        fac *= (p - k) as f64;
    }
    ders
}

/// Values and first/second partial derivatives of the tensor-product functions
/// active on one element, evaluated at a single point.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BasisValues {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
    /// `d[α][k]` is the derivative with respect to ξ_(α+1) of function `k`.
    pub d: [Vec<f64>; 2],
    /// Second derivatives (11, 12, 22); empty unless requested.
    pub dd: [Vec<f64>; 3],
}

impl BasisValues {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Tensor product of two univariate spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorSplineSpace {
    spaces: [SplineSpace1D; 2],
}

impl TensorSplineSpace {
    pub fn new(space1: SplineSpace1D, space2: SplineSpace1D) -> Self {
        Self { spaces: [space1, space2] }
    }

    pub fn uniform(degree: usize, lo: [f64; 2], hi: [f64; 2], n: [usize; 2]) -> Result<Self> {
        Ok(Self::new(
            SplineSpace1D::uniform(degree, lo[0], hi[0], n[0])?,
            SplineSpace1D::uniform(degree, lo[1], hi[1], n[1])?,
        ))
    }

    pub fn space(&self, dir: usize) -> &SplineSpace1D {
        &self.spaces[dir]
    }

    /// Degree (direction 1; both directions share it in all experiments).
    pub fn degree(&self) -> usize {
        self.spaces[0].degree()
    }

    pub fn dims(&self) -> [usize; 2] {
        [self.spaces[0].dim(), self.spaces[1].dim()]
    }

    pub fn dim(&self) -> usize {
        self.spaces[0].dim() * self.spaces[1].dim()
    }

    pub fn global_index(&self, i1: usize, i2: usize) -> usize {
        i1 * self.spaces[1].dim() + i2
    }

    pub fn split_index(&self, g: usize) -> (usize, usize) {
        let m2 = self.spaces[1].dim();
        (g / m2, g % m2)
    }

    pub fn n_elements(&self) -> [usize; 2] {
        [self.spaces[0].n_elements(), self.spaces[1].n_elements()]
    }

    pub fn element_count(&self) -> usize {
        self.spaces[0].n_elements() * self.spaces[1].n_elements()
    }

    pub fn element_index(&self, e: (usize, usize)) -> usize {
        e.0 * self.spaces[1].n_elements() + e.1
    }

    pub fn element_of_index(&self, idx: usize) -> (usize, usize) {
        let n2 = self.spaces[1].n_elements();
        (idx / n2, idx % n2)
    }

    /// Lower-left and upper-right corners of an element.
    pub fn element_bounds(&self, e: (usize, usize)) -> ([f64; 2], [f64; 2]) {
        let (a1, b1) = self.spaces[0].knots().element_bounds(e.0);
        let (a2, b2) = self.spaces[1].knots().element_bounds(e.1);
        ([a1, a2], [b1, b2])
    }

    pub fn domain(&self) -> ([f64; 2], [f64; 2]) {
        let k1 = self.spaces[0].knots();
        let k2 = self.spaces[1].knots();
        ([k1.first(), k2.first()], [k1.last(), k2.last()])
    }

    pub fn find_element(&self, xi: [f64; 2]) -> Result<(usize, usize)> {
        Ok((self.spaces[0].knots().find_element(xi[0])?, self.spaces[1].knots().find_element(xi[1])?))
    }

    /// Global indices of the `(p+1)^2` functions active on element `e`, in lexicographic order.
    pub fn active_functions(&self, e: (usize, usize)) -> Vec<usize> {
        let p1 = self.spaces[0].degree();
        let p2 = self.spaces[1].degree();
        let f1 = self.spaces[0].first_active(e.0);
        let f2 = self.spaces[1].first_active(e.1);
        let mut out = Vec::with_capacity((p1 + 1) * (p2 + 1));
        for a in 0..=p1 {
            for b in 0..=p2 {
                out.push(self.global_index(f1 + a, f2 + b));
            }
        }
        out
    }

    /// Evaluates the polynomial pieces of element `e` at `xi` (which may lie outside `e`).
    /// `order` is 0, 1 or 2.
    pub fn eval_on_element(&self, e: (usize, usize), xi: [f64; 2], order: usize) -> Result<BasisValues> {
        let (f1, d1) = self.spaces[0].eval_on_element(e.0, xi[0], order)?;
        let (f2, d2) = self.spaces[1].eval_on_element(e.1, xi[1], order)?;
        let p1 = self.spaces[0].degree();
        let p2 = self.spaces[1].degree();
        let n = (p1 + 1) * (p2 + 1);
        let mut bv =
            BasisValues { indices: Vec::with_capacity(n), values: Vec::with_capacity(n), ..Default::default() };
        for a in 0..=p1 {
            for b in 0..=p2 {
                bv.indices.push(self.global_index(f1 + a, f2 + b));
                bv.values.push(d1[0][a] * d2[0][b]);
                if order >= 1 {
                    bv.d[0].push(d1[1][a] * d2[0][b]);
                    bv.d[1].push(d1[0][a] * d2[1][b]);
                }
                if order >= 2 {
                    bv.dd[0].push(d1[2][a] * d2[0][b]);
                    bv.dd[1].push(d1[1][a] * d2[1][b]);
                    bv.dd[2].push(d1[0][a] * d2[2][b]);
                }
            }
        }
        Ok(bv)
    }

    /// Evaluates the functions active at `xi` in the element containing it.
    pub fn eval(&self, xi: [f64; 2], order: usize) -> Result<BasisValues> {
        let e = self.find_element(xi)?;
        self.eval_on_element(e, xi, order)
    }

    /// Greville points per direction.
    pub fn greville(&self) -> [Vec<f64>; 2] {
        [self.spaces[0].greville(), self.spaces[1].greville()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn space(p: usize, n: usize) -> SplineSpace1D {
        SplineSpace1D::uniform(p, 0.0, 1.0, n).unwrap()
    }

    #[test]
    fn endpoint_interpolation() {
        let s = SplineSpace1D::new(KnotVector::new(vec![0., 0., 0., 1., 1., 1.], 2).unwrap());
        let (first, v) = s.eval_basis(0.0).unwrap();
        assert_eq!(first, 0);
        assert_eq!(v, vec![1.0, 0.0, 0.0]);
        let (_, d) = s.eval_basis_derivs(0.0, 1).unwrap();
        assert_abs_diff_eq!(d[1][0], -2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d[1][1], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d[1][2], 0.0, epsilon = 1e-14);
        let (_, v) = s.eval_basis(1.0).unwrap();
        assert_abs_diff_eq!(v[2], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn hat_functions() {
        let s = SplineSpace1D::new(KnotVector::new(vec![0., 0., 0.5, 1., 1.], 1).unwrap());
        let (first, v) = s.eval_basis(0.25).unwrap();
        assert_eq!(first, 0);
        assert_abs_diff_eq!(v[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn partition_of_unity_and_nonnegativity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for p in 1..=4 {
            let s = space(p, 7);
            for _ in 0..1000 {
                let x: f64 = rng.random();
                let (_, v) = s.eval_basis(x).unwrap();
                assert_eq!(v.len(), p + 1);
                assert!(v.iter().all(|&b| b >= -1e-15));
                assert_abs_diff_eq!(v.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
                let (_, d) = s.eval_basis_derivs(x, p.min(2)).unwrap();
                for row in &d[1..] {
                    assert_abs_diff_eq!(row.iter().sum::<f64>(), 0.0, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-6;
        for p in 2..=4 {
            let s = space(p, 5);
            for _ in 0..100 {
                let x: f64 = rng.random_range(0.01..0.99);
                let e = s.knots().find_element(x).unwrap();
                let (_, d) = s.eval_on_element(e, x, 2).unwrap();
                let (_, vp) = s.eval_on_element(e, x + h, 1).unwrap();
                let (_, vm) = s.eval_on_element(e, x - h, 1).unwrap();
                for k in 0..=p {
                    let fd = (vp[0][k] - vm[0][k]) / (2.0 * h);
                    assert_abs_diff_eq!(d[1][k], fd, epsilon = 1e-6);
                    let fd2 = (vp[1][k] - vm[1][k]) / (2.0 * h);
                    assert_abs_diff_eq!(d[2][k], fd2, epsilon = 1e-5);
                }
            }
        }
    }

    #[test]
    fn order_above_degree_is_rejected() {
        let s = space(2, 3);
        assert!(matches!(s.eval_basis_derivs(0.5, 3), Err(Error::UnsupportedOrder { order: 3, degree: 2 })));
    }

    #[test]
    fn out_of_range_is_domain_error() {
        let s = space(2, 3);
        assert!(matches!(s.eval_basis(1.5), Err(Error::Domain(_))));
        assert!(matches!(s.eval_basis(-1e-9), Err(Error::Domain(_))));
    }

    #[test]
    fn knot_validation() {
        assert!(KnotVector::new(vec![0., 0., 1., 1.], 2).is_err());
        assert!(KnotVector::new(vec![0., 0., 0., 1., 0.5, 1., 1.], 2).is_err());
        assert!(KnotVector::new(vec![0., 0., 0., 0.5, 0.5, 0.5, 1., 1., 1.], 2).is_err());
        let kv = KnotVector::new(vec![0., 0., 0., 0.5, 0.5, 1., 1., 1.], 2).unwrap();
        assert_eq!(kv.n_elements(), 2);
    }

    #[test]
    fn knot_evaluation_convention() {
        let s = space(2, 4);
        let kv = s.knots();
        assert_eq!(kv.find_element(0.25).unwrap(), 1);
        assert_eq!(kv.find_element(1.0).unwrap(), 3);
        assert_eq!(kv.find_element(0.0).unwrap(), 0);
    }

    #[test]
    fn greville_reproduces_linears() {
        let s = space(3, 6);
        let g = s.greville();
        for &x in &[0.0, 0.13, 0.5, 0.77, 1.0] {
            let (first, v) = s.eval_basis(x).unwrap();
            let y: f64 = v.iter().enumerate().map(|(k, b)| b * g[first + k]).sum();
            assert_abs_diff_eq!(y, x, epsilon = 1e-13);
        }
    }

    #[test]
    fn active_function_counts() {
        let t = TensorSplineSpace::uniform(1, [0., 0.], [1., 1.], [2, 2]).unwrap();
        assert_eq!(t.active_functions((0, 0)), vec![0, 1, 3, 4]);
        let t = TensorSplineSpace::uniform(2, [0., 0.], [1., 1.], [1, 1]).unwrap();
        assert_eq!(t.active_functions((0, 0)), (0..9).collect::<Vec<_>>());
        let t = TensorSplineSpace::uniform(3, [0., 0.], [1., 1.], [5, 4]).unwrap();
        for e1 in 0..5 {
            for e2 in 0..4 {
                assert_eq!(t.active_functions((e1, e2)).len(), 16);
            }
        }
    }

    #[test]
    fn support_elements_cover_nonzeros() {
        let s = space(3, 6);
        for j in 0..s.dim() {
            let r = s.support_elements(j);
            for e in 0..s.n_elements() {
                let f = s.first_active(e);
                let active = j >= f && j <= f + 3;
                assert_eq!(active, r.contains(&e), "function {j}, element {e}");
            }
        }
    }

    #[test]
    fn constant_spline_is_constant() {
        let t = TensorSplineSpace::uniform(3, [0., 0.], [1., 2.], [4, 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let xi = [rng.random::<f64>(), 2.0 * rng.random::<f64>()];
            let bv = t.eval(xi, 1).unwrap();
            let s: f64 = bv.values.iter().map(|b| 2.5 * b).sum();
            assert_abs_diff_eq!(s, 2.5, epsilon = 1e-12);
        }
    }
}
