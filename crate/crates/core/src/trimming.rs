//! Trimmed parametric domains, element classification and cut-cell quadrature.
//!
//! A [`TrimRegion`] is stored twice: as a union of convex pieces with disjoint
//! interiors (used for clipping and quadrature) and as oriented boundary loops
//! (used for boundary integrals). Each boundary edge carries a flag telling
//! whether it is a trimmed edge or lies on the fitted boundary of the
//! background grid.

use crate::error::{Error, Result};
use crate::quadrature::{convex_polygon_rule, polygon_area, tensor_rule, Rule2D};
use crate::splines::TensorSplineSpace;
use rayon::prelude::*;

pub type Point = [f64; 2];

/// Fractions below this value mark an element as outside.
pub const OUTSIDE_FRACTION: f64 = 1e-24;
/// Fractions above `1 - INSIDE_SLACK` mark an element as inside.
pub const INSIDE_SLACK: f64 = 1e-12;

/// Closed polyline with per-edge flags; edge `i` joins `points[i]` and `points[i+1 mod n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryLoop {
    pub points: Vec<Point>,
    pub trimmed: Vec<bool>,
}

impl BoundaryLoop {
    pub fn edges(&self) -> impl Iterator<Item = (Point, Point, bool)> + '_ {
        let n = self.points.len();
        (0..n).map(move |i| (self.points[i], self.points[(i + 1) % n], self.trimmed[i]))
    }

    pub fn signed_area(&self) -> f64 {
        polygon_area(&self.points)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrimRegion {
    pieces: Vec<Vec<Point>>,
    loops: Vec<BoundaryLoop>,
}

impl TrimRegion {
    /// Region from explicit convex pieces (counterclockwise) and boundary loops.
    pub fn from_parts(pieces: Vec<Vec<Point>>, loops: Vec<BoundaryLoop>) -> Result<Self> {
        for p in &pieces {
            if !is_convex_ccw(p) {
                return Err(Error::Config("trim piece is not a convex counterclockwise polygon".into()));
            }
        }
        for l in &loops {
            if l.points.len() < 3 || l.trimmed.len() != l.points.len() {
                return Err(Error::Config("malformed boundary loop".into()));
            }
        }
        Ok(Self { pieces, loops })
    }

    /// Axis-aligned rectangle; `trimmed` flags the edges bottom, right, top, left.
    pub fn rectangle(lo: Point, hi: Point, trimmed: [bool; 4]) -> Result<Self> {
        let pts = vec![lo, [hi[0], lo[1]], hi, [lo[0], hi[1]]];
        Self::from_parts(vec![pts.clone()], vec![BoundaryLoop { points: pts, trimmed: trimmed.to_vec() }])
    }

    /// Convex polygon (counterclockwise), all edges trimmed.
    pub fn convex(poly: Vec<Point>) -> Result<Self> {
        let n = poly.len();
        Self::from_parts(vec![poly.clone()], vec![BoundaryLoop { points: poly, trimmed: vec![true; n] }])
    }

    /// Rectangle minus a convex hole (given counterclockwise). Outer edges are
    /// flagged with `outer_trimmed` (bottom, right, top, left), hole edges are trimmed.
    /// The hole must lie strictly inside the rectangle.
    pub fn rectangle_with_hole(lo: Point, hi: Point, outer_trimmed: [bool; 4], hole: &[Point]) -> Result<Self> {
        if !is_convex_ccw(hole) {
            return Err(Error::Config("hole must be convex and counterclockwise".into()));
        }
        let xmin = hole.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        let xmax = hole.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
        let ymin = hole.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
        let ymax = hole.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
        if !(xmin > lo[0] && xmax < hi[0] && ymin > lo[1] && ymax < hi[1]) {
            return Err(Error::Config("hole must lie strictly inside the rectangle".into()));
        }
        let mut pieces = vec![
            vec![lo, [xmin, lo[1]], [xmin, hi[1]], [lo[0], hi[1]]],
            vec![[xmax, lo[1]], [hi[0], lo[1]], hi, [xmax, hi[1]]],
        ];
        let mut xs: Vec<f64> = hole.iter().map(|p| p[0]).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        for w in xs.windows(2) {
            let (xa, xb) = (w[0], w[1]);
            let (la, lb, ua, ub) = chains_on_slab(hole, xa, xb);
            pieces.push(vec![[xa, lo[1]], [xb, lo[1]], [xb, lb], [xa, la]]);
            pieces.push(vec![[xa, ua], [xb, ub], [xb, hi[1]], [xa, hi[1]]]);
        }
        let outer = vec![lo, [hi[0], lo[1]], hi, [lo[0], hi[1]]];
        let mut hole_cw: Vec<Point> = hole.to_vec();
        hole_cw.reverse();
        let n = hole_cw.len();
        Self::from_parts(
            pieces,
            vec![
                BoundaryLoop { points: outer, trimmed: outer_trimmed.to_vec() },
                BoundaryLoop { points: hole_cw, trimmed: vec![true; n] },
            ],
        )
    }

    pub fn pieces(&self) -> &[Vec<Point>] {
        &self.pieces
    }

    pub fn loops(&self) -> &[BoundaryLoop] {
        &self.loops
    }

    /// Area from the boundary loops (shoelace).
    pub fn area(&self) -> f64 {
        self.loops.iter().map(|l| l.signed_area()).sum()
    }

    /// Area from the convex pieces.
    pub fn pieces_area(&self) -> f64 {
        self.pieces.iter().map(|p| polygon_area(p)).sum()
    }

    /// Point membership (closed set).
    pub fn contains(&self, p: Point) -> bool {
        self.pieces.iter().any(|poly| {
            let n = poly.len();
            (0..n).all(|i| cross(poly[i], poly[(i + 1) % n], p) >= -1e-14)
        })
    }

    /// Clipped pieces `T ∩ S` for the rectangle `[lo, hi]`.
    pub fn clip_rect(&self, lo: Point, hi: Point) -> Vec<Vec<Point>> {
        let rect = vec![lo, [hi[0], lo[1]], hi, [lo[0], hi[1]]];
        self.pieces
            .iter()
            .filter(|piece| bbox_overlap(piece, lo, hi))
            .map(|piece| clip_convex(&rect, piece))
            .filter(|c| c.len() >= 3 && polygon_area(c) > 0.0)
            .collect()
    }
}

/// Lower and upper chain heights of a convex polygon at `xa` and `xb` (inside the slab).
fn chains_on_slab(poly: &[Point], xa: f64, xb: f64) -> (f64, f64, f64, f64) {
    let xm = 0.5 * (xa + xb);
    let n = poly.len();
    let mut cands = Vec::new();
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let (x0, x1) = (p[0].min(q[0]), p[0].max(q[0]));
        if x0 <= xa && x1 >= xb && x1 > x0 {
            let at = |x: f64| p[1] + (q[1] - p[1]) * (x - p[0]) / (q[0] - p[0]);
            cands.push((at(xm), at(xa), at(xb)));
        }
    }
    cands.sort_by(|a, b| a.0.total_cmp(&b.0));
    let lo = cands[0];
    let up = cands[cands.len() - 1];
    (lo.1, lo.2, up.1, up.2)
}

fn cross(a: Point, b: Point, p: Point) -> f64 {
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}

fn is_convex_ccw(poly: &[Point]) -> bool {
    let n = poly.len();
    n >= 3 && polygon_area(poly) > 0.0 && (0..n).all(|i| cross(poly[i], poly[(i + 1) % n], poly[(i + 2) % n]) >= -1e-14)
}

fn bbox_overlap(poly: &[Point], lo: Point, hi: Point) -> bool {
    let mut pl = [f64::INFINITY; 2];
    let mut ph = [f64::NEG_INFINITY; 2];
    for p in poly {
        for d in 0..2 {
            pl[d] = pl[d].min(p[d]);
            ph[d] = ph[d].max(p[d]);
        }
    }
    pl[0] < hi[0] && ph[0] > lo[0] && pl[1] < hi[1] && ph[1] > lo[1]
}

/// Sutherland-Hodgman clipping of `subject` against the convex counterclockwise `clip`.
pub fn clip_convex(subject: &[Point], clip: &[Point]) -> Vec<Point> {
    let mut out: Vec<Point> = subject.to_vec();
    let n = clip.len();
    for i in 0..n {
        if out.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % n];
        let input = std::mem::take(&mut out);
        let m = input.len();
        for k in 0..m {
            let p = input[k];
            let q = input[(k + 1) % m];
            let sp = cross(a, b, p);
            let sq = cross(a, b, q);
            if sp >= 0.0 {
                out.push(p);
            }
            if (sp >= 0.0) != (sq >= 0.0) {
                let t = sp / (sp - sq);
                out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
            }
        }
    }
    dedup_polygon(out)
}

fn dedup_polygon(mut poly: Vec<Point>) -> Vec<Point> {
    poly.dedup_by(|a, b| a == b);
    while poly.len() > 1 && poly.first() == poly.last() {
        poly.pop();
    }
    poly
}

fn is_axis_rect(poly: &[Point]) -> Option<(Point, Point)> {
    if poly.len() != 4 {
        return None;
    }
    let xs: Vec<f64> = poly.iter().map(|p| p[0]).collect();
    let ys: Vec<f64> = poly.iter().map(|p| p[1]).collect();
    let lo = [xs.iter().cloned().fold(f64::INFINITY, f64::min), ys.iter().cloned().fold(f64::INFINITY, f64::min)];
    let hi =
        [xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max), ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max)];
    let corner = |p: &Point| (p[0] == lo[0] || p[0] == hi[0]) && (p[1] == lo[1] || p[1] == hi[1]);
    if poly.iter().all(corner)
        && (polygon_area(poly) - (hi[0] - lo[0]) * (hi[1] - lo[1])).abs() <= 1e-15 * (hi[0] - lo[0]) * (hi[1] - lo[1])
    {
        Some((lo, hi))
    } else {
        None
    }
}

/// Quadrature on the union of clipped convex polygons; `q` Gauss points per direction.
pub fn rule_on_polygons(polys: &[Vec<Point>], q: usize) -> Rule2D {
    let mut r = Rule2D::default();
    for poly in polys {
        match is_axis_rect(poly) {
            Some((lo, hi)) => r.extend(tensor_rule(q, lo, hi)),
            None => r.extend(convex_polygon_rule(q, poly)),
        }
    }
    r
}

/// Cut-cell rule for the rectangle `[lo, hi]` intersected with `region`.
pub fn cut_quadrature(lo: Point, hi: Point, region: &TrimRegion, q: usize) -> Rule2D {
    rule_on_polygons(&region.clip_rect(lo, hi), q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementStatus {
    Inside,
    Cut,
    Outside,
}

/// Background grid with per-element status, area fractions and quadrature rules.
#[derive(Debug, Clone)]
pub struct TrimmedMesh {
    n: [usize; 2],
    status: Vec<ElementStatus>,
    fraction: Vec<f64>,
    area: Vec<f64>,
    rules: Vec<Rule2D>,
    quad_order: usize,
}

impl TrimmedMesh {
    pub fn n_elements(&self) -> [usize; 2] {
        self.n
    }

    pub fn element_count(&self) -> usize {
        self.status.len()
    }

    pub fn status(&self, e: usize) -> ElementStatus {
        self.status[e]
    }

    pub fn fraction(&self, e: usize) -> f64 {
        self.fraction[e]
    }

    pub fn fractions(&self) -> &[f64] {
        &self.fraction
    }

    /// `|T ∩ S|`.
    pub fn cut_area(&self, e: usize) -> f64 {
        self.area[e]
    }

    pub fn rule(&self, e: usize) -> &Rule2D {
        &self.rules[e]
    }

    pub fn quad_order(&self) -> usize {
        self.quad_order
    }

    pub fn is_active(&self, e: usize) -> bool {
        self.status[e] != ElementStatus::Outside
    }

    pub fn active_elements(&self) -> Vec<usize> {
        (0..self.status.len()).filter(|&e| self.is_active(e)).collect()
    }

    pub fn element_index(&self, e: (usize, usize)) -> usize {
        e.0 * self.n[1] + e.1
    }

    pub fn element_pair(&self, idx: usize) -> (usize, usize) {
        (idx / self.n[1], idx % self.n[1])
    }
}

/// Classifies every background element against `region` and builds quadrature with `q` points per direction.
pub fn classify_elements(space: &TensorSplineSpace, region: &TrimRegion, q: usize) -> TrimmedMesh {
    let n = space.n_elements();
    let count = n[0] * n[1];
    let per: Vec<(ElementStatus, f64, f64, Rule2D)> = (0..count)
        .into_par_iter()
        .map(|idx| {
            let e = space.element_of_index(idx);
            let (lo, hi) = space.element_bounds(e);
            let full = (hi[0] - lo[0]) * (hi[1] - lo[1]);
            let polys = region.clip_rect(lo, hi);
            let area: f64 = polys.iter().map(|p| polygon_area(p)).sum();
            let frac = area / full;
            if frac < OUTSIDE_FRACTION {
                (ElementStatus::Outside, 0.0, 0.0, Rule2D::default())
            } else if frac > 1.0 - INSIDE_SLACK {
                (ElementStatus::Inside, 1.0, full, tensor_rule(q, lo, hi))
            } else {
                (ElementStatus::Cut, frac, area, rule_on_polygons(&polys, q))
            }
        })
        .collect();
    let mut mesh = TrimmedMesh {
        n,
        status: Vec::with_capacity(count),
        fraction: Vec::with_capacity(count),
        area: Vec::with_capacity(count),
        rules: Vec::with_capacity(count),
        quad_order: q,
    };
    for (s, f, a, r) in per {
        mesh.status.push(s);
        mesh.fraction.push(f);
        mesh.area.push(a);
        mesh.rules.push(r);
    }
    mesh
}

/// Splits active elements into large (`fraction ≥ γ`) and small ones.
pub fn tag_small_elements(mesh: &TrimmedMesh, gamma: f64) -> (Vec<usize>, Vec<usize>) {
    let mut large = Vec::new();
    let mut small = Vec::new();
    for e in mesh.active_elements() {
        if mesh.fraction(e) >= gamma {
            large.push(e);
        } else {
            small.push(e);
        }
    }
    (large, small)
}

/// A boundary sub-segment lying in a single element, with a Gauss rule in arc-length parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPiece {
    pub element: usize,
    pub a: Point,
    pub b: Point,
    /// Outward unit normal in parametric coordinates.
    pub normal: Point,
    pub trimmed: bool,
}

/// Splits every boundary edge at grid lines; fitted edges lying on the grid boundary are included.
pub fn boundary_pieces(space: &TensorSplineSpace, region: &TrimRegion) -> Result<Vec<BoundaryPiece>> {
    let bp = [space.space(0).knots().breakpoints(), space.space(1).knots().breakpoints()];
    let mut out = Vec::new();
    for lp in region.loops() {
        for (a, b, trimmed) in lp.edges() {
            let d = [b[0] - a[0], b[1] - a[1]];
            let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
            if len == 0.0 {
                continue;
            }
            // region lies to the left of each loop edge, so the outward normal points right
            let normal = [d[1] / len, -d[0] / len];
            let mut ts = vec![0.0, 1.0];
            for dir in 0..2 {
                if d[dir] != 0.0 {
                    for &g in &bp[dir] {
                        let t = (g - a[dir]) / d[dir];
                        if t > 0.0 && t < 1.0 {
                            ts.push(t);
                        }
                    }
                }
            }
            ts.sort_by(f64::total_cmp);
            ts.dedup();
            for w in ts.windows(2) {
                let pa = [a[0] + w[0] * d[0], a[1] + w[0] * d[1]];
                let pb = [a[0] + w[1] * d[0], a[1] + w[1] * d[1]];
                let mid = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
                // nudge inward so that segments on grid lines belong to the element inside S
                let probe = [mid[0] - 1e-12 * normal[0], mid[1] - 1e-12 * normal[1]];
                let e = space.find_element(probe).map_err(|_| {
                    Error::Config(format!("boundary segment at ({}, {}) outside the background grid", mid[0], mid[1]))
                })?;
                out.push(BoundaryPiece { element: space.element_index(e), a: pa, b: pb, normal, trimmed });
            }
        }
    }
    Ok(out)
}

/// Polyline approximation of a circular arc from angle `t0` to `t1` (counterclockwise for `t1 > t0`)
/// with chord deviation at most `tol`. Endpoints are included.
pub fn flatten_arc(center: Point, r: f64, t0: f64, t1: f64, tol: f64) -> Vec<Point> {
    let sweep = (t1 - t0).abs();
    let max_step = 2.0 * (1.0 - tol / r).clamp(-1.0, 1.0).acos();
    let n = ((sweep / max_step).ceil() as usize).max(1);
    (0..=n)
        .map(|k| {
            let t = t0 + (t1 - t0) * k as f64 / n as f64;
            [center[0] + r * t.cos(), center[1] + r * t.sin()]
        })
        .collect()
}

fn snap(p: Point, xs: [f64; 2], ys: [f64; 2]) -> Point {
    let mut q = p;
    for x in xs {
        if (p[0] - x).abs() < 1e-12 {
            q[0] = x;
        }
    }
    for y in ys {
        if (p[1] - y).abs() < 1e-12 {
            q[1] = y;
        }
    }
    q
}

/// Counterclockwise rectangle `[x0, x1] × [y0, y1]` with corners rounded by radius `r`.
pub fn rounded_rectangle(x0: f64, x1: f64, y0: f64, y1: f64, r: f64, tol: f64) -> Vec<Point> {
    use std::f64::consts::{FRAC_PI_2, PI};
    let corners = [
        ([x1 - r, y0 + r], -FRAC_PI_2, 0.0),
        ([x1 - r, y1 - r], 0.0, FRAC_PI_2),
        ([x0 + r, y1 - r], FRAC_PI_2, PI),
        ([x0 + r, y0 + r], PI, 1.5 * PI),
    ];
    let mut pts = Vec::new();
    for (c, a, b) in corners {
        let mut arc = flatten_arc(c, r, a, b, tol);
        // snap the tangent points onto the straight sides
        let last = arc.len() - 1;
        arc[0] = snap(arc[0], [x0, x1], [y0, y1]);
        arc[last] = snap(arc[last], [x0, x1], [y0, y1]);
        pts.extend(arc);
    }
    dedup_polygon(pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize) -> TensorSplineSpace {
        TensorSplineSpace::uniform(2, [0.0, 0.0], [1.0, 1.0], [n, n]).unwrap()
    }

    /// ∫∫_P x^a y^b dA = ∮ x^(a+1) y^b / (a+1) dy, with edges integrated by high-order Gauss.
    fn green_monomial(poly: &[Point], a: i32, b: i32) -> f64 {
        let (t, w) = crate::quadrature::gauss_interval(12, 0.0, 1.0);
        let n = poly.len();
        let mut s = 0.0;
        for i in 0..n {
            let p = poly[i];
            let q = poly[(i + 1) % n];
            for (ti, wi) in t.iter().zip(&w) {
                let x = p[0] + ti * (q[0] - p[0]);
                let y = p[1] + ti * (q[1] - p[1]);
                s += wi * x.powi(a + 1) * y.powi(b) / (a as f64 + 1.0) * (q[1] - p[1]);
            }
        }
        s
    }

    fn random_convex(rng: &mut ChaCha8Rng, c: Point, r: f64) -> Vec<Point> {
        let k = rng.random_range(4..9);
        let mut angles: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        angles.sort_by(f64::total_cmp);
        angles.dedup();
        angles.iter().map(|t| [c[0] + r * t.cos(), c[1] + r * t.sin()]).collect()
    }

    #[test]
    fn untrimmed_square_is_all_inside() {
        let s = grid(4);
        let r = TrimRegion::rectangle([0.0, 0.0], [1.0, 1.0], [false; 4]).unwrap();
        let m = classify_elements(&s, &r, 3);
        assert_eq!(m.active_elements().len(), 16);
        for e in 0..16 {
            assert_eq!(m.status(e), ElementStatus::Inside);
            assert_eq!(m.fraction(e), 1.0);
        }
    }

    #[test]
    fn half_plane_trim_fraction() {
        let s = grid(4);
        let h = 0.25;
        let r = TrimRegion::rectangle([0.3 * h, 0.0], [1.0, 1.0], [false, false, false, true]).unwrap();
        let m = classify_elements(&s, &r, 3);
        for j in 0..4 {
            let e = m.element_index((0, j));
            assert_eq!(m.status(e), ElementStatus::Cut);
            assert_relative_eq!(m.fraction(e), 0.7, max_relative = 1e-12);
            assert_eq!(m.status(m.element_index((1, j))), ElementStatus::Inside);
        }
    }

    #[test]
    fn random_convex_area_additivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = grid(9);
        for _ in 0..20 {
            let radius = rng.random_range(0.1..0.45);
            let poly = random_convex(&mut rng, [0.5, 0.5], radius);
            let r = TrimRegion::convex(poly.clone()).unwrap();
            let m = classify_elements(&s, &r, 3);
            let total: f64 = (0..m.element_count()).map(|e| m.cut_area(e)).sum();
            assert_relative_eq!(total, polygon_area(&poly), max_relative = 1e-8);
            for e in 0..m.element_count() {
                assert_relative_eq!(m.rule(e).total_weight(), m.cut_area(e), max_relative = 1e-10, epsilon = 1e-300);
                assert!(m.rule(e).weights.iter().all(|&w| w > 0.0));
            }
        }
    }

    #[test]
    fn inside_rule_is_exact_for_tensor_monomials() {
        let r = TrimRegion::rectangle([0.0, 0.0], [1.0, 1.0], [false; 4]).unwrap();
        let rule = cut_quadrature([0.25, 0.5], [0.5, 0.75], &r, 3);
        let q = rule.integrate(|p| p[0] * p[0] * p[1] * p[1]);
        let e = (0.5f64.powi(3) - 0.25f64.powi(3)) / 3.0 * (0.75f64.powi(3) - 0.5f64.powi(3)) / 3.0;
        assert!((q - e).abs() <= 1e-12);
    }

    #[test]
    fn triangle_clip_weights() {
        let tri = vec![[0.1, 0.1], [0.9, 0.2], [0.3, 0.8]];
        let r = TrimRegion::convex(tri.clone()).unwrap();
        let rule = cut_quadrature([0.0, 0.0], [1.0, 1.0], &r, 4);
        assert_relative_eq!(rule.total_weight(), polygon_area(&tri), max_relative = 1e-12);
    }

    #[test]
    fn pentagon_monomials_match_green_oracle() {
        // element [0,1]^2 clipped by a half-plane at a corner gives a pentagon
        let region = TrimRegion::convex(vec![[-1.0, -1.0], [1.6, -1.0], [1.6, 0.2], [0.2, 1.6], [-1.0, 1.6]]).unwrap();
        let polys = region.clip_rect([0.0, 0.0], [1.0, 1.0]);
        assert_eq!(polys.len(), 1);
        assert_eq!(polys[0].len(), 5);
        for q in 2..=4 {
            let rule = rule_on_polygons(&polys, q);
            for a in 0..q as i32 {
                for b in 0..q as i32 {
                    let got = rule.integrate(|p| p[0].powi(a) * p[1].powi(b));
                    let want = green_monomial(&polys[0], a, b);
                    assert_relative_eq!(got, want, max_relative = 1e-8);
                }
            }
        }
    }

    #[test]
    fn gamma_tagging() {
        let s = grid(4);
        let h = 0.25;
        let r = TrimRegion::rectangle([0.95 * h, 0.0], [0.9 * h + 3.0 * h, 1.0], [true; 4]).unwrap();
        let m = classify_elements(&s, &r, 3);
        let (large, small) = tag_small_elements(&m, 0.1);
        for &e in &small {
            assert!(m.fraction(e) < 0.1);
        }
        assert_eq!(large.len() + small.len(), m.active_elements().len());
        let (large0, small0) = tag_small_elements(&m, 0.0);
        assert!(small0.is_empty());
        assert_eq!(large0.len(), m.active_elements().len());
        // boundary case: fraction exactly γ counts as large
        let r = TrimRegion::rectangle([0.0, 0.0], [0.5, 1.0], [false; 4]).unwrap();
        let s = TensorSplineSpace::uniform(2, [0.0, 0.0], [1.0, 1.0], [1, 1]).unwrap();
        let m = classify_elements(&s, &r, 3);
        let (large, _) = tag_small_elements(&m, 0.5);
        assert_eq!(large, vec![0]);
    }

    #[test]
    fn shrinking_delta_never_makes_cut_inside() {
        let s = grid(8);
        let h = 1.0 / 8.0;
        let mut prev: Option<Vec<ElementStatus>> = None;
        for eps in [0.4, 0.1, 1e-2, 1e-4, 1e-8] {
            let r =
                TrimRegion::rectangle([h - eps * h, h - eps * h], [1.0 - h + eps * h, 1.0 - h + eps * h], [true; 4])
                    .unwrap();
            let m = classify_elements(&s, &r, 3);
            let st: Vec<_> = (0..m.element_count()).map(|e| m.status(e)).collect();
            if let Some(p) = &prev {
                for (a, b) in p.iter().zip(&st) {
                    if *a == ElementStatus::Cut {
                        assert_ne!(*b, ElementStatus::Inside);
                    }
                }
            }
            prev = Some(st);
        }
    }

    #[test]
    fn hole_region_areas() {
        let hole = rounded_rectangle(0.35, 0.65, 0.3, 0.7, 0.08, 1e-4 * 0.08);
        let r = TrimRegion::rectangle_with_hole([0.0, 0.0], [1.0, 1.0], [false; 4], &hole).unwrap();
        assert_relative_eq!(r.area(), r.pieces_area(), max_relative = 1e-12);
        let exact = 1.0 - (0.3 * 0.4 - (4.0 - std::f64::consts::PI) * 0.08 * 0.08);
        assert_relative_eq!(r.area(), exact, max_relative = 1e-4);
        let s = grid(10);
        let m = classify_elements(&s, &r, 3);
        let total: f64 = (0..m.element_count()).map(|e| m.cut_area(e)).sum();
        assert_relative_eq!(total, r.area(), max_relative = 1e-8);
        assert!(!r.contains([0.5, 0.5]));
        assert!(r.contains([0.1, 0.5]));
    }

    #[test]
    fn arc_flattening_tolerance() {
        let r = 0.08;
        let tol = 1e-4 * r;
        let pts = flatten_arc([0.0, 0.0], r, 0.0, std::f64::consts::FRAC_PI_2, tol);
        for w in pts.windows(2) {
            let mid = [0.5 * (w[0][0] + w[1][0]), 0.5 * (w[0][1] + w[1][1])];
            let dev = r - (mid[0] * mid[0] + mid[1] * mid[1]).sqrt();
            assert!(dev <= tol * (1.0 + 1e-9));
        }
    }

    #[test]
    fn boundary_pieces_cover_perimeter() {
        let s = grid(4);
        let r = TrimRegion::rectangle([0.01, 0.0], [1.0, 0.99], [false, false, true, true]).unwrap();
        let pieces = boundary_pieces(&s, &r).unwrap();
        let len: f64 = pieces.iter().map(|p| ((p.b[0] - p.a[0]).powi(2) + (p.b[1] - p.a[1]).powi(2)).sqrt()).sum();
        assert_relative_eq!(len, 2.0 * (0.99 + 0.99), max_relative = 1e-14);
        let trimmed: f64 = pieces
            .iter()
            .filter(|p| p.trimmed)
            .map(|p| ((p.b[0] - p.a[0]).powi(2) + (p.b[1] - p.a[1]).powi(2)).sqrt())
            .sum();
        assert_relative_eq!(trimmed, 2.0 * 0.99, max_relative = 1e-14);
        let left = pieces.iter().find(|p| p.a[0] == 0.01 && p.b[0] == 0.01).unwrap();
        assert_eq!(left.normal, [-1.0, 0.0]);
    }
}
