//! Gauss-Legendre rules on intervals, rectangles, triangles and convex polygons.

/// Gauss-Legendre nodes and weights on `[-1, 1]` with `n` points.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss rule needs at least one point");
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Gauss rule mapped to `[a, b]`.
pub fn gauss_interval(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (x.iter().map(|&t| mid + half * t).collect(), w.iter().map(|&wi| wi * half).collect())
}

/// Quadrature points and weights in the plane.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Rule2D {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl Rule2D {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: impl Fn([f64; 2]) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&p, &w)| w * f(p)).sum()
    }

    pub fn extend(&mut self, other: Rule2D) {
        self.points.extend(other.points);
        self.weights.extend(other.weights);
    }
}

/// Tensor Gauss rule with `n` points per direction on the rectangle `[lo, hi]`.
pub fn tensor_rule(n: usize, lo: [f64; 2], hi: [f64; 2]) -> Rule2D {
    let (x1, w1) = gauss_interval(n, lo[0], hi[0]);
    let (x2, w2) = gauss_interval(n, lo[1], hi[1]);
    let mut r = Rule2D::default();
    for (a, wa) in x1.iter().zip(&w1) {
        for (b, wb) in x2.iter().zip(&w2) {
            r.points.push([*a, *b]);
            r.weights.push(wa * wb);
        }
    }
    r
}

/// Collapsed (Duffy) Gauss rule on a triangle; exact for total degree `2n-2`.
/// Uses `n+1` points in the collapsed direction so the Jacobian factor is integrated exactly.
pub fn triangle_rule(n: usize, v: [[f64; 2]; 3]) -> Rule2D {
    let (s, ws) = gauss_interval(n + 1, 0.0, 1.0);
    let (t, wt) = gauss_interval(n, 0.0, 1.0);
    let e1 = [v[1][0] - v[0][0], v[1][1] - v[0][1]];
    let e2 = [v[2][0] - v[0][0], v[2][1] - v[0][1]];
    let det = (e1[0] * e2[1] - e1[1] * e2[0]).abs();
    let mut r = Rule2D::default();
    for (si, wsi) in s.iter().zip(&ws) {
        for (ti, wti) in t.iter().zip(&wt) {
            // (s, t) in unit square -> (x, y) = (s(1-t), s t) in reference triangle
            let x = si * (1.0 - ti);
            let y = si * ti;
            r.points.push([v[0][0] + x * e1[0] + y * e2[0], v[0][1] + x * e1[1] + y * e2[1]]);
            r.weights.push(wsi * wti * si * det);
        }
    }
    r
}

/// Signed shoelace area of a closed polygon (vertices not repeated).
pub fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    // relative to the first vertex to avoid cancellation on small polygons far from the origin
    let o = poly[0];
    let mut s = 0.0;
    for i in 1..n - 1 {
        let a = [poly[i][0] - o[0], poly[i][1] - o[1]];
        let b = [poly[i + 1][0] - o[0], poly[i + 1][1] - o[1]];
        s += a[0] * b[1] - a[1] * b[0];
    }
    0.5 * s
}

/// Fan-triangulated rule on a convex polygon.
pub fn convex_polygon_rule(n: usize, poly: &[[f64; 2]]) -> Rule2D {
    let mut r = Rule2D::default();
    if poly.len() < 3 {
        return r;
    }
    for k in 1..poly.len() - 1 {
        let tri = [poly[0], poly[k], poly[k + 1]];
        if polygon_area(&tri).abs() <= 0.0 {
            continue;
        }
        r.extend(triangle_rule(n, tri));
    }
    r
}
