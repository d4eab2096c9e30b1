//! Second-order forward-mode differentiation in two variables.
//!
//! A [`Jet`] carries a value, its gradient and its Hessian; arithmetic and the
//! elementary functions propagate all three exactly.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d: [f64; 2],
    pub h: [[f64; 2]; 2],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        Self { v, d: [0.0; 2], h: [[0.0; 2]; 2] }
    }

    /// The coordinate function `x_i` evaluated at `value`.
    pub fn variable(value: f64, i: usize) -> Self {
        let mut d = [0.0; 2];
        d[i] = 1.0;
        Self { v: value, d, h: [[0.0; 2]; 2] }
    }

    pub fn vars(x: [f64; 2]) -> [Jet; 2] {
        [Jet::variable(x[0], 0), Jet::variable(x[1], 1)]
    }

    /// Composition `f ∘ self` given `f, f', f''` at `self.v`.
    pub fn chain(&self, f: f64, df: f64, ddf: f64) -> Self {
        let mut h = [[0.0; 2]; 2];
        for (i, row) in h.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = df * self.h[i][j] + ddf * self.d[i] * self.d[j];
            }
        }
        Self { v: f, d: [df * self.d[0], df * self.d[1]], h }
    }

    pub fn exp(&self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn powi(&self, n: i32) -> Self {
        let x = self.v;
        let nf = n as f64;
        let (f, df, ddf) = match n {
            0 => (1.0, 0.0, 0.0),
            1 => (x, 1.0, 0.0),
            _ => (x.powi(n), nf * x.powi(n - 1), nf * (nf - 1.0) * x.powi(n - 2)),
        };
        self.chain(f, df, ddf)
    }

    /// `self^a` for a positive base.
    pub fn powf(&self, a: f64) -> Self {
        let x = self.v;
        self.chain(x.powf(a), a * x.powf(a - 1.0), a * (a - 1.0) * x.powf(a - 2.0))
    }

    pub fn sqrt(&self) -> Self {
        self.powf(0.5)
    }

    pub fn recip(&self) -> Self {
        let x = self.v;
        self.chain(1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x))
    }
}

impl From<f64> for Jet {
    fn from(v: f64) -> Self {
        Jet::constant(v)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut r = self;
        r.v += o.v;
        for i in 0..2 {
            r.d[i] += o.d[i];
            for j in 0..2 {
                r.h[i][j] += o.h[i][j];
            }
        }
        r
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self * -1.0
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut h = [[0.0; 2]; 2];
        for (i, row) in h.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = self.h[i][j] * o.v + self.v * o.h[i][j] + self.d[i] * o.d[j] + self.d[j] * o.d[i];
            }
        }
        Jet { v: self.v * o.v, d: [self.d[0] * o.v + self.v * o.d[0], self.d[1] * o.v + self.v * o.d[1]], h }
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, o: f64) -> Jet {
        Jet { v: self.v + o, ..self }
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(self, o: f64) -> Jet {
        Jet { v: self.v - o, ..self }
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, s: f64) -> Jet {
        Jet {
            v: self.v * s,
            d: [self.d[0] * s, self.d[1] * s],
            h: [[self.h[0][0] * s, self.h[0][1] * s], [self.h[1][0] * s, self.h[1][1] * s]],
        }
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, s: f64) -> Jet {
        self * (1.0 / s)
    }
}

impl Add<Jet> for f64 {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        o + self
    }
}

impl Sub<Jet> for f64 {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        -o + self
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        o * self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn f(x: [Jet; 2]) -> Jet {
        let [a, b] = x;
        (a * b).sin() * (a - 0.3 * b).exp() + (a * a + b * b + 1.0).powf(1.0 / 6.0) / (2.0 + b.cos())
    }

    fn fv(x: [f64; 2]) -> f64 {
        f(Jet::vars(x)).v
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let x = [0.37, -0.81];
        let j = f(Jet::vars(x));
        let h = 1e-5;
        for i in 0..2 {
            let mut p = x;
            let mut m = x;
            p[i] += h;
            m[i] -= h;
            assert_relative_eq!(j.d[i], (fv(p) - fv(m)) / (2.0 * h), max_relative = 1e-8);
            let gp = f(Jet::vars(p)).d;
            let gm = f(Jet::vars(m)).d;
            for k in 0..2 {
                assert_relative_eq!(j.h[i][k], (gp[k] - gm[k]) / (2.0 * h), max_relative = 1e-7, epsilon = 1e-9);
            }
        }
        assert_relative_eq!(j.h[0][1], j.h[1][0], max_relative = 1e-14);
    }

    #[test]
    fn polynomial_rules() {
        let [x, y] = Jet::vars([2.0, 3.0]);
        let p = x.powi(3) * y - 2.0 * y.powi(2);
        assert_eq!(p.v, 24.0 - 18.0);
        assert_eq!(p.d, [36.0, 8.0 - 12.0]);
        assert_eq!(p.h, [[36.0, 12.0], [12.0, -4.0]]);
        assert_eq!(x.powi(0).v, 1.0);
        assert_relative_eq!(x.sqrt().d[0], 0.5 / 2f64.sqrt());
    }
}
