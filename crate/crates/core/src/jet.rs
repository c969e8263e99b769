//! Second-order forward-mode derivatives in two variables.
//!
//! Every chart metric in this crate is written once as a function of
//! [`Jet2`] coordinates; first and second partial derivatives of the metric
//! entries then come out exactly (up to roundoff), which is what the
//! Christoffel symbols and the Brioschi curvature formula consume.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// A value together with its gradient and Hessian with respect to two
/// independent variables. The Hessian is stored as `[xx, xy, yy]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet2 {
    pub v: f64,
    pub g: [f64; 2],
    pub h: [f64; 3],
}

impl Jet2 {
    pub const fn constant(v: f64) -> Self {
        Self {
            v,
            g: [0.0; 2],
            h: [0.0; 3],
        }
    }

    /// The independent variable `axis` (0 or 1) at value `v`.
    pub fn var(v: f64, axis: usize) -> Self {
        let mut g = [0.0; 2];
        g[axis] = 1.0;
        Self { v, g, h: [0.0; 3] }
    }

    /// Chain rule: `f ∘ self` given `[f, f', f'']` evaluated at `self.v`.
    #[inline]
    pub fn compose(self, f: [f64; 3]) -> Self {
        let [f0, f1, f2] = f;
        let g = self.g;
        Self {
            v: f0,
            g: [f1 * g[0], f1 * g[1]],
            h: [
                f2 * g[0] * g[0] + f1 * self.h[0],
                f2 * g[0] * g[1] + f1 * self.h[1],
                f2 * g[1] * g[1] + f1 * self.h[2],
            ],
        }
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.compose([s, c, -s])
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.compose([c, -s, -c])
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.compose([e, e, e])
    }

    pub fn sqrt(self) -> Self {
        let r = self.v.sqrt();
        self.compose([r, 0.5 / r, -0.25 / (r * self.v)])
    }

    pub fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.compose([r, -r * r, 2.0 * r * r * r])
    }

    pub fn square(self) -> Self {
        self * self
    }

    /// Second partial `∂_a ∂_b` (a, b in {0, 1}).
    #[inline]
    pub fn hess(&self, a: usize, b: usize) -> f64 {
        match (a, b) {
            (0, 0) => self.h[0],
            (1, 1) => self.h[2],
            _ => self.h[1],
        }
    }
}

impl From<f64> for Jet2 {
    fn from(v: f64) -> Self {
        Self::constant(v)
    }
}

impl Add for Jet2 {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self {
            v: self.v + o.v,
            g: [self.g[0] + o.g[0], self.g[1] + o.g[1]],
            h: [self.h[0] + o.h[0], self.h[1] + o.h[1], self.h[2] + o.h[2]],
        }
    }
}

impl Sub for Jet2 {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self {
            v: self.v - o.v,
            g: [self.g[0] - o.g[0], self.g[1] - o.g[1]],
            h: [self.h[0] - o.h[0], self.h[1] - o.h[1], self.h[2] - o.h[2]],
        }
    }
}

impl Mul for Jet2 {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        let (a, b) = (self, o);
        Self {
            v: a.v * b.v,
            g: [a.g[0] * b.v + a.v * b.g[0], a.g[1] * b.v + a.v * b.g[1]],
            h: [
                a.h[0] * b.v + 2.0 * a.g[0] * b.g[0] + a.v * b.h[0],
                a.h[1] * b.v + a.g[0] * b.g[1] + a.g[1] * b.g[0] + a.v * b.h[1],
                a.h[2] * b.v + 2.0 * a.g[1] * b.g[1] + a.v * b.h[2],
            ],
        }
    }
}

impl Div for Jet2 {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl Neg for Jet2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            v: -self.v,
            g: [-self.g[0], -self.g[1]],
            h: [-self.h[0], -self.h[1], -self.h[2]],
        }
    }
}

impl Add<f64> for Jet2 {
    type Output = Self;
    fn add(mut self, o: f64) -> Self {
        self.v += o;
        self
    }
}

impl Sub<f64> for Jet2 {
    type Output = Self;
    fn sub(mut self, o: f64) -> Self {
        self.v -= o;
        self
    }
}

impl Mul<f64> for Jet2 {
    type Output = Self;
    #[inline]
    fn mul(self, o: f64) -> Self {
        Self {
            v: self.v * o,
            g: [self.g[0] * o, self.g[1] * o],
            h: [self.h[0] * o, self.h[1] * o, self.h[2] * o],
        }
    }
}

impl Mul<Jet2> for f64 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        o * self
    }
}

impl Div<f64> for Jet2 {
    type Output = Self;
    fn div(self, o: f64) -> Self {
        self * (1.0 / o)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(f: impl Fn(f64, f64) -> f64, jet: Jet2, x: f64, y: f64) {
        let h = 1e-4;
        let gx = (f(x + h, y) - f(x - h, y)) / (2.0 * h);
        let gy = (f(x, y + h) - f(x, y - h)) / (2.0 * h);
        let hxx = (f(x + h, y) - 2.0 * f(x, y) + f(x - h, y)) / (h * h);
        let hyy = (f(x, y + h) - 2.0 * f(x, y) + f(x, y - h)) / (h * h);
        let hxy =
            (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4.0 * h * h);
        assert!((jet.v - f(x, y)).abs() < 1e-12);
        assert!((jet.g[0] - gx).abs() < 1e-6, "{} vs {gx}", jet.g[0]);
        assert!((jet.g[1] - gy).abs() < 1e-6);
        assert!((jet.h[0] - hxx).abs() < 1e-4, "{} vs {hxx}", jet.h[0]);
        assert!((jet.h[1] - hxy).abs() < 1e-4);
        assert!((jet.h[2] - hyy).abs() < 1e-4);
    }

    #[test]
    fn composite_expression_matches_finite_differences() {
        let (x, y) = (0.7, -0.4);
        let f = |x: f64, y: f64| {
            (x * y).sin() * (1.0 + x * x).sqrt() / (2.0 + y.cos()) + (0.3 * x).exp()
        };
        let (jx, jy) = (Jet2::var(x, 0), Jet2::var(y, 1));
        let j = (jx * jy).sin() * (jx * jx + 1.0).sqrt() / (jy.cos() + 2.0) + (jx * 0.3).exp();
        fd_check(f, j, x, y);
    }

    #[test]
    fn constants_have_no_derivatives() {
        let c = Jet2::constant(3.0) * Jet2::var(1.0, 0).square();
        assert_eq!(c.g, [6.0, 0.0]);
        assert_eq!(c.h, [6.0, 0.0, 0.0]);
    }
}
