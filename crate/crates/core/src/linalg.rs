//! Row-major 2×2 matrices acting on `(j, j′)` coordinates.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn from_columns(a: [f64; 2], b: [f64; 2]) -> Self {
        Mat2([[a[0], b[0]], [a[1], b[1]]])
    }

    pub fn column(&self, k: usize) -> [f64; 2] {
        [self.0[0][k], self.0[1][k]]
    }

    pub fn det(&self) -> f64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn apply(&self, x: [f64; 2]) -> [f64; 2] {
        [
            self.0[0][0] * x[0] + self.0[0][1] * x[1],
            self.0[1][0] * x[0] + self.0[1][1] * x[1],
        ]
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        let a = &self.0;
        let b = &o.0;
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        let a = &self.0;
        Some(Mat2([
            [a[1][1] / d, -a[0][1] / d],
            [-a[1][0] / d, a[0][0] / d],
        ]))
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        let a = &self.0;
        Mat2([[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]])
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, o: &Mat2) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                m = m.max((self.0[i][j] - o.0[i][j]).abs());
            }
        }
        m
    }

    /// Spectral norm.
    pub fn norm(&self) -> f64 {
        let a = &self.0;
        let f = a.iter().flatten().map(|x| x * x).sum::<f64>();
        let d = self.det();
        (0.5 * (f + (f * f - 4.0 * d * d).max(0.0).sqrt())).sqrt()
    }
}

pub fn norm2(x: [f64; 2]) -> f64 {
    x[0].hypot(x[1])
}

pub fn normalize(x: [f64; 2]) -> [f64; 2] {
    let n = norm2(x);
    [x[0] / n, x[1] / n]
}
