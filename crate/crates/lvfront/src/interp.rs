//! Natural cubic spline on a uniform grid.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformSpline {
    pub x0: f64,
    pub h: f64,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl UniformSpline {
    pub fn new(x0: f64, h: f64, y: Vec<f64>) -> Self {
        let n = y.len();
        assert!(n >= 3, "spline needs three points");
        // second derivatives, natural ends: m_{j−1} + 4 m_j + m_{j+1} = 6 Δ²y_j / h²
        let k = n - 2;
        let mut rhs: Vec<f64> = (1..n - 1)
            .map(|j| 6.0 * (y[j - 1] - 2.0 * y[j] + y[j + 1]) / (h * h))
            .collect();
        let mut cp = vec![0.0; k];
        cp[0] = 0.25;
        rhs[0] /= 4.0;
        for i in 1..k {
            let den = 4.0 - cp[i - 1];
            cp[i] = 1.0 / den;
            rhs[i] = (rhs[i] - rhs[i - 1]) / den;
        }
        for i in (0..k - 1).rev() {
            rhs[i] -= cp[i] * rhs[i + 1];
        }
        let mut m = vec![0.0; n];
        m[1..n - 1].copy_from_slice(&rhs);
        Self { x0, h, y, m }
    }

    /// Value, clamped to the end values outside the grid.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.y.len();
        let u = (x - self.x0) / self.h;
        if u <= 0.0 {
            return self.y[0];
        }
        if u >= (n - 1) as f64 {
            return self.y[n - 1];
        }
        let j = (u.floor() as usize).min(n - 2);
        let b = u - j as f64;
        let a = 1.0 - b;
        let h2 = self.h * self.h / 6.0;
        a * self.y[j] + b * self.y[j + 1] + ((a * a * a - a) * self.m[j] + (b * b * b - b) * self.m[j + 1]) * h2
    }
}
