//! Cubic interpolating spline with not-a-knot end conditions.

use faer::linalg::solvers::Solve;
use faer::Mat;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl CubicSpline {
    /// `x` strictly increasing, at least four knots.
    pub fn not_a_knot(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n != y.len() {
            return Err(Error::InvalidInput("spline abscissae and ordinates differ in length".into()));
        }
        if n < 4 {
            return Err(Error::InvalidInput(format!("not-a-knot spline needs >= 4 knots, got {n}")));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("spline knots must be strictly increasing".into()));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let mut a = Mat::<f64>::zeros(n, n);
        let mut rhs = Mat::<f64>::zeros(n, 1);
        // Third derivative continuous across the second and penultimate knots.
        a[(0, 0)] = h[1];
        a[(0, 1)] = -(h[0] + h[1]);
        a[(0, 2)] = h[0];
        for i in 1..n - 1 {
            a[(i, i - 1)] = h[i - 1];
            a[(i, i)] = 2.0 * (h[i - 1] + h[i]);
            a[(i, i + 1)] = h[i];
            rhs[(i, 0)] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
        }
        a[(n - 1, n - 3)] = h[n - 2];
        a[(n - 1, n - 2)] = -(h[n - 3] + h[n - 2]);
        a[(n - 1, n - 1)] = h[n - 3];
        a.partial_piv_lu().solve_in_place(rhs.as_mut());
        let m: Vec<f64> = (0..n).map(|i| rhs[(i, 0)]).collect();
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("singular spline system".into()));
        }
        Ok(Self { x, y, m })
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.x.len();
        match self.x.binary_search_by(|v| v.total_cmp(&t)) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    /// Value and first two derivatives at `t`; the end cubics extend past
    /// the knots.
    pub fn eval_derivs(&self, t: f64) -> (f64, f64, f64) {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let (y0, y1) = (self.y[i], self.y[i + 1]);
        let v = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d1 = (y1 - y0) / h - (3.0 * a * a - 1.0) / 6.0 * h * m0 + (3.0 * b * b - 1.0) / 6.0 * h * m1;
        let d2 = a * m0 + b * m1;
        (v, d1, d2)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_derivs(t).0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_cubics_exactly() {
        let f = |x: f64| 0.3 * x * x * x - 1.2 * x * x + 0.5 * x + 2.0;
        let x: Vec<f64> = [0.0, 0.4, 1.1, 1.5, 2.3, 3.0].to_vec();
        let y: Vec<f64> = x.iter().map(|&v| f(v)).collect();
        let s = CubicSpline::not_a_knot(x, y).unwrap();
        for t in [0.1, 0.77, 1.9, 2.9] {
            let (v, d1, d2) = s.eval_derivs(t);
            assert!((v - f(t)).abs() < 1e-12);
            assert!((d1 - (0.9 * t * t - 2.4 * t + 0.5)).abs() < 1e-11);
            assert!((d2 - (1.8 * t - 2.4)).abs() < 1e-10);
        }
    }

    #[test]
    fn interpolates_knots() {
        let x: Vec<f64> = (0..10).map(|k| k as f64 * 0.3).collect();
        let y: Vec<f64> = x.iter().map(|v| v.sin()).collect();
        let s = CubicSpline::not_a_knot(x.clone(), y.clone()).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((s.eval(*a) - b).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(CubicSpline::not_a_knot(vec![0.0, 1.0, 2.0], vec![0.0; 3]).is_err());
        assert!(CubicSpline::not_a_knot(vec![0.0, 1.0, 1.0, 2.0], vec![0.0; 4]).is_err());
    }
}
