use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{grid_size, AnalyticFunction, LOWER_SAMPLES};
use crate::arithmetic::Frequency;
use crate::error::Result;
use crate::linalg::{norm_op_complex, Mat2};

/// A 2x2 matrix of analytic functions `[[a, b], [c, d]]` sharing `h` and `L`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixFunction {
    pub a: AnalyticFunction,
    pub b: AnalyticFunction,
    pub c: AnalyticFunction,
    pub d: AnalyticFunction,
}

impl MatrixFunction {
    pub fn from_entries(
        a: AnalyticFunction,
        b: AnalyticFunction,
        c: AnalyticFunction,
        d: AnalyticFunction,
    ) -> Self {
        MatrixFunction { a, b, c, d }
    }

    pub fn constant(m: Mat2, degree: usize, h: f64) -> Self {
        let k = |v| AnalyticFunction::constant(v, degree, h);
        MatrixFunction { a: k(m.a), b: k(m.b), c: k(m.c), d: k(m.d) }
    }

    pub fn identity(degree: usize, h: f64) -> Self {
        Self::constant(Mat2::IDENTITY, degree, h)
    }

    /// `x -> R_{theta(x)}`, by collocation.
    pub fn rotation(theta: &AnalyticFunction) -> Self {
        let n = grid_size(theta.degree());
        let t = theta.sample(n);
        Self::collocate(n, theta.degree(), theta.h, 1.0, |j| Mat2::rotation(t[j]))
    }

    /// Fits a matrix function to values `f(j)` at `x_j = j / n`.
    pub fn collocate(n: usize, degree: usize, h: f64, noise_scale: f64, f: impl Fn(usize) -> Mat2) -> Self {
        let vals: Vec<Mat2> = (0..n).map(f).collect();
        Self::from_samples(&vals, degree, h, noise_scale)
    }

    pub fn from_samples(vals: &[Mat2], degree: usize, h: f64, noise_scale: f64) -> Self {
        let pick = |g: fn(&Mat2) -> f64| {
            let v: Vec<f64> = vals.iter().map(g).collect();
            AnalyticFunction::from_samples(&v, degree, h, noise_scale)
        };
        MatrixFunction { a: pick(|m| m.a), b: pick(|m| m.b), c: pick(|m| m.c), d: pick(|m| m.d) }
    }

    pub fn h(&self) -> f64 {
        self.a.h.min(self.b.h).min(self.c.h).min(self.d.h)
    }

    pub fn degree(&self) -> usize {
        self.a.degree()
    }

    pub fn entries(&self) -> [&AnalyticFunction; 4] {
        [&self.a, &self.b, &self.c, &self.d]
    }

    pub fn map_entries(&self, f: impl Fn(&AnalyticFunction) -> AnalyticFunction) -> Self {
        MatrixFunction { a: f(&self.a), b: f(&self.b), c: f(&self.c), d: f(&self.d) }
    }

    pub fn with_h(&self, h: f64) -> Self {
        self.map_entries(|e| e.clone().with_h(h))
    }

    pub fn with_degree(&self, degree: usize) -> Self {
        self.map_entries(|e| e.with_degree(degree))
    }

    pub fn add(&self, o: &Self) -> Self {
        MatrixFunction { a: &self.a + &o.a, b: &self.b + &o.b, c: &self.c + &o.c, d: &self.d + &o.d }
    }

    pub fn sub(&self, o: &Self) -> Self {
        MatrixFunction { a: &self.a - &o.a, b: &self.b - &o.b, c: &self.c - &o.c, d: &self.d - &o.d }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map_entries(|e| e.scale(s))
    }

    /// `self - id`.
    pub fn minus_identity(&self) -> Self {
        let mut out = self.clone();
        out.a = out.a.add_const(-1.0);
        out.d = out.d.add_const(-1.0);
        out
    }

    /// Matrix product by coefficient convolution.
    pub fn mul(&self, o: &Self) -> Self {
        MatrixFunction {
            a: &(&self.a * &o.a) + &(&self.b * &o.c),
            b: &(&self.a * &o.b) + &(&self.b * &o.d),
            c: &(&self.c * &o.a) + &(&self.d * &o.c),
            d: &(&self.c * &o.b) + &(&self.d * &o.d),
        }
    }

    /// Inverse of an SL(2)-valued function: `[[d, -b], [-c, a]]`.
    pub fn inv_sl2(&self) -> Self {
        MatrixFunction { a: self.d.clone(), b: -&self.b, c: -&self.c, d: self.a.clone() }
    }

    pub fn det(&self) -> AnalyticFunction {
        &(&self.a * &self.d) - &(&self.b * &self.c)
    }

    pub fn shift(&self, beta: f64) -> Self {
        self.map_entries(|e| e.shift(beta))
    }

    pub fn shift_by(&self, alpha: &Frequency, n: i64) -> Self {
        self.map_entries(|e| e.shift_by(alpha, n))
    }

    pub fn eval(&self, x: f64) -> Mat2 {
        let p = super::powers(x, self.degree().max(self.b.degree()).max(self.c.degree()).max(self.d.degree()));
        Mat2::new(
            self.a.eval_real_with(&p),
            self.b.eval_real_with(&p),
            self.c.eval_real_with(&p),
            self.d.eval_real_with(&p),
        )
    }

    pub fn sample(&self, n: usize) -> Vec<Mat2> {
        let [a, b, c, d] = self.entries().map(|e| e.sample(n));
        (0..n).map(|j| Mat2::new(a[j], b[j], c[j], d[j])).collect()
    }

    /// Certified bound `sqrt(sum_entries N^+(h')^2)` (dominates the operator
    /// norm pointwise).
    pub fn norm_upper(&self, h_prime: f64) -> Result<f64> {
        let mut s = 0.0;
        for e in self.entries() {
            let n = e.norm_upper(h_prime)?;
            s += n * n;
        }
        Ok(s.sqrt())
    }

    pub(crate) fn upper_unchecked(&self, h_prime: f64) -> f64 {
        self.entries()
            .iter()
            .map(|e| e.upper_unchecked(h_prime).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// `(upper, lower)`; `lower` is the largest operator norm seen on the
    /// boundary lines `Im z = +-h'`.
    pub fn norm_strip(&self, h_prime: f64) -> Result<(f64, f64)> {
        let upper = self.norm_upper(h_prime)?;
        let mut lower: f64 = 0.0;
        for y in [h_prime, -h_prime] {
            let [a, b, c, d] = self.entries().map(|e| e.sample_line(LOWER_SAMPLES, y));
            for j in 0..LOWER_SAMPLES {
                lower = lower.max(norm_op_complex(a[j], b[j], c[j], d[j]));
            }
        }
        Ok((upper, lower.min(upper)))
    }

    /// Largest pointwise operator norm of `self - other` on a real grid.
    pub fn grid_distance(&self, other: &Self, n: usize) -> f64 {
        let x = self.sample(n);
        let y = other.sample(n);
        x.iter().zip(&y).map(|(p, q)| (*p - *q).norm_op()).fold(0.0, f64::max)
    }

    pub fn symmetry_defect(&self) -> f64 {
        self.entries().iter().map(|e| e.symmetry_defect()).fold(0.0, f64::max)
    }

    /// Largest imaginary part of any entry on a real grid.
    pub fn max_imag_on_axis(&self, n: usize) -> f64 {
        self.entries().iter().map(|e| e.max_imag_on_axis(n)).fold(0.0, f64::max)
    }

    /// Complex entries at `x + i y`.
    pub fn eval_complex(&self, z: Complex64) -> [Complex64; 4] {
        self.entries().map(|e| e.eval(z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_of_constant() {
        let theta = AnalyticFunction::constant(0.1, 4, 0.2);
        let r = MatrixFunction::rotation(&theta);
        let m = r.eval(0.37);
        assert!((m - Mat2::rotation(0.1)).max_abs() < 1e-15);
        // only the mean survives
        assert_eq!(r.a.tail, 0.0);
        assert!(r.a.coeff(1).norm() == 0.0);
    }

    #[test]
    fn rotation_product_adds_angles() {
        let t1 = AnalyticFunction::trig(16, 0.05, &[(0, 0.2, 0.0), (1, 0.01, 0.0)]);
        let t2 = AnalyticFunction::trig(16, 0.05, &[(0, 0.05, 0.0), (2, 0.0, 0.02)]);
        let lhs = MatrixFunction::rotation(&t1).mul(&MatrixFunction::rotation(&t2));
        let rhs = MatrixFunction::rotation(&(&t1 + &t2));
        assert!(lhs.grid_distance(&rhs, 64) < 1e-13);
        let det = lhs.det();
        let defect = det.add_const(-1.0).norm_upper(0.05).unwrap();
        assert!(defect < 1e-11, "det defect {defect:e}");
    }

    #[test]
    fn inverse_of_sl2() {
        let lam = AnalyticFunction::trig(8, 0.2, &[(1, 0.4, 0.0)]);
        let one = AnalyticFunction::constant(1.0, 8, 0.2);
        let zero = AnalyticFunction::zero(8, 0.2);
        let m = MatrixFunction::from_entries(lam.scale(-1.0), one.scale(-1.0), one, zero);
        let p = m.mul(&m.inv_sl2());
        assert!(p.grid_distance(&MatrixFunction::identity(8, 0.2), 64) < 1e-14);
    }

    #[test]
    fn strip_norm_bounds() {
        let lam = AnalyticFunction::trig(8, 0.2, &[(1, 0.4, 0.3)]);
        let m = MatrixFunction::from_entries(lam.clone(), lam.scale(0.5), lam.scale(-1.0), lam);
        let (u, l) = m.norm_strip(0.15).unwrap();
        assert!(l <= u && l > 0.0);
    }
}
