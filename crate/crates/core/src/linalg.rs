//! Real 2x2 matrices and the closed-form functional calculus on SL(2,R)
//! used pointwise on sample grids.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// `[[a, b], [c, d]]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };
    pub const ZERO: Mat2 = Mat2 { a: 0.0, b: 0.0, c: 0.0, d: 0.0 };
    /// `J = [[0, 1], [-1, 0]]`.
    pub const J: Mat2 = Mat2 { a: 0.0, b: 1.0, c: -1.0, d: 0.0 };

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { a, b, c, d }
    }

    /// `R_theta` with `theta` in turns.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = (2.0 * PI * theta).sin_cos();
        Mat2 { a: c, b: -s, c: s, d: c }
    }

    pub fn diag(x: f64, y: f64) -> Self {
        Mat2 { a: x, b: 0.0, c: 0.0, d: y }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn transpose(&self) -> Self {
        Mat2 { a: self.a, b: self.c, c: self.b, d: self.d }
    }

    pub fn scale(&self, s: f64) -> Self {
        Mat2 { a: s * self.a, b: s * self.b, c: s * self.c, d: s * self.d }
    }

    pub fn inv(&self) -> Self {
        let det = self.det();
        Mat2 { a: self.d / det, b: -self.b / det, c: -self.c / det, d: self.a / det }
    }

    /// Inverse assuming `det = 1`.
    pub fn inv_sl2(&self) -> Self {
        Mat2 { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    pub fn norm_frob(&self) -> f64 {
        (self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d).sqrt()
    }

    /// Largest singular value: half the sum of the norms of the conformal
    /// and anticonformal parts.
    pub fn norm_op(&self) -> f64 {
        let s = (self.a + self.d).hypot(self.c - self.b);
        let t = (self.a - self.d).hypot(self.b + self.c);
        0.5 * (s + t)
    }

    pub fn max_abs(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs()).max(self.d.abs())
    }

    /// Angle (turns, in `(-1/2, 1/2]`) of the rotation factor `U` in the
    /// polar decomposition `M = U P`, for `det M > 0`.
    pub fn polar_angle(&self) -> f64 {
        (self.c - self.b).atan2(self.a + self.d) / (2.0 * PI)
    }

    /// Symmetric traceless part `((a-d)/2, (b+c)/2; (b+c)/2, (d-a)/2)`,
    /// which equals `(M + J M J)/2`.
    pub fn sym_traceless(&self) -> Self {
        let x = 0.5 * (self.a - self.d);
        let y = 0.5 * (self.b + self.c);
        Mat2 { a: x, b: y, c: y, d: -x }
    }

    /// Logarithm of an SL(2,R) matrix with trace in `(-2, inf)`, returned
    /// as a traceless matrix.
    pub fn log_sl2(&self) -> Mat2 {
        let c = 0.5 * self.trace();
        let u = c - 1.0;
        let f = if u.abs() < 1e-4 {
            // s / sinh s as a series in u = cosh s - 1
            1.0 - u / 3.0 + 2.0 * u * u / 15.0 - 4.0 * u * u * u / 35.0
        } else if c > 1.0 {
            let s = c.acosh();
            s / s.sinh()
        } else {
            let s = c.clamp(-1.0, 1.0).acos();
            s / s.sin()
        };
        (*self - Mat2::IDENTITY.scale(c)).scale(f)
    }

    /// Exponential of a traceless matrix.
    pub fn exp_traceless(&self) -> Mat2 {
        // w^2 = delta * I with delta = -det w
        let delta = -self.det();
        let (ch, sh) = if delta.abs() < 1e-8 {
            (1.0 + delta / 2.0 + delta * delta / 24.0, 1.0 + delta / 6.0 + delta * delta / 120.0)
        } else if delta > 0.0 {
            let s = delta.sqrt();
            (s.cosh(), s.sinh() / s)
        } else {
            let s = (-delta).sqrt();
            (s.cos(), s.sin() / s)
        };
        Mat2::IDENTITY.scale(ch) + self.scale(sh)
    }

    /// Square root of a symmetric positive definite matrix.
    pub fn sqrt_spd(&self) -> Mat2 {
        let s = self.det().max(0.0).sqrt();
        let t = (self.trace() + 2.0 * s).sqrt();
        (*self + Mat2::IDENTITY.scale(s)).scale(1.0 / t)
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2 { a: self.a + o.a, b: self.b + o.b, c: self.c + o.c, d: self.d + o.d }
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2 { a: self.a - o.a, b: self.b - o.b, c: self.c - o.c, d: self.d - o.d }
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale(-1.0)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }
}

/// Operator norm of a complex 2x2 matrix `[[a, b], [c, d]]`.
pub fn norm_op_complex(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> f64 {
    let f2 = a.norm_sqr() + b.norm_sqr() + c.norm_sqr() + d.norm_sqr();
    let det = (a * d - b * c).norm();
    let disc = (f2 * f2 - 4.0 * det * det).max(0.0).sqrt();
    (0.5 * (f2 + disc)).sqrt()
}
