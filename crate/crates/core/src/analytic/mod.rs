//! Real-analytic functions on the torus as truncated Fourier series with
//! strip norms, and 2x2 matrix-valued versions of the same.

mod denjoy;
mod fft;
mod matrix;

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arithmetic::Frequency;
use crate::error::{Error, Result};

pub use denjoy::{verify_denjoy_bounds, DenjoyReport, DenjoyRow};
pub use fft::grid_size;
pub use matrix::MatrixFunction;

/// Number of boundary samples used for the diagnostic lower norm.
pub const LOWER_SAMPLES: usize = 512;

/// Coefficients whose modulus is below this multiple of the estimated
/// rounding level are treated as noise and dropped. Without this, rounding
/// noise in high modes is amplified by `e^{2 pi |l| h}` in every strip norm.
const NOISE_FACTOR: f64 = 8.0 * f64::EPSILON;

/// `f(x) = sum_{|l| <= L} c_l e^{2 pi i l x}`, regarded on the strip
/// `|Im x| < h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Repr", into = "Repr")]
pub struct AnalyticFunction {
    pub h: f64,
    degree: usize,
    pub real_symmetric: bool,
    coeffs: Vec<Complex64>,
    /// Upper bound, in the strip norm at `h`, on everything discarded by
    /// truncation so far.
    pub tail: f64,
}

#[derive(Serialize, Deserialize)]
struct Repr {
    h: f64,
    #[serde(rename = "L")]
    l: usize,
    real_symmetric: bool,
    coeffs: Vec<[f64; 2]>,
    #[serde(default)]
    tail: f64,
}

impl From<AnalyticFunction> for Repr {
    fn from(f: AnalyticFunction) -> Repr {
        Repr {
            h: f.h,
            l: f.degree,
            real_symmetric: f.real_symmetric,
            coeffs: f.coeffs.iter().map(|c| [c.re, c.im]).collect(),
            tail: f.tail,
        }
    }
}

impl TryFrom<Repr> for AnalyticFunction {
    type Error = String;
    fn try_from(r: Repr) -> std::result::Result<Self, String> {
        if r.coeffs.len() != 2 * r.l + 1 {
            return Err(format!("expected {} coefficients, got {}", 2 * r.l + 1, r.coeffs.len()));
        }
        let mut f = AnalyticFunction {
            h: r.h,
            degree: r.l,
            real_symmetric: r.real_symmetric,
            coeffs: r.coeffs.iter().map(|c| Complex64::new(c[0], c[1])).collect(),
            tail: r.tail,
        };
        if f.real_symmetric {
            f.symmetrize();
        }
        Ok(f)
    }
}

fn weight(l: i64, h: f64) -> f64 {
    (2.0 * PI * l.unsigned_abs() as f64 * h).exp()
}

/// `[e^{2 pi i l x} for l in 0..=degree]`.
pub fn powers(x: f64, degree: usize) -> Vec<Complex64> {
    let e = cis(x);
    let mut out = Vec::with_capacity(degree + 1);
    let mut p = Complex64::new(1.0, 0.0);
    for l in 0..=degree {
        out.push(p);
        // re-anchor periodically to keep the recursion accurate
        p = if (l + 1) % 16 == 0 { cis((l + 1) as f64 * x) } else { p * e };
    }
    out
}

fn cis(turns: f64) -> Complex64 {
    let (s, c) = (2.0 * PI * turns).sin_cos();
    Complex64::new(c, s)
}

impl AnalyticFunction {
    /// Coefficients ordered `l = -L..=L`.
    pub fn new(coeffs: Vec<Complex64>, h: f64, real_symmetric: bool) -> Result<Self> {
        if coeffs.len().is_multiple_of(2) {
            return Err(Error::InvalidInput("coefficient list must have odd length".into()));
        }
        let degree = coeffs.len() / 2;
        let mut f = AnalyticFunction { h, degree, real_symmetric, coeffs, tail: 0.0 };
        if real_symmetric {
            f.symmetrize();
        }
        Ok(f)
    }

    pub fn zero(degree: usize, h: f64) -> Self {
        AnalyticFunction {
            h,
            degree,
            real_symmetric: true,
            coeffs: vec![Complex64::new(0.0, 0.0); 2 * degree + 1],
            tail: 0.0,
        }
    }

    pub fn constant(c: f64, degree: usize, h: f64) -> Self {
        let mut f = Self::zero(degree, h);
        f.coeffs[degree] = Complex64::new(c, 0.0);
        f
    }

    /// `sum a_k cos(2 pi k x) + b_k sin(2 pi k x)` over `(k, a_k, b_k)`.
    pub fn trig(degree: usize, h: f64, terms: &[(usize, f64, f64)]) -> Self {
        let mut f = Self::zero(degree, h);
        for &(k, a, b) in terms {
            if k == 0 {
                f.coeffs[degree] += Complex64::new(a, 0.0);
            } else if k <= degree {
                f.coeffs[degree + k] += Complex64::new(0.5 * a, -0.5 * b);
                f.coeffs[degree - k] += Complex64::new(0.5 * a, 0.5 * b);
            }
        }
        f
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, l: i64) -> Complex64 {
        if l.unsigned_abs() as usize > self.degree {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(l + self.degree as i64) as usize]
        }
    }

    pub fn set_coeff(&mut self, l: i64, c: Complex64) {
        let idx = (l + self.degree as i64) as usize;
        self.coeffs[idx] = c;
    }

    fn modes(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let d = self.degree as i64;
        self.coeffs.iter().enumerate().map(move |(i, &c)| (i as i64 - d, c))
    }

    /// `f^(0)`, the mean over the torus.
    pub fn mean(&self) -> f64 {
        self.coeffs[self.degree].re
    }

    pub fn with_h(mut self, h: f64) -> Self {
        self.h = h;
        self
    }

    /// Re-truncates (or pads) to degree `degree`, charging discarded modes
    /// to the tail.
    pub fn with_degree(&self, degree: usize) -> Self {
        let mut out = Self::zero(degree, self.h);
        out.real_symmetric = self.real_symmetric;
        out.tail = self.tail;
        for (l, c) in self.modes() {
            if l.unsigned_abs() as usize <= degree {
                out.set_coeff(l, c);
            } else {
                out.tail += c.norm() * weight(l, self.h);
            }
        }
        out
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let w = (Complex64::new(0.0, 2.0 * PI) * z).exp();
        // Horner in w starting from the top mode, then divide by w^L
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * w + c;
        }
        acc * (Complex64::new(0.0, -2.0 * PI * self.degree as f64) * z).exp()
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        self.eval_real_with(&powers(x, self.degree))
    }

    /// Real part of `f(x)` given `powers[l] = e^{2 pi i l x}` for `l = 0..=L`.
    pub fn eval_real_with(&self, powers: &[Complex64]) -> f64 {
        let d = self.degree;
        debug_assert!(powers.len() > d);
        let mut acc = self.coeffs[d].re;
        for (l, &e) in powers.iter().enumerate().take(d + 1).skip(1) {
            acc += (self.coeffs[d + l] * e + self.coeffs[d - l] * e.conj()).re;
        }
        acc
    }

    /// Values at `x_j = j / n` (real parts).
    pub fn sample(&self, n: usize) -> Vec<f64> {
        fft::synthesize(&self.coeffs, self.degree, n, 0.0).iter().map(|z| z.re).collect()
    }

    /// Complex values at `x_j + i y`, `x_j = j / n`.
    pub fn sample_line(&self, n: usize, y: f64) -> Vec<Complex64> {
        fft::synthesize(&self.coeffs, self.degree, n, y)
    }

    /// Real-symmetric function of degree `degree` interpolating real samples
    /// on the uniform grid. Modes between `degree` and `n/2` go to the tail;
    /// coefficients below `noise_scale * 8 eps` are dropped as rounding noise.
    pub fn from_samples(values: &[f64], degree: usize, h: f64, noise_scale: f64) -> Self {
        let n = values.len();
        let spec = fft::analyze(values);
        let keep = degree.min((n - 1) / 2);
        let mut f = Self::zero(degree, h);
        for l in -(keep as i64)..=(keep as i64) {
            f.set_coeff(l, spec[l.rem_euclid(n as i64) as usize]);
        }
        let noise = NOISE_FACTOR * noise_scale;
        let mut tail = 0.0;
        for l in (keep + 1)..n.div_ceil(2) {
            let l = l as i64;
            for m in [l, -l] {
                let c = spec[m.rem_euclid(n as i64) as usize].norm();
                if c > noise {
                    tail += c * weight(l, h);
                }
            }
        }
        f.symmetrize();
        f.chop(noise_scale);
        f.tail = tail;
        f
    }

    /// Sets coefficients below the rounding level of a quantity of size
    /// `scale` to zero.
    pub fn chop(&mut self, scale: f64) {
        let tol = NOISE_FACTOR * scale;
        for c in &mut self.coeffs {
            if c.norm() <= tol {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Forces `c_{-l} = conj(c_l)` and a real mean.
    pub fn symmetrize(&mut self) {
        let d = self.degree;
        self.coeffs[d].im = 0.0;
        for l in 1..=d {
            let avg = 0.5 * (self.coeffs[d + l] + self.coeffs[d - l].conj());
            self.coeffs[d + l] = avg;
            self.coeffs[d - l] = avg.conj();
        }
        self.real_symmetric = true;
    }

    /// Largest deviation from `c_{-l} = conj(c_l)`.
    pub fn symmetry_defect(&self) -> f64 {
        let d = self.degree;
        let mut m = self.coeffs[d].im.abs();
        for l in 1..=d {
            m = m.max((self.coeffs[d + l] - self.coeffs[d - l].conj()).norm());
        }
        m
    }

    /// `N^+(h') = sum |c_l| e^{2 pi |l| h'}` plus the recorded tail.
    pub fn norm_upper(&self, h_prime: f64) -> Result<f64> {
        self.check_strip(h_prime)?;
        Ok(self.upper_unchecked(h_prime))
    }

    pub(crate) fn upper_unchecked(&self, h_prime: f64) -> f64 {
        self.modes().map(|(l, c)| c.norm() * weight(l, h_prime)).sum::<f64>() + self.tail
    }

    fn check_strip(&self, h_prime: f64) -> Result<()> {
        if h_prime > self.h * (1.0 + 1e-12) || h_prime < 0.0 {
            return Err(Error::OutsideStrip { requested: h_prime, available: self.h });
        }
        Ok(())
    }

    /// `(upper, lower)` with `lower <= sup_{|Im z| <= h'} |f| <= upper`.
    pub fn norm_strip(&self, h_prime: f64) -> Result<(f64, f64)> {
        let upper = self.norm_upper(h_prime)?;
        let mut lower: f64 = 0.0;
        for y in [h_prime, -h_prime] {
            for z in self.sample_line(LOWER_SAMPLES, y) {
                lower = lower.max(z.norm());
            }
        }
        Ok((upper, lower.min(upper)))
    }

    /// Max of `|f|` over a real grid of `n` points.
    pub fn sup_real(&self, n: usize) -> f64 {
        self.sample(n).iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest imaginary part on a real grid (zero for real-symmetric data).
    pub fn max_imag_on_axis(&self, n: usize) -> f64 {
        self.sample_line(n, 0.0).iter().fold(0.0, |m, z| m.max(z.im.abs()))
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c *= s;
        }
        out.tail *= s.abs();
        out
    }

    pub fn add_const(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.coeffs[out.degree] += s;
        out
    }

    /// `f - f^(0)`.
    pub fn zero_mean(&self) -> Self {
        self.add_const(-self.mean())
    }

    fn zip(&self, other: &Self, sign: f64) -> Self {
        let degree = self.degree.max(other.degree);
        let mut out = Self::zero(degree, self.h.min(other.h));
        out.real_symmetric = self.real_symmetric && other.real_symmetric;
        for l in -(degree as i64)..=(degree as i64) {
            out.set_coeff(l, self.coeff(l) + other.coeff(l) * sign);
        }
        // cancellation residues are rounding noise of the larger operand
        let scale = (self.upper_unchecked(0.0) - self.tail).max(other.upper_unchecked(0.0) - other.tail);
        out.chop(scale);
        out.tail = self.tail + other.tail;
        out
    }

    /// Product by convolution, truncated back to `max(L_f, L_g)`.
    pub fn mul(&self, other: &Self) -> Self {
        let degree = self.degree.max(other.degree);
        let h = self.h.min(other.h);
        let full = self.degree + other.degree;
        let mut conv = vec![Complex64::new(0.0, 0.0); 2 * full + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                conv[i + j] += a * b;
            }
        }
        let nf = self.upper_unchecked(0.0) - self.tail;
        let ng = other.upper_unchecked(0.0) - other.tail;
        let noise = NOISE_FACTOR * nf * ng;
        let mut out = Self::zero(degree, h);
        out.real_symmetric = self.real_symmetric && other.real_symmetric;
        let mut discarded = 0.0;
        for (k, c) in conv.into_iter().enumerate() {
            let l = k as i64 - full as i64;
            if l.unsigned_abs() as usize <= degree {
                out.set_coeff(l, c);
            } else if c.norm() > noise {
                discarded += c.norm() * weight(l, h);
            }
        }
        if out.real_symmetric {
            out.symmetrize();
        }
        out.chop(nf * ng);
        let uf = self.upper_unchecked(h) - self.tail;
        let ug = other.upper_unchecked(h) - other.tail;
        out.tail = discarded + uf * other.tail + ug * self.tail + self.tail * other.tail;
        out
    }

    /// `f(x + beta)`: `c_l -> c_l e^{2 pi i l beta}`.
    pub fn shift(&self, beta: f64) -> Self {
        self.shift_with(|l| l as f64 * beta)
    }

    /// `f(x + n alpha)` with the phases computed in double-double.
    pub fn shift_by(&self, alpha: &Frequency, n: i64) -> Self {
        self.shift_with(|l| alpha.phase((n * l) as f64))
    }

    fn shift_with(&self, phase: impl Fn(i64) -> f64) -> Self {
        let mut out = self.clone();
        let d = self.degree as i64;
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            let l = i as i64 - d;
            if l != 0 {
                *c *= cis(phase(l));
            }
        }
        if out.real_symmetric {
            out.symmetrize();
        }
        out
    }

    /// `S_n f = sum_{k<n} f(. + k alpha)` in closed form on coefficients.
    pub fn birkhoff_sum(&self, alpha: &Frequency, n: u64) -> Result<Self> {
        let mut out = self.clone();
        let d = self.degree as i64;
        let nf = n as f64;
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            let l = i as i64 - d;
            if l == 0 {
                *c *= nf;
                continue;
            }
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let p1 = alpha.signed_phase(l as f64);
            if p1 == 0.0 {
                return Err(Error::ResonantFrequency { l });
            }
            let pn = alpha.signed_phase(nf * l as f64);
            // (1 - e^{2 pi i x}) = -2i sin(pi x) e^{i pi x}
            let num = Complex64::new(0.0, -2.0 * (PI * pn).sin()) * cis(0.5 * pn);
            let den = Complex64::new(0.0, -2.0 * (PI * p1).sin()) * cis(0.5 * p1);
            *c *= num / den;
        }
        out.tail *= nf;
        if out.real_symmetric {
            out.symmetrize();
        }
        Ok(out)
    }

    /// Coefficient-space distance `max_l |c_l - d_l|`.
    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        let degree = self.degree.max(other.degree) as i64;
        (-degree..=degree).map(|l| (self.coeff(l) - other.coeff(l)).norm()).fold(0.0, f64::max)
    }
}

impl Add for &AnalyticFunction {
    type Output = AnalyticFunction;
    fn add(self, o: &AnalyticFunction) -> AnalyticFunction {
        self.zip(o, 1.0)
    }
}

impl Sub for &AnalyticFunction {
    type Output = AnalyticFunction;
    fn sub(self, o: &AnalyticFunction) -> AnalyticFunction {
        self.zip(o, -1.0)
    }
}

impl Neg for &AnalyticFunction {
    type Output = AnalyticFunction;
    fn neg(self) -> AnalyticFunction {
        self.scale(-1.0)
    }
}

impl Mul for &AnalyticFunction {
    type Output = AnalyticFunction;
    fn mul(self, o: &AnalyticFunction) -> AnalyticFunction {
        AnalyticFunction::mul(self, o)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cos1(h: f64) -> AnalyticFunction {
        AnalyticFunction::trig(8, h, &[(1, 1.0, 0.0)])
    }

    #[test]
    fn constant_norms() {
        let f = AnalyticFunction::constant(-2.5, 4, 0.3);
        let (u, l) = f.norm_strip(0.2).unwrap();
        assert!((u - 2.5).abs() < 1e-15 && (l - 2.5).abs() < 1e-12);
    }

    #[test]
    fn cosine_norms() {
        let f = cos1(0.5);
        let hp = 0.2;
        let (u, l) = f.norm_strip(hp).unwrap();
        assert!((u - (2.0 * PI * hp).exp()).abs() < 1e-12);
        assert!(l >= (2.0 * PI * hp).cosh() - 1e-12);
        assert!(l <= u);
    }

    #[test]
    fn mixed_norm_against_dense_grid() {
        let f = AnalyticFunction::trig(8, 0.5, &[(1, 1.0, 0.0), (2, 0.0, 0.1)]);
        let (u, l) = f.norm_strip(0.2).unwrap();
        // dense direct evaluation as oracle for the sup on the boundary
        let mut dense: f64 = 0.0;
        for j in 0..8192 {
            let x = j as f64 / 8192.0;
            for y in [0.2, -0.2] {
                dense = dense.max(f.eval(Complex64::new(x, y)).norm());
            }
        }
        assert!(l <= dense + 1e-12 && dense <= u + 1e-12);
        assert!((l - dense).abs() < 1e-3 * dense);
    }

    #[test]
    fn outside_strip_rejected() {
        assert!(matches!(cos1(0.1).norm_upper(0.2), Err(Error::OutsideStrip { .. })));
    }

    #[test]
    fn shift_examples() {
        let f = cos1(0.5);
        assert_eq!(f.shift(0.0), f);
        let g = f.shift(0.5);
        assert!(g.max_coeff_diff(&f.scale(-1.0)) < 1e-15);
        let mut e = AnalyticFunction::zero(2, 0.5);
        e.real_symmetric = false;
        e.set_coeff(1, Complex64::new(1.0, 0.0));
        let s = e.shift(0.25);
        assert!((s.coeff(1) - Complex64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn birkhoff_trivial_cases() {
        let alpha = Frequency::golden();
        let c = AnalyticFunction::constant(1.5, 4, 0.2);
        let s = c.birkhoff_sum(&alpha, 7).unwrap();
        assert!((s.mean() - 10.5).abs() < 1e-14);
        let f = cos1(0.2);
        assert!(f.birkhoff_sum(&alpha, 1).unwrap().max_coeff_diff(&f) < 1e-15);
    }

    #[test]
    fn birkhoff_matches_direct_sum() {
        let alpha = Frequency::golden();
        let f = cos1(0.2);
        let s = f.birkhoff_sum(&alpha, 13).unwrap().sample(512);
        let mut direct = vec![0.0; 512];
        for k in 0..13 {
            for (j, v) in f.shift_by(&alpha, k).sample(512).iter().enumerate() {
                direct[j] += v;
            }
        }
        let scale = direct.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let err = s.iter().zip(&direct).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err <= 1e-12 * scale, "err {err}, scale {scale}");
    }

    #[test]
    fn resonance_detected() {
        let alpha = Frequency::from_f64(0.5).unwrap();
        let f = AnalyticFunction::trig(4, 0.2, &[(2, 1.0, 0.0)]);
        assert!(matches!(f.birkhoff_sum(&alpha, 3), Err(Error::ResonantFrequency { .. })));
    }

    #[test]
    fn samples_roundtrip() {
        let f = AnalyticFunction::trig(6, 0.2, &[(0, 0.3, 0.0), (1, 1.0, 0.2), (5, 0.01, -0.02)]);
        let n = grid_size(6);
        let g = AnalyticFunction::from_samples(&f.sample(n), 6, 0.2, 1.0);
        assert!(g.max_coeff_diff(&f) < 1e-15);
        assert_eq!(g.tail, 0.0);
    }

    #[test]
    fn product_matches_pointwise() {
        let f = AnalyticFunction::trig(6, 0.2, &[(1, 1.0, 0.5), (2, 0.2, 0.0)]);
        let g = AnalyticFunction::trig(6, 0.2, &[(0, 2.0, 0.0), (3, 0.0, 0.7)]);
        let p = &f * &g;
        for x in [0.0, 0.13, 0.77] {
            assert!((p.eval_real(x) - f.eval_real(x) * g.eval_real(x)).abs() < 1e-13);
        }
        // degree 5 survives, nothing truncated
        assert_eq!(p.tail, 0.0);
        let q = &f.with_degree(3) * &g.with_degree(3);
        assert!(q.tail > 0.0);
    }

    #[test]
    fn json_roundtrip() {
        let f = AnalyticFunction::trig(3, 0.25, &[(1, 1.0, 0.5)]);
        let s = serde_json::to_string(&f).unwrap();
        assert!(s.contains("\"L\":3"));
        let g: AnalyticFunction = serde_json::from_str(&s).unwrap();
        assert_eq!(f, g);
    }

    fn arb_fn() -> impl Strategy<Value = AnalyticFunction> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 7).prop_map(|v| {
            let terms: Vec<_> = v.iter().enumerate().map(|(k, &(a, b))| (k, a, b)).collect();
            AnalyticFunction::trig(6, 0.3, &terms)
        })
    }

    proptest! {
        #[test]
        fn birkhoff_linear(f in arb_fn(), g in arb_fn(), a in -2.0f64..2.0, n in 1u64..500) {
            let alpha = Frequency::golden();
            let lhs = (&f.scale(a) + &g).birkhoff_sum(&alpha, n).unwrap();
            let rhs = &f.birkhoff_sum(&alpha, n).unwrap().scale(a) + &g.birkhoff_sum(&alpha, n).unwrap();
            let scale = 1.0 + rhs.upper_unchecked(0.0);
            prop_assert!(lhs.max_coeff_diff(&rhs) <= 1e-12 * scale);
        }

        #[test]
        fn birkhoff_cocycle_identity(f in arb_fn(), m in 1u64..300, n in 1u64..300) {
            let alpha = Frequency::sqrt2();
            let lhs = f.birkhoff_sum(&alpha, m + n).unwrap();
            let rhs = &f.birkhoff_sum(&alpha, m).unwrap()
                + &f.birkhoff_sum(&alpha, n).unwrap().shift_by(&alpha, m as i64);
            let scale = 1.0 + lhs.upper_unchecked(0.0);
            prop_assert!(lhs.max_coeff_diff(&rhs) <= 1e-12 * scale);
        }

        #[test]
        fn upper_norm_monotone(f in arb_fn(), h1 in 0.0f64..0.3, h2 in 0.0f64..0.3) {
            let (lo, hi) = if h1 <= h2 { (h1, h2) } else { (h2, h1) };
            prop_assert!(f.norm_upper(lo).unwrap() <= f.norm_upper(hi).unwrap());
        }

        #[test]
        fn symmetry_preserved(f in arb_fn(), beta in -1.0f64..1.0, n in 1u64..100) {
            prop_assert!(f.shift(beta).symmetry_defect() == 0.0);
            prop_assert!(f.birkhoff_sum(&Frequency::golden(), n).unwrap().symmetry_defect() == 0.0);
        }

        #[test]
        fn lower_below_upper(f in arb_fn(), hp in 0.0f64..0.3) {
            let (u, l) = f.norm_strip(hp).unwrap();
            prop_assert!(l <= u * (1.0 + 1e-12));
        }
    }
}
