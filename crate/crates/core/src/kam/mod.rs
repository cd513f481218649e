//! Reduction of near-rotation cocycles to cocycles of rotations.

mod aq;
mod config;
mod ct;
mod driver;
mod elliptic;

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::analytic::{grid_size, AnalyticFunction, MatrixFunction};
use crate::error::{Error, Result};
use crate::linalg::Mat2;

pub use aq::{aq_iterate, birkhoff_deviation_bound, u_k, AqReport, AqResult};
pub use config::KamConfig;
pub use ct::{ct_commuting, ct_step, CommutingReport, CommutingStep, CtReport, CtStep};
pub use driver::{
    constant_normalizer, inductive_step, reduce_to_rotations, verify_result, KamResult, KamState,
    KamStatus, StepRecord, Verification, FORMAT_VERSION,
};
pub use elliptic::{elliptic_normalize, normalize_matrix, EllipticNormalization, EllipticReport, PointNormal};

/// Samples per boundary line in [`inv_rotation_minus_id_norm`].
const INV_SAMPLES: usize = 512;

/// `sum 2 pi |l| |c_l| e^{2 pi |l| h}`, a bound for `|f'|` on the strip.
fn derivative_upper(f: &AnalyticFunction, h: f64) -> f64 {
    let d = f.degree() as i64;
    let body: f64 = (-d..=d)
        .map(|l| 2.0 * PI * l.abs() as f64 * f.coeff(l).norm() * (2.0 * PI * l.abs() as f64 * h).exp())
        .sum();
    body + 2.0 * PI * (d + 1) as f64 * f.tail
}

/// Upper bound for `sup_{|Im z| <= h} ‖(R_{psi(z)} - id)^{-1}‖`.
///
/// `R_psi - id` is normal with eigenvalues `e^{+-2 pi i psi} - 1`, so the
/// norm of its inverse is the larger of `1/|e^{+-2 pi i psi} - 1|`. These are
/// sampled on five horizontal lines and a Lipschitz margin covers the gaps.
/// Returns infinity when the margin swallows the smallest sample.
pub fn inv_rotation_minus_id_norm(psi: &AnalyticFunction, h: f64) -> Result<f64> {
    if h > psi.h * (1.0 + 1e-12) || h < 0.0 {
        return Err(Error::OutsideStrip { requested: h, available: psi.h });
    }
    let imag = psi.zero_mean().norm_upper(h)?;
    let lip = 2.0 * PI * derivative_upper(psi, h) * (2.0 * PI * imag).exp();
    let mut smallest = f64::INFINITY;
    for y in [-h, -0.5 * h, 0.0, 0.5 * h, h] {
        for z in psi.sample_line(INV_SAMPLES, y) {
            let e = (Complex64::i() * 2.0 * PI * z).exp();
            smallest = smallest.min((e - 1.0).norm()).min((e.inv() - 1.0).norm());
        }
    }
    let margin = lip * (0.5 / INV_SAMPLES as f64 + 0.125 * h);
    let lower = smallest - margin;
    Ok(if lower > 0.0 { 1.0 / lower } else { f64::INFINITY })
}

/// Continuous polar angle `x -> angle(U(x))` of `A = U P`, fitted at the
/// degree of `a`. The integer branch is chosen so the mean is nearest to
/// `reference`.
pub fn angle_function(a: &MatrixFunction, reference: f64) -> Result<AnalyticFunction> {
    let n = grid_size(a.degree());
    let vals = a.sample(n);
    let mut theta = Vec::with_capacity(n);
    let mut prev = vals[0].polar_angle();
    theta.push(prev);
    for m in &vals[1..] {
        let p = m.polar_angle();
        prev += p - prev - (p - prev).round();
        theta.push(prev);
    }
    let closing = vals[0].polar_angle() - prev;
    if (closing - closing.round()).abs() > 0.25 || closing.round() != 0.0 {
        return Err(Error::Precondition("angle of A winds around the circle".into()));
    }
    let mean = theta.iter().sum::<f64>() / n as f64;
    let shift = (reference - mean).round();
    let lifted: Vec<f64> = theta.iter().map(|t| t + shift).collect();
    let scale = lifted.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    Ok(AnalyticFunction::from_samples(&lifted, a.degree(), a.h(), scale))
}

/// `R_phi` sampled at the points of a grid.
fn rotations(phi: &AnalyticFunction, n: usize) -> Vec<Mat2> {
    phi.sample(n).into_iter().map(Mat2::rotation).collect()
}

/// `max_j ‖lhs_j - rhs_j‖ / max_j ‖rhs_j‖`.
fn relative_defect(lhs: &[Mat2], rhs: &[Mat2]) -> f64 {
    let scale = rhs.iter().fold(0.0f64, |m, v| m.max(v.norm_op())).max(f64::MIN_POSITIVE);
    lhs.iter().zip(rhs).map(|(p, q)| (*p - *q).norm_op()).fold(0.0, f64::max) / scale
}

/// Pointwise `R_phi (id + xi)` on a grid.
fn form_values(phi: &AnalyticFunction, xi: &MatrixFunction, n: usize) -> Vec<Mat2> {
    let r = rotations(phi, n);
    let x = xi.sample(n);
    r.iter().zip(&x).map(|(r, x)| *r * (Mat2::IDENTITY + *x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_norm_of_constant_angle() {
        for psi in [0.1, 0.25, 0.4, 0.5] {
            let f = AnalyticFunction::constant(psi, 4, 0.1);
            let got = inv_rotation_minus_id_norm(&f, 0.1).unwrap();
            let want = 1.0 / (2.0 * (PI * psi).sin());
            assert!((got - want).abs() < 1e-12 * want, "{psi}: {got} vs {want}");
        }
        let zero = AnalyticFunction::constant(0.0, 4, 0.1);
        assert!(inv_rotation_minus_id_norm(&zero, 0.1).unwrap().is_infinite());
    }

    #[test]
    fn inverse_norm_dominates_samples() {
        let f = AnalyticFunction::trig(4, 0.1, &[(0, 0.3, 0.0), (1, 0.02, 0.01)]);
        let bound = inv_rotation_minus_id_norm(&f, 0.1).unwrap();
        for z in f.sample_line(97, 0.1).into_iter().chain(f.sample_line(89, -0.03)) {
            let e = (Complex64::i() * 2.0 * PI * z).exp();
            assert!(1.0 / (e - 1.0).norm() <= bound);
            assert!(1.0 / (e.inv() - 1.0).norm() <= bound);
        }
    }

    #[test]
    fn angle_of_rotation_function() {
        let phi = AnalyticFunction::trig(8, 0.1, &[(0, 2.3, 0.0), (1, 0.05, 0.0)]);
        let r = MatrixFunction::rotation(&phi);
        let got = angle_function(&r, 2.2).unwrap();
        let d = (&got - &phi).norm_upper(0.1).unwrap();
        // R_phi itself is truncated at degree 8
        assert!(d < 1e-9, "{d:e}");
        let got0 = angle_function(&r, 0.0).unwrap();
        assert!((got0.mean() - 0.3).abs() < 1e-10);
    }
}
