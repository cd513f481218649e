//! Conjugating a matrix function close to rotations exactly into rotations,
//! pointwise in `x`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{inv_rotation_minus_id_norm, relative_defect, rotations, KamConfig};
use crate::analytic::{grid_size, AnalyticFunction, MatrixFunction};
use crate::cocycle::RotationForm;
use crate::error::{Error, Result};
use crate::linalg::Mat2;

/// Pointwise stopping threshold on `‖A^{(n)} - R_{theta^{(n)}}‖`.
const STOP: f64 = 1e-14;

/// Below this residual (or `STAGNATION` times the initial one, or the
/// determinant defect) a non-decreasing step is rounding, not divergence.
const ROUNDING_FLOOR: f64 = 1e-12;
const STAGNATION: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointNormal {
    /// `B` with `B A B^{-1} = R_theta`.
    pub b: Mat2,
    pub theta: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// The iteration on a single matrix: write `A R_{-theta} = e^v`, split `v`
/// into its symmetric traceless part `s` and its rotation part, solve
/// `(id - Ad_{R_theta}) w = -s` and conjugate by `e^w`; the rotation part of
/// `v` is moved into `theta`.
pub fn normalize_matrix(a: Mat2, theta: f64, max_iter: usize) -> Result<PointNormal> {
    let mut m = a;
    let mut th = theta;
    let mut b = Mat2::IDENTITY;
    let mut res = (m - Mat2::rotation(th)).norm_op();
    // a determinant defect cannot be conjugated away
    let floor = ROUNDING_FLOOR.max(STAGNATION * res).max(10.0 * (a.det() - 1.0).abs());
    let mut growth = 0;
    let mut it = 0;
    while res >= STOP && it < max_iter {
        let r = Mat2::rotation(th);
        let v = (m * r.inv_sl2()).log_sl2();
        let s = v.sym_traceless();
        let z = 0.5 * (v.c - v.b);
        // Ad_R on the symmetric traceless plane, in the coordinates (p, q)
        // of (p, q; q, -p)
        let e1 = r * Mat2::new(1.0, 0.0, 0.0, -1.0) * r.inv_sl2();
        let e2 = r * Mat2::new(0.0, 1.0, 1.0, 0.0) * r.inv_sl2();
        let (m11, m12, m21, m22) = (1.0 - e1.a, -e2.a, -e1.b, 1.0 - e2.b);
        let det = m11 * m22 - m12 * m21;
        if det.abs() < 1e-300 {
            return Err(Error::NotInEllipticDomain("R_{2 theta} = id".into()));
        }
        let p = (-s.a * m22 + s.b * m12) / det;
        let q = (-m11 * s.b + m21 * s.a) / det;
        let ew = Mat2::new(p, q, q, -p).exp_traceless();
        m = ew * m * ew.inv_sl2();
        b = ew * b;
        th += z / (2.0 * PI);
        let next = (m - Mat2::rotation(th)).norm_op();
        it += 1;
        if next >= res {
            if next < floor {
                res = next;
                break;
            }
            growth += 1;
            if growth >= 2 {
                return Err(Error::NormalizationDiverged { iterations: it, residual: next });
            }
        } else {
            growth = 0;
        }
        res = next;
    }
    Ok(PointNormal { b, theta: th, iterations: it, residual: res })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EllipticReport {
    /// Largest number of iterations over the grid.
    pub iterations: usize,
    /// Largest pointwise final residual.
    pub residual: f64,
    /// Certified `‖R_{-theta} A - id‖_h`.
    pub input_distance: f64,
    /// Certified `‖(R_{2 theta} - id)^{-1}‖_h`.
    pub inv_norm: f64,
    /// Certified `‖B - id‖_h`.
    pub b_minus_id: f64,
    /// `c0 ‖R_{-theta} A - id‖ ‖(R_{2 theta} - id)^{-1}‖^2`.
    pub bound: f64,
    /// Relative defect of `B A B^{-1} = R_{theta'}` on the check grid.
    pub grid_defect: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EllipticNormalization {
    pub b: MatrixFunction,
    pub theta: AnalyticFunction,
    pub report: EllipticReport,
}

/// Finds `B` close to the identity and `theta'` with `B A B^{-1} = R_{theta'}`
/// on the strip of width `h`.
///
/// The domain condition is `‖A‖_h < 2D` and
/// `‖R_{-theta} A - id‖_h < eps_elliptic min(1, ‖(R_{2 theta} - id)^{-1}‖_h^{-2})`.
pub fn elliptic_normalize(
    a: &MatrixFunction,
    theta: &AnalyticFunction,
    max_iter: usize,
    h: f64,
    cfg: &KamConfig,
) -> Result<EllipticNormalization> {
    let norm_a = a.norm_upper(h)?;
    if norm_a >= 2.0 * cfg.d {
        return Err(Error::NotInEllipticDomain(format!("‖A‖ = {norm_a:e} >= 2D")));
    }
    let input_distance = RotationForm::from_matrix(a, theta).xi_norm(h)?;
    let inv_norm = inv_rotation_minus_id_norm(&theta.scale(2.0), h)?;
    let allowed = cfg.eps_elliptic * (1.0f64).min(inv_norm.powi(-2));
    if !(input_distance < allowed) {
        return Err(Error::NotInEllipticDomain(format!(
            "‖R_(-theta) A - id‖ = {input_distance:e} but the domain allows {allowed:e}"
        )));
    }
    let degree = a.degree().max(theta.degree());
    let n = grid_size(degree);
    let av = a.sample(n);
    let tv = theta.sample(n);
    let mut bs = Vec::with_capacity(n);
    let mut ts = Vec::with_capacity(n);
    let (mut iterations, mut residual) = (0, 0.0f64);
    for j in 0..n {
        let p = normalize_matrix(av[j], tv[j], max_iter)?;
        iterations = iterations.max(p.iterations);
        residual = residual.max(p.residual);
        bs.push(p.b);
        ts.push(p.theta);
    }
    let h_fit = a.h().min(theta.h);
    let b = MatrixFunction::from_samples(&bs, degree, h_fit, 1.0);
    let tscale = ts.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let theta_new = AnalyticFunction::from_samples(&ts, degree, h_fit, tscale);
    let b_minus_id = b.minus_identity().norm_upper(h)?;

    let m = cfg.check_grid;
    let (bv, av2) = (b.sample(m), a.sample(m));
    let lhs: Vec<Mat2> = (0..m).map(|j| bv[j] * av2[j] * bv[j].inv()).collect();
    let grid_defect = relative_defect(&lhs, &rotations(&theta_new, m));
    let report = EllipticReport {
        iterations,
        residual,
        input_distance,
        inv_norm,
        b_minus_id,
        bound: cfg.c0 * input_distance * inv_norm * inv_norm,
        grid_defect,
    };
    Ok(EllipticNormalization { b, theta: theta_new, report })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> KamConfig {
        KamConfig::default()
    }

    #[test]
    fn exact_rotation_needs_no_iteration() {
        let p = normalize_matrix(Mat2::rotation(0.2), 0.2, 50).unwrap();
        assert_eq!(p.iterations, 0);
        assert_eq!(p.b, Mat2::IDENTITY);

        let theta = AnalyticFunction::constant(0.2, 4, 0.1);
        let a = MatrixFunction::rotation(&theta);
        let e = elliptic_normalize(&a, &theta, 50, 0.1, &cfg()).unwrap();
        assert_eq!(e.report.iterations, 0);
        assert!(e.report.b_minus_id < 1e-15);
        assert!((e.theta.mean() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn hyperbolic_constant_normalization() {
        let eps = 1e-4;
        let a = Mat2::new(eps, 0.0, 0.0, -eps).exp_traceless() * Mat2::rotation(0.2);
        let p = normalize_matrix(a, 0.2, 50).unwrap();
        let conj = p.b * a * p.b.inv();
        assert!((conj - Mat2::rotation(p.theta)).norm_op() < 1e-13);
        // eigenvalue argument oracle: 2 cos(2 pi theta') = trace
        let oracle = (0.5 * a.trace()).acos() / (2.0 * PI);
        assert!((p.theta - oracle).abs() < 1e-12, "{} vs {oracle}", p.theta);
        assert!((p.theta - 0.2).abs() < 10.0 * eps);
        assert!(p.iterations <= 6);

        let af = MatrixFunction::constant(a, 4, 0.1);
        let theta = AnalyticFunction::constant(0.2, 4, 0.1);
        let e = elliptic_normalize(&af, &theta, 50, 0.1, &cfg()).unwrap();
        assert!(e.report.grid_defect < 1e-12);
        assert!(e.report.b_minus_id <= e.report.bound);
    }

    #[test]
    fn hyperbolic_is_outside_domain() {
        let a = MatrixFunction::constant(Mat2::diag(2.0, 0.5), 4, 0.1);
        let theta = AnalyticFunction::zero(4, 0.1);
        let err = elliptic_normalize(&a, &theta, 50, 0.1, &cfg()).unwrap_err();
        assert!(matches!(err, Error::NotInEllipticDomain(_)), "{err}");
    }

    #[test]
    fn function_valued_normalization() {
        let (deg, h) = (12, 0.1);
        let theta = AnalyticFunction::trig(deg, h, &[(0, 0.3, 0.0), (1, 0.01, 0.0)]);
        let w = MatrixFunction::from_entries(
            AnalyticFunction::trig(deg, h, &[(1, 1e-3, 5e-4)]),
            AnalyticFunction::trig(deg, h, &[(0, 2e-4, 0.0), (2, 3e-4, 0.0)]),
            AnalyticFunction::trig(deg, h, &[(1, -4e-4, 0.0)]),
            AnalyticFunction::trig(deg, h, &[(1, -1e-3, -5e-4)]),
        );
        let n = grid_size(deg);
        let (wv, tv) = (w.sample(n), theta.sample(n));
        let a = MatrixFunction::collocate(n, deg, h, 1.0, |j| wv[j].exp_traceless() * Mat2::rotation(tv[j]));
        let e = elliptic_normalize(&a, &theta, 50, h, &cfg()).unwrap();
        assert!(e.report.grid_defect < 1e-10, "{}", e.report.grid_defect);
        assert!(e.report.b_minus_id < e.report.bound);
        assert!(e.b.symmetry_defect() < 1e-12 && e.theta.real_symmetric);
    }
}
