//! SL(2,R)-valued analytic cocycles over an irrational rotation.

mod dynamics;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::analytic::{grid_size, AnalyticFunction, MatrixFunction};
use crate::arithmetic::Frequency;
use crate::error::{Error, Result};
use crate::linalg::Mat2;

pub use dynamics::{
    lyapunov, rotation_number, LyapunovEstimate, RotationEstimate, RotationOptions,
};

/// Largest tolerated `‖det A - 1‖` at construction.
pub const TOL_DET: f64 = 1e-8;

/// Norm beyond which iterates are declared overflowing.
const GROWTH_LIMIT: f64 = 1e100;

/// The cocycle `(alpha, A)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Cocycle {
    pub alpha: Frequency,
    pub a: MatrixFunction,
    /// Degree of `x -> A(x)` as a map into SL(2,R).
    pub homotopy_class: i64,
    /// Certified `‖det A - 1‖_h`.
    pub det_defect: f64,
}

impl Cocycle {
    pub fn new(alpha: Frequency, a: MatrixFunction) -> Result<Self> {
        let det_defect = a.det().add_const(-1.0).norm_upper(a.h())?;
        if det_defect > TOL_DET {
            return Err(Error::InvalidInput(format!("det A deviates from 1 by {det_defect:e}")));
        }
        let homotopy_class = winding(&a, 1024);
        Ok(Cocycle { alpha, a, homotopy_class, det_defect })
    }

    /// `A(x) = (E - v(x), -1; 1, 0)`.
    pub fn schrodinger(v: &AnalyticFunction, e: f64, alpha: Frequency) -> Result<Self> {
        if !v.real_symmetric {
            return Err(Error::InvalidInput("potential must be real".into()));
        }
        let (deg, h) = (v.degree(), v.h);
        let a = MatrixFunction::from_entries(
            v.scale(-1.0).add_const(e),
            AnalyticFunction::constant(-1.0, deg, h),
            AnalyticFunction::constant(1.0, deg, h),
            AnalyticFunction::zero(deg, h),
        );
        // det = (E - v) * 0 - (-1) * 1 = 1 identically
        Ok(Cocycle { alpha, a, homotopy_class: 0, det_defect: 0.0 })
    }

    pub fn constant(m: Mat2, alpha: Frequency, degree: usize, h: f64) -> Result<Self> {
        Self::new(alpha, MatrixFunction::constant(m, degree, h))
    }

    pub fn h(&self) -> f64 {
        self.a.h()
    }

    pub fn degree(&self) -> usize {
        self.a.degree()
    }

    /// `B(x + alpha) A(x) B(x)^{-1}` by collocation.
    pub fn conjugate(&self, b: &MatrixFunction) -> Cocycle {
        let a = conjugate_fn(&self.alpha, 1, &self.a, b);
        let det_defect = self.det_defect;
        Cocycle { alpha: self.alpha.clone(), a, homotopy_class: self.homotopy_class, det_defect }
    }

    /// The fibered product `A^{(n)}`, by binary splitting.
    pub fn iterate(&self, n: i64) -> Result<MatrixFunction> {
        let h = self.h();
        let m = n.unsigned_abs();
        let mut result = MatrixFunction::identity(self.degree(), h);
        let mut power = self.a.clone();
        // power = A^{(p)}; result = A^{(offset)}
        let mut p: u64 = 1;
        let mut offset: u64 = 0;
        let mut bits = m;
        while bits > 0 {
            if bits & 1 == 1 {
                result = power.shift_by(&self.alpha, offset as i64).mul(&result);
                offset += p;
                check_growth(&result, offset as i64)?;
            }
            bits >>= 1;
            if bits > 0 {
                power = power.shift_by(&self.alpha, p as i64).mul(&power);
                p *= 2;
                check_growth(&power, p as i64)?;
            }
        }
        if n < 0 {
            // A^{(-m)}(x) = A^{(m)}(x - m alpha)^{-1}
            result = result.shift_by(&self.alpha, -(m as i64)).inv_sl2();
        }
        Ok(result)
    }
}

fn check_growth(m: &MatrixFunction, n: i64) -> Result<()> {
    let norm = m.upper_unchecked(0.0);
    if !norm.is_finite() || norm > GROWTH_LIMIT {
        return Err(Error::GrowthOverflow { n, norm });
    }
    Ok(())
}

/// Winding number of the rotation factor of `A(x)` along `x in [0, 1]`.
fn winding(a: &MatrixFunction, n: usize) -> i64 {
    let vals = a.sample(n);
    let mut total = 0.0;
    for j in 0..n {
        let t0 = vals[j].polar_angle();
        let t1 = vals[(j + 1) % n].polar_angle();
        let mut d = t1 - t0;
        d -= d.round();
        total += d;
    }
    total.round() as i64
}

/// `B(x + k alpha) A(x) B(x)^{-1}` by collocation on the standard grid.
pub fn conjugate_fn(alpha: &Frequency, k: i64, a: &MatrixFunction, b: &MatrixFunction) -> MatrixFunction {
    conjugate_with(a, b, &b.shift_by(alpha, k))
}

/// `B_s(x) A(x) B(x)^{-1}` by collocation, where `B_s` is a shifted copy of `B`.
pub fn conjugate_with(a: &MatrixFunction, b: &MatrixFunction, b_shifted: &MatrixFunction) -> MatrixFunction {
    let degree = a.degree().max(b.degree());
    let h = a.h().min(b.h());
    let n = grid_size(degree);
    let bs = b_shifted.sample(n);
    let bv = b.sample(n);
    let av = a.sample(n);
    let vals: Vec<Mat2> = (0..n).map(|j| bs[j] * av[j] * bv[j].inv()).collect();
    let scale = vals.iter().fold(1.0f64, |m, v| m.max(v.max_abs()))
        * bv.iter().fold(1.0f64, |m, v| m.max(v.norm_op())).powi(2);
    MatrixFunction::from_samples(&vals, degree, h, scale)
}

/// Certified bound on `sup_{|Im z| < h} ‖R_{psi(z)}‖`: for complex `psi`
/// the rotation is normal with eigenvalues `e^{+-2 pi i psi}`, so its norm
/// is `e^{2 pi |Im psi|} <= e^{2 pi ‖psi - psi^(0)‖_h}`.
pub fn rotation_norm_bound(psi: &AnalyticFunction, h: f64) -> Result<f64> {
    Ok((2.0 * PI * psi.zero_mean().norm_upper(h)?).exp())
}

/// `A = R_phi (id + xi)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RotationForm {
    pub phi: AnalyticFunction,
    pub xi: MatrixFunction,
}

impl RotationForm {
    /// `xi = R_{-phi} A - id`.
    pub fn from_matrix(a: &MatrixFunction, phi: &AnalyticFunction) -> Self {
        let degree = a.degree().max(phi.degree());
        let h = a.h().min(phi.h);
        let n = grid_size(degree);
        let av = a.sample(n);
        let pv = phi.sample(n);
        let vals: Vec<Mat2> = (0..n).map(|j| Mat2::rotation(-pv[j]) * av[j] - Mat2::IDENTITY).collect();
        let scale = av.iter().fold(1.0f64, |m, v| m.max(v.max_abs()));
        let xi = MatrixFunction::from_samples(&vals, degree, h, scale);
        RotationForm { phi: phi.clone().with_h(h), xi }
    }

    /// Certified `‖xi‖_{h'}`.
    pub fn xi_norm(&self, h_prime: f64) -> Result<f64> {
        self.xi.norm_upper(h_prime)
    }

    /// `R_phi (id + xi)`.
    pub fn reconstruct(&self) -> MatrixFunction {
        let degree = self.xi.degree().max(self.phi.degree());
        let n = grid_size(degree);
        let pv = self.phi.sample(n);
        let xv = self.xi.sample(n);
        let vals: Vec<Mat2> = (0..n).map(|j| Mat2::rotation(pv[j]) * (Mat2::IDENTITY + xv[j])).collect();
        MatrixFunction::from_samples(&vals, degree, self.xi.h(), 2.0)
    }

    /// Pointwise `‖R_phi (id + xi) - A‖` on a real grid.
    pub fn reconstruction_residual(&self, a: &MatrixFunction, n: usize) -> f64 {
        let pv = self.phi.sample(n);
        let xv = self.xi.sample(n);
        let av = a.sample(n);
        (0..n)
            .map(|j| (Mat2::rotation(pv[j]) * (Mat2::IDENTITY + xv[j]) - av[j]).norm_op())
            .fold(0.0, f64::max)
    }
}

/// `A = R_phi` exactly gives `xi = 0`.
pub fn to_rotation_form(c: &Cocycle, phi: &AnalyticFunction) -> Result<RotationForm> {
    if !phi.real_symmetric {
        return Err(Error::InvalidInput("phi must be real".into()));
    }
    Ok(RotationForm::from_matrix(&c.a, phi))
}

/// Result of multiplying rotation forms along an orbit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComposedForm {
    pub form: RotationForm,
    /// `exp(sum_k ‖M^{(k)}‖^2 ‖xi_k‖) - 1` with `M^{(k)} = R_{S_k phi}`.
    pub bound: f64,
    /// Certified norm of the explicitly computed `xi^{(l)}`.
    pub measured: f64,
}

/// Product `A_{l-1} ... A_0` of `A_k = R_{phi_k}(id + xi_k)` (factors
/// already evaluated along the orbit), returned as
/// `R_{S_l phi}(id + xi^{(l)})` with `S_l phi = sum phi_k`.
///
/// The bound follows from writing the product as
/// `R_{S_l} prod_k (id + R_{-S_k} xi_k R_{S_k})`.
pub fn compose_rotation_forms(forms: &[RotationForm], h: f64) -> Result<ComposedForm> {
    let first = forms.first().ok_or_else(|| Error::InvalidInput("no factors".into()))?;
    if forms.len() == 1 {
        let measured = first.xi_norm(h)?;
        return Ok(ComposedForm { form: first.clone(), bound: measured, measured });
    }
    let degree = forms.iter().map(|f| f.xi.degree().max(f.phi.degree())).max().unwrap_or(0);
    let mut s = AnalyticFunction::zero(degree, h);
    let mut exponent = 0.0;
    for f in forms {
        let m = rotation_norm_bound(&s, h)?;
        exponent += m * m * f.xi_norm(h)?;
        s = &s + &f.phi;
    }
    let bound = exponent.exp_m1();
    if bound > 1.0 {
        return Err(Error::RotationFormLost { bound });
    }
    let mut product = forms[0].reconstruct();
    for f in &forms[1..] {
        product = f.reconstruct().mul(&product);
    }
    let form = RotationForm::from_matrix(&product, &s);
    let measured = form.xi_norm(h)?;
    Ok(ComposedForm { form, bound, measured })
}
