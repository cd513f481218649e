//! Continued fractions of the base frequency, best denominators, the bridge
//! subsequence `(Q_k)` and the arithmetic admission condition on the fibered
//! rotation number.

pub mod ddouble;
mod frequency;
mod select;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

pub use ddouble::DoubleDouble;
pub use frequency::{parse_alpha, Frequency, QuotientTail};
pub use select::{is_cd_bridge, ln_big, select_q, SelectedSubsequence};

use crate::error::{Error, Result};

/// `‖x‖_T`: distance from `x` to the nearest integer.
pub fn torus_norm(x: f64) -> f64 {
    (x - x.round()).abs()
}

/// Exact continued fraction data of a frequency `alpha in (0, 1)`.
///
/// `quotients[k-1] = a_k`; `p[k], q[k]` for `k = 0..=depth`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContinuedFraction {
    pub alpha: DoubleDouble,
    pub quotients: Vec<u64>,
    pub p: Vec<BigUint>,
    pub q: Vec<BigUint>,
    /// Built from an explicit quotient list rather than a floating point value.
    pub exact: bool,
    /// Expansion stopped because the Gauss map ran out of precision
    /// (or the input was rational).
    pub exhausted: bool,
}

impl ContinuedFraction {
    /// Builds convergents from partial quotients `a_1..a_K` in exact integer
    /// arithmetic.
    pub fn from_quotients(quotients: &[u64]) -> Result<Self> {
        if quotients.contains(&0) {
            return Err(Error::InvalidInput("partial quotients must be positive".into()));
        }
        let mut cf = ContinuedFraction {
            alpha: DoubleDouble::ZERO,
            quotients: Vec::with_capacity(quotients.len()),
            p: vec![BigUint::zero()],
            q: vec![BigUint::one()],
            exact: true,
            exhausted: false,
        };
        for &a in quotients {
            cf.push(a);
        }
        cf.alpha = cf.convergent_value(cf.depth());
        Ok(cf)
    }

    fn push(&mut self, a: u64) {
        let k = self.quotients.len() + 1;
        let (pm2, qm2) = if k == 1 {
            (BigUint::one(), BigUint::zero())
        } else {
            (self.p[k - 2].clone(), self.q[k - 2].clone())
        };
        let pk = &self.p[k - 1] * a + pm2;
        let qk = &self.q[k - 1] * a + qm2;
        self.quotients.push(a);
        self.p.push(pk);
        self.q.push(qk);
    }

    pub fn depth(&self) -> usize {
        self.quotients.len()
    }

    /// `p_k / q_k` rounded to double-double.
    pub fn convergent_value(&self, k: usize) -> DoubleDouble {
        big_to_dd(&self.p[k]) / big_to_dd(&self.q[k])
    }

    pub fn q_f64(&self, k: usize) -> f64 {
        self.q[k].to_f64().unwrap_or(f64::INFINITY)
    }

    pub fn q_u64(&self, k: usize) -> Option<u64> {
        self.q[k].to_u64()
    }

    /// Convergent denominators as `f64` (may be infinite for exact huge q).
    pub fn q_list_f64(&self) -> Vec<f64> {
        (0..=self.depth()).map(|k| self.q_f64(k)).collect()
    }

    /// `p_k q_{k-1} - p_{k-1} q_k`, as a signed integer.
    pub fn determinant(&self, k: usize) -> BigInt {
        BigInt::from(&self.p[k] * &self.q[k - 1]) - BigInt::from(&self.p[k - 1] * &self.q[k])
    }

    /// Signed representative of `q_k alpha` modulo 1 of smallest absolute value.
    pub fn signed_q_alpha(&self, k: usize) -> f64 {
        (big_to_dd(&self.q[k]) * self.alpha).signed_frac().to_f64()
    }
}

pub(crate) fn big_to_dd(n: &BigUint) -> DoubleDouble {
    let hi = n.to_f64().unwrap_or(f64::INFINITY);
    if !hi.is_finite() {
        return DoubleDouble::from_f64(hi);
    }
    let hi_big = num_bigint::BigInt::from(
        num_traits::FromPrimitive::from_f64(hi).unwrap_or_else(BigUint::zero) as BigUint,
    );
    let rem = BigInt::from(n.clone()) - hi_big;
    DoubleDouble::new(hi, rem.to_f64().unwrap_or(0.0))
}

/// Continued fraction expansion of `alpha` (given with an absolute
/// uncertainty) by the Gauss map in double-double arithmetic.
///
/// Stops before the first denominator exceeding `max_q`. A quotient is only
/// emitted when it is determined by every value in `[alpha - u, alpha + u]`;
/// otherwise the expansion fails with the partial result attached.
pub fn expand_cf(alpha: DoubleDouble, uncertainty: f64, max_q: u64) -> Result<ContinuedFraction> {
    let cf = expand_cf_partial(alpha, uncertainty, max_q)?;
    if cf.exhausted {
        Err(Error::RationalOrPrecisionExhausted { partial: Box::new(cf) })
    } else {
        Ok(cf)
    }
}

/// Like [`expand_cf`] but returns the partial expansion (with `exhausted`
/// set) instead of failing.
pub fn expand_cf_partial(
    alpha: DoubleDouble,
    uncertainty: f64,
    max_q: u64,
) -> Result<ContinuedFraction> {
    if !(alpha.hi > 0.0 && alpha.hi < 1.0) || max_q < 1 {
        return Err(Error::InvalidInput(format!(
            "expand_cf needs 0 < alpha < 1 and max_q >= 1 (alpha = {}, max_q = {max_q})",
            alpha.to_f64()
        )));
    }
    let mut cf = ContinuedFraction::from_quotients(&[])?;
    cf.exact = false;
    let max_q_big = BigUint::from(max_q);
    let mut x = alpha;
    let mut u = uncertainty.max(DoubleDouble::EPSILON * alpha.hi);
    loop {
        if x.hi <= u {
            cf.exhausted = true;
            break;
        }
        let inv = x.recip();
        let a = inv.floor();
        let lo = (x + DoubleDouble::from_f64(u)).recip().floor();
        let hi = (x - DoubleDouble::from_f64(u)).recip().floor();
        // Every value in the interval must give the same quotient. The one
        // exception is a remainder interval straddling 0: the expansion may
        // terminate right here, so emit the quotient and stop.
        let terminal = lo < a && hi == a;
        if (lo != a && !terminal) || hi != a || a.hi >= 9.0e18 || a.hi < 1.0 {
            cf.exhausted = true;
            break;
        }
        let a_int = a.to_f64() as u64;
        let k = cf.depth() + 1;
        let next_q = &cf.q[k - 1] * a_int + if k == 1 { BigUint::zero() } else { cf.q[k - 2].clone() };
        if next_q > max_q_big {
            break;
        }
        cf.push(a_int);
        if terminal {
            cf.exhausted = true;
            break;
        }
        let next = inv - a;
        u = u / (x.hi * (x.hi - u)) + 4.0 * DoubleDouble::EPSILON * inv.hi;
        x = next;
    }
    cf.alpha = alpha;
    Ok(cf)
}

/// Parameters `(tau, nu, eps)` of the admission set together with the
/// derived exponents.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct DiophantineParams {
    pub tau: f64,
    pub nu: f64,
    pub eps: f64,
    pub m: f64,
}

impl DiophantineParams {
    pub fn new(tau: f64, nu: f64, eps: f64) -> Result<Self> {
        if !(tau > 0.0) || !(nu > 0.0 && nu < 0.5) || !(eps > 0.0) {
            return Err(Error::InvalidInput(format!(
                "need tau > 0, 0 < nu < 1/2, eps > 0 (got {tau}, {nu}, {eps})"
            )));
        }
        let tau_bar = tau + 1.0;
        let nu_bar = 0.5 * (nu + 0.5);
        let m = (4.0 * tau_bar).max(2.0 / (1.0 - 2.0 * nu_bar));
        Ok(DiophantineParams { tau, nu, eps, m })
    }

    /// Overrides the derived `M` (used to exercise the bridge construction
    /// with small exponents).
    pub fn with_m(mut self, m: f64) -> Self {
        self.m = m;
        self
    }

    pub fn tau_bar(&self) -> f64 {
        self.tau + 1.0
    }

    pub fn nu_bar(&self) -> f64 {
        0.5 * (self.nu + 0.5)
    }

    pub fn a(&self) -> f64 {
        2.0 / self.m
    }

    pub fn b(&self) -> f64 {
        self.m / 2.0
    }

    /// The bridge exponent `2M`.
    pub fn cal_a(&self) -> f64 {
        2.0 * self.m
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RhoCertificate {
    pub pass: bool,
    /// First index `i` at which `‖2 q_i rho‖ <= eps max(q_{i+1}^-nu, q_i^-tau)`.
    pub first_failure: Option<usize>,
    /// Largest index checked.
    pub depth: usize,
    /// Smallest value of `‖2 q_i rho‖ / (eps max(...))` seen.
    pub min_margin: f64,
}

/// Finite-depth certificate for `rho` in the admission set: checks the
/// inequality for `i = 0..=depth`.
pub fn check_rho_condition(
    cf: &ContinuedFraction,
    rho: f64,
    params: &DiophantineParams,
    depth: usize,
) -> Result<RhoCertificate> {
    if depth + 1 > cf.depth() {
        return Err(Error::InsufficientDepth(format!(
            "certificate depth {depth} needs q_{} but expansion has depth {}",
            depth + 1,
            cf.depth()
        )));
    }
    let rho_dd = DoubleDouble::from_f64(rho);
    let mut min_margin = f64::INFINITY;
    for i in 0..=depth {
        let qi = big_to_dd(&cf.q[i]);
        let lhs = (qi.mul_int(2.0) * rho_dd).signed_frac().abs().to_f64();
        let qi_f = cf.q_f64(i);
        let qn_f = cf.q_f64(i + 1);
        let rhs = params.eps * qn_f.powf(-params.nu).max(qi_f.powf(-params.tau));
        let margin = lhs / rhs;
        min_margin = min_margin.min(margin);
        if lhs <= rhs {
            return Ok(RhoCertificate { pass: false, first_failure: Some(i), depth, min_margin });
        }
    }
    Ok(RhoCertificate { pass: true, first_failure: None, depth, min_margin })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> DoubleDouble {
        DoubleDouble::from_f64((5f64.sqrt() - 1.0) / 2.0)
    }

    fn q_u64(cf: &ContinuedFraction) -> Vec<u64> {
        (0..=cf.depth()).map(|k| cf.q_u64(k).unwrap()).collect()
    }

    #[test]
    fn golden_mean_gives_fibonacci() {
        let cf = expand_cf(golden(), 0.0, 100).unwrap();
        assert!(cf.quotients.iter().all(|&a| a == 1));
        assert_eq!(q_u64(&cf), vec![1, 1, 2, 3, 5, 8, 13, 21, 34, 55, 89]);
    }

    #[test]
    fn sqrt2_gives_pell() {
        let cf = expand_cf(DoubleDouble::from_f64(2f64.sqrt() - 1.0), 0.0, 30).unwrap();
        assert!(cf.quotients.iter().all(|&a| a == 2));
        assert_eq!(q_u64(&cf), vec![1, 2, 5, 12, 29]);
    }

    #[test]
    fn one_third_is_rational() {
        let third = DoubleDouble::from_f64(1.0 / 3.0);
        match expand_cf(third, f64::EPSILON / 6.0, 1_000_000) {
            Err(Error::RationalOrPrecisionExhausted { partial }) => {
                assert_eq!(partial.quotients, vec![3]);
            }
            other => panic!("expected exhaustion, got {other:?}"),
        }
        // exact double-double third also terminates
        let exact = DoubleDouble::ONE / DoubleDouble::from_f64(3.0);
        let err = expand_cf(exact, 0.0, 1_000_000).unwrap_err();
        assert!(matches!(err, Error::RationalOrPrecisionExhausted { .. }));
    }

    #[test]
    fn torus_norm_examples() {
        assert!((torus_norm(0.3) - 0.3).abs() < 1e-15);
        assert!((torus_norm(0.7) - 0.3).abs() < 1e-15);
        assert!((torus_norm(-1.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn determinant_identity() {
        let cf = ContinuedFraction::from_quotients(&[3, 7, 15, 1, 292, 1, 1, 1, 2]).unwrap();
        for k in 1..=cf.depth() {
            let expected = if k % 2 == 1 { 1 } else { -1 };
            assert_eq!(cf.determinant(k), BigInt::from(expected), "k = {k}");
        }
        assert_eq!(cf.p[1], BigUint::from(1u32));
        assert_eq!(cf.q[1], BigUint::from(3u32));
    }

    #[test]
    fn derived_m() {
        let p = DiophantineParams::new(2.0, 0.4, 1e-3).unwrap();
        assert!((p.m - 20.0).abs() < 1e-12);
        assert!((p.cal_a() - 40.0).abs() < 1e-12);
        assert!((p.a() - 0.1).abs() < 1e-12 && (p.b() - 10.0).abs() < 1e-12);
        let p = DiophantineParams::new(0.5, 0.1, 1e-3).unwrap();
        assert!((p.m - 6.0).abs() < 1e-12);
    }

    #[test]
    fn rho_zero_and_quarter_fail() {
        let cf = expand_cf(golden(), 0.0, 1000).unwrap();
        let p = DiophantineParams::new(2.0, 0.4, 0.1).unwrap();
        let c = check_rho_condition(&cf, 0.0, &p, 5).unwrap();
        assert_eq!(c.first_failure, Some(0));
        let c = check_rho_condition(&cf, 0.25, &p, 5).unwrap();
        assert_eq!(c.first_failure, Some(2));
    }

    #[test]
    fn rho_certificate_depth_guard() {
        let cf = expand_cf(golden(), 0.0, 10).unwrap();
        let p = DiophantineParams::new(2.0, 0.4, 0.1).unwrap();
        assert!(check_rho_condition(&cf, 0.3, &p, cf.depth()).is_err());
    }
}
