use serde::{Deserialize, Serialize};

use super::{expand_cf_partial, ContinuedFraction, DoubleDouble};
use crate::error::{Error, Result};

/// Partial quotients given symbolically: `head` followed by `tail` forever.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct QuotientTail {
    pub head: Vec<u64>,
    pub tail: u64,
}

impl QuotientTail {
    pub fn quotient(&self, k: usize) -> u64 {
        // k is 1-based
        self.head.get(k - 1).copied().unwrap_or(self.tail)
    }
}

/// The base frequency `alpha`, held in double-double so that phases
/// `n alpha mod 1` stay accurate for `n` up to ~10^14.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Frequency {
    pub value: DoubleDouble,
    /// Absolute uncertainty of `value` as an approximation of the intended
    /// number (zero contribution beyond rounding for exact quotient input).
    pub uncertainty: f64,
    pub quotients: Option<QuotientTail>,
}

impl Frequency {
    pub fn from_f64(alpha: f64) -> Result<Self> {
        Self::from_dd(DoubleDouble::from_f64(alpha), 0.5 * alpha.abs() * f64::EPSILON)
    }

    pub fn from_dd(value: DoubleDouble, uncertainty: f64) -> Result<Self> {
        if !(value.hi > 0.0 && value.hi < 1.0) {
            return Err(Error::InvalidInput(format!(
                "frequency must lie in (0, 1), got {}",
                value.to_f64()
            )));
        }
        Ok(Frequency { value, uncertainty, quotients: None })
    }

    /// `[0; head..., tail, tail, ...]`.
    pub fn from_quotient_tail(head: Vec<u64>, tail: u64) -> Result<Self> {
        if tail == 0 || head.contains(&0) {
            return Err(Error::InvalidInput("partial quotients must be positive".into()));
        }
        let spec = QuotientTail { head, tail };
        let mut list = spec.head.clone();
        // pad until q exceeds 1e40 so p/q agrees with alpha to double-double
        let mut cf = ContinuedFraction::from_quotients(&list)?;
        while cf.q_f64(cf.depth()) < 1e40 {
            list.push(spec.quotient(list.len() + 1));
            cf = ContinuedFraction::from_quotients(&list)?;
        }
        let value = cf.convergent_value(cf.depth());
        Ok(Frequency { value, uncertainty: 4.0 * DoubleDouble::EPSILON, quotients: Some(spec) })
    }

    /// Explicit quotient list, continued by ones.
    pub fn from_quotients(head: Vec<u64>) -> Result<Self> {
        Self::from_quotient_tail(head, 1)
    }

    pub fn golden() -> Self {
        Self::from_quotient_tail(Vec::new(), 1).expect("golden mean")
    }

    /// `sqrt(2) - 1`.
    pub fn sqrt2() -> Self {
        Self::from_quotient_tail(Vec::new(), 2).expect("sqrt2")
    }

    pub fn to_f64(&self) -> f64 {
        self.value.to_f64()
    }

    /// `n alpha mod 1` in `[0, 1)`; `n` must be an integer below 2^53.
    pub fn phase(&self, n: f64) -> f64 {
        let f = self.value.mul_int(n).fract().to_f64();
        if f >= 1.0 {
            0.0
        } else {
            f
        }
    }

    /// `n alpha` reduced to `[-1/2, 1/2]`.
    pub fn signed_phase(&self, n: f64) -> f64 {
        self.value.mul_int(n).signed_frac().to_f64()
    }

    /// Continued fraction with denominators up to `max_q`. Exact input always
    /// keeps its whole explicit head.
    pub fn continued_fraction(&self, max_q: f64) -> Result<ContinuedFraction> {
        match &self.quotients {
            Some(spec) => {
                let mut list = spec.head.clone();
                loop {
                    let k = list.len() + 1;
                    let mut trial = list.clone();
                    trial.push(spec.quotient(k));
                    let cf = ContinuedFraction::from_quotients(&trial)?;
                    if cf.q_f64(cf.depth()) > max_q {
                        break;
                    }
                    list = trial;
                }
                let mut cf = ContinuedFraction::from_quotients(&list)?;
                cf.alpha = self.value;
                Ok(cf)
            }
            None => expand_cf_partial(self.value, self.uncertainty, max_q.min(9.0e18) as u64),
        }
    }

    /// Continued fraction with exactly `depth` partial quotients (exact input
    /// only; float input is expanded as far as precision allows).
    pub fn continued_fraction_depth(&self, depth: usize) -> Result<ContinuedFraction> {
        match &self.quotients {
            Some(spec) => {
                let list: Vec<u64> = (1..=depth.max(spec.head.len())).map(|k| spec.quotient(k)).collect();
                let mut cf = ContinuedFraction::from_quotients(&list)?;
                cf.alpha = self.value;
                Ok(cf)
            }
            None => {
                let cf = expand_cf_partial(self.value, self.uncertainty, u64::MAX / 4)?;
                if cf.depth() < depth {
                    return Err(Error::InsufficientDepth(format!(
                        "requested {depth} quotients, precision allows {}",
                        cf.depth()
                    )));
                }
                let mut short = ContinuedFraction::from_quotients(&cf.quotients[..depth])?;
                short.alpha = self.value;
                short.exact = false;
                Ok(short)
            }
        }
    }
}

/// Parses `expr:golden`, `expr:sqrt2` or a decimal string. Decimal input is
/// treated as known to half a unit in its last digit.
pub fn parse_alpha(s: &str) -> Result<Frequency> {
    let s = s.trim();
    match s {
        "expr:golden" => return Ok(Frequency::golden()),
        "expr:sqrt2" => return Ok(Frequency::sqrt2()),
        _ => {}
    }
    if let Some(rest) = s.strip_prefix("expr:") {
        return Err(Error::InvalidInput(format!("unknown expression '{rest}'")));
    }
    let bad = || Error::InvalidInput(format!("cannot parse frequency '{s}'"));
    if s.contains(['e', 'E']) {
        let x: f64 = s.parse().map_err(|_| bad())?;
        return Frequency::from_f64(x);
    }
    let (int_part, frac_part) = s.split_once('.').unwrap_or((s, ""));
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
        || (int_part.is_empty() && frac_part.is_empty())
    {
        return Err(bad());
    }
    if int_part.chars().any(|c| c != '0') {
        return Err(Error::InvalidInput(format!("frequency must lie in (0, 1), got {s}")));
    }
    let ten = DoubleDouble::from_f64(10.0);
    let mut v = DoubleDouble::ZERO;
    for c in frac_part.chars().rev() {
        let d = f64::from(c.to_digit(10).unwrap_or(0));
        v = (v + DoubleDouble::from_f64(d)) / ten;
    }
    let digits = frac_part.len() as i32;
    let u = (0.5 * 10f64.powi(-digits)).max(4.0 * DoubleDouble::EPSILON * (digits as f64 + 1.0));
    Frequency::from_dd(v, u)
}
