use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use super::{ContinuedFraction, DiophantineParams};
use crate::error::{Error, Result};

/// Natural log of a big integer (accurate to ~1e-15 relative).
pub fn ln_big(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (n >> shift).to_f64().unwrap_or(0.0);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// The chosen subsequence of convergent denominators: `Q_k = q_{indices[k]}`
/// and `Qbar_k = q_{indices[k] + 1}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SelectedSubsequence {
    pub indices: Vec<usize>,
    pub q: Vec<BigUint>,
    pub q_bar: Vec<BigUint>,
    pub cal_a: f64,
    pub m: f64,
    /// The construction ran out of convergents before it could continue.
    pub truncated: bool,
    /// Built by taking every denominator instead of the bridge construction.
    pub all_denominators: bool,
}

impl SelectedSubsequence {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn q_f64(&self, k: usize) -> f64 {
        self.q[k].to_f64().unwrap_or(f64::INFINITY)
    }

    pub fn q_bar_f64(&self, k: usize) -> f64 {
        self.q_bar[k].to_f64().unwrap_or(f64::INFINITY)
    }

    /// The elements at positions `picks`, in the given order.
    pub fn subsequence(&self, picks: &[usize]) -> Self {
        SelectedSubsequence {
            indices: picks.iter().map(|&i| self.indices[i]).collect(),
            q: picks.iter().map(|&i| self.q[i].clone()).collect(),
            q_bar: picks.iter().map(|&i| self.q_bar[i].clone()).collect(),
            ..self.clone()
        }
    }

    /// Every convergent denominator `q_n` with `q_n >= 2` or `n = n_0`, in
    /// order. This ignores the bridge dichotomy; it is the sequence the
    /// adaptive driver draws candidates from.
    pub fn all_denominators(cf: &ContinuedFraction) -> Result<Self> {
        if cf.depth() < 2 {
            return Err(Error::InsufficientDepth("need at least q_2".into()));
        }
        let n0 = start_index(cf);
        let indices: Vec<usize> = (n0..cf.depth()).collect();
        Ok(Self::from_indices(cf, indices, f64::NAN, f64::NAN, false, true))
    }

    fn from_indices(
        cf: &ContinuedFraction,
        indices: Vec<usize>,
        cal_a: f64,
        m: f64,
        truncated: bool,
        all_denominators: bool,
    ) -> Self {
        let q = indices.iter().map(|&i| cf.q[i].clone()).collect();
        let q_bar = indices.iter().map(|&i| cf.q[i + 1].clone()).collect();
        SelectedSubsequence { indices, q, q_bar, cal_a, m, truncated, all_denominators }
    }
}

/// `n_0`: largest index with `q_n = 1`, so `Qbar_0 = q_{n_0 + 1} >= 2`.
fn start_index(cf: &ContinuedFraction) -> usize {
    if cf.depth() >= 1 && cf.q[1] == BigUint::from(1u32) {
        1
    } else {
        0
    }
}

/// `(q_l, q_n)` is a CD bridge with exponents `(a, b, c)`: all intermediate
/// denominators grow by at most the power `a`, and `q_l^b <= q_n <= q_l^c`.
pub fn is_cd_bridge(ln_q: &[f64], l: usize, n: usize, a: f64, b: f64, c: f64) -> bool {
    if n <= l || n >= ln_q.len() {
        return false;
    }
    if (l..n).any(|i| ln_q[i + 1] > a * ln_q[i]) {
        return false;
    }
    ln_q[n] >= b * ln_q[l] && ln_q[n] <= c * ln_q[l]
}

/// Builds the subsequence `(Q_k)` from the convergents of `cf`.
///
/// `Q_{k+1}` is the next denominator `q_n > Q_k` followed by a big jump
/// `q_{n+1} > q_n^A`, provided `q_n <= Qbar_k^{A^4}`. Otherwise a chain of
/// bridges is inserted, each hop taken as long as possible. When the
/// convergents run out the construction stops and `truncated` is set.
pub fn select_q(cf: &ContinuedFraction, params: &DiophantineParams) -> Result<SelectedSubsequence> {
    if cf.depth() < 2 {
        return Err(Error::InsufficientDepth("need at least q_2".into()));
    }
    let a = params.cal_a();
    let depth = cf.depth();
    let ln_q: Vec<f64> = cf.q.iter().map(ln_big).collect();
    let mut indices = vec![start_index(cf)];

    'outer: loop {
        let nk = *indices.last().expect("nonempty");
        if nk + 1 >= depth {
            // Qbar_k is the last available denominator; nothing more to decide
            break;
        }
        let ln_qbar = ln_q[nk + 1];
        let jump = (nk + 1..depth).find(|&n| ln_q[n] > ln_q[nk] && ln_q[n + 1] > a * ln_q[n]);
        if let Some(n) = jump {
            if ln_q[n] <= a.powi(4) * ln_qbar {
                indices.push(n);
                continue;
            }
        }
        // bridge chain from Qbar_k towards the jump (or as far as possible)
        let limit = jump.unwrap_or(depth - 1);
        let mut base = nk + 1;
        loop {
            let valid = |m: usize| {
                m < depth
                    && is_cd_bridge(&ln_q, base, m, a, a, a.powi(3))
                    && is_cd_bridge(&ln_q, base + 1, m, a, a, a.powi(3))
            };
            if jump.is_some() && valid(limit) {
                indices.push(limit);
                continue 'outer;
            }
            match (base + 2..=limit).rev().find(|&m| valid(m)) {
                Some(m) => {
                    indices.push(m);
                    base = m;
                    if base + 1 >= depth {
                        break 'outer;
                    }
                }
                None => {
                    break 'outer;
                }
            }
        }
    }
    // every exit above is the expansion running out before the construction
    // could decide the next element
    Ok(SelectedSubsequence::from_indices(cf, indices, a, params.m, true, false))
}
