//! Oracles written independently of the library: exact best-denominator
//! search, exact convergent phases and a checker for the selected
//! subsequence.

#![allow(dead_code)]

use num_bigint::BigUint;

/// `alpha = n / 2^53`, as produced by uniform `f64` sampling.
pub const DYADIC_BITS: u32 = 53;

/// A uniform `alpha in (2^-13, 1 - 2^-13)` with its exact numerator.
pub fn random_dyadic(rng: &mut impl rand::Rng) -> (f64, u64) {
    let n = rng.gen_range(1u64 << 40..(1u64 << DYADIC_BITS) - (1u64 << 40));
    (n as f64 / (1u64 << DYADIC_BITS) as f64, n)
}

/// `‖q n / 2^53‖` scaled by `2^53`, exactly.
pub fn dist_scaled(q: u64, n: u64) -> u64 {
    let d = 1u128 << DYADIC_BITS;
    let r = ((q as u128) * (n as u128) % d) as u64;
    r.min((d as u64) - r)
}

/// Denominators `q <= q_max` with `‖q alpha‖` strictly below every earlier
/// `‖q' alpha‖`.
pub fn record_denominators(n: u64, q_max: u64) -> Vec<u64> {
    let mut best = u64::MAX;
    let mut out = Vec::new();
    for q in 1..=q_max {
        let d = dist_scaled(q, n);
        if d < best {
            best = d;
            out.push(q);
        }
    }
    out
}

/// Convergents `p_K / q_K` of `[0; a_1, a_2, ...]`, continuing with ones,
/// until `q_K > q_min`.
pub fn convergent(head: &[u64], q_min: u128) -> (u128, u128) {
    let (mut p0, mut q0, mut p1, mut q1) = (1u128, 0u128, 0u128, 1u128);
    let mut k = 0;
    while q1 <= q_min {
        let a = head.get(k).copied().unwrap_or(1) as u128;
        (p0, q0, p1, q1) = (p1, q1, a * p1 + p0, a * q1 + q0);
        k += 1;
    }
    (p1, q1)
}

/// `k alpha mod 1` through an exact convergent with `q > 1e18`.
pub struct ExactPhase {
    p: u128,
    q: u128,
}

impl ExactPhase {
    pub fn new(head: &[u64]) -> Self {
        let (p, q) = convergent(head, 1_000_000_000_000_000_000);
        ExactPhase { p, q }
    }

    pub fn phase(&self, k: u64) -> f64 {
        ((k as u128 * self.p) % self.q) as f64 / self.q as f64
    }
}

/// `x <= base^e` for integer `e >= 1`, exactly.
pub fn le_pow(x: &BigUint, base: &BigUint, e: u32) -> bool {
    let bb = base.bits();
    if bb <= 1 {
        return x <= base;
    }
    let (lo, hi) = (e as u64 * (bb - 1) + 1, e as u64 * bb);
    if x.bits() < lo {
        return true;
    }
    if x.bits() > hi {
        return false;
    }
    *x <= base.pow(e)
}

/// `x >= base^e`, exactly.
pub fn ge_pow(x: &BigUint, base: &BigUint, e: u32) -> bool {
    let bb = base.bits();
    if bb <= 1 {
        return x >= base;
    }
    let (lo, hi) = (e as u64 * (bb - 1) + 1, e as u64 * bb);
    if x.bits() > hi {
        return true;
    }
    if x.bits() < lo {
        return false;
    }
    *x >= base.pow(e)
}

/// `(q_l, q_n)` is a CD(a, b, c) bridge.
pub fn cd_bridge(q: &[BigUint], l: usize, n: usize, a: u32, b: u32, c: u32) -> bool {
    n > l
        && n < q.len()
        && (l..n).all(|i| le_pow(&q[i + 1], &q[i], a))
        && ge_pow(&q[n], &q[l], b)
        && le_pow(&q[n], &q[l], c)
}

#[derive(Debug, Default)]
pub struct SelectionCheck {
    pub elements: usize,
    pub jumps: usize,
    pub bridged: usize,
}

/// Checks the invariants of a selection `n_0 < n_1 < ...` on denominators
/// `q` with integer exponent `a = 2M`: `Q_0 = 1`, `Q_{k+1} <= Qbar_k^{a^4}`
/// and, for `k >= 1`, `Qbar_k >= Q_k^a` or both `(Qbar_{k-1}, Q_k)` and
/// `(Q_k, Q_{k+1})` are CD(a, a, a^3) bridges. The second bridge is waived
/// for the last element of a truncated selection.
pub fn check_selection(q: &[BigUint], idx: &[usize], a: u32, truncated: bool) -> Result<SelectionCheck, String> {
    let mut out = SelectionCheck { elements: idx.len(), ..Default::default() };
    if idx.is_empty() {
        return Err("empty selection".into());
    }
    if q[idx[0]] != BigUint::from(1u32) {
        return Err(format!("Q_0 = {} != 1", q[idx[0]]));
    }
    if idx.windows(2).any(|w| w[1] <= w[0]) || idx.iter().any(|&n| n + 1 >= q.len()) {
        return Err(format!("indices {idx:?} not increasing or without Qbar"));
    }
    let a4 = a.pow(4);
    for k in 0..idx.len() {
        let (n, qk, qbar) = (idx[k], &q[idx[k]], &q[idx[k] + 1]);
        if let Some(&next) = idx.get(k + 1) {
            if !le_pow(&q[next], qbar, a4) {
                return Err(format!("Q_{} > Qbar_{k}^(A^4)", k + 1));
            }
        }
        if k == 0 {
            continue;
        }
        if ge_pow(qbar, qk, a) {
            out.jumps += 1;
            continue;
        }
        let prev_bar = idx[k - 1] + 1;
        let first = cd_bridge(q, prev_bar, n, a, a, a.pow(3));
        let second = match idx.get(k + 1) {
            Some(&next) => cd_bridge(q, n, next, a, a, a.pow(3)),
            None => truncated,
        };
        if !(first && second) {
            return Err(format!("k = {k}: no jump and bridges ({first}, {second}) at indices {idx:?}"));
        }
        out.bridged += 1;
    }
    Ok(out)
}
