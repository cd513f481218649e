use serde::{Deserialize, Serialize};

use super::AnalyticFunction;
use crate::arithmetic::{DiophantineParams, Frequency, SelectedSubsequence};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DenjoyRow {
    pub k: usize,
    pub q: f64,
    pub q_bar: f64,
    pub h_k: f64,
    /// `‖S_{Q_k} f - Q_k f^(0)‖_{h_k}` (certified upper norm).
    pub measured: f64,
    /// `‖f - f^(0)‖_h (Q_k^-M + Qbar_k^{-1+1/M})`.
    pub bound: f64,
    pub ratio: f64,
    /// Largest `‖S_l f - l f^(0)‖_{h_k}` over the sampled `l <= Q_{k+1}`,
    /// divided by `‖f - f^(0)‖_h (Qbar_k Q_k^-M + Qbar_k^{1/M})`.
    pub ratio_intermediate: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DenjoyReport {
    pub m: f64,
    pub h: f64,
    pub eta: f64,
    pub rows: Vec<DenjoyRow>,
    /// Rows skipped because `Q_k L` exceeds the exact-phase range.
    pub skipped: usize,
    pub max_ratio: f64,
}

impl DenjoyReport {
    /// Whether `ratio` is non-increasing for `k >= k0`, allowing a relative
    /// slack `rel`.
    pub fn nonincreasing_from(&self, k0: usize, rel: f64) -> Option<(usize, usize)> {
        let rows: Vec<&DenjoyRow> = self.rows.iter().filter(|r| r.k >= k0).collect();
        rows.windows(2)
            .find(|w| w[1].ratio > w[0].ratio * (1.0 + rel))
            .map(|w| (w[0].k, w[1].k))
    }
}

const EXACT_PHASE_LIMIT: f64 = 4.0e15;

/// Measures the Birkhoff-sum deviations along the selected denominators and
/// compares them with the Denjoy-type bounds without their constant.
///
/// `h_k = h (1 - eta / k^2)`, `k >= 1`.
pub fn verify_denjoy_bounds(
    f: &AnalyticFunction,
    alpha: &Frequency,
    seq: &SelectedSubsequence,
    params: &DiophantineParams,
    h: f64,
    eta: f64,
) -> Result<DenjoyReport> {
    if h > f.h * (1.0 + 1e-12) {
        return Err(Error::OutsideStrip { requested: h, available: f.h });
    }
    let m = params.m;
    let centered = f.zero_mean();
    let base = centered.norm_upper(h)?;
    let mut rows = Vec::new();
    let mut skipped = 0;
    for k in 1..seq.len() {
        let q = seq.q_f64(k);
        let q_bar = seq.q_bar_f64(k);
        let q_next = if k + 1 < seq.len() { seq.q_f64(k + 1) } else { q_bar };
        if q * f.degree().max(1) as f64 > EXACT_PHASE_LIMIT || !q_bar.is_finite() {
            skipped += 1;
            continue;
        }
        let h_k = h * (1.0 - eta / (k * k) as f64);
        let dev = |n: f64| -> Result<f64> {
            let s = centered.birkhoff_sum(alpha, n as u64)?;
            s.norm_upper(h_k)
        };
        let measured = dev(q)?;
        let bound = base * (q.powf(-m) + q_bar.powf(-1.0 + 1.0 / m));
        let ratio = if base == 0.0 { 0.0 } else { measured / bound };
        // sample l up to Q_{k+1}: Qbar_k, a few multiples of Q_k, and Q_{k+1}
        let l_max = q_next.min(EXACT_PHASE_LIMIT / f.degree().max(1) as f64);
        let mut ls = vec![q_bar.min(l_max), l_max];
        for j in 1..=4 {
            ls.push((q * j as f64).min(l_max));
        }
        let mut worst: f64 = 0.0;
        for l in ls {
            if l >= 1.0 {
                worst = worst.max(dev(l.floor())?);
            }
        }
        let bound_i = base * (q_bar * q.powf(-m) + q_bar.powf(1.0 / m));
        let ratio_intermediate = if base == 0.0 { 0.0 } else { worst / bound_i };
        rows.push(DenjoyRow { k, q, q_bar, h_k, measured, bound, ratio, ratio_intermediate });
    }
    let max_ratio = rows.iter().map(|r| r.ratio.max(r.ratio_intermediate)).fold(0.0, f64::max);
    Ok(DenjoyReport { m, h, eta, rows, skipped, max_ratio })
}
