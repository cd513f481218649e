//! Passing from `(alpha, A)` to `(Q alpha, A^{(Q)})` in rotation form.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{inv_rotation_minus_id_norm, KamConfig};
use crate::analytic::{AnalyticFunction, MatrixFunction};
use crate::arithmetic::{DiophantineParams, Frequency, SelectedSubsequence};
use crate::cocycle::{Cocycle, RotationForm};
use crate::error::{Error, Result};

/// `U_k = exp(-Qbar_k Q_k^{-b} - Qbar_k^a)`, computed in logs.
pub fn u_k(q: f64, q_bar: f64, params: &DiophantineParams) -> f64 {
    let (lq, lqb) = (q.ln(), q_bar.ln());
    (-(lqb - params.b() * lq).exp() - (params.a() * lqb).exp()).exp()
}

/// Bound on `sup_{k <= n} ‖S_k phi - k phi^(0)‖_h`: mode `l` contributes at
/// most `|c_l| e^{2 pi |l| h} min(n, 1/|sin(pi l alpha)|)`.
pub fn birkhoff_deviation_bound(phi: &AnalyticFunction, alpha: &Frequency, n: u64, h: f64) -> f64 {
    let d = phi.degree() as i64;
    let nf = n as f64;
    let body: f64 = (-d..=d)
        .filter(|&l| l != 0)
        .map(|l| {
            let s = (PI * alpha.signed_phase(l as f64)).sin().abs();
            let factor = if s > 0.0 { nf.min(1.0 / s) } else { nf };
            phi.coeff(l).norm() * (2.0 * PI * l.abs() as f64 * h).exp() * factor
        })
        .sum();
    body + nf * phi.tail
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AqReport {
    pub q: u64,
    pub q_bar: f64,
    /// Strip `h (1 - eta_{k+1})` of the checks.
    pub strip: f64,
    /// `‖phi^(Q) - phi^(Q)^(0)‖`.
    pub phi_deviation: f64,
    /// `‖(R_{2 phi^(Q)} - id)^{-1}‖`.
    pub inv_norm: f64,
    /// `4 / (eps (Q^-tau + Qbar^-nu))`.
    pub inv_bound: f64,
    pub xi_norm: f64,
    /// Product bound `exp(Q ‖R_{S_k phi}‖^2 ‖xi‖) - 1`.
    pub xi_bound: f64,
    pub u_k: f64,
    /// Conclusions (1), (2) and (3).
    pub checks: [bool; 3],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AqResult {
    pub q: u64,
    /// Signed representative of `Q alpha` of smallest modulus.
    pub alpha_bar: f64,
    /// `A^{(Q)}`.
    pub a_q: MatrixFunction,
    /// `A^{(Q)} = R_{phi^(Q)} (id + xi^(Q))` with the mean of `phi^(Q)`
    /// reduced mod 1.
    pub form_q: RotationForm,
    /// `eps (Q^-tau + Qbar^-nu) / 4`, a lower bound for
    /// `‖(R_{2 phi^(Q)} - id)^{-1}‖^{-1}` implied by the admission condition.
    pub rho_k: f64,
    pub report: AqReport,
}

/// Iterates `A = R_phi (id + xi)` to `Q = Q_{k+1}` of `seq`.
///
/// `phi^(Q) = S_Q phi` comes from the closed-form Birkhoff sum and
/// `A^{(Q)}` from binary splitting. The checks use the strip
/// `h (1 - eta_{k+1})`.
pub fn aq_iterate(
    form: &RotationForm,
    alpha: &Frequency,
    seq: &SelectedSubsequence,
    k: usize,
    h: f64,
    cfg: &KamConfig,
) -> Result<AqResult> {
    if k + 1 >= seq.len() {
        return Err(Error::InsufficientDepth(format!("no Q_{} in a sequence of length {}", k + 1, seq.len())));
    }
    let params = cfg.params()?;
    let uk = u_k(seq.q_f64(k), seq.q_bar_f64(k), &params);
    let phi_dev_in = form.phi.zero_mean().norm_upper(h)?;
    if phi_dev_in > cfg.d {
        return Err(Error::AqContractViolated { which: "input phi".into(), measured: phi_dev_in, bound: cfg.d });
    }
    let xi_in = form.xi_norm(h)?;
    if !cfg.adaptive && xi_in > uk {
        return Err(Error::AqContractViolated { which: "input xi vs U_k".into(), measured: xi_in, bound: uk });
    }
    let qf = seq.q_f64(k + 1);
    if qf > cfg.max_q || qf > u64::MAX as f64 {
        return Err(Error::InsufficientDepth(format!("Q = {qf:e} exceeds max_q")));
    }
    let q = qf as u64;
    let q_bar = seq.q_bar_f64(k + 1);
    let strip = h * (1.0 - cfg.eta_k(k + 1));

    let a = form.reconstruct();
    let a_q = Cocycle::new(alpha.clone(), a)?.iterate(q as i64)?;
    let s = form.phi.birkhoff_sum(alpha, q)?;
    let phi_q = s.add_const(-s.mean().round());
    let form_q = RotationForm::from_matrix(&a_q, &phi_q);

    let phi_deviation = phi_q.zero_mean().norm_upper(strip)?;
    let inv_norm = inv_rotation_minus_id_norm(&phi_q.scale(2.0), strip)?;
    let spread = qf.powf(-params.tau) + q_bar.powf(-params.nu);
    let inv_bound = 4.0 / (params.eps * spread);
    let xi_norm = form_q.xi_norm(strip)?;
    let m = (2.0 * PI * birkhoff_deviation_bound(&form.phi, alpha, q, strip)).exp();
    let xi_bound = (qf * m * m * form.xi_norm(strip)?).exp_m1();
    let checks = [phi_deviation <= cfg.d, inv_norm < inv_bound, xi_norm <= uk.sqrt()];
    let report = AqReport {
        q,
        q_bar,
        strip,
        phi_deviation,
        inv_norm,
        inv_bound,
        xi_norm,
        xi_bound,
        u_k: uk,
        checks,
    };
    let names = ["(1) phi deviation", "(2) inverse rotation norm", "(3) xi vs U_k^(1/2)"];
    let values = [(phi_deviation, cfg.d), (inv_norm, inv_bound), (xi_norm, uk.sqrt())];
    // the adaptive driver records the U_k comparisons but judges steps by
    // measured contraction
    let fatal = if cfg.adaptive { 2 } else { 3 };
    if let Some(i) = checks[..fatal].iter().position(|ok| !ok) {
        return Err(Error::AqContractViolated { which: names[i].into(), measured: values[i].0, bound: values[i].1 });
    }
    Ok(AqResult {
        q,
        alpha_bar: alpha.signed_phase(qf),
        a_q,
        form_q,
        rho_k: 0.25 * params.eps * spread,
        report,
    })
}
