//! The outer loop: admission, repeated inductive steps, and the final
//! verification.

use serde::{Deserialize, Serialize};

use super::{aq_iterate, angle_function, ct_commuting, ct_step, u_k, KamConfig};
use crate::analytic::{AnalyticFunction, MatrixFunction};
use crate::arithmetic::{
    check_rho_condition, select_q, ContinuedFraction, Frequency, RhoCertificate, SelectedSubsequence,
};
use crate::cocycle::{rotation_number, Cocycle, RotationForm};
use crate::error::{Error, Result};
use crate::linalg::Mat2;

/// Version tag embedded in serialized results.
pub const FORMAT_VERSION: &str = "cocycle-kam/1";

/// Denominators up to this size are expanded for step candidates and
/// their successors.
const CF_MAX_Q: f64 = 1e18;

/// JSON has no infinity: serde_json writes it as `null`, read back here.
fn unbounded<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KamStatus {
    Converged,
    Stalled,
    PreconditionFailed,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepRecord {
    /// Index of the state produced by this step.
    pub k: usize,
    pub q: u64,
    #[serde(deserialize_with = "unbounded")]
    pub q_bar: f64,
    #[serde(deserialize_with = "unbounded")]
    pub alpha_bar: f64,
    pub eta: f64,
    /// `h_k` after the step.
    pub h: f64,
    /// Certified `‖xi_k‖_{h_k}` after the step.
    #[serde(deserialize_with = "unbounded")]
    pub xi_norm: f64,
    /// Certified `‖B_k - id‖_{h_k}`.
    #[serde(deserialize_with = "unbounded")]
    pub b_minus_id: f64,
    /// Inner loop length of the conjugation step.
    pub n_inner: usize,
    /// Residual `‖xi‖` of `A^{(Q)}` before and after the inner loop.
    #[serde(deserialize_with = "unbounded")]
    pub xi_q: f64,
    #[serde(deserialize_with = "unbounded")]
    pub xi_q_final: f64,
    /// `‖L‖` of the symmetrization.
    #[serde(deserialize_with = "unbounded")]
    pub l_norm: f64,
    #[serde(deserialize_with = "unbounded")]
    pub u_k: f64,
    #[serde(deserialize_with = "unbounded")]
    pub u_next: f64,
    /// `‖B_k - id‖ <= U_k^{1/4}`, `‖xi_{k+1}‖ <= U_{k+1}` and
    /// `‖phi_{k+1} - phi^(0)‖ <= D - eta_{k+1}`.
    pub contract: [bool; 3],
    pub candidates_tried: usize,
}

/// State between inductive steps.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KamState {
    pub k: usize,
    pub h_k: f64,
    /// `A_k` itself and its rotation form.
    pub a: MatrixFunction,
    pub form: RotationForm,
    pub u_k: f64,
    pub eta_k: f64,
    /// Position of `Q_k` in the denominator sequence.
    pub seq_index: usize,
    pub b_accum: MatrixFunction,
    pub residual_history: Vec<f64>,
    pub records: Vec<StepRecord>,
}

/// Serializable outcome of [`reduce_to_rotations`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KamResult {
    pub format_version: String,
    pub status: KamStatus,
    pub message: Option<String>,
    pub config: KamConfig,
    pub alpha: Frequency,
    /// The input `A` on the working strip and degree.
    pub original: MatrixFunction,
    /// Constant `C` bringing the mean of `A` to a rotation.
    pub normalizer: Option<Mat2>,
    /// Total conjugacy `B = B_k ... B_0 C`.
    pub b: MatrixFunction,
    pub phi: AnalyticFunction,
    pub rho: Option<f64>,
    pub rho_spread: Option<f64>,
    pub certificate: Option<RhoCertificate>,
    /// Passed the certificate and the `eps0` admission.
    pub admitted: bool,
    /// Certified `‖xi‖` on `final_strip`.
    #[serde(deserialize_with = "unbounded")]
    pub final_residual: f64,
    pub final_strip: f64,
    /// Relative grid defect of `B(x+alpha) A(x) B(x)^{-1} = R_phi(x)`.
    #[serde(deserialize_with = "unbounded")]
    pub grid_residual: f64,
    /// `‖B C^{-1} - id‖` on `final_strip`.
    #[serde(deserialize_with = "unbounded")]
    pub b_minus_id: f64,
    pub history: Vec<StepRecord>,
}

/// Constant `C` in SL(2,R), symmetric positive, with `C m C^{-1}` a
/// rotation; `None` unless `m` (scaled to determinant one) is elliptic.
///
/// `C = P^{1/2} / det(P)^{1/4}` where `P` is the quadratic form preserved by
/// `m`, built from an eigenvector `u + i w` as `(u u^T + w w^T)^{-1}`.
pub fn constant_normalizer(m: Mat2) -> Option<Mat2> {
    let det = m.det();
    if !(det > 0.0) {
        return None;
    }
    let m = m.scale(det.sqrt().recip());
    let t = 0.5 * m.trace();
    if !(t.abs() < 1.0) {
        return None;
    }
    let s = (1.0 - t * t).sqrt();
    // eigenvector for t + i s
    let (u, w) = if m.b.abs() >= m.c.abs() {
        ((m.b, t - m.a), (0.0, s))
    } else {
        ((t - m.d, m.c), (s, 0.0))
    };
    let p0 = Mat2::new(u.0 * u.0 + w.0 * w.0, u.0 * u.1 + w.0 * w.1, u.0 * u.1 + w.0 * w.1, u.1 * u.1 + w.1 * w.1);
    let p = p0.inv();
    let c = p.sqrt_spd();
    Some(c.scale(c.det().sqrt().recip()))
}

fn mean_matrix(a: &MatrixFunction) -> Mat2 {
    Mat2::new(a.a.mean(), a.b.mean(), a.c.mean(), a.d.mean())
}

/// One step `A_k -> A_{k+1}`: iterate to `Q_{k+1}`, conjugate the iterate
/// to rotations, transport the conjugacy to `(alpha, A_k)` and symmetrize.
///
/// With `cfg.adaptive`, every later denominator of `seq` within `max_q`
/// with `Qbar >= T` is tried and the one giving the smallest new residual
/// is kept; otherwise `Q_{k+1}` is the next element and the contract of the
/// step is enforced.
pub fn inductive_step(
    state: &KamState,
    alpha: &Frequency,
    seq: &SelectedSubsequence,
    cfg: &KamConfig,
) -> Result<KamState> {
    let cur = state.seq_index;
    if !cfg.adaptive && seq.q_bar_f64(cur) < cfg.t_threshold && state.k > 0 {
        return Err(Error::Precondition(format!(
            "Qbar_k = {} below T = {}",
            seq.q_bar_f64(cur),
            cfg.t_threshold
        )));
    }
    let candidates: Vec<usize> = if cfg.adaptive {
        (cur + 1..seq.len())
            .filter(|&j| seq.q_f64(j) <= cfg.max_q && seq.q_bar_f64(j) >= cfg.t_threshold)
            .collect()
    } else {
        vec![cur + 1]
    };
    if candidates.is_empty() || candidates[0] >= seq.len() {
        return Err(Error::InsufficientDepth("no further denominator available".into()));
    }
    let mut best: Option<KamState> = None;
    let mut last_err = None;
    let tried = candidates.len();
    for j in candidates {
        match step_with(state, alpha, &seq.subsequence(&[cur, j]), j, cfg) {
            Ok(mut next) => {
                if let Some(r) = next.records.last_mut() {
                    r.candidates_tried = tried;
                }
                let better = best.as_ref().is_none_or(|b| {
                    next.residual_history.last() < b.residual_history.last()
                });
                if better {
                    best = Some(next);
                }
            }
            Err(e) => {
                last_err = Some(e)
            }
        }
    }
    best.ok_or_else(|| last_err.expect("at least one candidate"))
}

fn step_with(
    state: &KamState,
    alpha: &Frequency,
    pair: &SelectedSubsequence,
    j: usize,
    cfg: &KamConfig,
) -> Result<KamState> {
    let params = cfg.params()?;
    let eta = cfg.eta_k(state.k + 1);
    let h = state.h_k;
    let h_next = h * (1.0 - eta) * (1.0 - eta);
    let aq = aq_iterate(&state.form, alpha, pair, 0, h, cfg)?;
    let strip = aq.report.strip;
    let ct = ct_step(aq.alpha_bar, &aq.a_q, &aq.form_q.phi, eta, strip, cfg)?;
    let cm = ct_commuting(&ct, alpha, &state.a, aq.alpha_bar, &aq.a_q, state.form.phi.mean(), eta, strip, cfg)?;
    for (name, d) in [("conjugation step", ct.report.grid_defect), ("commuting step", cm.report.grid_defect)] {
        if !(d <= cfg.tol_identity) {
            return Err(Error::InductiveContractViolated(format!("{name} identity defect {d:e}")));
        }
    }
    let xi_norm = cm.form.xi_norm(h_next)?;
    let b_minus_id = ct.b.minus_identity().norm_upper(h_next)?;
    let u_next = u_k(pair.q_f64(1), pair.q_bar_f64(1), &params);
    let phi_dev = cm.phi.zero_mean().norm_upper(h_next)?;
    let contract = [b_minus_id <= state.u_k.powf(0.25), xi_norm <= u_next, phi_dev <= cfg.d - eta];
    if !cfg.adaptive && contract.contains(&false) {
        return Err(Error::InductiveContractViolated(format!(
            "‖B_k - id‖ = {b_minus_id:e} (U_k^1/4 = {:e}), ‖xi_k+1‖ = {xi_norm:e} (U_k+1 = {u_next:e}), \
             ‖phi - phi^0‖ = {phi_dev:e}",
            state.u_k.powf(0.25)
        )));
    }
    let record = StepRecord {
        k: state.k + 1,
        q: aq.q,
        q_bar: aq.report.q_bar,
        alpha_bar: aq.alpha_bar,
        eta,
        h: h_next,
        xi_norm,
        b_minus_id,
        n_inner: ct.report.n_used,
        xi_q: ct.report.input_residual,
        xi_q_final: ct.report.final_residual,
        l_norm: cm.report.l_norm,
        u_k: state.u_k,
        u_next,
        contract,
        candidates_tried: 1,
    };
    let mut residual_history = state.residual_history.clone();
    residual_history.push(xi_norm);
    let mut records = state.records.clone();
    records.push(record);
    Ok(KamState {
        k: state.k + 1,
        h_k: h_next,
        a: cm.a_tilde,
        form: cm.form,
        u_k: u_next,
        eta_k: eta,
        seq_index: j,
        b_accum: ct.b.mul(&state.b_accum),
        residual_history,
        records,
    })
}

/// Runs the reduction on `cocycle` and reports the outcome; failures of any
/// stage become a status with the ledger so far rather than an error.
pub fn reduce_to_rotations(cocycle: &Cocycle, cfg: &KamConfig) -> Result<KamResult> {
    cfg.validate()?;
    let h = cfg.h;
    if h > cocycle.h() * (1.0 + 1e-12) {
        return Err(Error::OutsideStrip { requested: h, available: cocycle.h() });
    }
    let original = cocycle.a.with_degree(cfg.degree).with_h(h);
    let alpha = cocycle.alpha.clone();
    let mut out = KamResult {
        format_version: FORMAT_VERSION.into(),
        status: KamStatus::PreconditionFailed,
        message: None,
        config: cfg.clone(),
        alpha: alpha.clone(),
        original: original.clone(),
        normalizer: None,
        b: MatrixFunction::identity(cfg.degree, h),
        phi: AnalyticFunction::zero(cfg.degree, h),
        rho: None,
        rho_spread: None,
        certificate: None,
        admitted: false,
        final_residual: f64::INFINITY,
        final_strip: h,
        grid_residual: f64::INFINITY,
        b_minus_id: f64::INFINITY,
        history: Vec::new(),
    };
    let fail = |mut out: KamResult, msg: String| {
        out.message = Some(msg);
        Ok(out)
    };

    let Some(c) = constant_normalizer(mean_matrix(&original)) else {
        return fail(out, "mean of A is not elliptic".into());
    };
    out.normalizer = Some(c);
    let n = crate::analytic::grid_size(cfg.degree);
    let ov = original.sample(n);
    let a0 = MatrixFunction::collocate(n, cfg.degree, h, c.norm_op().powi(2), |j| c * ov[j] * c.inv_sl2());
    let coc0 = match Cocycle::new(alpha.clone(), a0.clone()) {
        Ok(x) => x,
        Err(e) => return fail(out, format!("normalized cocycle: {e}")),
    };
    if coc0.homotopy_class != 0 {
        return fail(out, format!("homotopy class {}", coc0.homotopy_class));
    }
    let cf = alpha.continued_fraction(CF_MAX_Q)?;
    let est = match rotation_number(&coc0, &cfg.rotation, Some(&cf)) {
        Ok(r) => r,
        Err(e) => return fail(out, format!("rotation number: {e}")),
    };
    out.rho = Some(est.rho);
    out.rho_spread = Some(est.spread);
    let cert = match certify(&cf, est.rho, est.spread, cfg) {
        Ok(c) => c,
        Err(e) => return fail(out, format!("certificate: {e}")),
    };
    out.certificate = Some(cert.clone());
    if !cert.pass {
        return fail(out, format!("rho-condition fails at index {:?}", cert.first_failure));
    }

    let phi0 = angle_function(&a0, est.rho)?;
    let form0 = RotationForm::from_matrix(&a0, &phi0);
    let xi0 = form0.xi_norm(h)?;
    let phi_dev = phi0.zero_mean().norm_upper(h)?;
    if !(xi0 < cfg.eps0) || phi_dev > cfg.d {
        return fail(out, format!("admission: ‖xi_0‖ = {xi0:e} (eps0 = {:e}), ‖phi_0 - phi^0‖ = {phi_dev:e}", cfg.eps0));
    }
    out.admitted = true;
    let seq = if cfg.adaptive {
        SelectedSubsequence::all_denominators(&cf)?
    } else {
        select_q(&cf, &cfg.params()?)?
    };
    let params = cfg.params()?;
    let mut state = KamState {
        k: 0,
        h_k: h,
        a: a0.clone(),
        form: form0,
        u_k: u_k(seq.q_f64(0), seq.q_bar_f64(0), &params),
        eta_k: cfg.eta(),
        seq_index: 0,
        b_accum: MatrixFunction::identity(cfg.degree, h),
        residual_history: vec![xi0],
        records: Vec::new(),
    };
    let mut status = KamStatus::Stalled;
    let mut message = None;
    let mut slow_steps = 0;
    if xi0 <= cfg.tol_residual {
        status = KamStatus::Converged;
    } else {
        for _ in 0..cfg.max_outer {
            match inductive_step(&state, &alpha, &seq, cfg) {
                Ok(next) => {
                    let prev = *state.residual_history.last().expect("nonempty");
                    state = next;
                    let r = *state.residual_history.last().expect("nonempty");
                    if r <= cfg.tol_residual {
                        status = KamStatus::Converged;
                        break;
                    }
                    slow_steps = if r > 0.1 * prev { slow_steps + 1 } else { 0 };
                    if slow_steps >= 2 {
                        message = Some("two consecutive steps reduced the residual by less than 10x".into());
                        break;
                    }
                }
                Err(e) => {
                    if state.k == 0 {
                        status = KamStatus::PreconditionFailed;
                    }
                    message = Some(format!("step {}: {e}", state.k + 1));
                    break;
                }
            }
        }
        if status == KamStatus::Stalled && message.is_none() {
            message = Some(format!("max_outer = {} reached", cfg.max_outer));
        }
    }
    out.status = status;
    out.message = message;
    out.final_residual = *state.residual_history.last().expect("nonempty");
    out.final_strip = state.h_k;
    out.b_minus_id = state.b_accum.minus_identity().norm_upper(state.h_k)?;
    out.b = state.b_accum.mul(&MatrixFunction::constant(c, cfg.degree, h));
    out.phi = state.form.phi.clone();
    out.history = state.records;
    out.grid_residual = verify_result(&out).grid_residual;
    if out.status == KamStatus::Converged && out.final_strip < h - cfg.h_star {
        out.status = KamStatus::Stalled;
        out.message = Some(format!("final strip {} below h - h_star", out.final_strip));
    }
    Ok(out)
}

/// Certificate at `rho` and at `rho +- spread`, to the depth covering every
/// `q_i <= cert_q_max`.
fn certify(cf: &ContinuedFraction, rho: f64, spread: f64, cfg: &KamConfig) -> Result<RhoCertificate> {
    let depth = (0..cf.depth()).take_while(|&i| cf.q_f64(i) <= cfg.cert_q_max).last().unwrap_or(0);
    let params = cfg.params()?;
    let mut worst: Option<RhoCertificate> = None;
    for r in [rho, rho - spread, rho + spread] {
        let c = check_rho_condition(cf, r, &params, depth)?;
        let replace = match &worst {
            None => true,
            Some(w) => (!c.pass && w.pass) || (c.pass == w.pass && c.min_margin < w.min_margin),
        };
        if replace {
            worst = Some(c);
        }
    }
    Ok(worst.expect("three checks"))
}

/// Quantities recomputed from a serialized [`KamResult`] alone.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Verification {
    /// Relative grid defect of `B(x+alpha) A(x) B(x)^{-1} = R_phi(x)`.
    pub grid_residual: f64,
    /// `max |det B - 1|` on the grid.
    pub det_defect: f64,
    /// Largest imaginary part of `phi` on the real axis.
    pub phi_imag: f64,
    pub mean_phi: f64,
    /// `|mean(phi) - rho|` mod 1, when `rho` is known.
    pub rho_gap: Option<f64>,
}

pub fn verify_result(r: &KamResult) -> Verification {
    let n = r.config.check_grid;
    let bs = r.b.shift_by(&r.alpha, 1).sample(n);
    let bv = r.b.sample(n);
    let av = r.original.sample(n);
    let lhs: Vec<Mat2> = (0..n).map(|j| bs[j] * av[j] * bv[j].inv()).collect();
    let grid_residual = super::relative_defect(&lhs, &super::rotations(&r.phi, n));
    let det_defect = bv.iter().map(|m| (m.det() - 1.0).abs()).fold(0.0, f64::max);
    let mean_phi = r.phi.mean();
    let rho_gap = r.rho.map(|rho| {
        let d = mean_phi - rho;
        (d - d.round()).abs()
    });
    Verification { grid_residual, det_defect, phi_imag: r.phi.max_imag_on_axis(n), mean_phi, rho_gap }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn normalizer_of_free_schrodinger() {
        for rho in [0.05, 0.3, 0.45] {
            let e = 2.0 * (2.0 * PI * rho).cos();
            let m = Mat2::new(e, -1.0, 1.0, 0.0);
            let c = constant_normalizer(m).unwrap();
            let r = c * m * c.inv();
            assert!((r - Mat2::rotation(r.polar_angle())).max_abs() < 1e-12);
            assert!((r.polar_angle() - rho).abs() < 1e-12, "{rho}: {}", r.polar_angle());
            assert!((c.det() - 1.0).abs() < 1e-12 && (c - c.transpose()).max_abs() < 1e-15);
        }
        assert!(constant_normalizer(Mat2::new(3.0, -1.0, 1.0, 0.0)).is_none());
        let c = constant_normalizer(Mat2::rotation(0.2)).unwrap();
        assert!((c - Mat2::IDENTITY).max_abs() < 1e-12);
    }

    #[test]
    fn constant_rotation_converges_at_step_zero() {
        let c = Cocycle::constant(Mat2::rotation(0.2828), Frequency::golden(), 4, 0.1).unwrap();
        let r = reduce_to_rotations(&c, &KamConfig::default()).unwrap();
        assert_eq!(r.status, KamStatus::Converged, "{:?}", r.message);
        assert!(r.history.is_empty());
        assert!(r.b_minus_id < 1e-12);
        assert!((r.phi.mean() - 0.2828).abs() < 1e-12);
    }
}
