//! Closed-form examples checked at runtime by the `selftest` subcommand.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::analytic::{verify_denjoy_bounds, AnalyticFunction, MatrixFunction};
use crate::arithmetic::{
    check_rho_condition, expand_cf, select_q, torus_norm, ContinuedFraction, DiophantineParams, DoubleDouble,
    Frequency, SelectedSubsequence,
};
use crate::cocycle::{
    compose_rotation_forms, lyapunov, rotation_number, to_rotation_form, Cocycle, RotationForm, RotationOptions,
};
use crate::error::Error;
use crate::experiments::{check_drho_de, check_rho_monotone, energy_grid, scan_energies, summarize, ScanOptions};
use crate::kam::{
    aq_iterate, ct_commuting, ct_step, inductive_step, normalize_matrix, reduce_to_rotations, u_k, KamConfig, KamState,
    KamStatus,
};
use crate::linalg::Mat2;

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

type Check = fn() -> Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn qs(cf: &ContinuedFraction) -> Vec<f64> {
    cf.q_list_f64()
}

fn cf_golden() -> Result<(), String> {
    let cf = expand_cf(DoubleDouble::from_f64((5f64.sqrt() - 1.0) / 2.0), 0.0, 100).map_err(err)?;
    ensure!(cf.quotients.iter().all(|&a| a == 1), "quotients {:?}", cf.quotients);
    let want = [1., 1., 2., 3., 5., 8., 13., 21., 34., 55., 89.];
    ensure!(qs(&cf) == want, "q = {:?}", qs(&cf));
    Ok(())
}

fn cf_sqrt2() -> Result<(), String> {
    let cf = expand_cf(DoubleDouble::from_f64(2f64.sqrt() - 1.0), 0.0, 30).map_err(err)?;
    ensure!(cf.quotients.iter().all(|&a| a == 2), "quotients {:?}", cf.quotients);
    ensure!(qs(&cf) == [1., 2., 5., 12., 29.], "q = {:?}", qs(&cf));
    Ok(())
}

fn cf_third() -> Result<(), String> {
    match expand_cf(DoubleDouble::ONE / DoubleDouble::from_f64(3.0), 0.0, 1_000_000) {
        Err(Error::RationalOrPrecisionExhausted { partial }) => {
            ensure!(partial.quotients == [3], "partial {:?}", partial.quotients);
            Ok(())
        }
        other => Err(format!("expected exhaustion, got {other:?}")),
    }
}

fn torus_norms() -> Result<(), String> {
    for (x, want) in [(0.3, 0.3), (0.7, 0.3), (-1.5, 0.5)] {
        ensure!((torus_norm(x) - want).abs() < 1e-15, "‖{x}‖ = {}", torus_norm(x));
    }
    Ok(())
}

fn select_depth_one() -> Result<(), String> {
    let cf = ContinuedFraction::from_quotients(&[3]).map_err(err)?;
    let p = DiophantineParams::new(2.0, 0.4, 1e-3).map_err(err)?;
    ensure!(matches!(select_q(&cf, &p), Err(Error::InsufficientDepth(_))), "depth 1 accepted");
    Ok(())
}

fn rho_certificates() -> Result<(), String> {
    let cf = Frequency::golden().continued_fraction(1e6).map_err(err)?;
    let p = DiophantineParams::new(2.0, 0.4, 1e-3).map_err(err)?;
    let c = check_rho_condition(&cf, 0.0, &p, 5).map_err(err)?;
    ensure!(!c.pass && c.first_failure == Some(0), "rho = 0: {c:?}");
    let p = DiophantineParams::new(2.0, 0.4, 0.1).map_err(err)?;
    let c = check_rho_condition(&cf, 0.25, &p, 5).map_err(err)?;
    ensure!(!c.pass && c.first_failure == Some(2), "rho = 1/4: {c:?}");
    Ok(())
}

fn strip_norms() -> Result<(), String> {
    let f = AnalyticFunction::constant(-2.5, 4, 0.2);
    let (u, l) = f.norm_strip(0.1).map_err(err)?;
    ensure!((u - 2.5).abs() < 1e-14 && (l - 2.5).abs() < 1e-14, "constant: {u} {l}");
    let cos = AnalyticFunction::trig(4, 0.2, &[(1, 1.0, 0.0)]);
    let h = 0.15;
    let (u, l) = cos.norm_strip(h).map_err(err)?;
    ensure!((u - (2.0 * PI * h).exp()).abs() < 1e-12, "cos upper {u}");
    ensure!(l >= (2.0 * PI * h).cosh() * (1.0 - 1e-12), "cos lower {l}");
    Ok(())
}

fn shifts() -> Result<(), String> {
    let cos = AnalyticFunction::trig(4, 0.2, &[(1, 1.0, 0.0)]);
    ensure!(cos.shift(0.0) == cos, "beta = 0 changed f");
    ensure!(cos.shift(0.5).max_coeff_diff(&cos.scale(-1.0)) < 1e-15, "half shift");
    let mut e = AnalyticFunction::zero(4, 0.2);
    e.real_symmetric = false;
    e.set_coeff(1, Complex64::new(1.0, 0.0));
    let c = e.shift(0.25).coeff(1);
    ensure!((c - Complex64::i()).norm() < 1e-15, "quarter shift gives {c}");
    Ok(())
}

fn birkhoff_trivial() -> Result<(), String> {
    let alpha = Frequency::golden();
    let c = AnalyticFunction::constant(1.5, 4, 0.2);
    let s = c.birkhoff_sum(&alpha, 7).map_err(err)?;
    ensure!((s.mean() - 10.5).abs() < 1e-13 && s.zero_mean().norm_upper(0.2).map_err(err)? < 1e-13, "n c");
    let f = AnalyticFunction::trig(4, 0.2, &[(1, 0.3, 0.1), (2, 0.0, 0.2)]);
    ensure!(f.birkhoff_sum(&alpha, 1).map_err(err)?.max_coeff_diff(&f) < 1e-15, "n = 1");
    Ok(())
}

fn denjoy_constant() -> Result<(), String> {
    let alpha = Frequency::golden();
    let cf = alpha.continued_fraction(1e6).map_err(err)?;
    let seq = SelectedSubsequence::all_denominators(&cf).map_err(err)?;
    let p = DiophantineParams::new(2.0, 0.4, 1e-3).map_err(err)?;
    let f = AnalyticFunction::constant(2.0, 4, 0.2);
    let r = verify_denjoy_bounds(&f, &alpha, &seq, &p, 0.2, 0.1).map_err(err)?;
    ensure!(r.rows.iter().all(|x| x.measured == 0.0 && x.ratio == 0.0), "nonzero row");
    Ok(())
}

fn schrodinger_matrices() -> Result<(), String> {
    let alpha = Frequency::golden();
    let zero = AnalyticFunction::zero(4, 0.2);
    let c = Cocycle::schrodinger(&zero, 0.0, alpha.clone()).map_err(err)?;
    ensure!((c.a.eval(0.3) - Mat2::new(0.0, -1.0, 1.0, 0.0)).max_abs() == 0.0, "E = 0");
    let rho0 = 0.3;
    let e = 2.0 * (2.0 * PI * rho0).cos();
    let c = Cocycle::schrodinger(&zero, e, alpha.clone()).map_err(err)?;
    ensure!((c.a.eval(0.0).trace() - 2.0 * (2.0 * PI * rho0).cos()).abs() < 1e-15, "trace");
    let lam = 0.2;
    let v = AnalyticFunction::trig(4, 0.2, &[(1, 2.0 * lam, 0.0)]);
    let c = Cocycle::schrodinger(&v, 0.0, alpha).map_err(err)?;
    let m = c.a.eval(0.1);
    let want = Mat2::new(-2.0 * lam * (2.0 * PI * 0.1).cos(), -1.0, 1.0, 0.0);
    ensure!((m - want).max_abs() < 1e-14, "almost Mathieu entries {m:?}");
    Ok(())
}

fn iterates() -> Result<(), String> {
    let c = Cocycle::constant(Mat2::rotation(0.1), Frequency::golden(), 4, 0.2).map_err(err)?;
    ensure!(c.iterate(1).map_err(err)?.grid_distance(&c.a, 32) < 1e-15, "n = 1");
    let a9 = c.iterate(9).map_err(err)?;
    ensure!((a9.eval(0.2) - Mat2::rotation(0.9)).max_abs() < 1e-13, "R_(n theta)");
    Ok(())
}

fn compositions() -> Result<(), String> {
    let phi = AnalyticFunction::trig(8, 0.1, &[(0, 0.1, 0.0), (1, 0.01, 0.0)]);
    let r = RotationForm::from_matrix(&MatrixFunction::rotation(&phi), &phi);
    let c = compose_rotation_forms(&[r.clone(), r.clone()], 0.1).map_err(err)?;
    ensure!(c.measured < 1e-11, "xi^(l) = {:e}", c.measured);
    ensure!(c.form.phi.max_coeff_diff(&phi.scale(2.0)) < 1e-15, "S_l phi");
    let one = compose_rotation_forms(std::slice::from_ref(&r), 0.1).map_err(err)?;
    ensure!(one.form.phi == r.phi && one.form.xi == r.xi, "l = 1 changed the factor");
    Ok(())
}

fn rotation_numbers() -> Result<(), String> {
    let opts = RotationOptions::default();
    let c = Cocycle::constant(Mat2::rotation(0.123), Frequency::golden(), 2, 0.1).map_err(err)?;
    let r = rotation_number(&c, &opts, None).map_err(err)?;
    ensure!((r.rho - 0.123).abs() < 1e-8, "constant: {}", r.rho);
    let e = 2.0 * (2.0 * PI * 0.3).cos();
    let c = Cocycle::schrodinger(&AnalyticFunction::zero(2, 0.1), e, Frequency::golden()).map_err(err)?;
    let r = rotation_number(&c, &opts, None).map_err(err)?;
    ensure!((r.rho - 0.3).abs() < 1e-6, "free: {}", r.rho);
    Ok(())
}

fn lyapunov_exponents() -> Result<(), String> {
    let c = Cocycle::constant(Mat2::rotation(0.3), Frequency::golden(), 2, 0.1).map_err(err)?;
    let l = lyapunov(&c, 2000, 4).map_err(err)?.value;
    ensure!(l < 1e-6, "rotation: {l}");
    let d = Cocycle::constant(Mat2::diag(2.0, 0.5), Frequency::golden(), 2, 0.1).map_err(err)?;
    let l = lyapunov(&d, 20_000, 4).map_err(err)?.value;
    ensure!((l - 2f64.ln()).abs() < 1e-4, "diag: {l}");
    Ok(())
}

fn rotation_forms() -> Result<(), String> {
    let c = Cocycle::constant(Mat2::rotation(0.25), Frequency::golden(), 4, 0.2).map_err(err)?;
    let exact = to_rotation_form(&c, &AnalyticFunction::constant(0.25, 4, 0.2)).map_err(err)?;
    ensure!(exact.xi_norm(0.2).map_err(err)? < 1e-15, "xi != 0");
    let f = to_rotation_form(&c, &AnalyticFunction::zero(4, 0.2)).map_err(err)?;
    let x = f.xi.eval(0.0);
    ensure!((x - (Mat2::rotation(0.25) - Mat2::IDENTITY)).max_abs() < 1e-15, "xi = {x:?}");
    ensure!((x.norm_op() - 2f64.sqrt()).abs() < 1e-15, "‖xi‖ = {}", x.norm_op());
    Ok(())
}

fn elliptic_trivial() -> Result<(), String> {
    let p = normalize_matrix(Mat2::rotation(0.2), 0.2, 20).map_err(err)?;
    ensure!(p.iterations == 0 && p.b == Mat2::IDENTITY && p.theta == 0.2, "{p:?}");
    let cfg = KamConfig::default();
    let hyper = MatrixFunction::constant(Mat2::diag(3.0, 1.0 / 3.0), 4, 0.1);
    let r = crate::kam::elliptic_normalize(&hyper, &AnalyticFunction::zero(4, 0.1), 20, 0.1, &cfg);
    ensure!(matches!(r, Err(Error::NotInEllipticDomain(_))), "hyperbolic accepted");
    Ok(())
}

fn q8_alpha_bar() -> Result<f64, String> {
    let alpha = Frequency::golden();
    let cf = alpha.continued_fraction(1e3).map_err(err)?;
    Ok(alpha.signed_phase(cf.q_f64(8)))
}

fn ct_trivial() -> Result<(), String> {
    let cfg = KamConfig::default();
    let phi = AnalyticFunction::trig(8, 0.08, &[(0, 0.27, 0.0), (1, 0.004, 0.0)]);
    let a = MatrixFunction::rotation(&phi);
    let ab = q8_alpha_bar()?;
    let ct = ct_step(ab, &a, &phi, 0.01, 0.08, &cfg).map_err(err)?;
    ensure!(ct.report.b_minus_id < 1e-10 && ct.report.final_residual < 1e-10, "{:?}", ct.report);
    let small = AnalyticFunction::constant(1e-3, 8, 0.08);
    let r = ct_step(ab, &MatrixFunction::rotation(&small), &small, 0.01, 0.08, &cfg);
    ensure!(matches!(r, Err(Error::CtPreconditionsViolated(_))), "phi near 0 accepted");
    Ok(())
}

fn commuting_trivial() -> Result<(), String> {
    let cfg = KamConfig::default();
    let alpha = Frequency::golden();
    let (deg, h, theta) = (8, 0.08, 0.2828);
    let q = alpha.continued_fraction(1e3).map_err(err)?.q_f64(8);
    let ab = q8_alpha_bar()?;
    let a = MatrixFunction::constant(Mat2::rotation(theta), deg, h);
    let phi_q = AnalyticFunction::constant((q * theta).rem_euclid(1.0), deg, h);
    let a_q = MatrixFunction::rotation(&phi_q);
    let ct = ct_step(ab, &a_q, &phi_q, 0.01, h, &cfg).map_err(err)?;
    let cm = ct_commuting(&ct, &alpha, &a, ab, &a_q, theta, 0.01, h, &cfg).map_err(err)?;
    ensure!(cm.report.l_norm < 1e-12 && (cm.phi.mean() - theta).abs() < 1e-12, "{:?}", cm.report);
    let off = MatrixFunction::constant(Mat2::new(1.01, 0.0, 0.0, 1.0 / 1.01), deg, h).mul(&a);
    let r = ct_commuting(&ct, &alpha, &off, ab, &a_q.mul(&off), theta, 0.01, h, &cfg);
    ensure!(matches!(r, Err(Error::NotCommuting { .. })), "non-commuting pair accepted");
    Ok(())
}

fn golden_all() -> Result<(Frequency, SelectedSubsequence), String> {
    let alpha = Frequency::golden();
    let cf = alpha.continued_fraction(1e6).map_err(err)?;
    Ok((alpha, SelectedSubsequence::all_denominators(&cf).map_err(err)?))
}

fn aq_trivial() -> Result<(), String> {
    let (alpha, seq) = golden_all()?;
    let (deg, h, theta) = (8, 0.1, 0.2828);
    let form = RotationForm {
        phi: AnalyticFunction::constant(theta, deg, h),
        xi: MatrixFunction::constant(Mat2::ZERO, deg, h),
    };
    let k = 4;
    let r = aq_iterate(&form, &alpha, &seq, k, h, &KamConfig::default()).map_err(err)?;
    let q = seq.q_f64(k + 1);
    ensure!(torus_norm(r.form_q.phi.mean() - q * theta) < 1e-12, "phi^(Q) = {}", r.form_q.phi.mean());
    ensure!(r.report.xi_norm < 1e-12, "xi^(Q) = {:e}", r.report.xi_norm);
    let bad = RotationForm { xi: MatrixFunction::constant(Mat2::diag(0.3, -0.3), deg, h), ..form };
    let e = aq_iterate(&bad, &alpha, &seq, k, h, &KamConfig::formula());
    ensure!(matches!(e, Err(Error::AqContractViolated { .. })), "U_k violation accepted");
    Ok(())
}

fn rotation_state(theta: f64, cfg: &KamConfig, seq: &SelectedSubsequence) -> Result<KamState, String> {
    let (deg, h) = (cfg.degree, cfg.h);
    let a = MatrixFunction::constant(Mat2::rotation(theta), deg, h);
    let form = RotationForm::from_matrix(&a, &AnalyticFunction::constant(theta, deg, h));
    let params = cfg.params().map_err(err)?;
    Ok(KamState {
        k: 0,
        h_k: h,
        a,
        form,
        u_k: u_k(seq.q_f64(0), seq.q_bar_f64(0), &params),
        eta_k: cfg.eta(),
        seq_index: 0,
        b_accum: MatrixFunction::identity(deg, h),
        residual_history: vec![0.0],
        records: Vec::new(),
    })
}

fn inductive_trivial() -> Result<(), String> {
    let (alpha, seq) = golden_all()?;
    let cfg = KamConfig::default();
    let state = rotation_state(0.2828, &cfg, &seq)?;
    let next = inductive_step(&state, &alpha, &seq, &cfg).map_err(err)?;
    let b = next.b_accum.minus_identity().norm_upper(next.h_k).map_err(err)?;
    ensure!(b < 1e-10 && next.form.xi_norm(next.h_k).map_err(err)? < 1e-10, "B - id = {b:e}");
    let formula = KamConfig::formula();
    let mut late = rotation_state(0.2828, &formula, &seq)?;
    late.k = 1;
    let r = inductive_step(&late, &alpha, &seq, &formula);
    ensure!(matches!(r, Err(Error::Precondition(_))), "Qbar below T accepted");
    Ok(())
}

fn driver_trivial() -> Result<(), String> {
    let c = Cocycle::constant(Mat2::rotation(0.2828), Frequency::golden(), 4, 0.1).map_err(err)?;
    let r = reduce_to_rotations(&c, &KamConfig::default()).map_err(err)?;
    ensure!(r.status == KamStatus::Converged && r.history.is_empty(), "{:?}", r.message);
    ensure!(r.b_minus_id < 1e-12 && (r.phi.mean() - 0.2828).abs() < 1e-12, "B or phi off");
    Ok(())
}

fn free_scan() -> Result<(), String> {
    let cfg = KamConfig::default();
    let v = AnalyticFunction::zero(cfg.degree, cfg.h);
    let grid = energy_grid(-2.0 + 1e-3, 2.0 - 1e-3, 16);
    let opts = ScanOptions { jobs: 1, lyap_iter: 200, lyap_fibers: 1 };
    let recs = scan_energies(&v, &Frequency::golden(), &grid, &cfg, &opts).map_err(err)?;
    for r in &recs {
        ensure!(!r.cert_pass || r.kam_status == crate::experiments::ScanStatus::Converged, "{r:?}");
    }
    let s = summarize(&recs);
    ensure!(s.admitted > 0 && s.converged == s.admitted, "{s:?}");
    Ok(())
}

fn free_monotone() -> Result<(), String> {
    let v = AnalyticFunction::zero(4, 0.1);
    let grid = energy_grid(-2.2, 2.2, 24);
    let opts = RotationOptions { n_iter: 2000, ..Default::default() };
    let r = check_rho_monotone(&v, &Frequency::golden(), &grid, &opts).map_err(err)?;
    ensure!(r.pass, "{:?}", r.violation);
    for (e, rho) in r.energies.iter().zip(&r.rho) {
        if e.abs() < 2.0 {
            ensure!((rho - (e / 2.0).acos() / (2.0 * PI)).abs() < 1e-6, "rho({e}) = {rho}");
        }
    }
    let shuffled = [0.0, -1.0, 2.5];
    ensure!(
        matches!(check_rho_monotone(&v, &Frequency::golden(), &shuffled, &opts), Err(Error::Precondition(_))),
        "shuffled grid accepted"
    );
    Ok(())
}

fn drho_outside() -> Result<(), String> {
    let cfg = KamConfig::default();
    let v = AnalyticFunction::trig(cfg.degree, cfg.h, &[(1, 2e-3, 0.0)]);
    let r = check_drho_de(&v, &Frequency::golden(), 2.5, 1e-6, &cfg);
    ensure!(matches!(r, Err(Error::NotApplicable(_))), "reduction outside the spectrum");
    Ok(())
}

/// Every example, in order.
pub fn checks() -> Vec<(&'static str, Check)> {
    vec![
        ("continued fraction of the golden mean", cf_golden as Check),
        ("continued fraction of sqrt 2 - 1", cf_sqrt2),
        ("continued fraction of 1/3 terminates", cf_third),
        ("torus norm", torus_norms),
        ("selection needs depth 2", select_depth_one),
        ("rho certificate failures", rho_certificates),
        ("strip norms of constants and cosine", strip_norms),
        ("shifts", shifts),
        ("Birkhoff sums of constants and n = 1", birkhoff_trivial),
        ("Denjoy ratios of a constant", denjoy_constant),
        ("Schrödinger matrices", schrodinger_matrices),
        ("iterates of rotations", iterates),
        ("composition of exact rotations", compositions),
        ("rotation numbers of constants", rotation_numbers),
        ("Lyapunov exponents of constants", lyapunov_exponents),
        ("rotation forms", rotation_forms),
        ("elliptic normalization of rotations and hyperbolics", elliptic_trivial),
        ("conjugation step on exact rotations", ct_trivial),
        ("commuting partner of a rotation", commuting_trivial),
        ("iteration of a constant rotation", aq_trivial),
        ("inductive step from zero perturbation", inductive_trivial),
        ("reduction of a constant rotation", driver_trivial),
        ("free Schrödinger scan", free_scan),
        ("free rotation number is monotone", free_monotone),
        ("drho/dE not applicable outside the spectrum", drho_outside),
    ]
}

pub fn run() -> Vec<CheckOutcome> {
    checks()
        .into_iter()
        .map(|(name, f)| {
            let (pass, detail) = match std::panic::catch_unwind(f) {
                Ok(Ok(())) => (true, String::new()),
                Ok(Err(d)) => (false, d),
                Err(_) => (false, "panicked".into()),
            };
            CheckOutcome { name, pass, detail }
        })
        .collect()
}
