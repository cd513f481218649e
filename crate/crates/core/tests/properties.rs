mod common;

use num_bigint::{BigInt, BigUint};
use proptest::prelude::*;

use cocycle_kam::analytic::{grid_size, AnalyticFunction, MatrixFunction};
use cocycle_kam::arithmetic::{select_q, ContinuedFraction, DiophantineParams, Frequency};
use cocycle_kam::cocycle::{lyapunov, Cocycle};
use cocycle_kam::linalg::Mat2;

use common::*;

const GRID: usize = 256;

fn dyadic() -> impl Strategy<Value = (f64, u64)> {
    ((1u64 << 40)..(1u64 << DYADIC_BITS) - (1u64 << 40)).prop_map(|n| (n as f64 / (1u64 << DYADIC_BITS) as f64, n))
}

/// Quotient lists mixing ordinary and very large partial quotients.
fn quotient_list() -> impl Strategy<Value = Vec<u64>> {
    proptest::collection::vec(
        prop_oneof![4 => 1u64..5, 1 => 100u64..100_000, 1 => 1_000_000_000u64..1_000_000_000_000_000],
        2..14,
    )
}

fn near_rotation_cocycle(theta: f64, size: f64, coeffs: &[f64; 4]) -> Cocycle {
    let (deg, h) = (12, 0.1);
    let n = grid_size(deg);
    let w = [
        AnalyticFunction::trig(deg, h, &[(1, coeffs[0], coeffs[1])]),
        AnalyticFunction::trig(deg, h, &[(2, coeffs[2], 0.0), (0, coeffs[3], 0.0)]),
    ];
    let (xv, yv) = (w[0].sample(n), w[1].sample(n));
    let a = MatrixFunction::collocate(n, deg, h, 1.0, |j| {
        let gen = Mat2::new(xv[j], yv[j], yv[j], -xv[j]).scale(size);
        Mat2::rotation(theta) * gen.exp_traceless()
    });
    Cocycle::new(Frequency::golden(), a).unwrap()
}

/// Sum of the recorded truncation tails, a bound for the sup-norm error on the real line.
fn tails(m: &MatrixFunction) -> f64 {
    m.entries().iter().map(|e| e.tail).sum()
}

fn max_grid_gap(f: impl Fn(f64) -> Mat2, g: impl Fn(f64) -> Mat2) -> f64 {
    (0..GRID).map(|j| j as f64 / GRID as f64).map(|x| (f(x) - g(x)).max_abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn convergents_are_the_best_denominators((alpha, n) in dyadic()) {
        let cf = Frequency::from_f64(alpha).unwrap().continued_fraction(1e4).unwrap();
        let mut lib: Vec<u64> = (0..=cf.depth()).filter_map(|k| cf.q_u64(k)).filter(|&q| q <= 10_000).collect();
        lib.dedup();
        prop_assert_eq!(&lib, &record_denominators(n, 10_000));
        // for k >= 2: every q < q_k does no better than q_{k-1}
        for k in 2..=cf.depth() {
            let Some(qk) = cf.q_u64(k).filter(|&q| q <= 10_000) else { break };
            let prev = dist_scaled(cf.q_u64(k - 1).unwrap(), n);
            prop_assert!((1..qk).all(|q| dist_scaled(q, n) >= prev));
        }
    }

    #[test]
    fn determinant_and_recurrence(list in quotient_list()) {
        let cf = ContinuedFraction::from_quotients(&list).unwrap();
        for k in 1..=cf.depth() {
            let sign = if k % 2 == 1 { 1 } else { -1 };
            prop_assert_eq!(cf.determinant(k), BigInt::from(sign));
            let a = BigUint::from(list[k - 1]);
            let (pm2, qm2) = if k == 1 { (BigUint::from(1u32), BigUint::from(0u32)) } else { (cf.p[k - 2].clone(), cf.q[k - 2].clone()) };
            prop_assert_eq!(&cf.q[k], &(&a * &cf.q[k - 1] + qm2));
            prop_assert_eq!(&cf.p[k], &(&a * &cf.p[k - 1] + pm2));
        }
    }

    #[test]
    fn expansion_reconstructs_alpha((alpha, _) in dyadic()) {
        let cf = Frequency::from_f64(alpha).unwrap().continued_fraction(1e12).unwrap();
        let k = cf.depth();
        let q = cf.q_f64(k);
        let err = (cf.convergent_value(k).to_f64() - alpha).abs();
        prop_assert!(err <= 1.0 / (q * q), "{err:e} vs q = {q}");
    }

    #[test]
    fn selection_invariants(list in quotient_list(), m in prop_oneof![Just(1.0), Just(1.5), Just(2.0), Just(20.0)]) {
        let f = Frequency::from_quotients(list).unwrap();
        let cf = f.continued_fraction(1e200).unwrap();
        let p = DiophantineParams::new(2.0, 0.4, 1e-3).unwrap().with_m(m);
        let s = select_q(&cf, &p).unwrap();
        let a = (2.0 * m).round() as u32;
        if let Err(e) = check_selection(&cf.q, &s.indices, a, s.truncated) {
            prop_assert!(false, "{}", e);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn chain_rule(theta in 0.05f64..0.45, c in proptest::array::uniform4(-1.0f64..1.0), m in 1i64..=32, n in 1i64..=32) {
        let cyc = near_rotation_cocycle(theta, 0.05, &c);
        let (am, an, amn) = (cyc.iterate(m).unwrap(), cyc.iterate(n).unwrap(), cyc.iterate(m + n).unwrap());
        let shifted = an.shift_by(&cyc.alpha, m);
        let gap = max_grid_gap(|x| amn.eval(x), |x| shifted.eval(x) * am.eval(x));
        let bound = tails(&amn) + 2.0 * (tails(&an) + tails(&am)) + 1e-12;
        prop_assert!(gap <= bound, "{gap:e} > {bound:e}");
        prop_assert!(gap <= 1e-9, "{gap:e}");
    }

    #[test]
    fn iterates_commute(theta in 0.05f64..0.45, c in proptest::array::uniform4(-1.0f64..1.0), q in 1i64..=40) {
        let cyc = near_rotation_cocycle(theta, 0.05, &c);
        let aq = cyc.iterate(q).unwrap();
        let (aq1, a_q) = (aq.shift_by(&cyc.alpha, 1), cyc.a.shift_by(&cyc.alpha, q));
        let gap = max_grid_gap(|x| aq1.eval(x) * cyc.a.eval(x), |x| a_q.eval(x) * aq.eval(x));
        prop_assert!(gap <= 4.0 * tails(&aq) + 1e-12, "{gap:e}");
        prop_assert!(gap <= 1e-9, "{gap:e}");
        let det = (0..GRID).map(|j| (aq.eval(j as f64 / GRID as f64).det() - 1.0).abs()).fold(0.0, f64::max);
        prop_assert!(det <= 4.0 * tails(&aq) + 1e-12, "{det:e}");
        prop_assert!(det <= 1e-9, "{det:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn lyapunov_is_conjugacy_invariant(lambda in 1.2f64..3.0, e in -1.0f64..1.0, c in proptest::array::uniform4(-1.0f64..1.0)) {
        let (deg, h) = (12, 0.1);
        let v = AnalyticFunction::trig(deg, h, &[(1, 2.0 * lambda, 0.0)]);
        let cyc = Cocycle::schrodinger(&v, e, Frequency::golden()).unwrap();
        let n = grid_size(deg);
        let gen = [AnalyticFunction::trig(deg, h, &[(1, c[0], c[1])]), AnalyticFunction::trig(deg, h, &[(1, c[2], c[3])])];
        let (xv, yv) = (gen[0].sample(n), gen[1].sample(n));
        let b = MatrixFunction::collocate(n, deg, h, 1.0, |j| Mat2::new(xv[j], yv[j], yv[j], -xv[j]).scale(0.3).exp_traceless());
        let before = lyapunov(&cyc, 20_000, 8).unwrap().value;
        let after = lyapunov(&cyc.conjugate(&b), 20_000, 8).unwrap().value;
        prop_assert!((before - after).abs() <= 2e-3, "{before} vs {after}");
        // positive exponent of the supercritical almost Mathieu operator
        prop_assert!(before >= lambda.ln() - 2e-3, "{before} < ln {lambda}");
    }
}
