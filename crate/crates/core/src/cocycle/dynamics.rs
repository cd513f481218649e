//! Pointwise orbit computations: fibered rotation number and Lyapunov
//! exponent.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::Cocycle;
use crate::analytic::MatrixFunction;
use crate::arithmetic::{ContinuedFraction, Frequency};
use crate::error::{Error, Result};
use crate::linalg::Mat2;

const REF_GRID: usize = 1024;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RotationOptions {
    pub n_iter: usize,
    pub n_fibers: usize,
    pub tol_spread: f64,
}

impl Default for RotationOptions {
    fn default() -> Self {
        RotationOptions { n_iter: 20_000, n_fibers: 8, tol_spread: 1e-5 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RotationEstimate {
    /// Rotation number in turns, reduced to `[0, 1)`.
    pub rho: f64,
    /// Max minus min of the per-fiber estimates (divided by `q` when
    /// accelerated).
    pub spread: f64,
    /// Estimate from the orbits of `(alpha, A)` alone.
    pub direct: f64,
    pub direct_spread: f64,
    /// Denominator used for acceleration, with the rotation number of
    /// `(q alpha, A^{(q)})`.
    pub accel_q: Option<u64>,
    pub accel_rho_q: Option<f64>,
}

/// Continuous branch of the rotation angle of the polar factor of `A(x)`,
/// sampled on a fine grid.
struct PolarReference {
    theta: Vec<f64>,
}

impl PolarReference {
    fn new(a: &MatrixFunction) -> Result<Self> {
        let vals = a.sample(REF_GRID);
        let mut theta = Vec::with_capacity(REF_GRID);
        let mut prev = vals[0].polar_angle();
        theta.push(prev);
        for m in &vals[1..] {
            let p = m.polar_angle();
            let next = prev + (p - prev - (p - prev).round());
            theta.push(next);
            prev = next;
        }
        let close = prev + {
            let p = vals[0].polar_angle();
            p - prev - (p - prev).round()
        };
        if (close - theta[0]).abs() > 0.5 {
            return Err(Error::Precondition(
                "cocycle is not homotopic to a constant; rotation number undefined".into(),
            ));
        }
        Ok(PolarReference { theta })
    }

    fn lift(&self, x: f64, principal: f64) -> f64 {
        let j = ((x * REF_GRID as f64).round() as usize) % REF_GRID;
        let r = self.theta[j];
        principal + (r - principal).round()
    }
}

/// Smooth bump weight for weighted Birkhoff averages.
fn bump(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        (-1.0 / (t * (1.0 - t))).exp()
    }
}

/// Weighted average of lifted angle increments along the orbit of `x0`
/// under the base shift `x -> x + step(k)`.
fn fiber_average(
    a: &MatrixFunction,
    reference: &PolarReference,
    orbit: impl Fn(usize) -> f64,
    n: usize,
) -> f64 {
    let mut w = (1.0f64, 0.0f64);
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..n {
        let x = orbit(k);
        let m = a.eval(x);
        let w1 = (m.a * w.0 + m.b * w.1, m.c * w.0 + m.d * w.1);
        let r = (w1.0 * w1.0 + w1.1 * w1.1).sqrt();
        let w1 = (w1.0 / r, w1.1 / r);
        let raw = (w1.1.atan2(w1.0) - w.1.atan2(w.0)) / (2.0 * PI);
        let tu = reference.lift(x, m.polar_angle());
        let d = raw - tu;
        let inc = tu + (d - d.round());
        let wt = bump((k as f64 + 0.5) / n as f64);
        num += wt * inc;
        den += wt;
        w = w1;
    }
    num / den
}

fn estimate(
    a: &MatrixFunction,
    alpha: &Frequency,
    step: u64,
    n_iter: usize,
    n_fibers: usize,
) -> Result<(f64, f64)> {
    let reference = PolarReference::new(a)?;
    let mut vals = Vec::with_capacity(n_fibers);
    for j in 0..n_fibers {
        let x0 = (j as f64 + 0.5) / n_fibers as f64;
        let orbit = |k: usize| {
            let x = x0 + alpha.phase(k as f64 * step as f64);
            x - x.floor()
        };
        vals.push(fiber_average(a, &reference, orbit, n_iter));
    }
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let spread = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - vals.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((mean, spread))
}

/// Fibered rotation number in turns (the quarter-turn matrix has
/// `rho = 1/4`).
///
/// When `accel` is given, also iterates to `A^{(q)}` for a convergent
/// denominator `q` whose successor is at most `n_iter / 50`, estimates the
/// rotation number `rho_q` of `(q alpha, A^{(q)})` and returns
/// `(rho_q + m) / q` for the integer `m` matching the direct estimate.
pub fn rotation_number(
    c: &Cocycle,
    opts: &RotationOptions,
    accel: Option<&ContinuedFraction>,
) -> Result<RotationEstimate> {
    if c.homotopy_class != 0 {
        return Err(Error::Precondition(format!("homotopy class {} != 0", c.homotopy_class)));
    }
    let (direct, direct_spread) = estimate(&c.a, &c.alpha, 1, opts.n_iter, opts.n_fibers)?;
    let mut out = RotationEstimate {
        rho: direct.rem_euclid(1.0),
        spread: direct_spread,
        direct: direct.rem_euclid(1.0),
        direct_spread,
        accel_q: None,
        accel_rho_q: None,
    };
    if let Some(cf) = accel {
        let limit = opts.n_iter as f64 / 50.0;
        let q = (1..cf.depth())
            .filter(|&m| cf.q_f64(m) >= 2.0 && cf.q_f64(m + 1) <= limit)
            .map(|m| cf.q_f64(m))
            .fold(0.0, f64::max);
        if q >= 2.0 {
            let q_int = q as u64;
            let aq = c.iterate(q_int as i64)?;
            let (rq, sq) = estimate(&aq, &c.alpha, q_int, opts.n_iter, opts.n_fibers)?;
            let m = (direct * q - rq).round();
            let rho = (rq + m) / q;
            out.rho = rho.rem_euclid(1.0);
            out.spread = sq / q;
            out.accel_q = Some(q_int);
            out.accel_rho_q = Some(rq.rem_euclid(1.0));
        }
    }
    if out.spread > opts.tol_spread {
        return Err(Error::RotationNumberNotResolved { spread: out.spread, tol: opts.tol_spread });
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub value: f64,
    /// The same average at `n_iter / 2`, as a convergence diagnostic.
    pub half: f64,
    pub n_iter: usize,
    pub n_theta: usize,
}

/// `(1/n) mean_theta log ‖A^{(n)}(theta) w‖` with per-step renormalization.
pub fn lyapunov(c: &Cocycle, n_iter: usize, n_theta: usize) -> Result<LyapunovEstimate> {
    if n_iter == 0 || n_theta == 0 {
        return Err(Error::InvalidInput("n_iter and n_theta must be positive".into()));
    }
    let half_n = (n_iter / 2).max(1);
    let mut total = 0.0;
    let mut total_half = 0.0;
    for j in 0..n_theta {
        let x0 = (j as f64 + 0.5) / n_theta as f64;
        let mut w = (1f64.cos(), 1f64.sin());
        let mut s = 0.0;
        for k in 0..n_iter {
            let x = x0 + c.alpha.phase(k as f64);
            let m: Mat2 = c.a.eval(x - x.floor());
            let w1 = (m.a * w.0 + m.b * w.1, m.c * w.0 + m.d * w.1);
            let r = (w1.0 * w1.0 + w1.1 * w1.1).sqrt();
            s += r.ln();
            w = (w1.0 / r, w1.1 / r);
            if k + 1 == half_n {
                total_half += s / half_n as f64;
            }
        }
        total += s / n_iter as f64;
    }
    Ok(LyapunovEstimate {
        value: (total / n_theta as f64).max(0.0),
        half: (total_half / n_theta as f64).max(0.0),
        n_iter,
        n_theta,
    })
}
