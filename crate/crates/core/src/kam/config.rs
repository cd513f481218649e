use serde::{Deserialize, Serialize};

use crate::arithmetic::DiophantineParams;
use crate::cocycle::RotationOptions;
use crate::error::{Error, Result};

/// Parameters of a reduction run.
///
/// The existence-only constants of the scheme (`c0..c3`, `eps0`,
/// `t_threshold`) are plain parameters here. With `adaptive` set, the inner
/// loop length and the choice of denominator follow measured contraction;
/// otherwise the formulas are used as written.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct KamConfig {
    /// Initial strip width.
    pub h: f64,
    /// Allowed total strip loss.
    pub h_star: f64,
    pub eps: f64,
    pub tau: f64,
    pub nu: f64,
    /// Overrides the derived `M`.
    pub m_override: Option<f64>,
    /// Bound `D` on `‖phi - phi^(0)‖`.
    pub d: f64,
    /// Fourier truncation degree `L`.
    pub degree: usize,
    pub tol_residual: f64,
    pub max_outer: usize,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub eps0: f64,
    /// Smallness constant of the elliptic normalization domain.
    pub eps_elliptic: f64,
    pub t_threshold: f64,
    pub adaptive: bool,
    /// Cap on the inner loop length in adaptive mode.
    pub max_inner: usize,
    /// Largest denominator used as a step.
    pub max_q: f64,
    /// The admission certificate covers every `q_i` up to this size.
    pub cert_q_max: f64,
    pub rotation: RotationOptions,
    /// Points of the real grid used for identity checks.
    pub check_grid: usize,
    /// Relative tolerance of those identity checks.
    pub tol_identity: f64,
}

impl Default for KamConfig {
    /// Desk-scale adaptive preset.
    fn default() -> Self {
        KamConfig {
            h: 0.08,
            h_star: 0.01,
            eps: 1e-2,
            tau: 2.0,
            nu: 0.4,
            m_override: None,
            d: 1.0,
            degree: 16,
            tol_residual: 1e-9,
            max_outer: 8,
            c0: 10.0,
            c1: 1.6e5,
            c2: 16.0,
            c3: 1.0,
            eps0: 0.05,
            eps_elliptic: 0.1,
            t_threshold: 30.0,
            adaptive: true,
            max_inner: 40,
            max_q: 1e7,
            cert_q_max: 2e3,
            rotation: RotationOptions::default(),
            check_grid: 256,
            tol_identity: 1e-10,
        }
    }
}

impl KamConfig {
    /// Formula-driven preset: inner loop lengths from `N = [delta h rho^2 /
    /// (c1 |alpha_bar|)]`, denominators from the bridge construction and the
    /// small admission threshold `eps0 = 1e-4`, with `T = 1e3`.
    pub fn formula() -> Self {
        KamConfig { adaptive: false, eps0: 1e-4, t_threshold: 1e3, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.into()));
        if !(self.h > 0.0) || !(self.h_star > 0.0 && self.h_star < self.h) {
            return bad("need 0 < h_star < h");
        }
        if !(self.c2 > 10.0) {
            return bad("c2 must exceed 10");
        }
        if self.degree == 0 || self.max_outer == 0 || self.max_inner == 0 {
            return bad("degree, max_outer and max_inner must be positive");
        }
        if !(self.tol_residual > 0.0) || !(self.eps0 > 0.0) || !(self.eps_elliptic > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.check_grid < 16 {
            return bad("check_grid too small");
        }
        self.params().map(|_| ())
    }

    pub fn params(&self) -> Result<DiophantineParams> {
        let p = DiophantineParams::new(self.tau, self.nu, self.eps)?;
        Ok(match self.m_override {
            Some(m) => p.with_m(m),
            None => p,
        })
    }

    /// `eta = eps / 10`, coupled as in the corollary the driver implements.
    pub fn eta(&self) -> f64 {
        self.eps / 10.0
    }

    /// `eta_k = eta / k^2` (`k >= 1`).
    pub fn eta_k(&self, k: usize) -> f64 {
        self.eta() / (k.max(1) * k.max(1)) as f64
    }
}
