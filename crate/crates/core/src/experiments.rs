//! Energy scans of Schrödinger cocycles: which energies reduce to rotations,
//! monotonicity of the rotation number, and the `d rho / dE` identity.

use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::AnalyticFunction;
use crate::arithmetic::Frequency;
use crate::cocycle::{lyapunov, rotation_number, Cocycle, RotationOptions};
use crate::error::{Error, Result};
use crate::kam::{constant_normalizer, reduce_to_rotations, KamConfig, KamResult, KamStatus};

/// CSV header of [`ScanRecord`] rows.
pub const SCAN_HEADER: &str = "E,rho,rho_spread,cert_pass,kam_status,final_residual,lyap,wall_time";

/// Env var read for the default number of scan threads.
pub const THREADS_ENV: &str = "COCYCLE_KAM_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanStatus {
    Converged,
    Stalled,
    PreconditionFailed,
    NotAttempted,
}

impl From<KamStatus> for ScanStatus {
    fn from(s: KamStatus) -> Self {
        match s {
            KamStatus::Converged => ScanStatus::Converged,
            KamStatus::Stalled => ScanStatus::Stalled,
            KamStatus::PreconditionFailed => ScanStatus::PreconditionFailed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    #[serde(rename = "E")]
    pub e: f64,
    pub rho: f64,
    pub rho_spread: f64,
    pub cert_pass: bool,
    pub kam_status: ScanStatus,
    pub final_residual: f64,
    pub lyap: f64,
    /// Seconds.
    pub wall_time: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScanOptions {
    pub jobs: usize,
    pub lyap_iter: usize,
    pub lyap_fibers: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { jobs: default_jobs(), lyap_iter: 4000, lyap_fibers: 4 }
    }
}

/// `COCYCLE_KAM_THREADS` if set to a positive integer, else 1.
pub fn default_jobs() -> usize {
    std::env::var(THREADS_ENV).ok().and_then(|s| s.parse().ok()).filter(|&n| n > 0).unwrap_or(1)
}

/// `n` cell centers of `[e_min, e_max]`.
pub fn energy_grid(e_min: f64, e_max: f64, n: usize) -> Vec<f64> {
    let w = (e_max - e_min) / n as f64;
    (0..n).map(|j| e_min + (j as f64 + 0.5) * w).collect()
}

/// Width of the grid cell around each point: half the distance to each
/// neighbour, mirrored at the ends.
pub fn cell_widths(grid: &[f64]) -> Vec<f64> {
    let n = grid.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| match i {
            0 => grid[1] - grid[0],
            i if i == n - 1 => grid[n - 1] - grid[n - 2],
            i => 0.5 * (grid[i + 1] - grid[i - 1]),
        })
        .collect()
}

fn check_increasing(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|e| !e.is_finite()) {
        return Err(Error::Precondition("energy grid must be finite and nonempty".into()));
    }
    if let Some(i) = grid.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::Precondition(format!(
            "energy grid not increasing at index {} ({} then {})",
            i + 1,
            grid[i],
            grid[i + 1]
        )));
    }
    Ok(())
}

/// Rotation number of the Schrödinger cocycle from its orbits alone, with
/// the fiber spread reported rather than enforced.
fn plain_rotation(c: &Cocycle, opts: &RotationOptions) -> Result<(f64, f64)> {
    let loose = RotationOptions { tol_spread: f64::INFINITY, ..opts.clone() };
    let r = rotation_number(c, &loose, None)?;
    Ok((r.rho, r.spread))
}

/// One record; the full result is returned alongside when the reduction ran.
pub fn scan_energy(
    v: &AnalyticFunction,
    alpha: &Frequency,
    e: f64,
    cfg: &KamConfig,
    opts: &ScanOptions,
) -> Result<(ScanRecord, Option<KamResult>)> {
    let start = Instant::now();
    let c = Cocycle::schrodinger(v, e, alpha.clone())?;
    let run = reduce_to_rotations(&c, cfg).ok();
    let (rho, rho_spread) = match run.as_ref().and_then(|r| r.rho.zip(r.rho_spread)) {
        Some(x) => x,
        None => plain_rotation(&c, &cfg.rotation)?,
    };
    let lyap = lyapunov(&c, opts.lyap_iter, opts.lyap_fibers)?.value;
    let cert_pass = run.as_ref().and_then(|r| r.certificate.as_ref()).is_some_and(|c| c.pass);
    let (kam_status, final_residual) = match &run {
        Some(r) => (r.status.into(), r.grid_residual),
        None => (ScanStatus::NotAttempted, f64::INFINITY),
    };
    let record = ScanRecord {
        e,
        rho,
        rho_spread,
        cert_pass,
        kam_status,
        final_residual,
        lyap,
        wall_time: start.elapsed().as_secs_f64(),
    };
    Ok((record, run))
}

/// Runs [`scan_energy`] over `grid` on `opts.jobs` threads. Records come
/// back in grid order.
pub fn scan_energies(
    v: &AnalyticFunction,
    alpha: &Frequency,
    grid: &[f64],
    cfg: &KamConfig,
    opts: &ScanOptions,
) -> Result<Vec<ScanRecord>> {
    check_increasing(grid)?;
    if !v.real_symmetric {
        return Err(Error::InvalidInput("potential must be real".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    pool.install(|| {
        grid.par_iter()
            .map(|&e| scan_energy(v, alpha, e, cfg, opts).map(|(r, _)| r))
            .collect()
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub n: usize,
    pub admitted: usize,
    pub converged: usize,
    pub converged_fraction: f64,
    /// Converged among the energies passing the certificate.
    pub converged_fraction_admitted: f64,
    /// Total width of the grid cells of converged energies.
    pub measure: f64,
}

/// Interval-counting summary of a scan over `grid`.
pub fn summarize(records: &[ScanRecord]) -> ScanSummary {
    let grid: Vec<f64> = records.iter().map(|r| r.e).collect();
    let widths = cell_widths(&grid);
    let mut s = ScanSummary { n: records.len(), ..Default::default() };
    for (r, w) in records.iter().zip(widths) {
        if r.cert_pass {
            s.admitted += 1;
        }
        if r.kam_status == ScanStatus::Converged {
            s.converged += 1;
            s.measure += w;
        }
    }
    let frac = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    s.converged_fraction = frac(s.converged, s.n);
    let conv_adm = records.iter().filter(|r| r.cert_pass && r.kam_status == ScanStatus::Converged).count();
    s.converged_fraction_admitted = frac(conv_adm, s.admitted);
    s
}

pub fn write_csv<W: Write>(records: &[ScanRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r).map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    }
    w.flush().map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<ScanRecord>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|x| x.map_err(|e| Error::InvalidInput(format!("csv: {e}")))).collect()
}

/// Rounding floor of the monotonicity tolerance.
const MONO_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub energies: Vec<f64>,
    /// Rotation numbers folded into `[-1/4, 3/4)`.
    pub rho: Vec<f64>,
    pub spread: Vec<f64>,
    pub tol_mono: f64,
    /// First pair `(i, i+1)` with `rho_i < rho_{i+1} - tol_mono`.
    pub violation: Option<(usize, usize)>,
    /// `rho(first) >= 1/2 - 1e-2`.
    pub first_ok: bool,
    /// `rho(last) <= 1e-2`.
    pub last_ok: bool,
    pub pass: bool,
}

/// Checks that `E -> rho(E)` is non-increasing on an increasing grid that
/// covers `[-2 - 2‖v‖, 2 + 2‖v‖]`, starting near `1/2` and ending near `0`.
pub fn check_rho_monotone(
    v: &AnalyticFunction,
    alpha: &Frequency,
    grid: &[f64],
    opts: &RotationOptions,
) -> Result<MonotoneReport> {
    check_increasing(grid)?;
    let reach = 2.0 + 2.0 * v.sup_real(1024);
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    if lo > -reach || hi < reach {
        return Err(Error::Precondition(format!(
            "grid [{lo}, {hi}] does not cover [-{reach}, {reach}]"
        )));
    }
    let mut rho = Vec::with_capacity(grid.len());
    let mut spread = Vec::with_capacity(grid.len());
    for &e in grid {
        let c = Cocycle::schrodinger(v, e, alpha.clone())?;
        let (r, s) = plain_rotation(&c, opts)?;
        rho.push(if r >= 0.75 { r - 1.0 } else { r });
        spread.push(s);
    }
    let tol_mono = (2.0 * spread.iter().cloned().fold(0.0, f64::max)).max(MONO_FLOOR);
    let violation = rho.windows(2).position(|w| w[0] < w[1] - tol_mono).map(|i| (i, i + 1));
    let first_ok = rho[0] >= 0.5 - 1e-2;
    let last_ok = rho[rho.len() - 1] <= 1e-2;
    let pass = violation.is_none() && first_ok && last_ok;
    Ok(MonotoneReport { energies: grid.to_vec(), rho, spread, tol_mono, violation, first_ok, last_ok, pass })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DrhoReport {
    pub e0: f64,
    pub de: f64,
    /// `(rho(E0 + dE) - rho(E0 - dE)) / (2 dE)` from the means of the
    /// converged angle functions.
    pub finite_difference: f64,
    /// `int ‖B‖_HS^2` over the circle.
    pub hs_integral: f64,
    /// `-(1 / 8 pi) int ‖B‖_HS^2`.
    pub formula: f64,
    pub relative_discrepancy: f64,
}

/// Mean of `a^2 + b^2 + c^2 + d^2` for the conjugacy of a converged run.
pub fn hs_integral(r: &KamResult) -> f64 {
    r.b.entries().iter().map(|e| e.mul(e).mean()).sum()
}

/// Compares the finite difference of the rotation number at `e0` with
/// `-(1/8 pi) int ‖B‖_HS^2`, where `B` conjugates the cocycle at `e0` to
/// rotations. The rotation numbers are the means of the reduced angles, so
/// `de` can be small.
pub fn check_drho_de(
    v: &AnalyticFunction,
    alpha: &Frequency,
    e0: f64,
    de: f64,
    cfg: &KamConfig,
) -> Result<DrhoReport> {
    if !(de > 0.0) {
        return Err(Error::InvalidInput("dE must be positive".into()));
    }
    // constant cocycles are conjugated to a rotation by the constant
    // normalizer alone; the arithmetic admission is only needed otherwise
    let constant = v.zero_mean().norm_upper(v.h)? == 0.0;
    let reduce = |e: f64| -> Result<(f64, f64)> {
        let c = Cocycle::schrodinger(v, e, alpha.clone())?;
        if constant {
            let m = c.a.eval(0.0);
            let n = constant_normalizer(m)
                .ok_or_else(|| Error::NotApplicable(format!("E = {e} is not elliptic")))?;
            let hs = n.a * n.a + n.b * n.b + n.c * n.c + n.d * n.d;
            return Ok(((n * m * n.inv()).polar_angle(), hs));
        }
        let r = reduce_to_rotations(&c, cfg)?;
        if r.status != KamStatus::Converged {
            return Err(Error::NotApplicable(format!(
                "reduction at E = {e} ended {:?}: {}",
                r.status,
                r.message.clone().unwrap_or_default()
            )));
        }
        Ok((r.phi.mean(), hs_integral(&r)))
    };
    let (_, hs) = reduce(e0)?;
    let (rho_plus, _) = reduce(e0 + de)?;
    let (rho_minus, _) = reduce(e0 - de)?;
    let mut diff = rho_plus - rho_minus;
    diff -= diff.round();
    let finite_difference = diff / (2.0 * de);
    let formula = -hs / (8.0 * PI);
    let relative_discrepancy = ((finite_difference - formula) / formula).abs();
    Ok(DrhoReport { e0, de, finite_difference, hs_integral: hs, formula, relative_discrepancy })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> KamConfig {
        KamConfig::default()
    }

    #[test]
    fn free_operator_scan() {
        let cfg = cfg();
        let v = AnalyticFunction::zero(cfg.degree, cfg.h);
        let grid = energy_grid(-2.0 + 1e-3, 2.0 - 1e-3, 24);
        let opts = ScanOptions { jobs: 2, lyap_iter: 500, lyap_fibers: 2 };
        let recs = scan_energies(&v, &Frequency::golden(), &grid, &cfg, &opts).unwrap();
        for r in &recs {
            let exact = (r.e / 2.0).acos() / (2.0 * PI);
            assert!((r.rho - exact).abs() < 1e-6, "{r:?}");
            if r.cert_pass {
                assert_eq!(r.kam_status, ScanStatus::Converged, "{r:?}");
            }
        }
        let s = summarize(&recs);
        let cell = grid[1] - grid[0];
        assert!((s.measure - cell * s.converged as f64).abs() < 1e-12);
        assert!(s.converged_fraction_admitted == 1.0);
        assert!(s.admitted >= 20, "{s:?}");
    }

    #[test]
    fn csv_round_trip_and_header() {
        let rec = ScanRecord {
            e: 0.5,
            rho: 0.2,
            rho_spread: 1e-9,
            cert_pass: false,
            kam_status: ScanStatus::NotAttempted,
            final_residual: f64::INFINITY,
            lyap: 0.0,
            wall_time: 0.1,
        };
        let mut buf = Vec::new();
        write_csv(std::slice::from_ref(&rec), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), SCAN_HEADER);
        assert!(text.contains("not_attempted"));
        assert_eq!(read_csv(&buf[..]).unwrap(), vec![rec]);
    }

    #[test]
    fn shuffled_grid_is_rejected() {
        let v = AnalyticFunction::zero(4, 0.1);
        let grid = [-2.5, 0.0, -1.0, 2.5];
        let err = check_rho_monotone(&v, &Frequency::golden(), &grid, &RotationOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)), "{err}");
        let err = scan_energies(&v, &Frequency::golden(), &grid, &cfg(), &ScanOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn free_rotation_number_is_monotone() {
        let v = AnalyticFunction::zero(4, 0.1);
        let grid = energy_grid(-2.2, 2.2, 40);
        let opts = RotationOptions { n_iter: 4000, ..Default::default() };
        let r = check_rho_monotone(&v, &Frequency::golden(), &grid, &opts).unwrap();
        assert!(r.pass, "{r:?}");
        for (e, rho) in r.energies.iter().zip(&r.rho) {
            if e.abs() < 2.0 {
                assert!((rho - (e / 2.0).acos() / (2.0 * PI)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn drho_at_free_center() {
        let cfg = cfg();
        let v = AnalyticFunction::zero(cfg.degree, cfg.h);
        let r = check_drho_de(&v, &Frequency::golden(), 0.0, 1e-6, &cfg).unwrap();
        let exact = -1.0 / (4.0 * PI);
        assert!((r.finite_difference - exact).abs() < 1e-6 * exact.abs(), "{r:?}");
        assert!((r.formula - exact).abs() < 1e-9, "{r:?}");
        // away from the center the constant conjugacy is not the identity
        let e0 = 0.7;
        let r = check_drho_de(&v, &Frequency::golden(), e0, 1e-6, &cfg).unwrap();
        let exact = -1.0 / (2.0 * PI * (4.0 - e0 * e0).sqrt());
        assert!(r.relative_discrepancy < 1e-6, "{r:?}");
        assert!((r.finite_difference - exact).abs() < 1e-6 * exact.abs(), "{r:?}");
    }

    #[test]
    fn drho_not_applicable_outside_spectrum() {
        let cfg = cfg();
        let v = AnalyticFunction::zero(cfg.degree, cfg.h);
        let err = check_drho_de(&v, &Frequency::golden(), 3.0, 1e-6, &cfg).unwrap_err();
        assert!(matches!(err, Error::NotApplicable(_)), "{err}");
    }
}
