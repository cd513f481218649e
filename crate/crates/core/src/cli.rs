//! Command-line front end. Every JSON artifact is wrapped with the format
//! version and the full run configuration.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::analytic::{verify_denjoy_bounds, AnalyticFunction};
use crate::arithmetic::{parse_alpha, select_q, DiophantineParams, Frequency, SelectedSubsequence};
use crate::cocycle::{lyapunov, rotation_number, Cocycle, RotationOptions};
use crate::error::{Error, Result};
use crate::experiments::{
    check_drho_de, check_rho_monotone, energy_grid, scan_energies, summarize, write_csv, ScanOptions, ScanSummary,
};
use crate::kam::{reduce_to_rotations, KamConfig, KamStatus, FORMAT_VERSION};

pub const EXIT_OK: i32 = 0;
/// A check ran and failed, or output could not be written.
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_PRECONDITION: i32 = 2;
pub const EXIT_STALLED: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Clone, Debug, Serialize, Deserialize)]
#[command(name = "cocycle-kam", version, about = "Reduction of quasiperiodic SL(2,R) cocycles to rotations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Recorded in the run configuration; no subcommand draws random numbers.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Subcommand, Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Continued fraction, convergents and the selected denominators.
    Cf(CfArgs),
    /// Fibered rotation number of a Schrödinger cocycle.
    Rotnum(OrbitArgs),
    /// Lyapunov exponent of a Schrödinger cocycle.
    Lyap(OrbitArgs),
    /// Reduce a Schrödinger cocycle to a cocycle of rotations.
    KamReduce(ReduceArgs),
    /// Energy scan; one CSV row per energy.
    Scan(ScanArgs),
    /// Monotonicity of the rotation number in the energy.
    CheckRho(CheckRhoArgs),
    /// Finite-difference check of the rotation number derivative.
    CheckDrho(CheckDrhoArgs),
    /// Birkhoff-sum deviations against the Denjoy-type bounds.
    VerifyDenjoy(DenjoyArgs),
    /// Run the closed-form example suite.
    Selftest,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct FreqArgs {
    /// Decimal in (0, 1), `expr:golden` or `expr:sqrt2`.
    #[arg(long, conflicts_with = "quotients")]
    pub alpha: Option<String>,
    /// Exact partial quotients `a_1,a_2,...`, continued by ones.
    #[arg(long, value_delimiter = ',')]
    pub quotients: Option<Vec<u64>>,
}

impl FreqArgs {
    pub fn frequency(&self) -> Result<Frequency> {
        match (&self.alpha, &self.quotients) {
            (_, Some(q)) => Frequency::from_quotients(q.clone()),
            (Some(a), None) => parse_alpha(a),
            (None, None) => Ok(Frequency::golden()),
        }
    }
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct PotentialArgs {
    /// Shape `f` as a sum of terms `[c*]cosK` or `[c*]sinK` (K defaults to
    /// 1, meaning `c cos(2 pi K x)`); the potential is `2 lambda f`.
    #[arg(long, default_value = "cos")]
    pub potential: String,
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
}

impl PotentialArgs {
    pub fn potential(&self, degree: usize, h: f64) -> Result<AnalyticFunction> {
        Ok(parse_shape(&self.potential, degree, h)?.scale(2.0 * self.lambda))
    }
}

/// Parses `[c*]cosK + [c*]sinK + ...`. A leading `lambda*` is ignored, so
/// `lambda*cos` and `cos` agree.
pub fn parse_shape(expr: &str, degree: usize, h: f64) -> Result<AnalyticFunction> {
    let bad = |t: &str| Error::InvalidInput(format!("cannot parse potential term '{t}' in '{expr}'"));
    let compact: String = expr.chars().filter(|c| !c.is_whitespace()).collect();
    let compact = compact.strip_prefix("lambda*").unwrap_or(&compact).to_string();
    let mut terms = Vec::new();
    for raw in compact.split('+').filter(|t| !t.is_empty()) {
        let (coef, body) = match raw.rsplit_once('*') {
            Some((c, b)) => (c.parse::<f64>().map_err(|_| bad(raw))?, b),
            None => (1.0, raw),
        };
        let (is_cos, k) = if let Some(k) = body.strip_prefix("cos") {
            (true, k)
        } else if let Some(k) = body.strip_prefix("sin") {
            (false, k)
        } else {
            return Err(bad(raw));
        };
        let k: usize = if k.is_empty() { 1 } else { k.parse().map_err(|_| bad(raw))? };
        if k > degree {
            return Err(Error::InvalidInput(format!("mode {k} exceeds degree {degree}")));
        }
        terms.push(if is_cos { (k, coef, 0.0) } else { (k, 0.0, coef) });
    }
    Ok(AnalyticFunction::trig(degree, h, &terms))
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct CfArgs {
    #[command(flatten)]
    pub freq: FreqArgs,
    #[arg(long, default_value_t = 1e6)]
    pub max_q: f64,
    /// Also run the bridge selection of the denominators.
    #[arg(long)]
    pub select_q: bool,
    #[arg(long, default_value_t = 2.0)]
    pub tau: f64,
    #[arg(long, default_value_t = 0.4)]
    pub nu: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub eps: f64,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct OrbitArgs {
    #[command(flatten)]
    pub freq: FreqArgs,
    #[command(flatten)]
    pub potential: PotentialArgs,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub energy: f64,
    #[arg(long, default_value_t = 20_000)]
    pub iters: usize,
    #[arg(long, default_value_t = 8)]
    pub fibers: usize,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
pub struct KamArgs {
    /// JSON file with a full configuration; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Measured-contraction preset (the default).
    #[arg(long, conflicts_with = "formula")]
    pub adaptive: bool,
    /// Formula-driven preset.
    #[arg(long)]
    pub formula: bool,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub h_star: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_outer: Option<usize>,
    #[arg(long)]
    pub degree: Option<usize>,
}

impl KamArgs {
    pub fn config(&self) -> Result<KamConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?
            }
            None if self.formula => KamConfig::formula(),
            None => KamConfig::default(),
        };
        if self.config.is_some() && (self.formula || self.adaptive) {
            cfg.adaptive = self.adaptive;
        }
        macro_rules! set {
            ($($field:ident <- $flag:ident),*) => { $(if let Some(v) = self.$flag { cfg.$field = v; })* };
        }
        set!(h <- h, h_star <- h_star, tau <- tau, nu <- nu, eps <- eps, tol_residual <- tol, max_outer <- max_outer,
             degree <- degree);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct ReduceArgs {
    #[command(flatten)]
    pub freq: FreqArgs,
    #[command(flatten)]
    pub potential: PotentialArgs,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub energy: f64,
    #[command(flatten)]
    pub kam: KamArgs,
    /// Also write the bare result (without the wrapper) here.
    #[arg(long)]
    pub dump_state: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct ScanArgs {
    #[command(flatten)]
    pub freq: FreqArgs,
    #[arg(long, default_value = "cos")]
    pub potential: String,
    /// Values of `lambda`; one CSV per value.
    #[arg(long, value_delimiter = ',', default_value = "0.001")]
    pub lambda_list: Vec<f64>,
    #[arg(long, default_value_t = -2.2, allow_hyphen_values = true)]
    pub e_min: f64,
    #[arg(long, default_value_t = 2.2, allow_hyphen_values = true)]
    pub e_max: f64,
    #[arg(long, default_value_t = 200)]
    pub e_steps: usize,
    /// Threads; defaults to `COCYCLE_KAM_THREADS` or 1.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// JSON summary destination (stdout when `--out` is given, else stderr).
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[command(flatten)]
    pub kam: KamArgs,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct CheckRhoArgs {
    #[command(flatten)]
    pub freq: FreqArgs,
    #[command(flatten)]
    pub potential: PotentialArgs,
    /// Defaults to `-(2 + 2‖v‖) - 0.1`.
    #[arg(long, allow_hyphen_values = true)]
    pub e_min: Option<f64>,
    /// Defaults to `2 + 2‖v‖ + 0.1`.
    #[arg(long, allow_hyphen_values = true)]
    pub e_max: Option<f64>,
    #[arg(long, default_value_t = 100)]
    pub e_steps: usize,
    #[arg(long, default_value_t = 20_000)]
    pub iters: usize,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct CheckDrhoArgs {
    #[command(flatten)]
    pub freq: FreqArgs,
    #[command(flatten)]
    pub potential: PotentialArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub energy: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub de: f64,
    #[command(flatten)]
    pub kam: KamArgs,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct DenjoyArgs {
    #[command(flatten)]
    pub freq: FreqArgs,
    /// The function `f`, in the syntax of `--potential` (no `lambda`).
    #[arg(long, default_value = "cos+0.3*cos2")]
    pub f: String,
    #[arg(long, default_value_t = 8)]
    pub degree: usize,
    #[arg(long, default_value_t = 0.1)]
    pub h: f64,
    #[arg(long, default_value_t = 0.1)]
    pub eta: f64,
    #[arg(long, default_value_t = 2.0)]
    pub tau: f64,
    #[arg(long, default_value_t = 0.4)]
    pub nu: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    #[arg(long, default_value_t = 1e12)]
    pub max_q: f64,
    /// Use the bridge selection instead of every convergent denominator.
    #[arg(long)]
    pub select_q: bool,
}

/// Everything needed to repeat a run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub kam: Option<KamConfig>,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub format_version: String,
    pub run_config: RunConfig,
    pub result: T,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CfOutput {
    pub quotients: Vec<u64>,
    /// `(p_k, q_k)` as decimal strings.
    pub convergents: Vec<(String, String)>,
    pub exact: bool,
    pub exhausted: bool,
    pub selected: Option<SelectedOut>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SelectedOut {
    pub indices: Vec<usize>,
    #[serde(rename = "Q")]
    pub q: Vec<String>,
    #[serde(rename = "Qbar")]
    pub q_bar: Vec<String>,
    pub truncated: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LambdaSummary {
    pub lambda: f64,
    pub csv: Option<PathBuf>,
    pub summary: ScanSummary,
}

/// Parses `args` (program name first) and runs the command; returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            EXIT_USAGE
        }
        Err(CliError::Io(m)) => {
            eprintln!("error: {m}");
            EXIT_FAILED
        }
        Err(CliError::Domain(e)) => {
            eprintln!("error: {e}");
            EXIT_PRECONDITION
        }
    }
}

enum CliError {
    Usage(String),
    Io(String),
    Domain(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(m) => CliError::Usage(m),
            e => CliError::Domain(e),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn open_out(path: Option<&Path>) -> std::result::Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit<T: Serialize>(cli: &Cli, kam: Option<&KamConfig>, result: T) -> std::result::Result<(), CliError> {
    emit_to(cli.out.as_deref(), cli, kam, result)
}

fn emit_to<T: Serialize>(
    path: Option<&Path>,
    cli: &Cli,
    kam: Option<&KamConfig>,
    result: T,
) -> std::result::Result<(), CliError> {
    let artifact = Artifact {
        format_version: FORMAT_VERSION.into(),
        run_config: RunConfig { command: cli.command.clone(), kam: kam.cloned(), seed: cli.seed },
        result,
    };
    let mut w = open_out(path)?;
    serde_json::to_writer_pretty(&mut w, &artifact).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(w)?;
    Ok(())
}

fn schrodinger(freq: &FreqArgs, pot: &PotentialArgs, e: f64, degree: usize, h: f64) -> Result<Cocycle> {
    Cocycle::schrodinger(&pot.potential(degree, h)?, e, freq.frequency()?)
}

fn dispatch(cli: &Cli) -> std::result::Result<i32, CliError> {
    match &cli.command {
        Command::Cf(a) => {
            let alpha = a.freq.frequency()?;
            let cf = alpha.continued_fraction(a.max_q)?;
            let selected = if a.select_q {
                let s = select_q(&cf, &DiophantineParams::new(a.tau, a.nu, a.eps)?)?;
                Some(SelectedOut {
                    indices: s.indices.clone(),
                    q: s.q.iter().map(|x| x.to_string()).collect(),
                    q_bar: s.q_bar.iter().map(|x| x.to_string()).collect(),
                    truncated: s.truncated,
                })
            } else {
                None
            };
            let out = CfOutput {
                quotients: cf.quotients.clone(),
                convergents: cf.p.iter().zip(&cf.q).map(|(p, q)| (p.to_string(), q.to_string())).collect(),
                exact: cf.exact,
                exhausted: cf.exhausted,
                selected,
            };
            emit(cli, None, out)?;
            Ok(EXIT_OK)
        }
        Command::Rotnum(a) => {
            let c = schrodinger(&a.freq, &a.potential, a.energy, 16, 0.1)?;
            let opts = RotationOptions { n_iter: a.iters, n_fibers: a.fibers, ..Default::default() };
            let cf = c.alpha.continued_fraction(1e18)?;
            let r = rotation_number(&c, &opts, Some(&cf))?;
            emit(cli, None, r)?;
            Ok(EXIT_OK)
        }
        Command::Lyap(a) => {
            let c = schrodinger(&a.freq, &a.potential, a.energy, 16, 0.1)?;
            emit(cli, None, lyapunov(&c, a.iters, a.fibers)?)?;
            Ok(EXIT_OK)
        }
        Command::KamReduce(a) => {
            let cfg = a.kam.config()?;
            let c = schrodinger(&a.freq, &a.potential, a.energy, cfg.degree, cfg.h)?;
            let r = reduce_to_rotations(&c, &cfg)?;
            if let Some(p) = &a.dump_state {
                let mut w = open_out(Some(p))?;
                serde_json::to_writer_pretty(&mut w, &r).map_err(|e| CliError::Io(e.to_string()))?;
            }
            let code = match r.status {
                KamStatus::Converged => EXIT_OK,
                KamStatus::PreconditionFailed => EXIT_PRECONDITION,
                KamStatus::Stalled => EXIT_STALLED,
            };
            emit(cli, Some(&cfg), r)?;
            Ok(code)
        }
        Command::Scan(a) => scan(cli, a),
        Command::CheckRho(a) => {
            let v = a.potential.potential(16, 0.1)?;
            let reach = 2.0 + 2.0 * v.sup_real(1024) + 0.1;
            let grid = energy_grid(a.e_min.unwrap_or(-reach), a.e_max.unwrap_or(reach), a.e_steps);
            let opts = RotationOptions { n_iter: a.iters, ..Default::default() };
            let r = check_rho_monotone(&v, &a.freq.frequency()?, &grid, &opts)?;
            let pass = r.pass;
            emit(cli, None, r)?;
            Ok(if pass { EXIT_OK } else { EXIT_FAILED })
        }
        Command::CheckDrho(a) => {
            let cfg = a.kam.config()?;
            let v = a.potential.potential(cfg.degree, cfg.h)?;
            let r = check_drho_de(&v, &a.freq.frequency()?, a.energy, a.de, &cfg)?;
            emit(cli, Some(&cfg), r)?;
            Ok(EXIT_OK)
        }
        Command::VerifyDenjoy(a) => {
            let alpha = a.freq.frequency()?;
            let f = parse_shape(&a.f, a.degree, a.h)?;
            let params = DiophantineParams::new(a.tau, a.nu, a.eps)?;
            let cf = alpha.continued_fraction(a.max_q)?;
            let seq =
                if a.select_q { select_q(&cf, &params)? } else { SelectedSubsequence::all_denominators(&cf)? };
            emit(cli, None, verify_denjoy_bounds(&f, &alpha, &seq, &params, a.h, a.eta)?)?;
            Ok(EXIT_OK)
        }
        Command::Selftest => {
            let outcomes = crate::selftest::run();
            let mut failed = 0;
            for o in &outcomes {
                let tag = if o.pass { "PASS" } else { "FAIL" };
                eprintln!("{tag} {}{}", o.name, if o.pass { String::new() } else { format!(": {}", o.detail) });
                failed += usize::from(!o.pass);
            }
            emit(cli, None, &outcomes)?;
            Ok(if failed == 0 { EXIT_OK } else { EXIT_FAILED })
        }
    }
}

fn lambda_path(base: &Path, lambda: f64) -> PathBuf {
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("scan");
    let ext = base.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    base.with_file_name(format!("{stem}_lambda{lambda:e}.{ext}"))
}

fn scan(cli: &Cli, a: &ScanArgs) -> std::result::Result<i32, CliError> {
    if a.lambda_list.is_empty() || a.e_steps == 0 || !(a.e_max > a.e_min) {
        return Err(CliError::Usage("need a nonempty lambda list and e_min < e_max".into()));
    }
    if a.lambda_list.len() > 1 && cli.out.is_none() {
        return Err(CliError::Usage("several lambdas need --out for the per-lambda CSV files".into()));
    }
    let cfg = a.kam.config()?;
    let alpha = a.freq.frequency()?;
    let grid = energy_grid(a.e_min, a.e_max, a.e_steps);
    let opts = ScanOptions { jobs: a.jobs.unwrap_or_else(crate::experiments::default_jobs), ..Default::default() };
    let shape = parse_shape(&a.potential, cfg.degree, cfg.h)?;
    let mut summaries = Vec::new();
    for &lambda in &a.lambda_list {
        let v = shape.scale(2.0 * lambda);
        let recs = scan_energies(&v, &alpha, &grid, &cfg, &opts)?;
        let path = cli.out.as_ref().map(|p| if a.lambda_list.len() > 1 { lambda_path(p, lambda) } else { p.clone() });
        write_csv(&recs, open_out(path.as_deref())?)?;
        summaries.push(LambdaSummary { lambda, csv: path, summary: summarize(&recs) });
    }
    match (&a.summary, &cli.out) {
        (Some(p), _) => emit_to(Some(p), cli, Some(&cfg), &summaries)?,
        (None, Some(_)) => emit_to(None, cli, Some(&cfg), &summaries)?,
        (None, None) => {
            let artifact = Artifact {
                format_version: FORMAT_VERSION.into(),
                run_config: RunConfig { command: cli.command.clone(), kam: Some(cfg), seed: cli.seed },
                result: &summaries,
            };
            eprintln!("{}", serde_json::to_string_pretty(&artifact).map_err(|e| CliError::Io(e.to_string()))?);
        }
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        let f = parse_shape("cos + 0.3*cos2", 4, 0.1).unwrap();
        let x = 0.13;
        let want = (2.0 * std::f64::consts::PI * x).cos() + 0.3 * (4.0 * std::f64::consts::PI * x).cos();
        assert!((f.eval_real(x) - want).abs() < 1e-15);
        let g = parse_shape("lambda*cos", 4, 0.1).unwrap();
        assert_eq!(g, parse_shape("cos", 4, 0.1).unwrap());
        let s = parse_shape("2*sin3", 4, 0.1).unwrap();
        assert!((s.eval_real(x) - 2.0 * (6.0 * std::f64::consts::PI * x).sin()).abs() < 1e-14);
        assert!(parse_shape("tan", 4, 0.1).is_err());
        assert!(parse_shape("cos9", 4, 0.1).is_err());
    }

    #[test]
    fn usage_errors_exit_64() {
        assert_eq!(run(["cocycle-kam", "no-such-command"]), EXIT_USAGE);
        assert_eq!(run(["cocycle-kam", "cf", "--alpha", "0.5", "--quotients", "1,2"]), EXIT_USAGE);
        assert_eq!(run(["cocycle-kam", "cf", "--alpha", "1.5"]), EXIT_USAGE);
    }

    #[test]
    fn config_overrides() {
        let k = KamArgs { tol: Some(1e-7), formula: true, ..Default::default() };
        let cfg = k.config().unwrap();
        assert!(!cfg.adaptive && cfg.tol_residual == 1e-7);
        assert!(KamArgs::default().config().unwrap().adaptive);
    }
}
