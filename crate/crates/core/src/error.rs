use thiserror::Error;

use crate::arithmetic::ContinuedFraction;

#[derive(Debug, Error)]
pub enum Error {
    #[error("rational or precision exhausted after {} partial quotients", .partial.depth())]
    RationalOrPrecisionExhausted { partial: Box<ContinuedFraction> },

    #[error("insufficient depth: {0}")]
    InsufficientDepth(String),

    #[error("outside strip: requested h' = {requested} but function lives on h = {available}")]
    OutsideStrip { requested: f64, available: f64 },

    #[error("resonant frequency: e^(2 pi i l alpha) = 1 for l = {l}")]
    ResonantFrequency { l: i64 },

    #[error("growth overflow at n = {n} (norm bound {norm:e})")]
    GrowthOverflow { n: i64, norm: f64 },

    #[error("rotation form lost: certified bound {bound:e} exceeds 1")]
    RotationFormLost { bound: f64 },

    #[error("rotation number not resolved: fiber spread {spread:e} > {tol:e}")]
    RotationNumberNotResolved { spread: f64, tol: f64 },

    #[error("not in elliptic domain: {0}")]
    NotInEllipticDomain(String),

    #[error("normalization diverged after {iterations} iterations (residual {residual:e})")]
    NormalizationDiverged { iterations: usize, residual: f64 },

    #[error("CT preconditions violated: {0}")]
    CtPreconditionsViolated(String),

    #[error("contraction lost at step {step}: ratio {ratio:e}")]
    ContractionLost { step: usize, ratio: f64 },

    #[error("not commuting: residual {residual:e}")]
    NotCommuting { residual: f64 },

    #[error("degenerate symmetrization: min |det(A - L)| = {min_det:e}")]
    DegenerateSymmetrization { min_det: f64 },

    #[error("Aq contract violated ({which}): measured {measured:e}, bound {bound:e}")]
    AqContractViolated {
        which: String,
        measured: f64,
        bound: f64,
    },

    #[error("inductive contract violated: {0}")]
    InductiveContractViolated(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("not applicable at E0: {0}")]
    NotApplicable(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
