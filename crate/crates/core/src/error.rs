//! Error type shared by every module of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building or running a simulation.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A physical parameter is out of range or non-finite. The message names
    /// the offending field.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// The classical steady-state iteration did not reach the residual
    /// tolerance; usually a sign of a bistable or marginal drive.
    #[error(
        "steady-state iteration did not converge: residual {residual:.3e} after {iterations} \
         iterations (bistable or marginal drive?)"
    )]
    NonConvergence { residual: f64, iterations: usize },

    /// Requested preset does not exist.
    #[error("unknown preset `{0}` (expected one of: paper_fig1, microtoroid, membrane)")]
    UnknownPreset(String),

    /// Matrix-exponential propagation produced non-finite values.
    #[error("propagation failed: {0}")]
    SingularPropagation(String),

    /// A kappa(t) schedule does not cover the requested time span or is
    /// malformed.
    #[error("dissipation schedule error: {0}")]
    ScheduleGap(String),

    /// The moment drift matrix has an eigenvalue with non-negative real part;
    /// no steady state exists (e.g. |G| >= omega_m/2 backaction divergence,
    /// or an exactly undamped mode).
    #[error("unstable system: {0}")]
    UnstableSystem(String),

    /// Corrected normal-mode splitting is undefined for |G| <= kappa/4.
    #[error("weak coupling: |G| = {g:.6} <= kappa/4 = {kappa_quarter:.6}, splitting undefined")]
    WeakCoupling { g: f64, kappa_quarter: f64 },

    /// Eigenfrequency / cooling-limit formulas diverge at |G| >= omega_m/2.
    #[error("backaction divergence: |G| = {g:.6} >= omega_m/2 = {half_omega_m:.6}")]
    BackactionDivergence { g: f64, half_omega_m: f64 },

    /// A minimum-search window contains no samples.
    #[error("empty search window [{lo:.6}, {hi:.6}]")]
    WindowEmpty { lo: f64, hi: f64 },

    /// Population reached the top Fock levels; the truncated evolution can no
    /// longer be trusted.
    #[error(
        "truncation leak {leak:.3e} exceeds tolerance {tolerance:.3e} at t = {t:.3} \
         (enlarge dim_a/dim_b)"
    )]
    TruncationLeak { leak: f64, tolerance: f64, t: f64 },

    /// Requested Fock space exceeds the configured state cap.
    #[error("Fock space too large: {states} states exceeds cap of {cap}")]
    CapExceeded { states: usize, cap: usize },
}

impl Error {
    /// True for errors caused by bad configuration or arguments (CLI exit 2),
    /// false for errors arising during propagation (CLI exit 3).
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParams(_)
                | Error::UnknownPreset(_)
                | Error::WeakCoupling { .. }
                | Error::BackactionDivergence { .. }
                | Error::WindowEmpty { .. }
                | Error::CapExceeded { .. }
                | Error::ScheduleGap(_)
        )
    }
}
