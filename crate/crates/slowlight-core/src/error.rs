//! Crate-wide error type.
//!
//! Variants are grouped by how a caller should react: configuration and
//! domain errors mean the request was malformed, numeric errors mean a
//! routine could not reach its tolerance, structural errors mean the physics
//! rules out the requested object (no real Riccati root, no finite stopping
//! distance, ...), and verification errors mean a consistency check failed.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter fails its precondition (non-finite, wrong sign, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A coordinate falls outside the domain an object is defined on.
    #[error("τ = {tau:.6} outside domain [{lo:.6}, {hi:.6}]")]
    Domain { tau: f64, lo: f64, hi: f64 },

    /// Malformed configuration file or inconsistent configuration values.
    #[error("configuration error: {0}")]
    Config(String),

    /// A quadrature or iteration failed to reach its tolerance.
    #[error("numerical routine failed: {0}")]
    Numeric(String),

    /// The constant-control matching equation has no real solution.
    #[error("no real modulation root: |Ω₀| = {omega0:.6} exceeds |ε₀| = {eps0:.6}")]
    NoRealRoot { omega0: f64, eps0: f64 },

    /// A reconstructed modulation profile blew up in finite time.
    #[error("modulation profile escapes |m| > {threshold:.1e} at τ = {tau:.6}")]
    FiniteEscape { tau: f64, threshold: f64 },

    /// The modulation never grows, so the pulse never stops.
    #[error("no finite stopping distance: 1/(m²+1) stays above {floor:.3e}")]
    NoStop { floor: f64 },

    /// A window does not reach the dark asymptote needed to seed the atoms.
    #[error(
        "field amplitude {amplitude:.3e} at the window edge τ = {tau:.6} is too \
         large to start from the dark state; extend the window toward the pulse tail"
    )]
    InsufficientAsymptote { tau: f64, amplitude: f64 },

    /// A peak-fit or slope-fit is ill conditioned (flat top, too few points).
    #[error("trajectory fit failed: {0}")]
    FitFailed(String),

    /// No candidate field convention satisfies the equations.
    #[error("no field convention is consistent: best residual {best:.3e} does not converge")]
    NoConsistentConvention { best: f64 },

    /// More than one candidate field convention satisfies the equations.
    #[error("field convention is ambiguous on this profile: {tied} candidates tie")]
    AmbiguousConvention { tied: usize },

    /// A verification check failed against its pinned threshold.
    #[error("verification failed: {0}")]
    Verification(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line interface.
    ///
    /// 2 configuration, 3 domain, 4 numeric, 5 structural, 6 verification,
    /// 7 I/O. Zero is success and one is reserved for panics.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::InvalidParameter(_) | Error::Domain { .. } => 3,
            Error::Numeric(_) | Error::FitFailed(_) => 4,
            Error::NoRealRoot { .. }
            | Error::FiniteEscape { .. }
            | Error::NoStop { .. }
            | Error::InsufficientAsymptote { .. } => 5,
            Error::NoConsistentConvention { .. }
            | Error::AmbiguousConvention { .. }
            | Error::Verification(_) => 6,
            Error::Io(_) => 7,
        }
    }

    /// Stable machine-readable tag for reports and the CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::Domain { .. } => "domain",
            Error::Config(_) => "config",
            Error::Numeric(_) => "numeric",
            Error::NoRealRoot { .. } => "no-real-root",
            Error::FiniteEscape { .. } => "finite-escape",
            Error::NoStop { .. } => "no-stop",
            Error::InsufficientAsymptote { .. } => "insufficient-asymptote",
            Error::FitFailed(_) => "fit-failed",
            Error::NoConsistentConvention { .. } => "no-consistent-convention",
            Error::AmbiguousConvention { .. } => "ambiguous-convention",
            Error::Verification(_) => "verification",
            Error::Io(_) => "io",
        }
    }
}
