use alloc::string::String;
use core::fmt;

use crate::poly::ParseError;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Everything that can go wrong inside the numeric core.
///
/// The variants are grouped the way callers need to react to them: configuration
/// problems (bad shapes, gradings, symbol tables), numerical failures (NaN, step
/// underflow, horizon formation) and invariant violations reported by checks.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operands built over different numbers of Grassmann generators.
    GeneratorMismatch { left: u8, right: u8 },
    /// Requested more generators than the truncated algebra supports.
    TooManyGenerators(u8),
    /// Matrix dimensions do not agree.
    Shape { left: usize, right: usize },
    /// A matrix entry (or bound matrix) disagrees with its declared grading.
    Grading(String),
    /// A non-finite coefficient was supplied or produced.
    NonFinite(String),
    /// Symbol table problems: duplicate names, unpaired coordinates, bad names.
    Symbol(String),
    /// A symbol used by a polynomial has no matrix bound to it.
    UnboundSymbol(String),
    /// Expression-language syntax error.
    Parse(ParseError),
    /// Any other configuration problem (invalid parameter ranges and the like).
    Config(String),
    /// Legendre transform could not invert the kinetic form.
    Kinetic(String),
    /// Leapfrog requested for a Hamiltonian that is not `T(p) + V(q)`.
    NonSeparable,
    /// A fermionic degree of freedom reached a bosonic-only code path.
    FermionicUnsupported(String),
    /// Boltzmann weight is not bounded below.
    Unbounded(String),
    /// Ensemble average fails the anti-Hermiticity test.
    Asymmetric { max_sigma: f64 },
    /// Jacobian problem too large for a dense finite-difference determinant.
    DimensionOverflow { dim: usize, max: usize },
    /// NaN or infinity appeared while integrating.
    Numerical { t: f64, what: String },
    /// TOV integration reached `2m >= r`.
    Horizon { r: f64, m: f64 },
    /// Adaptive step size collapsed.
    StepUnderflow { r: f64, h: f64 },
    /// Pressure never reached the termination value inside the radius budget.
    NoSurface { r: f64, p: f64, target: f64 },
}

impl Error {
    /// True for errors that reflect bad input rather than a numerical failure.
    pub fn is_config(&self) -> bool {
        !matches!(
            self,
            Error::Numerical { .. }
                | Error::Horizon { .. }
                | Error::StepUnderflow { .. }
                | Error::NoSurface { .. }
                | Error::Asymmetric { .. }
        )
    }
}

impl From<ParseError> for Error {
    fn from(e: ParseError) -> Self {
        Error::Parse(e)
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::GeneratorMismatch { left, right } => {
                write!(f, "generator count mismatch: {left} vs {right}")
            }
            Error::TooManyGenerators(g) => {
                write!(f, "{g} generators requested, at most {} supported", crate::grassmann::MAX_GENERATORS)
            }
            Error::Shape { left, right } => write!(f, "dimension mismatch: {left} vs {right}"),
            Error::Grading(msg) => write!(f, "grading error: {msg}"),
            Error::NonFinite(msg) => write!(f, "non-finite value: {msg}"),
            Error::Symbol(msg) => write!(f, "symbol table error: {msg}"),
            Error::UnboundSymbol(name) => write!(f, "symbol `{name}` is not bound"),
            Error::Parse(e) => write!(f, "{e}"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Kinetic(msg) => write!(f, "kinetic term not invertible: {msg}"),
            Error::NonSeparable => {
                write!(f, "leapfrog needs a separable Hamiltonian T(p) + V(q)")
            }
            Error::FermionicUnsupported(what) => {
                write!(f, "fermionic degrees of freedom are not supported by {what}")
            }
            Error::Unbounded(msg) => write!(f, "Boltzmann exponent not bounded below: {msg}"),
            Error::Asymmetric { max_sigma } => write!(
                f,
                "ensemble average is not anti-Hermitian (worst element {max_sigma:.2} sigma)"
            ),
            Error::DimensionOverflow { dim, max } => {
                write!(f, "Jacobian dimension {dim} exceeds the limit {max}")
            }
            Error::Numerical { t, what } => write!(f, "numerical failure at t = {t}: {what}"),
            Error::Horizon { r, m } => {
                write!(f, "horizon formation: 2m >= r at r = {r:e} (m = {m:e})")
            }
            Error::StepUnderflow { r, h } => write!(f, "step size underflow at r = {r:e} (h = {h:e})"),
            Error::NoSurface { r, p, target } => write!(
                f,
                "no surface: pressure {p:e} still above {target:e} at r = {r:e}"
            ),
        }
    }
}
