//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input is not a finite number: {0}")]
    NonFiniteInput(f64),

    #[error("log-derivative of the volume density is singular at r = 0 (d0 = {d0})")]
    OriginSingular { d0: f64 },

    #[error("solution exceeded the overflow guard at r = {r}: |u|+|u'| = {magnitude:.3e}")]
    BlowUp { r: f64, magnitude: f64 },

    #[error("hypothesis violated: {0}")]
    InvalidHypothesis(String),

    #[error("solution with zero initial amplitude vanishes identically")]
    DegenerateSolution,

    #[error("need at least {needed} zeros, found {found}")]
    TooFewZeros { found: usize, needed: usize },

    #[error("solution metadata disagrees with the supplied problem: {0}")]
    MismatchedProblem(String),

    #[error("solution has not reached the asymptotic regime: {0}")]
    NotAsymptotic(String),

    #[error("dimension {0} is even; the closed-form kernel needs odd N")]
    EvenDimension(u32),

    #[error("dimension {0} is odd; the quadrature kernel needs even N")]
    OddDimension(u32),

    #[error("kernel quadrature requires absorption mu > 0, got {mu}")]
    RequiresAbsorption { mu: f64 },

    #[error("quadrature failed to converge: {0}")]
    QuadratureFailure(String),

    #[error("extrapolation to mu = 0 unstable: estimate {estimate:.3e} exceeds 10 x tol {tol:.3e}")]
    ExtrapolationUnstable { estimate: f64, tol: f64 },

    #[error("r_max = {r_max} is below the asymptotic onset (WKB defect {defect:.3e})")]
    TruncationTooSmall { r_max: f64, defect: f64 },

    #[error("homogeneous pair is degenerate: |W| = {wronskian_abs:.3e}")]
    DegeneratePair { wronskian_abs: f64 },

    #[error("source is non-negligible near r_max (tail fraction {tail_fraction:.3e})")]
    SupportViolation { tail_fraction: f64 },

    #[error("Lebesgue exponent pair out of range: {0}")]
    ExponentOutOfRange(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("iteration failed to converge after {iterations} steps (last measure {last:.3e})")]
    NoConvergence { iterations: usize, last: f64 },

    #[error("fixed point left the cutoff ball: sup |u| = {sup:.3e} > 1/2")]
    CutoffViolated { sup: f64 },

    #[error("dual iterate collapsed to zero")]
    TrivialCollapse,

    #[error("field is not a homogeneous solution: residual {residual:.3e}")]
    NotHomogeneous { residual: f64 },

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("missing artifact: {0}")]
    MissingArtifact(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(line: usize, message: impl Into<String>) -> Self {
        Error::Config {
            line,
            message: message.into(),
        }
    }
}
