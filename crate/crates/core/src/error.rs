use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("a punctured plane needs at least two punctures, got {0}")]
    TooFewPunctures(usize),
    #[error("puncture {0} is listed more than once")]
    DuplicatePuncture(Complex64),
    #[error("radius {radius} is below the base radius r_0 = {base}")]
    RadiusBelowBase { radius: f64, base: f64 },
    #[error("point {0} is a puncture")]
    AtPuncture(Complex64),

    #[error("expression is singular at {0}")]
    AtSingularity(Complex64),
    #[error("value leaves the floating-point range at {0}")]
    RangeOverflow(Complex64),
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("pole center {0} is not a declared puncture")]
    UndeclaredPoleCenter(Complex64),
    #[error("cannot divide by `{0}`: divisors must be nonzero constants or (z - c) with c a puncture")]
    InvalidDivisor(String),

    #[error("quadrature did not converge within {max_nodes} nodes (estimate {estimate:e})")]
    NoConvergence { max_nodes: usize, estimate: f64 },
    #[error("contour passes through a zero even after radius perturbation (radius {radius})")]
    ContourThroughZero { radius: f64 },
    #[error("winding value {value} is not within 0.25 of an integer")]
    NonIntegerWinding { value: f64 },
    #[error("zeros near {location} cannot be separated above {separation:e}")]
    ClusterUnresolved { location: Complex64, separation: f64 },
    #[error("located {found} zeros but the argument principle counts {expected}")]
    IncompleteLocation { expected: i64, found: i64 },

    #[error("target vanishes identically on the curve")]
    TargetContainsCurve,
    #[error("frame matrix is singular (|det| = {0:e})")]
    SingularFrame(f64),
    #[error("{0} targets exceed the exhaustive subset limit of 12")]
    CombinatorialLimit(usize),
    #[error("targets are not in general position: {0}")]
    NotGeneralPosition(String),
    #[error("invalid index subset: {0}")]
    BadSubset(String),
    #[error("need more than {needed} targets, got {got}")]
    NotEnoughTargets { needed: usize, got: usize },
    #[error("construction needs {needed} components, budget is {budget}")]
    SizeBudgetExceeded { needed: usize, budget: usize },
    #[error("degree bound violated: need n > {bound}, got n = {n}")]
    DegreeBoundViolated { n: u32, bound: u32 },
    #[error("curves disagree at {location} on the preimage of the target (deviation {deviation:e})")]
    AgreementViolated { location: Complex64, deviation: f64 },
    #[error("polynomial is not homogeneous: {0}")]
    NotHomogeneous(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
