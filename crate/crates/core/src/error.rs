use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("pole at nonpositive integer (argument {0})")]
    PoleAtNonpositiveInteger(String),
    #[error("pole of the Riemann zeta function at s = 1")]
    PoleAtOne,
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("integral representation requires Im rho < -1/2 (got Im rho = {0})")]
    DomainViolation(f64),
    #[error("series only converges for Re s > 1 (got Re s = {0})")]
    ConvergenceDomain(f64),
    #[error("argument within exclusion radius of a pole: {0}")]
    NearPole(String),
    #[error("orbit ball overflow: more than {cap} elements at radius {radius}")]
    BallOverflow { cap: usize, radius: f64 },
    #[error("stabilizer search exhausted depth {0} without certifying closure")]
    GroupTooCoarse(usize),
    #[error("operation requires the modular group")]
    NonModularGroup,
    #[error("orbit ball enumeration could not be certified: {0}")]
    IncompleteEnumeration(String),
    #[error("invalid group: {0}")]
    InvalidGroup(String),
    #[error("point pair closer than 1e-8 (distance {0:e})")]
    SingularPair(f64),
    #[error("ball radius {radius} leaves tail estimate {tail:e} above tolerance {tol:e}")]
    InsufficientRadius { radius: f64, tail: f64, tol: f64 },
    #[error("coupling constant must be nonzero")]
    ZeroCoupling,
    #[error("reparametrization is singular: 1 - alpha c(t) = {0:e}")]
    SingularReparametrization(f64),
    #[error("A(t, conj t) has real part {0:e}; expected purely imaginary")]
    NonImaginaryA(f64),
    #[error("interval endpoint {0} lies on a pole")]
    PoleOnBoundary(f64),
    #[error("point outside the region where this representation is computable: {0}")]
    OutOfComputableRegion(String),
    #[error("Eisenstein series has a pole at s = 1")]
    PoleOfEisenstein,
    #[error("scattering coefficient vanishes at s = {0}")]
    ScatteringPole(String),
    #[error("relative zeta function vanishes at s = {0} (eigenvalue hit)")]
    ZeroOfRelativeZeta(String),
    #[error("two-height fit is ill-conditioned: |s - 1/2| = {0:e}")]
    IllConditionedFit(f64),
    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),
    #[error("no contraction: measured ratio {q_hat} at sigma {sigma}")]
    NoContraction { q_hat: f64, sigma: f64 },
    #[error("tuple count {0} exceeds the time-domain limit")]
    TupleExplosion(usize),
    #[error("interlacing bracket produced no root between poles {0} and {1}")]
    RootMissed(f64, f64),
    #[error("representation unavailable: {0}")]
    RepresentationUnavailable(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
