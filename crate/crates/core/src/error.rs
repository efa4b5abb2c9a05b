use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain where the model is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    #[error("grid too small: {axis} has {found} nodes, need at least {required}")]
    GridTooSmall {
        axis: &'static str,
        found: usize,
        required: usize,
    },

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("degenerate vacuum: zero vacuum energy density leaves the amplitude undetermined")]
    DegenerateVacuum,

    #[error("negative radicand ({0:e})")]
    NegativeRadicand(f64),

    #[error("no positive root: {0}")]
    NoPositiveRoot(String),

    /// A sub-solver failed inside a multi-stage pipeline.
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("step size underflow at t = {t:e} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("step budget of {0} exhausted")]
    MaxSteps(usize),

    #[error("unbound orbit: classical energy {energy:e} J is not negative")]
    Unbound { energy: f64 },

    #[error("too few periods: found {found} periastron passages, need {required}")]
    TooFewPeriods { found: usize, required: usize },

    #[error("orbit is circular: no apsides detected")]
    Circular,

    #[error("eccentricity {0} outside [0, 1)")]
    EccentricityOutOfRange(f64),

    #[error("singular denominator at r = {r:e} m")]
    SingularDenominator { r: f64 },

    #[error("negative v² ({v_sq:e}) at r = {r:e} m")]
    NegativeVSquared { r: f64, v_sq: f64 },

    #[error("flat curvature (k = 0) is not admitted here")]
    FlatCurvature,

    #[error("scale factor must be positive, got {0:e}")]
    NonPositiveScaleFactor(f64),

    #[error("expansion rate squared turned negative at t = {t:e} s (a = {a:e})")]
    NegativeRhs { t: f64, a: f64 },

    #[error("CFL violation: Courant number {courant} exceeds {limit}")]
    CflViolation { courant: f64, limit: f64 },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Wraps `self` with the name of the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
