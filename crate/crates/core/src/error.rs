use thiserror::Error;

use crate::fits::FitResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input outside the mathematical domain of an operation.
    #[error("domain error: {what} = {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("non-unique steady state: {0}")]
    NonUniqueSteadyState(String),

    #[error("steady state failed the {check} check: {detail}")]
    SteadyStateCheck { check: &'static str, detail: String },

    #[error("integration too stiff for the requested grid: needs {required_steps} RK4 steps (budget {budget}); use a step of at most {suggested_step:.3e} s over a shorter span")]
    Stiffness {
        required_steps: u64,
        budget: u64,
        suggested_step: f64,
    },

    #[error("solver failed at probe detuning {delta_p_hz} Hz: {source}")]
    AtDetuning {
        delta_p_hz: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("no transparency feature in spectrum")]
    NoTransparencyFeature,

    #[error("zero baseline absorption at dip center")]
    ZeroBaseline,

    #[error("singular normal matrix: parameter `{param}` is not determined by the data")]
    SingularFit { param: &'static str },

    #[error("fit did not converge after {} iterations", .0.iterations)]
    NotConverged(Box<FitResult>),

    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    #[error("trace grids do not match the first trace at indices {0:?}")]
    GridMismatch(Vec<usize>),

    #[error("Beer-Lambert inversion undefined at sample {index} (x = {x}): {reason}")]
    BeerLambert {
        index: usize,
        x: f64,
        reason: &'static str,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64) -> Self {
        Error::Domain { what, value }
    }
}
