use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate domain: l = {l}, u = {u}")]
    DegenerateDomain { l: f64, u: f64 },
    #[error("point {x} is outside the open domain ({l}, {u})")]
    OutOfDomain { x: f64, l: f64, u: f64 },
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("normal-equation matrix is singular (pivot {pivot:e} at column {column})")]
    SingularSystem { column: usize, pivot: f64 },
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("Newton step left the domain at coordinate {0}")]
    StepLeftDomain(usize),
    #[error("centering stalled: {0}")]
    CenteringStalled(String),
    #[error("feasibility repair requires I <= {limit:e}, got {value:e}")]
    RepairHypothesisViolated { value: f64, limit: f64 },
    #[error("infeasible start: {0}")]
    InfeasibleStart(String),
    #[error("iteration limit {0} reached")]
    IterationLimit(usize),
    #[error("network is disconnected")]
    Disconnected,
    #[error("malformed network: {0}")]
    MalformedNetwork(String),
    #[error("target flow {f} outside [0, {max}]")]
    BadTarget { f: f64, max: f64 },
    #[error("target flow is infeasible: residual slack {0:e}")]
    TargetInfeasible(f64),
    #[error("eps {eps:e} below the minimum {min:e}")]
    MinEps { eps: f64, min: f64 },
    #[error("rounding failed: {0}")]
    RoundingFailed(String),
}
